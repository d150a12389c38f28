import hashlib
import socket
import threading
from datetime import datetime


def make_run_id() -> str:
    current_time = datetime.now().strftime('%Y%m%d%H%M%S%f')
    thread_id = threading.current_thread().ident
    hostname = socket.gethostname()
    return hashify(f"{current_time}-{thread_id}-{hostname}")


def hashify(value: str) -> str:
    # First 6 hex digits of the sha256
    return hashlib.sha256(value.encode()).hexdigest()[:6]
