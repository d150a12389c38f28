import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()

ENV_PREFIX = "HYPERHOP_"


def _env(name: str, default: Optional[str] = None) -> Optional[str]:
    return os.getenv(ENV_PREFIX + name, default)


def _env_bool(name: str, default: bool = False) -> bool:
    value = _env(name)
    if value is None:
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


class Settings(BaseModel):
    seed: int = 42
    sample_size: int = Field(default=1500, ge=1)
    repeats: int = Field(default=5, ge=1)
    curvature: Optional[float] = None
    hops: int = Field(default=2, ge=1)
    metric: str = "graph"
    strict: bool = False
    log_level: str = "INFO"
    separator: str = "; "
    bruteforce_cap: int = 64
    workers: int = 0

    @classmethod
    def from_env(cls) -> "Settings":
        curvature = _env("CURVATURE")
        return cls(
            seed=int(_env("SEED", "42")),
            sample_size=int(_env("SAMPLE_SIZE", "1500")),
            repeats=int(_env("REPEATS", "5")),
            curvature=float(curvature) if curvature else None,
            hops=int(_env("HOPS", "2")),
            metric=_env("METRIC", "graph"),
            strict=_env_bool("STRICT"),
            log_level=_env("LOG_LEVEL", "INFO"),
            separator=_env("SEPARATOR", "; "),
            bruteforce_cap=int(_env("BFS_CAP", "64")),
            workers=int(_env("WORKERS", "0")),
        )


settings = Settings.from_env()


def resolve_workers(workers: Optional[int] = None) -> int:
    workers = settings.workers if workers is None else workers
    if workers <= 0:
        return os.cpu_count() or 1
    return workers
