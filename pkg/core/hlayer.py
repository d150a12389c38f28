"""
Poincaré linear layer.

For an input point x the layer evaluates one hyperbolic multinomial logistic
regression logit per output coordinate,

    v_k(x) = (2/sqrt(c)) |z_k| asinh( lam_x <sqrt(c) x, z_k/|z_k|> cosh(2 sqrt(c) r_k)
                                     - (lam_x - 1) sinh(2 sqrt(c) r_k) ),

lifts them to w_k = sinh(sqrt(c) v_k) / sqrt(c) and returns

    y = w / (1 + sqrt(1 + c |w|^2)).

``paper_literal=True`` swaps the denominator for 1 + sqrt(1 + c |w|); that
variant does not keep y inside the ball by construction and is clamped like
every other ball-valued result.

At c = 0 the layer collapses to its Euclidean limit
v_k = 4 (<x, z_k> - |z_k| r_k), w = v, y = w / 2, which is the
parameter-matched Euclidean counterpart used as a training baseline.
"""
import logging
import math
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from core.exceptions import (DataValidationError, DimensionMismatchError, DivergenceError, HyperHopException,
                             LayerOverflowError, ZeroWeightRowError)
from core.geometry import BALL_EPS, check_curvature, check_in_ball, exp0, log0, project_to_ball

logger = logging.getLogger(__name__)

SINH_SAFE = 350.0
MIN_CURVATURE = 1e-4
PARAMS_FORMAT = "poincare-linear/1"


class PoincareLinearParams(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    Z: np.ndarray
    r: np.ndarray
    c: float

    @field_validator("Z", "r", mode="before")
    @classmethod
    def _as_array(cls, value):
        arr = np.array(value, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise DataValidationError("Layer parameters must be finite.")
        return arr

    @field_validator("c")
    @classmethod
    def _curvature(cls, value):
        return check_curvature(value)

    @model_validator(mode="after")
    def _shapes(self):
        if self.Z.ndim != 2 or self.Z.shape[0] < 1 or self.Z.shape[1] < 1:
            raise DimensionMismatchError(f"Z must be an m x n matrix with m, n >= 1, got shape {self.Z.shape}.")
        if self.r.shape != (self.Z.shape[0],):
            raise DimensionMismatchError(f"r must have length {self.Z.shape[0]}, got shape {self.r.shape}.")
        zero_rows = np.flatnonzero(np.linalg.norm(self.Z, axis=1) == 0)
        if zero_rows.size:
            raise ZeroWeightRowError(f"Weight rows {zero_rows.tolist()} have zero norm.")
        return self

    @property
    def m(self) -> int:
        return self.Z.shape[0]

    @property
    def n(self) -> int:
        return self.Z.shape[1]

    def to_record(self) -> dict:
        return {
            "format": PARAMS_FORMAT,
            "m": self.m,
            "n": self.n,
            "c": self.c,
            "Z": self.Z.reshape(-1).tolist(),
            "r": self.r.tolist(),
        }

    @classmethod
    def from_record(cls, record: dict) -> "PoincareLinearParams":
        if record.get("format") != PARAMS_FORMAT:
            raise DataValidationError(f"Unknown parameter format {record.get('format')!r}.")
        m, n = int(record["m"]), int(record["n"])
        flat = np.asarray(record["Z"], dtype=float)
        if flat.size != m * n:
            raise DimensionMismatchError(f"Z holds {flat.size} values, expected {m} x {n}.")
        return cls(Z=flat.reshape(m, n), r=record["r"], c=record["c"])


class LayerGradients(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    d_x: np.ndarray
    d_Z: np.ndarray
    d_r: np.ndarray
    # None at c = 0
    d_c: Optional[float] = None


class _Logits(NamedTuple):
    X: np.ndarray
    norms: np.ndarray
    U: np.ndarray
    lam: np.ndarray
    a: np.ndarray
    C: np.ndarray
    S: np.ndarray
    arg: np.ndarray
    v: np.ndarray


class _Output(NamedTuple):
    w: np.ndarray
    q: np.ndarray
    D: np.ndarray
    y_raw: np.ndarray
    y: np.ndarray
    clamped: np.ndarray


def init_params(m: int, n: int, c: float, rng: np.random.Generator) -> PoincareLinearParams:
    return PoincareLinearParams(Z=rng.normal(0.0, 1.0 / math.sqrt(n), size=(m, n)), r=np.zeros(m), c=c)


def parameter_count(params: PoincareLinearParams) -> int:
    return params.Z.size + params.r.size


def _points(x, params: PoincareLinearParams) -> np.ndarray:
    X = np.atleast_2d(np.asarray(getattr(x, "coords", x), dtype=float))
    if X.shape[-1] != params.n:
        raise DimensionMismatchError(f"Input dimension {X.shape[-1]} does not match layer input dimension {params.n}.")
    if not np.all(np.isfinite(X)):
        raise DataValidationError("Input coordinates must be finite.")
    check_in_ball(X, params.c)
    return X


def _logits(X: np.ndarray, Z: np.ndarray, r: np.ndarray, c: float) -> _Logits:
    norms = np.linalg.norm(Z, axis=1)
    U = Z / norms[:, None]
    x_u = X @ U.T
    if c == 0:
        v = 4.0 * (x_u * norms - norms * r)
        ones = np.ones(len(X))
        return _Logits(X, norms, U, 2.0 * ones, x_u, np.ones_like(r), np.zeros_like(r), x_u, v)
    sqrt_c = math.sqrt(c)
    lam = 2.0 / (1.0 - c * np.sum(X * X, axis=1))
    a = sqrt_c * x_u
    C = np.cosh(2 * sqrt_c * r)
    S = np.sinh(2 * sqrt_c * r)
    arg = lam[:, None] * a * C - (lam[:, None] - 1) * S
    v = 2.0 / sqrt_c * norms * np.arcsinh(arg)
    return _Logits(X, norms, U, lam, a, C, S, arg, v)


def _logits_backward(t: _Logits, r: np.ndarray, c: float, dv: np.ndarray):
    """Pull dL/dv back to (dL/dX, dL/dZ, dL/dr, dL/d sqrt(c)); the last is 0 at c = 0."""
    if c == 0:
        d_X = 4.0 * (dv * t.norms) @ t.U
        d_Z = 4.0 * (dv.T @ t.X - (dv.sum(axis=0) * r)[:, None] * t.U)
        d_r = -4.0 * dv.sum(axis=0) * t.norms
        return d_X, d_Z, d_r, 0.0

    sqrt_c = math.sqrt(c)
    lam = t.lam[:, None]
    G = dv * (2.0 / sqrt_c) * t.norms / np.sqrt(1.0 + t.arg ** 2)

    d_r = np.sum(G * (lam * t.a * 2 * sqrt_c * t.S - (lam - 1) * 2 * sqrt_c * t.C), axis=0)

    radial = np.sum(G * (t.a * t.C - t.S), axis=1) * t.lam ** 2 * c
    d_X = radial[:, None] * t.X + (G * lam * sqrt_c * t.C) @ t.U

    # v_k = |z_k| * f(u_k): scale part plus the tangential part of the direction
    scale_part = (np.sum(dv * t.v, axis=0) / t.norms)[:, None] * t.U
    H = G * lam * t.C * sqrt_c / t.norms
    direction_part = H.T @ t.X - np.sum(H * (t.a / sqrt_c), axis=0)[:, None] * t.U

    d_lam = (t.lam ** 2 * sqrt_c * np.sum(t.X * t.X, axis=1))[:, None]
    d_arg = (d_lam * (t.a * t.C - t.S) + lam * (t.a / sqrt_c * t.C + t.a * 2 * r * t.S)
             - (lam - 1) * 2 * r * t.C)
    d_s = float(np.sum(dv * (-t.v / sqrt_c)) + np.sum(G * d_arg))
    return d_X, scale_part + direction_part, d_r, d_s


def _output(v: np.ndarray, c: float, paper_literal: bool, eps: float) -> _Output:
    if c == 0:
        w = v.copy()
    else:
        sqrt_c = math.sqrt(c)
        sv = sqrt_c * v
        too_big = np.abs(sv) > SINH_SAFE
        if np.any(too_big):
            raise LayerOverflowError(f"|sqrt(c) * v_k| reaches {np.max(np.abs(sv)):.6g}, "
                                     f"beyond the sinh-safe bound {SINH_SAFE}.")
        w = np.sinh(sv) / sqrt_c
    w_norm = np.linalg.norm(w, axis=1, keepdims=True)
    q = np.sqrt(1.0 + c * w_norm) if paper_literal else np.sqrt(1.0 + c * w_norm ** 2)
    D = 1.0 + q
    y_raw = w / D
    y = project_to_ball(y_raw, c, eps)
    clamped = np.any(y != y_raw, axis=1)
    return _Output(w, q, D, y_raw, y, clamped)


def _output_backward(o: _Output, v: np.ndarray, c: float, paper_literal: bool, g: np.ndarray,
                     eps: float):
    """Pull dL/dy back to dL/dv, plus the explicit dL/d sqrt(c) of the output map (0 at c = 0)."""
    g = g.copy()
    d_s = 0.0
    if np.any(o.clamped):
        rows = o.clamped
        # the clamp radius (1 - eps) / sqrt(c) scales y by 1 / sqrt(c)
        d_s -= float(np.sum(g[rows] * o.y[rows])) / math.sqrt(c)
        rho = np.linalg.norm(o.y_raw[rows], axis=1, keepdims=True)
        y_hat = o.y_raw[rows] / rho
        scale = (1.0 - eps) / math.sqrt(c) / rho
        g[rows] = scale * (g[rows] - y_hat * np.sum(y_hat * g[rows], axis=1, keepdims=True))

    w_norm = np.linalg.norm(o.w, axis=1, keepdims=True)
    if paper_literal:
        safe = np.where(w_norm > 0, w_norm, 1.0)
        dD_dw = np.where(w_norm > 0, c / (2.0 * o.q) * o.w / safe, 0.0)
    else:
        dD_dw = c * o.w / o.q
    gw = np.sum(g * o.w, axis=1, keepdims=True)
    d_w = g / o.D - gw / o.D ** 2 * dD_dw
    if c == 0:
        return d_w, 0.0
    sqrt_c = math.sqrt(c)
    dw_ds = (v * np.cosh(sqrt_c * v) - o.w) / sqrt_c
    dq_ds = sqrt_c * (w_norm if paper_literal else w_norm ** 2) / o.q
    d_s += float(np.sum(d_w * dw_ds) - np.sum(gw / o.D ** 2 * dq_ds))
    return d_w * np.cosh(sqrt_c * v), d_s


def mlr_logit(x, z_k, r_k: float, c: float) -> float:
    c = check_curvature(c)
    x = np.asarray(getattr(x, "coords", x), dtype=float)
    z_k = np.asarray(z_k, dtype=float)
    if x.shape != z_k.shape:
        raise DimensionMismatchError(f"x has shape {x.shape} but z_k has shape {z_k.shape}.")
    if np.linalg.norm(z_k) == 0:
        raise ZeroWeightRowError()
    check_in_ball(x, c)
    t = _logits(x[None, :], z_k[None, :], np.array([float(r_k)]), c)
    return float(t.v[0, 0])


def logits(x, params: PoincareLinearParams) -> np.ndarray:
    X = _points(x, params)
    v = _logits(X, params.Z, params.r, params.c).v
    return v[0] if np.ndim(getattr(x, "coords", x)) == 1 else v


def forward(x, params: PoincareLinearParams, paper_literal: bool = False, eps: float = BALL_EPS) -> np.ndarray:
    X = _points(x, params)
    t = _logits(X, params.Z, params.r, params.c)
    y = _output(t.v, params.c, paper_literal, eps).y
    return y[0] if np.ndim(getattr(x, "coords", x)) == 1 else y


def backward(x, params: PoincareLinearParams, upstream, paper_literal: bool = False,
             eps: float = BALL_EPS) -> LayerGradients:
    X = _points(x, params)
    if X.shape[0] != 1:
        raise DimensionMismatchError("backward takes a single input point.")
    g = np.asarray(upstream, dtype=float).reshape(1, -1)
    if g.shape[1] != params.m:
        raise DimensionMismatchError(f"Upstream gradient has length {g.shape[1]}, expected {params.m}.")
    t = _logits(X, params.Z, params.r, params.c)
    o = _output(t.v, params.c, paper_literal, eps)
    dv, ds_output = _output_backward(o, t.v, params.c, paper_literal, g, eps)
    d_X, d_Z, d_r, ds_logits = _logits_backward(t, params.r, params.c, dv)
    d_c = (ds_output + ds_logits) / (2.0 * math.sqrt(params.c)) if params.c > 0 else None
    return LayerGradients(d_x=d_X[0], d_Z=d_Z, d_r=d_r, d_c=d_c)


def sequence_transform(X, params: PoincareLinearParams, eps: float = BALL_EPS,
                       paper_literal: bool = False) -> np.ndarray:
    """Euclidean in, Euclidean out: exp0 onto the ball, the layer, log0 back."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return np.zeros((0, params.m))
    if X.ndim != 2:
        raise DimensionMismatchError(f"Expected a sequence of vectors, got shape {X.shape}.")
    out = np.empty((X.shape[0], params.m))
    for position, vector in enumerate(X):
        try:
            ball = exp0(vector, params.c, eps)
            out[position] = log0(forward(ball, params, paper_literal, eps), params.c)
        except HyperHopException as exc:
            raise type(exc)(f"position {position}: {exc.message}") from exc
    return out


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-8)
    return float(np.linalg.norm(analytic - numeric) / scale)


def numeric_gradients(x, params: PoincareLinearParams, upstream, h: float = 1e-5,
                      paper_literal: bool = False) -> LayerGradients:
    """Central finite differences of <upstream, forward(x)>."""
    x = np.asarray(getattr(x, "coords", x), dtype=float)
    g = np.asarray(upstream, dtype=float)

    def objective(point, Z, r, c=params.c):
        p = PoincareLinearParams(Z=Z, r=r, c=c)
        return float(np.dot(g, forward(point, p, paper_literal)))

    def central(array, evaluate):
        grad = np.zeros_like(array)
        work = array.copy()
        for i in range(work.size):
            original = work.flat[i]
            work.flat[i] = original + h
            plus = evaluate(work)
            work.flat[i] = original - h
            minus = evaluate(work)
            work.flat[i] = original
            grad.flat[i] = (plus - minus) / (2 * h)
        return grad

    d_c = None
    # c +- h must keep x inside the ball
    if params.c > h and (params.c + h) * float(np.sum(x * x)) < 1.0:
        d_c = float(central(np.array([params.c]), lambda c: objective(x, params.Z, params.r, c[0]))[0])
    return LayerGradients(
        d_x=central(x, lambda p: objective(p, params.Z, params.r)),
        d_Z=central(params.Z, lambda Z: objective(x, Z, params.r)),
        d_r=central(params.r, lambda r: objective(x, params.Z, r)),
        d_c=d_c,
    )


def gradcheck(x, params: PoincareLinearParams, upstream, h: float = 1e-5, paper_literal: bool = False) -> dict:
    analytic = backward(x, params, upstream, paper_literal)
    numeric = numeric_gradients(x, params, upstream, h, paper_literal)
    errors = {
        "d_x": _relative_error(analytic.d_x, numeric.d_x),
        "d_Z": _relative_error(analytic.d_Z, numeric.d_Z),
        "d_r": _relative_error(analytic.d_r, numeric.d_r),
    }
    if analytic.d_c is not None and numeric.d_c is not None:
        errors["d_c"] = _relative_error(np.atleast_1d(analytic.d_c), np.atleast_1d(numeric.d_c))
    errors["max"] = max(errors.values())
    return errors


# Toy training harness

class ToyDataset(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vectors: np.ndarray
    labels: np.ndarray

    @field_validator("vectors", mode="before")
    @classmethod
    def _vectors(cls, value):
        arr = np.array(value, dtype=float)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise DataValidationError("Dataset must be a nonempty N x n matrix of tangent vectors.")
        return arr

    @field_validator("labels", mode="before")
    @classmethod
    def _labels(cls, value):
        return np.array(value, dtype=int)

    @model_validator(mode="after")
    def _aligned(self):
        if self.labels.shape != (self.vectors.shape[0],):
            raise DimensionMismatchError("One label per vector is required.")
        return self


class TrainResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    params: PoincareLinearParams
    losses: List[float]
    final_loss: float
    accuracy: float
    curvatures: List[float] = []


class SweepPoint(BaseModel):
    c: float
    final_loss: float
    accuracy: float
    initial_loss: Optional[float] = None
    learned_c: Optional[float] = None


class ToyGradients(NamedTuple):
    loss: float
    d_Z: np.ndarray
    d_r: np.ndarray
    # None at c = 0
    d_c: Optional[float]


def _cross_entropy(v: np.ndarray, targets: np.ndarray):
    shifted = v - v.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_p = shifted - log_z[:, None]
    n = len(targets)
    loss = -float(np.mean(log_p[np.arange(n), targets]))
    probs = np.exp(log_p)
    probs[np.arange(n), targets] -= 1.0
    return loss, probs / n


def _accuracy(v: np.ndarray, targets: np.ndarray) -> float:
    return float(np.mean(np.argmax(v, axis=1) == targets))


def _check_dataset(dataset: ToyDataset, params: PoincareLinearParams) -> np.ndarray:
    targets = dataset.labels - 1
    if np.any(targets < 0) or np.any(targets >= params.m):
        raise DataValidationError(f"Labels must lie in 1..{params.m}.")
    if dataset.vectors.shape[1] != params.n:
        raise DimensionMismatchError(f"Dataset dimension {dataset.vectors.shape[1]} does not match layer input {params.n}.")
    return targets


def _exp0_ds(V: np.ndarray, X: np.ndarray, sqrt_c: float, eps: float = BALL_EPS) -> np.ndarray:
    """d exp0(V) / d sqrt(c), where X = exp0(V)."""
    k = sqrt_c * np.linalg.norm(V, axis=1, keepdims=True)
    safe = np.where(k > 0, k, 1.0)
    inside = np.where(k > 0, V * (k / np.cosh(safe) ** 2 - np.tanh(safe)) / (sqrt_c * safe), 0.0)
    # clamped rows sit at radius (1 - eps) / sqrt(c)
    clamped = np.tanh(k) >= 1.0 - eps
    return np.where(clamped, -X / sqrt_c, inside)


def toy_objective(dataset: ToyDataset, params: PoincareLinearParams) -> ToyGradients:
    """Mean cross-entropy of softmax(logits(exp0(vectors))) and its parameter gradients.

    The curvature gradient also runs through the exp0 projection of the inputs.
    """
    targets = _check_dataset(dataset, params)
    c = params.c
    X = exp0(dataset.vectors, c)
    t = _logits(X, params.Z, params.r, c)
    loss, dv = _cross_entropy(t.v, targets)
    d_X, d_Z, d_r, d_s = _logits_backward(t, params.r, c, dv)
    if c == 0:
        return ToyGradients(loss, d_Z, d_r, None)
    sqrt_c = math.sqrt(c)
    d_s += float(np.sum(d_X * _exp0_ds(dataset.vectors, X, sqrt_c)))
    return ToyGradients(loss, d_Z, d_r, d_s / (2.0 * sqrt_c))


def train_toy(dataset: ToyDataset, params: PoincareLinearParams, steps: int, learning_rate: float,
              learn_curvature: bool = False, min_curvature: float = MIN_CURVATURE) -> TrainResult:
    """Gradient descent on softmax cross-entropy over the layer's logits.

    With ``learn_curvature`` c is a trainable parameter starting from ``params.c``
    and kept at or above ``min_curvature``.
    """
    if steps < 0:
        raise DataValidationError("steps must be non-negative.")
    if learn_curvature and params.c <= 0:
        raise DataValidationError("A learnable curvature needs a positive starting value.")
    _check_dataset(dataset, params)

    current = params
    losses: List[float] = []
    curvatures: List[float] = []
    for step in range(steps):
        grads = toy_objective(dataset, current)
        if not math.isfinite(grads.loss):
            raise DivergenceError(f"Loss became non-finite at step {step}.")
        losses.append(grads.loss)
        c = current.c
        if learn_curvature:
            c = max(min_curvature, c - learning_rate * grads.d_c)
            curvatures.append(c)
        current = PoincareLinearParams(Z=current.Z - learning_rate * grads.d_Z,
                                       r=current.r - learning_rate * grads.d_r, c=c)

    final_loss = toy_objective(dataset, current).loss
    if not math.isfinite(final_loss):
        raise DivergenceError("Loss became non-finite after the last step.")
    t = _logits(exp0(dataset.vectors, current.c), current.Z, current.r, current.c)
    accuracy = _accuracy(t.v, dataset.labels - 1)
    logger.debug(f"train_toy c={current.c} steps={steps} loss={final_loss:.6g} accuracy={accuracy:.4f}")
    return TrainResult(params=current, losses=losses, final_loss=final_loss, accuracy=accuracy,
                       curvatures=curvatures)


def make_two_branch_dataset(n_samples: int = 200, dim: int = 2, seed: int = 0, margin: float = 0.2,
                            depth: float = 1.5, spread: float = 0.5) -> ToyDataset:
    """Two branches leaving the root in opposite directions along the first axis.

    Class 1 lives at positive first coordinate, class 2 at negative; every point
    keeps at least ``margin`` from the separating hyperplane.
    """
    if dim < 1:
        raise DataValidationError("dim must be at least 1.")
    rng = np.random.default_rng(seed)
    labels = np.where(np.arange(n_samples) % 2 == 0, 1, 2)
    along = rng.uniform(margin, depth, size=n_samples)
    vectors = np.zeros((n_samples, dim))
    vectors[:, 0] = np.where(labels == 1, along, -along)
    if dim > 1:
        vectors[:, 1:] = rng.normal(0.0, spread, size=(n_samples, dim - 1)) * along[:, None]
    return ToyDataset(vectors=vectors, labels=labels)


def curvature_sweep(dataset: ToyDataset, curvatures: Sequence[float], steps: int = 500,
                    learning_rate: float = 0.5, seed: int = 0, m: int = 2,
                    learn_curvature: bool = False) -> List[SweepPoint]:
    """Train a fresh layer per curvature; c = 0 is the Euclidean counterpart.

    With ``learn_curvature`` every positive curvature is only the starting value.
    """
    points = []
    n = dataset.vectors.shape[1]
    for c in curvatures:
        params = init_params(m, n, c, np.random.default_rng(seed))
        learn = learn_curvature and c > 0
        result = train_toy(dataset, params, steps, learning_rate, learn_curvature=learn)
        initial = result.losses[0] if result.losses else result.final_loss
        points.append(SweepPoint(c=c, final_loss=result.final_loss, accuracy=result.accuracy,
                                 initial_loss=initial, learned_c=result.params.c if learn else None))
        logger.info(f"curvature sweep c={c}: loss {initial:.4f} -> {result.final_loss:.4f}, "
                    f"accuracy {result.accuracy:.3f}, final c {result.params.c:.4g}")
    return points
