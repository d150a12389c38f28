"""
Poincaré ball model of curvature c.

All operations act on the last axis of numpy arrays, so a single point is an
``(n,)`` array and a batch is ``(..., n)``. Curvature 0 dispatches to the
Euclidean limit of every formula. Operations that return ball points clamp
the result to radius ``(1 - eps) / sqrt(c)``.
"""
import math
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from core.exceptions import DataValidationError, DimensionMismatchError, GeometryDomainError

BALL_EPS = 1e-5

ArrayLike = Union[np.ndarray, list, tuple]


class Curvature(BaseModel):
    model_config = ConfigDict(frozen=True)

    c: float

    @field_validator("c")
    @classmethod
    def _check(cls, value: float) -> float:
        return check_curvature(value)


class TangentVector(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coords: np.ndarray

    @field_validator("coords", mode="before")
    @classmethod
    def _finite(cls, value):
        return _as_vectors(value)


class BallPoint(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coords: np.ndarray
    c: float

    @field_validator("coords", mode="before")
    @classmethod
    def _finite(cls, value):
        return _as_vectors(value)

    @model_validator(mode="after")
    def _inside(self):
        check_curvature(self.c)
        check_in_ball(self.coords, self.c)
        return self

    @classmethod
    def from_tangent(cls, v: Union[TangentVector, ArrayLike], c: float) -> "BallPoint":
        return cls(coords=exp0(v, c), c=c)

    def to_tangent(self) -> TangentVector:
        return TangentVector(coords=log0(self.coords, self.c))

    def distance_to(self, other: "BallPoint") -> float:
        if other.c != self.c:
            raise DataValidationError(f"Points live on different balls (c={self.c} vs c={other.c}).")
        return float(distance(self.coords, other.coords, self.c))


def check_curvature(c: float) -> float:
    c = float(c)
    if not math.isfinite(c) or c < 0:
        raise DataValidationError(f"Curvature must be finite and non-negative, got {c}.")
    return c


def check_in_ball(x: np.ndarray, c: float) -> None:
    if c == 0:
        return
    sq = c * np.sum(x * x, axis=-1)
    if np.any(sq >= 1):
        raise GeometryDomainError(f"Point lies outside the ball of curvature {c} (c*|x|^2 = {np.max(sq):.6g}).")


def _as_vectors(x) -> np.ndarray:
    if isinstance(x, BallPoint):
        x = x.coords
    elif isinstance(x, TangentVector):
        x = x.coords
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        raise DimensionMismatchError("Expected a vector, got a scalar.")
    if not np.all(np.isfinite(arr)):
        raise DataValidationError("Coordinates must be finite.")
    return arr


def _same_dim(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[-1] != y.shape[-1]:
        raise DimensionMismatchError(f"Dimension {x.shape[-1]} does not match dimension {y.shape[-1]}.")


def _sq_norm(x: np.ndarray) -> np.ndarray:
    return np.sum(x * x, axis=-1, keepdims=True)


def _norm(x: np.ndarray) -> np.ndarray:
    return np.linalg.norm(x, axis=-1, keepdims=True)


def project_to_ball(x: ArrayLike, c: float, eps: float = BALL_EPS) -> np.ndarray:
    x = _as_vectors(x)
    c = check_curvature(c)
    if c == 0:
        return x
    max_norm = (1.0 - eps) / math.sqrt(c)
    norm = _norm(x)
    outside = c * norm ** 2 >= (1.0 - eps) ** 2
    if not np.any(outside):
        return x
    safe = np.where(outside, norm, 1.0)
    return np.where(outside, x * (max_norm / safe), x)


def conformal_factor(x: ArrayLike, c: float) -> Union[float, np.ndarray]:
    x = _as_vectors(x)
    c = check_curvature(c)
    check_in_ball(x, c)
    lam = 2.0 / (1.0 - c * np.sum(x * x, axis=-1))
    return float(lam) if np.ndim(lam) == 0 else lam


def _mobius_add_raw(x: np.ndarray, y: np.ndarray, c: float) -> np.ndarray:
    if c == 0:
        return x + y
    xy = np.sum(x * y, axis=-1, keepdims=True)
    x2 = _sq_norm(x)
    y2 = _sq_norm(y)
    num = (1 + 2 * c * xy + c * y2) * x + (1 - c * x2) * y
    den = 1 + 2 * c * xy + c ** 2 * x2 * y2
    if np.any(den <= 0):
        raise GeometryDomainError("Möbius addition denominator is not positive.")
    return num / den


def mobius_add(x: ArrayLike, y: ArrayLike, c: float, eps: float = BALL_EPS) -> np.ndarray:
    x = _as_vectors(x)
    y = _as_vectors(y)
    _same_dim(x, y)
    c = check_curvature(c)
    check_in_ball(x, c)
    check_in_ball(y, c)
    return project_to_ball(_mobius_add_raw(x, y, c), c, eps)


def distance(x: ArrayLike, y: ArrayLike, c: float) -> Union[float, np.ndarray]:
    x = _as_vectors(x)
    y = _as_vectors(y)
    _same_dim(x, y)
    c = check_curvature(c)
    if c == 0:
        d = 2.0 * np.linalg.norm(x - y, axis=-1)
    else:
        check_in_ball(x, c)
        check_in_ball(y, c)
        sqrt_c = math.sqrt(c)
        arg = sqrt_c * np.linalg.norm(_mobius_add_raw(-x, y, c), axis=-1)
        if np.any(arg >= 1):
            raise GeometryDomainError("Möbius difference reaches the ball boundary.")
        d = 2.0 / sqrt_c * np.arctanh(arg)
    return float(d) if np.ndim(d) == 0 else d


def pairwise_distance(points: ArrayLike, c: float) -> np.ndarray:
    points = _as_vectors(points)
    return distance(points[:, None, :], points[None, :, :], c)


def exp0(v: ArrayLike, c: float, eps: float = BALL_EPS) -> np.ndarray:
    v = _as_vectors(v)
    c = check_curvature(c)
    if c == 0:
        return v
    sqrt_c = math.sqrt(c)
    s = sqrt_c * _norm(v)
    # tanh(s)/s -> 1 as s -> 0
    coef = np.where(s > 0, np.tanh(s) / np.where(s > 0, s, 1.0), 1.0)
    return project_to_ball(coef * v, c, eps)


def log0(y: ArrayLike, c: float) -> np.ndarray:
    y = _as_vectors(y)
    c = check_curvature(c)
    if c == 0:
        return y
    sqrt_c = math.sqrt(c)
    s = sqrt_c * _norm(y)
    if np.any(s >= 1):
        raise GeometryDomainError(f"log0 undefined on or beyond the boundary (sqrt(c)*|y| = {np.max(s):.6g}).")
    coef = np.where(s > 0, np.arctanh(s) / np.where(s > 0, s, 1.0), 1.0)
    return coef * y
