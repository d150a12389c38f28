import math

import numpy as np
import pytest

from core.exceptions import DataValidationError, DimensionMismatchError, GeometryDomainError
from core.geometry import (BALL_EPS, BallPoint, Curvature, _mobius_add_raw, conformal_factor, distance,
                           TangentVector, exp0, log0, mobius_add, pairwise_distance, project_to_ball)

CURVATURES = [0.26, 0.33, 0.44, 1.0]
N_CHECKS = 10_000


def random_ball_points(rng, c, n=N_CHECKS, dim=4, max_radius=0.7):
    directions = rng.normal(size=(n, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = rng.uniform(0, max_radius, size=(n, 1)) / math.sqrt(c)
    return directions * radii


@pytest.mark.parametrize("c", CURVATURES)
def test_mobius_identity_and_left_cancellation(c):
    rng = np.random.default_rng(1)
    x = random_ball_points(rng, c)
    y = random_ball_points(rng, c)
    zero = np.zeros_like(x)
    assert np.max(np.abs(mobius_add(zero, x, c) - x)) <= 1e-12
    assert np.max(np.abs(mobius_add(x, zero, c) - x)) <= 1e-12
    assert np.max(np.abs(_mobius_add_raw(-x, x, c))) <= 1e-12
    assert np.max(np.abs(mobius_add(-x, mobius_add(x, y, c), c) - y)) <= 1e-12


@pytest.mark.parametrize("c", CURVATURES)
def test_exp_log_roundtrip(c):
    rng = np.random.default_rng(2)
    v = rng.normal(size=(N_CHECKS, 4))
    v *= rng.uniform(0, 3, size=(N_CHECKS, 1)) / np.linalg.norm(v, axis=1, keepdims=True) / math.sqrt(c)
    assert np.max(np.abs(log0(exp0(v, c), c) - v)) <= 1e-9


@pytest.mark.parametrize("c", CURVATURES)
def test_radial_isometry(c):
    rng = np.random.default_rng(3)
    v = rng.normal(size=(N_CHECKS, 4))
    v *= rng.uniform(0, 3, size=(N_CHECKS, 1)) / np.linalg.norm(v, axis=1, keepdims=True) / math.sqrt(c)
    d = distance(np.zeros_like(v), exp0(v, c), c)
    assert np.max(np.abs(d - 2 * np.linalg.norm(v, axis=1))) <= 1e-9


def test_small_curvature_approaches_euclidean():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(N_CHECKS, 4))
    y = rng.normal(size=(N_CHECKS, 4))
    c = 1e-8
    euclid = 2 * np.linalg.norm(x - y, axis=1)
    assert np.max(np.abs(distance(x, y, c) - euclid) / euclid) <= 1e-4
    assert np.max(np.abs(mobius_add(x, y, c) - (x + y)) / np.linalg.norm(x + y, axis=1, keepdims=True)) <= 1e-4


def test_zero_curvature_dispatches_to_euclidean():
    x, y = np.array([1.0, 2.0]), np.array([4.0, 6.0])
    assert distance(x, y, 0) == pytest.approx(10.0)
    assert np.array_equal(mobius_add(x, y, 0), x + y)
    assert np.array_equal(exp0(x, 0), x)
    assert conformal_factor(x, 0) == 2.0


def test_conformal_factor_at_origin_is_two():
    assert conformal_factor([0.0, 0.0], 1.0) == 2.0
    assert conformal_factor([0.5, 0.0], 1.0) == pytest.approx(2 / 0.75)


def test_distance_is_symmetric_and_zero_on_diagonal():
    rng = np.random.default_rng(5)
    points = random_ball_points(rng, 0.5, n=20)
    d = pairwise_distance(points, 0.5)
    assert np.allclose(d, d.T, atol=1e-12)
    assert np.allclose(np.diag(d), 0.0)


def test_project_to_ball_clamps_outside_points():
    c = 4.0
    y = project_to_ball([3.0, 4.0], c)
    assert np.linalg.norm(y) == pytest.approx((1 - BALL_EPS) / 2)
    inside = np.array([0.1, 0.1])
    assert np.array_equal(project_to_ball(inside, c), inside)


def test_exp0_result_stays_inside_ball_for_huge_vectors():
    y = exp0([1e6, 0.0], 1.0)
    assert np.sum(y * y) < 1


def test_points_outside_ball_are_rejected():
    with pytest.raises(GeometryDomainError):
        BallPoint(coords=[1.0, 0.0], c=1.0)
    with pytest.raises(GeometryDomainError):
        log0([2.0, 0.0], 1.0)
    with pytest.raises(GeometryDomainError):
        distance([0.0, 0.0], [0.0, 1.5], 1.0)


def test_input_validation():
    with pytest.raises(DataValidationError):
        Curvature(c=-1.0)
    with pytest.raises(DataValidationError):
        exp0([float("nan"), 0.0], 1.0)
    with pytest.raises(DimensionMismatchError):
        mobius_add([0.1, 0.1], [0.1, 0.1, 0.1], 1.0)


def test_ball_point_helpers():
    a = BallPoint.from_tangent([0.5, 0.0], 1.0)
    b = BallPoint(coords=[0.0, 0.0], c=1.0)
    assert a.distance_to(b) == pytest.approx(1.0)
    with pytest.raises(DataValidationError):
        a.distance_to(BallPoint(coords=[0.0, 0.0], c=0.5))
    tangent = a.to_tangent()
    assert isinstance(tangent, TangentVector)
    assert np.allclose(tangent.coords, [0.5, 0.0])
    assert np.allclose(BallPoint.from_tangent(tangent, 1.0).coords, a.coords)
