import numpy as np
import pytest

from ifsdrift import (
    AffineMap,
    GeneralMap,
    InvalidInputError,
    MapFamily,
    absorbing_radius,
    lipschitz_constant,
)
from ifsdrift.maps import apply

from oracles import operator_norm_2x2, operator_norm_power


def test_lipschitz_identity():
    f = AffineMap(np.eye(2), np.zeros(2))
    assert lipschitz_constant(f) == 1.0


def test_lipschitz_diagonal_scaling():
    f = AffineMap([[0.8, 0.0], [0.0, 0.8]], [0.1, 0.04])
    assert abs(f.lipschitz - 0.8) < 1e-12
    assert abs(f.lipschitz - operator_norm_2x2(f.matrix)) < 1e-12


def test_lipschitz_scaled_orthogonal():
    f = AffineMap([[0.355, 0.355], [0.355, -0.355]], [0.266, 0.078])
    expected = 0.355 * np.sqrt(2.0)
    assert abs(f.lipschitz - expected) < 1e-12
    assert abs(f.lipschitz - operator_norm_2x2(f.matrix)) < 1e-12


def test_lipschitz_matches_oracles_on_random_matrices():
    rng = np.random.default_rng(7)
    for _ in range(50):
        d = int(rng.integers(1, 5))
        m = rng.normal(size=(d, d))
        f = AffineMap(m, np.zeros(d))
        assert abs(f.lipschitz - operator_norm_power(m)) < 1e-9
        if d == 2:
            assert abs(f.lipschitz - operator_norm_2x2(m)) < 1e-12


def test_lipschitz_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        AffineMap([[np.nan, 0.0], [0.0, 1.0]], [0.0, 0.0])


def test_apply_offset_at_origin():
    f = AffineMap([[0.8, 0.0], [0.0, 0.8]], [0.1, 0.04])
    np.testing.assert_allclose(apply(f, [0.0, 0.0]), [0.1, 0.04])


def test_apply_zero_map():
    f = AffineMap(np.zeros((3, 3)), np.zeros(3))
    np.testing.assert_array_equal(apply(f, [5.0, -2.0, 9.0]), np.zeros(3))


def test_apply_maple_f3():
    f = AffineMap([[0.355, 0.355], [0.355, -0.355]], [0.266, 0.078])
    np.testing.assert_allclose(apply(f, [1.0, 0.0]), [0.621, 0.433])


def test_apply_dimension_mismatch():
    f = AffineMap(np.eye(2), np.zeros(2))
    with pytest.raises(InvalidInputError):
        apply(f, [1.0, 2.0, 3.0])


def test_lipschitz_contraction_property():
    rng = np.random.default_rng(11)
    for _ in range(40):
        d = int(rng.integers(1, 4))
        f = AffineMap(rng.normal(size=(d, d)), rng.normal(size=d))
        for _ in range(5):
            x = rng.normal(size=d) * 3
            y = rng.normal(size=d) * 3
            lhs = np.linalg.norm(f.apply(x) - f.apply(y))
            rhs = f.lipschitz * np.linalg.norm(x - y)
            assert lhs <= rhs * (1 + 1e-9) + 1e-12


def test_absorbing_radius_zero_map():
    fam = MapFamily([AffineMap(np.zeros((2, 2)), np.zeros(2))])
    assert absorbing_radius(fam) == 0.0


def test_absorbing_radius_maple(maple_family):
    expected = np.linalg.norm([0.378, 0.434]) / (1.0 - 0.8)
    r = absorbing_radius(maple_family)
    assert abs(r - expected) < 1e-12


def test_absorbing_radius_expansive_family():
    fam = MapFamily([
        AffineMap(0.5 * np.eye(2), np.zeros(2)),
        AffineMap(1.5 * np.eye(2), np.ones(2)),
    ])
    assert absorbing_radius(fam) is None


def test_absorbing_ball_is_invariant(maple_family):
    rng = np.random.default_rng(3)
    radius = absorbing_radius(maple_family)
    pts = rng.normal(size=(200, 2))
    pts *= (radius * rng.random((200, 1))) / np.linalg.norm(
        pts, axis=1, keepdims=True)
    for f in maple_family:
        images = f.apply_many(pts)
        assert np.all(np.linalg.norm(images, axis=1) <= radius + 1e-9)


def test_family_validates_dimensions():
    with pytest.raises(InvalidInputError):
        MapFamily([
            AffineMap(np.eye(2), np.zeros(2)),
            AffineMap(np.eye(3), np.zeros(3)),
        ])
    with pytest.raises(InvalidInputError):
        MapFamily([])


def test_family_one_based_indexing(maple_family):
    assert maple_family.map(1).lipschitz == pytest.approx(0.8)
    assert maple_family.map(4).offset[0] == pytest.approx(0.378)
    with pytest.raises(InvalidInputError):
        maple_family.map(0)
    with pytest.raises(InvalidInputError):
        maple_family.map(5)


def test_general_map_interface():
    f = GeneralMap(lambda p: np.tanh(p) * 0.5, lipschitz=0.5, dimension=2)
    fam = MapFamily([f])
    assert not fam.is_affine
    assert fam.lipschitz_constants[0] == 0.5
    out = f.apply([1.0, -1.0])
    np.testing.assert_allclose(out, 0.5 * np.tanh([1.0, -1.0]))


def test_maps_are_immutable(maple_family):
    f = maple_family.map(1)
    with pytest.raises(AttributeError):
        f.lipschitz = 2.0
    with pytest.raises(ValueError):
        f.matrix[0, 0] = 7.0
