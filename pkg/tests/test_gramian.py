import numpy as np
import pytest
from hypothesis import given, strategies as st

from ggd.gramian import gramian_from_distances
from ggd.patchgraph import GeodesicMatrix


def random_distances(rng, n):
    x = rng.standard_normal((n, 3))
    d = np.linalg.norm(x[:, None] - x[None], axis=2)
    return 0.5 * (d + d.T)


def test_zero_matrix():
    assert np.array_equal(gramian_from_distances(np.zeros((2, 2))).g, np.zeros((2, 2)))


def test_two_point_example():
    g = gramian_from_distances(GeodesicMatrix(np.array([[0.0, 2.0], [2.0, 0.0]]))).g
    assert np.allclose(g, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)


def test_row_sums_vanish(rng):
    g = gramian_from_distances(random_distances(rng, 20)).g
    assert np.abs(g.sum(axis=1)).max() < 1e-10


def test_literal_formula_loop_oracle(rng):
    d = random_distances(rng, 7)
    n = 7
    g = gramian_from_distances(d).g
    for i in range(n):
        for j in range(n):
            mi = sum(d[i, :]) / n
            mj = sum(d[:, j]) / n
            mu = sum(sum(d)) / n**2
            assert g[i, j] == pytest.approx(-0.5 * (d[i, j] - mi - mj + mu), abs=1e-12)


def test_centres_distances_not_squares():
    d = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
    g = gramian_from_distances(d).g
    # squared-distance centring would give 1.0 at the corners
    assert g[0, 0] == pytest.approx(-0.5 * (0 - 1 - 1 + 8 / 9))


@given(st.integers(2, 40), st.floats(-100, 100), st.integers(0, 2**32 - 1))
def test_constant_shift_invariance_and_symmetry(n, c, seed):
    rng = np.random.default_rng(seed)
    d = random_distances(rng, n)
    g = gramian_from_distances(d).g
    shifted = gramian_from_distances(d + c, check=False).g
    scale = max(1.0, np.abs(g).max())
    assert np.allclose(g, shifted, atol=1e-10 * scale)
    assert np.abs(g - g.T).max() <= 1e-12 * scale
    ones = np.ones(n)
    fro = np.linalg.norm(g)
    assert np.abs(g @ ones).max() <= 1e-9 * max(fro, 1e-300) + 1e-300


def test_input_validation():
    with pytest.raises(ValueError):
        gramian_from_distances(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        gramian_from_distances(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(ValueError):
        gramian_from_distances(np.array([[1.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(ValueError):
        gramian_from_distances(np.array([[0.0, np.inf], [np.inf, 0.0]]))
