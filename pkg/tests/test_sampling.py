import numpy as np
import pytest
from numpy.testing import assert_array_equal

from core.errors import InsufficientDegree
from core.hardy import BoundaryGrid, Subalgebra, membership
from utils.sampling import SEED_MAX, generate_samples, generate_samples_2d


def test_same_seed_same_samples():
    first = generate_samples(11, 3, 6)
    second = generate_samples(11, 3, 6)
    for f, g in zip(first, second):
        assert_array_equal(f.coeffs, g.coeffs)
    other = generate_samples(12, 3, 6)
    assert any(f.coeffs.shape != g.coeffs.shape or not np.array_equal(f.coeffs, g.coeffs)
               for f, g in zip(first, other))


@pytest.mark.parametrize("subalgebra", [Subalgebra.H0(), Subalgebra.Neil(), Subalgebra.H1n(3)])
def test_class_filter_gives_members(subalgebra):
    for f in generate_samples(5, 6, 8, subalgebra=subalgebra):
        assert membership(f, subalgebra).member


def test_class_needs_degree():
    with pytest.raises(InsufficientDegree):
        generate_samples(0, 2, 2, subalgebra=Subalgebra.H0n(3))


def test_zero_free_bounds():
    grid = BoundaryGrid(64)
    for f in generate_samples(3, 5, 7, zero_free=True):
        assert np.abs(f(grid.points)).min() >= 1.0 - 1e-12
        assert abs(complex(f(0.0))) >= 1.0
    with pytest.raises(ValueError):
        generate_samples(3, 2, 4, subalgebra=Subalgebra.H0(), zero_free=True)


@pytest.mark.parametrize("seed", [-1, SEED_MAX + 1])
def test_seed_range(seed):
    with pytest.raises(ValueError):
        generate_samples(seed, 1, 2)


def test_bidisc_mask_and_full_width_seed():
    samples = generate_samples_2d(SEED_MAX, 2, (3, 2), keep=lambda n, m: n != m)
    for f in samples:
        assert f.coeffs.shape == (4, 3)
        assert np.all(np.diag(f.coeffs) == 0)
