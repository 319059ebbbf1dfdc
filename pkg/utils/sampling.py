"""Seeded random polynomial samples for verification runs."""

from typing import Callable, List, Optional, Tuple

import numpy as np

from core.errors import InsufficientDegree
from core.hardy import Subalgebra
from core.series import TruncatedSeries1D, TruncatedSeries2D


SEED_MAX = 2**64 - 1


def _rng(seed: int) -> np.random.Generator:
    if not 0 <= int(seed) <= SEED_MAX:
        raise ValueError(f"seed must lie in [0, 2^64 - 1], got {seed}")
    return np.random.default_rng(int(seed))


def _unit_square(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.random(shape) + 1j * rng.random(shape)


def generate_samples(
    seed: int,
    count: int,
    max_degree: int,
    subalgebra: Optional[Subalgebra] = None,
    zero_free: bool = False,
) -> List[TruncatedSeries1D]:
    """
    Random polynomials of degree <= max_degree.

    Coefficients are uniform in [0, 1) x [0, 1)i; a class filter zeros the
    constrained coefficients after drawing. ``zero_free`` lifts the constant
    term by 1 + sum |c_j| so |f| >= 1 on the closed disc.

    Raises:
        InsufficientDegree: if max_degree is below the class's top constrained order
        ValueError: if zero_free is asked of a class that fixes the constant term
    """
    if count < 0 or max_degree < 0:
        raise ValueError("count and max_degree must be nonnegative")
    if subalgebra is not None and max_degree < subalgebra.top_order:
        raise InsufficientDegree(f"{subalgebra} needs max_degree >= {subalgebra.top_order}")
    if zero_free and subalgebra is not None and subalgebra.constrains_constant:
        raise ValueError(f"zero-free samples are not available for {subalgebra}")

    rng = _rng(seed)
    low = 1 if subalgebra is None else subalgebra.top_order + 1
    low = min(low, max_degree)
    samples = []
    for _ in range(count):
        degree = int(rng.integers(low, max_degree + 1))
        coeffs = _unit_square(rng, degree + 1)
        if subalgebra is not None:
            coeffs = subalgebra.project(coeffs)
        if zero_free:
            coeffs[0] += 1 + np.abs(coeffs[1:]).sum()
        samples.append(TruncatedSeries1D(coeffs))
    return samples


def generate_samples_2d(
    seed: int,
    count: int,
    bidegree: Tuple[int, int],
    keep: Optional[Callable[[int, int], bool]] = None,
    zero_free: bool = False,
) -> List[TruncatedSeries2D]:
    """Random bidisc polynomials; ``keep(n, m)`` False zeros the z^n w^m coefficient."""
    N, M = bidegree
    if count < 0 or N < 0 or M < 0:
        raise ValueError("count and bidegree must be nonnegative")
    rng = _rng(seed)
    mask = np.ones((N + 1, M + 1), dtype=bool)
    if keep is not None:
        mask = np.array([[bool(keep(n, m)) for m in range(M + 1)] for n in range(N + 1)])
    samples = []
    for _ in range(count):
        coeffs = _unit_square(rng, (N + 1, M + 1)) * mask
        if zero_free and mask[0, 0]:
            coeffs[0, 0] += 1 + np.abs(coeffs).sum() - abs(coeffs[0, 0])
        samples.append(TruncatedSeries2D(coeffs))
    return samples
