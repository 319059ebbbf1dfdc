"""Truncated power-series arithmetic in one and two complex variables."""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as npoly

from core.errors import DuplicateNodes, VanishingConstantTerm
from utils.console import get_logger


logger = get_logger(__name__)

# Constant terms at or below this modulus are treated as zero by log/pow.
NONVANISHING_TOL = 1e-12


def _as_coeff_array(values: Any, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    if arr.ndim != ndim or arr.size == 0:
        raise ValueError(f"expected a non-empty {ndim}-D coefficient array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("series coefficients must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TruncatedSeries1D:
    """Coefficients c_0..c_N of an analytic function on the disc, truncated at degree N."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _as_coeff_array(self.coeffs, 1))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    # Alias matching the file format's vocabulary.
    truncation_degree = degree

    @classmethod
    def constant(cls, value: complex, degree: int = 0) -> "TruncatedSeries1D":
        coeffs = np.zeros(degree + 1, dtype=complex)
        coeffs[0] = value
        return cls(coeffs)

    @classmethod
    def monomial(cls, k: int, degree: Optional[int] = None, coefficient: complex = 1.0) -> "TruncatedSeries1D":
        """Return coefficient * z^k truncated at ``degree`` (default k)."""
        degree = k if degree is None else degree
        coeffs = np.zeros(degree + 1, dtype=complex)
        if k <= degree:
            coeffs[k] = coefficient
        return cls(coeffs)

    def truncate(self, degree: int) -> "TruncatedSeries1D":
        return TruncatedSeries1D(self.pad(degree).coeffs[: degree + 1])

    def pad(self, degree: int) -> "TruncatedSeries1D":
        if degree <= self.degree:
            return TruncatedSeries1D(self.coeffs[: degree + 1])
        coeffs = np.zeros(degree + 1, dtype=complex)
        coeffs[: self.coeffs.size] = self.coeffs
        return TruncatedSeries1D(coeffs)

    def __call__(self, z):
        return evaluate(self, z)

    def __add__(self, other):
        if isinstance(other, TruncatedSeries1D):
            degree = max(self.degree, other.degree)
            return TruncatedSeries1D(self.pad(degree).coeffs + other.pad(degree).coeffs)
        coeffs = self.coeffs.copy()
        coeffs[0] += other
        return TruncatedSeries1D(coeffs)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries1D(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries1D):
            return multiply(self, other)
        return TruncatedSeries1D(self.coeffs * complex(other))

    def __rmul__(self, other):
        return self * other

    def __repr__(self):
        return f"TruncatedSeries1D(degree={self.degree}, coeffs={np.array2string(self.coeffs, precision=4)})"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "degree": self.degree,
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TruncatedSeries1D":
        coeffs = [complex(re, im) for re, im in data["coeffs"]]
        if len(coeffs) != int(data["degree"]) + 1:
            raise ValueError("series file: coeffs must have degree + 1 entries")
        return cls(coeffs)


@dataclass(frozen=True, eq=False)
class TruncatedSeries2D:
    """Coefficients c_nm of an analytic function on the bidisc, 0 <= n <= N, 0 <= m <= M.

    Row index n is the power of the first variable z, column index m the power of w.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _as_coeff_array(self.coeffs, 2))

    @property
    def bidegree(self) -> Tuple[int, int]:
        rows, cols = self.coeffs.shape
        return rows - 1, cols - 1

    truncation_bidegree = bidegree

    @classmethod
    def monomial(cls, n: int, m: int, bidegree: Optional[Tuple[int, int]] = None,
                 coefficient: complex = 1.0) -> "TruncatedSeries2D":
        N, M = bidegree if bidegree is not None else (n, m)
        coeffs = np.zeros((N + 1, M + 1), dtype=complex)
        if n <= N and m <= M:
            coeffs[n, m] = coefficient
        return cls(coeffs)

    @classmethod
    def from_product(cls, f: TruncatedSeries1D, g: TruncatedSeries1D) -> "TruncatedSeries2D":
        """Return the series of f(z) * g(w)."""
        return cls(np.outer(f.coeffs, g.coeffs))

    def pad(self, bidegree: Tuple[int, int]) -> "TruncatedSeries2D":
        N, M = bidegree
        coeffs = np.zeros((N + 1, M + 1), dtype=complex)
        rows = min(N + 1, self.coeffs.shape[0])
        cols = min(M + 1, self.coeffs.shape[1])
        coeffs[:rows, :cols] = self.coeffs[:rows, :cols]
        return TruncatedSeries2D(coeffs)

    def __call__(self, z, w):
        return evaluate(self, z, w)

    def __add__(self, other):
        if isinstance(other, TruncatedSeries2D):
            N = max(self.bidegree[0], other.bidegree[0])
            M = max(self.bidegree[1], other.bidegree[1])
            return TruncatedSeries2D(self.pad((N, M)).coeffs + other.pad((N, M)).coeffs)
        coeffs = self.coeffs.copy()
        coeffs[0, 0] += other
        return TruncatedSeries2D(coeffs)

    __radd__ = __add__

    def __mul__(self, scalar):
        return TruncatedSeries2D(self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return f"TruncatedSeries2D(bidegree={self.bidegree})"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bidegree": list(self.bidegree),
            "coeffs": [[[float(c.real), float(c.imag)] for c in row] for row in self.coeffs],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TruncatedSeries2D":
        N, M = (int(v) for v in data["bidegree"])
        coeffs = np.array([[complex(re, im) for re, im in row] for row in data["coeffs"]], dtype=complex)
        if coeffs.shape != (N + 1, M + 1):
            raise ValueError("series file: coeffs shape must be (N+1) x (M+1)")
        return cls(coeffs)


Series = Union[TruncatedSeries1D, TruncatedSeries2D]


def multiply(f: TruncatedSeries1D, g: TruncatedSeries1D, out_degree: Optional[int] = None) -> TruncatedSeries1D:
    """Cauchy product truncated to ``out_degree`` (default: the larger input degree)."""
    degree = max(f.degree, g.degree) if out_degree is None else out_degree
    product = np.convolve(f.coeffs, g.coeffs)
    return TruncatedSeries1D(product).pad(degree)


def compose(f: TruncatedSeries1D, g: TruncatedSeries1D, out_degree: int) -> TruncatedSeries1D:
    """
    Coefficients of f(g(z)) through ``out_degree``.

    The powers of g are accumulated in Horner form, each product truncated at
    ``out_degree``. Only the coefficients through ``out_degree`` of the true
    composition are reproduced, and accuracy degrades as |g(0)| grows.

    Args:
        f: Outer series
        g: Inner series
        out_degree: Truncation degree of the result

    Returns:
        The truncated composite series
    """
    if out_degree < 0:
        raise ValueError("out_degree must be nonnegative")
    if abs(g.coeffs[0]) > 0.5:
        logger.debug("composing with |g(0)| = %.3f; truncated composition is approximate", abs(g.coeffs[0]))
    inner = g.pad(out_degree)
    result = TruncatedSeries1D.constant(f.coeffs[-1], out_degree)
    for c in f.coeffs[-2::-1]:
        result = multiply(result, inner, out_degree) + c
    return result


def derivative(f: TruncatedSeries1D) -> TruncatedSeries1D:
    """Return f' (degree N-1; the zero constant for constant input)."""
    if f.degree == 0:
        return TruncatedSeries1D([0.0])
    n = np.arange(1, f.degree + 1)
    return TruncatedSeries1D(n * f.coeffs[1:])


def log_series(h: TruncatedSeries1D, tol: float = NONVANISHING_TOL) -> TruncatedSeries1D:
    """
    Formal logarithm with the principal branch at the constant term.

    Uses n h_0 L_n = n h_n - sum_{k=1}^{n-1} k L_k h_{n-k}, from h' = h L'.

    Raises:
        VanishingConstantTerm: if |h(0)| <= tol
    """
    c = h.coeffs
    if abs(c[0]) <= tol:
        raise VanishingConstantTerm(f"log of a series with |c_0| = {abs(c[0]):.3e}")
    out = np.zeros_like(c)
    out[0] = np.log(c[0])
    for n in range(1, c.size):
        k = np.arange(1, n)
        acc = np.dot(k * out[1:n], c[n - 1:0:-1]) if n > 1 else 0.0
        out[n] = (c[n] - acc / n) / c[0]
    return TruncatedSeries1D(out)


def exp_series(h: TruncatedSeries1D) -> TruncatedSeries1D:
    """Formal exponential via n E_n = sum_{k=1}^{n} k h_k E_{n-k}."""
    c = h.coeffs
    out = np.zeros_like(c)
    out[0] = np.exp(c[0])
    for n in range(1, c.size):
        k = np.arange(1, n + 1)
        out[n] = np.dot(k * c[1:n + 1], out[n - 1::-1]) / n
    return TruncatedSeries1D(out)


def fractional_power(h: TruncatedSeries1D, exponent: float, tol: float = NONVANISHING_TOL) -> TruncatedSeries1D:
    """h**exponent on the principal branch at the constant term."""
    return exp_series(log_series(h, tol) * exponent)


def evaluate(f: Series, *points):
    """Horner evaluation; nested over both variables for 2D series."""
    if isinstance(f, TruncatedSeries1D):
        (z,) = points
        return npoly.polyval(np.asarray(z, dtype=complex), f.coeffs)
    z, w = np.broadcast_arrays(np.asarray(points[0], dtype=complex), np.asarray(points[1], dtype=complex))
    return npoly.polyval2d(z, w, f.coeffs)


def lagrange_polynomial(nodes: Sequence[complex], values: Sequence[complex],
                        tol: float = NONVANISHING_TOL) -> TruncatedSeries1D:
    """
    Interpolating polynomial of degree < len(nodes) through (nodes[j], values[j]).

    Args:
        nodes: Pairwise distinct complex nodes
        values: Prescribed values at the nodes
        tol: Minimum admissible pairwise node distance

    Returns:
        The interpolant as a series of degree len(nodes) - 1

    Raises:
        DuplicateNodes: if two nodes lie within ``tol`` of each other
    """
    x = np.asarray(nodes, dtype=complex)
    y = np.asarray(values, dtype=complex)
    if x.shape != y.shape or x.ndim != 1 or x.size == 0:
        raise ValueError("nodes and values must be non-empty sequences of equal length")
    gaps = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(gaps, np.inf)
    if x.size > 1 and gaps.min() <= tol:
        raise DuplicateNodes(f"nodes closer than {tol:.1e}")

    coeffs = np.zeros(x.size, dtype=complex)
    for j in range(x.size):
        others = np.delete(x, j)
        basis = npoly.polyfromroots(others) if others.size else np.ones(1, dtype=complex)
        coeffs += y[j] * basis / np.prod(x[j] - others)
    return TruncatedSeries1D(coeffs)
