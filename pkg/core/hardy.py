"""
Hardy-space quadrature on the circle and torus, inner functions and the
subalgebras of H-infinity defined by vanishing Taylor coefficients.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from config.settings import settings
from core.errors import InsufficientDegree, InvalidAutomorphism, NotUnimodular
from core.moebius import DiscAutomorphism, to_series
from core.reports import CheckReport
from core.series import TruncatedSeries1D, compose, multiply
from utils.console import get_logger


logger = get_logger(__name__)

UNIMODULAR_TOL = 1e-12

# Sup-norm polishing: grid maxima within this relative gap of the best are refined.
REFINE_RELATIVE_GAP = 1e-3
REFINE_MAX_CANDIDATES = 16

Evaluable = Callable[..., Union[complex, np.ndarray]]


@dataclass(frozen=True)
class PNormSpec:
    """Exponent p of H^p, finite p >= 1 or math.inf."""

    p: float

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p < 1:
            raise ValueError(f"p must be >= 1 or inf, got {self.p}")
        object.__setattr__(self, "p", p)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.p)

    @classmethod
    def parse(cls, value: Union[str, float, int, "PNormSpec"]) -> "PNormSpec":
        if isinstance(value, PNormSpec):
            return value
        if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "∞"):
            return cls(math.inf)
        return cls(float(value))

    def to_json(self) -> Union[float, str]:
        return "inf" if self.is_infinite else self.p

    def __str__(self):
        return "inf" if self.is_infinite else f"{self.p:g}"


@dataclass(frozen=True)
class BoundaryGrid:
    """The M-th roots of unity, M >= 8."""

    size: int

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 8:
            raise ValueError(f"grid size must be an integer >= 8, got {self.size}")

    @cached_property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.size) / self.size

    @cached_property
    def points(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.size


@dataclass(frozen=True)
class BlaschkeProduct:
    """Finite Blaschke product u * prod (z - a_k) / (1 - conj(a_k) z)."""

    zeros: Tuple[complex, ...] = ()
    unimodular_factor: complex = 1 + 0j

    def __post_init__(self):
        zeros = tuple(complex(a) for a in self.zeros)
        for a in zeros:
            if abs(a) >= 1 - 1e-9:
                raise InvalidAutomorphism(f"Blaschke zero {a} is not inside the disc")
        u = complex(self.unimodular_factor)
        if abs(abs(u) - 1) > UNIMODULAR_TOL:
            raise NotUnimodular(f"|unimodular_factor| = {abs(u)}")
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "unimodular_factor", u)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.unimodular_factor, dtype=complex)
        for a in self.zeros:
            out = out * (z - a) / (1 - np.conj(a) * z)
        return out

    def compose(self, tau: DiscAutomorphism) -> Evaluable:
        """Return the evaluable B o tau."""
        return lambda z: self(tau(z))


# Norms

def _polish_circle_max(f: Evaluable, grid: BoundaryGrid, moduli: np.ndarray) -> float:
    best = float(moduli.max())
    if best == 0.0:
        return best
    left = np.roll(moduli, 1)
    right = np.roll(moduli, -1)
    peaks = np.flatnonzero((moduli >= left) & (moduli >= right) & (moduli >= best * (1 - REFINE_RELATIVE_GAP)))
    peaks = peaks[np.argsort(moduli[peaks])[::-1][:REFINE_MAX_CANDIDATES]]
    h = grid.spacing
    for k in peaks:
        t0 = grid.angles[k]
        # search the offset from the grid angle so the tolerance stays absolute
        res = minimize_scalar(
            lambda s, t0=t0: -abs(complex(f(np.exp(1j * (t0 + s))))),
            bounds=(-h, h),
            method="bounded",
            options={"xatol": 1e-10},
        )
        best = max(best, -float(res.fun))
    return best


def _polish_torus_max(f: Evaluable, grid: BoundaryGrid, moduli: np.ndarray) -> float:
    best = float(moduli.max())
    if best == 0.0:
        return best
    is_peak = moduli >= best * (1 - REFINE_RELATIVE_GAP)
    for shift in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)):
        is_peak &= moduli >= np.roll(moduli, shift, axis=(0, 1))
    rows, cols = np.nonzero(is_peak)
    order = np.argsort(moduli[rows, cols])[::-1][: REFINE_MAX_CANDIDATES // 2]
    h = grid.spacing
    for r, c in zip(rows[order], cols[order]):
        t0, s0 = grid.angles[r], grid.angles[c]
        res = minimize(
            lambda x, t0=t0, s0=s0: -abs(complex(f(np.exp(1j * (t0 + x[0])), np.exp(1j * (s0 + x[1]))))),
            x0=np.zeros(2),
            bounds=[(-h, h), (-h, h)],
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 400},
        )
        best = max(best, -float(res.fun))
    return best


def hp_norm_1d(f: Evaluable, spec: PNormSpec, grid: BoundaryGrid, refine: Optional[bool] = None) -> float:
    """
    H^p norm of f from its boundary values on the grid.

    Finite p uses the equal-weight rule for the normalized integral of |f|^p.
    For p = inf the grid maximum is polished with a bounded scalar search
    around every near-maximal grid peak unless ``refine`` is False.
    """
    moduli = np.abs(np.asarray(f(grid.points), dtype=complex))
    if not spec.is_infinite:
        return float(np.mean(moduli ** spec.p) ** (1.0 / spec.p))
    refine = settings.sup_refine if refine is None else refine
    return _polish_circle_max(f, grid, moduli) if refine else float(moduli.max())


def hp_norm_2d(f: Evaluable, spec: PNormSpec, grid: BoundaryGrid, refine: Optional[bool] = None) -> float:
    """H^p norm on the torus from the product grid (the same grid in each variable)."""
    z, w = np.meshgrid(grid.points, grid.points, indexing="ij")
    moduli = np.abs(np.asarray(f(z, w), dtype=complex))
    if not spec.is_infinite:
        return float(np.mean(moduli ** spec.p) ** (1.0 / spec.p))
    refine = settings.sup_refine if refine is None else refine
    return _polish_torus_max(f, grid, moduli) if refine else float(moduli.max())


class InnerCheck(NamedTuple):
    inner: bool
    max_deviation: float


def is_inner(f: Evaluable, grid: BoundaryGrid, tol: float = 1e-10) -> InnerCheck:
    """Check ||f| - 1| < tol on the grid, always reporting the deviation."""
    deviation = float(np.max(np.abs(np.abs(np.asarray(f(grid.points), dtype=complex)) - 1)))
    return InnerCheck(deviation < tol, deviation)


# Subalgebras

@dataclass(frozen=True)
class Subalgebra:
    """Functions whose derivatives of the listed orders vanish at 0."""

    name: str
    constrained: Tuple[int, ...]
    n: Optional[int] = field(default=None, compare=False)

    @classmethod
    def H0(cls) -> "Subalgebra":
        return cls("H0", (0,))

    @classmethod
    def Neil(cls) -> "Subalgebra":
        return cls("Neil", (1,))

    @classmethod
    def H0n(cls, n: int) -> "Subalgebra":
        if n < 0:
            raise ValueError("H0n needs n >= 0")
        return cls(f"H0n({n})", tuple(range(0, n + 1)), n)

    @classmethod
    def H1n(cls, n: int) -> "Subalgebra":
        if n < 1:
            raise ValueError("H1n needs n >= 1")
        return cls(f"H1n({n})", tuple(range(1, n + 1)), n)

    @classmethod
    def parse(cls, text: str) -> "Subalgebra":
        """Accepts H0, Neil, H0n(n) / H0n:n and H1n(n) / H1n:n."""
        key = text.strip()
        lowered = key.lower()
        if lowered == "h0":
            return cls.H0()
        if lowered == "neil":
            return cls.Neil()
        for prefix, factory in (("h0n", cls.H0n), ("h1n", cls.H1n)):
            if lowered.startswith(prefix):
                arg = key[len(prefix):].strip("():= ")
                if not arg.isdigit():
                    raise ValueError(f"class {text!r} needs an integer order, e.g. {prefix.upper()}(2)")
                return factory(int(arg))
        raise ValueError(f"unknown class {text!r}; expected H0, Neil, H0n(n) or H1n(n)")

    @property
    def top_order(self) -> int:
        return max(self.constrained)

    @property
    def constrains_constant(self) -> bool:
        return 0 in self.constrained

    def witness(self) -> TruncatedSeries1D:
        """Class member that no automorphism moving 0 can preserve."""
        if self.name == "H0":
            return TruncatedSeries1D.monomial(1)
        k = self.top_order + 1
        return TruncatedSeries1D.monomial(k, coefficient=1.0 / math.factorial(k))

    def project(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.array(coeffs, dtype=complex)
        idx = [j for j in self.constrained if j < out.shape[0]]
        out[idx] = 0
        return out

    def __str__(self):
        return self.name


class Membership(NamedTuple):
    member: bool
    witness: float
    order: Optional[int]


def membership(f: TruncatedSeries1D, subalgebra: Subalgebra, tol: float = 1e-12) -> Membership:
    """
    Test the vanishing-derivative conditions of ``subalgebra`` on f.

    Derivatives come from coefficients, f^(j)(0) = j! c_j. The witness is the
    largest |f^(j)(0)| over the constrained orders.

    Raises:
        InsufficientDegree: if f is truncated below the highest constrained order
    """
    if f.degree < subalgebra.top_order:
        raise InsufficientDegree(
            f"{subalgebra} needs degree >= {subalgebra.top_order}, series has degree {f.degree}"
        )
    worst, worst_order, member = 0.0, None, True
    for j in subalgebra.constrained:
        c = abs(f.coeffs[j])
        value = math.factorial(j) * c
        if c >= tol:
            member = False
        if value > worst:
            worst, worst_order = value, j
    return Membership(member, worst, worst_order)


def rotate(f: TruncatedSeries1D, theta: float) -> TruncatedSeries1D:
    """Series of f(e^{i theta} z)."""
    return TruncatedSeries1D(f.coeffs * np.exp(1j * theta * np.arange(f.degree + 1)))


def _sup(f: Evaluable, grid: BoundaryGrid) -> float:
    return hp_norm_1d(f, PNormSpec(math.inf), grid)


def rotation_automorphism_check(
    theta: float,
    samples: Sequence[TruncatedSeries1D],
    subalgebra: Subalgebra,
    tol: float = 1e-10,
    grid: Optional[BoundaryGrid] = None,
) -> CheckReport:
    """
    Check that f -> f(e^{i theta} .) is a sup-norm preserving algebra
    automorphism of the subalgebra on the given samples.

    Multiplicativity is tested on neighbouring sample pairs: the rotation of
    the exact product series against the pointwise product of the rotations.
    """
    grid = grid or BoundaryGrid(settings.default_grid_size)
    samples = list(samples)
    mult, norm, klass = [], [], []
    for i, f in enumerate(samples):
        g = samples[(i + 1) % len(samples)]
        tf = rotate(f, theta)
        product = rotate(multiply(f, g, f.degree + g.degree), theta)
        pointwise = tf(grid.points) * rotate(g, theta)(grid.points)
        mult.append(float(np.max(np.abs(product(grid.points) - pointwise))))
        norm.append(abs(_sup(tf, grid) - _sup(f, grid)))
        klass.append(membership(tf, subalgebra, tol).witness)
    logger.debug("rotation check theta=%.6f on %d samples for %s", theta, len(samples), subalgebra)
    return CheckReport(
        check="rotation_automorphism",
        residuals={
            "multiplicativity": max(mult, default=0.0),
            "sup_norm": max(norm, default=0.0),
            "class": max(klass, default=0.0),
        },
        tolerance=tol,
        grid_size=grid.size,
        sample_residuals={"multiplicativity": mult, "sup_norm": norm, "class": klass},
        details={"theta": theta, "class": subalgebra.name},
    )


class CompositionViolation(NamedTuple):
    witness: TruncatedSeries1D
    violation: float
    order: Optional[int]


def falsify_composition_automorphism(tau: DiscAutomorphism, subalgebra: Subalgebra) -> CompositionViolation:
    """
    Show that f -> f o tau leaves the subalgebra when tau moves 0.

    Composes the class witness with tau and reports the largest constrained
    derivative |(f o tau)^(j)(0)|; it is zero for rotations.
    """
    witness = subalgebra.witness()
    degree = subalgebra.top_order
    image = compose(witness, to_series(tau, degree), degree)
    result = membership(image, subalgebra, tol=0.0)
    logger.debug("composition falsifier for %s: violation %.3e at order %s", subalgebra, result.witness, result.order)
    return CompositionViolation(witness, result.witness, result.order)


def isometry_form_check_neil(
    alpha: complex,
    theta: float,
    samples: Sequence[TruncatedSeries1D],
    tol: float = 1e-10,
    grid: Optional[BoundaryGrid] = None,
    subalgebra: Optional[Subalgebra] = None,
) -> CheckReport:
    """
    Check that f -> alpha f(e^{i theta} z) is a sup-norm isometry of the
    Neil algebra (or of H1n(n)) on the given samples.

    Raises:
        NotUnimodular: if |alpha| differs from 1 by more than 1e-12
    """
    alpha = complex(alpha)
    if abs(abs(alpha) - 1) > UNIMODULAR_TOL:
        raise NotUnimodular(f"|alpha| = {abs(alpha):.15f}")
    subalgebra = subalgebra or Subalgebra.Neil()
    grid = grid or BoundaryGrid(settings.default_grid_size)
    norm, klass = [], []
    for f in samples:
        g = rotate(f, theta) * alpha
        norm.append(abs(_sup(g, grid) - _sup(f, grid)))
        klass.append(membership(g, subalgebra, tol).witness)
    return CheckReport(
        check="isometry_form",
        residuals={"sup_norm": max(norm, default=0.0), "class": max(klass, default=0.0)},
        tolerance=tol,
        grid_size=grid.size,
        sample_residuals={"sup_norm": norm, "class": klass},
        details={"alpha": alpha, "theta": theta, "class": subalgebra.name, "form": "alpha * f(exp(i theta) z)"},
    )
