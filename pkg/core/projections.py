"""
Generalized tri-circular projections built from isometries.

A triple (P, Q, R) with P + Q + R = I and T = P + l1 Q + l2 R exists exactly
when (T - I)(T - l1 I)(T - l2 I) = 0, and then each projection is a
quadratic polynomial in T. Everything here works on matrices or on operator
expressions; expressions are checked pointwise on check samples.
"""

import cmath
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from config.settings import settings
from core.errors import (
    AnnihilationFails,
    FalsifierPrecondition,
    InvalidEigenPair,
    NoFamilyMatches,
    OrbitDegenerate,
    PEqualsTwo,
    SpectrumMismatch,
)
from core.hardy import BoundaryGrid
from core.moebius import order_up_to
from core.operators import (
    Atom,
    Identity,
    Operator,
    OperatorExpr,
    WeightedCompositionOp1D,
    WeightedCompositionOp2D,
    act,
    expression_dimension,
    materialize_matrix,
)
from core.reports import CheckReport, ClassificationReport, Family
from core.series import TruncatedSeries1D, lagrange_polynomial
from utils.console import get_logger
from utils.sampling import generate_samples, generate_samples_2d


logger = get_logger(__name__)

UNIMODULAR_TOL = 1e-12
SEPARATION_TOL = 1e-9
CUBE_ROOT = cmath.exp(2j * math.pi / 3)

Operand = Union[np.ndarray, OperatorExpr]


@dataclass(frozen=True)
class EigenPair:
    """Distinct unimodular eigenvalues l1, l2, both different from 1."""

    lambda1: complex
    lambda2: complex

    def __post_init__(self):
        l1, l2 = complex(self.lambda1), complex(self.lambda2)
        for name, lam in (("lambda1", l1), ("lambda2", l2)):
            if abs(abs(lam) - 1) > UNIMODULAR_TOL:
                raise InvalidEigenPair(f"|{name}| = {abs(lam):.15f} is not 1")
            if abs(lam - 1) <= SEPARATION_TOL:
                raise InvalidEigenPair(f"{name} must differ from 1")
        if abs(l1 - l2) <= SEPARATION_TOL:
            raise InvalidEigenPair("lambda1 and lambda2 must be distinct")
        object.__setattr__(self, "lambda1", l1)
        object.__setattr__(self, "lambda2", l2)

    @classmethod
    def from_angles(cls, t1: float, t2: float) -> "EigenPair":
        return cls(cmath.exp(1j * t1), cmath.exp(1j * t2))

    @classmethod
    def cube_roots(cls) -> "EigenPair":
        return cls(CUBE_ROOT, CUBE_ROOT**2)

    @property
    def a(self) -> complex:
        return self.lambda1 + self.lambda2

    @property
    def b(self) -> complex:
        return self.lambda1 * self.lambda2


# The pair whose formulas name the vanishing projections of T = I and T^2 = I.
DEGENERACY_PAIR = EigenPair(-1.0, 1j)


@dataclass
class GTCPTriple:
    P: Operand
    Q: Operand
    R: Operand
    eigenpair: EigenPair
    residuals: Dict[str, float] = field(default_factory=dict)
    formulas: Dict[str, str] = field(default_factory=dict)

    @property
    def is_matrix(self) -> bool:
        return isinstance(self.P, np.ndarray)

    def items(self):
        return (("P", self.P), ("Q", self.Q), ("R", self.R))


# Building blocks

def _quadratic(T: Operand, c2: complex, c1: complex, c0: complex) -> Operand:
    """c2 T^2 + c1 T + c0 I for matrices or expressions."""
    if isinstance(T, np.ndarray):
        return c2 * (T @ T) + c1 * T + c0 * np.eye(T.shape[0], dtype=complex)
    return c2 * T**2 + c1 * T + c0 * Identity()


def _cubic(T: Operand, pair: EigenPair) -> Operand:
    a, b = pair.a, pair.b
    if isinstance(T, np.ndarray):
        return (T @ T @ T) - (1 + a) * (T @ T) + (a + b) * T - b * np.eye(T.shape[0], dtype=complex)
    return T**3 - (1 + a) * T**2 + (a + b) * T - b * Identity()


def _as_operand(T) -> Operand:
    if isinstance(T, np.ndarray):
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {T.shape}")
        return T.astype(complex)
    if isinstance(T, (WeightedCompositionOp1D, WeightedCompositionOp2D)):
        return Atom(T)
    if isinstance(T, OperatorExpr):
        return T
    raise TypeError(f"cannot build projections from {type(T).__name__}")


def lemma_coefficients(pair: EigenPair) -> Dict[str, Tuple[complex, complex, complex]]:
    """(c2, c1, c0) of P, Q, R as quadratics in T."""
    l1, l2 = pair.lambda1, pair.lambda2

    def quotient(x, y, denom):
        return (1 / denom, -(x + y) / denom, x * y / denom)

    return {
        "P": quotient(l1, l2, (1 - l1) * (1 - l2)),
        "Q": quotient(1, l2, (l1 - 1) * (l1 - l2)),
        "R": quotient(1, l1, (l2 - 1) * (l2 - l1)),
    }


def _format_quadratic(c2: complex, c1: complex, c0: complex) -> str:
    def fmt(c):
        c = complex(round(c.real, 12), round(c.imag, 12))
        return f"({c.real:.6g}{c.imag:+.6g}i)"

    return f"{fmt(c2)} T^2 + {fmt(c1)} T + {fmt(c0)} I"


def _check_points(dimension: int, grid: BoundaryGrid) -> Tuple[np.ndarray, ...]:
    if dimension == 2:
        z, w = np.meshgrid(grid.points, grid.points, indexing="ij")
        return z.ravel(), w.ravel()
    return (grid.points,)


def _default_samples(dimension: int, seed: Optional[int] = None):
    seed = settings.default_seed if seed is None else seed
    if dimension == 2:
        return generate_samples_2d(seed, settings.order_check_polynomials, (4, 4))
    return generate_samples(seed, settings.order_check_polynomials, 6)


def _pointwise_size(expr: OperatorExpr, samples, grid: BoundaryGrid) -> List[float]:
    """Max modulus of expr(f) on the grid, per sample."""
    dimension = expression_dimension(expr) or (2 if samples and hasattr(samples[0], "bidegree") else 1)
    points = _check_points(dimension, grid)
    return [float(np.max(np.abs(act(expr, f)(*points)))) for f in samples]


def _size(X: Operand, samples, grid) -> float:
    if isinstance(X, np.ndarray):
        return float(np.max(np.abs(X))) if X.size else 0.0
    return max(_pointwise_size(X, samples, grid), default=0.0)


# Operations

def annihilation_residual(T, pair: EigenPair, samples=None, grid: Optional[BoundaryGrid] = None) -> float:
    """max |(T^3 - (1+a)T^2 + (a+b)T - bI) f| over samples and grid (entrywise for matrices)."""
    T = _as_operand(T)
    if isinstance(T, np.ndarray):
        return _size(_cubic(T, pair), None, None)
    grid = grid or BoundaryGrid(settings.order_check_points)
    if samples is None:
        samples = _default_samples(expression_dimension(T) or 1)
    return _size(_cubic(T, pair), samples, grid)


def gtcp_from_isometry(T, pair: EigenPair, samples=None, grid: Optional[BoundaryGrid] = None,
                       tol: Optional[float] = None) -> GTCPTriple:
    """
    P, Q, R from the quotient formulas, e.g. P = (T - l1 I)(T - l2 I) / ((1 - l1)(1 - l2)).

    Raises:
        AnnihilationFails: if the annihilating cubic does not vanish on T
    """
    tol = settings.operator_tolerance if tol is None else tol
    T = _as_operand(T)
    residual = annihilation_residual(T, pair, samples, grid)
    if residual >= tol:
        raise AnnihilationFails(residual, tol)
    coeffs = lemma_coefficients(pair)
    parts = {name: _quadratic(T, *c) for name, c in coeffs.items()}
    return GTCPTriple(
        P=parts["P"],
        Q=parts["Q"],
        R=parts["R"],
        eigenpair=pair,
        residuals={"annihilation": residual},
        formulas={name: _format_quadratic(*c) for name, c in coeffs.items()},
    )


def eigenprojection_oracle(T: np.ndarray, pair: EigenPair, tol: float = 1e-6) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Spectral projections of a diagonalizable T onto the eigenvalues 1, l1, l2.

    Built from the eigenvector basis V: P = V[:, S] V^{-1}[S, :] over the
    eigenvalues S closest to 1, and likewise for Q and R.

    Raises:
        SpectrumMismatch: if an eigenvalue is not within ``tol`` of 1, l1 or l2,
            or the minimal-polynomial residual shows T is not diagonalizable
    """
    T = _as_operand(T)
    scale = max(1.0, float(np.linalg.norm(T, 2)))
    cubic = _size(_cubic(T, pair), None, None)
    if cubic > 1e-8 * scale**3:
        raise SpectrumMismatch(f"minimal polynomial residual {cubic:.3e}: spectrum is not within {{1, l1, l2}}")
    values, V = np.linalg.eig(T)
    targets = np.array([1.0, pair.lambda1, pair.lambda2])
    distance = np.abs(values[:, None] - targets[None, :])
    label = np.argmin(distance, axis=1)
    if np.any(distance[np.arange(values.size), label] > tol):
        raise SpectrumMismatch(f"eigenvalues {values} are not all in {{1, l1, l2}}")
    V_inv = np.linalg.inv(V)
    projections = []
    for k in range(3):
        S = np.flatnonzero(label == k)
        projections.append(V[:, S] @ V_inv[S, :])
    return tuple(projections)


def verify_triple(triple: GTCPTriple, T, samples=None, grid: Optional[BoundaryGrid] = None,
                  tol: Optional[float] = None) -> CheckReport:
    """
    Idempotence, mutual annihilation, completeness and reconstruction of T.

    Eleven residuals: P^2 - P, Q^2 - Q, R^2 - R, the six cross products,
    P + Q + R - I and P + l1 Q + l2 R - T.
    """
    tol = settings.operator_tolerance if tol is None else tol
    T = _as_operand(T)
    P, Q, R = triple.P, triple.Q, triple.R
    l1, l2 = triple.eigenpair.lambda1, triple.eigenpair.lambda2
    if isinstance(T, np.ndarray):
        I = np.eye(T.shape[0], dtype=complex)
        grid = None
    else:
        I = Identity()
        grid = grid or BoundaryGrid(settings.order_check_points)
        if samples is None:
            samples = _default_samples(expression_dimension(T) or 1)
    checks = {
        "P^2-P": P @ P - P,
        "Q^2-Q": Q @ Q - Q,
        "R^2-R": R @ R - R,
        "PQ": P @ Q,
        "QP": Q @ P,
        "PR": P @ R,
        "RP": R @ P,
        "QR": Q @ R,
        "RQ": R @ Q,
        "P+Q+R-I": P + Q + R - I,
        "P+l1Q+l2R-T": P + l1 * Q + l2 * R - T,
    }
    residuals = {name: _size(X, samples, grid) for name, X in checks.items()}
    return CheckReport(
        check="gtcp_triple",
        residuals=residuals,
        tolerance=tol,
        grid_size=grid.size if grid else None,
        details={"lambda1": l1, "lambda2": l2},
    )


class FalsifierResult(NamedTuple):
    point: complex
    residual: float
    orbit: Tuple[complex, ...]


def _separated(points: Sequence[complex], separation: float) -> bool:
    pts = np.asarray(points, dtype=complex)
    gaps = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(gaps, np.inf)
    return bool(gaps.min() >= separation)


def lagrange_falsifier(T: WeightedCompositionOp1D, pair: EigenPair, seed: Optional[int] = None) -> FalsifierResult:
    """
    Evaluate the annihilating cubic on a polynomial L with L(z0) = 1 and
    L = 0 at tau(z0), tau^2(z0), tau^3(z0). All three T^k L vanish at z0, so
    the residual is |b| = 1 for every unimodular pair.

    Raises:
        FalsifierPrecondition: if tau has order at most three
        OrbitDegenerate: if no point with a separated four-point orbit is found
    """
    if order_up_to(T.tau, 3, settings.order_tolerance) is not None:
        raise FalsifierPrecondition("automorphism has order <= 3; the falsifier needs tau, tau^2, tau^3 != id")
    rng = np.random.default_rng(settings.default_seed if seed is None else seed)
    for _ in range(settings.falsifier_trials):
        z0 = complex(0.9 * math.sqrt(rng.random()) * cmath.exp(2j * math.pi * rng.random()))
        orbit = [z0]
        for _ in range(3):
            orbit.append(complex(T.tau(orbit[-1])))
        if _separated(orbit, settings.falsifier_separation):
            break
    else:
        raise OrbitDegenerate(f"no separated orbit in {settings.falsifier_trials} trials")
    L = lagrange_polynomial(orbit, [1.0, 0.0, 0.0, 0.0])
    value = act(_cubic(Atom(T), pair), L)(z0)
    residual = float(abs(value))
    logger.debug("lagrange falsifier at z0=%s: residual %.12f", z0, residual)
    return FalsifierResult(z0, residual, tuple(orbit))


def sigma_lagrange_falsifier(T: WeightedCompositionOp2D, pair: EigenPair, seed: Optional[int] = None) -> FalsifierResult:
    """
    The same argument in the second variable when tau = id: with
    f(z, w) = L(w), L(w0) = 1 and L(w0 sigma(z0)^j) = 0 for j = 1, 2, 3, the
    cubic evaluates to -b at (z0, w0).

    Raises:
        FalsifierPrecondition: if tau is not the identity
        OrbitDegenerate: if sigma(z0)^j stays near 1 on every trial point
    """
    if order_up_to(T.tau, 1, settings.order_tolerance) != 1:
        raise FalsifierPrecondition("the w-variable falsifier needs tau = id")
    rng = np.random.default_rng(settings.default_seed if seed is None else seed)
    for _ in range(settings.falsifier_trials):
        z0 = cmath.exp(2j * math.pi * rng.random())
        w0 = complex((0.3 + 0.6 * rng.random()) * cmath.exp(2j * math.pi * rng.random()))
        s = complex(T.sigma(z0))
        orbit = [w0 * s**j for j in range(4)]
        if _separated(orbit, settings.falsifier_separation):
            break
    else:
        raise OrbitDegenerate("sigma(z0)^j stays within the separation of 1 for j <= 3")
    L = lagrange_polynomial(orbit, [1.0, 0.0, 0.0, 0.0])
    value = act(_cubic(Atom(T), pair), lambda z, w: L(w))(z0, w0)
    return FalsifierResult(w0, float(abs(value)), tuple(orbit))


def operator_order(T, samples, grid: BoundaryGrid, n_max: int = 4, tol: Optional[float] = None) -> Tuple[Optional[int], Dict[int, float]]:
    """Smallest n <= n_max with T^n = I on the check samples, with the residual of every power tried."""
    tol = settings.power_tolerance if tol is None else tol
    T = _as_operand(T)
    residuals: Dict[int, float] = {}
    for n in range(1, n_max + 1):
        residuals[n] = _size(T**n - Identity(), samples, grid)
        if residuals[n] < tol:
            return n, residuals
    return None, residuals


def order3_triple(T) -> GTCPTriple:
    """P = (I + T + T^2)/3, Q = (I + l^2 T + l T^2)/3, R = (I + l T + l^2 T^2)/3 with l = e^{2 pi i/3}."""
    T = _as_operand(T)
    lam = CUBE_ROOT
    coeffs = {
        "P": (1 / 3, 1 / 3, 1 / 3),
        "Q": (lam / 3, lam**2 / 3, 1 / 3),
        "R": (lam**2 / 3, lam / 3, 1 / 3),
    }
    parts = {name: _quadratic(T, *c) for name, c in coeffs.items()}
    return GTCPTriple(
        parts["P"], parts["Q"], parts["R"], EigenPair.cube_roots(),
        formulas={"P": "(I + T + T^2)/3", "Q": "(I + l^2 T + l T^2)/3", "R": "(I + l T + l^2 T^2)/3"},
    )


class Order4Candidate(NamedTuple):
    family: Family
    sign: int
    triple: GTCPTriple


def _order4_coefficients(family: Family, s: int) -> Tuple[EigenPair, Dict[str, Tuple[complex, complex, complex]]]:
    si = s * 1j
    if family is Family.ORDER4_PMQ_IR:
        pair = EigenPair(-1.0, si)
        coeffs = {
            "P": ((1 + si) / 4, 2 / 4, (1 - si) / 4),
            "Q": ((1 - si) / 4, -2 / 4, (1 + si) / 4),
            "R": (-1 / 2, 0, 1 / 2),
        }
    elif family is Family.ORDER4_P_IQ_MR:
        pair = EigenPair(si, -1.0)
        coeffs = {
            "P": ((1 + si) / 4, 2 / 4, (1 - si) / 4),
            "Q": (-1 / 2, 0, 1 / 2),
            "R": ((1 - si) / 4, -2 / 4, (1 + si) / 4),
        }
    elif family is Family.ORDER4_P_IQ_MIR:
        pair = EigenPair(si, -si)
        coeffs = {
            "P": (1 / 2, 0, 1 / 2),
            "Q": ((-1 + si) / 4, -2 * si / 4, (1 + si) / 4),
            "R": ((-1 - si) / 4, 2 * si / 4, (1 - si) / 4),
        }
    else:
        raise ValueError(f"{family} is not an order-4 family")
    return pair, coeffs


ORDER4_SEARCH = (
    (Family.ORDER4_PMQ_IR, 1),
    (Family.ORDER4_PMQ_IR, -1),
    (Family.ORDER4_P_IQ_MR, 1),
    (Family.ORDER4_P_IQ_MR, -1),
    (Family.ORDER4_P_IQ_MIR, 1),
    (Family.ORDER4_P_IQ_MIR, -1),
)


def order4_candidates(T) -> List[Order4Candidate]:
    """Closed-form triples of the three order-4 families, both signs, in search order."""
    T = _as_operand(T)
    out = []
    for family, s in ORDER4_SEARCH:
        pair, coeffs = _order4_coefficients(family, s)
        parts = {name: _quadratic(T, *c) for name, c in coeffs.items()}
        triple = GTCPTriple(
            parts["P"], parts["Q"], parts["R"], pair,
            formulas={name: _format_quadratic(*c) for name, c in coeffs.items()},
        )
        out.append(Order4Candidate(family, s, triple))
    return out


def _candidate_label(family: Family, sign: int) -> str:
    return f"{family.value}{'+' if sign > 0 else '-'}"


# Classification

def _check_p(op: Operator) -> None:
    if not op.p.is_infinite and abs(op.p.p - 2) <= 1e-9:
        raise PEqualsTwo("p = 2 admits unitary operators outside the classified families")


def _degenerate(T: Atom, n: int, samples, grid, tol: float) -> ClassificationReport:
    triple = gtcp_from_isometry(T, DEGENERACY_PAIR, samples, grid, tol)
    report = verify_triple(triple, T, samples, grid, tol)
    sizes = {name: _size(X, samples, grid) for name, X in triple.items()}
    vanishing = [name for name, size in sizes.items() if size < settings.nonzero_threshold]
    head = "T = I" if n == 1 else f"T^{n} = I"
    reason = f"{head}: {' = '.join(vanishing)} = 0" if vanishing else f"{head}: no projection vanishes"
    return ClassificationReport(
        family=Family.DEGENERATE,
        tolerance=tol,
        lambda1=DEGENERACY_PAIR.lambda1,
        lambda2=DEGENERACY_PAIR.lambda2,
        verified_power=n,
        residuals=report.residuals,
        formulas=triple.formulas,
        reason=reason,
        vanishing=vanishing,
        details={"projection_sizes": sizes},
        triple=triple,
    )


def _no_gtcp(op: Operator, n: Optional[int], power_residuals: Dict[int, float], tol: float) -> ClassificationReport:
    details: Dict[str, Any] = {"power_residuals": power_residuals}
    base = op.base if isinstance(op, WeightedCompositionOp2D) else op
    tau_order = order_up_to(op.tau, 3, settings.order_tolerance)
    if tau_order is None:
        result = lagrange_falsifier(base, EigenPair.cube_roots())
        details["falsifier_point"] = result.point
        details["falsifier_residual"] = result.residual
        reason = "automorphism of order > 3: no GTCP"
    else:
        reason = f"automorphism of order {tau_order} but T has no order <= 3: uncalibrated alpha"
        if isinstance(op, WeightedCompositionOp2D) and tau_order == 1:
            try:
                result = sigma_lagrange_falsifier(op, EigenPair.cube_roots())
                details["falsifier_point"] = result.point
                details["falsifier_residual"] = result.residual
                reason = "tau = id and sigma admits a separated w-orbit: no GTCP"
            except OrbitDegenerate:
                pass
    if n is None:
        reason = f"no finite order <= 4; {reason}"
    else:
        reason = f"T^{n} = I; {reason}"
    return ClassificationReport(
        family=Family.DEGENERATE,
        tolerance=tol,
        verified_power=n,
        reason=reason,
        details=details,
    )


def _order3_report(T: Atom, samples, grid, tol: float, power_residuals) -> ClassificationReport:
    triple = order3_triple(T)
    report = verify_triple(triple, T, samples, grid, tol)
    triple.residuals = dict(report.residuals)
    residuals = dict(report.residuals)
    residuals["T^3-I"] = power_residuals[3]
    return ClassificationReport(
        family=Family.ORDER3,
        tolerance=tol,
        lambda1=triple.eigenpair.lambda1,
        lambda2=triple.eigenpair.lambda2,
        verified_power=3,
        residuals=residuals,
        formulas=triple.formulas,
        triple=triple,
    )


def matrix_crosscheck(P: OperatorExpr, degree: Optional[int] = None, points: int = 16) -> float:
    """
    Largest deviation, at points of radius 1/2, between the materialized
    projection applied to 1, z, z^2 and the pointwise projection.
    """
    degree = settings.crosscheck_degree if degree is None else degree
    matrix = materialize_matrix(P, degree)
    z = 0.5 * np.exp(2j * np.pi * np.arange(points) / points)
    worst = 0.0
    for k in range(3):
        f = TruncatedSeries1D.monomial(k, degree)
        via_matrix = matrix.apply_to(f)(z)
        worst = max(worst, float(np.max(np.abs(via_matrix - act(P, f)(z)))))
    return worst


def classify_1d(T: WeightedCompositionOp1D, samples=None, grid: Optional[BoundaryGrid] = None,
                tol: Optional[float] = None, seed: Optional[int] = None) -> ClassificationReport:
    """
    Decide which tri-circular decomposition, if any, the isometry T carries.

    T^3 = I gives the order-3 family; T = I and T^2 = I are degenerate with
    vanishing projections named; anything else is degenerate, with the
    Lagrange falsifier residual attached when tau has no order <= 3.

    Raises:
        PEqualsTwo: for p = 2
    """
    _check_p(T)
    tol = settings.operator_tolerance if tol is None else tol
    grid = grid or BoundaryGrid(settings.order_check_points)
    samples = samples if samples is not None else _default_samples(1, seed)
    expr = Atom(T)
    n, power_residuals = operator_order(expr, samples, grid, 4, settings.power_tolerance)
    logger.debug("operator order %s (residuals %s)", n, power_residuals)

    if n == 3:
        report = _order3_report(expr, samples, grid, tol, power_residuals)
        report.details["matrix_crosscheck"] = matrix_crosscheck(report.triple.P)
        return report
    if n in (1, 2):
        return _degenerate(expr, n, samples, grid, tol)
    return _no_gtcp(T, n, power_residuals, tol)


def classify_2d(T: WeightedCompositionOp2D, samples=None, grid: Optional[BoundaryGrid] = None,
                tol: Optional[float] = None, seed: Optional[int] = None) -> ClassificationReport:
    """
    Two-variable classification: order 3 gives the order-3 family; order 4 is
    resolved by trying every closed-form order-4 candidate and keeping the
    first whose triple verifies with three nonzero projections.

    Raises:
        PEqualsTwo: for p = 2
        NoFamilyMatches: if T^4 = I but no candidate verifies on the samples
    """
    _check_p(T)
    tol = settings.operator_tolerance if tol is None else tol
    grid = grid or BoundaryGrid(settings.order_check_points)
    samples = samples if samples is not None else _default_samples(2, seed)
    expr = Atom(T)
    n, power_residuals = operator_order(expr, samples, grid, 4, settings.power_tolerance)
    logger.debug("operator order %s (residuals %s)", n, power_residuals)

    if n == 3:
        return _order3_report(expr, samples, grid, tol, power_residuals)
    if n in (1, 2):
        return _degenerate(expr, n, samples, grid, tol)
    if n != 4:
        return _no_gtcp(T, n, power_residuals, tol)

    verified = []
    for candidate in order4_candidates(expr):
        report = verify_triple(candidate.triple, expr, samples, grid, tol)
        sizes = {name: _size(X, samples, grid) for name, X in candidate.triple.items()}
        nonzero = all(size > settings.nonzero_threshold for size in sizes.values())
        logger.debug("candidate %s: max residual %.3e, sizes %s",
                     _candidate_label(candidate.family, candidate.sign), report.max_residual, sizes)
        if report.passed and nonzero:
            candidate.triple.residuals = dict(report.residuals)
            verified.append(candidate)
    if not verified:
        raise NoFamilyMatches("T^4 = I but no order-4 family verifies on the samples")

    chosen = verified[0]
    residuals = dict(chosen.triple.residuals)
    residuals["T^4-I"] = power_residuals[4]
    return ClassificationReport(
        family=chosen.family,
        tolerance=tol,
        lambda1=chosen.triple.eigenpair.lambda1,
        lambda2=chosen.triple.eigenpair.lambda2,
        verified_power=4,
        sign=chosen.sign,
        residuals=residuals,
        formulas=chosen.triple.formulas,
        alternatives=[_candidate_label(c.family, c.sign) for c in verified[1:]],
        triple=chosen.triple,
    )
