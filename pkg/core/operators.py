"""
Weighted composition operators on H^p of the disc and bidisc.

An operator acts on evaluables (callables of one or two complex arguments),
so every identity between operators is checked pointwise without
truncation. Operator expressions form a small tree algebra over the atoms;
``materialize_matrix`` turns an expression into its matrix on monomials.
"""

import math
from dataclasses import dataclass
from numbers import Number
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from config.settings import settings
from core.errors import DepthExceeded, NotFiniteOrder, NotUnimodular
from core.hardy import BoundaryGrid, PNormSpec, hp_norm_1d, hp_norm_2d
from core.moebius import DiscAutomorphism, order_up_to, to_series
from core.reports import CheckReport
from core.series import Series, TruncatedSeries1D, TruncatedSeries2D, fractional_power, multiply
from utils.console import get_logger


logger = get_logger(__name__)

UNIMODULAR_TOL = 1e-12


def _check_unimodular(value: complex, what: str) -> complex:
    value = complex(value)
    if abs(abs(value) - 1) > UNIMODULAR_TOL:
        raise NotUnimodular(f"|{what}| = {abs(value):.15f}, expected 1")
    return value


@dataclass(frozen=True)
class UnimodularMonomial:
    """sigma(z) = c z^k with |c| = 1."""

    c: complex = 1 + 0j
    k: int = 0

    def __post_init__(self):
        object.__setattr__(self, "c", _check_unimodular(self.c, "sigma.c"))
        if int(self.k) != self.k or self.k < 0:
            raise ValueError(f"sigma exponent must be a nonnegative integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))

    def __call__(self, z):
        return self.c * np.asarray(z, dtype=complex) ** self.k

    def to_dict(self) -> Dict[str, Any]:
        return {"c": [self.c.real, self.c.imag], "k": self.k}


@dataclass(frozen=True)
class WeightedCompositionOp1D:
    """(Tf)(z) = alpha (tau'(z))^{1/p} f(tau(z)); the weight is 1 for p = inf or weighted=False."""

    alpha: complex
    tau: DiscAutomorphism
    p: PNormSpec
    weighted: bool = True

    dimension = 1

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_unimodular(self.alpha, "alpha"))
        object.__setattr__(self, "p", PNormSpec.parse(self.p))

    @property
    def has_weight(self) -> bool:
        return self.weighted and not self.p.is_infinite

    def weight(self, z):
        """
        Canonical branch of (tau')^{1/p}:
        e^{i theta/p} (1 - |a|^2)^{1/p} (1 - conj(a) z)^{-2/p}, principal log of 1 - conj(a) z.
        """
        z = np.asarray(z, dtype=complex)
        if not self.has_weight:
            return np.ones(z.shape, dtype=complex)
        p, a = self.p.p, self.tau.a
        const = np.exp(1j * self.tau.theta / p) * (1 - abs(a) ** 2) ** (1 / p)
        return const * np.exp(-(2 / p) * np.log(1 - np.conj(a) * z))

    def weight_series(self, degree: int) -> TruncatedSeries1D:
        if not self.has_weight:
            return TruncatedSeries1D.constant(1.0, degree)
        p, a = self.p.p, self.tau.a
        const = np.exp(1j * self.tau.theta / p) * (1 - abs(a) ** 2) ** (1 / p)
        base = TruncatedSeries1D([1.0, -np.conj(a)]).pad(degree)
        return fractional_power(base, -2 / p) * const

    def act(self, f):
        return lambda z: self.alpha * self.weight(z) * f(self.tau(z))

    def as_expr(self) -> "Atom":
        return Atom(self)

    def with_alpha(self, alpha: complex) -> "WeightedCompositionOp1D":
        return WeightedCompositionOp1D(alpha, self.tau, self.p, self.weighted)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": [self.alpha.real, self.alpha.imag],
            "tau": self.tau.to_dict(),
            "p": self.p.to_json(),
            "weighted": self.weighted,
        }


@dataclass(frozen=True)
class WeightedCompositionOp2D:
    """(Tf)(z, w) = alpha (tau'(z))^{1/p} f(tau(z), w sigma(z))."""

    alpha: complex
    tau: DiscAutomorphism
    sigma: UnimodularMonomial
    p: PNormSpec
    weighted: bool = True

    dimension = 2

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_unimodular(self.alpha, "alpha"))
        object.__setattr__(self, "p", PNormSpec.parse(self.p))

    @property
    def base(self) -> WeightedCompositionOp1D:
        """The one-variable operator carrying the same alpha, tau and weight."""
        return WeightedCompositionOp1D(self.alpha, self.tau, self.p, self.weighted)

    def weight(self, z):
        return self.base.weight(z)

    def act(self, f):
        def image(z, w):
            z = np.asarray(z, dtype=complex)
            return self.alpha * self.weight(z) * f(self.tau(z), np.asarray(w, dtype=complex) * self.sigma(z))
        return image

    def as_expr(self) -> "Atom":
        return Atom(self)

    def with_alpha(self, alpha: complex) -> "WeightedCompositionOp2D":
        return WeightedCompositionOp2D(alpha, self.tau, self.sigma, self.p, self.weighted)

    def to_dict(self) -> Dict[str, Any]:
        data = self.base.to_dict()
        data["sigma"] = self.sigma.to_dict()
        return data


Operator = Union[WeightedCompositionOp1D, WeightedCompositionOp2D]


# Expression tree

class OperatorExpr:
    """Base node; supports +, -, scalar *, @ (composition) and ** (powers)."""

    def __add__(self, other):
        return Sum(self, _lift(other))

    def __radd__(self, other):
        return Sum(_lift(other), self)

    def __neg__(self):
        return Scale(-1.0, self)

    def __sub__(self, other):
        return Sum(self, Scale(-1.0, _lift(other)))

    def __rsub__(self, other):
        return Sum(_lift(other), Scale(-1.0, self))

    def __mul__(self, other):
        if isinstance(other, OperatorExpr):
            return compose_expr(self, other)
        return Scale(complex(other), self)

    def __rmul__(self, other):
        return Scale(complex(other), self)

    def __matmul__(self, other):
        return compose_expr(self, _lift(other))

    def __pow__(self, n: int):
        if int(n) != n or n < 0:
            raise ValueError(f"operator powers must be nonnegative integers, got {n}")
        return Identity() if n == 0 else Power(self, int(n))


@dataclass(frozen=True, eq=False)
class Identity(OperatorExpr):
    pass


@dataclass(frozen=True, eq=False)
class Atom(OperatorExpr):
    op: Operator


@dataclass(frozen=True, eq=False)
class Scale(OperatorExpr):
    factor: complex
    expr: OperatorExpr


@dataclass(frozen=True, eq=False)
class Sum(OperatorExpr):
    left: OperatorExpr
    right: OperatorExpr


@dataclass(frozen=True, eq=False)
class Compose(OperatorExpr):
    """left o right: right acts first."""

    left: OperatorExpr
    right: OperatorExpr


@dataclass(frozen=True, eq=False)
class Power(OperatorExpr):
    expr: OperatorExpr
    n: int


def _lift(value) -> OperatorExpr:
    if isinstance(value, OperatorExpr):
        return value
    if isinstance(value, (WeightedCompositionOp1D, WeightedCompositionOp2D)):
        return Atom(value)
    if isinstance(value, Number):
        return Scale(complex(value), Identity())
    raise TypeError(f"cannot use {type(value).__name__} in an operator expression")


def compose_expr(left: OperatorExpr, right: OperatorExpr) -> OperatorExpr:
    """Composition kept as a left-normalized chain."""
    if isinstance(left, Identity):
        return right
    if isinstance(right, Identity):
        return left
    if isinstance(right, Compose):
        return compose_expr(compose_expr(left, right.left), right.right)
    return Compose(left, right)


def expression_depth(expr: OperatorExpr) -> int:
    """Number of atom applications along the deepest path."""
    if isinstance(expr, Identity):
        return 0
    if isinstance(expr, Atom):
        return 1
    if isinstance(expr, Scale):
        return expression_depth(expr.expr)
    if isinstance(expr, Sum):
        return max(expression_depth(expr.left), expression_depth(expr.right))
    if isinstance(expr, Compose):
        return expression_depth(expr.left) + expression_depth(expr.right)
    if isinstance(expr, Power):
        return expr.n * expression_depth(expr.expr)
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def expression_dimension(expr: OperatorExpr) -> Optional[int]:
    """1 or 2 from the atoms; None for atom-free expressions."""
    dims = set()

    def walk(node):
        if isinstance(node, Atom):
            dims.add(node.op.dimension)
        elif isinstance(node, (Scale, Power)):
            walk(node.expr)
        elif isinstance(node, (Sum, Compose)):
            walk(node.left)
            walk(node.right)

    walk(expr)
    if len(dims) > 1:
        raise ValueError("expression mixes one- and two-variable operators")
    return dims.pop() if dims else None


def _act(expr: OperatorExpr, f):
    if isinstance(expr, Identity):
        return f
    if isinstance(expr, Atom):
        return expr.op.act(f)
    if isinstance(expr, Scale):
        g, c = _act(expr.expr, f), expr.factor
        return lambda *x: c * g(*x)
    if isinstance(expr, Sum):
        g1, g2 = _act(expr.left, f), _act(expr.right, f)
        return lambda *x: g1(*x) + g2(*x)
    if isinstance(expr, Compose):
        return _act(expr.left, _act(expr.right, f))
    if isinstance(expr, Power):
        g = f
        for _ in range(expr.n):
            g = _act(expr.expr, g)
        return g
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def act(expr: Union[OperatorExpr, Operator], f):
    """
    Return the evaluable expr(f).

    Raises:
        DepthExceeded: if the expression nests more than
            ``settings.max_composition_depth`` atom applications
    """
    expr = _lift(expr)
    depth = expression_depth(expr)
    if depth > settings.max_composition_depth:
        raise DepthExceeded(f"composition depth {depth} exceeds {settings.max_composition_depth}")
    return _act(expr, f)


def apply(expr: Union[OperatorExpr, Operator], f, *points):
    """Evaluate expr(f) at the given point(s)."""
    return act(expr, f)(*points)


# Weights and calibration

def iterated_weight(T: WeightedCompositionOp1D, n: int, z):
    """alpha^n * prod_{k<n} w(tau^k(z)), the multiplier of T^n f = m * f o tau^n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    z = np.asarray(z, dtype=complex)
    out = np.full(z.shape, T.alpha**n, dtype=complex)
    point = z
    for _ in range(n):
        out = out * T.weight(point)
        point = T.tau(point)
    return complex(out) if out.ndim == 0 else out


def calibrate_alpha(tau: DiscAutomorphism, n: int, p: Union[PNormSpec, float, str], weighted: bool = True) -> complex:
    """
    The alpha making T^n = I for an automorphism of exact order n.

    With alpha = 1 the multiplier of T^n is a unimodular constant omega; the
    principal n-th root of 1/omega is returned.

    Raises:
        NotFiniteOrder: if tau does not have order exactly n
    """
    found = order_up_to(tau, n, settings.order_tolerance)
    if found != n:
        raise NotFiniteOrder(f"automorphism has order {found if found else '>' + str(n)}, expected {n}")
    unit_op = WeightedCompositionOp1D(1.0, tau, PNormSpec.parse(p), weighted)
    omega = iterated_weight(unit_op, n, 0.0)
    if abs(abs(omega) - 1) > 1e-9:
        logger.warning("branch constant has modulus %.12f", abs(omega))
    alpha = complex(np.exp(-1j * np.angle(omega) / n))
    logger.debug("calibrated alpha=%s for order %d at p=%s", alpha, n, unit_op.p)
    return alpha


def monomial_eigenvalue(op: WeightedCompositionOp2D, n: int, m: int) -> complex:
    """Eigenvalue on z^n w^m of a rotation-type operator (a = 0, sigma constant)."""
    if abs(op.tau.a) > 0 or op.sigma.k != 0:
        raise ValueError("monomials are eigenvectors only when a = 0 and sigma is constant")
    u = np.exp(1j * op.tau.theta)
    weight = np.exp(1j * op.tau.theta / op.p.p) if op.base.has_weight else 1.0
    return complex(op.alpha * weight * u**n * op.sigma.c**m)


# Matrices on the monomial basis

@dataclass
class MaterializedMatrix:
    """Matrix of an expression; 2D expressions give one block per w-degree m."""

    matrix: np.ndarray
    truncation_error: float

    @property
    def is_block(self) -> bool:
        return self.matrix.ndim == 3

    def apply_to(self, f: Series) -> Series:
        if self.is_block:
            m_count, size, _ = self.matrix.shape
            coeffs = f.pad((size - 1, m_count - 1)).coeffs
            out = np.stack([self.matrix[m] @ coeffs[:, m] for m in range(m_count)], axis=1)
            return TruncatedSeries2D(out)
        size = self.matrix.shape[0]
        return TruncatedSeries1D(self.matrix @ f.pad(size - 1).coeffs)


def _atom_matrix(op: Operator, degree: int, m: int) -> np.ndarray:
    base = op.base if isinstance(op, WeightedCompositionOp2D) else op
    weight = base.weight_series(degree) * op.alpha
    if isinstance(op, WeightedCompositionOp2D) and m:
        weight = multiply(weight, TruncatedSeries1D.monomial(op.sigma.k * m, degree, op.sigma.c**m), degree)
    tau = to_series(op.tau, degree)
    cols = np.zeros((degree + 1, degree + 1), dtype=complex)
    power = TruncatedSeries1D.constant(1.0, degree)
    for j in range(degree + 1):
        cols[:, j] = multiply(weight, power, degree).coeffs
        power = multiply(power, tau, degree)
    return cols


def _matrix_of(expr: OperatorExpr, degree: int, m: int, cache: Dict[int, np.ndarray]) -> np.ndarray:
    if isinstance(expr, Identity):
        return np.eye(degree + 1, dtype=complex)
    if isinstance(expr, Atom):
        key = id(expr.op)
        if key not in cache:
            cache[key] = _atom_matrix(expr.op, degree, m)
        return cache[key]
    if isinstance(expr, Scale):
        return expr.factor * _matrix_of(expr.expr, degree, m, cache)
    if isinstance(expr, Sum):
        return _matrix_of(expr.left, degree, m, cache) + _matrix_of(expr.right, degree, m, cache)
    if isinstance(expr, Compose):
        return _matrix_of(expr.left, degree, m, cache) @ _matrix_of(expr.right, degree, m, cache)
    if isinstance(expr, Power):
        return np.linalg.matrix_power(_matrix_of(expr.expr, degree, m, cache), expr.n)
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def materialize_matrix(expr: Union[OperatorExpr, Operator], degree: int,
                       w_degree: Optional[int] = None) -> MaterializedMatrix:
    """
    Matrix of expr on 1, z, ..., z^degree.

    Atoms are expanded to twice the requested degree and the expression is
    evaluated there before cutting back; the largest coefficient cut off
    below the returned block is reported as the truncation error. For
    two-variable expressions the result stacks one block per power of w,
    m = 0..w_degree (default ``degree``).
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    expr = _lift(expr)
    inner = 2 * degree + 1
    dim = expression_dimension(expr) or 1
    m_values = range((degree if w_degree is None else w_degree) + 1) if dim == 2 else [0]
    blocks, dropped = [], 0.0
    for m in m_values:
        full = _matrix_of(expr, inner, m, {})
        blocks.append(full[: degree + 1, : degree + 1])
        if inner > degree:
            dropped = max(dropped, float(np.max(np.abs(full[degree + 1:, : degree + 1]))))
    matrix = np.stack(blocks) if dim == 2 else blocks[0]
    return MaterializedMatrix(matrix, dropped)


# Isometry verification

def verify_isometry(
    op: Union[Operator, OperatorExpr],
    samples: Sequence[Series],
    grid: Optional[BoundaryGrid] = None,
    tol: Optional[float] = None,
    p: Optional[PNormSpec] = None,
) -> CheckReport:
    """Largest |‖Tf‖_p - ‖f‖_p| over the samples, with p taken from the operator unless given."""
    grid = grid or BoundaryGrid(settings.default_grid_size)
    tol = settings.norm_tolerance if tol is None else tol
    if p is None:
        if isinstance(op, OperatorExpr):
            raise ValueError("an explicit p is needed to verify an expression")
        p = op.p
    spec = PNormSpec.parse(p)
    expr = _lift(op)
    two_variable = expression_dimension(expr) == 2
    norm = hp_norm_2d if two_variable else hp_norm_1d
    residuals: List[float] = []
    for f in samples:
        residuals.append(abs(norm(act(expr, f), spec, grid) - norm(f, spec, grid)))
    logger.debug("isometry residual %.3e over %d samples at p=%s", max(residuals, default=0.0), len(residuals), spec)
    details: Dict[str, Any] = {"p": spec.to_json()}
    if not isinstance(op, OperatorExpr):
        details["operator"] = op.to_dict()
    return CheckReport(
        check="isometry",
        residuals={"norm": max(residuals, default=0.0)},
        tolerance=tol,
        grid_size=grid.size,
        sample_residuals={"norm": residuals},
        details=details,
    )
