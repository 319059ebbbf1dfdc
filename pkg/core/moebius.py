"""Automorphisms of the unit disc in the normal form e^{i theta} (z - a) / (1 - conj(a) z)."""

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from core.errors import InvalidAutomorphism, InvalidOrder, PoleProximity
from core.series import TruncatedSeries1D


TWO_PI = 2 * math.pi

# Parameters must stay this far inside the unit disc.
DISC_MARGIN = 1e-9
POLE_TOL = 1e-12
ORDER_SAMPLES = 32


def _normalize_angle(theta: float) -> float:
    theta = math.fmod(float(theta), TWO_PI)
    if theta < 0:
        theta += TWO_PI
    # fmod can leave values a rounding error below 2*pi
    if TWO_PI - theta < 1e-14:
        theta = 0.0
    return theta


@dataclass(frozen=True)
class DiscAutomorphism:
    """tau(z) = e^{i theta} (z - a) / (1 - conj(a) z) with |a| < 1."""

    theta: float = 0.0
    a: complex = 0j

    def __post_init__(self):
        a = complex(self.a)
        if not (math.isfinite(a.real) and math.isfinite(a.imag)) or abs(a) >= 1 - DISC_MARGIN:
            raise InvalidAutomorphism(f"automorphism parameter |a| = {abs(a):.12f} is not inside the disc")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "theta", _normalize_angle(self.theta))

    @classmethod
    def identity(cls) -> "DiscAutomorphism":
        return cls(0.0, 0j)

    @classmethod
    def rotation(cls, theta: float) -> "DiscAutomorphism":
        return cls(theta, 0j)

    @classmethod
    def involution(cls, a: complex) -> "DiscAutomorphism":
        """phi_a(z) = (a - z) / (1 - conj(a) z), which swaps 0 and a."""
        return cls(math.pi, a)

    @property
    def rotation_factor(self) -> complex:
        return complex(math.cos(self.theta), math.sin(self.theta))

    def __call__(self, z):
        return evaluate(self, z)

    def __matmul__(self, other: "DiscAutomorphism") -> "DiscAutomorphism":
        return compose(self, other)

    def to_dict(self) -> Dict[str, Any]:
        return {"theta": self.theta, "a": [self.a.real, self.a.imag]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DiscAutomorphism":
        re, im = data.get("a", [0.0, 0.0])
        return cls(float(data.get("theta", 0.0)), complex(re, im))


def _denominator(tau: DiscAutomorphism, z):
    z = np.asarray(z, dtype=complex)
    den = 1 - np.conj(tau.a) * z
    if np.any(np.abs(den) <= POLE_TOL):
        raise PoleProximity(f"point too close to the pole 1/conj(a) of an automorphism with a = {tau.a}")
    return z, den


def evaluate(tau: DiscAutomorphism, z):
    """Evaluate tau at a point or array of points."""
    z, den = _denominator(tau, z)
    out = tau.rotation_factor * (z - tau.a) / den
    return complex(out) if out.ndim == 0 else out


def derivative_at(tau: DiscAutomorphism, z):
    """tau'(z) = e^{i theta} (1 - |a|^2) / (1 - conj(a) z)^2."""
    z, den = _denominator(tau, z)
    out = tau.rotation_factor * (1 - abs(tau.a) ** 2) / den**2
    return complex(out) if out.ndim == 0 else out


def inverse(tau: DiscAutomorphism) -> DiscAutomorphism:
    """The inverse has rotation -theta and parameter -a e^{i theta}."""
    return DiscAutomorphism(-tau.theta, -tau.a * tau.rotation_factor)


def compose(outer: DiscAutomorphism, inner: DiscAutomorphism) -> DiscAutomorphism:
    """
    Normal form of outer o inner.

    The new parameter is the preimage of 0, and the rotation is read off from
    the derivative there: arg(tau'(a') (1 - |a'|^2)).
    """
    # (outer o inner)^{-1}(0) = inner^{-1}(outer^{-1}(0)) = inner^{-1}(outer.a)
    a_new = evaluate(inverse(inner), outer.a)
    slope = derivative_at(outer, evaluate(inner, a_new)) * derivative_at(inner, a_new)
    theta_new = np.angle(slope * (1 - abs(a_new) ** 2))
    return DiscAutomorphism(float(theta_new), a_new)


def power(tau: DiscAutomorphism, n: int) -> DiscAutomorphism:
    """n-fold composite of tau with itself; negative n iterates the inverse."""
    base = inverse(tau) if n < 0 else tau
    result = DiscAutomorphism.identity()
    for _ in range(abs(n)):
        result = compose(base, result)
    return result


def boundary_samples(count: int = ORDER_SAMPLES) -> np.ndarray:
    """Boundary points offset from the roots of unity so they never hit a pole."""
    t = TWO_PI * (np.arange(count) + 0.37) / count
    return np.exp(1j * t)


def order_up_to(tau: DiscAutomorphism, n_max: int, tol: float = 1e-9) -> Optional[int]:
    """
    Smallest n <= n_max with tau^n = id on the boundary samples, or None.

    Iterates the map pointwise rather than composing parameters, so the
    check does not accumulate normal-form round-off.
    """
    if n_max < 1:
        raise InvalidOrder(f"n_max must be >= 1, got {n_max}")
    z0 = boundary_samples()
    z = z0.copy()
    for n in range(1, n_max + 1):
        z = evaluate(tau, z)
        if np.max(np.abs(z - z0)) < tol:
            return n
    return None


def elliptic_of_order(n: int, a: complex = 0j) -> DiscAutomorphism:
    """
    Elliptic automorphism of exact order n fixing a.

    Built as phi_a o rho o phi_a, where rho is the rotation by 2*pi/n and
    phi_a the involution swapping 0 and a.

    Raises:
        InvalidOrder: if n < 1
    """
    if int(n) != n or n < 1:
        raise InvalidOrder(f"order must be a positive integer, got {n}")
    if n == 1:
        return DiscAutomorphism.identity()
    phi = DiscAutomorphism.involution(a)
    return compose(phi, compose(DiscAutomorphism.rotation(TWO_PI / n), phi))


def fixed_point(tau: DiscAutomorphism, tol: float = 1e-12) -> Optional[complex]:
    """
    Interior fixed point of an elliptic automorphism, None if there is none.

    Fixed points solve conj(a) z^2 + (e^{i theta} - 1) z - e^{i theta} a = 0.
    Rotations (the identity included) report 0.
    """
    u = tau.rotation_factor
    if abs(tau.a) <= tol:
        return 0j
    roots = np.roots([np.conj(tau.a), u - 1, -u * tau.a])
    inside = [complex(r) for r in roots if abs(r) < 1 - tol]
    return inside[0] if inside else None


def to_series(tau: DiscAutomorphism, degree: int) -> TruncatedSeries1D:
    """Taylor coefficients of tau at 0: c_0 = -a e^{i theta}, c_n = e^{i theta} conj(a)^{n-1} (1 - |a|^2)."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    u = tau.rotation_factor
    coeffs = np.zeros(degree + 1, dtype=complex)
    coeffs[0] = -u * tau.a
    if degree >= 1:
        n = np.arange(1, degree + 1)
        coeffs[1:] = u * np.conj(tau.a) ** (n - 1) * (1 - abs(tau.a) ** 2)
    return TruncatedSeries1D(coeffs)
