"""Report objects returned by checks and classifiers, serializable to JSON."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np


def to_jsonable(value: Any) -> Any:
    """Convert complex numbers, numpy scalars/arrays and report objects to JSON-ready values."""
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


@dataclass
class CheckReport:
    """Outcome of a residual-based verification.

    ``verdict`` defaults to "pass" exactly when every residual is below
    ``tolerance``; callers with a different acceptance rule pass it explicitly.
    """

    check: str
    residuals: Dict[str, float]
    tolerance: float
    grid_size: Optional[int] = None
    witness: Any = None
    sample_residuals: Dict[str, List[float]] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)
    verdict: Optional[str] = None

    def __post_init__(self):
        self.residuals = {k: float(v) for k, v in self.residuals.items()}
        if self.verdict is None:
            ok = all(np.isfinite(v) and v < self.tolerance for v in self.residuals.values())
            self.verdict = "pass" if ok else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "check": self.check,
            "residuals": self.residuals,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "grid_size": self.grid_size,
        }
        if self.witness is not None:
            data["witness"] = to_jsonable(self.witness)
        if self.details:
            data["details"] = to_jsonable(self.details)
        return data


class Family(str, Enum):
    """Closed-form families of generalized tri-circular projections."""

    ORDER3 = "Order3"
    # T = P - Q +/- iR
    ORDER4_PMQ_IR = "Order4_PmQ_iR"
    # T = P +/- iQ - R
    ORDER4_P_IQ_MR = "Order4_P_iQ_mR"
    # T = P +/- iQ -/+ iR
    ORDER4_P_IQ_MIR = "Order4_P_iQ_miR"
    DEGENERATE = "Degenerate"


@dataclass
class ClassificationReport:
    family: Family
    tolerance: float
    lambda1: Optional[complex] = None
    lambda2: Optional[complex] = None
    verified_power: Optional[int] = None
    sign: Optional[int] = None
    residuals: Dict[str, float] = field(default_factory=dict)
    formulas: Dict[str, str] = field(default_factory=dict)
    reason: Optional[str] = None
    vanishing: List[str] = field(default_factory=list)
    alternatives: List[str] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)
    triple: Any = None

    @property
    def label(self) -> str:
        if self.sign is None or self.family in (Family.ORDER3, Family.DEGENERATE):
            return self.family.value
        return f"{self.family.value}{'+' if self.sign > 0 else '-'}"

    @property
    def verdict(self) -> str:
        if self.family is Family.DEGENERATE:
            return "fail"
        ok = all(np.isfinite(v) and v < self.tolerance for v in self.residuals.values())
        return "pass" if ok else "fail"

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "family": self.family.value,
            "sign": self.sign,
            "lambda1": to_jsonable(self.lambda1),
            "lambda2": to_jsonable(self.lambda2),
            "verified_power": self.verified_power,
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "formulas": self.formulas,
            "vanishing": self.vanishing,
            "alternatives": self.alternatives,
        }
        if self.reason:
            data["reason"] = self.reason
        if self.details:
            data["details"] = to_jsonable(self.details)
        return data
