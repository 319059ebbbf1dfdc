"""File schemas for series, automorphisms and operators, plus report writers."""

import json
import math
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import pandas as pd
from pydantic import BaseModel, Field, field_validator, model_validator

from core.hardy import PNormSpec
from core.moebius import DiscAutomorphism, order_up_to
from core.operators import (
    Atom,
    Compose,
    Identity,
    OperatorExpr,
    Power,
    Scale,
    Sum,
    UnimodularMonomial,
    WeightedCompositionOp1D,
    WeightedCompositionOp2D,
    calibrate_alpha,
)
from core.reports import to_jsonable
from core.series import TruncatedSeries1D, TruncatedSeries2D


ComplexPair = Tuple[float, float]

# Largest order searched when an operator file asks for calibration without one.
CALIBRATION_MAX_ORDER = 12


def _complex(pair: ComplexPair) -> complex:
    return complex(pair[0], pair[1])


class SeriesFile(BaseModel):
    degree: int = Field(ge=0)
    coeffs: List[ComplexPair]

    @model_validator(mode="after")
    def check_length(self):
        if len(self.coeffs) != self.degree + 1:
            raise ValueError(f"coeffs has {len(self.coeffs)} entries, degree {self.degree} needs {self.degree + 1}")
        return self

    def to_domain(self) -> TruncatedSeries1D:
        return TruncatedSeries1D([_complex(c) for c in self.coeffs])


class SeriesFile2D(BaseModel):
    bidegree: Tuple[int, int]
    coeffs: List[List[ComplexPair]]

    @model_validator(mode="after")
    def check_shape(self):
        N, M = self.bidegree
        if N < 0 or M < 0:
            raise ValueError("bidegree must be nonnegative")
        if len(self.coeffs) != N + 1 or any(len(row) != M + 1 for row in self.coeffs):
            raise ValueError(f"coeffs must be a {N + 1} x {M + 1} array of [re, im] pairs")
        return self

    def to_domain(self) -> TruncatedSeries2D:
        return TruncatedSeries2D([[_complex(c) for c in row] for row in self.coeffs])


class AutomorphismModel(BaseModel):
    theta: float = 0.0
    a: ComplexPair = (0.0, 0.0)

    def to_domain(self) -> DiscAutomorphism:
        return DiscAutomorphism(self.theta, _complex(self.a))


class SigmaModel(BaseModel):
    c: ComplexPair = (1.0, 0.0)
    k: int = Field(default=0, ge=0)

    def to_domain(self) -> UnimodularMonomial:
        return UnimodularMonomial(_complex(self.c), self.k)


class OperatorSpecModel(BaseModel):
    """
    Operator file. ``alpha`` is [re, im] or the string "calibrate"; with
    calibration, ``order`` names the order of tau (found by search if omitted).
    """

    alpha: Union[ComplexPair, str] = (1.0, 0.0)
    tau: AutomorphismModel = Field(default_factory=AutomorphismModel)
    p: Union[float, str] = "inf"
    sigma: Optional[SigmaModel] = None
    weighted: bool = True
    order: Optional[int] = Field(default=None, ge=1)

    @field_validator("p")
    @classmethod
    def check_p(cls, value):
        return PNormSpec.parse(value).to_json()

    @field_validator("alpha")
    @classmethod
    def check_alpha(cls, value):
        if isinstance(value, str) and value != "calibrate":
            raise ValueError('alpha must be [re, im] or "calibrate"')
        return value

    def to_domain(self) -> Union[WeightedCompositionOp1D, WeightedCompositionOp2D]:
        tau = self.tau.to_domain()
        p = PNormSpec.parse(self.p)
        if self.alpha == "calibrate":
            order = self.order or order_up_to(tau, CALIBRATION_MAX_ORDER)
            if order is None:
                raise ValueError(f"cannot calibrate alpha: automorphism has no order <= {CALIBRATION_MAX_ORDER}")
            alpha = calibrate_alpha(tau, order, p, self.weighted)
        else:
            alpha = _complex(self.alpha)
        if self.sigma is None:
            return WeightedCompositionOp1D(alpha, tau, p, self.weighted)
        return WeightedCompositionOp2D(alpha, tau, self.sigma.to_domain(), p, self.weighted)


def _read_json(path: Union[str, Path]) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_series(path: Union[str, Path]) -> Union[TruncatedSeries1D, TruncatedSeries2D]:
    data = _read_json(path)
    if isinstance(data, dict) and "bidegree" in data:
        return SeriesFile2D.model_validate(data).to_domain()
    return SeriesFile.model_validate(data).to_domain()


def load_operator(path: Union[str, Path]) -> Union[WeightedCompositionOp1D, WeightedCompositionOp2D]:
    return OperatorSpecModel.model_validate(_read_json(path)).to_domain()


def load_expression(path: Union[str, Path], atom: OperatorExpr) -> OperatorExpr:
    return parse_expression(_read_json(path), atom)


def parse_expression(data: Any, atom: OperatorExpr) -> OperatorExpr:
    """Nested-array form: ["id"], ["atom"], ["sum", e1, e2], ["compose", e1, e2], ["pow", e, n], ["scale", [re, im], e]."""
    if not isinstance(data, list) or not data:
        raise ValueError(f"expression node must be a non-empty list, got {data!r}")
    head, args = data[0], data[1:]
    if head == "id":
        return Identity()
    if head == "atom":
        return atom
    if head == "sum" and len(args) == 2:
        return Sum(parse_expression(args[0], atom), parse_expression(args[1], atom))
    if head == "compose" and len(args) == 2:
        return Compose(parse_expression(args[0], atom), parse_expression(args[1], atom))
    if head == "pow" and len(args) == 2:
        n = int(args[1])
        if n < 0:
            raise ValueError("powers must be nonnegative")
        inner = parse_expression(args[0], atom)
        return Identity() if n == 0 else Power(inner, n)
    if head == "scale" and len(args) == 2:
        return Scale(_complex(args[0]), parse_expression(args[1], atom))
    raise ValueError(f"unknown expression node {head!r}")


def dump_expression(expr: OperatorExpr) -> List[Any]:
    if isinstance(expr, Identity):
        return ["id"]
    if isinstance(expr, Atom):
        return ["atom"]
    if isinstance(expr, Sum):
        return ["sum", dump_expression(expr.left), dump_expression(expr.right)]
    if isinstance(expr, Compose):
        return ["compose", dump_expression(expr.left), dump_expression(expr.right)]
    if isinstance(expr, Power):
        return ["pow", dump_expression(expr.expr), expr.n]
    if isinstance(expr, Scale):
        return ["scale", [expr.factor.real, expr.factor.imag], dump_expression(expr.expr)]
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def _finite(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_finite(v) for v in value]
    return value


def write_report(report: Dict[str, Any], path: Union[str, Path]) -> Dict[str, Any]:
    """Write a report as JSON with sorted keys and a generation timestamp."""
    data = _finite(to_jsonable(dict(report)))
    data.setdefault("generated_at", datetime.now().isoformat(timespec="seconds"))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
    return data


def residual_rows(check: str, sample_residuals: Dict[str, List[float]]) -> List[Dict[str, Any]]:
    rows = []
    for name, values in sample_residuals.items():
        label = check if len(sample_residuals) == 1 else f"{check}.{name}"
        rows.extend({"check": label, "sample_index": i, "residual": float(v)} for i, v in enumerate(values))
    return rows


def write_residual_csv(rows: List[Dict[str, Any]], path: Union[str, Path]) -> pd.DataFrame:
    """CSV residual table with columns check, sample_index, residual."""
    frame = pd.DataFrame(rows, columns=["check", "sample_index", "residual"])
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return frame
