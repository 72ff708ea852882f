"""TOML model files: parsing, validation and canonical export.

A model file has up to four tables::

    [model]          kind = "toeplitz" | "general-table" | "general-parametric"
    [coefficients]   the operator (layout depends on kind)
    [solver]         recurrence options (toeplitz models)
    [study]          truncation-study options

See README.md for the full grammar.  Validation errors name the offending
field; TOML syntax errors carry the line and column reported by the parser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import tomli
import tomlkit

from .general_solver import GeneralMatrixSpec, PerturbedToeplitzSpec, TableSpec
from .symbol import CoefficientSequence, GeometricTail, ToeplitzSymbol

__all__ = ["ModelError", "ModelIOError", "Model", "load_model", "parse_model", "dump_model", "KINDS"]

KINDS = ("toeplitz", "general-table", "general-parametric")
NORMALIZATIONS = ("raw", "unit_l1", "x0_equals_1")
STUDY_NORMALIZATIONS = ("x0", "unit_l1")


class ModelError(ValueError):
    """Model file could not be parsed or failed validation."""


class ModelIOError(ModelError):
    """Model file could not be read."""


def _number(value: Any, where: str, *, nonnegative: bool = False, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ModelError(f"{where}: must be finite")
    if nonnegative and value < 0.0:
        raise ModelError(f"{where}: must be >= 0, got {value!r}")
    if positive and value <= 0.0:
        raise ModelError(f"{where}: must be > 0, got {value!r}")
    return value


def _integer(value: Any, where: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ModelError(f"{where}: expected an integer, got {value!r}")
    if value < minimum:
        raise ModelError(f"{where}: must be >= {minimum}, got {value!r}")
    return int(value)


def _numbers(value: Any, where: str, **kw) -> list[float]:
    if not isinstance(value, list):
        raise ModelError(f"{where}: expected a list of numbers")
    return [_number(v, f"{where}[{k}]", **kw) for k, v in enumerate(value)]


def _table(doc: dict, key: str, where: str = "") -> dict:
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ModelError(f"{where}{key}: expected a table")
    return value


def _unknown(block: dict, allowed: set[str], where: str) -> None:
    extra = sorted(set(block) - allowed)
    if extra:
        raise ModelError(f"{where}: unknown field(s) {', '.join(extra)}")


def _tail(value: Any, where: str) -> dict | None:
    if value is None:
        return None
    if not isinstance(value, dict):
        raise ModelError(f"{where}: expected a table {{a = ..., r = ...}}")
    _unknown(value, {"a", "r"}, where)
    if "a" not in value or "r" not in value:
        raise ModelError(f"{where}: needs both a and r")
    a = _number(value["a"], f"{where}.a", nonnegative=True)
    r = _number(value["r"], f"{where}.r", nonnegative=True)
    if r >= 1.0:
        raise ModelError(f"{where}.r: must be < 1, got {r!r}")
    return {"a": a, "r": r}


def _sequence_block(block: dict, name: str, where: str) -> dict:
    out = {name: _numbers(block.get(name, []), f"{where}.{name}", nonnegative=True)}
    tail = _tail(block.get(f"{name}_tail"), f"{where}.{name}_tail")
    if tail is not None:
        out[f"{name}_tail"] = tail
    return out


def _to_sequence(block: dict, name: str) -> CoefficientSequence:
    tail = block.get(f"{name}_tail")
    return CoefficientSequence(
        tuple(block[name]), None if tail is None else GeometricTail(tail["a"], tail["r"])
    )


@dataclass
class Model:
    kind: str
    coefficients: dict
    solver: dict = field(default_factory=dict)
    study: dict = field(default_factory=dict)
    name: str | None = None
    strict: bool = False

    @property
    def is_toeplitz(self) -> bool:
        return self.kind == "toeplitz"

    def symbol(self) -> ToeplitzSymbol:
        if not self.is_toeplitz:
            raise ModelError(f"model kind {self.kind!r} is not a Toeplitz model")
        c = self.coefficients
        try:
            return ToeplitzSymbol(tuple(c["upper"]), c.get("diag", 0.0), _to_sequence(c, "lower"))
        except ValueError as exc:
            raise ModelError(f"coefficients: {exc}") from exc

    def spec(self) -> GeneralMatrixSpec:
        """General-matrix view; a Toeplitz model becomes its constant-row spec."""
        c = self.coefficients
        try:
            if self.is_toeplitz:
                return PerturbedToeplitzSpec.from_symbol(self.symbol(), strict=self.strict)
            if self.kind == "general-parametric":
                return PerturbedToeplitzSpec(
                    lower=_to_sequence(c, "lower"),
                    upper=_to_sequence(c, "upper"),
                    e=c.get("row_factor", 0.0),
                    factor_upper=c.get("factor_upper", True),
                    strict=self.strict,
                )
            rows = tuple((_to_sequence(r, "lower"), _to_sequence(r, "upper")) for r in c["rows"])
            return TableSpec(rows, strict=self.strict)
        except ValueError as exc:
            raise ModelError(f"coefficients: {exc}") from exc

    def to_document(self) -> dict:
        model: dict = {"kind": self.kind}
        if self.name is not None:
            model["name"] = self.name
        if self.strict:
            model["strict"] = True
        doc = {"model": model, "coefficients": self.coefficients}
        if self.solver:
            doc["solver"] = self.solver
        if self.study:
            doc["study"] = self.study
        return doc


def _parse_coefficients(kind: str, block: dict) -> dict:
    where = "coefficients"
    if kind == "toeplitz":
        _unknown(block, {"upper", "diag", "lower", "lower_tail"}, where)
        if "upper" not in block:
            raise ModelError("coefficients.upper: required for toeplitz models")
        out = {"upper": _numbers(block["upper"], "coefficients.upper", nonnegative=True)}
        if not out["upper"]:
            raise ModelError("coefficients.upper: must contain at least t_{-1}")
        if out["upper"][-1] <= 0.0:
            raise ModelError(f"coefficients.upper[{len(out['upper']) - 1}]: t_{{-n}} must be > 0")
        out["diag"] = _number(block.get("diag", 0.0), "coefficients.diag", nonnegative=True)
        out.update(_sequence_block(block, "lower", where))
        return out
    if kind == "general-parametric":
        _unknown(
            block,
            {"lower", "lower_tail", "upper", "upper_tail", "row_factor", "factor_upper"},
            where,
        )
        out = _sequence_block(block, "lower", where)
        out.update(_sequence_block(block, "upper", where))
        out["row_factor"] = _number(
            block.get("row_factor", 0.0), "coefficients.row_factor", nonnegative=True
        )
        factor_upper = block.get("factor_upper", True)
        if not isinstance(factor_upper, bool):
            raise ModelError("coefficients.factor_upper: expected true or false")
        out["factor_upper"] = factor_upper
        return out
    _unknown(block, {"rows"}, where)
    rows = block.get("rows")
    if not isinstance(rows, list) or not rows:
        raise ModelError("coefficients.rows: general-table models need at least one [[coefficients.rows]]")
    parsed = []
    for k, row in enumerate(rows):
        at = f"coefficients.rows[{k}]"
        if not isinstance(row, dict):
            raise ModelError(f"{at}: expected a table")
        _unknown(row, {"lower", "lower_tail", "upper", "upper_tail"}, at)
        entry = _sequence_block(row, "lower", at)
        entry.update(_sequence_block(row, "upper", at))
        parsed.append(entry)
    return {"rows": parsed}


def _parse_solver(block: dict) -> dict:
    _unknown(block, {"seed", "n_terms", "tolerance", "grid_points", "normalization", "window"}, "solver")
    out: dict = {}
    if "seed" in block:
        out["seed"] = _numbers(block["seed"], "solver.seed", positive=True)
    if "n_terms" in block:
        out["n_terms"] = _integer(block["n_terms"], "solver.n_terms", 1)
    if "tolerance" in block:
        out["tolerance"] = _number(block["tolerance"], "solver.tolerance", nonnegative=True)
    if "grid_points" in block:
        out["grid_points"] = _integer(block["grid_points"], "solver.grid_points", 2)
    if "normalization" in block:
        if block["normalization"] not in NORMALIZATIONS:
            raise ModelError(f"solver.normalization: must be one of {', '.join(NORMALIZATIONS)}")
        out["normalization"] = block["normalization"]
    if "window" in block:
        out["window"] = _integer(block["window"], "solver.window", 1)
    return out


def _parse_study(block: dict) -> dict:
    _unknown(block, {"sizes", "j_list", "prefix_len", "tol", "max_iter", "normalization"}, "study")
    out: dict = {}
    sizes = block.get("sizes", block.get("j_list"))
    if sizes is not None:
        if not isinstance(sizes, list) or not sizes:
            raise ModelError("study.sizes: expected a nonempty list of integers")
        out["sizes"] = [_integer(v, f"study.sizes[{k}]", 0) for k, v in enumerate(sizes)]
    if "prefix_len" in block:
        out["prefix_len"] = _integer(block["prefix_len"], "study.prefix_len", 1)
    if "tol" in block:
        out["tol"] = _number(block["tol"], "study.tol", positive=True)
    if "max_iter" in block:
        out["max_iter"] = _integer(block["max_iter"], "study.max_iter", 1)
    if "normalization" in block:
        if block["normalization"] not in STUDY_NORMALIZATIONS:
            raise ModelError(f"study.normalization: must be one of {', '.join(STUDY_NORMALIZATIONS)}")
        out["normalization"] = block["normalization"]
    return out


def parse_model(text: str) -> Model:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ModelError(f"syntax error: {exc}") from exc
    _unknown(doc, {"model", "coefficients", "solver", "study"}, "model file")
    header = _table(doc, "model")
    _unknown(header, {"kind", "name", "strict"}, "model")
    kind = header.get("kind")
    if kind not in KINDS:
        raise ModelError(f"model.kind: must be one of {', '.join(KINDS)}, got {kind!r}")
    name = header.get("name")
    if name is not None and not isinstance(name, str):
        raise ModelError("model.name: expected a string")
    strict = header.get("strict", False)
    if not isinstance(strict, bool):
        raise ModelError("model.strict: expected true or false")
    model = Model(
        kind=kind,
        coefficients=_parse_coefficients(kind, _table(doc, "coefficients")),
        solver=_parse_solver(_table(doc, "solver")),
        study=_parse_study(_table(doc, "study")),
        name=name,
        strict=strict,
    )
    # surfaces constructor-level checks (e.g. strict positivity) as parse errors
    if model.is_toeplitz:
        model.symbol()
    model.spec()
    return model


def load_model(path: str | Path) -> Model:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelIOError(f"cannot read {path}: {exc}") from exc
    return parse_model(text)


def dump_model(model: Model) -> str:
    """Canonical TOML; floats are written with ``repr`` so they round-trip exactly."""
    return tomlkit.dumps(model.to_document())
