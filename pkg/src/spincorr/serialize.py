"""JSON schemas for measures, rate tables, reports, and experiment outcomes.

Rationals travel as strings like "3/4" so they survive round-trips
unchanged; plain JSON numbers are reserved for float-mode data (evolved
measures, float margins) and integers.  Configuration indexing is the
shared bitmask convention: weight i belongs to the configuration whose
spin at site x is bit x of i.

Every document this package writes carries ``format_version``.
"""

from __future__ import annotations

import json
from dataclasses import is_dataclass
from fractions import Fraction

from .dynamics import RateTable, contact_process
from .harness import CellOutcome, ExperimentOutcome, ExperimentSpec, SearchOutcome
from .measures import EXACT, FLOAT, PropertyReport, WeightVector

FORMAT_VERSION = 1


def rational_str(value: Fraction) -> str:
    return str(Fraction(value))


def parse_rational(value, where: str = "value") -> Fraction:
    if isinstance(value, bool):
        raise ValueError(f"{where}: booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"{where}: cannot parse rational from {value!r}") from exc
    raise ValueError(f"{where}: expected an integer or 'p/q' string, got {type(value).__name__}")


def json_safe(value):
    """Recursively convert Fractions, tuples, and dataclass scraps for json.dumps."""
    if isinstance(value, Fraction):
        return rational_str(value)
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if is_dataclass(value) and not isinstance(value, type):
        return json_safe(vars(value))
    if hasattr(value, "item") and callable(value.item) and not isinstance(value, (str, bytes)):
        try:
            return value.item()  # numpy scalars
        except Exception:
            return value
    return value


# ---------------------------------------------------------------------------
# measures


def measure_to_dict(measure: WeightVector) -> dict:
    if measure.mode == EXACT:
        weights = [rational_str(w) for w in measure.weights]
    else:
        weights = [float(w) for w in measure.weights]
    return {"n": measure.n, "mode": measure.mode, "weights": weights}


def measure_from_dict(doc: dict, *, force_mode: str | None = None) -> WeightVector:
    if not isinstance(doc, dict):
        raise ValueError("measure document must be a JSON object")
    if "weights" not in doc:
        raise ValueError("measure document is missing 'weights'")
    raw = doc["weights"]
    if not isinstance(raw, list) or not raw:
        raise ValueError("'weights' must be a nonempty array")
    has_floats = any(isinstance(w, float) for w in raw)
    mode = doc.get("mode") or (FLOAT if has_floats else EXACT)
    if force_mode is not None:
        mode = force_mode
    if mode == EXACT:
        weights = [
            Fraction(w) if isinstance(w, float) else parse_rational(w, f"weights[{i}]")
            for i, w in enumerate(raw)
        ]
    elif mode == FLOAT:
        weights = [float(parse_rational(w, f"weights[{i}]")) if isinstance(w, str) else float(w)
                   for i, w in enumerate(raw)]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    vector = WeightVector.exact(weights) if mode == EXACT else WeightVector.floats(weights)
    if "n" in doc and doc["n"] != vector.n:
        raise ValueError(f"declared n={doc['n']} but weights imply n={vector.n}")
    return vector


# ---------------------------------------------------------------------------
# spin systems


def rate_table_to_dict(rates: RateTable) -> dict:
    return {
        "n": rates.n,
        "beta": {str(x): [rational_str(v) for v in rates.birth[x]] for x in range(rates.n)},
        "delta": {str(x): [rational_str(v) for v in rates.death[x]] for x in range(rates.n)},
    }


def rate_table_from_dict(doc: dict) -> RateTable:
    if not isinstance(doc, dict):
        raise ValueError("spin-system document must be a JSON object")
    if doc.get("model") == "contact":
        edges = doc.get("edges")
        if not isinstance(edges, list):
            raise ValueError("contact shorthand needs an 'edges' array")
        return contact_process(
            [tuple(e) for e in edges],
            infection=parse_rational(doc.get("lambda", 1), "lambda"),
            recovery=parse_rational(doc.get("delta", 1), "delta"),
            n=doc.get("n"),
        )
    for key in ("n", "beta", "delta"):
        if key not in doc:
            raise ValueError(f"spin-system document is missing {key!r}")
    n = doc["n"]
    size = 1 << n

    def table(block, name):
        rows = []
        for x in range(n):
            row = block.get(str(x), block.get(x))
            if row is None:
                raise ValueError(f"{name} is missing site {x}")
            if len(row) != size:
                raise ValueError(f"{name}[{x}]: expected {size} rates, got {len(row)}")
            rows.append([parse_rational(v, f"{name}[{x}][{i}]") for i, v in enumerate(row)])
        return rows

    return RateTable.from_tables(table(doc["beta"], "beta"), table(doc["delta"], "delta"))


# ---------------------------------------------------------------------------
# reports and outcomes


def report_to_dict(report: PropertyReport) -> dict:
    if report.margin is None:
        margin = None
    elif isinstance(report.margin, float):
        margin = rational_str(Fraction(report.margin))
    else:
        margin = rational_str(report.margin)
    out = {
        "property": report.property,
        "verdict": report.verdict,
        "witness": json_safe(report.witness),
        "margin": margin,
        "details": json_safe(report.details),
    }
    if isinstance(report.margin, float):
        out["margin_float"] = report.margin
    return out


def report_from_dict(doc: dict) -> PropertyReport:
    margin = doc.get("margin")
    if "margin_float" in doc:
        margin = doc["margin_float"]
    elif margin is not None:
        margin = Fraction(margin)
    return PropertyReport(
        property=doc["property"],
        verdict=doc["verdict"],
        witness=doc.get("witness"),
        margin=margin,
        details=doc.get("details") or {},
    )


def cell_to_dict(cell: CellOutcome) -> dict:
    return {"measure_index": cell.measure_index, "t": cell.t, "report": report_to_dict(cell.report)}


def experiment_spec_to_dict(spec: ExperimentSpec) -> dict:
    return {
        "system": rate_table_to_dict(spec.system),
        "property": spec.property,
        "times": list(spec.times),
        "seed": spec.seed,
        "measure_mode": spec.measure_mode,
        "measure_count": spec.measure_count,
        "measures": None if spec.measures is None else [measure_to_dict(m) for m in spec.measures],
        "tolerance": spec.tolerance,
        "tilt_budget": spec.tilt_budget,
    }


def experiment_spec_from_dict(doc: dict) -> ExperimentSpec:
    measures = doc.get("measures")
    return ExperimentSpec(
        system=rate_table_from_dict(doc["system"]),
        property=doc["property"],
        times=tuple(doc.get("times", (0.1, 0.5, 1.0, 2.0))),
        seed=doc.get("seed", 0),
        measure_mode=doc.get("measure_mode", "lattice"),
        measure_count=doc.get("measure_count", 20),
        measures=None if measures is None else tuple(measure_from_dict(m) for m in measures),
        tolerance=doc.get("tolerance", 1e-9),
        tilt_budget=doc.get("tilt_budget", 200),
    )


def experiment_outcome_to_dict(outcome: ExperimentOutcome) -> dict:
    return {
        "property": outcome.property,
        "hypotheses": {name: ok for name, ok in outcome.hypotheses},
        "hypotheses_satisfied": outcome.hypotheses_satisfied,
        "summary": outcome.summary,
        "build_failing": outcome.build_failing,
        "cells": [cell_to_dict(c) for c in outcome.cells],
        "violations": [cell_to_dict(c) for c in outcome.violations],
        "skipped_measures": list(outcome.skipped_measures),
        "witness": json_safe(outcome.witness),
    }


def search_outcome_to_dict(outcome: SearchOutcome) -> dict:
    return {
        "target": outcome.target,
        "found": outcome.found,
        "summary": outcome.summary,
        "evaluations": outcome.evaluations,
        "witness": json_safe(outcome.witness),
        "derivative_certificate": json_safe(outcome.derivative_certificate),
    }


# ---------------------------------------------------------------------------
# documents


def envelope(command: str, body: dict) -> dict:
    return {"format_version": FORMAT_VERSION, "command": command, **body}


def dumps(document) -> str:
    return json.dumps(json_safe(document), indent=2, sort_keys=True) + "\n"


def load_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc
