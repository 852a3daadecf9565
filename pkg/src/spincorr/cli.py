"""Command-line front end.

Exit codes: 0 all checks passed, 1 a violation was found (or an asserted
property failed), 2 malformed input or usage error.  Every run emits one
machine-readable JSON report (or a markdown rendering with --format
markdown), UTF-8 and newline-terminated.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import fixtures as fixtures_mod
from .harness import (
    ExperimentSpec,
    evaluate_property,
    search_counterexample,
    verify_preservation,
)
from .dynamics import (
    birth_submodularity,
    births_additive,
    births_increasing,
    build_generator,
    deaths_constant,
    deaths_constant_on_occupied,
    has_independent_flips,
    is_attractive,
    semigroup_apply,
)
from .measures import FAILS, HOLDS, PropertyReport, normalize
from .serialize import (
    dumps,
    envelope,
    experiment_outcome_to_dict,
    load_json,
    measure_from_dict,
    measure_to_dict,
    rate_table_from_dict,
    report_to_dict,
    search_outcome_to_dict,
)
from .three_site import (
    SYSTEMS,
    ThreeSiteCoords,
    classify,
    complement_products,
    margins,
)

MEASURE_PROPERTIES = ("associated", "fkg-lattice", "downward-fkg", "dca")


def _emit(args, document) -> None:
    text = dumps(document) if args.format == "json" else _markdown(document)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _markdown(document, indent: int = 0) -> str:
    lines = []

    def walk(node, depth):
        pad = "  " * depth
        if isinstance(node, dict):
            for key in sorted(node):
                value = node[key]
                if isinstance(value, (dict, list)):
                    lines.append(f"{pad}- **{key}**:")
                    walk(value, depth + 1)
                else:
                    lines.append(f"{pad}- **{key}**: {value}")
        elif isinstance(node, list):
            for value in node:
                if isinstance(value, (dict, list)):
                    lines.append(f"{pad}-")
                    walk(value, depth + 1)
                else:
                    lines.append(f"{pad}- {value}")
        else:
            lines.append(f"{pad}{node}")

    walk(document, indent)
    return "\n".join(lines) + "\n"


def _parse_times(text: str) -> tuple[float, ...]:
    try:
        times = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ValueError(f"--t expects a comma-separated list of times, got {text!r}") from exc
    if not times:
        raise ValueError("--t expects at least one time")
    return times


def _parse_asserts(text: str | None) -> tuple[str, ...]:
    if not text:
        return ()
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _assert_exit(asserted, reports: dict[str, PropertyReport]) -> int:
    for name in asserted:
        if name not in reports:
            raise ValueError(f"--assert names unknown property {name!r}; known: {sorted(reports)}")
    return 1 if any(not reports[name].holds for name in asserted) else 0


# ---------------------------------------------------------------------------
# subcommands


def _cmd_check_measure(args) -> int:
    vector = measure_from_dict(load_json(args.input), force_mode=args.mode)
    measure = normalize(vector)
    reports = {}
    for name in MEASURE_PROPERTIES:
        reports[name] = evaluate_property(
            name,
            measure,
            tolerance=args.tolerance,
            tilt_budget=args.budget,
            allow_large=args.opt_in_n6,
            tilt_seed=args.seed,
        )
    body = {
        "input": args.input,
        "measure": measure_to_dict(measure),
        "reports": {name: report_to_dict(r) for name, r in reports.items()},
    }
    _emit(args, envelope("check-measure", body))
    return _assert_exit(_parse_asserts(args.asserts), reports)


def _cmd_check_rates(args) -> int:
    rates = rate_table_from_dict(load_json(args.input))
    reports = {
        "attractive": is_attractive(rates),
        "independent-flips": PropertyReport(
            "independent-flips", HOLDS if has_independent_flips(rates) else FAILS
        ),
        "constant-deaths": deaths_constant(rates),
        "constant-deaths-occupied": deaths_constant_on_occupied(rates),
        "additive-births": births_additive(rates),
    }
    def aggregate(name, per_site):
        failing = next((r for r in per_site if not r.holds), None)
        if failing is not None:
            return failing
        margins_seen = [r.margin for r in per_site if r.margin is not None]
        return PropertyReport(name, HOLDS, None, min(margins_seen) if margins_seen else None)

    reports["submodular-births"] = aggregate(
        "submodular-births", [birth_submodularity(rates, x) for x in range(rates.n)]
    )
    reports["increasing-births"] = aggregate(
        "increasing-births", [births_increasing(rates, x) for x in range(rates.n)]
    )
    body = {
        "input": args.input,
        "n": rates.n,
        "reports": {name: report_to_dict(r) for name, r in reports.items()},
    }
    _emit(args, envelope("check-rates", body))
    return _assert_exit(_parse_asserts(args.asserts), reports)


def _cmd_evolve(args) -> int:
    vector = measure_from_dict(load_json(args.input))
    rates = rate_table_from_dict(load_json(args.system))
    gen = build_generator(rates)
    measure = normalize(vector)
    evolved = []
    for t in _parse_times(args.t):
        out = measure if t == 0 else semigroup_apply(gen, measure, t)
        evolved.append({"t": t, **measure_to_dict(out)})
    body = {"input": args.input, "system": args.system, "evolved": evolved}
    _emit(args, envelope("evolve", body))
    return 0


def _cmd_classify3(args) -> int:
    doc = load_json(args.input)
    if isinstance(doc, dict) and "a" in doc and "weights" not in doc:
        coords = ThreeSiteCoords(
            **{key: Fraction(doc[key]) for key in ("a", "b1", "b2", "b3", "c1", "c2", "c3", "d")}
        )
    else:
        vector = measure_from_dict(doc)
        if vector.n != 3:
            raise ValueError(f"classify3 needs a three-site measure, got n={vector.n}")
        coords = ThreeSiteCoords.from_weights(vector.as_fractions())
    verdicts = classify(coords)
    body = {
        "input": args.input,
        "verdicts": verdicts.as_dict(),
        "margins": {
            system: {str(site): str(slack) for site, slack in margins(coords, system)}
            for system in SYSTEMS
        },
        "complement_products": {
            str(site): str(slack) for site, slack in complement_products(coords)
        },
    }
    _emit(args, envelope("classify3", body))
    asserted = _parse_asserts(args.asserts)
    verdict_map = verdicts.as_dict()
    for name in asserted:
        if name not in verdict_map:
            raise ValueError(f"--assert names unknown verdict {name!r}; known: {sorted(verdict_map)}")
    return 1 if any(not verdict_map[name] for name in asserted) else 0


def _cmd_verify_theorem(args) -> int:
    rates = rate_table_from_dict(load_json(args.system))
    measures = None
    if args.measures:
        docs = load_json(args.measures)
        if not isinstance(docs, list):
            docs = [docs]
        measures = tuple(measure_from_dict(d) for d in docs)
    spec = ExperimentSpec(
        system=rates,
        property=args.property,
        times=_parse_times(args.t),
        seed=args.seed,
        measure_mode=args.family,
        measure_count=args.count,
        measures=measures,
        tolerance=args.tolerance,
        tilt_budget=args.budget,
    )
    outcome = verify_preservation(spec)
    body = {"system": args.system, "outcome": experiment_outcome_to_dict(outcome)}
    _emit(args, envelope("verify-theorem", body))
    return 1 if outcome.violations else 0


def _cmd_search(args) -> int:
    rates = rate_table_from_dict(load_json(args.system))
    outcome = search_counterexample(args.target, rates, budget=args.budget)
    body = {"system": args.system, "outcome": search_outcome_to_dict(outcome)}
    _emit(args, envelope("search", body))
    return 1 if outcome.found else 0


def _cmd_fixtures(args) -> int:
    paths = fixtures_mod.write_fixtures(args.out)
    body = {"directory": args.out, "written": paths}
    _emit(args, envelope("fixtures", body))
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spincorr",
        description="Correlation-property checks and spin-system dynamics on {0,1}^n",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, tolerance=True):
        p.add_argument("--format", choices=("json", "markdown"), default="json")
        p.add_argument("--output", help="write the report here instead of stdout")
        if tolerance:
            p.add_argument("--tolerance", type=float, default=1e-9,
                           help="margin tolerance for float-mode checks")

    p = sub.add_parser("check-measure", help="run the correlation-property suite on a measure")
    p.add_argument("--input", required=True, help="measure JSON file")
    p.add_argument("--mode", choices=("exact", "float"), default=None,
                   help="force the arithmetic mode instead of inferring it")
    p.add_argument("--budget", type=int, default=500, help="tilt samples for the DCA check")
    p.add_argument("--seed", type=int, default=0, help="seed for the DCA tilt sampler")
    p.add_argument("--opt-in-n6", action="store_true", dest="opt_in_n6",
                   help="allow the six-site brute-force sweeps")
    p.add_argument("--assert", dest="asserts", default=None,
                   help="comma list of properties that must hold (exit 1 otherwise)")
    common(p)
    p.set_defaults(func=_cmd_check_measure)

    p = sub.add_parser("check-rates", help="run all rate classifiers on a spin system")
    p.add_argument("--input", required=True, help="spin-system JSON file")
    p.add_argument("--assert", dest="asserts", default=None)
    common(p, tolerance=False)
    p.set_defaults(func=_cmd_check_rates)

    p = sub.add_parser("evolve", help="evolve a measure under a spin system")
    p.add_argument("--input", required=True, help="measure JSON file")
    p.add_argument("--system", required=True, help="spin-system JSON file")
    p.add_argument("--t", required=True, help="comma list of times")
    common(p, tolerance=False)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("classify3", help="closed-form verdicts for a three-site measure")
    p.add_argument("--input", required=True,
                   help="measure JSON file (weights, or named coordinates a,b1..d)")
    p.add_argument("--assert", dest="asserts", default=None)
    common(p, tolerance=False)
    p.set_defaults(func=_cmd_classify3)

    p = sub.add_parser("verify-theorem", help="preservation experiment for one property")
    p.add_argument("--system", required=True, help="spin-system JSON file")
    p.add_argument("--property", required=True,
                   choices=("associated", "fkg-lattice", "downward-fkg", "dca"))
    p.add_argument("--t", default="0.1,0.5,1.0,2.0", help="comma list of times")
    p.add_argument("--measures", default=None,
                   help="JSON file with one measure or an array of measures")
    p.add_argument("--family", default="lattice",
                   choices=("generic", "strictly-positive", "lattice", "product"))
    p.add_argument("--count", type=int, default=20, help="random initial measures to draw")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=200, help="tilt samples for DCA checks")
    common(p)
    p.set_defaults(func=_cmd_verify_theorem)

    p = sub.add_parser("search", help="search for a preservation counterexample")
    p.add_argument("--system", required=True, help="spin-system JSON file")
    p.add_argument("--target", required=True, choices=("association", "downward-fkg"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=20000,
                   help="cap on derivative and evolution evaluations")
    common(p, tolerance=False)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("fixtures", help="write the bundled fixture corpus")
    p.add_argument("--out", default="fixtures", help="target directory")
    common(p, tolerance=False)
    p.set_defaults(func=_cmd_fixtures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
