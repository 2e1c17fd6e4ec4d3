"""Command-line interface: ``summarize``, ``table``, ``simulate`` and ``ledger``.

Exit codes: 0 success, 1 usage/parse/I-O error, 2 validation or domain
error, 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    AttrMeanError,
    EnumerationTooLarge,
    InvalidGeneratorSpec,
    InvalidSpec,
    ParseError,
)
from .estimators import EstimatorSpec, parse_spec_list
from .population import (
    FinitePopulation,
    PopulationSummary,
    SamplingDesign,
    derived_coefficients,
    format_summary,
    parse_key_values,
    read_population_csv,
    summarize_population,
    summary_from_mapping,
    validate_population,
    write_population_csv,
)
from .reference import TABLES, corrections_ledger, dataset_text, design_from_extras, ledger_csv, ledger_text
from .simulation import GeneratorSpec, ReplicationPlan, enumerate_exact, generate_population, run_monte_carlo
from .theory import describe_coefficients, theory_table

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_CAP = 0, 1, 2, 3


class UsageError(Exception):
    """Bad combination of command-line options."""


class ValidationFailed(Exception):
    """Input data failed validation; carries the diagnostics."""


@dataclass
class Source:
    """Resolved input: a summary, optionally the raw population behind it."""

    summary: PopulationSummary
    population: FinitePopulation | None
    design: SamplingDesign | None
    dataset: str | None
    native_design: SamplingDesign | None = None


def _read_summary_source(arg: str) -> tuple[str, str]:
    """Text and display name for a summary path or a bundled dataset name."""
    if arg in TABLES and not Path(arg).exists():
        return dataset_text(arg), f"{arg}.txt"
    return Path(arg).read_text(), arg


def _load_source(args) -> Source:
    chosen = [x for x in ("input", "summary", "generate") if getattr(args, x, None)]
    if len(chosen) != 1:
        raise UsageError("give exactly one input source: --input, --summary or --generate")
    dataset = None
    extras: dict[str, str] = {}
    if args.summary:
        text, name = _read_summary_source(args.summary)
        values = parse_key_values(text, name)
        summary = summary_from_mapping(values, name)
        extras = {k: v for k, v in values.items() if k not in summary.as_dict()}
        dataset = extras.get("dataset")
        pop = None
    else:
        if args.input:
            pop = read_population_csv(args.input)
        else:
            pop = generate_population(GeneratorSpec.from_text(args.generate))
        problems = validate_population(pop)
        if problems:
            raise ValidationFailed("\n".join(problems))
        summary = summarize_population(pop)
    native = design = design_from_extras(summary, extras)
    if args.n is not None:
        design = SamplingDesign(summary.N, args.n, args.nprime)
    elif args.nprime is not None:
        if design is None:
            raise UsageError("--nprime needs --n")
        design = SamplingDesign(summary.N, design.n, args.nprime)
    return Source(summary, pop, design, dataset, native)


def _specs(args, src: Source) -> list[EstimatorSpec]:
    if args.specs is not None:
        text = args.specs
        if os.path.isfile(text):
            text = Path(text).read_text()
        return parse_spec_list(text)
    if src.dataset in TABLES:
        return TABLES[src.dataset].specs()
    two_phase = src.design is not None and src.design.two_phase
    return TABLES["wheat" if two_phase else "rice"].specs()


def _require_design(src: Source) -> SamplingDesign:
    if src.design is None:
        raise UsageError("sample size unknown: pass --n (and --nprime for two-phase designs)")
    return src.design


def _emit(text: str) -> None:
    sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands


def cmd_summarize(args) -> int:
    src = _load_source(args)
    if args.format == "csv":
        lines = ["key,value"] + [f"{k},{v!r}" for k, v in src.summary.as_dict().items()]
        if src.design is not None:
            c = derived_coefficients(src.summary, src.design)
            lines += [f"{k},{v!r}" for k, v in describe_coefficients(c).items()]
        _emit("\n".join(lines) + "\n")
        return EXIT_OK
    out = format_summary(src.summary)
    if src.population is None:
        out += "# no raw population available (summary only)\n"
    if src.design is not None:
        d = src.design
        c = derived_coefficients(src.summary, d)
        out += f"# design: N={d.N} n={d.n}" + (f" n_prime={d.n_prime}" if d.two_phase else "") + "\n"
        out += "".join(f"{k} = {v:.6g}\n" for k, v in describe_coefficients(c).items())
    _emit(out)
    return EXIT_OK


def cmd_table(args) -> int:
    src = _load_source(args)
    design = _require_design(src)
    specs = _specs(args, src)
    c = derived_coefficients(src.summary, design)
    # reference values only apply at the design they were computed for
    reference = TABLES.get(src.dataset) if design == src.native_design else None
    report = theory_table(c, src.summary.mean_y, specs, reference=reference, as_tabulated=args.as_tabulated)
    _emit(report.to_csv() if args.format == "csv" else report.to_text())
    return EXIT_OK


def cmd_simulate(args) -> int:
    src = _load_source(args)
    if src.population is None:
        print("error: raw population required (give --input or --generate)", file=sys.stderr)
        return EXIT_DOMAIN
    if args.export_population:
        write_population_csv(src.population, args.export_population)
    design = _require_design(src)
    specs = _specs(args, src)
    if args.exact:
        report = enumerate_exact(src.population, design, specs)
    else:
        if args.replicates < 1:
            raise UsageError("--replicates must be at least 1")
        workers = args.workers if args.workers > 0 else (os.cpu_count() or 1)
        plan = ReplicationPlan(args.replicates, design, tuple(specs), seed=args.seed)
        report = run_monte_carlo(src.population, plan, workers=workers)
    if args.format == "csv":
        _emit(report.to_csv(args.tolerance))
    else:
        m = report.moments
        var_theory = float(design.factors()[0]) * src.summary.var_y
        out = report.to_text(args.tolerance)
        out += f"# var_ybar: empirical={m['var_ybar']:.6g} theory={var_theory:.6g} "
        out += f"rel_gap={(m['var_ybar'] - var_theory) / var_theory:.3g}\n"
        out += "".join(f"# {k} = {v:.6g}\n" for k, v in m.items() if k != "var_ybar")
        _emit(out)
    return EXIT_OK


def cmd_ledger(args) -> int:
    entries = corrections_ledger()
    _emit(ledger_csv(entries) if args.format == "csv" else ledger_text(entries))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "csv"), default="text")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", help="population CSV with header y,phi1,phi2")
    data.add_argument("--summary", help="summary file, or a bundled dataset name (rice, wheat)")
    data.add_argument("--generate", help="synthetic population, e.g. 'N=100,p00=.25,p01=.25,p10=.25,p11=.25,sigma=1'")
    data.add_argument("--n", type=int, help="(second-phase) sample size")
    data.add_argument("--nprime", type=int, help="first-phase sample size")
    data.add_argument("--specs", help="estimator list, or a file containing one")

    parser = argparse.ArgumentParser(prog="attrmean", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarize", parents=[common, data], help="population summary and coefficients")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("table", parents=[common, data], help="first-order bias, MSE and PRE table")
    p.add_argument("--as-tabulated", action="store_true", help="use the published f3 factor for d-expproduct2")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("simulate", parents=[common, data], help="Monte Carlo or exact check against theory")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--replicates", type=int, default=10_000)
    p.add_argument("--exact", action="store_true", help="enumerate every sample instead of Monte Carlo")
    p.add_argument("--workers", type=int, default=1, help="threads for Monte Carlo (0 = all cores)")
    p.add_argument("--tolerance", type=float, help="add a pass/fail column for |rel_gap| <= tolerance")
    p.add_argument("--export-population", help="write the population used to this CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ledger", parents=[common], help="corrections applied to the published formulas")
    p.set_defaults(func=cmd_ledger)
    return parser


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except EnumerationTooLarge as exc:
        print(f"error: {exc}; use Monte Carlo (drop --exact)", file=sys.stderr)
        return EXIT_CAP
    except ValidationFailed as exc:
        print(f"error: population failed validation:\n{exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (UsageError, ParseError, InvalidSpec, InvalidGeneratorSpec, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AttrMeanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
