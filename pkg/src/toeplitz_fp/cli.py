"""Command-line front end.

Results go to standard output (JSON) or to ``--out`` files; diagnostics and
progress go to standard error.  Exit codes: 0 success, 2 model parse error,
3 usage or wrong model kind, 4 I/O error, 5 every numerical solve failed,
6 hypothesis gate (audit not applicable).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .general_solver import (
    TruncationKind,
    check_hypotheses,
    export_matrix_csv,
    truncate_T,
    truncation_study,
)
from .kras_verify import (
    DEFAULT_RNG_SEED,
    audit_contraction,
    audit_equismallness,
    geometric_family_vector,
    split,
)
from .modelfile import Model, ModelError, ModelIOError, dump_model, load_model
from .toeplitz_solver import (
    Normalization,
    classify,
    solve_recurrence,
    summability_diagnostic,
    equal_seed,
)

log = logging.getLogger("toeplitz_fp")

SCHEMA_VERSION = "1.0"

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_USAGE = 3
EXIT_IO = 4
EXIT_NUMERICAL = 5
EXIT_HYPOTHESIS = 6


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(command: str, model: Model, payload: dict) -> None:
    record = {"schema_version": SCHEMA_VERSION, "command": command, "model": model.name}
    record.update(payload)
    sys.stdout.write(json.dumps(record, indent=2, allow_nan=False) + "\n")


def _load(path: str) -> Model:
    try:
        return load_model(path)
    except ModelIOError as exc:
        raise CliError(str(exc), EXIT_IO) from exc
    except ModelError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from exc


def _require_toeplitz(model: Model, command: str) -> None:
    if not model.is_toeplitz:
        raise CliError(f"{command} needs a toeplitz model, got {model.kind!r}", EXIT_USAGE)


def _write_text(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from exc


def _csv_text(values) -> str:
    lines = ["index,value"]
    lines.extend(f"{k},{v:.17g}" for k, v in enumerate(values))
    return "\n".join(lines) + "\n"


def cmd_classify(args) -> int:
    model = _load(args.model)
    _require_toeplitz(model, "classify")
    solver = model.solver
    report = classify(
        model.symbol(),
        grid_points=args.grid_points or solver.get("grid_points", 1001),
        tolerance=solver.get("tolerance", 1e-12),
    )
    _emit("classify", model, report.to_dict())
    return EXIT_OK


def cmd_solve(args) -> int:
    model = _load(args.model)
    _require_toeplitz(model, "solve")
    symbol = model.symbol()
    solver = model.solver
    N = args.n_terms if args.n_terms is not None else solver.get("n_terms", 100)
    seed = args.seed or solver.get("seed") or list(equal_seed(symbol).entries)
    if len(seed) != symbol.n:
        raise CliError(f"seed needs {symbol.n} entries, got {len(seed)}", EXIT_USAGE)
    if N < symbol.n:
        raise CliError(f"--n-terms must be >= n = {symbol.n}", EXIT_USAGE)
    try:
        raw = solve_recurrence(symbol, seed, N)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    mode = args.normalize or solver.get("normalization", "raw")
    prefix = raw.normalized(mode)
    summary = prefix.to_dict()
    if raw.positive:
        window = args.window or solver.get("window", 10)
        summary["summability"] = summability_diagnostic(raw, window).to_dict()
    else:
        summary["summability"] = None
        log.warning("entry %d is not positive; no positive solution on this seed", raw.first_negative_index)
    if args.out:
        _write_text(args.out, _csv_text(prefix.entries))
        summary["csv"] = str(args.out)
    else:
        summary["entries"] = [float(v) for v in prefix.entries]
    _emit("solve", model, summary)
    return EXIT_OK


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("THREADS", "1")))
    except ValueError:
        return 1


def cmd_truncate_study(args) -> int:
    model = _load(args.model)
    study_opts = model.study
    sizes = args.sizes or study_opts.get("sizes")
    if not sizes:
        raise CliError("no sizes given (use --sizes or study.sizes)", EXIT_USAGE)
    prefix_len = args.prefix_len or study_opts.get("prefix_len", min(20, min(sizes) + 1))
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            study = truncation_study(
                model.spec(),
                sizes,
                tol=args.tol or study_opts.get("tol", 1e-12),
                max_iter=args.max_iter or study_opts.get("max_iter", 1_000_000),
                prefix_len=prefix_len,
                normalization=args.normalize or study_opts.get("normalization", "x0"),
                workers=_workers(),
            )
    except (ValueError, IndexError) as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    for w in caught:
        log.warning("%s", w.message)
    payload = study.to_dict()
    payload["warnings"] = [
        f"size {j}: power iteration did not converge"
        for j, ok in zip(study.sizes, study.converged)
        if not ok
    ]
    for message in payload["warnings"]:
        log.warning(message)
    if args.csv_dir:
        out_dir = Path(args.csv_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CliError(f"cannot create {out_dir}: {exc}", EXIT_IO) from exc
        for j, v in zip(study.sizes, study.vectors):
            _write_text(out_dir / f"vector_{j}.csv", _csv_text(v))
    _emit("truncate-study", model, payload)
    return EXIT_OK if any(study.converged) else EXIT_NUMERICAL


def cmd_verify_hypotheses(args) -> int:
    model = _load(args.model)
    if model.is_toeplitz:
        raise CliError("verify-hypotheses needs a general model", EXIT_USAGE)
    spec = model.spec()
    rows = args.rows
    if rows is None:
        rows = min(200, spec.max_row) if spec.max_row is not None else 200
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report = check_hypotheses(spec, rows)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    for w in caught:
        log.warning("%s", w.message)
    _emit("verify-hypotheses", model, report.to_dict())
    return EXIT_OK


def cmd_kras_audit(args) -> int:
    model = _load(args.model)
    _require_toeplitz(model, "kras-audit")
    ops = split(model.symbol())
    if not ops.alpha < 1.0:
        raise CliError(
            f"alpha = sum_(i>=0) t_i = {ops.alpha!r} >= 1; the contraction audit does not apply",
            EXIT_HYPOTHESIS,
        )
    contraction = audit_contraction(
        ops, trials=args.trials, support_len=args.support_len, rng_seed=args.rng_seed
    )
    family = [geometric_family_vector(r) for r in (args.family_ratio or [0.5])]
    equismall = audit_equismallness(ops, args.epsilon, family)
    payload = {
        "split": ops.to_dict(),
        "contraction": contraction.to_dict(),
        "equismallness": dict(equismall.to_dict(), family_ratios=args.family_ratio or [0.5]),
    }
    _emit("kras-audit", model, payload)
    return EXIT_OK


def cmd_export(args) -> int:
    model = _load(args.model)
    text = dump_model(model)
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_matrix(args) -> int:
    model = _load(args.model)
    try:
        M = truncate_T(model.spec(), args.size, args.kind)
    except (ValueError, IndexError) as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    if args.out:
        try:
            export_matrix_csv(M, args.out)
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}", EXIT_IO) from exc
    else:
        export_matrix_csv(M, sys.stdout)
    return EXIT_OK


def _ratio(value: str) -> float:
    r = float(value)
    if not 0.0 < r < 1.0:
        raise argparse.ArgumentTypeError("family ratio must lie in (0, 1)")
    return r


def _positive_float(value: str) -> float:
    v = float(value)
    if not v > 0.0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="toeplitz-fp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", help="classify positive solutions of a toeplitz model")
    p.add_argument("model")
    p.add_argument("--grid-points", type=int)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("solve", help="solution prefix by the forward recurrence")
    p.add_argument("model")
    p.add_argument("--n-terms", type=int, dest="n_terms")
    p.add_argument("--seed", type=float, nargs="+")
    p.add_argument("--normalize", choices=[m.value for m in Normalization])
    p.add_argument("--window", type=int)
    p.add_argument("--out", help="CSV file for the entries")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("truncate-study", help="Perron vectors of growing truncations")
    p.add_argument("model")
    p.add_argument("--sizes", type=int, nargs="+")
    p.add_argument("--prefix-len", type=int, dest="prefix_len")
    p.add_argument("--tol", type=_positive_float)
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--normalize", choices=["x0", "unit_l1"])
    p.add_argument("--csv-dir", dest="csv_dir", help="directory for per-size vector CSVs")
    p.set_defaults(func=cmd_truncate_study)

    p = sub.add_parser("verify-hypotheses", help="check the general-matrix conditions")
    p.add_argument("model")
    p.add_argument("--rows", type=int)
    p.set_defaults(func=cmd_verify_hypotheses)

    p = sub.add_parser("kras-audit", help="contraction and equismallness audit")
    p.add_argument("model")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--support-len", type=int, default=50, dest="support_len")
    p.add_argument("--epsilon", type=_positive_float, default=1e-3)
    p.add_argument("--rng-seed", type=int, default=DEFAULT_RNG_SEED, dest="rng_seed")
    p.add_argument("--family-ratio", type=_ratio, action="append", dest="family_ratio")
    p.set_defaults(func=cmd_kras_audit)

    p = sub.add_parser("export", help="write the model back in canonical form")
    p.add_argument("model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("matrix", help="dense truncation as CSV")
    p.add_argument("model")
    p.add_argument("--size", type=int, required=True, help="j; the matrix is (j+1) x (j+1)")
    p.add_argument("--kind", choices=[k.value for k in TruncationKind], default="LeadingPrincipal")
    p.add_argument("--out")
    p.set_defaults(func=cmd_matrix)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
