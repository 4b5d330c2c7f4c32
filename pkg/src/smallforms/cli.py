"""Command-line front end.

Exit status: 0 on success, 1 on domain errors (including failed
verifications), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .criteria import (
    CriterionSeries,
    Kind,
    classify,
    critical_exponent,
    g_series,
)
from .domain import (
    ApproxFunction,
    DimensionFunction,
    DomainError,
    FormMatrix,
    PerCoordinate,
    PowerLog,
    ProblemSpec,
    Table,
    Variant,
    parse_number,
    regime_of,
)
from .forms import HeightWindow, enumerate_solutions
from .lab import (
    DEFAULT_BUDGET,
    DEFAULT_DELTAS,
    ExperimentPlan,
    box_count_dimension,
    box_counts_csv,
    load_run,
    persist_run,
    zero_one_verdict,
)
from .reduction import decompose, lift_solution, transport_solutions, verify_certificate

FORMATS = ("json", "csv", "human")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# literal parsers


def parse_psi(text: str) -> ApproxFunction:
    """``powerlog:c,tau,kappa``, ``table:@file.csv`` or ``percoord:[a;b;...]``."""
    family, sep, body = text.strip().partition(":")
    if not sep:
        raise DomainError(f"psi literal must start with a family name, got {text!r}")
    if family == "powerlog":
        parts = [p for p in body.split(",") if p.strip()]
        if not 1 <= len(parts) <= 3:
            raise DomainError("powerlog takes c[,tau[,kappa]]")
        return PowerLog(*(parse_number(p) for p in parts))
    if family == "table":
        if not body.startswith("@"):
            return Table([parse_number(v) for v in body.split(",")])
        return read_table(Path(body[1:]))
    if family == "percoord":
        inner = body.strip()
        if not (inner.startswith("[") and inner.endswith("]")):
            raise DomainError("percoord literal must look like percoord:[psi1;psi2;...]")
        return PerCoordinate([parse_psi(p) for p in inner[1:-1].split(";")])
    raise DomainError(f"unknown psi family {family!r}")


def read_table(path: Path) -> Table:
    """One value per line, or ``r,value`` rows for r = 1, 2, ...; a header row is skipped."""
    try:
        text = path.read_text()
    except OSError as exc:
        raise DomainError(f"cannot read psi table {path}: {exc}") from exc
    values = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        if not row or not "".join(row).strip():
            continue
        cell = row[-1]
        try:
            values.append(parse_number(cell))
        except DomainError:
            if lineno == 1 and not values:
                continue
            raise DomainError(f"{path}:{lineno}: cannot parse {cell!r}") from None
        if len(row) > 1 and row[0].strip() != str(len(values)):
            raise DomainError(f"{path}:{lineno}: expected r = {len(values)}, got {row[0]!r}")
    return Table(values)


def parse_f(text: str) -> DimensionFunction:
    parts = [parse_number(p) for p in text.split(",")]
    if not 1 <= len(parts) <= 2:
        raise DomainError("f literal is s[,kappa]")
    return DimensionFunction(*parts)


def parse_rows(text: str) -> list:
    exact = "." not in text and "e" not in text.lower()
    return [[parse_number(e, exact=exact) for e in row.split(",")] for row in text.strip().split(";")]


def parse_windows(text: str) -> list:
    return [HeightWindow.parse(w) for w in text.split(",")]


def parse_budget(text: str):
    if text.lower() in ("none", "off"):
        return None
    try:
        return int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"budget must be a number or 'none', got {text!r}") from None


# --------------------------------------------------------------------------
# output


def _flat(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flat(v, f"{prefix}{k}.")
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for i, v in enumerate(obj):
            yield from _flat(v, f"{prefix}{i}.")
    else:
        yield prefix[:-1], obj


def key_value_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in _flat(doc):
        w.writerow([k, json.dumps(v) if isinstance(v, list) else v])
    return buf.getvalue()


def human(doc: dict) -> str:
    return "\n".join(f"{k}: {json.dumps(v) if isinstance(v, list) else v}" for k, v in _flat(doc)) + "\n"


def emit(args, doc: dict, csv_text: str | None = None, text: str | None = None):
    fmt = args.format
    if fmt == "json":
        out = json.dumps(doc, indent=2) + "\n"
    elif fmt == "csv":
        out = csv_text if csv_text is not None else key_value_csv(doc)
    else:
        out = text if text is not None else human(doc)
    sys.stdout.write(out)


# --------------------------------------------------------------------------
# subcommands


def _spec(args) -> ProblemSpec:
    return ProblemSpec(args.m, args.n, parse_psi(args.psi), Variant(args.variant))


def cmd_enumerate(args) -> int:
    spec = _spec(args)
    X = FormMatrix.parse(args.matrix)
    if X.shape != (spec.m, spec.n):
        raise DomainError(f"matrix is {X.shape[0]} x {X.shape[1]}, expected {spec.m} x {spec.n}")
    report = enumerate_solutions(spec, X, args.window, inclusive=args.inclusive, guard=args.guard, jobs=args.jobs)
    lines = [f"{report.count} solutions with {report.window.q_min} <= |q| <= {report.window.q_max}"]
    lines += [f"  q = {list(s.q.components)}  |qX| = {[str(v) for v in s.form_values]}  margin = {s.margin}"
              for s in report.solutions]
    if report.uncertain:
        lines.append(f"  undecided (within guard): {[list(q) for q in report.uncertain]}")
    emit(args, report.to_json(), report.shell_counts_csv(), "\n".join(lines) + "\n")
    return 0


def cmd_classify(args) -> int:
    psi = parse_psi(args.psi)
    f = parse_f(args.f) if args.f else None
    if args.kind == "g-series":
        if f is None:
            raise UsageError("classify --kind g-series needs --f")
        doc = g_series(args.m, args.n, psi, f).to_json()
    else:
        doc = classify(CriterionSeries(Kind(args.kind), args.m, args.n, psi, f)).to_json()
    sums = io.StringIO()
    w = csv.writer(sums, lineterminator="\n")
    w.writerow(["cutoff", "sum"])
    for row in doc["partial_sums"]:
        w.writerow([row["cutoff"], repr(row["sum"])])
    emit(args, doc, sums.getvalue())
    return 0


def cmd_critical(args) -> int:
    if args.tau is None:
        psi = parse_psi(args.psi)
        if not isinstance(psi, PowerLog):
            raise DomainError("critical exponents need a power-law psi")
        tau = psi.tau
    else:
        tau = parse_number(args.tau)
    emit(args, critical_exponent(args.kind, args.m, args.n, tau, strict=not args.loose).to_json())
    return 0


def cmd_reduce(args) -> int:
    rx = decompose(parse_rows(args.matrix), parse_number(args.epsilon), parse_number(args.cap))
    emit(args, rx.to_json())
    return 0


def cmd_lift(args) -> int:
    rx = decompose(parse_rows(args.matrix), parse_number(args.epsilon), parse_number(args.cap))
    psi = parse_psi(args.psi)
    if args.r:
        certs = [lift_solution(rx, [int(x) for x in args.r.split(",")], psi)]
    else:
        certs = transport_solutions(rx, psi, args.window, jobs=args.jobs)
    doc = {"count": len(certs), "certificates": [c.to_json() for c in certs]}
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    lines = [f"{len(certs)} certificates"]
    lines += [f"  r = {list(c.r.components)} -> q = {list(c.q.components)}  |qX| = {[str(v) for v in c.form_values]}"
              for c in certs]
    emit(args, doc, text="\n".join(lines) + "\n")
    return 0


def _load_certificates(path: str) -> list:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if isinstance(obj, dict) and "certificates" in obj:
        obj = obj["certificates"]
    return obj if isinstance(obj, list) else [obj]


def cmd_verify_cert(args) -> int:
    results = [verify_certificate(c if isinstance(c, dict) else {}) for c in _load_certificates(args.certificate)]
    ok = all(r.ok for r in results)
    doc = {"ok": ok, "results": [r.to_json() for r in results]}
    text = f"{'ok' if ok else 'FAILED'}: {sum(r.ok for r in results)}/{len(results)} certificates verified\n"
    text += "".join(f"  #{i}: {f}\n" for i, r in enumerate(results) for f in r.failures)
    emit(args, doc, text=text)
    return 0 if ok else 1


def cmd_verify_law(args) -> int:
    if args.replay:
        plan = load_run(args.replay).plan
    else:
        missing = [name for name in ("m", "n", "psi", "schedule") if getattr(args, name) is None]
        if missing:
            raise UsageError(f"verify-law needs --{', --'.join(missing)} (or --replay)")
        plan = ExperimentPlan(_spec(args), args.seed, parse_windows(args.schedule), args.samples)
    record = zero_one_verdict(plan, jobs=args.jobs, budget=args.budget)
    if args.out:
        persist_run(record, args.out)
    lines = [f"predicted {record.predicted}; {record.statement}"]
    lines += [f"  [{r.window.q_min}, {r.window.q_max}]  fraction {r.fraction:.4f}  95% CI [{r.ci_low:.4f}, {r.ci_high:.4f}]"
              for r in record.results]
    emit(args, record.to_json(), record.fractions_csv(), "\n".join(lines) + "\n")
    return 0


def cmd_box_dim(args) -> int:
    psi = parse_psi(args.psi)
    if not isinstance(psi, PowerLog) or psi.kappa != 0:
        raise DomainError("box counting needs psi = c r^(-tau) (powerlog with kappa = 0)")
    deltas = [float(parse_number(d)) for d in args.schedule.split(",")] if args.schedule else DEFAULT_DELTAS
    result = box_count_dimension(args.m, args.n, psi.tau, deltas, c=psi.c)
    emit(args, result.to_json(), box_counts_csv(result))
    return 0


def cmd_regime(args) -> int:
    regime = regime_of(args.m, args.n, Variant(args.variant))
    doc = {"m": args.m, "n": args.n, "variant": args.variant, "regime": regime.value}
    emit(args, doc, text=regime.value + "\n")
    return 0


# --------------------------------------------------------------------------
# parser


def _window(text):
    try:
        return HeightWindow.parse(text)
    except (DomainError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smallforms", description="Small linear forms workbench.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_text, default_format="json"):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("--format", choices=FORMATS, default=default_format)
        return p

    def dims(p, required=True):
        p.add_argument("--m", type=int, required=required)
        p.add_argument("--n", type=int, required=required)

    def variant(p):
        p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.ABSOLUTE.value)

    def jobs(p):
        p.add_argument("--jobs", type=int, default=1)

    def reduction_args(p):
        p.add_argument("--matrix", required=True, help="rows separated by ';', entries by ','")
        p.add_argument("--epsilon", required=True)
        p.add_argument("--cap", required=True, help="entry bound N of the top block")

    p = add("enumerate", cmd_enumerate, "List sign-canonical solutions q in a height window.")
    dims(p)
    variant(p)
    p.add_argument("--psi", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--window", type=_window, required=True, help="qmin:qmax")
    p.add_argument("--inclusive", action="store_true", help="use <= instead of <")
    p.add_argument("--guard", type=float, default=1e-12)
    jobs(p)

    p = add("classify", cmd_classify, "Classify a criterion series.")
    p.add_argument("--kind", required=True, choices=[k.value for k in Kind] + ["g-series"])
    dims(p)
    p.add_argument("--psi", required=True)
    p.add_argument("--f", help="dimension function s[,kappa]")

    p = add("critical", cmd_critical, "Critical exponent s* for psi = r^(-tau).")
    p.add_argument("--kind", required=True, choices=[Kind.W0_HAUSDORFF_THM1.value, Kind.W_HAUSDORFF_THM3.value])
    dims(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--tau")
    g.add_argument("--psi")
    p.add_argument("--loose", action="store_true", help="skip the (m, n) admissibility check")

    p = add("reduce", cmd_reduce, "Decompose X into top block and X^.")
    reduction_args(p)

    p = add("lift", cmd_lift, "Lift classical solutions on X^ to certificates for X.")
    reduction_args(p)
    p.add_argument("--psi", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--window", type=_window, help="heights of r, qmin:qmax")
    g.add_argument("--r", help="a single vector r, comma separated")
    p.add_argument("--out", help="also write the certificates to this file")
    jobs(p)

    p = add("verify-cert", cmd_verify_cert, "Re-verify lift certificates from a file ('-' for stdin).")
    p.add_argument("certificate")

    p = add("verify-law", cmd_verify_law, "Monte Carlo hit-fraction trend against the series verdict.")
    dims(p, required=False)
    variant(p)
    p.add_argument("--psi")
    p.add_argument("--schedule", help="windows, e.g. 1:25,1:50,1:100")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=parse_budget, default=DEFAULT_BUDGET)
    p.add_argument("--out", help="write the run record here")
    p.add_argument("--replay", help="re-run the plan stored in a run record")
    jobs(p)

    p = add("box-dim", cmd_box_dim, "Box-counting slope for psi = c r^(-tau).")
    dims(p)
    p.add_argument("--psi", required=True)
    p.add_argument("--schedule", help="deltas, e.g. 1/16,1/32,1/64")

    p = add("regime", cmd_regime, "Which zero-full law applies to (m, n).", default_format="human")
    dims(p)
    variant(p)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"smallforms: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ValueError, ZeroDivisionError, OSError) as exc:
        if args.format == "json":
            print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        else:
            print(f"smallforms: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
