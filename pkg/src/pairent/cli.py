"""Command-line interface: ``pairent <command> [options]``.

Every command builds a report dict ``{"command", "config", "rows", ...}``.
``rows`` is the flat table written as CSV; JSON carries the same rows plus
structured results. Floats are rounded to 15 significant digits before any
output is written, so a fixed config and seed give byte-identical JSON.

Exit codes: 0 success, 2 usage or parse error, 3 numeric failure (including
a failed table check), 4 violation in a randomized suite.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__, checks
from .convexroof import convex_roof
from .errors import NumericError, UsageError
from .locc import locc_campaign
from .measure import (ZERO_TOL, classify, genuine_global, measure_m, pair_profile, pairs,
                      result_from_profile)
from .probes import ProbeKind, entanglement_of_formation, mutual_information_fr, wootters_spectrum
from .qstate import DensityMatrix, ghz, load_state_file, mems, named_state, pure_mems, resolve_state

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VIOLATION = 0, 2, 3, 4
TABLE_TOL = 1e-9

# (state, probe) -> ({(i, j) 1-based: value}, M)
TABLE_EXPECTED = {
    ("psi4", "qc"): ({(1, 4): 1.0, (2, 3): 1.0}, 1 / 3),
    ("psi4", "fr"): ({(1, 4): 1.0, (2, 3): 1.0}, 2 / 3),
    ("chi4", "qc"): ({(1, 4): 1.0, (2, 3): 1.0}, 1 / 3),
    ("chi4", "fr"): ({(1, 4): 0.5, (2, 3): 0.5}, 1 / 3),
    ("cluster4", "qc"): ({(1, 4): 1.0, (2, 3): 1.0}, 1 / 3),
    ("cluster4", "fr"): ({(1, 4): 0.5, (2, 3): 0.5}, 1 / 3),
}


def fmt(x):
    """Round to 15 significant digits (round-half-even on the binary value)."""
    return float(format(x, ".15g"))


def clean(obj):
    """Make a report JSON-ready: plain types, rounded floats, non-finite as None."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt(float(obj)) if math.isfinite(obj) else None
    return obj


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return " ".join(_csv_cell(x) for x in v)
    return str(v)


def render_json(report):
    return json.dumps(report, indent=2) + "\n"


def render_csv(report):
    rows = report["rows"]
    fields = []
    for row in rows:
        fields += [k for k in row if k not in fields]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_csv_cell(row.get(k)) for k in fields])
    return buf.getvalue()


def render_text(report):
    out = [f"# pairent {report['command']}"]
    out += [f"#   {k} = {_csv_cell(v)}" for k, v in report["config"].items()]
    rows = report["rows"]
    if rows:
        fields = []
        for row in rows:
            fields += [k for k in row if k not in fields]
        cells = [[_csv_cell(row.get(k)) for k in fields] for row in rows]
        widths = [max(len(f), *(len(c[i]) for c in cells)) for i, f in enumerate(fields)]
        out.append("  ".join(f.ljust(w) for f, w in zip(fields, widths)).rstrip())
        out += ["  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip() for line in cells]
    for k, v in report.get("summary", {}).items():
        out.append(f"{k}: {_csv_cell(v)}")
    return "\n".join(out) + "\n"


RENDERERS = {"json": render_json, "csv": render_csv, "text": render_text}


def _config(args):
    skip = {"func"}
    cfg = {"version": __version__}
    cfg.update({k: v for k, v in sorted(vars(args).items()) if k not in skip})
    return cfg


def _probes(choice, d=2):
    if choice == "both":
        return ["qc", "fr"] if d == 2 else ["fr"]
    return [choice]


def _load_states(args):
    """``[(label, state, warning)]`` from ``--state`` and ``--state-file``."""
    out = []
    for text in args.state or []:
        state, warning = resolve_state(text, d=args.dim)
        out.append((text, state, warning))
    for path in args.state_file or []:
        out.append((path, load_state_file(path), None))
    if not out:
        raise UsageError("give at least one --state or --state-file")
    return out


def _roof_options(args):
    return {"restarts": args.restarts, "seed": args.seed, "jobs": args.jobs}


def _profile_rows(label, result, roof=None):
    prof = result.profile
    rows = [{"state": label, "probe": prof.kind.value, "quantity": "pair",
             "pair": f"{i + 1},{j + 1}", "site_i": i, "site_j": j, "value": v}
            for (i, j), v in prof.values.items()]
    extra = {"classification": result.classification.value,
             "genuine_global": result.genuine_global, "upper_bound": result.upper_bound}
    rows.append({"state": label, "probe": prof.kind.value, "quantity": "M",
                 "value": result.m_value, **extra})
    rows.append({"state": label, "probe": prof.kind.value, "quantity": "MT",
                 "value": result.mt_value, **extra})
    entry = {
        "state": label, "probe": prof.kind.value, "n": prof.n, "d": prof.d,
        "pairs": [{"sites": [i, j], "label": [i + 1, j + 1], "value": v}
                  for (i, j), v in prof.values.items()],
        "M": result.m_value, "MT": result.mt_value, "normalization": result.factor,
        "classification": result.classification.value,
        "genuine_global": result.genuine_global, "upper_bound": result.upper_bound,
    }
    if roof is not None:
        entry["roof"] = {"restarts": roof.restarts, "converged": roof.converged,
                         "members": roof.decomposition.size}
    return rows, entry


def cmd_measure(args):
    rows, results = [], []
    for label, state, warning in _load_states(args):
        if warning:
            print(f"warning: {label}: {warning}", file=sys.stderr)
        for kind in _probes(args.probe, state.d):
            if args.command == "profile" and (args.direct or not isinstance(state, DensityMatrix)):
                result = result_from_profile(pair_profile(state, kind), args.tolerance)
                roof = None
            else:
                result = measure_m(state, kind, args.tolerance, **_roof_options(args))
                roof = result.roof
            r, entry = _profile_rows(label, result, roof)
            if warning:
                entry["warning"] = warning
            rows += r
            results.append(entry)
    summary = {f"M_{e['probe']}[{e['state']}]": e["M"] for e in results}
    return {"rows": rows, "results": results, "summary": summary}, EXIT_OK


def cmd_table(args):
    rows, ok = [], True
    for name in ("psi4", "chi4", "cluster4"):
        state = named_state(name)
        for kind in ("qc", "fr"):
            result = measure_m(state, kind)
            expected, m_expected = TABLE_EXPECTED[(name, kind)]
            items = [(f"{i + 1},{j + 1}", i, j, v, expected.get((i + 1, j + 1), 0.0))
                     for (i, j), v in result.profile.values.items()]
            items.append(("M", None, None, result.m_value, m_expected))
            for pair, i, j, value, want in items:
                passed = abs(value - want) <= TABLE_TOL
                ok &= passed
                rows.append({"state": name, "probe": kind, "pair": pair, "site_i": i,
                             "site_j": j, "value": value, "expected": want, "pass": passed})
    summary = {"checks": len(rows), "passed": sum(r["pass"] for r in rows), "all_pass": ok}
    return {"rows": rows, "summary": summary}, EXIT_OK if ok else EXIT_NUMERIC


def parse_grid(text):
    """``a:b:steps`` -> ``steps`` evenly spaced points from ``a`` to ``b`` inclusive."""
    try:
        a, b, steps = text.split(":")
        a, b, steps = float(a), float(b), int(steps)
    except ValueError:
        raise UsageError(f"grid must look like a:b:steps, got {text!r}") from None
    if steps < 1 or not (0 <= a <= 1 and 0 <= b <= 1):
        raise UsageError("grid must lie within [0, 1] with at least one step")
    if steps == 1:
        return [a]
    return [float(x) for x in np.linspace(a, b, steps)]


def cmd_sweep_mems(args):
    m_ghz = measure_m(ghz(4), "fr").m_value
    rows = []
    for x in parse_grid(args.grid):
        fr_mixed = mutual_information_fr(mems(x))
        psi = pure_mems(x)
        fr = measure_m(psi, "fr")
        qc = measure_m(psi, "qc")
        row = {"x": x, "fr_mems": fr_mixed}
        row.update({f"fr_{i + 1}{j + 1}": v for (i, j), v in fr.profile.values.items()})
        row.update({"m_fr": fr.m_value, "m_qc": qc.m_value,
                    "fr_12_above_half": fr.profile[(0, 1)] > 0.5 + ZERO_TOL,
                    "fr_mems_above_half": fr_mixed > 0.5 + ZERO_TOL,
                    "m_fr_below_ghz": fr.m_value < m_ghz - ZERO_TOL})
        rows.append(row)
    return {"rows": rows, "summary": {"m_fr_ghz4": m_ghz}}, EXIT_OK


def cmd_roof(args):
    rows, results = [], []
    for label, state, warning in _load_states(args):
        if not isinstance(state, DensityMatrix):
            state = DensityMatrix(np.outer(state.amplitudes, state.amplitudes.conj()),
                                  state.n, state.d, factor=state.amplitudes[:, None])
        for kind in _probes(args.probe, state.d):
            res = convex_roof(state, kind, member_cap=args.member_cap, form=args.form,
                              **_roof_options(args))
            entry = {"state": label, "probe": kind, "form": args.form, "value": res.value,
                     "upper_bound": res.upper_bound, "converged": res.converged,
                     "restarts": res.restarts, "eigen_value": res.eigen_value,
                     "members": res.decomposition.size,
                     "weights": list(res.decomposition.weights)}
            if state.n == 2 and state.d == 2:
                spec = wootters_spectrum(state)
                entry["reference"] = (spec.concurrence if kind == "qc"
                                      else entanglement_of_formation(state))
                entry["reference_name"] = "concurrence" if kind == "qc" else "eof"
            results.append(entry)
            rows.append({k: v for k, v in entry.items() if k != "weights"})
            for k, f in enumerate(res.trace):
                rows.append({"state": label, "probe": kind, "restart": k, "value": f})
    return {"rows": rows, "results": results}, EXIT_OK


def cmd_locc(args):
    kinds = _probes(args.probe)
    rep = locc_campaign(args.trials, args.n, kinds, args.rounds, args.seed, args.jobs)
    rows = []
    for kind in kinds:
        for n in rep.n_values:
            key = f"{kind}:{n}"
            count = rep.counts.get(key, {"trials": 0, "violations": 0})
            worst = rep.worst.get(key, {})
            rows.append({"probe": kind, "n": n, "trials": count["trials"],
                         "violations": count["violations"],
                         "worst_margin": worst.get("margin"), "worst_seed": worst.get("seed")})
    report = {"rows": rows, "violations": rep.violations,
              "summary": {"violations": rep.violation_count}}
    if args.archive and rep.violations:
        with open(args.archive, "w") as fh:
            json.dump(clean({"config": _config(args), "violations": rep.violations}), fh, indent=2)
    return report, EXIT_VIOLATION if rep.violations else EXIT_OK


def cmd_randcheck(args):
    names = list(checks.SUITES) if args.suite == "all" else [args.suite]
    rows = []
    for name in names:
        fn = checks.SUITES[name]
        kwargs = {"seed": args.seed}
        if args.trials is not None:
            kwargs["trials"] = args.trials
        if name in ("normalization", "lu", "product"):
            kwargs["d"] = args.dim or 2
            if args.n is not None or name == "normalization":
                kwargs["n"] = args.n or 4
        res = fn(**kwargs)
        rows.append({"suite": res.suite, "n": res.n or None, "d": res.d or None,
                     "trials": res.trials, "passed": res.passed,
                     "worst_margin": res.worst_margin, "worst_seed": res.worst_seed})
    failed = [r["suite"] for r in rows if r["passed"] != r["trials"]]
    return {"rows": rows, "summary": {"failed_suites": failed}}, \
        EXIT_VIOLATION if failed else EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=sorted(RENDERERS), default="text")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="worker process cap")

    states = argparse.ArgumentParser(add_help=False)
    states.add_argument("--state", action="append",
                        help="named state (ghz:4, w:3, mems:0.8, ...) or ket expression")
    states.add_argument("--state-file", action="append", help="state JSON file")
    states.add_argument("--dim", type=int, default=None, help="local dimension for kets")
    states.add_argument("--restarts", type=int, default=64)

    parser = argparse.ArgumentParser(prog="pairent", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("measure", "M, M^T and pair profile"),
                           ("profile", "pair profile only")):
        p = sub.add_parser(name, parents=[common, states], help=helptext)
        p.add_argument("--probe", choices=["qc", "fr", "both"], default="both")
        p.add_argument("--tolerance", type=float, default=ZERO_TOL,
                       help="zero threshold for classification")
        if name == "profile":
            p.add_argument("--direct", action="store_true",
                           help="probe mixed reductions directly instead of the convex roof")
        p.set_defaults(func=cmd_measure)

    p = sub.add_parser("table", parents=[common], help="reference table check")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("sweep-mems", parents=[common], help="MEMS family sweep")
    p.add_argument("--grid", default="0:1:11", help="a:b:steps, inclusive")
    p.set_defaults(func=cmd_sweep_mems)

    p = sub.add_parser("roof", parents=[common, states], help="convex roof of a mixed state")
    p.add_argument("--probe", choices=["qc", "fr", "both"], default="qc")
    p.add_argument("--member-cap", type=int, default=None)
    p.add_argument("--form", choices=["m", "sum"], default="m")
    p.set_defaults(func=cmd_roof)

    p = sub.add_parser("locc", parents=[common], help="LOCC monotonicity campaign")
    p.add_argument("--n", type=int, nargs="+", default=[2, 3, 4, 5])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--rounds", type=int, default=2)
    p.add_argument("--probe", choices=["qc", "fr", "both"], default="both")
    p.add_argument("--archive", default=None, help="write violations to this JSON file")
    p.set_defaults(func=cmd_locc)

    p = sub.add_parser("randcheck", parents=[common], help="randomized property suites")
    p.add_argument("--suite", choices=["all", *checks.SUITES], default="all")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_randcheck)
    return parser


def run(argv=None):
    """Parse ``argv`` and return ``(exit_code, output_text)``."""
    args = build_parser().parse_args(argv)
    body, code = args.func(args)
    report = clean({"command": args.command, "config": _config(args), **body})
    return code, RENDERERS[args.format](report)


def main(argv=None):
    try:
        code, text = run(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
