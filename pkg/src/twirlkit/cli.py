"""Command-line interface.

Subcommands: ``omega``, ``simulate``, ``estimate``, ``diagnose``,
``samplesize``, ``plotdata``.  Exit codes are a stable contract for scripts:

* 0 -- success (or diagnostic pass),
* 1 -- usage error,
* 2 -- data error (unreadable/mismatched files),
* 3 -- diagnostic test failed.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIAGNOSTIC_FAIL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="twirlkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_omega = sub.add_parser("omega", help="print the weight transfer matrix")
    p_omega.add_argument("--n", type=int, required=True)
    p_omega.add_argument("--inverse", action="store_true")
    p_omega.add_argument("--format", choices=["rational", "decimal", "csv"],
                         default="rational")

    p_sim = sub.add_parser("simulate", help="run a protocol simulation from a config")
    p_sim.add_argument("--config", required=True)

    p_est = sub.add_parser("estimate", help="estimate weight probabilities from trials")
    p_est.add_argument("--trials", required=True)
    p_est.add_argument("--reference", default=None)
    p_est.add_argument("--method", choices=["linear", "mle"], default="mle")
    p_est.add_argument("--report", required=True)

    p_diag = sub.add_parser("diagnose", help="run a diagnostic test on a report")
    p_diag.add_argument("--report", required=True)
    p_diag.add_argument("--test", choices=["scaling", "markov", "scale-b"], required=True)
    p_diag.add_argument("--report2", default=None,
                        help="second report (longer interval) for the markov test")
    p_diag.add_argument("--m", type=int, default=2,
                        help="interval multiple between the two markov reports")
    p_diag.add_argument("--tolerance", type=float, default=3.0,
                        help="stderr multiple for the scale-b envelope")
    p_diag.add_argument("--out", default=None,
                        help="write the updated report here (default: in place)")

    p_size = sub.add_parser("samplesize", help="trial-count bounds for target precision")
    p_size.add_argument("--delta", type=float, required=True)
    p_size.add_argument("--epsilon", type=float, default=0.05)
    p_size.add_argument("--n", type=int, default=None,
                        help="qubit count for the all-weights (union) bound")
    p_size.add_argument("--single", action="store_true",
                        help="bound for a single parameter instead")

    p_plot = sub.add_parser("plotdata", help="emit plot-ready tables from a report")
    p_plot.add_argument("--report", required=True)
    p_plot.add_argument("--kind", choices=["contours", "weights", "c-scaling"],
                        required=True)
    p_plot.add_argument("--out", required=True)
    return parser


def _cmd_omega(args) -> int:
    from .weightspace import omega, omega_inv

    mat = omega_inv(args.n) if args.inverse else omega(args.n)
    if args.format == "rational":
        for row in mat.entries:
            print(" ".join(str(x) for x in row))
    elif args.format == "decimal":
        for row in mat.as_array():
            print(" ".join(f"{v:.12g}" for v in row))
    else:
        for row in mat.as_array():
            print(",".join(repr(float(v)) for v in row))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    from .fileio import load_experiment_config, write_trials
    from .protocol import ProtocolConfig, simulate_ensemble, simulate_standard

    cfg = load_experiment_config(args.config)
    pcfg = ProtocolConfig(
        n=cfg.n,
        channel=cfg.channel,
        variant=cfg.variant,
        trials=cfg.trials,
        master_seed=cfg.master_seed,
        spam_model=cfg.spam_model,
    )
    start = time.perf_counter()
    if cfg.variant == "standard":
        sets = [simulate_standard(pcfg)]
    else:
        sets = [simulate_ensemble(pcfg, w) for w in range(1, cfg.n + 1)]
    write_trials(cfg.output, sets)
    elapsed = time.perf_counter() - start
    total = sum(s.trials for s in sets)
    print(f"n={cfg.n} trials={total} seed={cfg.master_seed} "
          f"elapsed={elapsed:.3f}s -> {cfg.output}")
    return EXIT_OK


def _estimate_report(trials_path, reference_path, method) -> dict:
    from .estimator import estimate_c, linear_invert, mle_fit, normalize_reference
    from .fileio import DataFormatError, read_trials

    header, sets = read_trials(trials_path)
    if not sets:
        raise DataFormatError(f"{trials_path}: no trial records")
    est = estimate_c(sets if len(sets) > 1 else sets[0])
    response_scale = None
    report: dict = {
        "n": header["n"],
        "trials": header["trials"],
        "master_seed": header["master_seed"],
        "c_hat": [None if np.isnan(v) else v for v in est.c_hat.tolist()],
        "stderr": [None if np.isnan(v) else v for v in est.stderr.tolist()],
        "normalized": False,
        "diagnostics": [],
    }
    if reference_path is not None:
        ref_header, ref_sets = read_trials(reference_path)
        if ref_header["n"] != header["n"]:
            raise DataFormatError("reference register size differs from trials")
        ref = estimate_c(ref_sets if len(ref_sets) > 1 else ref_sets[0])
        report["c_ref"] = ref.c_hat.tolist()
        report["c_ref_stderr"] = ref.stderr.tolist()
        est = normalize_reference(est, ref)
        report["normalized"] = True
        report["unusable"] = list(est.unusable)
        report["c_hat"] = [None if np.isnan(v) else v for v in est.c_hat.tolist()]
        report["stderr"] = [None if np.isnan(v) else v for v in est.stderr.tolist()]
        # The likelihood keeps consuming raw counts; the measured reference
        # attenuation enters through the response model instead.
        response_scale = ref.c_hat.copy()
        response_scale[list(est.unusable)] = np.nan
    inv = linear_invert(est)
    report["p_linear"] = inv.p.p.tolist()
    report["p_linear_stderr"] = inv.stderr.tolist()
    report["nonphysical_weights"] = list(inv.p.nonphysical_weights)
    if method == "mle":
        fit = mle_fit(est.even_counts, est.totals, est.n, response_scale=response_scale)
        report["p_mle"] = fit.p_hat.p.tolist()
        report["log_likelihood"] = fit.log_likelihood
        report["contours"] = [
            {"level": level, "points": [poly.tolist() for poly in polys]}
            for level, polys in sorted(fit.confidence_contours.items())
        ]
    return report


def _cmd_estimate(args) -> int:
    from .fileio import write_report

    report = _estimate_report(args.trials, args.reference, args.method)
    write_report(args.report, report)
    print(f"report -> {args.report}")
    return EXIT_OK


def _estimate_from_report(doc) -> "object":
    from .estimator import ParityEstimate

    n = doc["n"]
    c = np.array([np.nan if v is None else v for v in doc["c_hat"]], dtype=float)
    se = np.array([np.nan if v is None else v for v in doc["stderr"]], dtype=float)
    return ParityEstimate(n, c, se, np.zeros(n + 1), np.zeros(n + 1),
                          normalized=doc.get("normalized", False),
                          unusable=tuple(doc.get("unusable", [])))


def _cmd_diagnose(args) -> int:
    from .channels import WeightDistribution
    from .diagnostics import correlation_scale, markovianity_test, scaling_law_test
    from .fileio import read_report, write_report

    doc = read_report(args.report)
    est = _estimate_from_report(doc)
    if args.test == "scaling":
        verdict = scaling_law_test(est)
    elif args.test == "markov":
        if args.report2 is None:
            raise _UsageError("--test markov needs --report2")
        doc2 = read_report(args.report2)
        verdict = markovianity_test(est, _estimate_from_report(doc2), m=args.m)
    else:
        p = WeightDistribution(doc["n"], np.array(doc["p_linear"]))
        verdict = correlation_scale(p, np.array(doc["p_linear_stderr"]),
                                    tolerance=args.tolerance)
    entry = {
        "test": verdict.test,
        "statistic": verdict.statistic,
        "threshold": verdict.threshold,
        "pass": verdict.passed,
        "details": verdict.details,
    }
    doc.setdefault("diagnostics", [])
    doc["diagnostics"] = [d for d in doc["diagnostics"] if d.get("test") != verdict.test]
    doc["diagnostics"].append(entry)
    write_report(args.out or args.report, doc)
    print(f"{verdict.test}: {'PASS' if verdict.passed else 'FAIL'} "
          f"(statistic={verdict.statistic:.4g}, threshold={verdict.threshold:.4g})")
    return EXIT_OK if verdict.passed else EXIT_DIAGNOSTIC_FAIL


def _cmd_samplesize(args) -> int:
    from .weightspace import chernoff_sample_size, union_bound_sample_size

    if args.single or args.n is None:
        k = chernoff_sample_size(args.delta, args.epsilon)
    else:
        k = union_bound_sample_size(args.n, args.delta, args.epsilon)
    print(k)
    return EXIT_OK


def _cmd_plotdata(args) -> int:
    from .fileio import DataFormatError, read_report

    doc = read_report(args.report)
    lines = []
    if args.kind == "contours":
        if "contours" not in doc:
            raise DataFormatError("report has no contours section (estimate with --method mle)")
        n = doc["n"]
        header = "level,point," + ",".join(f"p{w}" for w in range(n + 1))
        lines.append(header)
        for block in doc["contours"]:
            for poly in block["points"]:
                for i, pt in enumerate(poly):
                    lines.append(f"{block['level']},{i}," + ",".join(repr(float(v)) for v in pt))
    elif args.kind == "weights":
        if "p_linear" not in doc:
            raise DataFormatError("report has no weight estimates")
        lines.append("w,p_w,sigma_w")
        for w, (p, s) in enumerate(zip(doc["p_linear"], doc["p_linear_stderr"])):
            lines.append(f"{w},{p!r},{s!r}")
    else:
        lines.append("w,c_w,c1_pow_w")
        c = doc["c_hat"]
        if c[1] is None:
            raise DataFormatError("c_1 unusable; cannot emit scaling table")
        for w, v in enumerate(c):
            lines.append(f"{w},{v!r},{(c[1] ** w)!r}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"{args.kind} -> {args.out}")
    return EXIT_OK


_COMMANDS = {
    "omega": _cmd_omega,
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "diagnose": _cmd_diagnose,
    "samplesize": _cmd_samplesize,
    "plotdata": _cmd_plotdata,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
