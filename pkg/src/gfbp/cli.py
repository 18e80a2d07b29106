"""Command-line front end: ``gfbp elastic-net | heron | verify``.

Exit status: 0 success, 1 parameter/input error, 2 divergence,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import DivergenceError, GfbpError
from .operators import make_rng
from .problems import (ElasticNetConfig, HeronConfig, build_elastic_net, build_heron,
                       gen_heron_instance, gen_hilbert_problem, gen_regression_data,
                       load_csv_matrix, load_csv_vector)
from .schedules import StepSchedule, cocoercivity_bound, validate
from .solver import STOP_MODES, StoppingRule, run
from .verify import run_checks

log = logging.getLogger("gfbp")

EXIT_OK, EXIT_PARAM, EXIT_DIVERGED, EXIT_VERIFY = 0, 1, 2, 3

COMMON_DEFAULTS = {
    "seed": 42, "tol": 1e-5, "max_iters": 200_000, "stop_mode": "relative_change",
    "trace_every": 1, "trace": None, "summary": None, "json": False, "strict": False,
    "bound_rule": "auto",
    "schedule": {"a": 1.0, "p": 1.0, "xi": 0.9, "q": 1.0},
}
ELASTIC_DEFAULTS = {"m": 20, "n": 50, "gamma": 0.5, "split": False, "hilbert": None,
                    "csv_A": None, "csv_b": None, "nonzero_frac": 0.5}
HERON_DEFAULTS = {"dim": None, "targets": None, "samples": 1, "identity_A": False,
                  "start": "random", "seed": 0}


class _Parser(argparse.ArgumentParser):
    # usage errors are parameter errors, not the argparse default of 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAM, f"{self.prog}: error: {message}\n")


def _add_common(p):
    p.add_argument("--config", type=Path, help="JSON config file; flags override its values")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float, help="optimality tolerance")
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--stop-mode", dest="stop_mode", choices=STOP_MODES)
    p.add_argument("--trace-every", dest="trace_every", type=int)
    p.add_argument("--trace", type=Path, help="write the per-iteration trace CSV here")
    p.add_argument("--summary", type=Path, help="write the JSON summary here")
    p.add_argument("--json", action="store_const", const=True, help="print the summary as JSON")
    p.add_argument("--strict", action="store_const", const=True,
                   help="refuse schedules that fail validation")
    p.add_argument("--bound-rule", dest="bound_rule", choices=("auto", "smooth", "penalty", "min"))
    p.add_argument("--a", type=float, help="step scale in alpha_k = a/k^p")
    p.add_argument("--p", type=float, help="step exponent")
    p.add_argument("--xi", type=float, help="penalty scale in beta_k = xi*k^q")
    p.add_argument("--q", type=float, help="penalty exponent")


def build_parser():
    parser = _Parser(prog="gfbp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    en = sub.add_parser("elastic-net", help="constrained elastic net over the unit box")
    _add_common(en)
    en.add_argument("--m", type=int, help="observations")
    en.add_argument("--n", type=int, help="predictors")
    en.add_argument("--gamma", type=float, help="elastic-net parameter in [0, 1]")
    en.add_argument("--split", action="store_const", const=True,
                    help="one rank-one block per observation")
    en.add_argument("--hilbert", type=int, metavar="M",
                    help="Hilbert-type instance of size (M, 2^M)")
    en.add_argument("--csv-A", dest="csv_A", type=Path, help="design matrix CSV")
    en.add_argument("--csv-b", dest="csv_b", type=Path, help="response vector CSV")
    en.add_argument("--nonzero-frac", dest="nonzero_frac", type=float)

    he = sub.add_parser("heron", help="generalized Heron problem with unit-ball targets")
    _add_common(he)
    he.add_argument("--dim", type=int, help="space dimension n")
    he.add_argument("--targets", type=int, help="number of target balls m")
    he.add_argument("--samples", type=int, help="random instances to average over")
    he.add_argument("--identity-A", dest="identity_A", action="store_const", const=True,
                    help="use A = I (unique feasible point 0)")
    he.add_argument("--start", choices=("random", "zero"), help="starting point")

    ve = sub.add_parser("verify", help="run the oracle self-checks")
    ve.add_argument("--json", action="store_true")
    ve.add_argument("--seed", type=int, default=0)
    return parser


def resolve_config(args, defaults):
    """Merge defaults, then the config file, then explicit flags."""
    cfg = json.loads(json.dumps(defaults))
    if getattr(args, "config", None):
        try:
            from_file = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise GfbpError(f"cannot read config {args.config}: {exc}") from exc
        for key, val in from_file.items():
            key = key.replace("-", "_")
            if key == "schedule":
                cfg["schedule"].update(val)
            elif key.startswith("schedule."):
                cfg["schedule"][key.split(".", 1)[1]] = val
            else:
                cfg[key] = val
    for key, val in vars(args).items():
        if val is None or key in ("config", "command", "verbose"):
            continue
        if key in ("a", "p", "xi", "q"):
            cfg["schedule"][key] = val
        else:
            cfg[key] = val
    for key in ("trace", "summary", "csv_A", "csv_b"):
        if cfg.get(key) is not None:
            cfg[key] = Path(cfg[key])
    return cfg


def _schedule(cfg):
    s = cfg["schedule"]
    return StepSchedule(a=float(s["a"]), p=float(s["p"]), xi=float(s["xi"]), q=float(s["q"]))


def _stopping(cfg):
    return StoppingRule(tol=float(cfg["tol"]), max_iters=int(cfg["max_iters"]), mode=cfg["stop_mode"])


def _check_schedule(schedule, problem, cfg):
    bound = cocoercivity_bound(problem.smooth, problem.penalty, cfg["bound_rule"])
    report = validate(schedule, bound)
    if not report.ok:
        msg = "schedule fails validation:\n" + str(report)
        if cfg["strict"]:
            raise GfbpError(msg)
        log.warning(msg)
    return report


def _emit(summary, cfg, out):
    if cfg.get("summary"):
        Path(cfg["summary"]).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    if cfg["json"]:
        out.write(json.dumps(summary, indent=2) + "\n")
    else:
        width = max(len(k) for k in summary)
        for key, val in summary.items():
            if isinstance(val, float):
                val = f"{val:.6g}"
            out.write(f"{key:<{width}}  {val}\n")


def _write_trace(report, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        report.write_trace(fh)


def cmd_elastic_net(cfg, out=None):
    out = out or sys.stdout
    if cfg["hilbert"] is not None:
        A, b = gen_hilbert_problem(int(cfg["hilbert"]))
        source = f"hilbert({cfg['hilbert']})"
    elif cfg["csv_A"] is not None:
        if cfg["csv_b"] is None:
            raise GfbpError("--csv-A needs --csv-b")
        A, b = load_csv_matrix(cfg["csv_A"]), load_csv_vector(cfg["csv_b"])
        source = f"csv({cfg['csv_A']})"
    else:
        A, b, _ = gen_regression_data(int(cfg["m"]), int(cfg["n"]), int(cfg["seed"]),
                                      float(cfg["nonzero_frac"]))
        source = f"synthetic(seed={cfg['seed']})"
    problem = build_elastic_net(ElasticNetConfig(A, b, float(cfg["gamma"]), bool(cfg["split"])))
    schedule = _schedule(cfg)
    validation = _check_schedule(schedule, problem, cfg)
    report = run(problem, schedule, _stopping(cfg), trace_every=int(cfg["trace_every"]))
    if cfg["trace"]:
        _write_trace(report, cfg["trace"])
    summary = {"experiment": "elastic-net", "instance": source, "m": A.shape[0], "n": A.shape[1],
               "gamma": float(cfg["gamma"]), "split": bool(cfg["split"]), "blocks": problem.m}
    summary.update(report.summary())
    summary["schedule_valid"] = validation.ok
    _emit(summary, cfg, out)
    return EXIT_OK


def _heron_instance(cfg, sample):
    n, m = int(cfg["dim"]), int(cfg["targets"])
    seed = int(cfg["seed"]) + sample
    inst = gen_heron_instance(n, m, seed)
    if cfg["identity_A"]:
        inst = HeronConfig(centers=inst.centers, A=np.eye(n), radii=inst.radii)
    if cfg["start"] == "zero":
        x1 = np.zeros(n)
    else:
        # separate stream so the instance does not depend on the start choice
        x1 = make_rng([seed, 1]).uniform(-n ** 2, n ** 2, n)
    return inst, x1


def cmd_heron(cfg, out=None):
    out = out or sys.stdout
    if cfg["dim"] is None or cfg["targets"] is None:
        raise GfbpError("heron needs --dim and --targets")
    samples = int(cfg["samples"])
    if samples < 1:
        raise GfbpError("--samples must be at least 1")
    rows = []
    for s in range(samples):
        inst, x1 = _heron_instance(cfg, s)
        problem = build_heron(inst)
        sched_cfg = dict(cfg["schedule"])
        if not cfg.get("xi_fixed"):
            # default penalty scale: 0.9 times the cocoercivity of grad(0.5||Ax||^2)
            sched_cfg["xi"] = 0.9 * problem.penalty.cocoercivity / float(sched_cfg["a"])
        schedule = StepSchedule(**{k: float(v) for k, v in sched_cfg.items()})
        validation = _check_schedule(schedule, problem, cfg)
        report = run(problem, schedule, _stopping(cfg), trace_every=int(cfg["trace_every"]), x1=x1)
        if cfg["trace"]:
            path = Path(cfg["trace"])
            if samples > 1:
                path = path.with_name(f"{path.stem}.s{s}{path.suffix}")
            _write_trace(report, path)
        rows.append({"iterations": report.iterations, "elapsed_s": report.elapsed,
                     "final_F": report.final_F, "final_g": report.final_g,
                     "final_norm_C": report.final_norm_C,
                     "norm_x": float(np.linalg.norm(report.x)),
                     "norm_z": float(np.linalg.norm(report.z)),
                     "termination": report.reason, "xi": schedule.xi,
                     "schedule_valid": validation.ok})
    summary = {"experiment": "heron", "dim": int(cfg["dim"]), "targets": int(cfg["targets"]),
               "samples": samples, "stopping_rule": _stopping(cfg).describe()}
    for key in ("iterations", "elapsed_s", "final_F", "final_g", "final_norm_C", "norm_x", "norm_z"):
        summary[f"mean_{key}"] = float(np.mean([r[key] for r in rows]))
    reasons = sorted({r["termination"] for r in rows})
    summary["termination"] = {r: sum(row["termination"] == r for row in rows) for r in reasons}
    summary["schedule_valid"] = all(r["schedule_valid"] for r in rows)
    if samples == 1:
        summary["final_x"] = [float(v) for v in report.x]
        summary["final_z"] = [float(v) for v in report.z]
    _emit(summary, cfg, out)
    return EXIT_OK


def cmd_verify(as_json=False, seed=0, out=None):
    out = out or sys.stdout
    results = run_checks(seed)
    if as_json:
        out.write(json.dumps({"passed": all(r.passed for r in results),
                              "checks": [vars(r) for r in results]}, indent=2) + "\n")
    else:
        width = max(len(r.name) for r in results)
        for r in results:
            out.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


def _dispatch(args):
    if args.command == "verify":
        return cmd_verify(args.json, args.seed)
    if args.command == "elastic-net":
        cfg = resolve_config(args, {**COMMON_DEFAULTS, **ELASTIC_DEFAULTS})
        return cmd_elastic_net(cfg)
    cfg = resolve_config(args, {**COMMON_DEFAULTS, **HERON_DEFAULTS})
    cfg["xi_fixed"] = args.xi is not None or _file_sets_xi(args)
    return cmd_heron(cfg)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        # overflow is reported as divergence, so numpy's own warnings are noise here
        with np.errstate(over="ignore", invalid="ignore"):
            return _dispatch(args)
    except DivergenceError as exc:
        print(f"gfbp: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (GfbpError, ValueError) as exc:
        print(f"gfbp: error: {exc}", file=sys.stderr)
        return EXIT_PARAM


def _file_sets_xi(args):
    if not args.config:
        return False
    data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    return "xi" in data.get("schedule", {}) or "schedule.xi" in data


if __name__ == "__main__":
    sys.exit(main())
