"""Command-line front end: ``lift``, ``integrate``, ``verify``, ``metrics``.

JSON goes to stdout (or ``--out``); a one-line summary goes to stderr.
Exit codes: 0 success, 1 failed verification, 2 input error, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .character_group import basis
from .effect_integrator import NonConvergenceError, full_integral_result, integral_path, local_error_report, y_tilde
from .fixtures import ConfigError, build_one_form, build_path
from .forest_algebra import encode
from .rough_path import canonical_lift, dp_metric, read_csv
from .schemas import SCHEMA_VERSION
from .verification import SUITES, run_suite

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_NONCONVERGENCE = 0, 1, 2, 3


def _load_config(path: str | None) -> tuple[dict, Path | None]:
    if path is None:
        return {}, None
    p = Path(path)
    try:
        with open(p) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{p}: config must be a JSON object")
    return cfg, p.parent


def _seed(args, cfg: dict) -> int | None:
    return args.seed if args.seed is not None else cfg.get("seed")


def _clean(obj):
    """Make numpy scalars and non-finite floats JSON-safe."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(report: dict, out: str | None):
    text = json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_lift(args) -> int:
    cfg, base = _load_config(args.config)
    if args.csv:
        t, x = read_csv(args.csv)
        p = args.p if args.p is not None else float(cfg.get("p", 1.0))
        X = canonical_lift(t, x, p=p)
    else:
        if not cfg:
            raise ConfigError("lift needs --config or --csv")
        X = build_path(cfg, _seed(args, cfg), base)
    _emit({"schema_version": SCHEMA_VERSION, "path": X.to_json()}, args.out)
    print(f"lifted {len(X)} samples, d={X.d}, p={X.p}", file=sys.stderr)
    return EXIT_OK


def _interval(cfg: dict, X) -> tuple[float, float]:
    s, t = cfg.get("interval", [float(X.times[0]), float(X.times[-1])])
    try:
        X.index(s), X.index(t)
    except ValueError as exc:
        raise ConfigError(f"interval: {exc}") from None
    if t <= s:
        raise ConfigError("interval must satisfy s < t")
    return float(s), float(t)


def cmd_integrate(args) -> int:
    cfg, base = _load_config(args.config)
    X = build_path(cfg, _seed(args, cfg), base)
    f = build_one_form(cfg)
    if f.d != X.d:
        raise ConfigError(f"one-form has d={f.d} but the path has d={X.d}")
    s, t = _interval(cfg, X)
    refine = args.refine if args.refine is not None else int(cfg.get("refine", 2))
    res = full_integral_result(f, X, s, t, refine)
    by = basis(f.e, X.p_floor)
    yt = y_tilde(f, X, s, t)
    sub = X.restrict(X.index(s), X.index(t))
    levels = cfg.get("error_levels", [1, 2, 3, 4])
    errors = local_error_report(f, sub, levels, refine)
    Y = integral_path(f, sub, refine=refine)
    report = {
        "schema_version": SCHEMA_VERSION,
        "interval": [s, t],
        "Y": res.Y.to_json(),
        "y_tilde": {encode(rho): v for rho, v in yt.items() if rho.degree > 0 and rho in by.forest_index},
        "errors": errors,
        "pvar_Y": Y.p_variation(max_points=int(cfg.get("max_points", 65))),
        "gap": res.gap,
    }
    _emit(report, args.out)
    print(f"integrated over [{s}, {t}], Cauchy gap {res.gap:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg, base = _load_config(args.config)
    suite = args.suite or cfg.get("suite")
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    seed = _seed(args, cfg) or 0
    kwargs = {"seed": seed}
    if suite == "algebra":
        kwargs.update({k: cfg[k] for k in ("d", "n", "instances") if k in cfg})
    elif suite == "analysis":
        kwargs.update({k: cfg[k] for k in ("n",) if k in cfg})
    elif suite == "pi" and "path" in cfg:
        kwargs["X"] = build_path(cfg, seed, base)
        if "one_form" in cfg:
            kwargs["f"] = build_one_form(cfg)
    checks = run_suite(suite, **kwargs)
    passed = all(c.passed for c in checks)
    _emit({"schema_version": SCHEMA_VERSION, "suite": suite, "passed": passed, "checks": [c.to_json() for c in checks]}, args.out)
    failed = [c.name for c in checks if not c.passed]
    print(f"{suite}: {len(checks) - len(failed)}/{len(checks)} checks passed" + (f"; failed: {', '.join(failed)}" if failed else ""), file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAILED


def cmd_metrics(args) -> int:
    cfg, base = _load_config(args.config)
    seed = _seed(args, cfg)
    X1 = build_path(cfg, seed, base, "path", "lift")
    if "path2" in cfg:
        X2 = build_path(cfg, seed, base, "path2", cfg.get("lift2") and "lift2" or "lift")
    else:
        X2 = X1
    mp = int(cfg.get("max_points", 129))
    try:
        dp = dp_metric(X1, X2, max_points=mp)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    report = {"schema_version": SCHEMA_VERSION, "pvar_1": X1.p_variation(max_points=mp), "pvar_2": X2.p_variation(max_points=mp), "dp": dp}
    _emit(report, args.out)
    print(f"d_p = {dp:.6g}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="branched-rough", description="Branched rough paths and their rough integrals.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario config (JSON)")
    common.add_argument("--out", help="write JSON here instead of stdout")
    common.add_argument("--refine", type=int, help="number of coarsening levels for limit estimates")
    common.add_argument("--seed", type=int, help="seed for generated paths and random checks")
    sub = parser.add_subparsers(dest="command", required=True)
    lift = sub.add_parser("lift", parents=[common], help="lift sampled data to a branched rough path")
    lift.add_argument("--csv", help="samples with header t,x1,...,xd (canonical lift)")
    lift.add_argument("--p", type=float, help="variation exponent for --csv input")
    lift.set_defaults(func=cmd_lift)
    sub.add_parser("integrate", parents=[common], help="rough integral of a polynomial one-form").set_defaults(func=cmd_integrate)
    verify = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    verify.add_argument("--suite", help=f"one of {', '.join(SUITES)}")
    verify.set_defaults(func=cmd_verify)
    sub.add_parser("metrics", parents=[common], help="p-variations and d_p distance of two paths").set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ConfigError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
