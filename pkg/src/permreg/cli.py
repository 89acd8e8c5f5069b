"""Command-line entry point: ``permreg {train,benchmark,synthetic,gradcheck}``.

Exit codes: 0 success, 1 input or runtime error, 2 verification failure.
Every JSON artifact echoes the resolved flags; wall-clock measurements are
kept under a separate ``timing`` key so the rest is reproducible byte for
byte from the flags and seed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ._errors import PermregError
from .data import ScenarioConfig, generate_scenario, load_csv, save_csv
from .estimators import Family
from .evaluation import METHODS, r2_score, run_benchmark
from .gradcheck import GRADCHECK_TOL, check_gradients
from .optim import AdamConfig, train

log = logging.getLogger("permreg")

EXIT_OK, EXIT_ERROR, EXIT_VERIFY = 0, 1, 2


def _read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _add_data_args(p):
    src = p.add_argument_group("data source (exactly one)")
    src.add_argument("--scenario", choices=["A", "B", "C", "a", "b", "c"])
    src.add_argument("--csv", type=Path, help="headered numeric CSV file")
    src.add_argument("--target", default="y", help="target column of --csv")
    src.add_argument("--delimiter", default=",")
    sc = p.add_argument_group("scenario settings")
    sc.add_argument("--n-train", type=int, default=100)
    sc.add_argument("--n-test", type=int, default=1000)
    sc.add_argument("--p", type=int, default=80)
    sc.add_argument("--sigma", type=float, default=10.0)
    sc.add_argument("--rho", type=float, default=None)
    sc.add_argument("--sparsity", type=int, default=10)
    sc.add_argument("--wide", action="store_true", help="n < p surrogate design")


def _add_fit_args(p):
    g = p.add_argument_group("optimizer (defaults reproduce the reference regime)")
    g.add_argument("--lr", type=float, default=0.5)
    g.add_argument("--beta1", type=float, default=0.5)
    g.add_argument("--beta2", type=float, default=0.9)
    g.add_argument("--adam-eps", type=float, default=1e-8)
    g.add_argument("--tol", type=float, default=1e-4)
    g.add_argument("--max-iter", type=int, default=1000)
    g.add_argument("--stopping", choices=["value", "gradient", "step"], default="value")
    g.add_argument("--no-standardize-x", action="store_true")
    g.add_argument("--normalized-spread", action="store_true",
                   help="use the variance of gamma (divide by p) inside the gates")


def build_parser():
    parser = argparse.ArgumentParser(prog="permreg", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, help="key=value file supplying flag defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit one procedure and write fit.json")
    _add_data_args(p)
    _add_fit_args(p)
    p.add_argument("--family", default="bkk", choices=[f.value for f in Family])
    p.add_argument("--T", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("benchmark", help="repeat fits and compare methods")
    _add_data_args(p)
    _add_fit_args(p)
    p.add_argument("--methods", default="bkk,sbkk,abkk,ridgecv")
    p.add_argument("--M", type=int, default=100)
    p.add_argument("--T", default="30", help="single value, or a comma list with --sweep-T")
    p.add_argument("--sweep-T", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cv-folds", type=int, default=5)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--conventional-r2", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("synthetic", help="write a scenario draw as CSV files")
    _add_data_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("gradcheck", help="verify analytic gradients numerically")
    p.add_argument("--family", default="bkk", choices=[f.value for f in Family])
    p.add_argument("--draws", type=int, default=20)
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--p", type=int, default=6)
    p.add_argument("--T", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt-gradient", type=float, default=None, help=argparse.SUPPRESS)
    return parser


def _flags(args):
    skip = {"config", "verbose", "out"}
    return {k: (str(v) if isinstance(v, Path) else v)
            for k, v in sorted(vars(args).items()) if k not in skip}


def _adam(args):
    return AdamConfig(learning_rate=args.lr, beta1=args.beta1, beta2=args.beta2,
                      eps=args.adam_eps, max_iter=args.max_iter, tolerance=args.tol,
                      stopping=args.stopping)


def _scenario(args, seed):
    return ScenarioConfig(scenario=args.scenario, n_train=args.n_train, n_test=args.n_test,
                          p=args.p, sigma=args.sigma, rho=args.rho, sparsity=args.sparsity,
                          seed=seed, wide=args.wide)


def _check_source(args):
    if (args.scenario is None) == (args.csv is None):
        raise PermregError("give exactly one data source: --scenario or --csv")


def _dump(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")


def cmd_train(args):
    _check_source(args)
    if args.csv is not None:
        train_set, test_set = load_csv(args.csv, args.target, args.delimiter), None
    else:
        train_set, test_set, _ = generate_scenario(_scenario(args, args.seed))
    res = train(args.family, train_set.X, train_set.Y, cfg=_adam(args), T=args.T,
                seed=args.seed, standardize_X=not args.no_standardize_x,
                normalized_spread=args.normalized_spread)
    payload = {"command": "train", "flags": _flags(args), "dataset": train_set.name}
    payload.update(res.to_dict(include_timing=False))
    test_r2 = None
    if test_set is not None:
        test_r2 = r2_score(test_set.Y, res.predict(test_set.X))
        payload["test_r2"] = test_r2
    payload["timing"] = {"wall_time": res.wall_time}
    _dump(args.out / "fit.json", payload)
    th = res.theta_hat
    print(f"family {res.family.value}: {res.iterations} iterations "
          f"({'converged' if res.converged else 'max_iter reached'}), "
          f"criterion {res.criterion_trace[-1]:.6f}, lambda {th.lam:.4g}")
    if res.n_selected is not None:
        print(f"selected features: {res.n_selected}/{res.beta_hat.size}")
    if test_r2 is not None:
        print(f"test R2: {test_r2:.4f}")
    print(f"wrote {args.out / 'fit.json'}")
    return EXIT_OK


def cmd_benchmark(args):
    _check_source(args)
    if args.M < 2:
        raise PermregError("--M must be at least 2 (Mann-Whitney needs two samples)")
    T_values = [int(t) for t in str(args.T).split(",") if t.strip()]
    if len(T_values) > 1 and not args.sweep_T:
        raise PermregError("several --T values need --sweep-T")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    source = (load_csv(args.csv, args.target, args.delimiter) if args.csv is not None
              else _scenario(args, 0))
    flags = _flags(args)
    for T in T_values:
        report = run_benchmark(methods, source, M=args.M, seed=args.seed, T=T,
                               cfg=_adam(args), cv_folds=args.cv_folds,
                               test_fraction=args.test_fraction,
                               standardize_X=not args.no_standardize_x,
                               normalized_spread=args.normalized_spread,
                               conventional_r2=args.conventional_r2, jobs=args.jobs)
        report.config["flags"] = flags
        stem = f"report_T{T}" if args.sweep_T else "report"
        json_path, csv_path = report.write(args.out, stem)
        print(f"[T={T}] {report.dataset}, M={report.M}")
        for m in report.methods:
            its = [i for i in report.iterations[m] if i is not None]
            extra = f", median iterations {np.median(its):.0f}" if its else ""
            print(f"  {m:8s} mean R2 {report.mean_score(m):+.4f}, "
                  f"mean runtime {np.mean(report.runtimes[m]):.4f}s{extra}")
        print(f"  best by R2 (MW, 0.05): {', '.join(report.winners_score)}")
        print(f"  wrote {json_path} and {csv_path}")
    return EXIT_OK


def cmd_synthetic(args):
    if args.scenario is None:
        raise PermregError("synthetic needs --scenario")
    cfg = _scenario(args, args.seed)
    train_set, test_set, beta = generate_scenario(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    save_csv(train_set, args.out / "train.csv")
    save_csv(test_set, args.out / "test.csv")
    _dump(args.out / "beta_star.json", {"flags": _flags(args), "beta_star": beta.tolist()})
    print(f"wrote train.csv ({train_set.n}x{train_set.p}), test.csv ({test_set.n} rows) "
          f"and beta_star.json to {args.out}")
    return EXIT_OK


def cmd_gradcheck(args):
    corrupt = None
    if args.corrupt_gradient is not None:
        factor = args.corrupt_gradient

        def corrupt(g):
            return g * factor

    rows = check_gradients(args.family, draws=args.draws, seed=args.seed, n=args.n,
                           p=args.p, T=args.T, corrupt=corrupt)
    names = next((r.names for r in rows if not r.skipped), [])
    print("draw " + " ".join(f"{nm:>10s}" for nm in names) + "   status")
    worst, worst_at = 0.0, None
    for r in rows:
        if r.skipped:
            print(f"{r.draw:4d} " + "(near a kink, skipped)")
            continue
        ok = r.worst <= GRADCHECK_TOL
        print(f"{r.draw:4d} " + " ".join(f"{e:10.2e}" for e in r.rel_error)
              + f"   {'ok' if ok else 'FAIL'}")
        if r.worst > worst:
            i = int(np.argmax(r.rel_error))
            worst, worst_at = r.worst, (r.draw, r.names[i], r.analytic[i], r.numeric[i])
    if worst > GRADCHECK_TOL:
        d, nm, a, f = worst_at
        print(f"FAIL: worst relative error {worst:.3e} at draw {d}, {nm}: "
              f"analytic {a:.6e} vs numeric {f:.6e}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"PASS: all relative errors <= {GRADCHECK_TOL:g} (worst {worst:.2e})")
    return EXIT_OK


COMMANDS = {"train": cmd_train, "benchmark": cmd_benchmark, "synthetic": cmd_synthetic,
            "gradcheck": cmd_gradcheck}


def main(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    if args.config is not None:
        try:
            conf = _read_config(args.config)
        except (OSError, ValueError) as exc:
            print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
            return EXIT_ERROR
        # config values become defaults; flags given explicitly still win
        sub = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sub._actions}
        unknown = set(conf) - set(actions)
        if unknown:
            print(f"error: unknown config keys: {sorted(unknown)}", file=sys.stderr)
            return EXIT_ERROR
        for key, value in conf.items():
            if isinstance(actions[key], argparse._StoreTrueAction):
                conf[key] = value.lower() in ("1", "true", "yes", "on")
        sub.set_defaults(**conf)
        args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (PermregError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
