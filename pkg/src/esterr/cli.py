"""Command-line interface: ``esterr {sweep,exponent,verify}``.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from esterr import persist
from esterr.config import load_config
from esterr.errors import ConfigError
from esterr.experiment import run_sweep
from esterr.metrics import analytic_q0, fit_critical_exponent

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXPECTED_EXPONENT = -0.5

log = logging.getLogger("esterr")


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esterr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("sweep", "run a Monte Carlo sweep and write sweep.csv, histograms and summary.json"),
        ("exponent", "run a ratio sweep and fit the critical exponent"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", help="output directory (overrides [run].out)")
        p.add_argument("--workers", type=int, help="worker processes (overrides [run].workers)")
        p.add_argument("--seed", type=_seed, help="master seed (overrides [experiment].master_seed)")
    sub.add_parser("verify", help="run the fast invariant suite")
    return parser


def _load(args):
    return load_config(args.config, {"out": args.out, "workers": args.workers, "seed": args.seed})


def _point_line(p) -> str:
    ref = p.analytic_q0
    ref_txt = f"{ref:.5f}" if ref is not None else "n/a"
    return (
        f"N={p.n} T={p.t} r={p.r:.4g} samples={p.n_samples} q0_mean={p.q0_mean:.5f} "
        f"q0_std={p.q0_std:.5f} analytic={ref_txt} weight_std={p.weight_std_mean:.5g} "
        f"zero_frac={p.zero_fraction_mean:.4f} failures={p.failure_count}"
    )


def cmd_sweep(args) -> int:
    cfg = _load(args)
    result = run_sweep(cfg.spec, workers=cfg.workers)
    persist.write_result(result, cfg.out_dir)
    for p in result.points:
        print(_point_line(p))
    return EXIT_OK


def cmd_exponent(args) -> int:
    cfg = _load(args)
    spec = cfg.spec
    ratios = [n / t for n, t in spec.grid]
    if any(r >= 1 for r in ratios):
        raise ConfigError("exponent fits need every grid ratio N/T < 1")
    if cfg.synthetic:
        data = [(r, analytic_q0(n, t)) for r, (n, t) in zip(ratios, spec.grid)]
        points_out = [{"N": n, "T": t, "r": r, "value": v} for (n, t), (r, v) in zip(spec.grid, data)]
    else:
        result = run_sweep(spec, workers=cfg.workers)
        persist.write_result(result, cfg.out_dir)
        data = [(p.r, getattr(p, cfg.metric)) for p in result.points]
        points_out = [
            {"N": p.n, "T": p.t, "r": p.r, "value": v, "n_samples": p.n_samples}
            for p, (_, v) in zip(result.points, data)
        ]
    fit = fit_critical_exponent(data)
    persist.write_json(cfg.out_dir / "exponent.json", {
        "metric": cfg.metric,
        "synthetic": cfg.synthetic,
        "exponent": fit.exponent,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "expected_exponent": EXPECTED_EXPONENT,
        "points": points_out,
        "spec": spec.to_dict(),
    })
    for row in points_out:
        print(f"N={row['N']} T={row['T']} r={row['r']:.4g} {cfg.metric}={row['value']:.6g}")
    print(f"exponent = {fit.exponent:.6f} (expected {EXPECTED_EXPONENT}), "
          f"intercept = {fit.intercept:.6f}, r^2 = {fit.r_squared:.6f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from esterr import kernels
    from esterr.verify import run_checks

    results = run_checks()
    width = max(len(name) for name, _, _ in results)
    print(f"kernel backend: {kernels.BACKEND}")
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    failed = [name for name, ok, _ in results if not ok]
    if failed:
        print(f"first failing property: {failed[0]}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


COMMANDS = {"sweep": cmd_sweep, "exponent": cmd_exponent, "verify": cmd_verify}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
