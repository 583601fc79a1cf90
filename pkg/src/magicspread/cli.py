"""Command-line entry point: run, resume, analyze, scan-eigenstates, oracle-check."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import runner
from .eigenstates import eigenstate_complexity_scan, gap_ratio_statistic, sector_gap_ratio
from .models import IsingParams

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_RESOURCE, EXIT_CHECKPOINT = 0, 1, 2, 3, 4


def _parse_set(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise runner.ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = yaml.safe_load(value)
    return out


def _run_overrides(args) -> dict:
    over = _parse_set(args.set)
    for flag, key in (("num_qubits", "num_qubits"), ("ensemble_size", "ensemble_size"),
                      ("master_seed", "master_seed"), ("output_dir", "output_dir"), ("model", "model"),
                      ("theta", "theta"), ("disorder_width", "disorder_width")):
        val = getattr(args, flag)
        if val is not None:
            over[key] = val
    if args.epsilon:
        over["epsilon_list"] = args.epsilon
    return over


def cmd_run(args) -> int:
    cfg = runner.ExperimentConfig.from_file(args.config, _run_overrides(args))
    bundle = runner.run_experiment(cfg, workers=args.workers)
    _summarise(bundle, cfg.output_dir)
    return EXIT_OK


def cmd_resume(args) -> int:
    bundle = runner.resume(args.run_dir, workers=args.workers)
    _summarise(bundle, args.run_dir)
    return EXIT_OK


def cmd_analyze(args) -> int:
    bundle = runner.analyze_run(args.run_dir, args.epsilon or None)
    _summarise(bundle, args.run_dir)
    return EXIT_OK


def _summarise(bundle, out_dir) -> None:
    if bundle is None:
        print(f"incomplete ensemble in {out_dir}; run `resume` to continue")
        return
    for (q, k), comp in bundle.comparisons.items():
        e, p = comp["exponential"], comp["power_law"]
        print(f"{q} k={k}: alpha={e.rate_or_exponent:.4f} (rms {e.residual_rms:.3g}), "
              f"beta={p.rate_or_exponent:.4f} (rms {p.residual_rms:.3g}) -> {comp['preferred']}")
    for (q, k), msg in bundle.fit_errors.items():
        print(f"{q} k={k}: no fit ({msg})")
    print(f"results written to {out_dir}")


def cmd_scan(args) -> int:
    try:
        data = yaml.safe_load(Path(args.config).read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise runner.ConfigError(f"cannot read {args.config}: {exc}") from exc
    nq = int(data.get("N", data.get("num_qubits", 12)))
    seed = int(data.get("master_seed", 0))
    width = float(data.get("disorder_width", 0.0))
    rng = np.random.default_rng(seed)
    params = IsingParams.disordered(nq, width, rng)
    try:
        scan = eigenstate_complexity_scan(params, with_se=bool(data.get("with_se", True)))
    except ValueError as exc:
        raise runner.ResourceCeilingError(str(exc)) from exc
    out = Path(args.output_dir or data.get("output_dir", "runs/eigenstates"))
    out.mkdir(parents=True, exist_ok=True)
    scan.to_csv(out / "eigenstates.csv")
    summary = {"N": nq, "disorder_width": width, "master_seed": seed}
    if width == 0:
        summary["gap_ratio"] = sector_gap_ratio(scan.energies, scan.parities)
    else:
        summary["gap_ratio"] = gap_ratio_statistic(scan.energies)
    (out / "eigenstates_summary.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    from .selfcheck import run_oracle_suite

    checks = run_oracle_suite(seed=args.seed, max_qubits=args.max_qubits, states=args.states, quick=args.quick)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:40s} error={c.error:.3e} tol={c.tolerance:.0e}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="magicspread", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate an ensemble and write tables")
    r.add_argument("config")
    r.add_argument("--N", dest="num_qubits", type=int)
    r.add_argument("--model")
    r.add_argument("--theta", type=float)
    r.add_argument("--disorder-width", type=float)
    r.add_argument("--ensemble-size", type=int)
    r.add_argument("--seed", dest="master_seed", type=int)
    r.add_argument("--output-dir")
    r.add_argument("--epsilon", type=float, action="append")
    r.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    r.add_argument("--workers", type=int)
    r.set_defaults(func=cmd_run)

    rs = sub.add_parser("resume", help="continue an interrupted run")
    rs.add_argument("run_dir")
    rs.add_argument("--workers", type=int)
    rs.set_defaults(func=cmd_resume)

    a = sub.add_parser("analyze", help="refit stored realisations")
    a.add_argument("run_dir")
    a.add_argument("--epsilon", type=float, action="append")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("scan-eigenstates", help="exact diagonalisation scan of the mixed-field chain")
    s.add_argument("config")
    s.add_argument("--output-dir")
    s.set_defaults(func=cmd_scan)

    o = sub.add_parser("oracle-check", help="compare fast kernels with dense references")
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--max-qubits", type=int, default=6)
    o.add_argument("--states", type=int, default=10)
    o.add_argument("--quick", action="store_true")
    o.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except runner.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except runner.ResourceCeilingError as exc:
        print(f"resource ceiling: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except runner.CheckpointMismatchError as exc:
        print(f"checkpoint mismatch: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT


if __name__ == "__main__":
    sys.exit(main())
