"""Command-line entry point: ``netcontagion {sweep,cascade,partition,gen,validate}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .config import ConfigError, RunConfig, load_config
from .generators import build_exposures, gen_er_network, gen_portfolios, interbank_weight
from .model import ExposureSystem, asset_losses, cascade_gfp, cascade_lfp
from .montecarlo import sweep
from .partition import boundary_segments, census, find_all_fail_witness

log = logging.getLogger("netcontagion")


class _Outputs:
    """Tracks written files so a failed command leaves nothing half-written."""

    def __init__(self):
        self.paths: list[Path] = []

    def add(self, path):
        if isinstance(path, (list, tuple)):
            self.paths.extend(Path(p) for p in path)
        else:
            self.paths.append(Path(path))
        return path

    def discard(self):
        for p in self.paths:
            p.unlink(missing_ok=True)


def _config(args) -> RunConfig:
    return load_config(args.config) if args.config else RunConfig()


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt_state(f) -> str:
    return "(" + ",".join("1" if x else "0" for x in f) + ")"


def cmd_sweep(args, outputs: _Outputs) -> int:
    cfg = _config(args)
    workers = args.workers or cfg.workers
    out = _out_dir(args, cfg)
    table = sweep(cfg.sweep_config(), workers=workers)
    outputs.add(fileio.write_sweep_csv(table, out / "sweep.csv"))
    outputs.add(fileio.write_heatmaps(table, out))
    outputs.add(fileio.write_d_opt_csv(table, out / "d_opt.csv"))
    outputs.add(fileio.write_non_optimum_csv(table, out / "non_optimum.csv"))
    print(f"wrote {len(table)} rows to {out / 'sweep.csv'}")
    return 0


def _load_system(x_path, l_path) -> ExposureSystem:
    X = fileio.read_matrix(x_path)
    L = fileio.read_matrix(l_path)
    return ExposureSystem(X, L)


def cmd_cascade(args, outputs: _Outputs) -> int:
    sys_ = _load_system(args.x, args.l)
    v = fileio.read_vector(args.v)
    lfp = cascade_lfp(sys_, v)
    gfp = cascade_gfp(sys_, v)
    y = asset_losses(sys_, v, lfp)
    print("Y   = " + " ".join(repr(float(x)) for x in y))
    print(f"lfp = {_fmt_state(lfp)}")
    print(f"gfp = {_fmt_state(gfp)}")
    print(f"multiple_behavior = {int(not np.array_equal(lfp, gfp))}")
    return 0


def _generate(cfg: RunConfig, p: float, d: float, seed: int) -> ExposureSystem:
    if cfg.n_assets != cfg.n_banks:
        raise ConfigError("generation requires n_assets == n_banks", key="n_assets")
    rng = np.random.default_rng(seed)
    adj = gen_er_network(cfg.n_banks, p, rng)
    weights = gen_portfolios(cfg.n_banks, d, rng, max_retries=cfg.max_retries, seed_spread=cfg.seed_spread)
    return build_exposures(adj, interbank_weight(p, cfg.w_max, cfg.weight_shape), cfg.eta, weights)


def cmd_gen(args, outputs: _Outputs) -> int:
    cfg = _config(args)
    p = max(cfg.p_grid) if args.p is None else args.p
    sys_ = _generate(cfg, p, args.d, args.seed)
    out = _out_dir(args, cfg)
    outputs.add(fileio.write_matrix(sys_.X, out / "X.txt"))
    outputs.add(fileio.write_matrix(sys_.L, out / "L.txt"))
    print(f"wrote {out / 'X.txt'} and {out / 'L.txt'} (p={p}, d={args.d}, seed={args.seed})")
    return 0


def cmd_partition(args, outputs: _Outputs) -> int:
    cfg = _config(args)
    if args.x and args.l:
        sys_ = _load_system(args.x, args.l)
    elif args.x or args.l:
        raise ConfigError("--x and --l must be given together")
    else:
        p = max(cfg.p_grid) if args.p is None else args.p
        sys_ = _generate(cfg, p, args.d, args.seed)
    out = _out_dir(args, cfg)
    bounds = cfg.partition_bounds
    c = census(sys_, bounds=bounds, resolution=args.resolution or cfg.partition_resolution)
    outputs.add(fileio.write_census_csv(c, out / "census.csv"))
    print(f"{len(c.signatures)} signatures, {c.n_multi} with multiple behavior")
    if sys_.n_assets == 2:
        outputs.add(fileio.write_boundaries_csv(boundary_segments(sys_, bounds=bounds), out / "boundaries.csv"))
    else:
        log.info("boundary export skipped: needs exactly 2 assets")
    w = find_all_fail_witness(sys_, cfg.witness_directions, cfg.witness_steps)
    print("all-fail witness: " + ("none found" if w is None else " ".join(repr(float(x)) for x in w)))
    return 0


def cmd_validate(args, outputs: _Outputs) -> int:
    from .validation import run_checks

    cfg = _config(args)
    results = run_checks(cfg)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netcontagion", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p, required=False):
        p.add_argument("--config", required=required, help="key = value configuration file")
        return p

    p = with_config(sub.add_parser("sweep", help="expected-cost sweep over (p, d, s)"))
    p.add_argument("--out", help="output directory (default: out_dir from config)")
    p.add_argument("--workers", type=int, help="worker threads (overrides config)")
    p.set_defaults(func=cmd_sweep)

    p = with_config(sub.add_parser("cascade", help="fixed points for given X, L, V files"))
    p.add_argument("--x", required=True)
    p.add_argument("--l", required=True)
    p.add_argument("--v", required=True)
    p.set_defaults(func=cmd_cascade)

    p = with_config(sub.add_parser("partition", help="region census and boundary export"))
    p.add_argument("--out")
    p.add_argument("--x")
    p.add_argument("--l")
    p.add_argument("--p", type=float)
    p.add_argument("--d", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=int)
    p.set_defaults(func=cmd_partition)

    p = with_config(sub.add_parser("gen", help="write a random exposure system"))
    p.add_argument("--d", type=float, required=True, help="target diversification")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--p", type=float, help="link probability (default: largest p in p_grid)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = with_config(sub.add_parser("validate", help="run the invariant checks"))
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    outputs = _Outputs()
    try:
        return args.func(args, outputs)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        outputs.discard()
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
