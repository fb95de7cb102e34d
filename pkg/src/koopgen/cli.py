"""``koopgen`` command line: simulate, learn, identify, bench, sweep-mu, zubov.

Every subcommand takes either ``--config file.json`` or ``--system NAME`` (a
built-in preset, scaled by ``--preset``); flags override the matching config
fields. Exit codes: 0 success, 2 configuration error, 3 every requested
cell failed numerically.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bench, sysid
from .dataset import dataset_from_trajectories
from .errors import ConfigError, KoopgenError
from .generator import LearnedGenerator
from .systems import Trajectory

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 2, 3


def _list(text: str, cast=str) -> list:
    return [cast(v.strip()) for v in text.split(",") if v.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--system", help="built-in system preset (ignored when --config is given)")
    p.add_argument("--preset", choices=("desk", "paper"), default="desk", help="problem size of the built-in presets")
    p.add_argument("--seed", type=int, help="root seed (overrides the config)")
    p.add_argument("--out", default="koopgen_out", help="output directory")
    p.add_argument("--method", help="comma-separated methods, e.g. RTM,FDM")
    p.add_argument("--gamma", help="comma-separated sampling frequencies")
    p.add_argument("--workers", type=int, help="worker processes for independent cells")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="koopgen", description="Generator learning from trajectory snapshots.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", help="integrate the true system and write trajectory CSVs")
    _add_common(p)
    p = sub.add_parser("learn", help="learn generator models and write model_<cell>.json")
    _add_common(p)
    p.add_argument("--data", help="directory of trajectory CSVs on a shared uniform grid (instead of simulating)")
    p = sub.add_parser("identify", help="read the vector field off a learned model")
    p.add_argument("model", help="model JSON written by 'learn' or 'bench'")
    p.add_argument("--out", help="write the identified weights to this JSON file")
    p = sub.add_parser("bench", help="benchmark table: metrics.csv and per-cell artifacts")
    _add_common(p)
    p.add_argument("--timing", action="store_true", help="fill the wall_ms column (makes output time-dependent)")
    p = sub.add_parser("sweep-mu", help="RTM weight error over a grid of mu values")
    _add_common(p)
    p.add_argument("--mu", help="comma-separated mu grid (overrides the config)")
    p = sub.add_parser("zubov", help="solve the Zubov equation with a learned generator")
    _add_common(p)
    return parser


def _resolve_config(args, kind: str) -> bench.BenchConfig:
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{args.config}: top level must be a JSON object")
    elif args.system:
        raw = bench.preset_config(args.system, args.preset, kind)
    else:
        raise ConfigError("give --config or --system")
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.method:
        raw["methods"] = [m.upper() for m in _list(args.method)]
    if args.gamma:
        try:
            raw["gammas"] = _list(args.gamma, int)
        except ValueError:
            raise ConfigError(f"--gamma: expected integers, got {args.gamma!r}") from None
    if args.workers is not None:
        raw["workers"] = args.workers
    if getattr(args, "mu", None):
        try:
            raw["mu_grid"] = _list(args.mu, float)
        except ValueError:
            raise ConfigError(f"--mu: expected numbers, got {args.mu!r}") from None
    return bench.parse_config(raw)


# --------------------------------------------------------------------------- subcommands


def cmd_simulate(args) -> int:
    cfg = _resolve_config(args, "bench")
    spec = bench.build_system(cfg)
    out = Path(args.out)
    for gamma in cfg.gammas:
        data = bench.training_data(cfg, spec, gamma)
        folder = out / f"{cfg.system}_g{gamma}"
        folder.mkdir(parents=True, exist_ok=True)
        for m, tr in enumerate(data.trajectories()):
            tr.to_csv(folder / f"traj_{m:05d}.csv")
        print(f"{data.M} trajectories, {data.gamma_count + 1} samples each -> {folder}")
    return EXIT_OK


def cmd_learn(args) -> int:
    cfg = _resolve_config(args, "bench")
    spec = bench.build_system(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failures = 0
    external = None
    if args.data:
        files = sorted(Path(args.data).glob("*.csv"))
        if not files:
            raise ConfigError(f"--data: no CSV files in {args.data}")
        external = dataset_from_trajectories([Trajectory.from_csv(f) for f in files])
        if cfg.rtm["quadrature_mode"] == "gl_nodes" and any(m in ("RTM", "SRTM") for m in cfg.methods):
            raise ConfigError("uniform-grid data needs rtm.quadrature_mode uniform_composite or uniform_interp")
    gammas = cfg.gammas if external is None else [external.gamma_count]
    for dspec in cfg.dictionaries:
        d = bench.build_dictionary(dspec, spec.dim, cfg.seed)
        for gamma in gammas:
            data = external if external is not None else bench.training_data(cfg, spec, gamma)
            for method in cfg.methods:
                cell = f"{cfg.system}_{bench.dictionary_label(d)}_g{gamma}_{method}"
                try:
                    _, model, _ = bench.fit_method(method, cfg, data, d)
                except (KoopgenError, np.linalg.LinAlgError) as exc:
                    failures += 1
                    print(f"{cell}: failed: {exc}", file=sys.stderr)
                    continue
                path = out / f"model_{cell}.json"
                bench._atomic_write(path, json.dumps(model, sort_keys=True))
                print(f"{cell} -> {path}")
    total = len(cfg.dictionaries) * len(gammas) * len(cfg.methods)
    return EXIT_FAILED if failures == total else EXIT_OK


def cmd_identify(args) -> int:
    try:
        model = json.loads(Path(args.model).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model {args.model}: {exc}") from None
    if "L" in model:
        ident = sysid.recover_field(LearnedGenerator.from_dict(model))
        payload = ident.to_dict()
    elif "theta" in model:
        payload = model
    else:
        raise ConfigError(f"{args.model}: neither a generator (L) nor an identified field (theta)")
    theta = np.asarray(payload["theta"])
    for j, row in enumerate(theta):
        terms = [f"{c:+.6e}*z{i}" for i, c in enumerate(row) if c != 0.0]
        print(f"dx{j + 1}/dt = " + (" ".join(terms) if terms else "0"))
    if args.out:
        bench._atomic_write(Path(args.out), json.dumps(payload, sort_keys=True))
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _resolve_config(args, "bench")
    result = bench.run_bench(cfg, args.out, timing=args.timing)
    for r in result.rows:
        print(f"{r['system']:>16} {r['method']:>5} gamma={r['gamma']:<4} N={r['N']:<4} "
              f"w={bench._fmt(r.get('rmse_weights')):>13} flow={bench._fmt(r.get('rmse_flow')):>13} {r['status']}")
    return EXIT_FAILED if result.all_failed else EXIT_OK


def cmd_sweep_mu(args) -> int:
    cfg = _resolve_config(args, "sweep")
    rows = bench.run_sweep_mu(cfg, args.out)
    for r in rows:
        print(f"gamma={r['gamma']} mu={r['mu']:<5} w={bench._fmt(r.get('rmse_weights'))} {r['status']}")
    return EXIT_FAILED if all(r["status"] != "ok" for r in rows) else EXIT_OK


def cmd_zubov(args) -> int:
    cfg = _resolve_config(args, "zubov")
    summary = bench.run_zubov(cfg, args.out)
    for key in ("equilibrium", "residual_rms", "level", "roa_fraction", "roa_area", "lie_derivative_error",
                "max_lie_on_roa"):
        print(f"{key}: {summary[key]}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate, "learn": cmd_learn, "identify": cmd_identify,
    "bench": cmd_bench, "sweep-mu": cmd_sweep_mu, "zubov": cmd_zubov,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KoopgenError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
