"""Benchmark configuration, presets and the table/sweep/Zubov runners.

A run is described by a JSON object (see ``CONFIG_SCHEMA`` for the accepted
fields). Every random draw comes from ``numpy.random.SeedSequence([seed,
stream])`` with a fixed stream id per purpose, so training data, evaluation
trajectories and the SRTM split never share a stream.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
import os
import tempfile
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import baselines, rtm, sysid, zubov
from .dataset import SnapshotDataset, generate_dataset
from .dictionary import Dictionary, monomial_dictionary, tanh_random_dictionary
from .errors import ConfigError, KoopgenError
from .systems import SystemSpec, builtin_system, integrate_batch, recast_field, sample_initial_conditions

METHODS = ("RTM", "SRTM", "FDM", "KLM", "SINDY")
METRIC_COLUMNS = (
    "system", "method", "gamma", "M", "N", "rmse_weights", "rmse_flow", "imag_norm",
    "blowups", "cond_A", "wall_ms", "status", "config_hash", "seed",
)
SWEEP_COLUMNS = ("system", "gamma", "mu", "N", "rmse_weights", "rmse_flow", "status", "config_hash", "seed")

STREAM_TRAIN, STREAM_EVAL, STREAM_SPLIT, STREAM_DICT = 0, 1, 2, 3

# field -> (type check, default). Nested sections are validated separately.
CONFIG_SCHEMA: dict[str, tuple[Any, Any]] = {
    "system": (str, None),
    "params": (dict, {}),
    "domain": ((list, type(None)), None),
    "recast": (bool, False),
    "dictionaries": (list, None),
    "M": (int, 100),
    "T": ((int, float), 1.0),
    "gammas": (list, [10, 50, 100]),
    "methods": (list, list(METHODS)),
    "rtm": (dict, {}),
    "eval": (dict, {}),
    "srtm": (dict, {}),
    "sindy": (dict, {}),
    "seed": (int, 0),
    "workers": (int, 1),
    "mu_grid": (list, []),
    "zubov": (dict, {}),
}
RTM_FIELDS = {"mu": 2.5, "lam": 1e8, "delta": 0.0, "quadrature_mode": "gl_nodes"}
EVAL_FIELDS = {"trajectories": 100, "T_s": 1.0, "snapshot_count": 100, "escape_radius": 1e6}
SRTM_FIELDS = {"threshold": 1e-3, "validation_fraction": 0.2}
SINDY_FIELDS = {"threshold": baselines.SINDY_THRESHOLD, "max_iters": baselines.SINDY_MAX_ITERS}
ZUBOV_FIELDS = {"alpha": 0.1, "counts": 60, "epsilon": 0.05, "weights": list(zubov.DEFAULT_WEIGHTS), "exclusion": 0.02}


# --------------------------------------------------------------------------- presets


def _mono(**kw) -> dict:
    return {"kind": "monomial", **kw}


def _tanh(sigma: int, seed: int = 0) -> dict:
    return {"kind": "tanh_random", "sigma": sigma, "seed": seed, "scale_W": 1.0, "scale_b": 1.0}


_PRESETS: dict[str, dict[str, Any]] = {
    "vdp": {"dictionaries": [_mono(caps=[3, 3])], "M": 100, "rtm": {"mu": 2.5}},
    "lorenz63_scaled": {
        "dictionaries": [_mono(caps=[2, 2, 2])], "M": 1000, "rtm": {"mu": 2.5},
        "eval": {"T_s": 100.0, "snapshot_count": 1000},
    },
    "lorenz96": {
        "dictionaries": [_mono(caps=[2] * 6)], "M": 4096, "rtm": {"mu": 2.5},
        "methods": ["RTM", "SRTM", "FDM", "KLM"], "_paper": {"M": 5 ** 6},
    },
    "cubic1d": {"dictionaries": [_mono(total_degree=4)], "M": 10, "rtm": {"mu": 0.02}},
    "yeast7": {
        "dictionaries": [_mono(total_degree=2)], "M": 2000, "rtm": {"mu": 2.0},
        "methods": ["RTM", "FDM", "KLM", "SINDY"], "_paper": {"M": 7 ** 7},
    },
    "rational2d": {
        "dictionaries": [_mono(total_degree=3), _mono(total_degree=4), _tanh(20), _tanh(50), _tanh(100)],
        "M": 100, "rtm": {"mu": 3.5}, "methods": ["RTM", "FDM", "KLM", "SINDY"],
    },
    "two_machine": {
        "dictionaries": [_tanh(20), _tanh(50), _tanh(100)], "M": 100, "rtm": {"mu": 2.5},
        "methods": ["RTM", "FDM", "KLM"],
    },
}

# mu sweep: uniform snapshots over a longer horizon
_SWEEP_PRESET = {
    "system": "vdp", "dictionaries": [_mono(caps=[3, 3])], "M": 100, "T": 5.0, "gammas": [100],
    "rtm": {"quadrature_mode": "uniform_composite"},
    "mu_grid": [0.5 * k for k in range(1, 17)], "methods": ["RTM"],
}

# Zubov: random tanh features on the vdp training box. The box lies inside the true region of
# attraction, so u = 1 on its faces is wrong and the boundary rows are switched off.
_ZUBOV_PRESET = {
    "system": "vdp", "dictionaries": [_tanh(100)], "M": 10_000, "T": 1.0, "gammas": [20],
    "rtm": {"mu": 10.0}, "methods": ["RTM"], "zubov": {"weights": [1.0, 100.0, 0.0]}, "_desk": {"M": 2500},
}


def preset_config(system: str, preset: str = "desk", kind: str = "bench") -> dict:
    """Built-in configuration for ``system`` (``kind`` is ``bench``, ``sweep`` or ``zubov``)."""
    if preset not in ("desk", "paper"):
        raise ConfigError("preset must be 'desk' or 'paper'")
    if kind == "sweep":
        base = copy.deepcopy(_SWEEP_PRESET)
        base["system"] = system
    elif kind == "zubov":
        base = copy.deepcopy(_ZUBOV_PRESET)
        base["system"] = system
    else:
        if system not in _PRESETS:
            raise ConfigError(f"no bench preset for system {system!r}; choose from {sorted(_PRESETS)}")
        base = copy.deepcopy(_PRESETS[system])
        base["system"] = system
    paper, desk = base.pop("_paper", {}), base.pop("_desk", {})
    base.update(paper if preset == "paper" else desk)
    return base


# --------------------------------------------------------------------------- config


@dataclass(frozen=True)
class BenchConfig:
    system: str
    params: dict
    domain: list | None
    recast: bool
    dictionaries: list
    M: int
    T: float
    gammas: list
    methods: list
    rtm: dict
    eval: dict
    srtm: dict
    sindy: dict
    seed: int
    workers: int = 1
    mu_grid: list = field(default_factory=list)
    zubov: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: copy.deepcopy(getattr(self, k)) for k in CONFIG_SCHEMA}

    @property
    def config_hash(self) -> str:
        payload = self.to_dict()
        payload.pop("workers")
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def gamma_count(self, gamma: int) -> int:
        G = gamma * self.T
        if abs(G - round(G)) > 1e-9 or round(G) < 1:
            raise ConfigError(f"gamma*T must be a positive integer (gamma={gamma}, T={self.T})")
        return int(round(G))

    def rtm_config(self, gamma: int, mu: float | None = None) -> rtm.RtmConfig:
        r = self.rtm
        return rtm.RtmConfig(
            mu=float(r["mu"] if mu is None else mu), lam=float(r["lam"]), T=float(self.T),
            gamma_count=self.gamma_count(gamma), delta=float(r["delta"]), quadrature_mode=r["quadrature_mode"],
        )


def _section(raw: dict, name: str, defaults: dict) -> dict:
    sec = raw.get(name) or {}
    unknown = set(sec) - set(defaults)
    if unknown:
        raise ConfigError(f"{name}: unknown field(s) {sorted(unknown)}")
    return {**defaults, **sec}


def _check_dictionary_spec(spec: dict, dim: int, idx: int) -> None:
    where = f"dictionaries[{idx}]"
    kind = spec.get("kind")
    if kind == "monomial":
        allowed = {"kind", "caps", "total_degree"}
        if ("caps" in spec) == ("total_degree" in spec):
            raise ConfigError(f"{where}: give exactly one of caps or total_degree")
        if "caps" in spec and isinstance(spec["caps"], list) and len(spec["caps"]) != dim:
            raise ConfigError(f"{where}.caps: need {dim} entries")
        caps = spec.get("caps")
        if caps is not None and min([caps] if isinstance(caps, int) else caps) < 2:
            raise ConfigError(f"{where}.caps: every cap must be >= 2 so the coordinates are present")
    elif kind == "tanh_random":
        allowed = {"kind", "sigma", "seed", "scale_W", "scale_b", "include_coordinates"}
        if not isinstance(spec.get("sigma"), int) or spec["sigma"] < 1:
            raise ConfigError(f"{where}.sigma: must be a positive integer")
        if spec.get("include_coordinates", True) is not True:
            raise ConfigError(f"{where}: identification needs the coordinate functions (include_coordinates)")
    else:
        raise ConfigError(f"{where}.kind: expected 'monomial' or 'tanh_random', got {kind!r}")
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")


def parse_config(raw: dict) -> BenchConfig:
    """Validate a raw config mapping; every error names the offending field."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(CONFIG_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown top-level field(s) {sorted(unknown)}")
    vals: dict[str, Any] = {}
    for key, (typ, default) in CONFIG_SCHEMA.items():
        v = raw.get(key, copy.deepcopy(default))
        if v is None and default is None and key in ("system", "dictionaries"):
            raise ConfigError(f"missing required field {key!r}")
        if not isinstance(v, typ) or (typ is int and isinstance(v, bool)):
            raise ConfigError(f"field {key!r} has the wrong type ({type(v).__name__})")
        vals[key] = v
    vals["rtm"] = _section(raw, "rtm", RTM_FIELDS)
    vals["eval"] = _section(raw, "eval", EVAL_FIELDS)
    vals["srtm"] = _section(raw, "srtm", SRTM_FIELDS)
    vals["sindy"] = _section(raw, "sindy", SINDY_FIELDS)
    vals["zubov"] = _section(raw, "zubov", ZUBOV_FIELDS)
    vals["T"] = float(vals["T"])
    for m in vals["methods"]:
        if m not in METHODS:
            raise ConfigError(f"methods: unknown method {m!r}; choose from {METHODS}")
    if not vals["methods"]:
        raise ConfigError("methods: empty list")
    if not vals["gammas"] or not all(isinstance(g, int) and g > 0 for g in vals["gammas"]):
        raise ConfigError("gammas: need a nonempty list of positive integers")
    if vals["M"] < 1:
        raise ConfigError("M: must be positive")
    if vals["workers"] < 1:
        raise ConfigError("workers: must be positive")
    if not all(isinstance(v, (int, float)) and v > 0 for v in vals["mu_grid"]):
        raise ConfigError("mu_grid: entries must be positive numbers")
    if not 0 < vals["srtm"]["validation_fraction"] < 1:
        raise ConfigError("srtm.validation_fraction: must lie in (0, 1)")
    if vals["eval"]["trajectories"] < 1 or vals["eval"]["snapshot_count"] < 1:
        raise ConfigError("eval: trajectories and snapshot_count must be positive")
    spec = _build_system_from(vals)
    if not vals["dictionaries"]:
        raise ConfigError("dictionaries: empty list")
    for i, d in enumerate(vals["dictionaries"]):
        if not isinstance(d, dict):
            raise ConfigError(f"dictionaries[{i}]: must be an object")
        _check_dictionary_spec(d, spec.dim, i)
    cfg = BenchConfig(**vals)
    for g in cfg.gammas:
        cfg.gamma_count(g)
    try:
        cfg.rtm_config(cfg.gammas[0])
    except ConfigError as exc:
        raise ConfigError(f"rtm: {exc}") from None
    return cfg


def load_config(source: str | Path | dict) -> BenchConfig:
    """Parse a config file (JSON) or mapping; JSON syntax errors report line and column."""
    if isinstance(source, dict):
        return parse_config(source)
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return parse_config(raw)


def _build_system_from(vals: dict) -> SystemSpec:
    spec = builtin_system(vals["system"], vals["params"], vals["domain"])
    return recast_field(spec) if vals["recast"] else spec


def build_system(cfg: BenchConfig) -> SystemSpec:
    return _build_system_from(cfg.to_dict())


def build_dictionary(spec: dict, dim: int, seed: int) -> Dictionary:
    if spec["kind"] == "monomial":
        if "caps" in spec:
            return monomial_dictionary(dim, caps=spec["caps"])
        return monomial_dictionary(dim, total_degree=spec["total_degree"])
    dict_seed = spec.get("seed")
    if dict_seed is None:
        dict_seed = int(np.random.SeedSequence([seed, STREAM_DICT]).generate_state(1)[0])
    return tanh_random_dictionary(
        dim, spec["sigma"], dict_seed, spec.get("scale_W", 1.0), spec.get("scale_b", 1.0),
        spec.get("include_coordinates", True),
    )


def _stream(seed: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, stream])


# --------------------------------------------------------------------------- output helpers


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf"
        return f"{v:.6e}"
    return str(v)


def _csv_text(columns: Iterable[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def dictionary_label(d: Dictionary) -> str:
    return f"{'mono' if d.kind == 'monomial' else 'tanh'}{d.size}"


# --------------------------------------------------------------------------- table runner


def training_data(cfg: BenchConfig, spec: SystemSpec, gamma: int) -> SnapshotDataset:
    return generate_dataset(spec, cfg.M, cfg.T, cfg.gamma_count(gamma), _stream(cfg.seed, STREAM_TRAIN))


def _evaluation_set(cfg: BenchConfig, spec: SystemSpec) -> np.ndarray:
    ev = cfg.eval
    X0 = sample_initial_conditions(spec, ev["trajectories"], _stream(cfg.seed, STREAM_EVAL))
    times = np.linspace(0.0, ev["T_s"], ev["snapshot_count"] + 1)
    states, _, _ = integrate_batch(spec, X0, times)
    return states


def _true_theta(spec: SystemSpec, d: Dictionary) -> np.ndarray | None:
    try:
        return sysid.true_weights(spec, d)
    except ConfigError:
        return None


def split_rows(cfg: BenchConfig, M: int) -> tuple[np.ndarray, np.ndarray]:
    """Training and validation rows for SRTM, drawn from their own stream."""
    rng = np.random.default_rng(_stream(cfg.seed, STREAM_SPLIT))
    perm = rng.permutation(M)
    n_val = max(1, int(round(cfg.srtm["validation_fraction"] * M)))
    val, train = np.sort(perm[:n_val]), np.sort(perm[n_val:])
    if train.size == 0:
        raise ConfigError("SRTM split leaves no training trajectories")
    return train, val


def fit_method(
    method: str, cfg: BenchConfig, data: SnapshotDataset, d: Dictionary
) -> tuple[sysid.IdentifiedSystem, dict, dict]:
    """Fit one method; returns the identified field, a JSON model and extra row fields.

    The horizon and snapshot count come from ``data``, the remaining RTM
    settings from ``cfg``.
    """
    extra: dict[str, Any] = {}
    if method in ("RTM", "SRTM"):
        r = cfg.rtm
        rcfg = rtm.RtmConfig(
            mu=float(r["mu"]), lam=float(r["lam"]), T=data.T, gamma_count=data.gamma_count,
            delta=float(r["delta"]), quadrature_mode=r["quadrature_mode"],
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            if method == "RTM":
                gen = rtm.learn(data, d, rcfg, keep_intermediates=False)
                ident = sysid.recover_field(gen)
            else:
                train, val = split_rows(cfg, data.M)
                gen = rtm.learn(data.subset(train), d, rcfg, keep_intermediates=False)
                ident = sysid.srtm_sparsify(gen, data.subset(val), cfg.srtm["threshold"])
        extra["cond_A"] = gen.diagnostics["cond_A"]
        model = gen.to_dict() if method == "RTM" else {**ident.to_dict(), "method": "SRTM"}
    elif method in ("FDM", "KLM"):
        km = baselines.edmd_from_dataset(data, d)
        gen = baselines.fdm_learn(km) if method == "FDM" else baselines.klm_learn(km)
        ident = sysid.recover_field(gen)
        if method == "KLM":
            extra["imag_norm"] = gen.imag_norm
        model = gen.to_dict()
    elif method == "SINDY":
        ident = baselines.sindy_from_dataset(data, d, cfg.sindy["threshold"], cfg.sindy["max_iters"])
        model = ident.to_dict()
    else:
        raise ConfigError(f"unknown method {method!r}")
    return ident, model, extra


def _run_method(method, cfg, gamma, data, d, spec, truth) -> tuple[dict, dict | None]:
    row: dict[str, Any] = {"system": cfg.system, "method": method, "gamma": gamma, "M": data.M, "N": d.size}
    ident, model, extra = fit_method(method, cfg, data, d)
    row.update(extra)
    theta_true = _true_theta(spec, d)
    ev = cfg.eval
    with np.errstate(all="ignore"):
        fm = sysid.flow_metrics(ident, truth, ev["T_s"], ev["snapshot_count"], theta_true, ev["escape_radius"])
    row.update(rmse_weights=fm.rmse_weights, rmse_flow=fm.rmse_flow, blowups=fm.blowups, status="ok")
    return row, model


def _run_group(cfg: BenchConfig, dict_index: int, gamma: int, truth: np.ndarray, timing: bool):
    """All methods for one (dictionary, gamma) pair; they share one dataset."""
    spec = build_system(cfg)
    d = build_dictionary(cfg.dictionaries[dict_index], spec.dim, cfg.seed)
    data = training_data(cfg, spec, gamma)
    out = []
    for method in cfg.methods:
        t0 = time.perf_counter()
        try:
            row, model = _run_method(method, cfg, gamma, data, d, spec, truth)
        except (KoopgenError, np.linalg.LinAlgError, FloatingPointError) as exc:
            row = {"system": cfg.system, "method": method, "gamma": gamma, "M": data.M, "N": d.size,
                   "status": f"failed: {type(exc).__name__}: {exc}"}
            model = None
        elapsed = 1e3 * (time.perf_counter() - t0)
        row["wall_ms"] = round(elapsed, 3) if timing else None
        row["_elapsed_ms"] = elapsed
        row["config_hash"], row["seed"] = cfg.config_hash, cfg.seed
        row["_cell"] = f"{cfg.system}_{dictionary_label(d)}_g{gamma}_{method}"
        out.append((row, model))
    return out


@dataclass
class BenchResult:
    rows: list[dict]
    out_dir: Path | None

    @property
    def all_failed(self) -> bool:
        return all(not r["status"].startswith("ok") for r in self.rows)


def run_bench(cfg: BenchConfig, out_dir: str | Path | None = None, timing: bool = False) -> BenchResult:
    """Run every (dictionary, gamma, method) cell and write ``metrics.csv``.

    Per-cell records and models land in ``cells/`` and ``model_<cell>.json``,
    each written atomically. ``wall_ms`` is only filled when ``timing`` is
    set, so default outputs are byte-reproducible; timings always go to
    ``timings.csv``.
    """
    spec = build_system(cfg)
    truth = _evaluation_set(cfg, spec)
    tasks = [(i, g) for i in range(len(cfg.dictionaries)) for g in cfg.gammas]
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(tasks))) as pool:
            futures = [pool.submit(_run_group, cfg, i, g, truth, timing) for i, g in tasks]
            groups = [f.result() for f in futures]
    else:
        groups = [_run_group(cfg, i, g, truth, timing) for i, g in tasks]
    rows = []
    out = Path(out_dir) if out_dir is not None else None
    for group in groups:
        for row, model in group:
            rows.append(row)
            if out is not None:
                public = {k: v for k, v in row.items() if not k.startswith("_")}
                _atomic_write(out / "cells" / f"{row['_cell']}.json", json.dumps(public, sort_keys=True, default=str))
                if model is not None:
                    _atomic_write(out / f"model_{row['_cell']}.json", json.dumps(model, sort_keys=True))
    if out is not None:
        _atomic_write(out / "metrics.csv", _csv_text(METRIC_COLUMNS, rows))
        timings = [{"cell": r["_cell"], "wall_ms": round(r["_elapsed_ms"], 3)} for r in rows]
        _atomic_write(out / "timings.csv", _csv_text(("cell", "wall_ms"), timings))
        _atomic_write(out / "config.json", json.dumps(cfg.to_dict(), sort_keys=True, indent=2))
    return BenchResult(rows, out)


# --------------------------------------------------------------------------- mu sweep


def run_sweep_mu(cfg: BenchConfig, out_dir: str | Path | None = None) -> list[dict]:
    """RTM weight (and flow) error for every ``(gamma, mu)`` in the grid."""
    if not cfg.mu_grid:
        raise ConfigError("mu_grid: empty")
    spec = build_system(cfg)
    truth = _evaluation_set(cfg, spec)
    rows = []
    for i, dspec in enumerate(cfg.dictionaries):
        d = build_dictionary(dspec, spec.dim, cfg.seed)
        theta_true = _true_theta(spec, d)
        for gamma in cfg.gammas:
            data = training_data(cfg, spec, gamma)
            for mu in cfg.mu_grid:
                row = {"system": cfg.system, "gamma": gamma, "mu": float(mu), "N": d.size,
                       "config_hash": cfg.config_hash, "seed": cfg.seed}
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", RuntimeWarning)
                        gen = rtm.learn(data, d, cfg.rtm_config(gamma, mu), keep_intermediates=False)
                    ident = sysid.recover_field(gen)
                    ev = cfg.eval
                    with np.errstate(all="ignore"):
                        fm = sysid.flow_metrics(ident, truth, ev["T_s"], ev["snapshot_count"], theta_true,
                                                ev["escape_radius"])
                    row.update(rmse_weights=fm.rmse_weights, rmse_flow=fm.rmse_flow, status="ok")
                except (KoopgenError, np.linalg.LinAlgError) as exc:
                    row["status"] = f"failed: {type(exc).__name__}: {exc}"
                rows.append(row)
    if out_dir is not None:
        _atomic_write(Path(out_dir) / "sweep_mu.csv", _csv_text(SWEEP_COLUMNS, rows))
    return rows


# --------------------------------------------------------------------------- Zubov


def run_zubov(cfg: BenchConfig, out_dir: str | Path | None = None) -> dict:
    """Learn, locate the equilibrium, solve the Zubov equation and extract the RoA estimate."""
    spec = build_system(cfg)
    d = build_dictionary(cfg.dictionaries[0], spec.dim, cfg.seed)
    if not d.has_coordinates():
        raise ConfigError("zubov: the dictionary must contain every coordinate function")
    gamma = cfg.gammas[0]
    data = training_data(cfg, spec, gamma)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        gen = rtm.learn(data, d, cfg.rtm_config(gamma), keep_intermediates=False)
    ident = sysid.recover_field(gen)
    x_eq = zubov.find_equilibrium(ident)
    z = cfg.zubov
    prob = zubov.default_problem(spec.bounds, x_eq, z["alpha"], z["counts"], z["exclusion"], tuple(z["weights"]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sol = zubov.zubov_solve(gen, prob)
    axes = zubov.lattice(spec.bounds, z["counts"])
    roa = zubov.roa_extract(sol, d, axes, z["epsilon"])
    # generator accuracy on the dictionary, against the true Lie derivatives
    check = sample_initial_conditions(spec, 1000, _stream(cfg.seed, STREAM_EVAL))
    lie_true = d.lie_derivative(check, spec.field(check))
    lie_err = float(np.mean(np.abs(d.evaluate(check) @ gen.L - lie_true)))
    # decrease condition on the estimated region, away from the equilibrium
    pts = zubov.lattice_points(axes)
    away = roa.mask.ravel() & (np.linalg.norm(pts - x_eq, axis=1) > 0.1)
    max_lie = zubov.lie_derivative_check(gen, sol.theta, pts[away]) if np.any(away) else None
    summary = {
        "system": cfg.system,
        "equilibrium": x_eq.tolist(),
        "equilibrium_value": sol.equilibrium_value,
        "residual_rms": sol.residual_rms,
        "boundary_rms": sol.boundary_rms,
        "level": roa.level,
        "roa_fraction": roa.fraction,
        "roa_area": roa.area(),
        "lie_derivative_error": lie_err,
        "max_lie_on_roa": max_lie,
        "theta": sol.theta.tolist(),
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
    }
    if out_dir is not None:
        out = Path(out_dir)
        _atomic_write(out / f"zubov_{cfg.system}.json", json.dumps(summary, sort_keys=True, indent=2))
        fd, tmp = tempfile.mkstemp(dir=out, prefix=".zubov.")
        os.close(fd)
        roa.to_csv(tmp)
        os.replace(tmp, out / f"zubov_{cfg.system}.csv")
    summary["_roa"] = roa
    summary["_solution"] = sol
    return summary
