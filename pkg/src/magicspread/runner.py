"""Experiment orchestration: configuration, seeding, checkpoints, reductions and export.

A run directory holds::

    config.yaml            the resolved configuration
    manifest.json          format version, package version and config hash
    realizations/rNNNNN.npz  raw observables of one realisation (the checkpoint unit)
    series_<obs>.csv       per-time reductions, one file per observable
    fits.csv, saturation.csv, results.json
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analysis import (
    PERCENTILES,
    EnsembleSeries,
    FitError,
    compare_models,
    deviation_series,
    long_time_average,
    noise_cutoff,
    saturation_time,
)
from .complexity import (
    collision_probability,
    haar_pe,
    haar_se_estimate,
    haar_se_k2,
    participation_entropy,
    pauli_spectrum_summary,
    porter_thomas_distance,
    renyi2_entanglement_halfcut,
    stabilizer_entropy,
)
from .models import (
    FloquetFamily,
    FloquetFamilySpec,
    IsingParams,
    KickedIsing,
    MixedFieldIsing,
    energy_filtered_state,
    half_filling_basis_state,
    random_product_state,
)
from .propagators import ChebyshevConfig, GateSampler, brickwall_step, evolve_for

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CHECKPOINT_FORMAT = 1
MODELS = ("kim", "mfim", "floquet_family", "circuit_haar", "circuit_u1")
DISCRETE_MODELS = ("kim", "floquet_family", "circuit_haar", "circuit_u1")
OBSERVABLES = ("pe", "se", "entanglement", "porter_thomas")
WORKERS_ENV = "MAGICSPREAD_WORKERS"
SIMULATION_FIELDS = ("schema_version", "model", "num_qubits", "theta", "disorder_width", "time_grid", "renyi_ks",
                     "observables", "se_t_max", "se_grid", "master_seed", "energy_filter", "energy_window",
                     "energy_filter_literal", "first_layer", "chebyshev_tolerance", "chebyshev_max_step")

SERIES_COLUMNS = ["model", "N", "k", "t", "mean", "stderr"] + [f"p{q}" for q in PERCENTILES]
FIT_COLUMNS = ["model", "N", "k", "quantity", "fit_model", "amplitude", "rate_or_exponent", "stderr",
               "window_lo", "window_hi", "residual_rms"]
SATURATION_COLUMNS = ["model", "N", "k", "quantity", "epsilon", "t_sat", "defined"]


class ConfigError(ValueError):
    exit_code = 2


class ResourceCeilingError(RuntimeError):
    exit_code = 3


class CheckpointMismatchError(RuntimeError):
    exit_code = 4


@dataclass
class ExperimentConfig:
    model: str
    num_qubits: int
    ensemble_size: int = 100
    time_grid: dict = field(default_factory=lambda: {"kind": "linear", "step": 1, "t_max": 50})
    theta: float = 0.0
    disorder_width: float = 0.0
    renyi_ks: list = field(default_factory=lambda: [2])
    observables: dict = field(default_factory=lambda: {"pe": True, "se": False, "entanglement": False,
                                                       "porter_thomas": False})
    se_t_max: float | None = None
    se_grid: dict | None = None
    epsilon_list: list = field(default_factory=lambda: [0.2, 0.1])
    master_seed: int = 1234
    output_dir: str = "runs/default"
    energy_filter: bool | None = None
    energy_window: float = 0.05
    energy_filter_literal: bool = False
    reference: str = "auto"
    pe_reference_window: list = field(default_factory=lambda: [1000.0, 5000.0])
    se_reference_window: list = field(default_factory=lambda: [100.0, 200.0])
    fit_windows: dict = field(default_factory=lambda: {"pe": [5.0, None], "se": [5.0, None]})
    noise_factor: float = 3.0
    persistence: int = 5
    se_ceiling: int = 16
    max_qubits: int = 24
    first_layer: str = "odd"
    chebyshev_tolerance: float = 1e-12
    chebyshev_max_step: float = 20.0
    haar_samples: int = 50
    schema_version: int = SCHEMA_VERSION

    # -- construction and validation ------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = _normalise_keys(data)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("model", "num_qubits"):
            if key not in data:
                raise ConfigError(f"missing required config key {key!r}")
        if data.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {data['schema_version']}")
        defaults = cls(model=data["model"], num_qubits=data["num_qubits"])
        for key in ("observables", "fit_windows"):
            if key in data and data[key] is not None:
                merged = dict(getattr(defaults, key))
                merged.update(data[key])
                data[key] = merged
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        data = _normalise_keys(data)
        data.update(_normalise_keys(overrides or {}))
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def fingerprint(self) -> str:
        """Hash of the fields that determine per-realisation data.

        Analysis settings (references, windows, epsilons) and the ensemble size
        are left out, so a run can be re-analysed or extended without resimulating.
        """
        d = self.to_dict()
        return hashlib.sha256(json.dumps({k: d[k] for k in SIMULATION_FIELDS}, sort_keys=True).encode()).hexdigest()

    @property
    def label(self) -> str:
        if self.model == "floquet_family":
            return f"floquet_family({self.theta:g})"
        return self.model

    @property
    def conserves_energy(self) -> bool:
        return self.model == "mfim" or (self.model == "floquet_family" and self.theta == 0.5)

    @property
    def uses_energy_filter(self) -> bool:
        if self.energy_filter is None:
            return self.conserves_energy
        return bool(self.energy_filter)

    @property
    def reference_kind(self) -> str:
        if self.reference != "auto":
            return self.reference
        if self.conserves_energy or self.model == "circuit_u1":
            return "long_time"
        return "haar"

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if not isinstance(self.num_qubits, int) or self.num_qubits < 1:
            raise ConfigError("num_qubits must be a positive integer")
        if self.ensemble_size < 1:
            raise ConfigError("ensemble_size must be >= 1")
        if self.model.startswith("circuit") and self.num_qubits % 2:
            raise ConfigError("circuit models need even N")
        if self.model == "floquet_family" and not 0 <= self.theta <= 0.5:
            raise ConfigError("theta must lie in [0, 1/2]")
        if self.disorder_width < 0:
            raise ConfigError("disorder_width must be >= 0")
        for k in self.renyi_ks:
            if k not in (1, 2, 3):
                raise ConfigError("renyi_ks must be drawn from {1, 2, 3}")
        unknown = set(self.observables) - set(OBSERVABLES)
        if unknown:
            raise ConfigError(f"unknown observables {sorted(unknown)}")
        if self.reference not in ("auto", "haar", "long_time"):
            raise ConfigError("reference must be auto, haar or long_time")
        if self.first_layer not in ("odd", "even"):
            raise ConfigError("first_layer must be odd or even")
        if any(e <= 0 for e in self.epsilon_list):
            raise ConfigError("epsilons must be positive")
        if not 0 < self.master_seed < 2 ** 64 and self.master_seed != 0:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        try:
            grid = self.times()
            if self.se_grid is not None:
                _grid(self.se_grid)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad time_grid: {exc}") from exc
        if self.model in DISCRETE_MODELS and np.any(grid != np.round(grid)):
            raise ConfigError("discrete-time models need an integer time grid")

    def check_resources(self) -> None:
        if self.num_qubits > self.max_qubits:
            raise ResourceCeilingError(f"N = {self.num_qubits} exceeds max_qubits = {self.max_qubits}")
        if self.observables.get("se") and self.num_qubits > self.se_ceiling:
            raise ResourceCeilingError(f"stabilizer entropy requested at N = {self.num_qubits} "
                                       f"above se_ceiling = {self.se_ceiling}")

    # -- time grids -------------------------------------------------------------------

    def times(self) -> np.ndarray:
        """Observation times: the main grid, merged with se_grid when one is given."""
        t = _grid(self.time_grid)
        if self.se_grid is not None:
            t = np.union1d(t, _grid(self.se_grid))
        return t

    def se_times(self) -> np.ndarray:
        """SE cadence: se_grid if given, else the main grid, cut at se_t_max."""
        t = _grid(self.se_grid) if self.se_grid is not None else self.times()
        if self.se_t_max is not None:
            t = t[t <= self.se_t_max]
        return t


def _normalise_keys(data: dict) -> dict:
    data = dict(data)
    if "N" in data:
        data["num_qubits"] = data.pop("N")
    return data


def _grid(g: dict) -> np.ndarray:
    """Times of a linear or hybrid grid; hybrid = every integer up to dense_until, then log-spaced integers."""
    kind = g.get("kind", "linear")
    t_max = float(g["t_max"])
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    if kind == "linear":
        step = float(g.get("step", 1))
        if step <= 0:
            raise ValueError("step must be positive")
        n = int(math.floor(t_max / step + 1e-9))
        return np.arange(n + 1) * step
    if kind == "hybrid":
        dense = float(g["dense_until"])
        pts = int(g["log_points"])
        early = np.arange(0, math.floor(min(dense, t_max)) + 1, dtype=float)
        late = np.geomspace(max(dense, 1.0), t_max, pts) if t_max > dense and pts > 0 else np.array([])
        return np.unique(np.concatenate([early, np.round(late), [t_max]]))
    raise ValueError(f"unknown grid kind {kind!r}")


# -- seeding --------------------------------------------------------------------------------


def stream_seed(master_seed: int, realization: int, role: str) -> np.random.SeedSequence:
    """Independent stream named by (master_seed, realisation, role); stable across runs and platforms."""
    return np.random.SeedSequence(master_seed, spawn_key=(realization, zlib.crc32(role.encode())))


def stream_rng(master_seed: int, realization: int, role: str) -> np.random.Generator:
    return np.random.default_rng(stream_seed(master_seed, realization, role))


# -- one realisation ------------------------------------------------------------------------


def _model_params(cfg: ExperimentConfig, r: int) -> IsingParams:
    return IsingParams.disordered(cfg.num_qubits, cfg.disorder_width, stream_rng(cfg.master_seed, r, "disorder"))


def _record(state, cfg, out, t_index, se_index):
    for k in cfg.renyi_ks:
        out[f"pe_{k}"][t_index] = participation_entropy(state, k)
    out["collision_probability"][t_index] = collision_probability(state)
    if cfg.observables.get("entanglement") and cfg.num_qubits >= 2:
        out["entanglement"][t_index] = renyi2_entanglement_halfcut(state)
    if cfg.observables.get("porter_thomas"):
        out["porter_thomas"][t_index] = porter_thomas_distance(state)
    if se_index is not None:
        summary = pauli_spectrum_summary(state, cfg.renyi_ks)
        for k in cfg.renyi_ks:
            out[f"se_{k}"][se_index] = stabilizer_entropy(summary, k)


def simulate_realization(cfg: ExperimentConfig, r: int) -> dict[str, np.ndarray]:
    """Evolve realisation ``r`` along the grid and return its raw observables."""
    times = cfg.times()
    se_times = cfg.se_times() if cfg.observables.get("se") else np.array([])
    se_lookup = {float(t): i for i, t in enumerate(se_times)}
    out: dict[str, np.ndarray] = {f"pe_{k}": np.full(times.size, np.nan) for k in cfg.renyi_ks}
    out["collision_probability"] = np.full(times.size, np.nan)
    if cfg.observables.get("entanglement"):
        out["entanglement"] = np.full(times.size, np.nan)
    if cfg.observables.get("porter_thomas"):
        out["porter_thomas"] = np.full(times.size, np.nan)
    if cfg.observables.get("se"):
        for k in cfg.renyi_ks:
            out[f"se_{k}"] = np.full(se_times.size, np.nan)

    nq = cfg.num_qubits
    init_rng = stream_rng(cfg.master_seed, r, "initial_state")
    cheb = ChebyshevConfig(coefficient_tolerance=cfg.chebyshev_tolerance)

    if cfg.model.startswith("circuit"):
        state = half_filling_basis_state(nq, init_rng)
        kind = "haar_u4" if cfg.model == "circuit_haar" else "u1_block"
        sampler = GateSampler(kind, seed=int(stream_seed(cfg.master_seed, r, "gates").generate_state(1)[0]))
        offset = 0 if cfg.first_layer == "odd" else 1

        def advance(t0, t1):
            for layer in range(int(t0) + 1, int(t1) + 1):
                brickwall_step(state, layer + offset, sampler)
    else:
        params = _model_params(cfg, r)
        if cfg.uses_energy_filter:
            state = energy_filtered_state(nq, params, init_rng, window=cfg.energy_window,
                                          literal=cfg.energy_filter_literal)
        else:
            state = random_product_state(nq, init_rng)
        if cfg.model == "kim":
            floquet = KickedIsing(params)

            def advance(t0, t1):
                for _ in range(int(t1) - int(t0)):
                    floquet.step(state)
        elif cfg.model == "floquet_family":
            family = FloquetFamily(FloquetFamilySpec(params, cfg.theta), cheb)

            def advance(t0, t1):
                for _ in range(int(t1) - int(t0)):
                    family.step(state)
        else:
            ham = MixedFieldIsing(params)
            bounds = ham.bounds()

            def advance(t0, t1):
                evolve_for(state, ham, bounds, t1 - t0, cheb, max_step=cfg.chebyshev_max_step)

    t_prev = 0.0
    for i, t in enumerate(times):
        advance(t_prev, t)
        t_prev = t
        _record(state, cfg, out, i, se_lookup.get(float(t)))
    return out


def _simulate_job(args):
    cfg_dict, r = args
    return r, simulate_realization(ExperimentConfig.from_dict(cfg_dict), r)


# -- checkpoints ------------------------------------------------------------------------------


def _manifest(cfg: ExperimentConfig) -> dict:
    return {"checkpoint_format": CHECKPOINT_FORMAT, "package_version": __version__,
            "config_hash": cfg.fingerprint()}


def prepare_run_dir(cfg: ExperimentConfig, run_dir: Path) -> None:
    """Create or validate ``run_dir``; refuse to mix results from a different config or version."""
    try:
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "realizations").mkdir(exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {run_dir}: {exc}") from exc
    mpath = run_dir / "manifest.json"
    expected = _manifest(cfg)
    if mpath.exists():
        try:
            found = json.loads(mpath.read_text())
        except json.JSONDecodeError as exc:
            raise CheckpointMismatchError(f"corrupt manifest in {run_dir}") from exc
        for key in ("checkpoint_format", "package_version", "config_hash"):
            if found.get(key) != expected[key]:
                raise CheckpointMismatchError(
                    f"checkpoint in {run_dir} has {key}={found.get(key)!r}, expected {expected[key]!r}")
    else:
        mpath.write_text(json.dumps(expected, indent=2))
    (run_dir / "config.yaml").write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))


def _realization_path(run_dir: Path, r: int) -> Path:
    return run_dir / "realizations" / f"r{r:05d}.npz"


def load_realization(run_dir: Path, r: int) -> dict[str, np.ndarray] | None:
    path = _realization_path(run_dir, r)
    if not path.exists():
        return None
    try:
        with np.load(path) as data:
            return {k: data[k] for k in data.files}
    except (OSError, ValueError, zlib.error) as exc:
        raise CheckpointMismatchError(f"corrupt checkpoint {path}: {exc}") from exc


def save_realization(run_dir: Path, r: int, data: dict[str, np.ndarray]) -> None:
    path = _realization_path(run_dir, r)
    tmp = path.with_name(path.stem + ".tmp.npz")
    np.savez(tmp, **data)
    os.replace(tmp, path)


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(WORKERS_ENV)
    return max(1, int(env)) if env else 1


# -- reductions and analysis ------------------------------------------------------------------


@dataclass
class ResultBundle:
    config: ExperimentConfig
    series: dict[tuple[str, int], EnsembleSeries]
    references: dict[tuple[str, int], tuple[float, float]] = field(default_factory=dict)
    comparisons: dict[tuple[str, int], dict] = field(default_factory=dict)
    fit_errors: dict[tuple[str, int], str] = field(default_factory=dict)
    saturation: list[dict] = field(default_factory=list)

    def delta(self, quantity: str, k: int) -> EnsembleSeries:
        ref, _ = self.references[(quantity, k)]
        return deviation_series(self.series[(quantity, k)], ref)

    def fit_rows(self) -> list[dict]:
        rows = []
        for (q, k), comp in self.comparisons.items():
            for name in ("exponential", "power_law"):
                f = comp[name]
                rows.append({"model": self.config.label, "N": self.config.num_qubits, "k": k, "quantity": q,
                             "fit_model": name, "amplitude": f.amplitude,
                             "rate_or_exponent": f.rate_or_exponent, "stderr": f.parameter_std_errors[1],
                             "window_lo": f.fit_window[0], "window_hi": f.fit_window[1],
                             "residual_rms": f.residual_rms})
        return rows


def reduce_realizations(cfg: ExperimentConfig, raw: list[dict[str, np.ndarray]]) -> dict:
    """Stack realisations in index order into one EnsembleSeries per (observable, k)."""
    times, se_times = cfg.times(), cfg.se_times()
    series = {}
    for k in cfg.renyi_ks:
        series[("pe", k)] = EnsembleSeries(times, np.stack([d[f"pe_{k}"] for d in raw]))
        if cfg.observables.get("se"):
            series[("se", k)] = EnsembleSeries(se_times, np.stack([d[f"se_{k}"] for d in raw]))
    series[("collision_probability", 2)] = EnsembleSeries(times, np.stack([d["collision_probability"] for d in raw]))
    if cfg.observables.get("entanglement"):
        series[("entanglement", 2)] = EnsembleSeries(times, np.stack([d["entanglement"] for d in raw]))
    if cfg.observables.get("porter_thomas"):
        series[("porter_thomas", 0)] = EnsembleSeries(times, np.stack([d["porter_thomas"] for d in raw]))
    return series


def haar_reference(cfg: ExperimentConfig, quantity: str, k: int, cache_dir: Path | None = None) -> tuple[float, float]:
    """Haar value of S_k or M_k and its uncertainty (zero for closed forms)."""
    nq = cfg.num_qubits
    if quantity == "pe":
        return haar_pe(nq, k), 0.0
    if k == 2:
        return haar_se_k2(nq), 0.0
    key = f"se_{k}_N{nq}_s{cfg.haar_samples}_seed{cfg.master_seed}"
    cache = (cache_dir / "haar_reference.json") if cache_dir is not None else None
    stored = json.loads(cache.read_text()) if cache is not None and cache.exists() else {}
    if key not in stored:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.master_seed, spawn_key=(2 ** 31, k)))
        stored[key] = list(haar_se_estimate(nq, k, rng, cfg.haar_samples))
        if cache is not None:
            cache.write_text(json.dumps(stored, indent=2))
    val, err = stored[key]
    return float(val), float(err)


def analyze(cfg: ExperimentConfig, series: dict, epsilons=None, cache_dir: Path | None = None) -> ResultBundle:
    epsilons = list(epsilons if epsilons is not None else cfg.epsilon_list)
    bundle = ResultBundle(cfg, series)
    for (q, k), s in series.items():
        if q not in ("pe", "se"):
            continue
        if cfg.reference_kind == "haar":
            ref = haar_reference(cfg, q, k, cache_dir)
        else:
            window = cfg.pe_reference_window if q == "pe" else cfg.se_reference_window
            try:
                ref = long_time_average(s, tuple(window))
            except ValueError as exc:
                bundle.fit_errors[(q, k)] = str(exc)
                continue
        bundle.references[(q, k)] = ref
        delta = deviation_series(s, ref[0])
        t_lo, t_hi = cfg.fit_windows[q]
        try:
            cut = noise_cutoff(delta, t_lo, cfg.noise_factor)
            hi = cut if t_hi is None else min(cut, float(t_hi))
            bundle.comparisons[(q, k)] = compare_models(delta, (t_lo, hi))
        except FitError as exc:
            bundle.fit_errors[(q, k)] = str(exc)
        for eps in epsilons:
            sat = saturation_time(delta, eps, cfg.persistence)
            bundle.saturation.append({"model": cfg.label, "N": cfg.num_qubits, "k": k, "quantity": q,
                                      "epsilon": eps, "t_sat": sat.t_sat, "defined": sat.defined})
    return bundle


# -- export ---------------------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def series_rows(bundle: ResultBundle, quantity: str) -> list[dict]:
    rows = []
    for (q, k), s in bundle.series.items():
        if q != quantity:
            continue
        mean, err, pct = s.mean(), s.stderr(), s.percentiles()
        for i, t in enumerate(s.times):
            row = {"model": bundle.config.label, "N": bundle.config.num_qubits, "k": k, "t": float(t),
                   "mean": float(mean[i]), "stderr": float(err[i])}
            row.update({f"p{q_}": float(pct[q_][i]) for q_ in PERCENTILES})
            rows.append(row)
    return rows


def export(bundle: ResultBundle, out_dir, formats=("csv", "json")) -> list[Path]:
    """Write per-observable time tables, fit and saturation tables."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot write to {out_dir}: {exc}") from exc
    quantities = sorted({q for q, _ in bundle.series})
    tables = {f"series_{q}": (SERIES_COLUMNS, series_rows(bundle, q)) for q in quantities}
    tables["fits"] = (FIT_COLUMNS, bundle.fit_rows())
    tables["saturation"] = (SATURATION_COLUMNS, bundle.saturation)
    written = []
    if "csv" in formats:
        for name, (cols, rows) in tables.items():
            path = out_dir / f"{name}.csv"
            _write_csv(path, cols, rows)
            written.append(path)
    if "json" in formats:
        payload = {name: [{c: row[c] for c in cols} for row in rows] for name, (cols, rows) in tables.items()}
        payload["references"] = [{"quantity": q, "k": k, "value": v, "stderr": e}
                                 for (q, k), (v, e) in bundle.references.items()]
        payload["preferred_model"] = [{"quantity": q, "k": k, "preferred": c["preferred"]}
                                      for (q, k), c in bundle.comparisons.items()]
        payload["fit_errors"] = [{"quantity": q, "k": k, "error": msg} for (q, k), msg in bundle.fit_errors.items()]
        payload["config"] = bundle.config.to_dict()
        path = out_dir / "results.json"
        path.write_text(json.dumps(payload, indent=2, default=_json_default))
        written.append(path)
    return written


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serialisable: {type(o)}")


# -- top level ---------------------------------------------------------------------------------


def collect(cfg: ExperimentConfig, run_dir: Path | None = None, workers: int | None = None,
            stop_after: int | None = None) -> list[dict[str, np.ndarray]] | None:
    """Raw observables of every realisation, computing those not found in ``run_dir``.

    ``stop_after`` limits how many new realisations are computed (simulates an
    interrupted run); returns None when the ensemble is incomplete.
    """
    raw: dict[int, dict] = {}
    todo = []
    for r in range(cfg.ensemble_size):
        found = load_realization(run_dir, r) if run_dir is not None else None
        if found is not None:
            raw[r] = found
        else:
            todo.append(r)
    if stop_after is not None:
        todo = todo[:stop_after]
    n_workers = worker_count(workers)
    if todo:
        log.info("%s N=%d: computing %d of %d realisations with %d worker(s)",
                 cfg.label, cfg.num_qubits, len(todo), cfg.ensemble_size, n_workers)
    if n_workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(n_workers) as pool:
            for r, data in pool.map(_simulate_job, [(cfg.to_dict(), r) for r in todo]):
                raw[r] = data
                if run_dir is not None:
                    save_realization(run_dir, r, data)
    else:
        for r in todo:
            raw[r] = simulate_realization(cfg, r)
            if run_dir is not None:
                save_realization(run_dir, r, raw[r])
            log.debug("realisation %d done", r)
    if len(raw) < cfg.ensemble_size:
        return None
    return [raw[r] for r in range(cfg.ensemble_size)]


def run_experiment(cfg: ExperimentConfig, run_dir=None, workers: int | None = None,
                   stop_after: int | None = None, write: bool = True) -> ResultBundle | None:
    cfg.validate()
    cfg.check_resources()
    run_dir = Path(run_dir if run_dir is not None else cfg.output_dir)
    prepare_run_dir(cfg, run_dir)
    raw = collect(cfg, run_dir, workers, stop_after)
    if raw is None:
        return None
    bundle = analyze(cfg, reduce_realizations(cfg, raw), cache_dir=run_dir)
    if write:
        export(bundle, run_dir)
    return bundle


def load_config(run_dir) -> ExperimentConfig:
    path = Path(run_dir) / "config.yaml"
    if not path.exists():
        raise ConfigError(f"{run_dir} holds no config.yaml")
    return ExperimentConfig.from_file(path)


def resume(run_dir, workers: int | None = None) -> ResultBundle | None:
    cfg = load_config(run_dir)
    return run_experiment(cfg, run_dir, workers)


def analyze_run(run_dir, epsilons=None) -> ResultBundle:
    """Re-run the analysis on stored realisations without simulating."""
    run_dir = Path(run_dir)
    cfg = load_config(run_dir)
    prepare_run_dir(cfg, run_dir)
    raw = [load_realization(run_dir, r) for r in range(cfg.ensemble_size)]
    missing = [r for r, d in enumerate(raw) if d is None]
    if missing:
        raise CheckpointMismatchError(f"{len(missing)} realisations missing in {run_dir}; resume the run first")
    bundle = analyze(cfg, reduce_realizations(cfg, raw), epsilons, cache_dir=run_dir)
    export(bundle, run_dir)
    return bundle
