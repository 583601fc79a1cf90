import csv
import json

import numpy as np
import pytest

from magicspread.complexity import haar_pe_k2, participation_entropy, stabilizer_renyi_entropy
from magicspread.models import random_product_state
from magicspread.runner import (
    FIT_COLUMNS,
    SATURATION_COLUMNS,
    SERIES_COLUMNS,
    CheckpointMismatchError,
    ConfigError,
    ExperimentConfig,
    ResourceCeilingError,
    analyze,
    analyze_run,
    collect,
    export,
    reduce_realizations,
    resume,
    run_experiment,
    simulate_realization,
    stream_rng,
    stream_seed,
)


def make(tmp_path=None, **kw):
    base = dict(model="kim", N=6, ensemble_size=6, time_grid={"kind": "linear", "step": 1, "t_max": 12},
                renyi_ks=[2], observables={"pe": True, "se": True}, master_seed=11)
    base.update(kw)
    if tmp_path is not None:
        base.setdefault("output_dir", str(tmp_path / "run"))
    return ExperimentConfig.from_dict(base)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- configuration -----------------------------------------------------------------------


@pytest.mark.parametrize("bad", [
    {"model": "ising"},
    {"ensemble_size": 0},
    {"model": "circuit_u1", "N": 5},
    {"model": "floquet_family", "theta": 0.7},
    {"renyi_ks": [4]},
    {"observables": {"magic": True}},
    {"first_layer": "middle"},
    {"time_grid": {"kind": "spiral", "t_max": 3}},
    {"time_grid": {"kind": "linear", "step": 0.5, "t_max": 3}},
    {"schema_version": 99},
    {"colour": "blue"},
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        make(**bad)


def test_missing_required_key():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"model": "kim"})


def test_resource_ceilings():
    with pytest.raises(ResourceCeilingError):
        make(N=18).check_resources()
    make(N=18, observables={"pe": True, "se": False}).check_resources()
    with pytest.raises(ResourceCeilingError):
        make(N=26, observables={"pe": True, "se": False}).check_resources()


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("schema_version: 1\nmodel: kim\nN: 4\nensemble_size: 3\n")
    cfg = ExperimentConfig.from_file(path, {"ensemble_size": 7})
    assert cfg.num_qubits == 4 and cfg.ensemble_size == 7
    path.write_text("- not a mapping\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(path)


def test_config_round_trip():
    cfg = make(theta=0.0, disorder_width=0.5)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_fingerprint_ignores_analysis_settings():
    a = make()
    assert a.fingerprint() == make(epsilon_list=[0.3], ensemble_size=9, output_dir="x").fingerprint()
    assert a.fingerprint() != make(master_seed=12).fingerprint()


def test_reference_and_filter_defaults():
    assert make().reference_kind == "haar" and not make().uses_energy_filter
    mf = make(model="mfim")
    assert mf.reference_kind == "long_time" and mf.uses_energy_filter
    assert make(model="floquet_family", theta=0.5).uses_energy_filter
    assert not make(model="floquet_family", theta=0.46).uses_energy_filter
    assert make(model="circuit_u1").reference_kind == "long_time"
    assert make(model="circuit_haar").reference_kind == "haar"


# -- grids and seeds ----------------------------------------------------------------------


def test_linear_grid():
    assert list(make(time_grid={"kind": "linear", "step": 2, "t_max": 7}).times()) == [0, 2, 4, 6]


def test_hybrid_grid_dense_then_sparse():
    cfg = make(model="mfim", time_grid={"kind": "hybrid", "dense_until": 20, "log_points": 15, "t_max": 1000})
    t = cfg.times()
    assert list(t[:21]) == list(range(21))
    late = np.diff(t[t >= 20])
    assert np.all(late >= 1) and late[-1] > 50 and t[-1] == 1000
    assert np.all(t == np.round(t))


def test_se_grid_merged_into_main_grid():
    cfg = make(model="mfim", time_grid={"kind": "hybrid", "dense_until": 10, "log_points": 5, "t_max": 500},
               se_grid={"kind": "hybrid", "dense_until": 5, "log_points": 6, "t_max": 60}, se_t_max=40)
    assert set(cfg.se_times()) <= set(cfg.times())
    assert cfg.se_times().max() <= 40


def test_streams_are_stable_and_distinct():
    a = stream_rng(5, 3, "disorder").random(4)
    assert np.array_equal(a, stream_rng(5, 3, "disorder").random(4))
    assert not np.allclose(a, stream_rng(5, 3, "gates").random(4))
    assert not np.allclose(a, stream_rng(5, 4, "disorder").random(4))
    assert stream_seed(5, 3, "initial_state").spawn_key[0] == 3


# -- simulation ---------------------------------------------------------------------------


def test_t_max_zero_gives_initial_observables():
    cfg = make(ensemble_size=1, time_grid={"kind": "linear", "step": 1, "t_max": 0})
    data = simulate_realization(cfg, 0)
    psi0 = random_product_state(6, stream_rng(cfg.master_seed, 0, "initial_state"))
    assert data["pe_2"][0] == participation_entropy(psi0, 2)
    assert data["se_2"][0] == pytest.approx(stabilizer_renyi_entropy(psi0, 2), abs=1e-12)


@pytest.mark.parametrize("model", ["kim", "mfim", "floquet_family", "circuit_haar", "circuit_u1"])
def test_every_model_runs(model):
    cfg = make(model=model, N=4, ensemble_size=2, theta=0.25,
               observables={"pe": True, "se": True, "entanglement": True, "porter_thomas": True})
    data = simulate_realization(cfg, 1)
    assert np.all(np.isfinite(data["pe_2"])) and np.all(np.isfinite(data["entanglement"]))
    if model == "circuit_u1":
        assert data["pe_2"][0] == 0.0


def test_first_layer_option_changes_circuit():
    a = simulate_realization(make(model="circuit_haar", N=4), 0)
    b = simulate_realization(make(model="circuit_haar", N=4, first_layer="even"), 0)
    assert a["pe_2"][0] == b["pe_2"][0] and not np.allclose(a["pe_2"][1:], b["pe_2"][1:])


def test_kim_tail_reaches_haar(tmp_path):
    cfg = make(tmp_path, N=12, ensemble_size=50, time_grid={"kind": "linear", "step": 1, "t_max": 40},
               observables={"pe": True, "se": False})
    bundle = run_experiment(cfg)
    s = bundle.series[("pe", 2)]
    tail = s.window(30, 40)
    per_real = tail.values.mean(axis=1)
    err = per_real.std(ddof=1) / np.sqrt(per_real.size)
    assert abs(per_real.mean() - haar_pe_k2(12)) < 2 * err


# -- reproducibility and checkpoints ------------------------------------------------------


def test_rerun_bit_identical(tmp_path):
    run_experiment(make(tmp_path / "a"))
    run_experiment(make(tmp_path / "b"))
    for name in ("series_pe.csv", "series_se.csv", "fits.csv", "saturation.csv"):
        assert (tmp_path / "a" / "run" / name).read_bytes() == (tmp_path / "b" / "run" / name).read_bytes()


def test_worker_count_does_not_change_results(tmp_path):
    run_experiment(make(tmp_path / "a"), workers=1)
    run_experiment(make(tmp_path / "b"), workers=2)
    assert (tmp_path / "a/run/series_se.csv").read_bytes() == (tmp_path / "b/run/series_se.csv").read_bytes()


def test_interrupt_and_resume_identical(tmp_path):
    full = make(tmp_path / "full", ensemble_size=50, N=4)
    run_experiment(full)
    part = make(tmp_path / "part", ensemble_size=50, N=4)
    assert run_experiment(part, stop_after=10) is None
    assert len(list((tmp_path / "part/run/realizations").glob("*.npz"))) == 10
    resume(tmp_path / "part/run")
    assert (tmp_path / "full/run/series_pe.csv").read_bytes() == (tmp_path / "part/run/series_pe.csv").read_bytes()


def test_resume_with_altered_config_refused(tmp_path):
    run_experiment(make(tmp_path, N=4), stop_after=2)
    with pytest.raises(CheckpointMismatchError):
        run_experiment(make(tmp_path, N=4, master_seed=99))


def test_version_mismatch_refused(tmp_path):
    cfg = make(tmp_path, N=4)
    run_experiment(cfg, stop_after=1)
    mpath = tmp_path / "run" / "manifest.json"
    manifest = json.loads(mpath.read_text())
    manifest["package_version"] = "0.0.0"
    mpath.write_text(json.dumps(manifest))
    with pytest.raises(CheckpointMismatchError):
        run_experiment(cfg)


def test_empty_dir_fresh_start(tmp_path):
    (tmp_path / "run").mkdir()
    assert run_experiment(make(tmp_path, N=4)) is not None


def test_corrupt_checkpoint_reported(tmp_path):
    cfg = make(tmp_path, N=4)
    run_experiment(cfg, stop_after=1)
    (tmp_path / "run/realizations/r00000.npz").write_bytes(b"garbage")
    with pytest.raises(CheckpointMismatchError):
        run_experiment(cfg)


def test_realization_independence():
    cfg = make(N=4, ensemble_size=8)
    raw = collect(cfg)
    keep = [0, 2, 3, 7]
    sub_cfg = make(N=4, ensemble_size=len(keep))
    direct = reduce_realizations(sub_cfg, [raw[i] for i in keep])
    via_subset = reduce_realizations(cfg, raw)
    for key, series in direct.items():
        assert np.array_equal(series.values, via_subset[key].subset(keep).values)


def test_analyze_run_with_new_epsilons(tmp_path):
    run_experiment(make(tmp_path, N=4))
    bundle = analyze_run(tmp_path / "run", epsilons=[0.5])
    assert {row["epsilon"] for row in bundle.saturation} == {0.5}


def test_analyze_run_requires_complete_ensemble(tmp_path):
    run_experiment(make(tmp_path, N=4), stop_after=2)
    with pytest.raises(CheckpointMismatchError):
        analyze_run(tmp_path / "run")


def test_long_time_reference_for_mfim(tmp_path):
    cfg = make(tmp_path, model="mfim", N=6, ensemble_size=4,
               time_grid={"kind": "hybrid", "dense_until": 20, "log_points": 10, "t_max": 200},
               pe_reference_window=[100, 200], se_reference_window=[100, 200], se_t_max=None)
    bundle = run_experiment(cfg)
    ref, err = bundle.references[("pe", 2)]
    assert ref < haar_pe_k2(6) + 4 * err


# -- export --------------------------------------------------------------------------------


@pytest.fixture
def exported(tmp_path):
    cfg = make(tmp_path, observables={"pe": True, "se": True, "entanglement": True, "porter_thomas": True})
    bundle = run_experiment(cfg)
    return bundle, tmp_path / "run"


def test_column_order(exported):
    _, out = exported
    assert read_csv(out / "series_pe.csv")[0] == SERIES_COLUMNS
    assert read_csv(out / "fits.csv")[0] == FIT_COLUMNS
    assert read_csv(out / "saturation.csv")[0] == SATURATION_COLUMNS
    assert SERIES_COLUMNS == ["model", "N", "k", "t", "mean", "stderr", "p20", "p33", "p50", "p66", "p80"]
    for name in ("series_entanglement.csv", "series_porter_thomas.csv", "series_collision_probability.csv"):
        assert (out / name).exists()


def test_csv_round_trip_exact(exported):
    bundle, out = exported
    rows = read_csv(out / "series_pe.csv")[1:]
    mean = bundle.series[("pe", 2)].mean()
    assert np.array_equal(np.array([float(r[4]) for r in rows]), mean)


def test_json_agrees_with_csv(exported):
    _, out = exported
    payload = json.loads((out / "results.json").read_text())
    for table in ("series_se", "fits", "saturation"):
        rows = read_csv(out / f"{table}.csv")
        header, body = rows[0], rows[1:]
        assert len(body) == len(payload[table])
        for csv_row, js in zip(body, payload[table]):
            for col, text in zip(header, csv_row):
                val = js[col]
                if isinstance(val, bool):
                    assert text == str(val).lower()
                elif isinstance(val, float):
                    assert float(text) == val or (np.isnan(val) and text == "nan")
                else:
                    assert text == str(val)


def test_unwritable_output(exported, tmp_path):
    bundle, _ = exported
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ConfigError):
        export(bundle, blocker / "sub")


def test_analyze_in_memory_matches_written(exported):
    bundle, _ = exported
    again = analyze(bundle.config, bundle.series)
    assert again.fit_rows() == bundle.fit_rows()
