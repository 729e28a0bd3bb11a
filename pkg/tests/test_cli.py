import csv
import json
from pathlib import Path

import numpy as np
import pytest

from fnlw import experiments
from fnlw.cli.config import ConfigError, resolve_run_config, resolve_sweep_config
from fnlw.cli.main import cmd_rates, cmd_replay, cmd_run, cmd_sweep, main
from fnlw.cli.persistence import (
    SchemaError,
    read_manifest,
    read_snapshots,
    read_summary,
    write_summary,
)
from fnlw.experiments import SummaryRow, fit_rate
from fnlw.initdata import build_initial_data
from fnlw.integrator import SimulationError

MINIMAL_RUN = {"alpha": 0.6, "beta": 1 / 3, "N": 8, "M": 64, "t_s": 1e-3, "snapshots": 4, "seed": 3}


def _write_config(path: Path, data: dict) -> Path:
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def _read_rates(path: Path) -> dict[str, dict]:
    return json.loads(path.read_text(encoding="utf-8"))


def test_run_writes_outputs(tmp_path: Path) -> None:
    config = _write_config(tmp_path / "run.json", MINIMAL_RUN)
    out = tmp_path / "out"
    assert cmd_run(config, out) == 0
    assert {p.name for p in out.iterdir()} == {"manifest.json", "timeseries.csv", "initial.bin"}

    manifest = read_manifest(out / "manifest.json")
    assert manifest.params == resolve_run_config(MINIMAL_RUN)
    assert manifest.s == pytest.approx(0.1 / 3)
    assert manifest.outputs == ["timeseries.csv", "initial.bin"]

    with (out / "timeseries.csv").open(newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 5
    assert float(rows[-1]["time"]) == pytest.approx(1e-3)

    (initial,) = read_snapshots(out / "initial.bin")
    expected = build_initial_data(manifest.params)
    np.testing.assert_array_equal(initial.u, expected.u0)
    np.testing.assert_array_equal(initial.v, expected.v0)


def test_rerun_is_byte_identical(tmp_path: Path) -> None:
    config = _write_config(tmp_path / "run.json", MINIMAL_RUN)
    assert cmd_run(config, tmp_path / "a") == 0
    assert cmd_run(config, tmp_path / "b") == 0
    for name in ("timeseries.csv", "manifest.json", "initial.bin"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_stores_snapshots(tmp_path: Path) -> None:
    config = _write_config(tmp_path / "run.json", MINIMAL_RUN)
    out = tmp_path / "out"
    assert cmd_run(config, out, store_snapshots=True) == 0
    states = read_snapshots(out / "snapshots.bin")
    assert len(states) == 5
    assert [state.t for state in states] == pytest.approx([0.0, 2.5e-4, 5e-4, 7.5e-4, 1e-3])
    np.testing.assert_array_equal(states[0].u, read_snapshots(out / "initial.bin")[0].u)


def test_invalid_alpha_is_reported_by_name(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _write_config(tmp_path / "run.json", {**MINIMAL_RUN, "alpha": 0.4})
    assert cmd_run(config, tmp_path / "out") == 2
    assert "alpha" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_unreadable_config_is_a_usage_error(tmp_path: Path) -> None:
    assert cmd_run(tmp_path / "missing.json", tmp_path / "out") == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    assert cmd_run(broken, tmp_path / "out") == 2


def test_preset_run_config() -> None:
    params = resolve_run_config({"preset": "pwp", "k": 5, "t_s": 1e-3})
    assert params.N == 32
    assert params.M == 2**9
    assert params.kind == "truncated"
    assert params.s == pytest.approx(0.1 / 3)

    pathological = resolve_run_config({"preset": "norm_inflation", "N": 16})
    assert pathological.kind == "pathological"

    with pytest.raises(ConfigError):
        resolve_run_config({"preset": "pwp", "N": 12})
    with pytest.raises(ConfigError):
        resolve_run_config({"preset": "pwp", "k": 5, "colour": "red"})


def test_sweep_config_accepts_preset_shorthand() -> None:
    config = resolve_sweep_config({"preset": "pwp"})
    assert config.regime == "pwp"
    with pytest.raises(ConfigError):
        resolve_sweep_config({"alpha": 0.6})


@pytest.fixture
def sweep_dir(tmp_path: Path) -> Path:
    config = _write_config(
        tmp_path / "sweep.json",
        {"preset": "pwp", "k_range": [2, 3, 4, 5], "t_s": 1e-3, "snapshots": 2},
    )
    out = tmp_path / "sweep"
    assert cmd_sweep(out, config_path=config, max_workers=2) == 0
    return out


def test_sweep_writes_summary_and_rates(sweep_dir: Path) -> None:
    rows = read_summary(sweep_dir / "summary.csv")
    assert [(row.N, row.kind) for row in rows] == [(N, "truncated") for N in (4, 8, 16, 32)]
    assert rows[0].delta is None
    assert all(row.delta is not None and row.delta > 0 for row in rows[1:])

    rates = _read_rates(sweep_dir / "rates.json")
    exponent, residual = fit_rate([row.N for row in rows[1:]], [row.delta for row in rows[1:]])
    assert rates["delta_truncated"]["exponent"] == pytest.approx(exponent, rel=1e-12)
    assert rates["delta_truncated"]["residual"] == pytest.approx(residual, rel=1e-9, abs=1e-15)

    for N in (4, 8, 16, 32):
        run_dir = sweep_dir / "runs" / f"N{N}_truncated"
        assert read_manifest(run_dir / "manifest.json").params.N == N
        assert (run_dir / "timeseries.csv").exists()


def test_rates_refit_matches_sweep(sweep_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
    capsys.readouterr()
    assert cmd_rates(sweep_dir / "summary.csv") == 0
    printed = capsys.readouterr().out
    rates = _read_rates(sweep_dir / "rates.json")
    assert f"delta_truncated: {rates['delta_truncated']['exponent']:.6f}" in printed


def test_rates_of_exact_power_law(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    summary = tmp_path / "summary.csv"
    write_summary(
        summary,
        [SummaryRow(N=N, kind="pathological", S_sup=0.5 * N**0.25, delta=None, e_inf=0.0) for N in (16, 32, 64, 128)],
    )
    assert cmd_rates(summary) == 0
    assert "S_sup_pathological: 0.250000" in capsys.readouterr().out


def test_rates_report_missing_column(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    summary = tmp_path / "summary.csv"
    summary.write_text("N,kind,S_sup,delta\n16,truncated,1.0,\n", encoding="utf-8")
    with pytest.raises(SchemaError, match="e_inf"):
        read_summary(summary)
    assert cmd_rates(summary) == 2
    assert "e_inf" in capsys.readouterr().err


def test_main_dispatches_run(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv("APPLICATIONINSIGHTS_CONNECTION_STRING", raising=False)
    config = _write_config(tmp_path / "run.json", MINIMAL_RUN)
    assert main(["run", "--config", str(config), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "manifest.json").exists()


def test_main_rejects_unknown_preset(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["sweep", "--preset", "turbulence", "--out", str(tmp_path)]) == 2
    assert "unknown preset" in capsys.readouterr().err


def test_failed_sweep_writes_partial_outputs(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
) -> None:
    execute = experiments._execute

    def flaky(params, store_states):
        if params.N == 16:
            raise SimulationError("non-finite coefficients", step=1, time=2.5e-4)
        return execute(params, store_states)

    monkeypatch.setattr(experiments, "_execute", flaky)
    config = _write_config(tmp_path / "sweep.json", {"preset": "pwp", "k_range": [2, 3, 4], "t_s": 1e-3, "snapshots": 2})
    out = tmp_path / "sweep"
    assert cmd_sweep(out, config_path=config) == 1
    assert "failed: N=16 kind=truncated" in capsys.readouterr().err
    assert [row.N for row in read_summary(out / "summary.csv")] == [4, 8]


def test_sweep_summary_is_deterministic(sweep_dir: Path, tmp_path: Path) -> None:
    config = _write_config(
        tmp_path / "again.json",
        {"preset": "pwp", "k_range": [2, 3, 4, 5], "t_s": 1e-3, "snapshots": 2},
    )
    again = tmp_path / "again"
    assert cmd_sweep(again, config_path=config, max_workers=1) == 0
    for name in ("summary.csv", "rates.json"):
        assert (again / name).read_bytes() == (sweep_dir / name).read_bytes()


def test_unresolved_bump_is_a_usage_error(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _write_config(
        tmp_path / "run.json",
        {"alpha": 0.6, "beta": 1 / 3, "N": 64, "M": 512, "kind": "pathological"},
    )
    assert cmd_run(config, tmp_path / "out") == 2
    err = capsys.readouterr().err
    assert err.startswith("kind: ")
    assert "under-resolved" in err
    assert not (tmp_path / "out").exists()


def test_replay_reproduces_the_run(tmp_path: Path) -> None:
    config = _write_config(tmp_path / "run.json", {**MINIMAL_RUN, "M": 128, "kind": "pathological"})
    assert cmd_run(config, tmp_path / "first") == 0
    assert cmd_replay(tmp_path / "first" / "manifest.json", tmp_path / "again") == 0
    for name in ("timeseries.csv", "manifest.json", "initial.bin"):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "again" / name).read_bytes()


def test_replay_of_a_sweep_run(sweep_dir: Path, tmp_path: Path) -> None:
    run_dir = sweep_dir / "runs" / "N16_truncated"
    assert main(["replay", "--manifest", str(run_dir / "manifest.json"), "--out", str(tmp_path / "again")]) == 0
    assert (tmp_path / "again" / "timeseries.csv").read_bytes() == (run_dir / "timeseries.csv").read_bytes()


def test_replay_rejects_tampered_manifest(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    config = _write_config(tmp_path / "run.json", MINIMAL_RUN)
    assert cmd_run(config, tmp_path / "first") == 0
    manifest = json.loads((tmp_path / "first" / "manifest.json").read_text(encoding="utf-8"))
    manifest["params"]["seed"] = 4
    tampered = _write_config(tmp_path / "tampered.json", manifest)
    assert cmd_replay(tampered, tmp_path / "again") == 2
    assert "checksum" in capsys.readouterr().err
    assert cmd_replay(tmp_path / "missing.json", tmp_path / "again") == 2
