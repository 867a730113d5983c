import json
import math

import numpy as np
import pytest

from irsthz.cli import main
from irsthz.config import ExperimentConfig, dbm_to_watts, load_config, noise_power, parse_config_text
from irsthz.runner import AlgorithmOutcome, check_ordering, run_trial, sweep, trial_streams
from irsthz.serialize import emit, load_csv, load_json, to_csv, to_json

SMALL = ExperimentConfig(antennas=8, irs_side=6, n_ud=4, n_dd=4, n_ur=3, n_dr=3, trials=3)


def test_unit_conversions():
    assert dbm_to_watts(30) == pytest.approx(1.0)
    assert dbm_to_watts(0) == pytest.approx(1e-3)
    # -174 dBm/Hz over 10 GHz with a 10 dB noise figure
    assert noise_power(-174, 10e9, 10) == pytest.approx(3.981e-10, rel=1e-3)
    with pytest.raises(ValueError):
        noise_power(-174, 0, 10)


def test_default_config():
    cfg = ExperimentConfig()
    assert cfg.carrier_freq == 300e9 and cfg.bandwidth == 10e9
    assert cfg.power == pytest.approx(dbm_to_watts(23))
    assert cfg.n_elements == 10_000 and cfg.antennas == 64
    assert cfg.layout().n_uplink_irs == 4


def test_config_validation_and_overrides():
    with pytest.raises(ValueError):
        ExperimentConfig(antennas=0)
    with pytest.raises(ValueError):
        ExperimentConfig(algos=("gs", "bogus"))
    with pytest.raises(ValueError):
        ExperimentConfig().overridden(nonsense=1)
    cfg = ExperimentConfig().overridden(antennas="32", overhead="yes", algos="gs, es")
    assert cfg.antennas == 32 and cfg.overhead is True and cfg.algos == ("gs", "es")
    with pytest.raises(ValueError):
        ExperimentConfig().overridden(antennas="3.5")


def test_config_file(tmp_path):
    text = "# desk run\nantennas = 16\npower_dbm = 10   # low power\n\nseed = 7\n"
    cfg = parse_config_text(text)
    assert (cfg.antennas, cfg.power_dbm, cfg.seed) == (16, 10.0, 7)
    path = tmp_path / "run.cfg"
    path.write_text(text)
    assert load_config(path) == cfg
    with pytest.raises(ValueError, match="line 1"):
        parse_config_text("antennas 16")
    with pytest.raises(OSError, match="missing.cfg"):
        load_config(tmp_path / "missing.cfg")


def test_sweep_axes_map_onto_config():
    cfg = ExperimentConfig()
    assert cfg.with_axis("elements", 400).irs_side == 20
    assert cfg.with_axis("area", 1600).area_width == pytest.approx(40.0)
    assert cfg.with_axis("cee", 0.5).cee() == cfg.with_axis("cee", 0.5).cee()
    assert cfg.with_axis("cee", 0.5).sigma2_G == 0.5
    assert cfg.with_axis("irs", 5).n_dr == 5
    assert cfg.with_axis("time_slot", 3).mobility_slots == 3
    with pytest.raises(ValueError):
        cfg.with_axis("elements", 401)
    with pytest.raises(ValueError):
        cfg.with_axis("nonsense", 1)


def test_trial_streams_are_independent_and_reproducible():
    a, b = trial_streams(3), trial_streams(3)
    assert set(a) == {"topology", "mobility", "greedy", "random"}
    assert a["greedy"].random() == b["greedy"].random()
    assert trial_streams(3)["topology"].random() != trial_streams(3)["mobility"].random()


def test_run_trial_is_deterministic():
    a, b = run_trial(SMALL, 11), run_trial(SMALL, 11)
    assert to_json(a) == to_json(b)
    assert np.array_equal(a.rate_matrix, b.rate_matrix)
    assert to_json(run_trial(SMALL, 12)) != to_json(a)


def test_trial_report_contents():
    rep = run_trial(SMALL, 0)
    assert rep.ul_sinr.shape == (3, 4) and rep.dl_power.shape == (3, 4)
    assert np.array_equal(rep.rate_matrix, np.minimum(rep.ul_sums[:, None], rep.dl_sums[None, :]))
    assert all(rep.wf_converged)
    for tag in SMALL.algos:
        out = rep.algorithms[tag]
        assert len(out.pairs) == 3
        assert out.e2e_rate == pytest.approx((1 - out.tau / SMALL.coherence_slots) * out.rate)
    assert rep.algorithms["gs"].stable
    assert rep.algorithms["es"].evaluations == 6


def test_perfect_csi_never_loses():
    # uplink MMSE SINR is monotone in the error covariance; the downlink is
    # not (leakage-optimal beams are not sum-rate optimal), and at the noise
    # floor it can lose in the tenth digit, so this runs at desk scale
    desk = ExperimentConfig(antennas=16, irs_side=20)
    perfect = desk.overridden(sigma2_g=0.0, sigma2_G=0.0)
    for seed in range(10):
        a, b = run_trial(perfect, seed), run_trial(desk, seed)
        assert np.all(a.ul_sums >= b.ul_sums) and np.all(a.dl_sums >= b.dl_sums)
        for tag in desk.algos:
            assert a.rate(tag) >= b.rate(tag)


def test_deferred_acceptance_matches_exhaustive():
    for seed in range(10):
        rep = run_trial(SMALL, seed)
        assert rep.rate("gs") == pytest.approx(rep.rate("es"), rel=1e-12)


def test_ordering_check_raises():
    good = AlgorithmOutcome([], 1, 2.0, 2.0, True, 0, 0)
    bad = AlgorithmOutcome([], 1, 1.0, 1.0, True, 0, 0)
    check_ordering({"es": good, "gs": bad})
    with pytest.raises(RuntimeError, match="es"):
        check_ordering({"es": bad, "gs": good})


def test_sweep_validation():
    with pytest.raises(ValueError):
        sweep(SMALL, "power_dbm", [10, 10])
    with pytest.raises(ValueError):
        sweep(SMALL, "power_dbm", [10, 20, 15])
    with pytest.raises(ValueError):
        sweep(SMALL, "nonsense", [1])
    with pytest.raises(ValueError):
        sweep(SMALL, "power_dbm", [1], trials=0)


def test_empty_sweep_writes_header_only():
    table = sweep(SMALL, "power_dbm", [])
    assert to_csv(table) == "axis_value,algorithm,mean_rate,stderr,mean_tau,trials\n"


def test_sweep_statistics_and_round_trip(tmp_path):
    table = sweep(SMALL, "power_dbm", [10, 20], trials=3)
    assert len(table.rows) == 8
    row = table.row(10.0, "gs")
    x = table.samples[(10.0, "gs")]
    assert row.mean_rate == pytest.approx(x.mean())
    assert row.stderr == pytest.approx(x.std(ddof=1) / math.sqrt(3))
    assert np.all(table.means("es") >= table.means("random"))

    csv_path, json_path = tmp_path / "t.csv", tmp_path / "t.json"
    text = emit(table, "csv", csv_path)
    assert to_csv(load_csv(csv_path, "power_dbm")) == text
    emit(table, "json", json_path)
    assert to_json(load_json(json_path)) == json_path.read_text()


def test_descending_sweep_and_carrier_scaling():
    table = sweep(SMALL, "carrier_ghz", [300, 200], trials=1)
    assert table.values == [300.0, 200.0]
    rep = run_trial(SMALL.with_axis("carrier_ghz", 300), SMALL.seed)
    assert table.row(300.0, "es").mean_rate == pytest.approx(rep.rate("es") * SMALL.bandwidth)


def test_overhead_flag_changes_sweep_rate():
    plain = sweep(SMALL, "irs", [3], trials=2)
    charged = sweep(SMALL.overridden(overhead=True), "irs", [3], trials=2)
    for a in SMALL.algos:
        assert charged.row(3.0, a).mean_rate <= plain.row(3.0, a).mean_rate


def test_report_json_round_trip(tmp_path):
    rep = run_trial(SMALL, 5)
    path = tmp_path / "r.json"
    text = emit(rep, "json", path)
    d = json.loads(text)
    assert "wall_clock" not in d
    assert to_json(load_json(path)) == text
    with pytest.raises(TypeError):
        to_csv(rep)


def test_write_error_names_the_path(tmp_path):
    bad = tmp_path / "no" / "such" / "dir" / "x.json"
    with pytest.raises(OSError, match="x.json"):
        emit(run_trial(SMALL, 0), "json", bad)


# ----------------------------------------------------------------------- CLI

SMALL_ARGS = ["--set", "antennas=8", "--set", "irs_side=6", "--set", "n_ud=4", "--set", "n_dd=4",
              "--set", "n_ur=3", "--set", "n_dr=3"]


def test_cli_single_trial(capsys):
    assert main(SMALL_ARGS + ["--seed", "4"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["seed"] == 4
    assert set(d["algorithms"]) == {"gs", "es", "greedy", "random"}


def test_cli_sweep_csv(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code = main(SMALL_ARGS + ["--sweep", "power_dbm", "--values", "10,20", "--trials", "2",
                              "--algos", "gs,es", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "axis_value,algorithm,mean_rate,stderr,mean_tau,trials"
    assert [l.split(",")[:2] for l in lines[1:]] == [["10", "es"], ["10", "gs"], ["20", "es"], ["20", "gs"]]


def test_cli_sweep_json_to_stdout(capsys):
    assert main(SMALL_ARGS + ["--sweep", "irs", "--values", "2", "--trials", "1", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["axis"] == "irs"


def test_cli_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("antennas = 8\nirs_side = 6\nn_ud = 4\nn_dd = 4\nn_ur = 2\nn_dr = 2\n")
    assert main(["--config", str(cfg), "--algos", "gs"]) == 0
    assert set(json.loads(capsys.readouterr().out)["algorithms"]) == {"gs"}


@pytest.mark.parametrize("argv, code", [
    (["--sweep", "power_dbm"], 2),
    (["--values", "1,2"], 2),
    (["--format", "csv"], 2),
    (["--sweep", "bogus", "--values", "1"], 2),
    (["--set", "antennas"], 2),
    (["--algos", "gs,nope"], 1),
    (["--sweep", "power_dbm", "--values", "20,10,15"], 1),
    (["--config", "/nonexistent/file.cfg"], 1),
])
def test_cli_errors(argv, code, capsys):
    assert main(argv) == code
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    record = json.loads(err[0])
    assert set(record) == {"error", "message"}
