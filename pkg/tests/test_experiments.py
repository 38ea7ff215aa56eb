import math
import subprocess
import sys

import numpy as np
import pytest

from mmhybrid import ConfigError, FixtureMissing
from mmhybrid.experiments import (EnergyModel, Mode, energy_efficiency, load_scenario,
                                  parse_text, read_curve, run_scenario, sigma2_to_snr,
                                  snr_gap_db, snr_to_sigma2)
from mmhybrid.experiments import runner
from mmhybrid.experiments.cli import main
from mmhybrid.experiments.config import parse_grid

TINY = """
name = tiny
Nr = 4
Nt = 8
Nrf = 2
Ns = 2
modulation = qpsk
angles = sample
L = 2
mean_aod = pi/4
snr_db = -10:10:0
modes = statistical, no_precoding
n_channel = 6
n_noise = 6
max_iter = 10
restarts = 2
seed = 11
"""


def write(tmp_path, text, name="s.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


# --- configuration ----------------------------------------------------------

def test_parse_minimal():
    s = parse_text(TINY)
    assert (s.Nr, s.Nt, s.Nrf, s.Ns, s.L) == (4, 8, 2, 2, 2)
    assert s.snr_grid_db == (-10.0, 0.0)
    assert s.modes == (Mode.StatisticalCsi, Mode.NoPrecoding)
    assert s.mean_aod == pytest.approx(np.pi / 4)
    assert s.mean_aoa == "uniform"


def test_grid_forms():
    assert parse_grid("-35:5:-5") == (-35.0, -30.0, -25.0, -20.0, -15.0, -10.0, -5.0)
    assert parse_grid("1, 2.5,4") == (1.0, 2.5, 4.0)
    assert parse_grid("0:-5:-10") == (0.0, -5.0, -10.0)
    for bad in ("0:0:5", "0:1:-1", "1:2"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


@pytest.mark.parametrize("edit", [
    ("Ns = 2", "Ns = 3"),              # Ns > Nrf
    ("Nrf = 2", "Nrf = 9"),            # Nrf > Nt
    ("modulation = qpsk", "modulation = 8psk"),
    ("modes = statistical, no_precoding", "modes = magic"),
    ("L = 2", "L = 0"),
    ("n_noise = 6", "n_noise = 0"),
    ("Nr = 4", "Nr = four"),
    ("Nr = 4", ""),
    ("seed = 11", "just some words"),
    ("mean_aod = pi/4", "mean_aod = tau"),
])
def test_invalid_scenarios(edit):
    with pytest.raises(ConfigError):
        parse_text(TINY.replace(*edit))


def test_identity_digital_needs_square():
    with pytest.raises(ConfigError):
        parse_text(TINY.replace("Ns = 2", "Ns = 1") + "digital = identity\n")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "nope.cfg")


def test_fixture_sources():
    s = parse_text(TINY.replace("angles = sample", "angles = fixture:example2")
                   .replace("L = 2\n", ""))
    assert s.L == s.fixed_angles().L
    with pytest.raises(FixtureMissing):
        parse_text(TINY.replace("angles = sample", "angles = fixture:no_such"))
    with pytest.raises(ConfigError):
        parse_text(TINY.replace("angles = sample", "angles = fixture:example2"))  # L clash


def test_angle_files(tmp_path):
    (tmp_path / "aoa.txt").write_text("0.1\n0.2\n")
    (tmp_path / "aod.txt").write_text("0.3\n0.4\n")
    p = write(tmp_path, TINY.replace("angles = sample", "angles = files:aoa.txt,aod.txt"))
    ang = load_scenario(p).fixed_angles()
    np.testing.assert_allclose(ang.aoa, [0.1, 0.2])
    np.testing.assert_allclose(ang.aod, [0.3, 0.4])


def test_shipped_scenarios_parse():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "scenarios"
    files = sorted(root.rglob("*.cfg"))
    assert len(files) >= 5
    for f in files:
        load_scenario(f)


def test_snr_round_trip():
    snr = np.linspace(-40, 20, 13)
    np.testing.assert_allclose(sigma2_to_snr(snr_to_sigma2(snr, 2.0), 2.0), snr)
    assert snr_to_sigma2(0.0) == 1.0
    assert snr_to_sigma2(-10.0) == pytest.approx(10.0)


# --- energy -----------------------------------------------------------------

def test_energy_examples():
    sub = EnergyModel.subarray(64, 4)
    full = EnergyModel.fully_connected(64, 4)
    assert sub.total_power == pytest.approx(2.064)
    assert full.total_power == pytest.approx(2.256)
    assert full.total_power / sub.total_power == pytest.approx(1.093, abs=1e-3)
    assert energy_efficiency(4.128, sub) == pytest.approx(2.0)
    assert energy_efficiency(0.0, sub) == 0.0
    with pytest.raises(ValueError):
        energy_efficiency(-0.1, sub)
    with pytest.raises(ValueError):
        EnergyModel(0, 4)


# --- runner -----------------------------------------------------------------

def test_run_writes_curves_and_is_reproducible(tmp_path):
    p = write(tmp_path, TINY)
    a = run_scenario(p, tmp_path / "a")
    b = run_scenario(p, tmp_path / "b")
    assert a.ok
    names = sorted(f.name for f in (tmp_path / "a" / "tiny").iterdir())
    assert names == ["no_precoding_lba.csv", "no_precoding_mi.csv", "statistical_lb.csv", "statistical_lba.csv",
                     "statistical_mi.csv"]
    for n in names:
        ta = (tmp_path / "a" / "tiny" / n).read_text()
        assert ta == (tmp_path / "b" / "tiny" / n).read_text()
        assert ta.splitlines()[0] == "snr_db,value,stderr"
        rows = read_curve(tmp_path / "a" / "tiny" / n)
        assert rows.shape == (2, 3)
        np.testing.assert_array_equal(rows[:, 0], [-10.0, 0.0])
    mi = a.curves["statistical_mi"]
    assert np.all(mi.values >= 0) and np.all(mi.values <= 4 + 3 * mi.stderr)


def test_energy_curves(tmp_path):
    p = write(tmp_path, TINY + "energy = true\n")
    res = run_scenario(p, tmp_path)
    mi, ee = res.curves["statistical_mi"], res.curves["statistical_ee"]
    np.testing.assert_allclose(ee.values, mi.values / EnergyModel.subarray(8, 2).total_power)


def test_failure_marker(tmp_path, monkeypatch):
    orig = runner._Pipeline.run

    def flaky(self, mode, sigma2):
        if mode is Mode.StatisticalCsi and sigma2 <= 1.0:
            raise FloatingPointError("synthetic breakdown")
        return orig(self, mode, sigma2)

    monkeypatch.setattr(runner._Pipeline, "run", flaky)
    res = run_scenario(write(tmp_path, TINY), tmp_path)
    assert not res.ok and len(res.failures) == 1
    text = (tmp_path / "tiny" / "statistical_mi.csv").read_text().splitlines()
    assert text[2] == "0.0,nan,nan"
    assert text[3].startswith("# FAILED at snr_db=0.0: FloatingPointError")
    rows = read_curve(tmp_path / "tiny" / "statistical_mi.csv")
    assert math.isnan(rows[1, 1])
    # other modes still complete
    assert read_curve(tmp_path / "tiny" / "no_precoding_mi.csv").shape == (2, 3)


def test_snr_gap():
    snr = np.array([0.0, 5.0, 10.0])
    assert snr_gap_db(snr, [0, 1, 2], [1, 2, 3], 1.5) == pytest.approx(5.0)
    assert math.isnan(snr_gap_db(snr, [0, 0, 0], [1, 2, 3], 1.5))


# --- command line -----------------------------------------------------------

def test_cli_run_ok(tmp_path):
    p = write(tmp_path, TINY + "check = true\n")
    assert main(["-q", "--outdir", str(tmp_path / "out"), "run", str(p)]) == 0
    assert (tmp_path / "out" / "tiny" / "statistical_mi.csv").is_file()


def test_cli_config_error(tmp_path, capsys):
    p = write(tmp_path, TINY.replace("Ns = 2", "Ns = 5"))
    assert main(["-q", "run", str(p)]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["-q", "run", str(tmp_path / "missing.cfg")]) == 2
    assert main(["-q", "cdf", str(write(tmp_path, TINY, "t.cfg")), "--inits", "0"]) == 2


def test_cli_check_failure(tmp_path):
    p = write(tmp_path, TINY + "oracle_ratio = 1.5\n")
    assert main(["-q", "--outdir", str(tmp_path), "oracle", str(p)]) == 3
    assert (tmp_path / "tiny" / "oracle_summary.csv").is_file()


def test_cli_cdf_and_timing(tmp_path):
    p = write(tmp_path, TINY + "cdf_spread = 1.0\ntiming_mc_ratio = 1\ntiming_lb_ratio = 0\n")
    assert main(["-q", "--outdir", str(tmp_path), "cdf", str(p), "--inits", "3"]) == 0
    rows = read_curve(tmp_path / "tiny" / "cdf.csv")
    assert rows.shape == (3, 3) and np.all(np.diff(rows[:, 1]) >= 0)
    main(["-q", "--outdir", str(tmp_path), "timing", str(p)])
    for c in ("timing_mc", "timing_lb", "timing_lba"):
        assert read_curve(tmp_path / "tiny" / f"{c}.csv").shape == (2, 3)


def test_module_entry_point(tmp_path):
    p = write(tmp_path, TINY.replace("Ns = 2", "Ns = 5"))
    out = subprocess.run([sys.executable, "-m", "mmhybrid.experiments", "-q", "run", str(p)],
                         capture_output=True, text=True)
    assert out.returncode == 2
