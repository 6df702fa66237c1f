"""Plan-file loading: unit conversion, validation, plan assembly."""

import math

import pytest

from ladderphase import ConfigError, load_config

GHZ = 2 * math.pi * 1e9

BASE = """\
[cell]
length_cm = 7.0
temperature_c = 97.6

[fields]
power_w = 1.0
waist_um = 300.0
delta_c_ghz = 1.6

[interferometer]
tau_ns = 5.0
"""


def _write(tmp_path, text, name="plan.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_golden_cw(repo_root):
    cfg = load_config(repo_root / "configs" / "cw_golden.toml")
    assert cfg.cell.length == pytest.approx(0.07, rel=1e-15)
    assert cfg.cell.temperature == pytest.approx(370.75, rel=1e-15)
    assert cfg.cell.insertion_loss == 0.045
    assert cfg.beam.power == 11.75
    assert cfg.beam.waist == pytest.approx(300e-6, rel=1e-15)
    assert cfg.beam.delta_c == pytest.approx(1.6 * GHZ, rel=1e-15)
    assert cfg.beam.geometry == "counter"
    assert cfg.readout.tau == pytest.approx(5e-9, rel=1e-15)
    assert cfg.mode() == "cw"
    assert cfg.output_format() == "csv"


def test_golden_cw_plan(repo_root):
    cfg = load_config(repo_root / "configs" / "cw_golden.toml")
    plan = cfg.experiment_plan()
    assert plan.sweep is not None
    assert plan.sweep.n_pulses == 20
    assert plan.sweep.dt == pytest.approx(250e-12, rel=1e-15)
    assert plan.sweep.delta_start == pytest.approx(-5.6 * GHZ, rel=1e-15)
    assert plan.seed == 7
    assert cfg.experiment_plan(seed=99).seed == 99


def test_load_golden_pulsed(repo_root):
    cfg = load_config(repo_root / "configs" / "pulsed_golden.toml")
    plan = cfg.experiment_plan()
    assert cfg.mode() == "pulsed"
    ps = plan.pulsed
    assert ps is not None
    assert ps.target_transmission == 0.84
    assert ps.target_dphi == pytest.approx(0.53 * math.pi, rel=1e-15)
    assert ps.delta_s == pytest.approx(-4.7 * GHZ, rel=1e-15)


def test_unknown_table(tmp_path):
    path = _write(tmp_path, BASE + "\n[typo]\nx = 1\n")
    with pytest.raises(ConfigError, match=r"typo"):
        load_config(path)


def test_unknown_key(tmp_path):
    path = _write(tmp_path, BASE.replace("length_cm", "length_m"))
    with pytest.raises(ConfigError, match=r"length_m"):
        load_config(path)


def test_missing_required_key(tmp_path):
    path = _write(tmp_path, BASE.replace("temperature_c = 97.6\n", ""))
    with pytest.raises(ConfigError, match=r"temperature_c"):
        load_config(path)


def test_missing_required_table(tmp_path):
    head, _, _ = BASE.partition("[interferometer]")
    path = _write(tmp_path, head)
    with pytest.raises(ConfigError, match=r"interferometer"):
        load_config(path)


def test_wrong_value_types(tmp_path):
    path = _write(tmp_path, BASE.replace("97.6", '"hot"'))
    with pytest.raises(ConfigError, match=r"temperature_c"):
        load_config(path)
    path = _write(tmp_path, BASE + "\n[plan]\nn_samples = 2.5\n", "b.toml")
    with pytest.raises(ConfigError, match=r"n_samples"):
        load_config(path)
    path = _write(tmp_path, BASE + "\n[plan]\nlevels = []\n", "c.toml")
    with pytest.raises(ConfigError, match=r"levels"):
        load_config(path)


def test_parse_failures(tmp_path):
    path = _write(tmp_path, "this is not toml [")
    with pytest.raises(ConfigError, match=r"parse"):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")


def test_mode_resolution(tmp_path):
    cfg = load_config(_write(tmp_path, BASE))
    with pytest.raises(ConfigError, match=r"--mode"):
        cfg.mode()
    assert cfg.mode("cw") == "cw"
    with pytest.raises(ConfigError):
        cfg.mode("sideways")


def test_plan_requires_mode_keys(tmp_path, repo_root):
    cfg = load_config(_write(tmp_path, BASE))
    with pytest.raises(ConfigError, match=r"dt_ps"):
        cfg.experiment_plan("cw")
    # a pulsed-only file cannot build a swept plan
    pulsed_cfg = load_config(repo_root / "configs" / "pulsed_golden.toml")
    with pytest.raises(ConfigError, match=r"n_samples"):
        pulsed_cfg.experiment_plan("cw")


def test_plan_targets_come_in_pairs(tmp_path):
    text = BASE + """
[plan]
mode = "pulsed"
delta_s_ghz = -4.7
dt_ps = 250
t_first_ns = 20.0
pulse_period_ns = 50.0
n_pulses = 4
signal_duration_ns = 2.0
target_transmission = 0.84
"""
    cfg = load_config(_write(tmp_path, text))
    with pytest.raises(ConfigError, match=r"both targets"):
        cfg.experiment_plan()


def test_atom_overrides(tmp_path):
    text = BASE + """
[atom]
gamma_ge_mhz = 6.0
lambda_s_nm = 780.2
"""
    cfg = load_config(_write(tmp_path, text))
    assert cfg.atom.gamma_ge == pytest.approx(2 * math.pi * 6e6, rel=1e-15)
    assert cfg.atom.lambda_s == pytest.approx(780.2e-9, rel=1e-15)


def test_density_override_plumbing(tmp_path):
    text = BASE.replace("temperature_c = 97.6",
                        "temperature_c = 97.6\ndensity_per_m3 = 5.0e18")
    cfg = load_config(_write(tmp_path, text))
    assert cfg.cell.density_override == 5.0e18
    assert cfg.cell.number_density == 5.0e18


def test_spectrum_settings_golden(repo_root):
    cfg = load_config(repo_root / "configs" / "spectrum_roi.toml")
    s = cfg.spectrum_settings()
    assert s.delta_min == pytest.approx(-4.8 * GHZ, rel=1e-15)
    assert s.delta_max == pytest.approx(-2.0 * GHZ, rel=1e-15)
    assert s.n_points == 561
    assert s.t_min == 0.87
    assert s.phi_target == pytest.approx(0.9 * math.pi, rel=1e-15)
    assert s.phi_flatness == pytest.approx(2.0 * math.pi, rel=1e-15)


def test_spectrum_settings_overrides_and_defaults(tmp_path, repo_root):
    cfg = load_config(repo_root / "configs" / "spectrum_roi.toml")
    s = cfg.spectrum_settings(delta_start=-1e9, delta_stop=1e9, n_points=11)
    assert (s.delta_min, s.delta_max, s.n_points) == (-1e9, 1e9, 11)
    text = BASE + """
[plan]
spectrum_start_ghz = -5.0
spectrum_stop_ghz = -2.0
spectrum_points = 31
roi_t_min = 0.9
roi_phi_target_pi = 0.9
"""
    lean = load_config(_write(tmp_path, text))
    assert lean.spectrum_settings().phi_flatness == math.pi


def test_spectrum_settings_validation(tmp_path, repo_root):
    cw = load_config(repo_root / "configs" / "cw_golden.toml")
    with pytest.raises(ConfigError, match=r"spectrum_start_ghz"):
        cw.spectrum_settings()
    roi = load_config(repo_root / "configs" / "spectrum_roi.toml")
    with pytest.raises(ConfigError, match=r"exceed"):
        roi.spectrum_settings(delta_start=1e9, delta_stop=-1e9)
    with pytest.raises(ConfigError, match=r"2 points"):
        roi.spectrum_settings(n_points=1)


def test_output_format(tmp_path):
    assert load_config(_write(tmp_path, BASE)).output_format() == "csv"
    text = BASE + "\n[output]\nformat = \"bin\"\n"
    assert load_config(_write(tmp_path, text, "b.toml")).output_format() \
        == "bin"
    text = BASE + "\n[output]\nformat = \"xml\"\n"
    cfg = load_config(_write(tmp_path, text, "c.toml"))
    with pytest.raises(ConfigError, match=r"format"):
        cfg.output_format()


def test_plan_errors_name_the_file(tmp_path):
    text = BASE + """
[plan]
mode = "cw"
dt_ps = 250
n_samples = 2000
delta_start_ghz = -5.6
delta_stop_ghz = -3.6
t_first_ns = 15.0
pulse_period_ns = 50.0
pulse_duration_ns = 60.0
n_pulses = 4
"""
    cfg = load_config(_write(tmp_path, text, "named.toml"))
    with pytest.raises(ConfigError, match=r"named\.toml"):
        cfg.experiment_plan()
