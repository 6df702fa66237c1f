"""TOML plan files.

Sections: ``[atom]`` (optional overrides), ``[cell]``, ``[fields]``,
``[interferometer]``, ``[plan]`` and ``[output]``.  Keys carry their unit in
the name (``power_w``, ``tau_ns``, ``delta_c_ghz``, ``kctau0_pi``) and are
converted to SI radians/seconds/metres exactly once, here.  Detunings are
ordinary frequencies in GHz and become angular frequencies; ``_pi`` phases
are multiples of pi.  Unknown tables or keys are rejected so a typo cannot
silently fall back to a default.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .atoms import LadderAtom, VapourCell, rubidium87
from .errors import ConfigError, LadderphaseError
from .interferometer import InterferometerModel
from .scan import ControlBeam, ExperimentPlan, PulsedSettings, SweepSettings

_GHZ = 2.0 * math.pi * 1e9
_MHZ = 2.0 * math.pi * 1e6

MODES = ("cw", "pulsed")
OUTPUT_FORMATS = ("csv", "bin")


def _float(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _int(x, where):
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{where}: expected an integer, got {x!r}")
    return x


def _str(x, where):
    if not isinstance(x, str):
        raise ConfigError(f"{where}: expected a string, got {x!r}")
    return x


def _float_list(x, where):
    if not isinstance(x, list) or not x:
        raise ConfigError(f"{where}: expected a non-empty list of numbers")
    return tuple(_float(v, where) for v in x)


_IDENT = lambda w: (lambda x: _float(x, w))
_INT = lambda w: (lambda x: _int(x, w))
_STR = lambda w: (lambda x: _str(x, w))
_SCALE = lambda s: (lambda w: (lambda x: s * _float(x, w)))

# converter factories keyed by (table, key); value = factory(where) -> fn
_SCHEMA = {
    "atom": {
        "gamma_ge_mhz": _SCALE(_MHZ),
        "gamma_ed_mhz": _SCALE(_MHZ),
        "lambda_s_nm": _SCALE(1e-9),
        "lambda_c_nm": _SCALE(1e-9),
    },
    "cell": {
        "length_cm": _SCALE(1e-2),
        "temperature_c": lambda w: (lambda x: _float(x, w) + 273.15),
        "insertion_loss": _IDENT,
        "density_per_m3": _IDENT,
    },
    "fields": {
        "power_w": _IDENT,
        "waist_um": _SCALE(1e-6),
        "delta_c_ghz": _SCALE(_GHZ),
        "geometry": _STR,
    },
    "interferometer": {
        "tau_ns": _SCALE(1e-9),
        "gain": _IDENT,
        "contrast": _IDENT,
        "kctau0_pi": _SCALE(math.pi),
    },
    "plan": {
        "mode": _STR,
        "dt_ps": _SCALE(1e-12),
        "n_samples": _INT,
        "delta_start_ghz": _SCALE(_GHZ),
        "delta_stop_ghz": _SCALE(_GHZ),
        "t_first_ns": _SCALE(1e-9),
        "pulse_period_ns": _SCALE(1e-9),
        "pulse_duration_ns": _SCALE(1e-9),
        "n_pulses": _INT,
        "levels": lambda w: (lambda x: _float_list(x, w)),
        "delta_s_ghz": _SCALE(_GHZ),
        "signal_duration_ns": _SCALE(1e-9),
        "target_transmission": _IDENT,
        "target_dphi_pi": _SCALE(math.pi),
        "noise_fraction": _IDENT,
        "seed": _INT,
        "n_velocity": _INT,
        "span_sigmas": _IDENT,
        "spectrum_start_ghz": _SCALE(_GHZ),
        "spectrum_stop_ghz": _SCALE(_GHZ),
        "spectrum_points": _INT,
        "roi_t_min": _IDENT,
        "roi_phi_target_pi": _SCALE(math.pi),
        "roi_phi_flatness_pi": _SCALE(math.pi),
    },
    "output": {
        "format": _STR,
        "directory": _STR,
    },
}

_REQUIRED_TABLES = ("cell", "fields", "interferometer")
_REQUIRED_KEYS = {
    "cell": ("length_cm", "temperature_c"),
    "fields": ("power_w", "waist_um", "delta_c_ghz"),
    "interferometer": ("tau_ns",),
}

_CW_KEYS = ("dt_ps", "n_samples", "delta_start_ghz", "delta_stop_ghz",
            "t_first_ns", "pulse_period_ns", "pulse_duration_ns", "n_pulses")
_PULSED_KEYS = ("delta_s_ghz", "dt_ps", "t_first_ns", "pulse_period_ns",
                "n_pulses", "signal_duration_ns")
_SPECTRUM_KEYS = ("spectrum_start_ghz", "spectrum_stop_ghz",
                  "spectrum_points", "roi_t_min", "roi_phi_target_pi")


@dataclass(frozen=True)
class SpectrumSettings:
    """Detuning grid and window thresholds for operating-point search."""

    delta_min: float
    delta_max: float
    n_points: int
    t_min: float
    phi_target: float
    phi_flatness: float


def _need(table: dict, key: str, path: str, section: str = "plan"):
    if key not in table:
        raise ConfigError(f"{path}: [{section}] is missing required key {key}")
    return table[key]


@dataclass(frozen=True)
class LoadedConfig:
    """One parsed, unit-converted configuration file."""

    path: str
    atom: LadderAtom
    cell: VapourCell
    beam: ControlBeam
    readout: InterferometerModel
    plan_table: dict
    output: dict

    def mode(self, override: str | None = None) -> str:
        mode = override if override is not None else self.plan_table.get("mode")
        if mode is None:
            raise ConfigError(
                f"{self.path}: [plan] has no mode key; pass --mode cw|pulsed")
        if mode not in MODES:
            raise ConfigError(f"{self.path}: mode must be one of {MODES}")
        return mode

    def experiment_plan(self, mode: str | None = None,
                        seed: int | None = None) -> ExperimentPlan:
        """Assemble the run plan for ``mode``, with an optional seed override.

        The mode-specific timing keys are required; the other mode's block is
        attached too when its keys happen to be complete.
        """
        mode = self.mode(mode)
        t = self.plan_table
        p = self.path
        want = _CW_KEYS if mode == "cw" else _PULSED_KEYS
        for key in want:
            _need(t, key, p)
        try:
            sweep = None
            if all(k in t for k in _CW_KEYS):
                sweep = SweepSettings(
                    dt=t["dt_ps"], n_samples=t["n_samples"],
                    delta_start=t["delta_start_ghz"],
                    delta_stop=t["delta_stop_ghz"], t_first=t["t_first_ns"],
                    pulse_period=t["pulse_period_ns"],
                    pulse_duration=t["pulse_duration_ns"],
                    n_pulses=t["n_pulses"], levels=t.get("levels"))
            pulsed = None
            if all(k in t for k in _PULSED_KEYS):
                if ("target_transmission" in t) != ("target_dphi_pi" in t):
                    raise ConfigError(
                        f"{p}: [plan] needs both targets or neither")
                pulsed = PulsedSettings(
                    delta_s=t["delta_s_ghz"], dt=t["dt_ps"],
                    t_first=t["t_first_ns"], pulse_period=t["pulse_period_ns"],
                    n_pulses=t["n_pulses"],
                    signal_duration=t["signal_duration_ns"],
                    target_transmission=t.get("target_transmission"),
                    target_dphi=t.get("target_dphi_pi"))
            return ExperimentPlan(
                cell=self.cell, beam=self.beam, readout=self.readout,
                sweep=sweep, pulsed=pulsed,
                noise_frac=t.get("noise_fraction", 0.0),
                seed=seed if seed is not None else t.get("seed"),
                n_velocity=t.get("n_velocity", 201),
                span_sigmas=t.get("span_sigmas", 5.0),
                atom=self.atom)
        except ConfigError:
            raise
        except LadderphaseError as exc:
            raise ConfigError(f"{p}: {exc}") from exc

    def spectrum_settings(self, delta_start: float | None = None,
                          delta_stop: float | None = None,
                          n_points: int | None = None) -> SpectrumSettings:
        """Spectrum grid and window thresholds, with optional grid overrides
        (already in rad/s)."""
        t = self.plan_table
        p = self.path
        lo = delta_start if delta_start is not None \
            else _need(t, "spectrum_start_ghz", p)
        hi = delta_stop if delta_stop is not None \
            else _need(t, "spectrum_stop_ghz", p)
        n = n_points if n_points is not None \
            else _need(t, "spectrum_points", p)
        settings = SpectrumSettings(
            delta_min=lo, delta_max=hi, n_points=n,
            t_min=_need(t, "roi_t_min", p),
            phi_target=_need(t, "roi_phi_target_pi", p),
            phi_flatness=t.get("roi_phi_flatness_pi", math.pi))
        if settings.n_points < 2:
            raise ConfigError(f"{p}: spectrum needs at least 2 points")
        if not settings.delta_max > settings.delta_min:
            raise ConfigError(
                f"{p}: spectrum_stop_ghz must exceed spectrum_start_ghz")
        return settings

    def output_format(self) -> str:
        fmt = self.output.get("format", "csv")
        if fmt not in OUTPUT_FORMATS:
            raise ConfigError(
                f"{self.path}: output format must be one of {OUTPUT_FORMATS}")
        return fmt


def _convert(raw: dict, path: str) -> dict:
    out = {}
    for table, body in raw.items():
        if table not in _SCHEMA:
            raise ConfigError(f"{path}: unknown table [{table}]")
        if not isinstance(body, dict):
            raise ConfigError(f"{path}: [{table}] must be a table")
        known = _SCHEMA[table]
        converted = {}
        for key, value in body.items():
            if key not in known:
                raise ConfigError(f"{path}: unknown key [{table}] {key}")
            converted[key] = known[key](f"[{table}] {key}")(value)
        for key in _REQUIRED_KEYS.get(table, ()):
            if key not in converted:
                raise ConfigError(
                    f"{path}: [{table}] is missing required key {key}")
        out[table] = converted
    for table in _REQUIRED_TABLES:
        if table not in out:
            raise ConfigError(f"{path}: missing required table [{table}]")
    return out


def load_config(path) -> LoadedConfig:
    """Parse, validate and convert one plan file."""
    p = Path(path)
    try:
        raw = tomllib.loads(p.read_text())
    except OSError as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{p}: TOML parse error: {exc}") from exc
    c = _convert(raw, str(p))
    try:
        atom = rubidium87()
        overrides = {
            "gamma_ge_mhz": "gamma_ge", "gamma_ed_mhz": "gamma_ed",
            "lambda_s_nm": "lambda_s", "lambda_c_nm": "lambda_c"}
        a = c.get("atom", {})
        if a:
            atom = dataclasses.replace(
                atom, **{overrides[k]: v for k, v in a.items()})
        cell = VapourCell(
            length=c["cell"]["length_cm"],
            temperature=c["cell"]["temperature_c"],
            insertion_loss=c["cell"].get("insertion_loss", 0.0),
            density_override=c["cell"].get("density_per_m3"))
        beam = ControlBeam(power=c["fields"]["power_w"],
                           waist=c["fields"]["waist_um"],
                           delta_c=c["fields"]["delta_c_ghz"],
                           geometry=c["fields"].get("geometry", "counter"))
        readout = InterferometerModel(
            tau=c["interferometer"]["tau_ns"],
            a=c["interferometer"].get("gain", 1.0),
            gamma=c["interferometer"].get("contrast", 1.0),
            kctau0=c["interferometer"].get("kctau0_pi", 0.0))
    except ConfigError:
        raise
    except LadderphaseError as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    return LoadedConfig(path=str(p), atom=atom, cell=cell, beam=beam,
                        readout=readout, plan_table=c.get("plan", {}),
                        output=c.get("output", {}))
