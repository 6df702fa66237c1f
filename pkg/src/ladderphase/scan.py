"""Virtual experiments: plan containers, trace generation, parameter sweeps.

A plan fixes the vapour cell, the control beam, the read-out constants and
the timing pattern.  The CW runner sweeps the signal detuning while the
control is chopped into windows, then synthesises both detector voltages
from the closed-form susceptibility.  The pulsed runner emits signal pulse
pairs at fixed detuning and produces a control-on and a control-off trace.
Every runner also returns the ground truth it injected, so recovery can be
checked to numerical precision on noiseless traces.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .analysis import _wrap, analyze_cw, analyze_pulsed
from .atoms import LadderAtom, VapourCell, rubidium87, velocity_grid
from .errors import ArgumentError, ConfigError
from .interferometer import (ControlWindow, DetectorTrace, DetuningRamp,
                             InterferometerModel, forward_pulsed,
                             synth_trace_cw)
from .steadystate import GEOMETRIES, FieldConfig, rabi_from_power, susceptibility_doppler


@dataclass(frozen=True)
class ControlBeam:
    """Control-field drive: optical power, beam waist, detuning, geometry."""

    power: float
    waist: float
    delta_c: float
    geometry: str = "counter"

    def __post_init__(self):
        if self.power < 0:
            raise ArgumentError("control power must be non-negative")
        if not self.waist > 0:
            raise ArgumentError("beam waist must be positive")
        if self.geometry not in GEOMETRIES:
            raise ArgumentError(f"geometry must be one of {GEOMETRIES}")


@dataclass(frozen=True)
class SweepSettings:
    """Timing of a swept-detuning acquisition with chopped control windows."""

    dt: float
    n_samples: int
    delta_start: float
    delta_stop: float
    t_first: float
    pulse_period: float
    pulse_duration: float
    n_pulses: int
    levels: tuple | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ArgumentError("sample period must be positive")
        if self.n_samples < 2:
            raise ArgumentError("need at least two samples")
        if self.n_pulses < 1:
            raise ArgumentError("need at least one control window")
        if not 0 < self.pulse_duration < self.pulse_period:
            raise ArgumentError("pulse duration must fit inside the period")
        if self.levels is not None and len(self.levels) != self.n_pulses:
            raise ArgumentError("levels must list one entry per window")


@dataclass(frozen=True)
class PulsedSettings:
    """Timing of a fixed-detuning pulsed acquisition.

    When the target transmission and phase are given they are injected
    directly (reference replica normalised to unity); otherwise both follow
    from the vapour response at ``delta_s`` with the plan's control beam.
    """

    delta_s: float
    dt: float
    t_first: float
    pulse_period: float
    n_pulses: int
    signal_duration: float
    target_transmission: float | None = None
    target_dphi: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ArgumentError("sample period must be positive")
        if self.n_pulses < 1:
            raise ArgumentError("need at least one pulse pair")
        if not self.signal_duration > 0:
            raise ArgumentError("signal pulse duration must be positive")
        if (self.target_transmission is None) != (self.target_dphi is None):
            raise ArgumentError("give both targets or neither")
        if self.target_transmission is not None and self.target_transmission < 0:
            raise ArgumentError("target transmission must be non-negative")


@dataclass(frozen=True)
class ExperimentPlan:
    cell: VapourCell
    beam: ControlBeam
    readout: InterferometerModel
    sweep: SweepSettings | None = None
    pulsed: PulsedSettings | None = None
    noise_frac: float = 0.0
    seed: int | None = None
    n_velocity: int = 201
    span_sigmas: float = 5.0
    atom: LadderAtom | None = None

    def __post_init__(self):
        if self.noise_frac < 0:
            raise ArgumentError("noise_frac must be non-negative")


def cell_amplitude_fn(plan: ExperimentPlan):
    """Build the physics adapter mapping (delta_s array, level) -> m.

    m = sqrt(1 - loss) exp(-kL Im chi / 2) exp(-i kL Re chi / 2) with chi the
    Doppler-averaged susceptibility at the control level's Rabi frequency.
    """
    atom = plan.atom if plan.atom is not None else rubidium87()
    grid = velocity_grid(plan.cell.temperature, atom.mass,
                         n_points=plan.n_velocity,
                         span_sigmas=plan.span_sigmas)
    rabi_c = rabi_from_power(plan.beam.power, plan.beam.waist, atom.dipole_ed)
    kl = atom.k_s * plan.cell.length
    root_loss = math.sqrt(1.0 - plan.cell.insertion_loss)

    def physics(delta_s, level):
        delta_s = np.atleast_1d(np.asarray(delta_s, dtype=float))
        rc = rabi_c * math.sqrt(level)
        chi = np.empty(delta_s.size, dtype=complex)
        for i, ds in enumerate(delta_s):
            fields = FieldConfig(delta_s=float(ds), delta_c=plan.beam.delta_c,
                                 rabi_s=0.0, rabi_c=rc,
                                 geometry=plan.beam.geometry)
            chi[i] = susceptibility_doppler(fields, atom, plan.cell, grid)
        return root_loss * np.exp(-0.5 * kl * (chi.imag + 1j * chi.real))

    return physics


@dataclass(frozen=True)
class WindowTruth:
    """Injected modulation for one control window."""

    delta_s: float
    transmission: float
    dphi_signed: float
    dphi: float
    theta: float


@dataclass(frozen=True)
class VirtualRun:
    trace: DetectorTrace
    windows: list
    truth: list
    result: object
    plan: ExperimentPlan

    def matched(self):
        """Pair each recovered window with its injected truth, in trace order."""
        idx = {}
        for i, w in enumerate(self.windows):
            idx[int(round((w.t_start - self.trace.t0) / self.trace.dt))] = i
        pairs = []
        for seg, est in zip(self.result.segmentation.usable, self.result.pulses):
            i = idx.get(seg.i_start)
            if i is not None:
                pairs.append((self.truth[i], est))
        return pairs


def _apply_noise(arrays, frac: float, seed):
    if frac <= 0:
        return arrays
    scale = frac * max(float(np.max(np.abs(a))) for a in arrays)
    rng = np.random.default_rng(seed)
    return [a + rng.normal(0.0, scale, a.size) for a in arrays]


def run_virtual_cw(plan: ExperimentPlan) -> VirtualRun:
    """Synthesise one swept trace and record the per-window ground truth."""
    if plan.sweep is None:
        raise ArgumentError("plan has no sweep settings")
    sw = plan.sweep
    t_total = sw.dt * (sw.n_samples - 1)
    ramp = DetuningRamp(delta_start=sw.delta_start, delta_stop=sw.delta_stop,
                        t_start=0.0, t_stop=t_total)
    levels = sw.levels if sw.levels is not None else (1.0,) * sw.n_pulses
    windows = [ControlWindow(t_start=sw.t_first + k * sw.pulse_period,
                             t_end=sw.t_first + k * sw.pulse_period
                             + sw.pulse_duration,
                             level=float(levels[k]))
               for k in range(sw.n_pulses)]
    physics = cell_amplitude_fn(plan)
    trace = synth_trace_cw(ramp, windows, physics, plan.readout,
                           t0=0.0, dt=sw.dt, n=sw.n_samples)
    truth = []
    for w in windows:
        ds = float(ramp.value(w.centre))
        m_off = complex(physics(np.array([ds]), 0.0)[0])
        m_on = complex(physics(np.array([ds]), w.level)[0])
        t_rel = abs(m_on) / abs(m_off)
        dphi_signed = _wrap(-(np.angle(m_on) - np.angle(m_off)))
        theta = _wrap(plan.readout.kctau0 + ds * plan.readout.tau)
        truth.append(WindowTruth(delta_s=ds, transmission=t_rel * t_rel,
                                 dphi_signed=dphi_signed,
                                 dphi=abs(dphi_signed), theta=theta))
    if plan.noise_frac > 0:
        v1, v2 = _apply_noise([trace.v1, trace.v2], plan.noise_frac, plan.seed)
        trace = DetectorTrace(t0=trace.t0, dt=trace.dt, v1=v1, v2=v2,
                              control_level=trace.control_level,
                              meta=trace.meta)
    result = analyze_cw(trace, tau=plan.readout.tau, gamma=plan.readout.gamma)
    return VirtualRun(trace=trace, windows=windows, truth=truth,
                      result=result, plan=plan)


@dataclass(frozen=True)
class PulsedVirtualRun:
    trace_on: DetectorTrace
    trace_off: DetectorTrace
    truth: WindowTruth
    result: object
    plan: ExperimentPlan


def run_virtual_pulsed(plan: ExperimentPlan) -> PulsedVirtualRun:
    """Synthesise a chopped pulsed pair: control on, then control off.

    The control pulse covers the late replica, so the early burst is the
    in-trace reference.  Both traces share the detuning and timing; the
    noise stream differs.
    """
    if plan.pulsed is None:
        raise ArgumentError("plan has no pulsed settings")
    ps = plan.pulsed
    tau = plan.readout.tau
    if ps.signal_duration >= tau:
        raise ArgumentError("signal pulse must be shorter than the delay")
    if ps.pulse_period < 2.0 * tau + 2.0 * ps.signal_duration:
        raise ArgumentError("pulse period too short for a burst triplet")
    n = int(round((ps.t_first + ps.n_pulses * ps.pulse_period) / ps.dt)) + 1
    times = ps.dt * np.arange(n)

    if ps.target_transmission is not None:
        t_e, p_e = 1.0, 0.0
        t_l = math.sqrt(ps.target_transmission)
        p_l = ps.target_dphi
        theta = _wrap(plan.readout.kctau0 + ps.delta_s * tau)
        t_rel = t_l
    else:
        physics = cell_amplitude_fn(plan)
        m_off = complex(physics(np.array([ps.delta_s]), 0.0)[0])
        m_on = complex(physics(np.array([ps.delta_s]), 1.0)[0])
        t_e, p_e = abs(m_off), -float(np.angle(m_off))
        t_l, p_l = abs(m_on), -float(np.angle(m_on))
        theta = _wrap(plan.readout.kctau0 + ps.delta_s * tau)
        t_rel = t_l / t_e
    dphi_signed = _wrap(p_l - p_e)
    truth = WindowTruth(delta_s=ps.delta_s, transmission=t_rel * t_rel,
                        dphi_signed=dphi_signed, dphi=abs(dphi_signed),
                        theta=theta)

    def build(on: bool):
        v1 = np.zeros(n)
        v2 = np.zeros(n)
        level = np.zeros(n)
        amps = (t_e, t_l) if on else (t_e, t_e)
        phases = (p_e, p_l) if on else (p_e, p_e)
        for k in range(ps.n_pulses):
            t_k = ps.t_first + k * ps.pulse_period
            env = ((times >= t_k) & (times < t_k + ps.signal_duration)
                   ).astype(float)
            w1, w2 = forward_pulsed(times, env, tau, amps, phases, theta,
                                    plan.readout)
            v1 += w1
            v2 += w2
            if on:
                gate = (times >= t_k + tau) \
                    & (times < t_k + tau + ps.signal_duration)
                level[gate] = 1.0
        return v1, v2, level

    v1_on, v2_on, lvl_on = build(True)
    v1_off, v2_off, lvl_off = build(False)
    meta = {"tau": tau, "a": plan.readout.a, "gamma": plan.readout.gamma,
            "kctau0": plan.readout.kctau0, "delta_s": ps.delta_s}
    if plan.noise_frac > 0:
        v1_on, v2_on, v1_off, v2_off = _apply_noise(
            [v1_on, v2_on, v1_off, v2_off], plan.noise_frac, plan.seed)
    trace_on = DetectorTrace(t0=0.0, dt=ps.dt, v1=v1_on, v2=v2_on,
                             control_level=lvl_on, meta=dict(meta))
    trace_off = DetectorTrace(t0=0.0, dt=ps.dt, v1=v1_off, v2=v2_off,
                              control_level=lvl_off, meta=dict(meta))
    result = analyze_pulsed(trace_on, trace_off, gamma=plan.readout.gamma)
    return PulsedVirtualRun(trace_on=trace_on, trace_off=trace_off,
                            truth=truth, result=result, plan=plan)


def _replace_path(plan: ExperimentPlan, path: str, value) -> ExperimentPlan:
    parts = path.split(".")
    try:
        if len(parts) == 1:
            return dataclasses.replace(plan, **{parts[0]: value})
        if len(parts) == 2:
            outer, inner = parts
            sub = getattr(plan, outer, None)
            if sub is None:
                raise ConfigError(f"plan has no {outer} settings")
            return dataclasses.replace(plan, **{outer: dataclasses.replace(
                sub, **{inner: value})})
    except TypeError as exc:
        raise ConfigError(f"unknown plan field {path!r}") from exc
    raise ConfigError(f"cannot address plan field {path!r}")


@dataclass(frozen=True)
class SweepRow:
    value: float
    transmission: float
    dphi: float
    transmission_truth: float
    dphi_truth: float
    n_windows: int


def sweep(plan: ExperimentPlan, axis: str, values) -> list:
    """Repeat the CW virtual experiment along one plan field.

    ``axis`` is a dotted plan path such as ``beam.power`` or
    ``cell.temperature``.  Rows keep the order of ``values``; each holds the
    window-averaged recovery and the matching injected truth.
    """
    rows = []
    for value in values:
        p = _replace_path(plan, axis, float(value))
        run = run_virtual_cw(p)
        truth = [t for t, _ in run.matched()]
        rows.append(SweepRow(
            value=float(value),
            transmission=run.result.mean_transmission(),
            dphi=run.result.mean_dphi(),
            transmission_truth=float(np.mean([t.transmission for t in truth])),
            dphi_truth=float(np.mean([t.dphi for t in truth])),
            n_windows=len(run.result.pulses)))
    return rows
