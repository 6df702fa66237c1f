"""Delay-line interferometer read-out: forward models and trace synthesis.

One arm samples the cell a delay ``tau`` later than the other.  With the
cell amplitude m(T) = t_amp(T) exp(-i phi(T)) reaching the combiner along
both paths, the two detector voltages are

    V1 = a (|s|^2 + |l|^2 + 2 gamma Re[s conj(l) exp(-i theta)])
    V2 = a (|s|^2 + |l|^2 - 2 gamma Re[s conj(l) exp(-i theta)])

with s(T) = m(T), l(T) = m(T - tau) and the interferometer phase
theta(T) = kctau0 + delta_s(T) tau.  A control window that covers the short
arm but not yet the delayed replica therefore beats with cos(dphi + theta);
the echo one delay later beats with cos(dphi - theta).

The synthesiser holds the detuning ramp frozen at the window-centre value in
a neighbourhood of every control window, so the pre-window samples are an
exact control-off reference for that window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError

_GRID_TOL = 1e-6      # alignment tolerance, fraction of a sample period


@dataclass(frozen=True)
class InterferometerModel:
    """Read-out constants: arm delay, gain, contrast and static phase."""

    tau: float
    a: float = 1.0
    gamma: float = 1.0
    kctau0: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ArgumentError("tau must be positive")
        if not self.a > 0:
            raise ArgumentError("detector gain a must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ArgumentError("interference contrast gamma must lie in [0, 1]")


def forward_cw(t_amp, dphi, theta, model: InterferometerModel):
    """Detector pair for a modulated arm against an unmodulated reference.

    ``t_amp`` is the amplitude transmission of the modulated arm relative to
    the reference, ``dphi`` the differential phase and ``theta`` the
    interferometer phase; all may be arrays.  Returns (v1, v2) with
    v1 + v2 = 2 a (1 + t_amp^2) regardless of the phases.
    """
    t = np.asarray(t_amp, dtype=float)
    if np.any(t < 0) or np.any(t > 1.0 + 1e-9):
        raise ArgumentError("t_amp must lie in [0, 1]")
    cross = 2.0 * model.gamma * t * np.cos(np.asarray(dphi) + np.asarray(theta))
    v1 = model.a * (1.0 + t * t + cross)
    v2 = model.a * (1.0 + t * t - cross)
    if v1.shape == ():
        return float(v1), float(v2)
    return v1, v2


def _shift(envelope: np.ndarray, times: np.ndarray, delay: float) -> np.ndarray:
    return np.interp(times - delay, times, envelope, left=0.0, right=0.0)


def forward_pulsed(times, envelope, separation, amps, phases, theta,
                   model: InterferometerModel):
    """Detector pair for a pulse pair read out through the delay line.

    ``envelope`` is the field envelope of one signal pulse sampled on
    ``times``; the source emits an early and a late replica separated by
    ``separation``, which must equal the read-out delay for the middle peak
    to interfere.  ``amps`` and ``phases`` are the (early, late) cell
    amplitude transmissions and phases.  Returns (v1, v2).
    """
    times = np.asarray(times, dtype=float)
    env = np.asarray(envelope, dtype=float)
    if env.shape != times.shape:
        raise ArgumentError("envelope must be sampled on times")
    if np.any(env < 0):
        raise ArgumentError("envelope must be non-negative")
    tau = model.tau
    if abs(separation - tau) > 1e-6 * tau:
        raise ArgumentError("pulse-pair separation must match the read-out delay")
    t_e, t_l = amps
    p_e, p_l = phases
    if t_e < 0 or t_l < 0:
        raise ArgumentError("amplitude transmissions must be non-negative")
    m_e = t_e * np.exp(-1j * p_e)
    m_l = t_l * np.exp(-1j * p_l)
    e0 = env
    e1 = _shift(env, times, tau)
    e2 = _shift(env, times, 2.0 * tau)
    s = m_e * e0 + m_l * e1
    l = m_e * e1 + m_l * e2
    cross = 2.0 * model.gamma * np.real(s * np.conj(l) * np.exp(-1j * theta))
    base = np.abs(s) ** 2 + np.abs(l) ** 2
    return model.a * (base + cross), model.a * (base - cross)


@dataclass(frozen=True)
class DetuningRamp:
    """Linear signal-detuning sweep; constant outside [t_start, t_stop]."""

    delta_start: float
    delta_stop: float
    t_start: float
    t_stop: float

    def __post_init__(self):
        if not self.t_stop > self.t_start:
            raise ArgumentError("ramp t_stop must exceed t_start")

    def value(self, t):
        frac = (np.asarray(t, dtype=float) - self.t_start) / (self.t_stop - self.t_start)
        frac = np.clip(frac, 0.0, 1.0)
        out = self.delta_start + frac * (self.delta_stop - self.delta_start)
        return out if out.shape else float(out)


@dataclass(frozen=True)
class ControlWindow:
    """One control-on interval; ``level`` is the relative control power."""

    t_start: float
    t_end: float
    level: float = 1.0

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ArgumentError("window t_end must exceed t_start")
        if not 0.0 <= self.level <= 1.0:
            raise ArgumentError("window level must lie in [0, 1]")

    @property
    def centre(self) -> float:
        return 0.5 * (self.t_start + self.t_end)


@dataclass(frozen=True)
class DetectorTrace:
    """Sampled two-detector record with the control level per sample."""

    t0: float
    dt: float
    v1: np.ndarray
    v2: np.ndarray
    control_level: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v1 = np.asarray(self.v1, dtype=float)
        v2 = np.asarray(self.v2, dtype=float)
        lvl = np.asarray(self.control_level, dtype=float)
        if not self.dt > 0:
            raise ArgumentError("sample period must be positive")
        if v1.ndim != 1 or v1.shape != v2.shape or v1.shape != lvl.shape:
            raise ArgumentError("v1, v2 and control_level must be equal-length 1-D")
        if v1.size < 2:
            raise ArgumentError("trace must hold at least two samples")
        object.__setattr__(self, "v1", v1)
        object.__setattr__(self, "v2", v2)
        object.__setattr__(self, "control_level", lvl)

    def __len__(self) -> int:
        return self.v1.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.v1.size)

    def level_segments(self) -> list[tuple[int, int, float]]:
        """Maximal runs of constant control level as (start, stop, level)."""
        lvl = self.control_level
        edges = np.flatnonzero(np.diff(lvl) != 0) + 1
        bounds = np.concatenate(([0], edges, [lvl.size]))
        return [(int(i), int(j), float(lvl[i]))
                for i, j in zip(bounds[:-1], bounds[1:])]


def _check_grid(value: float, t0: float, dt: float, what: str) -> None:
    steps = (value - t0) / dt
    if abs(steps - round(steps)) > _GRID_TOL:
        raise ArgumentError(f"{what} must align with the sample grid")


def synth_trace_cw(ramp: DetuningRamp, windows, physics,
                   model: InterferometerModel, t0: float, dt: float, n: int,
                   noise_rms: float = 0.0, seed: int | None = None,
                   freeze_lead: float | None = None,
                   freeze_tail: float | None = None) -> DetectorTrace:
    """Synthesise a swept-detuning trace with control windows.

    ``physics`` maps (delta_s array, control level) to the complex cell
    amplitude m = t_amp exp(-i phi), insertion loss included.  Windows must
    sit on the sample grid, hold at least ten samples, and be separated far
    enough that each one's frozen-detuning neighbourhood, echo included, is
    clear of its neighbours.
    """
    if n < 2:
        raise ArgumentError("trace needs at least two samples")
    if not dt > 0:
        raise ArgumentError("sample period must be positive")
    if noise_rms < 0:
        raise ArgumentError("noise_rms must be non-negative")
    tau = model.tau
    steps = tau / dt
    nshift = int(round(steps))
    if nshift < 1 or abs(steps - nshift) > _GRID_TOL:
        raise ArgumentError("tau must be a positive integer number of samples")
    # the reference window before t_start needs both arms frozen, and its
    # delayed arm reaches back a further tau
    lead = 2.0 * tau if freeze_lead is None else freeze_lead
    tail = tau if freeze_tail is None else freeze_tail
    if lead < 2.0 * tau or tail < 0:
        raise ArgumentError("freeze_lead must cover two delays")

    times = t0 + dt * np.arange(n)
    t_last = times[-1]
    windows = sorted(windows, key=lambda w: w.t_start)
    for k, w in enumerate(windows):
        _check_grid(w.t_start, t0, dt, "window start")
        _check_grid(w.t_end, t0, dt, "window end")
        if (w.t_end - w.t_start) / dt < 10 - _GRID_TOL:
            raise ArgumentError("control window must span at least ten samples")
        if w.t_start - lead < t0 or w.t_end + tau + tail > t_last:
            raise ArgumentError("window neighbourhood extends outside the trace")
        if k and w.t_start - lead < windows[k - 1].t_end + tau + tail:
            raise ArgumentError("window neighbourhoods overlap; widen the gaps")

    delta = ramp.value(times)
    level = np.zeros(n)
    for w in windows:
        hold = (times >= w.t_start - lead) & (times <= w.t_end + tau + tail)
        delta[hold] = ramp.value(w.centre)
        on = (times >= w.t_start - dt * _GRID_TOL) \
            & (times < w.t_end - dt * _GRID_TOL)
        level[on] = w.level

    m = np.asarray(physics(delta, 0.0), dtype=complex)
    for w in windows:
        on = level > 0
        sel = on & (times >= w.t_start - dt * _GRID_TOL) \
            & (times < w.t_end - dt * _GRID_TOL)
        if np.any(sel):
            m[sel] = complex(np.asarray(
                physics(delta[sel][:1], w.level), dtype=complex)[0])

    s = m
    l = np.empty_like(m)
    l[nshift:] = m[:-nshift]
    l[:nshift] = np.asarray(
        physics(ramp.value(times[:nshift] - tau), 0.0), dtype=complex)

    theta = model.kctau0 + delta * tau
    cross = 2.0 * model.gamma * np.real(s * np.conj(l) * np.exp(-1j * theta))
    base = np.abs(s) ** 2 + np.abs(l) ** 2
    v1 = model.a * (base + cross)
    v2 = model.a * (base - cross)
    if noise_rms > 0:
        rng = np.random.default_rng(seed)
        v1 = v1 + rng.normal(0.0, noise_rms, n)
        v2 = v2 + rng.normal(0.0, noise_rms, n)
    meta = {"tau": tau, "a": model.a, "gamma": model.gamma,
            "kctau0": model.kctau0, "freeze_lead": lead, "freeze_tail": tail,
            "delta_start": ramp.delta_start, "delta_stop": ramp.delta_stop,
            "t_ramp_start": ramp.t_start, "t_ramp_stop": ramp.t_stop}
    return DetectorTrace(t0=t0, dt=dt, v1=v1, v2=v2,
                         control_level=level, meta=meta)
