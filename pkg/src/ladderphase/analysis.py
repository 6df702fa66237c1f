"""Inverse read-out: recover transmission and phase from detector traces.

The forward model per sample pair is

    v1 = a (1 + t^2 + 2 gamma t cos psi)
    v2 = a (1 + t^2 - 2 gamma t cos psi)

with t the amplitude transmission of the modulated arm relative to the
unmodulated one and psi = dphi + theta.  The sum fixes t, the difference
fixes cos psi, and a damped Newton polishes the pair when the raw estimates
leave the physical region.  cos psi alone leaves the sign of dphi + theta
unresolved; combining each control window (cos(dphi + theta)) with its echo
one delay later (cos(dphi - theta)) separates the two, because the half sum
is cos dphi cos theta and the half difference is sin dphi sin theta.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import butter, find_peaks, sosfiltfilt

from .errors import (ArgumentError, CalibrationError, MissingReferenceError,
                     PhaseUnobservableError, SegmentationError, SolverError,
                     UnphysicalSumError)
from .interferometer import DetectorTrace, DetuningRamp

_NEWTON_TOL = 1e-10
_NEWTON_MAX = 50
_PARTIAL_LO = 0.1
_PARTIAL_HI = 0.9
_T_DARK = 1e-6
# acos turns an ulp of rounding in cos psi into sqrt-level phase error at the
# branch points, so a cosine this close to +-1 is pinned to the endpoint
_COS_SNAP = 16.0 * np.finfo(float).eps


def _wrap(x: float) -> float:
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def _finite_mean(values) -> float:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return math.nan
    return float(np.mean(finite))


@dataclass(frozen=True)
class Calibration:
    """Detector gain and interference contrast."""

    a: float
    gamma: float

    def __post_init__(self):
        if not self.a > 0:
            raise CalibrationError("gain a must be positive")
        if not 0.0 < self.gamma <= 1.0:
            raise CalibrationError("contrast gamma must lie in (0, 1]")


def _fringe_period(trace: DetectorTrace, tau: float) -> float | None:
    """Fringe period in seconds from the ramp metadata, if present."""
    meta = trace.meta
    keys = ("delta_start", "delta_stop", "t_ramp_start", "t_ramp_stop")
    if not all(k in meta for k in keys):
        return None
    span = abs(float(meta["delta_stop"]) - float(meta["delta_start"]))
    duration = float(meta["t_ramp_stop"]) - float(meta["t_ramp_start"])
    if span <= 0 or duration <= 0:
        return None
    return 2.0 * math.pi * duration / (span * tau)


def calibrate(trace: DetectorTrace, tau: float | None = None) -> Calibration:
    """Estimate gain and contrast from the control-off baseline.

    a is the mean of (v1 + v2)/4 over clean off samples; gamma compares the
    extremes, (max v1 - min v2)/(4 a).  Samples within one delay after a
    control window are excluded so echoes do not bias the extrema.  The off
    samples must cover at least one full fringe of the detuning ramp,
    otherwise the extrema are unreliable and a calibration error is raised.
    """
    tau = _resolve_tau(trace, tau)
    nshift = int(round(tau / trace.dt))
    off = trace.control_level == 0
    on_idx = np.flatnonzero(~off)
    for k in range(nshift + 1):
        tail = on_idx + k
        off[tail[tail < off.size]] = False
    if not np.any(off):
        raise CalibrationError("no clean control-off samples in trace")
    v1 = trace.v1[off]
    v2 = trace.v2[off]

    period = _fringe_period(trace, tau)
    if period is not None:
        if float(np.sum(off)) * trace.dt < period:
            raise CalibrationError(
                "control-off samples span less than one fringe period")
    else:
        # no ramp metadata: demand two fringe crests among the off samples
        prom = 0.25 * float(np.ptp(v1))
        crests, _ = find_fringe_extrema(v1, min_prominence=prom)
        if len(crests) < 2:
            raise CalibrationError(
                "control-off samples span less than one fringe period")

    a = float(np.mean(v1 + v2) / 4.0)
    if not a > 0:
        raise CalibrationError("off-baseline sum is not positive")
    gamma = float((np.max(v1) - np.min(v2)) / (4.0 * a))
    if not 0.0 < gamma <= 1.0 + 1e-6:
        raise CalibrationError(f"contrast estimate {gamma:.4f} outside (0, 1]")
    return Calibration(a=a, gamma=min(gamma, 1.0))


def interferometer_phase(v1_pre, v2_pre, cal: Calibration):
    """cos(kc tau) from control-off voltages at unit arm transmission.

    Accepts scalars or arrays.  Values beyond [-1, 1] are clamped; the
    excess magnitude is reported as a warning because it signals
    miscalibration rather than rounding.
    """
    raw = (np.asarray(v1_pre, dtype=float) - np.asarray(v2_pre, dtype=float)) \
        / (4.0 * cal.a * cal.gamma)
    excess = float(np.max(np.abs(raw))) - 1.0
    if excess > 1e-9:
        warnings.warn(
            f"cos(kc tau) magnitude exceeds 1 by {excess:.3e}; clamped",
            RuntimeWarning, stacklevel=2)
    out = np.clip(raw, -1.0, 1.0)
    return float(out) if out.shape == () else out


@dataclass(frozen=True)
class ModulationEstimate:
    """Inversion output for one voltage pair.

    ``dphi`` and ``dphi_alt`` are the two interferometer-phase branches,
    |wrap(psi -/+ theta)|; noiseless voltages satisfy both exactly, so the
    residual cannot tell them apart and the caller resolves the branch from
    the echo (see :func:`analyze_cw`).
    """

    t_amp: float
    transmission: float
    cos_psi: float
    psi: float
    dphi: float
    dphi_alt: float
    residual: float
    clipped: bool
    window: tuple[float, float] | None = None


def _residual(t: float, c: float, v1: float, v2: float, cal: Calibration) -> float:
    m1 = cal.a * (1.0 + t * t + 2.0 * cal.gamma * t * c)
    m2 = cal.a * (1.0 + t * t - 2.0 * cal.gamma * t * c)
    return max(abs(m1 - v1), abs(m2 - v2))


def _newton_polish(t: float, psi: float, v1: float, v2: float,
                   cal: Calibration) -> tuple[float, float]:
    """Damped Newton on (t, psi); the Jacobian determinant is
    8 a^2 gamma t^2 sin psi, so the step is skipped near sin psi = 0."""
    a, g = cal.a, cal.gamma
    for _ in range(_NEWTON_MAX):
        c, s = math.cos(psi), math.sin(psi)
        f1 = a * (1.0 + t * t + 2.0 * g * t * c) - v1
        f2 = a * (1.0 + t * t - 2.0 * g * t * c) - v2
        err = max(abs(f1), abs(f2))
        if err <= _NEWTON_TOL * a:
            break
        det = 8.0 * a * a * g * t * t * s
        if abs(det) < 1e-14 * a * a:
            break
        j11 = a * (2.0 * t + 2.0 * g * c)
        j12 = -2.0 * a * g * t * s
        j21 = a * (2.0 * t - 2.0 * g * c)
        j22 = 2.0 * a * g * t * s
        dt = (f1 * j22 - f2 * j12) / det
        dp = (f2 * j11 - f1 * j21) / det
        lam = 1.0
        while lam > 1.0 / 64.0:
            t_new = max(t - lam * dt, 0.0)
            p_new = min(max(psi - lam * dp, 0.0), math.pi)
            e_new = _residual(t_new, math.cos(p_new), v1, v2, cal)
            if e_new < err:
                t, psi = t_new, p_new
                break
            lam /= 2.0
        else:
            break
    return t, psi


def invert(v1: float, v2: float, cal: Calibration, cos_kctau: float,
           slack: float = 0.05,
           window: tuple[float, float] | None = None) -> ModulationEstimate:
    """Recover (t, psi) from one detector pair and derive both dphi branches.

    ``cos_kctau`` fixes the interferometer phase up to its sign; psi is
    returned on [0, pi] and the two branch candidates are reported as
    ``dphi`` (theta = +arccos) and ``dphi_alt`` (theta = -arccos).  Raises
    :class:`UnphysicalSumError` when the summed power falls more than
    ``slack`` below the reference level and
    :class:`PhaseUnobservableError` when the arm is too dark to carry phase.
    """
    a, g = cal.a, cal.gamma
    theta = math.acos(min(max(cos_kctau, -1.0), 1.0))
    S = (v1 + v2) / (2.0 * a) - 1.0
    if S < -slack:
        raise UnphysicalSumError(
            f"summed power {S:.4f} below the off baseline by more than {slack}")
    t = math.sqrt(max(S, 0.0))
    if t < _T_DARK:
        raise PhaseUnobservableError("modulated arm is opaque, phase undefined")
    raw = (v1 - v2) / (4.0 * a * g * t)
    clipped = abs(raw) > 1.0 + _COS_SNAP
    if clipped:
        c = 1.0 if raw > 0 else -1.0
        res = minimize_scalar(
            lambda x: (_residual(x, c, v1, v2, cal)) ** 2,
            bounds=(0.0, max(2.0, 2.0 * t)), method="bounded",
            options={"xatol": 1e-12})
        t = float(res.x)
        psi = 0.0 if c > 0 else math.pi
    elif abs(raw) >= 1.0 - _COS_SNAP:
        psi = 0.0 if raw > 0 else math.pi
    else:
        psi = math.acos(raw)
        t, psi = _newton_polish(t, psi, v1, v2, cal)
    residual = _residual(t, math.cos(psi), v1, v2, cal)
    if not clipped and residual > 1e-6 * a:
        raise SolverError(f"inversion residual {residual:.3e} did not converge")
    return ModulationEstimate(
        t_amp=t, transmission=t * t, cos_psi=math.cos(psi), psi=psi,
        dphi=abs(_wrap(psi - theta)), dphi_alt=abs(_wrap(psi + theta)),
        residual=residual, clipped=clipped, window=window)


@dataclass(frozen=True)
class PulseSegment:
    """Index windows attached to one control-on run (stop exclusive)."""

    i_start: int
    i_stop: int
    level: float
    pre: tuple[int, int]
    inwin: tuple[int, int]
    echo: tuple[int, int]
    usable: bool
    reason: str = ""


@dataclass(frozen=True)
class Segmentation:
    segments: list
    n_partial: int
    n_dropped: int

    @property
    def usable(self) -> list:
        return [s for s in self.segments if s.usable]


def _resolve_tau(trace: DetectorTrace, tau: float | None) -> float:
    if tau is None:
        tau = trace.meta.get("tau")
    if tau is None:
        raise ArgumentError("tau not given and absent from trace metadata")
    return float(tau)


def segment_cw(trace: DetectorTrace, tau: float | None = None,
               delta: int = 3) -> Segmentation:
    """Find control windows and their pre/in/echo sample ranges.

    ``delta`` samples are trimmed from every window edge.  Runs at partial
    control level (between 10% and 90%) are excluded and counted, as are
    runs whose reference or echo would collide with a neighbour or the trace
    edge.
    """
    tau = _resolve_tau(trace, tau)
    nshift = int(round(tau / trace.dt))
    if nshift < 1:
        raise ArgumentError("tau must be at least one sample period")
    if delta < 0:
        raise ArgumentError("delta must be non-negative")
    runs = [(i, j, lvl) for i, j, lvl in trace.level_segments() if lvl > 0]
    n = len(trace)
    segments = []
    n_partial = 0
    n_dropped = 0
    for k, (i0, i1, lvl) in enumerate(runs):
        pre = (i0 - nshift + delta, i0 - delta)
        inwin = (i0 + delta, min(i1, i0 + nshift) - delta)
        echo = (max(i1, i0 + nshift) + delta, i1 + nshift - delta)
        usable = True
        reason = ""
        if _PARTIAL_LO < lvl < _PARTIAL_HI:
            usable = False
            reason = "partial control level"
            n_partial += 1
        elif lvl < _PARTIAL_HI:
            usable = False
            reason = "weak control level"
            n_partial += 1
        elif pre[0] < 0 or echo[1] > n:
            usable = False
            reason = "window too close to the trace edge"
            n_dropped += 1
        elif min(pre[1] - pre[0], inwin[1] - inwin[0], echo[1] - echo[0]) < 1:
            usable = False
            reason = "window too short after edge trim"
            n_dropped += 1
        elif k > 0 and runs[k - 1][1] + nshift > pre[0]:
            usable = False
            reason = "reference overlaps the previous echo"
            n_dropped += 1
        elif k + 1 < len(runs) and runs[k + 1][0] < echo[1]:
            usable = False
            reason = "echo overlaps the next window"
            n_dropped += 1
        segments.append(PulseSegment(i0, i1, lvl, pre, inwin, echo,
                                     usable, reason))
    return Segmentation(segments=segments, n_partial=n_partial,
                        n_dropped=n_dropped)


@dataclass(frozen=True)
class PulseEstimate:
    """Per-window recovery with the branch already resolved.

    ``flags`` collects data-quality labels; a window whose inversion fails
    outright keeps its slot with NaN values and the failure flag, so one bad
    window cannot abort a whole scan.
    """

    index: int
    time: float
    a_local: float
    cos_theta: float
    theta: float
    transmission: float
    dphi: float
    dphi_candidates: tuple[float, float]
    cos_psi_in: float
    cos_psi_echo: float
    quadrature: bool
    residual: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class AnalysisResult:
    pulses: list
    segmentation: Segmentation

    def mean_transmission(self) -> float:
        return _finite_mean(p.transmission for p in self.pulses)

    def mean_dphi(self) -> float:
        return _finite_mean(p.dphi for p in self.pulses)


def _combine_branches(c_in: float, c_echo: float, cos_theta: float
                      ) -> tuple[float, bool]:
    """dphi on [0, pi] from cos(dphi + theta), cos(dphi - theta), cos theta."""
    A = 0.5 * (c_in + c_echo)      # cos dphi cos theta
    B = 0.5 * (c_echo - c_in)      # sin dphi sin theta
    ct = min(max(cos_theta, -1.0), 1.0)
    st = math.sqrt(max(0.0, 1.0 - ct * ct))
    quadrature = False
    if st <= 1e-9:
        v = A / ct
        u = math.sqrt(max(0.0, 1.0 - min(v * v, 1.0)))
    elif abs(ct) <= 1e-9:
        u = abs(B) / st
        v = math.sqrt(max(0.0, 1.0 - min(u * u, 1.0)))
        quadrature = True
    else:
        v = A / ct
        u = abs(B) / st
    return math.atan2(u, v), quadrature


def analyze_cw_pulse(trace: DetectorTrace, seg: PulseSegment, gamma: float,
                     index: int = 0) -> PulseEstimate:
    """Invert one control window against its local reference and echo."""
    v1, v2 = trace.v1, trace.v2

    def means(win):
        lo, hi = win
        return float(np.mean(v1[lo:hi])), float(np.mean(v2[lo:hi]))

    p1, p2 = means(seg.pre)
    a_local = (p1 + p2) / 4.0
    if not a_local > 0:
        raise CalibrationError("reference window has non-positive power")
    cal = Calibration(a=a_local, gamma=gamma)
    flags = []
    cos_theta_raw = (p1 - p2) / (4.0 * gamma * a_local)
    if abs(cos_theta_raw) > 1.0 + 1e-9:
        flags.append("cos_theta_clipped")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        cos_theta = interferometer_phase(p1, p2, cal)
    theta = math.acos(cos_theta)

    times = (trace.t0 + trace.dt * seg.i_start,
             trace.t0 + trace.dt * seg.i_stop)
    inv_in = invert(*means(seg.inwin), cal, cos_theta, window=times)
    inv_echo = invert(*means(seg.echo), cal, cos_theta, window=times)
    if inv_in.clipped or inv_echo.clipped:
        flags.append("cos_psi_clipped")
    dphi, quadrature = _combine_branches(inv_in.cos_psi, inv_echo.cos_psi,
                                         cos_theta)
    t_mid = 0.5 * (seg.i_start + seg.i_stop) * trace.dt + trace.t0
    return PulseEstimate(
        index=index, time=t_mid, a_local=a_local, cos_theta=cos_theta,
        theta=theta, transmission=inv_in.transmission, dphi=dphi,
        dphi_candidates=(inv_in.dphi, inv_in.dphi_alt),
        cos_psi_in=inv_in.cos_psi, cos_psi_echo=inv_echo.cos_psi,
        quadrature=quadrature,
        residual=max(inv_in.residual, inv_echo.residual),
        flags=tuple(flags))


_FAIL_FLAGS = {
    UnphysicalSumError: "unphysical_sum",
    PhaseUnobservableError: "phase_unobservable",
    SolverError: "no_convergence",
    CalibrationError: "bad_reference",
}


def _failed_estimate(trace: DetectorTrace, seg: PulseSegment, index: int,
                     exc: Exception) -> PulseEstimate:
    nan = math.nan
    t_mid = 0.5 * (seg.i_start + seg.i_stop) * trace.dt + trace.t0
    return PulseEstimate(
        index=index, time=t_mid, a_local=nan, cos_theta=nan, theta=nan,
        transmission=nan, dphi=nan, dphi_candidates=(nan, nan),
        cos_psi_in=nan, cos_psi_echo=nan, quadrature=False, residual=nan,
        flags=(_FAIL_FLAGS[type(exc)],))


def analyze_cw(trace: DetectorTrace, gamma: float | None = None,
               tau: float | None = None, delta: int = 3) -> AnalysisResult:
    """Recover (transmission, dphi) for every usable control window.

    The contrast cannot be estimated from a swept trace itself, so it must
    be supplied or present in the trace metadata.  Windows whose inversion
    fails are kept with NaN values and a failure flag.
    """
    if gamma is None:
        gamma = trace.meta.get("gamma")
    if gamma is None:
        raise CalibrationError("contrast gamma must be supplied or in metadata")
    segmentation = segment_cw(trace, tau=tau, delta=delta)
    if not segmentation.usable:
        raise SegmentationError("no usable control windows in trace")
    pulses = []
    for k, seg in enumerate(segmentation.usable):
        try:
            pulses.append(analyze_cw_pulse(trace, seg, float(gamma), index=k))
        except tuple(_FAIL_FLAGS) as exc:
            pulses.append(_failed_estimate(trace, seg, k, exc))
    return AnalysisResult(pulses=pulses, segmentation=segmentation)


def _burst_runs(y: np.ndarray, threshold: float, merge_gap: int,
                pad: int) -> list[tuple[int, int]]:
    above = y > threshold
    if not np.any(above):
        return []
    idx = np.flatnonzero(above)
    runs = []
    lo = idx[0]
    prev = idx[0]
    for i in idx[1:]:
        if i - prev > merge_gap:
            runs.append((lo, prev + 1))
            lo = i
        prev = i
    runs.append((lo, prev + 1))
    return [(max(0, a - pad), min(y.size, b + pad)) for a, b in runs]


@dataclass(frozen=True)
class PulsedPulse:
    index: int
    transmission: float
    transmission_late: float
    dphi: float
    dphi_candidates: tuple[float, float]
    cos_psi: float
    cos_theta: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class PulsedResult:
    pulses: list
    transmission: float
    dphi: float
    cos_theta: float
    flags: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.pulses)


def analyze_pulsed(trace_on: DetectorTrace,
                   trace_off: DetectorTrace | None = None,
                   gamma: float | None = None,
                   threshold_frac: float = 0.2) -> PulsedResult:
    """Recover (transmission, dphi) from a pulsed pair of traces.

    Each signal pulse pair produces three detector bursts: the early one
    rides only the reference replica, the late one only the modulated
    replica, and the middle one carries the interference.  The control-off
    trace supplies the per-triplet normalisation and cos theta; the
    control-on trace is read against its own early burst so slow drifts
    cancel.  Burst triplet counts must match between the two traces.
    """
    if trace_off is None:
        raise MissingReferenceError(
            "pulsed analysis needs a control-off reference trace")
    if gamma is None:
        gamma = trace_on.meta.get("gamma", trace_off.meta.get("gamma"))
    if gamma is None:
        raise CalibrationError("contrast gamma must be supplied or in metadata")
    gamma = float(gamma)
    if abs(trace_on.dt - trace_off.dt) > 1e-12 * trace_on.dt:
        raise ArgumentError("traces must share one sample period")

    def triplets(trace):
        y = trace.v1 + trace.v2
        thr = threshold_frac * float(np.max(y))
        if thr <= 0:
            raise SegmentationError("trace carries no pulses")
        runs = _burst_runs(y, thr, merge_gap=3, pad=2)
        if len(runs) == 0 or len(runs) % 3 != 0:
            raise SegmentationError(
                f"expected burst triplets, found {len(runs)} bursts")
        out = []
        for k in range(0, len(runs), 3):
            tri = []
            for lo, hi in runs[k:k + 3]:
                i1 = float(np.sum(trace.v1[lo:hi])) * trace.dt
                i2 = float(np.sum(trace.v2[lo:hi])) * trace.dt
                tri.append((i1, i2))
            out.append(tri)
        return out

    tri_on = triplets(trace_on)
    tri_off = triplets(trace_off)
    if len(tri_on) != len(tri_off):
        raise SegmentationError(
            f"triplet count mismatch: {len(tri_on)} on vs {len(tri_off)} off")

    def recover(j_on, j_off, on_mid, off_mid):
        if not (j_off > 0 and j_on > 0):
            raise SegmentationError("early burst carries no power")
        cos_theta = min(max(
            (off_mid[0] - off_mid[1]) / (4.0 * gamma * j_off), -1.0), 1.0)
        theta = math.acos(cos_theta)
        S = (on_mid[0] + on_mid[1]) / (2.0 * j_on) - 1.0
        if S < -0.05:
            raise UnphysicalSumError(
                "middle burst sums below the early reference")
        t = math.sqrt(max(S, 0.0))
        if t < _T_DARK:
            raise PhaseUnobservableError("modulated replica is opaque")
        cos_psi = min(max(
            (on_mid[0] - on_mid[1]) / (4.0 * gamma * j_on * t), -1.0), 1.0)
        psi = math.acos(cos_psi)
        cand = (abs(_wrap(psi - theta)), abs(_wrap(psi + theta)))
        return t, cos_psi, cos_theta, cand

    nan = math.nan
    pulses = []
    for k, (on, off) in enumerate(zip(tri_on, tri_off)):
        j_off = 0.5 * (off[0][0] + off[0][1])
        j_on = 0.5 * (on[0][0] + on[0][1])
        try:
            t, cos_psi, cos_theta, cand = recover(j_on, j_off, on[1], off[1])
            t_late = (on[2][0] + on[2][1]) / (2.0 * j_on)
            pulses.append(PulsedPulse(
                index=k, transmission=t * t, transmission_late=t_late,
                dphi=cand[0], dphi_candidates=cand, cos_psi=cos_psi,
                cos_theta=cos_theta))
        except tuple(_FAIL_FLAGS) as exc:
            pulses.append(PulsedPulse(
                index=k, transmission=nan, transmission_late=nan, dphi=nan,
                dphi_candidates=(nan, nan), cos_psi=nan, cos_theta=nan,
                flags=(_FAIL_FLAGS[type(exc)],)))

    # acos is sqrt-sensitive to noise where cos theta sits at +-1, so the
    # summary pools the burst integrals across pulses before inverting
    j_on_pool = float(np.mean([0.5 * (on[0][0] + on[0][1]) for on in tri_on]))
    j_off_pool = float(np.mean([0.5 * (off[0][0] + off[0][1])
                                for off in tri_off]))
    on_mid = (float(np.mean([on[1][0] for on in tri_on])),
              float(np.mean([on[1][1] for on in tri_on])))
    off_mid = (float(np.mean([off[1][0] for off in tri_off])),
               float(np.mean([off[1][1] for off in tri_off])))
    try:
        t, _, cos_theta, cand = recover(j_on_pool, j_off_pool, on_mid, off_mid)
        return PulsedResult(pulses=pulses, transmission=t * t, dphi=cand[0],
                            cos_theta=cos_theta)
    except tuple(_FAIL_FLAGS) as exc:
        return PulsedResult(pulses=pulses, transmission=nan, dphi=nan,
                            cos_theta=nan, flags=(_FAIL_FLAGS[type(exc)],))


def find_fringe_extrema(values, min_prominence: float = 0.0
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Indices of fringe maxima and minima, plateau-safe.

    Flat-topped fringes (frozen-ramp neighbourhoods, clipping) defeat naive
    neighbour comparison, so peaks are located with an explicit plateau
    handler and reported at the plateau centre; ties break toward the
    earlier index.  ``min_prominence`` discards noise wiggles.
    """
    y = np.asarray(values, dtype=float)
    prom = min_prominence if min_prominence > 0 else None

    def centres(x):
        peaks, props = find_peaks(x, plateau_size=(1, None), prominence=prom)
        left = props["left_edges"]
        right = props["right_edges"]
        return ((left + right) // 2).astype(int)

    return centres(y), centres(-y)


def locate_absorption_reference(trace: DetectorTrace, ramp: DetuningRamp,
                                tau: float | None = None) -> tuple[int, float]:
    """Anchor the detuning axis on the absorption minimum of the sum signal.

    The fringe at the delay-line frequency is notched out of v1 + v2 before
    taking the minimum, so residual port imbalance cannot pull the anchor
    onto a fringe trough.  Returns (sample index, detuning there).
    """
    tau = _resolve_tau(trace, tau)
    y = trace.v1 + trace.v2
    rate = abs(ramp.delta_stop - ramp.delta_start) / (ramp.t_stop - ramp.t_start)
    f_fringe = rate * tau / (2.0 * math.pi)
    nyquist = 0.5 / trace.dt
    if 0 < f_fringe < 0.7 * nyquist:
        lo = max(0.5 * f_fringe, 1e-3 * nyquist) / nyquist
        hi = min(1.5 * f_fringe, 0.95 * nyquist) / nyquist
        sos = butter(4, [lo, hi], btype="bandstop", output="sos")
        y = sosfiltfilt(sos, y)
    i = int(np.argmin(y))
    return i, float(ramp.value(trace.t0 + i * trace.dt))
