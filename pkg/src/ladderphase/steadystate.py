"""Weak-probe steady-state susceptibility of the driven ladder and derived optics.

The signal is treated to first order; the control dresses the e-d transition.
For a single velocity class the susceptibility has the closed form

    chi(v) = i C / [g_ge - i(Ds - ks v) + (Oc^2/4) / (g_gd - i(Ds + Dc - (ks - kc) v))]

with C = N |d_ge|^2 / (eps0 hbar), g_ge = Gamma_ge / 2 and g_gd = Gamma_ed / 2.
The Doppler signs assume a counter-propagating control; a co-propagating
geometry flips the sign of kc in the two-photon term.

Sign conventions (fixed throughout the package): detunings are laser minus
atom, Im chi >= 0 is absorption, and Re chi > 0 below resonance (normal
dispersion).  Transmission T = exp(-k L Im chi) (1 - insertion_loss), field
amplitude t = exp(-k L Im chi / 2), phase phi = k L Re chi / 2, so
T = (1 - insertion_loss) t^2 always.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c, epsilon_0, hbar

from .atoms import LadderAtom, VapourCell, VelocityGrid
from .errors import ArgumentError, DomainError

GEOMETRIES = ("counter", "co")


@dataclass(frozen=True)
class FieldConfig:
    """Optical drive parameters, all angular (rad/s).

    ``delta_s`` and ``delta_c`` are signal and control detunings from the g-e
    and e-d transitions.  ``rabi_s`` is kept for the time-resolved solver; the
    steady-state susceptibility is independent of it by construction.
    """

    delta_s: float
    delta_c: float
    rabi_s: float
    rabi_c: float
    geometry: str = "counter"

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ArgumentError(
                f"geometry must be one of {GEOMETRIES}, got {self.geometry!r}")
        if self.rabi_s < 0 or self.rabi_c < 0:
            raise ArgumentError("Rabi frequencies must be non-negative")


@dataclass(frozen=True)
class OpticalResponse:
    """Complex susceptibility and the optics derived from it."""

    chi: complex
    transmission: float
    amplitude_t: float
    phase_shift: float

    @classmethod
    def from_susceptibility(cls, chi: complex, k: float, length: float,
                            insertion_loss: float) -> "OpticalResponse":
        alpha_l = k * length * np.imag(chi)
        t = float(np.exp(-alpha_l / 2.0))
        return cls(chi=complex(chi),
                   transmission=float((1.0 - insertion_loss) * t * t),
                   amplitude_t=t,
                   phase_shift=float(k * length * np.real(chi) / 2.0))


def rabi_from_power(power: float, waist: float, dipole: float) -> float:
    """Peak Rabi frequency (rad/s) of a Gaussian beam of given power.

    Peak intensity I = 2 P / (pi w^2), field E = sqrt(2 I / (c eps0)),
    Omega = d E / hbar.
    """
    if power < 0:
        raise ArgumentError("power must be non-negative")
    if not (waist > 0 and dipole > 0):
        raise ArgumentError("waist and dipole must be positive")
    intensity = 2.0 * power / (np.pi * waist**2)
    field = np.sqrt(2.0 * intensity / (c * epsilon_0))
    return float(dipole * field / hbar)


def _chi_grid(delta_s, v, fields: FieldConfig, atom: LadderAtom,
              density: float):
    """chi on an outer grid of detunings (rows) and velocities (columns)."""
    ks = atom.k_s
    kc = atom.k_c if fields.geometry == "counter" else -atom.k_c
    g1 = atom.gamma_ge / 2.0
    g2 = atom.gamma_ed / 2.0
    C = density * atom.dipole_ge**2 / (epsilon_0 * hbar)
    one = delta_s - ks * v
    two = delta_s + fields.delta_c - (ks - kc) * v
    den = g1 - 1j * one + (fields.rabi_c**2 / 4.0) / (g2 - 1j * two)
    return 1j * C / den


def susceptibility_at_velocity(fields: FieldConfig, atom: LadderAtom,
                               cell: VapourCell, v):
    """Single-velocity-class susceptibility; vectorized over ``v``."""
    v_arr = np.asarray(v, dtype=float)
    out = np.asarray(_chi_grid(fields.delta_s, v_arr, fields, atom,
                               cell.number_density))
    if v_arr.ndim == 0:
        return complex(out)
    return out


def susceptibility_doppler(fields: FieldConfig, atom: LadderAtom,
                           cell: VapourCell, grid: VelocityGrid) -> complex:
    """Thermal average of the susceptibility over the velocity quadrature."""
    if grid.n_points == 0:
        raise ArgumentError("velocity grid is empty")
    chi_v = susceptibility_at_velocity(fields, atom, cell, grid.velocities)
    return complex(np.sum(grid.weights * chi_v))


def response(fields: FieldConfig, atom: LadderAtom, cell: VapourCell,
             grid: VelocityGrid) -> OpticalResponse:
    """Doppler-averaged optical response of the cell for one drive setting."""
    if abs(grid.temperature - cell.temperature) > 1e-9 * cell.temperature:
        raise ArgumentError(
            "velocity grid temperature does not match the cell temperature")
    chi = susceptibility_doppler(fields, atom, cell, grid)
    return OpticalResponse.from_susceptibility(
        chi, atom.k_s, cell.length, cell.insertion_loss)


@dataclass(frozen=True)
class Spectrum:
    """Control-on/off transmission and differential phase versus detuning.

    ``t_on`` and ``t_off`` are intensity transmissions including insertion
    loss; ``dphi`` is phase(on) minus phase(off) in radians, unwrapped (not
    reduced to a principal value).
    """

    delta_s: np.ndarray
    t_on: np.ndarray
    t_off: np.ndarray
    dphi: np.ndarray

    def __len__(self) -> int:
        return self.delta_s.size


def spectrum_scan(delta_s, fields_on: FieldConfig, fields_off: FieldConfig,
                  atom: LadderAtom, cell: VapourCell,
                  grid: VelocityGrid) -> Spectrum:
    """Scan the signal detuning with and without the control field.

    ``fields_on`` and ``fields_off`` must differ only in control power, with
    ``fields_off.rabi_c == 0``.
    """
    if fields_off.rabi_c != 0.0:
        raise ArgumentError("fields_off must have rabi_c == 0")
    if (fields_on.delta_c != fields_off.delta_c
            or fields_on.geometry != fields_off.geometry):
        raise ArgumentError(
            "fields_on and fields_off must differ only in control power")
    delta_s = np.sort(np.asarray(delta_s, dtype=float).ravel())
    if delta_s.size == 0:
        raise ArgumentError("delta_s scan must be non-empty")

    density = cell.number_density
    ds = delta_s[:, None]
    vv = grid.velocities[None, :]
    chi_on = _chi_grid(ds, vv, fields_on, atom, density) @ grid.weights
    chi_off = _chi_grid(ds, vv, fields_off, atom, density) @ grid.weights

    kl = atom.k_s * cell.length
    keep = 1.0 - cell.insertion_loss
    t_on = keep * np.exp(-kl * chi_on.imag)
    t_off = keep * np.exp(-kl * chi_off.imag)
    dphi = kl * (chi_on.real - chi_off.real) / 2.0
    return Spectrum(delta_s=delta_s, t_on=t_on, t_off=t_off, dphi=dphi)


@dataclass(frozen=True)
class DetuningWindow:
    """Contiguous scan region usable as a modulation operating point."""

    start: float
    stop: float
    i_start: int
    i_stop: int
    dphi_min: float
    dphi_max: float
    t_on_min: float
    t_off_min: float

    @property
    def width(self) -> float:
        return self.stop - self.start


def find_roi(spectrum: Spectrum, t_min: float, phi_target: float,
             phi_flatness: float) -> list[DetuningWindow]:
    """Maximal contiguous windows meeting transmission, phase, and flatness.

    Every row of a window must satisfy t_on >= t_min, t_off >= t_min and
    |dphi| >= |phi_target|; additionally max(dphi) - min(dphi) across the
    window must not exceed ``phi_flatness``.  Windows are returned widest
    first; overlapping maximal windows are all reported.
    """
    if not (0.0 < t_min <= 1.0):
        raise ArgumentError("t_min must lie in (0, 1]")
    if phi_flatness < 0:
        raise ArgumentError("phi_flatness must be non-negative")
    ok = ((spectrum.t_on >= t_min) & (spectrum.t_off >= t_min)
          & (np.abs(spectrum.dphi) >= abs(phi_target)))
    n = len(spectrum)
    windows: list[DetuningWindow] = []
    prev_j = -1
    i = 0
    while i < n:
        if not ok[i]:
            i += 1
            continue
        j = i
        lo = hi = spectrum.dphi[i]
        while j + 1 < n and ok[j + 1]:
            nlo = min(lo, spectrum.dphi[j + 1])
            nhi = max(hi, spectrum.dphi[j + 1])
            if nhi - nlo > phi_flatness:
                break
            lo, hi = nlo, nhi
            j += 1
        if j > prev_j:
            sl = slice(i, j + 1)
            windows.append(DetuningWindow(
                start=float(spectrum.delta_s[i]),
                stop=float(spectrum.delta_s[j]),
                i_start=i, i_stop=j,
                dphi_min=float(lo), dphi_max=float(hi),
                t_on_min=float(spectrum.t_on[sl].min()),
                t_off_min=float(spectrum.t_off[sl].min())))
            prev_j = j
        i += 1
    windows.sort(key=lambda w: (-w.width, w.start))
    return windows


def fields_control_off(fields: FieldConfig) -> FieldConfig:
    """Copy of a drive setting with the control switched off."""
    return replace(fields, rabi_c=0.0)
