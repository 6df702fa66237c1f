"""Atomic structure, vapour thermodynamics, and velocity-class quadrature.

All quantities are SI; frequencies and decay rates are angular (rad/s).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import atomic_mass, c, epsilon_0, hbar, k as kB
from scipy.special import erf

from .errors import ArgumentError, DomainError

# Rb-87 mass (CODATA-style isotope mass in u)
MASS_RB87 = 86.909180527 * atomic_mass

# Population decay rates of the intermediate and upper level
GAMMA_GE = 2 * np.pi * 6.07e6
GAMMA_ED = 2 * np.pi * 0.66e6

# Transition wavelengths: signal on the D2 line, control on the upper leg
LAMBDA_S = 780.2e-9
LAMBDA_C = 775.8e-9

# Effective dipole moments, radiative values consistent with the decay rates
# above via Gamma = omega^3 d^2 / (3 pi eps0 hbar c^3).
DIPOLE_GE = 2.534961719772689e-29
DIPOLE_ED = 8.288286820386718e-30

_T_MIN = 250.0
_T_MAX = 500.0
_T_MELT = 312.46


@dataclass(frozen=True)
class LadderAtom:
    """Three-level ladder atom: ground g, intermediate e, upper d.

    The signal couples g-e, the control couples e-d.  Decay is the radiative
    cascade d -> e -> g with rates ``gamma_ed`` and ``gamma_ge``.
    """

    mass: float = MASS_RB87
    gamma_ge: float = GAMMA_GE
    gamma_ed: float = GAMMA_ED
    lambda_s: float = LAMBDA_S
    lambda_c: float = LAMBDA_C
    dipole_ge: float = DIPOLE_GE
    dipole_ed: float = DIPOLE_ED

    def __post_init__(self):
        for name in ("mass", "gamma_ge", "gamma_ed", "lambda_s", "lambda_c",
                     "dipole_ge", "dipole_ed"):
            if not getattr(self, name) > 0:
                raise ArgumentError(f"LadderAtom.{name} must be positive")
        # upper leg must sit above the intermediate level
        if not self.lambda_c < self.lambda_s:
            raise ArgumentError(
                "LadderAtom.lambda_c must be shorter than lambda_s")

    @property
    def k_s(self) -> float:
        """Signal wavevector magnitude (rad/m)."""
        return 2 * np.pi / self.lambda_s

    @property
    def k_c(self) -> float:
        """Control wavevector magnitude (rad/m)."""
        return 2 * np.pi / self.lambda_c


def rubidium87() -> LadderAtom:
    """Default Rb-87 ladder atom (5S1/2 -> 5P3/2 -> 5D5/2)."""
    return LadderAtom()


def vapour_pressure(temperature: float) -> float:
    """Rubidium vapour pressure in Pa.

    Uses the Alcock, Itkin and Horrigan correlation (Can. Metall. Q. 23, 309
    (1984)), solid branch below the melting point and liquid branch above.

    Parameters
    ----------
    temperature : float
        Cell temperature in kelvin, within [250, 500].
    """
    T = float(temperature)
    if not (_T_MIN <= T <= _T_MAX):
        raise DomainError(
            f"temperature {T} K outside supported range [{_T_MIN}, {_T_MAX}] K")
    if T < _T_MELT:
        p_atm = 10.0 ** (4.857 - 4215.0 / T)
    else:
        p_atm = 10.0 ** (8.316 - 4275.0 / T - 1.3102 * np.log10(T))
    return 101325.0 * p_atm


def number_density(temperature: float) -> float:
    """Rubidium number density (m^-3) from the vapour-pressure correlation.

    The cell is assumed isotopically enriched, so no natural-abundance factor
    is applied.
    """
    T = float(temperature)
    return vapour_pressure(T) / (kB * T)


@dataclass(frozen=True)
class VapourCell:
    """Warm vapour cell traversed by both beams.

    ``insertion_loss`` is the detuning-independent fractional power loss of a
    single pass (windows and other linear optics), applied on top of the
    atomic absorption.
    """

    length: float = 0.07
    temperature: float = 273.15 + 97.6
    insertion_loss: float = 0.045
    density_override: float | None = None

    def __post_init__(self):
        if not self.length > 0:
            raise ArgumentError("VapourCell.length must be positive")
        if not (0.0 <= self.insertion_loss < 1.0):
            raise ArgumentError("VapourCell.insertion_loss must lie in [0, 1)")
        if not (_T_MIN <= self.temperature <= _T_MAX):
            raise DomainError(
                f"temperature {self.temperature} K outside supported range "
                f"[{_T_MIN}, {_T_MAX}] K")
        # zero is allowed: an evacuated cell is the transparent limit
        if self.density_override is not None and not self.density_override >= 0:
            raise ArgumentError("VapourCell.density_override must be non-negative")

    @property
    def number_density(self) -> float:
        if self.density_override is not None:
            return self.density_override
        return number_density(self.temperature)


@dataclass(frozen=True)
class VelocityGrid:
    """Deterministic 1-D Maxwell-Boltzmann quadrature.

    ``weights`` are the probability masses of the cells around each node, so
    they sum to one and a weighted sum over the grid approximates a thermal
    average along the beam axis.
    """

    velocities: np.ndarray
    weights: np.ndarray
    temperature: float
    mass: float

    @property
    def n_points(self) -> int:
        return self.velocities.size

    @property
    def sigma_v(self) -> float:
        """1-D thermal velocity spread sqrt(kB T / m)."""
        return float(np.sqrt(kB * self.temperature / self.mass))


def velocity_grid(temperature: float, mass: float = MASS_RB87,
                  n_points: int = 201, span_sigmas: float = 5.0) -> VelocityGrid:
    """Build a symmetric fixed quadrature over the thermal velocity axis.

    Nodes are uniformly spaced over +-``span_sigmas`` thermal widths; the
    weight of each node is the Gaussian probability mass of its cell, with the
    outermost cells extended to infinity so the weights sum to one exactly.

    Parameters
    ----------
    n_points : int
        Odd number of nodes, at least 3, so v = 0 is always sampled.
    span_sigmas : float
        Half-width of the grid in units of sqrt(kB T / m), within [3, 8].
    """
    if n_points < 3 or n_points % 2 == 0:
        raise ArgumentError("n_points must be odd and >= 3")
    if not (3.0 <= span_sigmas <= 8.0):
        raise ArgumentError("span_sigmas must lie in [3, 8]")
    if not (_T_MIN <= temperature <= _T_MAX):
        raise DomainError(
            f"temperature {temperature} K outside supported range "
            f"[{_T_MIN}, {_T_MAX}] K")
    if not mass > 0:
        raise ArgumentError("mass must be positive")

    sigma = np.sqrt(kB * temperature / mass)
    v = np.linspace(-span_sigmas * sigma, span_sigmas * sigma, n_points)
    half = 0.5 * (v[1] - v[0])
    edges = np.concatenate(([-np.inf], v[:-1] + half, [np.inf]))
    cdf = 0.5 * (1.0 + erf(edges / (np.sqrt(2.0) * sigma)))
    w = np.diff(cdf)
    # enforce exact reflection symmetry of the quadrature
    v = 0.5 * (v - v[::-1])
    w = 0.5 * (w + w[::-1])
    v.setflags(write=False)
    w.setflags(write=False)
    return VelocityGrid(velocities=v, weights=w, temperature=float(temperature),
                        mass=float(mass))
