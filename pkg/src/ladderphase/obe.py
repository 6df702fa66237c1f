"""Time-resolved optical Bloch equations for the three-level ladder.

Density matrices use the basis order (g, e, d).  The rotating-frame
Hamiltonian is

    H / hbar = [[0,       Os/2,            0      ],
               [Os/2,     Ds_eff,          Oc/2   ],
               [0,        Oc/2,   Ds_eff + Dc_eff ]]

with the diagonal sign fixed so that the weak-probe steady state reproduces
the closed-form susceptibility of :mod:`ladderphase.steadystate`, i.e.
rho_ge = i (Os/2) / (g_ge - i Ds) in the two-level limit.  Dissipation is the
radiative cascade d -> e (rate Gamma_ed) and e -> g (rate Gamma_ge).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import epsilon_0, hbar
from scipy.integrate import solve_ivp

from .atoms import LadderAtom, VapourCell, VelocityGrid
from .errors import ArgumentError, IntegrationFailure, SolverError
from .steadystate import FieldConfig, OpticalResponse

_TOL_MIN = 1e-12
_TOL_MAX = 1e-4

PULSE_KINDS = ("square", "gaussian", "table")


@dataclass(frozen=True)
class PulseShape:
    """Control-field Rabi envelope Omega_c(t).

    square   : flat top of the given duration with smoothstep edges of
               ``rise_time`` inside the on-window.
    gaussian : peak at the window centre, FWHM equal to ``duration``.
    table    : linear interpolation of (``table_t``, ``table_rabi``), zero
               outside the tabulated range.
    """

    kind: str = "square"
    t_start: float = 0.0
    duration: float = 4e-9
    peak_rabi: float = 0.0
    rise_time: float = 100e-12
    table_t: np.ndarray | None = None
    table_rabi: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise ArgumentError(f"pulse kind must be one of {PULSE_KINDS}")
        if self.peak_rabi < 0:
            raise ArgumentError("peak_rabi must be non-negative")
        if self.kind in ("square", "gaussian"):
            if not self.duration > 0:
                raise ArgumentError("pulse duration must be positive")
            if self.kind == "square":
                if self.rise_time < 0:
                    raise ArgumentError("rise_time must be non-negative")
                if 2 * self.rise_time > self.duration:
                    raise ArgumentError("rise_time must not exceed half the duration")
        else:
            t, r = self.table_t, self.table_rabi
            if t is None or r is None:
                raise ArgumentError("table pulse requires table_t and table_rabi")
            t = np.asarray(t, float)
            r = np.asarray(r, float)
            if t.ndim != 1 or t.size < 2 or t.shape != r.shape:
                raise ArgumentError("table arrays must be 1-D, equal length >= 2")
            if np.any(np.diff(t) <= 0):
                raise ArgumentError("table_t must be strictly increasing")
            if np.any(r < 0):
                raise ArgumentError("table_rabi must be non-negative")
            object.__setattr__(self, "table_t", t)
            object.__setattr__(self, "table_rabi", r)

    def envelope(self, t):
        """Omega_c at time ``t`` (rad/s); accepts scalars or arrays."""
        t = np.asarray(t, dtype=float)
        if self.kind == "square":
            if self.rise_time == 0.0:
                on = (t >= self.t_start) & (t < self.t_start + self.duration)
                out = np.where(on, self.peak_rabi, 0.0)
            else:
                up = np.clip((t - self.t_start) / self.rise_time, 0.0, 1.0)
                dn = np.clip((self.t_start + self.duration - t) / self.rise_time,
                             0.0, 1.0)
                smooth = lambda x: x * x * (3.0 - 2.0 * x)
                out = self.peak_rabi * smooth(up) * smooth(dn)
        elif self.kind == "gaussian":
            centre = self.t_start + self.duration / 2.0
            out = self.peak_rabi * np.exp(
                -4.0 * np.log(2.0) * (t - centre) ** 2 / self.duration**2)
        else:
            out = np.interp(t, self.table_t, self.table_rabi,
                            left=0.0, right=0.0)
        return out if out.shape else float(out)


def hamiltonian(delta_s_eff: float, delta_c_eff: float, rabi_s: float,
                rabi_c: float) -> np.ndarray:
    """Rotating-frame Hamiltonian in units of hbar (rad/s)."""
    return np.array(
        [[0.0, rabi_s / 2.0, 0.0],
         [rabi_s / 2.0, delta_s_eff, rabi_c / 2.0],
         [0.0, rabi_c / 2.0, delta_s_eff + delta_c_eff]], dtype=complex)


def _collapse_terms(atom: LadderAtom):
    L_eg = np.zeros((3, 3), dtype=complex)
    L_eg[0, 1] = np.sqrt(atom.gamma_ge)          # e -> g
    L_de = np.zeros((3, 3), dtype=complex)
    L_de[1, 2] = np.sqrt(atom.gamma_ed)          # d -> e
    ops = []
    for L in (L_eg, L_de):
        ops.append((L, 0.5 * (L.conj().T @ L)))
    return ops


def liouvillian_rhs(rho: np.ndarray, delta_s_eff: float, delta_c_eff: float,
                    rabi_s: float, rabi_c: float,
                    atom: LadderAtom) -> np.ndarray:
    """d/dt rho of the Lindblad master equation for instantaneous fields.

    The detunings are the velocity-shifted effective values; callers doing a
    Doppler average supply them per class.
    """
    H = hamiltonian(delta_s_eff, delta_c_eff, rabi_s, rabi_c)
    out = -1j * (H @ rho - rho @ H)
    for L, K in _collapse_terms(atom):
        out += L @ rho @ L.conj().T - K @ rho - rho @ K
    return out


@dataclass(frozen=True)
class DensityMatrix:
    """A 3x3 state with physicality diagnostics."""

    rho: np.ndarray

    @property
    def trace_error(self) -> float:
        return abs(np.trace(self.rho) - 1.0)

    @property
    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    @property
    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.rho + self.rho.conj().T)
        return float(np.linalg.eigvalsh(h).min())

    def validate(self, trace_tol: float = 1e-10, herm_tol: float = 1e-10,
                 pos_tol: float = 1e-8) -> None:
        if self.trace_error > trace_tol:
            raise SolverError(f"trace deviates by {self.trace_error:.3e}")
        if self.hermiticity_error > herm_tol:
            raise SolverError(
                f"hermiticity violated by {self.hermiticity_error:.3e}")
        if self.min_eigenvalue < -pos_tol:
            raise SolverError(
                f"negative population {self.min_eigenvalue:.3e}")


def ground_state() -> np.ndarray:
    rho = np.zeros((3, 3), dtype=complex)
    rho[0, 0] = 1.0
    return rho


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of :func:`evolve`."""

    times: np.ndarray
    rhos: np.ndarray

    def state(self, i: int) -> DensityMatrix:
        return DensityMatrix(self.rhos[i])

    def max_trace_error(self) -> float:
        return float(np.max(np.abs(
            np.einsum("nii->n", self.rhos) - 1.0)))

    def max_hermiticity_error(self) -> float:
        return float(np.max(np.abs(
            self.rhos - np.conj(np.swapaxes(self.rhos, 1, 2)))))

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.rhos + np.conj(np.swapaxes(self.rhos, 1, 2)))
        return float(np.linalg.eigvalsh(h).min())


def evolve(rho0: np.ndarray, fields: FieldConfig, pulse: PulseShape | None,
           t_span: tuple[float, float], t_eval, atom: LadderAtom,
           v: float = 0.0, tol: float = 1e-10) -> Trajectory:
    """Integrate the master equation with an adaptive RK45 and dense output.

    ``v`` Doppler-shifts both detunings for one velocity class.  ``tol``
    sets the relative tolerance (absolute tolerance is tol * 1e-2) and must
    lie in [1e-12, 1e-4].  Raises :class:`IntegrationFailure` with the time
    reached if the step size collapses.
    """
    if not (_TOL_MIN <= tol <= _TOL_MAX):
        raise ArgumentError(f"tol must lie in [{_TOL_MIN}, {_TOL_MAX}]")
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (3, 3):
        raise ArgumentError("rho0 must be a 3x3 density matrix")
    DensityMatrix(rho0).validate(trace_tol=1e-8, herm_tol=1e-8, pos_tol=1e-6)
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.size == 0 or np.any(np.diff(t_eval) <= 0):
        raise ArgumentError("t_eval must be non-empty and strictly increasing")
    if t_eval[0] < t_span[0] or t_eval[-1] > t_span[1]:
        raise ArgumentError("t_eval must lie within t_span")

    eff = _effective_fields(fields, atom, v) if v else fields
    ops = _collapse_terms(atom)

    def rhs(t, y):
        rho = y.reshape(3, 3)
        rabi_c = eff.rabi_c if pulse is None else pulse.envelope(t)
        H = hamiltonian(eff.delta_s, eff.delta_c, eff.rabi_s, rabi_c)
        out = -1j * (H @ rho - rho @ H)
        for L, K in ops:
            out += L @ rho @ L.conj().T - K @ rho - rho @ K
        return out.reshape(9)

    sol = solve_ivp(rhs, t_span, rho0.reshape(9), method="RK45",
                    t_eval=t_eval, dense_output=True,
                    rtol=tol, atol=tol * 1e-2)
    if not sol.success:
        raise IntegrationFailure(f"master-equation integration failed: "
                                 f"{sol.message}", t_reached=float(sol.t[-1]))
    rhos = sol.y.T.reshape(-1, 3, 3)
    return Trajectory(times=sol.t, rhos=rhos)


def _effective_fields(fields: FieldConfig, atom: LadderAtom, v: float) -> FieldConfig:
    kc = atom.k_c if fields.geometry == "counter" else -atom.k_c
    return FieldConfig(delta_s=fields.delta_s - atom.k_s * v,
                       delta_c=fields.delta_c + kc * v,
                       rabi_s=fields.rabi_s, rabi_c=fields.rabi_c,
                       geometry=fields.geometry)


def steady_state(fields: FieldConfig, atom: LadderAtom,
                 v: float = 0.0) -> np.ndarray:
    """Stationary density matrix by direct linear solve with unit trace.

    The Liouvillian is assembled column by column from the right-hand side
    acting on basis matrices; the redundant row is replaced by the trace
    constraint.
    """
    eff = _effective_fields(fields, atom, v) if v else fields
    M = np.empty((9, 9), dtype=complex)
    basis = np.zeros((3, 3), dtype=complex)
    for j in range(9):
        basis.flat[j] = 1.0
        M[:, j] = liouvillian_rhs(basis, eff.delta_s, eff.delta_c,
                                  eff.rabi_s, eff.rabi_c, atom).reshape(9)
        basis.flat[j] = 0.0
    M[8, :] = 0.0
    M[8, [0, 4, 8]] = 1.0                      # Tr rho = 1
    b = np.zeros(9, dtype=complex)
    b[8] = 1.0
    try:
        rho = np.linalg.solve(M, b).reshape(3, 3)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"steady-state solve failed: {exc}") from exc
    rho = 0.5 * (rho + rho.conj().T)
    resid = float(np.max(np.abs(liouvillian_rhs(
        rho, eff.delta_s, eff.delta_c, eff.rabi_s, eff.rabi_c, atom))))
    scale = max(fields.rabi_s, fields.rabi_c, atom.gamma_ge)
    if not np.isfinite(resid) or resid > 1e-6 * scale:
        raise SolverError(f"steady-state residual too large: {resid:.3e}")
    return rho


def coherence_to_chi(rho_ge: complex, rabi_s: float, atom: LadderAtom,
                     density: float) -> complex:
    """Map the g-e coherence to a susceptibility.

    chi = 2 N d_ge rho_ge / (eps0 E_s) with the signal field expressed
    through its Rabi frequency, E_s = hbar Omega_s / d_ge.
    """
    if not rabi_s > 0:
        raise ArgumentError("rabi_s must be positive to define chi")
    return 2.0 * density * atom.dipole_ge**2 * rho_ge / (epsilon_0 * hbar * rabi_s)


def steady_chi(fields: FieldConfig, atom: LadderAtom, density: float) -> complex:
    """Susceptibility reconstructed from the steady-state g-e coherence."""
    rho = steady_state(fields, atom)
    return coherence_to_chi(rho[0, 1], fields.rabi_s, atom, density)


@dataclass(frozen=True)
class ModulationSeries:
    """Doppler-averaged time-resolved modulation produced by a control pulse.

    ``transmission`` includes insertion loss; ``dphi`` is relative to the
    control-off phase so it vanishes identically before the pulse.
    """

    times: np.ndarray
    chi: np.ndarray
    transmission: np.ndarray
    dphi: np.ndarray
    response_off: OpticalResponse


def pulse_response(fields: FieldConfig, pulse: PulseShape, atom: LadderAtom,
                   cell: VapourCell, grid: VelocityGrid, times,
                   tol: float = 1e-10) -> ModulationSeries:
    """Propagate every velocity class through a control pulse.

    Each class starts in its control-off steady state, evolves under the
    pulsed control, and contributes its weighted g-e coherence to the
    Doppler-averaged susceptibility.  ``fields.rabi_s`` must be positive and
    weak; ``fields.rabi_c`` is ignored in favour of the pulse envelope.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 2 or np.any(np.diff(times) <= 0):
        raise ArgumentError("times must be strictly increasing, length >= 2")
    if not fields.rabi_s > 0:
        raise ArgumentError("pulse_response requires a positive rabi_s")
    density = cell.number_density
    chi_t = np.zeros(times.size, dtype=complex)
    chi_off = 0.0 + 0.0j
    off = FieldConfig(fields.delta_s, fields.delta_c, fields.rabi_s, 0.0,
                      fields.geometry)
    for v, w in zip(grid.velocities, grid.weights):
        rho0 = steady_state(off, atom, v=float(v))
        chi_off += w * coherence_to_chi(rho0[0, 1], fields.rabi_s, atom, density)
        traj = evolve(rho0, fields, pulse, (times[0], times[-1]), times, atom,
                      v=float(v), tol=tol)
        chi_t += w * coherence_to_chi(traj.rhos[:, 0, 1], fields.rabi_s,
                                      atom, density)
    resp_off = OpticalResponse.from_susceptibility(
        chi_off, atom.k_s, cell.length, cell.insertion_loss)
    kl = atom.k_s * cell.length
    transmission = (1.0 - cell.insertion_loss) * np.exp(-kl * chi_t.imag)
    dphi = kl * (chi_t.real - np.real(chi_off)) / 2.0
    return ModulationSeries(times=times, chi=chi_t, transmission=transmission,
                            dphi=dphi, response_off=resp_off)
