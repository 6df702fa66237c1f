"""Closed-form ladder susceptibility, Doppler averaging, window search.

The independent route used here evaluates the dressed two-level form
directly from module-level constants, so a sign or factor slip in the
implementation cannot cancel against itself.
"""

import math

import numpy as np
import pytest
from scipy.constants import epsilon_0, hbar

from ladderphase import (ArgumentError, FieldConfig, OpticalResponse,
                         Spectrum, VapourCell, fields_control_off, find_roi,
                         rabi_from_power, response, spectrum_scan,
                         susceptibility_at_velocity, susceptibility_doppler,
                         velocity_grid)

RABI_HOT = 19667838429.255978  # rad/s at 11.75 W, 300 um waist, upper leg
GHZ = 2 * math.pi * 1e9


def _chi_ref(ds, dc, om_c, v, atom, density, geometry="counter"):
    g1 = atom.gamma_ge / 2.0
    g2 = atom.gamma_ed / 2.0
    const = density * atom.dipole_ge**2 / (epsilon_0 * hbar)
    kc = atom.k_c if geometry == "counter" else -atom.k_c
    one = ds - atom.k_s * v
    two = ds + dc - (atom.k_s - kc) * v
    den = g1 - 1j * one + (om_c**2 / 4.0) / (g2 - 1j * two)
    return 1j * const / den


def test_rabi_from_power_golden(atom):
    om = rabi_from_power(11.75, 300e-6, atom.dipole_ed)
    assert om == pytest.approx(RABI_HOT, rel=1e-12)


def test_rabi_square_root_law(atom):
    base = rabi_from_power(2.0, 300e-6, atom.dipole_ed)
    assert rabi_from_power(8.0, 300e-6, atom.dipole_ed) == \
        pytest.approx(2.0 * base, rel=1e-12)
    assert rabi_from_power(0.0, 300e-6, atom.dipole_ed) == 0.0


def test_rabi_validation(atom):
    with pytest.raises(ArgumentError):
        rabi_from_power(-1.0, 300e-6, atom.dipole_ed)
    with pytest.raises(ArgumentError):
        rabi_from_power(1.0, 0.0, atom.dipole_ed)


def test_chi_matches_reference(atom, hot_cell):
    rng = np.random.default_rng(11)
    n = hot_cell.number_density
    for _ in range(40):
        ds = float(rng.uniform(-5, 5)) * GHZ
        dc = float(rng.uniform(-2, 2)) * GHZ
        om = float(rng.uniform(0, 3)) * GHZ
        v = float(rng.uniform(-400, 400))
        for geom in ("counter", "co"):
            fields = FieldConfig(delta_s=ds, delta_c=dc, rabi_s=0.0,
                                 rabi_c=om, geometry=geom)
            got = susceptibility_at_velocity(fields, atom, hot_cell, v)
            want = _chi_ref(ds, dc, om, v, atom, n, geom)
            assert got == pytest.approx(want, rel=1e-12)


def test_chi_two_level_limit(atom, hot_cell):
    # no control: chi = i C / (g1 - i ds), a plain Lorentzian
    g1 = atom.gamma_ge / 2.0
    const = hot_cell.number_density * atom.dipole_ge**2 / (epsilon_0 * hbar)
    for ds in (-3e9, -0.2e9, 0.0, 1.7e9):
        ds *= 2 * math.pi
        fields = FieldConfig(delta_s=ds, delta_c=0.0, rabi_s=0.0, rabi_c=0.0)
        chi = susceptibility_at_velocity(fields, atom, hot_cell, 0.0)
        lorentz = const / (g1**2 + ds**2)
        assert chi.imag == pytest.approx(g1 * lorentz, rel=1e-12)
        assert chi.real == pytest.approx(-ds * lorentz, rel=1e-12, abs=1e-30)


def test_chi_dispersion_ratio(atom, hot_cell):
    # with this detuning convention Re/Im = -delta_s/g1 at zero velocity
    g1 = atom.gamma_ge / 2.0
    for ds in (-2.3e9 * 2 * math.pi, 0.9e9 * 2 * math.pi):
        fields = FieldConfig(delta_s=ds, delta_c=0.0, rabi_s=0.0, rabi_c=0.0)
        chi = susceptibility_at_velocity(fields, atom, hot_cell, 0.0)
        assert chi.real / chi.imag == pytest.approx(-ds / g1, rel=1e-10)


def test_chi_symmetry_control_off(atom, hot_cell):
    ds = 1.3e9 * 2 * math.pi
    f_plus = FieldConfig(delta_s=ds, delta_c=0.0, rabi_s=0.0, rabi_c=0.0)
    f_minus = FieldConfig(delta_s=-ds, delta_c=0.0, rabi_s=0.0, rabi_c=0.0)
    cp = susceptibility_at_velocity(f_plus, atom, hot_cell, 0.0)
    cm = susceptibility_at_velocity(f_minus, atom, hot_cell, 0.0)
    assert cp.imag == pytest.approx(cm.imag, rel=1e-12)
    assert cp.real == pytest.approx(-cm.real, rel=1e-12)


def test_chi_passive(atom, hot_cell, grid):
    # a passive medium can only absorb
    rng = np.random.default_rng(5)
    for _ in range(30):
        fields = FieldConfig(delta_s=float(rng.uniform(-6, 6)) * GHZ,
                             delta_c=float(rng.uniform(-2, 2)) * GHZ,
                             rabi_s=0.0,
                             rabi_c=float(rng.uniform(0, 3)) * GHZ)
        assert susceptibility_at_velocity(
            fields, atom, hot_cell, float(rng.uniform(-500, 500))).imag >= 0.0
        assert susceptibility_doppler(fields, atom, hot_cell, grid).imag >= 0.0


def test_chi_vectorised_velocity(atom, hot_cell):
    fields = FieldConfig(delta_s=-4.7 * GHZ, delta_c=1.6 * GHZ,
                         rabi_s=0.0, rabi_c=RABI_HOT)
    v = np.array([-200.0, 0.0, 350.0])
    vec = susceptibility_at_velocity(fields, atom, hot_cell, v)
    assert vec.shape == (3,)
    for i, vi in enumerate(v):
        one = susceptibility_at_velocity(fields, atom, hot_cell, float(vi))
        assert isinstance(one, complex)
        assert vec[i] == pytest.approx(one, rel=1e-14)


def test_doppler_average_against_dense_reference(atom, hot_cell, grid):
    # independent trapezoid quadrature on a much denser velocity grid
    sigma = grid.sigma_v
    v = np.linspace(-5 * sigma, 5 * sigma, 8001)
    w = np.exp(-v**2 / (2 * sigma**2))
    w /= w.sum()
    n = hot_cell.number_density
    for ds_ghz in (-4.7, -3.2, -1.0):
        fields = FieldConfig(delta_s=ds_ghz * GHZ, delta_c=1.6 * GHZ,
                             rabi_s=0.0, rabi_c=RABI_HOT)
        ref = np.sum(_chi_ref(fields.delta_s, fields.delta_c, fields.rabi_c,
                              v, atom, n) * w)
        got = susceptibility_doppler(fields, atom, hot_cell, grid)
        assert abs(got - ref) / abs(ref) < 1e-3


def test_doppler_convergence(atom, hot_cell):
    # doubling the class count beyond 201 must not move the result by 1e-3
    fields = FieldConfig(delta_s=-4.7 * GHZ, delta_c=1.6 * GHZ,
                         rabi_s=0.0, rabi_c=RABI_HOT)
    chis = {}
    for n in (201, 401, 801):
        g = velocity_grid(hot_cell.temperature, atom.mass, n_points=n)
        chis[n] = susceptibility_doppler(fields, atom, hot_cell, g)
    d21 = abs(chis[401] - chis[201]) / abs(chis[401])
    d42 = abs(chis[801] - chis[401]) / abs(chis[801])
    assert d21 < 1e-3
    assert d42 < d21


def test_doppler_empty_grid_rejected(atom, hot_cell, grid):
    fields = FieldConfig(delta_s=0.0, delta_c=0.0, rabi_s=0.0, rabi_c=0.0)
    bad = np.empty(0)
    with pytest.raises(Exception):
        susceptibility_doppler(fields, atom, hot_cell,
                               type(grid)(velocities=bad, weights=bad,
                                          temperature=370.75,
                                          mass=atom.mass))


def test_response_invariants(atom, hot_cell, grid):
    rng = np.random.default_rng(23)
    for _ in range(20):
        fields = FieldConfig(delta_s=float(rng.uniform(-6, 6)) * GHZ,
                             delta_c=1.6 * GHZ, rabi_s=0.0,
                             rabi_c=float(rng.uniform(0, 3)) * GHZ)
        r = response(fields, atom, hot_cell, grid)
        assert abs(r.transmission
                   - (1 - hot_cell.insertion_loss) * r.amplitude_t**2) < 1e-12
        assert 0.0 <= r.transmission <= 1.0
        assert r.amplitude_t <= 1.0
        chi = susceptibility_doppler(fields, atom, hot_cell, grid)
        assert r.chi == chi
        assert r.phase_shift == pytest.approx(
            atom.k_s * hot_cell.length * chi.real / 2.0, rel=1e-12)


def test_response_transparent_cell(atom, grid):
    # zero density leaves only the insertion loss
    empty = VapourCell(length=0.07, temperature=370.75, insertion_loss=0.045,
                       density_override=0.0)
    fields = FieldConfig(delta_s=0.0, delta_c=0.0, rabi_s=0.0, rabi_c=0.0)
    r = response(fields, atom, empty, grid)
    assert r.amplitude_t == 1.0
    assert r.transmission == pytest.approx(0.955, rel=1e-12)
    assert r.phase_shift == 0.0


def test_from_susceptibility_trivial():
    r = OpticalResponse.from_susceptibility(0.0 + 0.0j, 8e6, 0.07, 0.0)
    assert r.transmission == 1.0 and r.amplitude_t == 1.0
    assert r.phase_shift == 0.0


def test_spectrum_identity_when_control_off(atom, hot_cell, grid):
    fields_off = FieldConfig(delta_s=0.0, delta_c=1.6 * GHZ,
                             rabi_s=0.0, rabi_c=0.0)
    delta = np.linspace(-3, 1, 41) * GHZ
    spec = spectrum_scan(delta, fields_off, fields_off, atom, hot_cell, grid)
    assert np.array_equal(spec.t_on, spec.t_off)
    assert np.all(spec.dphi == 0.0)


def test_spectrum_scan_sorts_and_validates(atom, hot_cell, grid):
    on = FieldConfig(delta_s=0.0, delta_c=1.6 * GHZ, rabi_s=0.0,
                     rabi_c=RABI_HOT)
    off = fields_control_off(on)
    spec = spectrum_scan(np.array([1.0, -1.0, 0.0]) * GHZ, on, off, atom,
                         hot_cell, grid)
    assert np.all(np.diff(spec.delta_s) > 0)
    with pytest.raises(ArgumentError):
        spectrum_scan(spec.delta_s, on, on, atom, hot_cell, grid)
    shifted = FieldConfig(delta_s=0.0, delta_c=0.0, rabi_s=0.0, rabi_c=0.0)
    with pytest.raises(ArgumentError):
        spectrum_scan(spec.delta_s, on, shifted, atom, hot_cell, grid)


def _toy_spectrum(t_on, t_off, dphi):
    n = len(t_on)
    delta = np.linspace(0.0, n - 1.0, n)
    return Spectrum(delta_s=delta, t_on=np.asarray(t_on, dtype=float),
                    t_off=np.asarray(t_off, dtype=float),
                    dphi=np.asarray(dphi, dtype=float))


def test_find_roi_single_plateau():
    t = [0.5, 0.95, 0.95, 0.95, 0.95, 0.5]
    phi = [3.0, 3.0, 3.0, 3.0, 3.0, 3.0]
    wins = find_roi(_toy_spectrum(t, t, phi), 0.9, 2.9, 10.0)
    assert len(wins) == 1
    w = wins[0]
    assert (w.i_start, w.i_stop) == (1, 4)
    assert w.start == 1.0 and w.stop == 4.0
    assert w.t_on_min == 0.95
    assert w.dphi_min == 3.0 and w.dphi_max == 3.0


def test_find_roi_flatness_splits_window():
    # phase drifts by 2 across the plateau; a tight flatness cap must
    # produce shorter maximal windows instead of the full run
    t = [0.99] * 9
    phi = [2.0, 2.25, 2.5, 2.75, 3.0, 3.25, 3.5, 3.75, 4.0]
    wide = find_roi(_toy_spectrum(t, t, phi), 0.9, 1.5, 10.0)
    assert len(wide) == 1 and (wide[0].i_start, wide[0].i_stop) == (0, 8)
    tight = find_roi(_toy_spectrum(t, t, phi), 0.9, 1.5, 1.0)
    assert all(w.dphi_max - w.dphi_min <= 1.0 + 1e-12 for w in tight)
    assert max(w.width for w in tight) < wide[0].width
    # each tight window is maximal: growing it one step breaks flatness
    phi_arr = np.asarray(phi)
    for w in tight:
        lo, hi = w.i_start, w.i_stop
        if lo > 0:
            seg = phi_arr[lo - 1:hi + 1]
            assert seg.max() - seg.min() > 1.0
        if hi < 8:
            seg = phi_arr[lo:hi + 2]
            assert seg.max() - seg.min() > 1.0


def test_find_roi_threshold_monotone():
    rng = np.random.default_rng(3)
    t_on = rng.uniform(0.7, 1.0, 60)
    t_off = rng.uniform(0.7, 1.0, 60)
    phi = rng.uniform(0.0, 4.0, 60)
    spec = _toy_spectrum(t_on, t_off, phi)

    def covered(wins):
        got = set()
        for w in wins:
            got.update(range(w.i_start, w.i_stop + 1))
        return got

    loose = covered(find_roi(spec, 0.8, 1.0, 100.0))
    strict = covered(find_roi(spec, 0.9, 1.0, 100.0))
    assert strict <= loose


def test_find_roi_negative_phase_target():
    t = [0.99] * 5
    phi = [-3.0, -3.1, -3.0, -0.2, -3.0]
    wins = find_roi(_toy_spectrum(t, t, phi), 0.9, 2.9, 10.0)
    assert [(w.i_start, w.i_stop) for w in wins] == [(0, 2), (4, 4)]


def test_find_roi_empty_and_validation():
    t = [0.5] * 4
    phi = [3.0] * 4
    assert find_roi(_toy_spectrum(t, t, phi), 0.9, 2.9, 10.0) == []
    with pytest.raises(ArgumentError):
        find_roi(_toy_spectrum(t, t, phi), 0.0, 2.9, 10.0)
    with pytest.raises(ArgumentError):
        find_roi(_toy_spectrum(t, t, phi), 0.9, 2.9, -1.0)


def test_fields_control_off_copies(atom):
    on = FieldConfig(delta_s=1.0, delta_c=2.0, rabi_s=3.0, rabi_c=4.0,
                     geometry="co")
    off = fields_control_off(on)
    assert off.rabi_c == 0.0
    assert (off.delta_s, off.delta_c, off.rabi_s, off.geometry) == \
        (1.0, 2.0, 3.0, "co")
