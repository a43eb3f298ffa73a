import math

import numpy as np
import pytest

from transducersim import (CODATA, FitError, MechanicalMode, ParameterError,
                           PumpState, calibrate_coherent_phonons, dbm_to_w,
                           driven_spectrum, gamma_me_from_phonons,
                           s_oe_spectrum, sideband_rate,
                           steady_state_coherent_phonons, thermal_occupation,
                           thermal_spectrum, total_efficiency,
                           total_mech_linewidth)
from transducersim.core import DeviceParams

from conftest import relerr

N_TH_300K = 1446.4874967108869


@pytest.fixture(scope="module")
def mode(dev):
    return MechanicalMode(f=dev.f_m, gamma=dev.gamma_mi, g=dev.g_om,
                          phi=0.0, gamma_e=dev.gamma_me)


def grid_around(f0, half_span, n):
    return np.linspace(f0 - half_span, f0 + half_span, n)


# ------------------------------------------------------------ thermal spectra

def test_thermal_area_matches_sideband_rate(dev, mode):
    grid = grid_around(mode.f, 50 * mode.gamma, 20001)
    tr = thermal_spectrum(dev, [mode], 1.0e4, N_TH_300K, grid)
    expected = N_TH_300K * sideband_rate(mode, 1.0e4, dev.kappa_o)
    area = np.trapezoid(tr.y, tr.x)
    assert relerr(area, expected) < 0.01


def test_thermal_additivity(dev, mode):
    grid = grid_around(mode.f, 20 * mode.gamma, 4001)
    single = thermal_spectrum(dev, [mode], 1.0e4, N_TH_300K, grid)
    double = thermal_spectrum(dev, [mode, mode], 1.0e4, N_TH_300K, grid)
    assert np.allclose(double.y, 2 * single.y, rtol=1e-12)

    other = MechanicalMode(f=mode.f + 40e6, gamma=5e6, g=8e4, gamma_e=10.0)
    apart_sum = thermal_spectrum(dev, [mode], 1.0e4, N_TH_300K, grid).y \
        + thermal_spectrum(dev, [other], 1.0e4, N_TH_300K, grid).y
    union = thermal_spectrum(dev, [mode, other], 1.0e4, N_TH_300K, grid)
    assert np.allclose(union.y, apart_sum, rtol=1e-12)


def test_thermal_peak_height_by_quadrature(dev, mode):
    # oracle: trapezoid integration of the synthesized trace fixes the
    # total rate; the peak density must then be 2*rate/(pi*gamma)
    grid = grid_around(mode.f, 50 * mode.gamma, 40001)
    tr = thermal_spectrum(dev, [mode], 1.0e4, N_TH_300K, grid)
    rate = np.trapezoid(tr.y, tr.x)
    assert relerr(tr.y.max(), 2 * rate / (np.pi * mode.gamma)) < 0.015


def test_thermal_area_converges_under_grid_refinement(dev, mode):
    rate = N_TH_300K * sideband_rate(mode, 1.0e4, dev.kappa_o)
    half_span = 200 * mode.gamma
    # analytic integral over the finite window, the quadrature limit
    expected = rate * (2 / np.pi) * math.atan(2 * half_span / mode.gamma)
    errs = []
    for n in (2001, 8001, 32001):
        grid = grid_around(mode.f, half_span, n)
        tr = thermal_spectrum(dev, [mode], 1.0e4, N_TH_300K, grid)
        errs.append(abs(np.trapezoid(tr.y, tr.x) - expected))
    assert errs[2] <= errs[1] <= errs[0]
    assert errs[2] / rate < 1e-6


# ---------------------------------------------------------- coherent phonons

def brute_force_phonons(mode, p_mu, drive_f, cycles_per_sample=64):
    """Independent oracle: RK4 integration of the driven mode equation
    db/dt = (i 2 pi f - pi gamma) b + sqrt(2 pi gamma_e) b_in(t) with the
    carrier resolved, run to steady state; returns |b|^2."""
    flux_amp = math.sqrt(p_mu / (CODATA.h * drive_f))
    dt = 1.0 / (mode.f * cycles_per_sample)
    total = 60.0 / (math.pi * mode.gamma)
    n = int(total / dt)
    pole = 1j * 2 * np.pi * mode.f - np.pi * mode.gamma
    feed = math.sqrt(2 * np.pi * mode.gamma_e) * flux_amp
    omega_d = 2 * np.pi * drive_f

    def rhs(t, b):
        return pole * b + feed * np.exp(1j * omega_d * t)

    b, t = 0.0 + 0.0j, 0.0
    for _ in range(n):
        k1 = rhs(t, b)
        k2 = rhs(t + dt / 2, b + dt / 2 * k1)
        k3 = rhs(t + dt / 2, b + dt / 2 * k2)
        k4 = rhs(t + dt, b + dt * k3)
        b += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    return abs(b) ** 2


def test_steady_state_phonons_against_ode_oracle(mode):
    p_mu = dbm_to_w(-22.0)          # -20 dBm source minus 2 dB line loss
    closed = steady_state_coherent_phonons(mode, p_mu, mode.f)
    ode = brute_force_phonons(mode, p_mu, mode.f)
    assert relerr(closed, ode) < 2e-3
    assert relerr(closed, 1.15e6) < 0.01


def test_steady_state_phonons_off_resonance_filter(mode):
    p_mu = 1e-6
    drive = mode.f + 3 * mode.gamma
    closed = steady_state_coherent_phonons(mode, p_mu, drive)
    ode = brute_force_phonons(mode, p_mu, drive)
    assert relerr(closed, ode) < 5e-3


def test_driven_zero_power_equals_thermal(dev, mode):
    grid = grid_around(mode.f, 20 * mode.gamma, 4001)
    th = thermal_spectrum(dev, [mode], 1.0e4, N_TH_300K, grid)
    dr = driven_spectrum(dev, [mode], 1.0e4, N_TH_300K, mode.f, 0.0, 50e3, grid)
    assert np.array_equal(th.y, dr.y)


def test_driven_coherent_area_linear_in_power(dev, mode):
    grid = grid_around(mode.f, 20 * mode.gamma, 9601)
    th = thermal_spectrum(dev, [mode], 1.0e4, N_TH_300K, grid).y
    p0 = 1e-6
    areas = []
    for p_mu in (p0, 10 * p0):      # a 10 dB step
        dr = driven_spectrum(dev, [mode], 1.0e4, N_TH_300K, mode.f, p_mu,
                             50e3, grid)
        coherent = dr.y - th
        cells = dr.cell_widths()
        areas.append(float(np.sum(coherent * cells)))
        # thermal part untouched outside the drive bin
        mask = np.abs(grid - mode.f) > 100e3
        assert np.array_equal(dr.y[mask], th[mask])
    assert relerr(areas[1], 10 * areas[0]) < 1e-9


# ------------------------------------------------------- thermal-peak scaling

def synth_driven(dev, gamma_op, n_c, p_mu, rbw=50e3, points=9601,
                 noise_snr_db=None, seed=0):
    mode = MechanicalMode(f=dev.f_m, gamma=gamma_op, g=dev.g_om,
                          gamma_e=dev.gamma_me)
    grid = grid_around(dev.f_m, 60e6, points)
    tr = driven_spectrum(dev, [mode], n_c, N_TH_300K, dev.f_m, p_mu, rbw, grid)
    if noise_snr_db is None:
        return tr, mode
    thermal_peak = 2 * N_TH_300K * sideband_rate(mode, n_c, dev.kappa_o) \
        / (np.pi * gamma_op)
    sigma = thermal_peak * 10 ** (-noise_snr_db / 20)
    rng = np.random.default_rng(seed)
    from transducersim import Trace
    return Trace(tr.x, tr.y + sigma * rng.standard_normal(tr.x.size),
                 tr.x_unit, tr.y_unit, rbw=tr.rbw), mode


def test_calibration_round_trip_with_noise(dev):
    n_c = 1.0e4
    gamma_op = total_mech_linewidth(dev, n_c, "blue")
    p_mu = dbm_to_w(-22.0)
    tr, mode = synth_driven(dev, gamma_op, n_c, p_mu, noise_snr_db=25, seed=3)
    cal = calibrate_coherent_phonons(tr, N_TH_300K)
    truth = steady_state_coherent_phonons(mode, p_mu, dev.f_m)
    assert cal.significant
    assert relerr(cal.n_coh, truth) < 0.02


def test_calibration_zero_drive(dev):
    n_c = 1.0e4
    gamma_op = total_mech_linewidth(dev, n_c, "blue")
    tr, mode = synth_driven(dev, gamma_op, n_c, 0.0, noise_snr_db=30, seed=4)
    cal = calibrate_coherent_phonons(tr, N_TH_300K)
    assert not cal.significant
    # bounded by the noise floor: far below any real drive
    assert cal.n_coh < 0.05 * N_TH_300K


def test_calibration_recovers_gamma_me(dev):
    n_c = 1.0e4
    gamma_op = total_mech_linewidth(dev, n_c, "blue")
    p_mu = dbm_to_w(-22.0)
    tr, mode = synth_driven(dev, gamma_op, n_c, p_mu, noise_snr_db=30, seed=5)
    cal = calibrate_coherent_phonons(tr, N_TH_300K)
    gamma_me = gamma_me_from_phonons(cal.n_coh, dev.f_m, gamma_op, p_mu)
    assert relerr(gamma_me, 58.0) < 0.05


def test_calibration_rejects_featureless_data(dev):
    from transducersim import Trace
    rng = np.random.default_rng(6)
    grid = grid_around(dev.f_m, 60e6, 2001)
    tr = Trace(grid, np.abs(rng.standard_normal(grid.size)), rbw=50e3)
    with pytest.raises(FitError):
        calibrate_coherent_phonons(tr, N_TH_300K)


# ------------------------------------------------------------------ s_oe

def test_soe_single_mode_matches_conversion_efficiency(dev):
    n_c = 1.0e4
    pump = PumpState(detuning=dev.f_m, n_c=n_c)
    gamma_op = total_mech_linewidth(dev, n_c, "blue")
    mode = MechanicalMode(f=dev.f_m, gamma=gamma_op, g=dev.g_om,
                          gamma_e=dev.gamma_me)
    tr = s_oe_spectrum(dev, [mode], pump, np.array([dev.f_m]))
    eta = total_efficiency(dev, pump, "blue")
    assert relerr(float(tr.y[0]) ** 2, eta) < 0.01
    assert relerr(float(tr.y[0]) ** 2, 1.5e-7) < 0.10


def test_soe_destructive_interference_degenerate_modes(dev):
    pump = PumpState(detuning=dev.f_m, n_c=1.0e4)
    a = MechanicalMode(f=dev.f_m, gamma=8e6, g=1e5, phi=0.0, gamma_e=60.0)
    b = MechanicalMode(f=dev.f_m, gamma=8e6, g=1e5, phi=np.pi, gamma_e=60.0)
    both = s_oe_spectrum(dev, [a, b], pump, np.array([dev.f_m]))
    single = s_oe_spectrum(dev, [a], pump, np.array([dev.f_m]))
    assert both.y[0] < 1e-10 * single.y[0]


def test_soe_interference_dip_between_peaks(dev):
    # Between two straddling modes the susceptibility phase roll makes
    # the two contributions arrive in anti-phase, carving a dip deeper
    # than either single-mode tail; flipping one mode phase by pi turns
    # the same midpoint constructive.
    pump = PumpState(detuning=dev.f_m, n_c=1.0e4)
    a = MechanicalMode(f=dev.f_m - 30e6, gamma=8e6, g=1e5, phi=0.0, gamma_e=60.0)
    b = MechanicalMode(f=dev.f_m + 30e6, gamma=8e6, g=1e5, phi=0.0, gamma_e=60.0)
    grid = grid_around(dev.f_m, 80e6, 4001)
    both = s_oe_spectrum(dev, [a, b], pump, grid).y
    only_a = s_oe_spectrum(dev, [a], pump, grid).y
    only_b = s_oe_spectrum(dev, [b], pump, grid).y
    mid = np.abs(grid - dev.f_m) < 2e6
    assert both[mid].min() < 0.5 * only_a[mid].min()
    assert both[mid].min() < 0.5 * only_b[mid].min()
    # contributions really are anti-phased at the dip
    from transducersim import mech_susceptibility
    za = np.exp(1j * a.phi) * mech_susceptibility(dev.f_m, a.f, a.gamma)
    zb = np.exp(1j * b.phi) * mech_susceptibility(dev.f_m, b.f, b.gamma)
    assert np.cos(np.angle(za) - np.angle(zb)) < -0.9

    flipped = MechanicalMode(f=b.f, gamma=b.gamma, g=b.g, phi=np.pi,
                             gamma_e=b.gamma_e)
    constructive = s_oe_spectrum(dev, [a, flipped], pump, grid).y
    assert constructive[mid].min() > max(only_a[mid].min(), only_b[mid].min())


def test_soe_global_phase_invariance(dev):
    pump = PumpState(detuning=dev.f_m, n_c=1.0e4)
    modes = [MechanicalMode(f=dev.f_m - 20e6, gamma=8e6, g=1e5, phi=0.3,
                            gamma_e=60.0),
             MechanicalMode(f=dev.f_m + 20e6, gamma=6e6, g=7e4, phi=2.1,
                            gamma_e=40.0)]
    shifted = [MechanicalMode(f=m.f, gamma=m.gamma, g=m.g, phi=m.phi + 1.234,
                              gamma_e=m.gamma_e) for m in modes]
    grid = grid_around(dev.f_m, 60e6, 2001)
    assert np.allclose(s_oe_spectrum(dev, modes, pump, grid).y,
                       s_oe_spectrum(dev, shifted, pump, grid).y, rtol=1e-12)


def test_soe_bounded_by_external_efficiencies(dev):
    # red-detuned, C_om <= 1, physically consistent operating linewidths
    rng = np.random.default_rng(7)
    eta_o = dev.kappa_oe / dev.kappa_o
    for _ in range(25):
        g = rng.uniform(2e4, 4e5)
        gamma_e = rng.uniform(1.0, 1e4)
        gamma_bare = rng.uniform(1e6, 4e7) + gamma_e
        n_max = dev.kappa_o * gamma_bare / (4 * g ** 2)
        n_c = rng.uniform(0.0, n_max)          # keeps C_om <= 1
        gamma_op = gamma_bare + 4 * n_c * g ** 2 / dev.kappa_o
        mode = MechanicalMode(f=dev.f_m, gamma=gamma_op, g=g, gamma_e=gamma_e)
        pump = PumpState(detuning=-dev.f_m, n_c=n_c)
        grid = grid_around(dev.f_m, 100e6, 801)
        tr = s_oe_spectrum(dev, [mode], pump, grid)
        assert (tr.y ** 2).max() <= dev.eta_oc * eta_o * (1 + 1e-9)


def test_soe_empty_modes_error(dev):
    with pytest.raises(ParameterError):
        s_oe_spectrum(dev, [], PumpState(detuning=dev.f_m, n_c=1e4),
                      np.array([dev.f_m]))
