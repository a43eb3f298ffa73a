import math

import numpy as np
import pytest

from transducersim import (LinkConfig, ParameterError, SamplingError, Trace,
                           eye_diagram, fit_ring, harmonic_spectrum,
                           link_metrics, parse_bits, run_link)
from transducersim.link import EXTINCTION_CAP, ring_segments

from conftest import relerr

PRBS48 = tuple(int(b) for b in
               "110100101100111011000101001111001010110001110100")


def cfg_for(bits, rate, gamma_m=7.9e6, **kw):
    spb = kw.pop("samples_per_bit", None)
    if spb is None:
        spb = max(8, int(math.ceil(20.0 * gamma_m / rate)),
                  int(math.ceil(2.5 * kw.get("f_if", 50e6) / rate)))
    return LinkConfig(bits=bits, rate=rate, gamma_m=gamma_m,
                      samples_per_bit=spb, **kw)


# ------------------------------------------------------------------ dynamics

def test_quadrature_identity_holds_pointwise():
    cfg = cfg_for(PRBS48, 10e6, noise_rms=0.05)
    run = run_link(cfg, seed=1)
    assert np.allclose(run.envelope.y,
                       np.hypot(run.i_trace.y, run.q_trace.y),
                       rtol=0, atol=1e-15)
    assert np.all(run.envelope.y >= 0)


def test_isolated_step_matches_first_order_ring_up():
    cfg = cfg_for((0, 1, 1, 1, 1, 1, 1, 1), 2e6, gamma_m=7.9e6)
    run = run_link(cfg)
    spb = cfg.samples_per_bit
    t = run.time[spb:] - run.time[spb]
    expected = cfg.v0 * (1.0 - np.exp(-np.pi * cfg.gamma_m * t))
    assert np.max(np.abs(np.abs(run.beta[spb:]) - expected)) < 1e-12

    # phonon-number form: n(t) = n_f (1 - exp(-pi*gamma*t))^2 for n_i = 0
    n_t = np.abs(run.beta[spb:]) ** 2
    assert np.max(np.abs(n_t - (1 - np.exp(-np.pi * cfg.gamma_m * t)) ** 2)) \
        < 1e-12


def test_settled_ring_down_is_exact_exponential():
    cfg = cfg_for((1,) * 8 + (0,) * 8, 2e6, gamma_m=7.9e6)
    run = run_link(cfg)
    spb = cfg.samples_per_bit
    k0 = 8 * spb
    t = run.time[k0:] - run.time[k0]
    v_i = abs(run.beta[k0])
    assert relerr(v_i, cfg.v0) < 1e-9          # settled before the edge
    expected = v_i * np.exp(-np.pi * cfg.gamma_m * t)
    assert np.max(np.abs(np.abs(run.beta[k0:]) - expected)) < 1e-12


def test_envelope_agrees_across_step_sizes():
    # the exponential update is exact, so halving the step must not
    # change the envelope at shared sample times
    coarse = cfg_for(PRBS48[:16], 10e6, samples_per_bit=32)
    fine = cfg_for(PRBS48[:16], 10e6, samples_per_bit=64)
    run_c = run_link(coarse)
    run_f = run_link(fine)
    assert np.max(np.abs(run_c.beta - run_f.beta[::2])) < 1e-12


def test_envelope_satisfies_the_mode_ode():
    def ode_residual(spb):
        cfg = cfg_for(PRBS48[:16], 10e6, samples_per_bit=spb)
        run = run_link(cfg)
        beta, t = run.beta, run.time
        dt = t[1] - t[0]
        # central difference at samples 1..N-1; resid[j] is sample j+1
        dbeta = (beta[2:] - beta[:-2]) / (2 * dt)
        gate = np.repeat(np.asarray(cfg.bits, float), cfg.samples_per_bit)
        drive = math.pi * cfg.gamma_m * cfg.v0 * gate[1:]
        resid = dbeta + math.pi * cfg.gamma_m * beta[1:-1] - drive
        smooth = gate[:-1] == gate[1:]         # skip bit boundaries
        return float(np.max(np.abs(resid[smooth]))), cfg
    coarse, cfg = ode_residual(256)
    fine, _ = ode_residual(512)
    scale = math.pi * cfg.gamma_m * cfg.v0
    assert coarse < 1e-4 * scale
    assert fine < 0.3 * coarse                 # half step, ~4x smaller


def test_sampling_guard():
    with pytest.raises(SamplingError):
        LinkConfig(bits=(0, 1), rate=1e6, gamma_m=7.9e6,
                   samples_per_bit=8), run_link(
            LinkConfig(bits=(0, 1), rate=1e6, gamma_m=7.9e6,
                       samples_per_bit=8))


def test_parse_bits():
    assert parse_bits("0101") == (0, 1, 0, 1)
    assert parse_bits(" 01 10\n") == (0, 1, 1, 0)
    with pytest.raises(ParameterError):
        parse_bits("01x")
    with pytest.raises(ParameterError):
        parse_bits("")


# ------------------------------------------------------------------ ring fits

def test_ring_fit_round_trip_with_noise():
    rng = np.random.default_rng(2)
    gamma = 7.9e6
    t = np.linspace(0.0, 5.0 / (math.pi * gamma), 400)
    up = 1.0 - np.exp(-math.pi * gamma * t)
    fit = fit_ring(Trace(t, up + 0.01 * rng.standard_normal(t.size),
                         "s", "v"), "ringup")
    assert fit.converged
    assert relerr(fit.params["gamma_m"], gamma) < 0.02

    down = np.exp(-math.pi * gamma * t)
    fit = fit_ring(Trace(t, down + 0.01 * rng.standard_normal(t.size),
                         "s", "v"), "ringdown")
    assert fit.converged
    assert relerr(fit.params["gamma_m"], gamma) < 0.02


def test_ring_fit_recovers_injected_linewidth_from_link():
    # isolated one at 10 Mbit/s with the linewidth reported for the
    # bit-array experiment
    bits = (0, 0, 1, 0, 0, 0, 0, 0)
    cfg = cfg_for(bits, 10e6, gamma_m=9.25e6, samples_per_bit=64)
    run = run_link(cfg)
    up, down = ring_segments(run, cfg)
    fit = fit_ring(down, "ringdown")
    assert relerr(fit.params["gamma_m"], 9.25e6) < 0.02
    fit_up = fit_ring(up, "ringup")
    assert relerr(fit_up.params["gamma_m"], 9.25e6) < 0.02


def test_ring_fit_constant_segment_flagged():
    t = np.linspace(0, 1e-6, 100)
    fit = fit_ring(Trace(t, np.full(t.size, 0.7), "s", "v"), "ringdown")
    assert not fit.converged
    assert any("unidentifiable" in n for n in fit.notes)


def test_ring_fit_wrong_kind_flagged():
    gamma = 7.9e6
    t = np.linspace(0.0, 5.0 / (math.pi * gamma), 400)
    rising = 1.0 - np.exp(-math.pi * gamma * t)
    fit = fit_ring(Trace(t, rising, "s", "v"), "ringdown")
    assert (not fit.converged) or any("poor-fit" in n for n in fit.notes)


# ------------------------------------------------------------------ eyes

def test_eye_opening_monotone_in_bit_rate():
    openings = []
    for rate in (1e6, 3e6, 10e6, 30e6):
        cfg = cfg_for(PRBS48, rate, gamma_m=7.9e6)
        eye = eye_diagram(run_link(cfg), cfg)
        openings.append(eye.opening)
    assert all(a >= b - 1e-12 for a, b in zip(openings, openings[1:]))
    assert openings[0] > 0.9                   # settled at 1 Mbit/s
    assert openings[2] < 0.6 * openings[0]     # clear degradation by 10 Mbit/s


def test_eye_extinction_noise_free_is_capped():
    # slow enough that the settled low level underflows the cap
    cfg = cfg_for(PRBS48, 0.2e6, gamma_m=7.9e6)
    eye = eye_diagram(run_link(cfg), cfg)
    assert eye.extinction_ratio == EXTINCTION_CAP


def test_eye_extinction_limited_by_noise():
    noise = 1e-3
    cfg = cfg_for(PRBS48, 0.5e6, gamma_m=7.9e6, noise_rms=noise)
    eye = eye_diagram(run_link(cfg, seed=3), cfg)
    # settled low level is Rayleigh-distributed noise, mean noise*sqrt(pi/2)
    expected = 1.0 / (noise * math.sqrt(math.pi / 2))
    assert 0.5 * expected < eye.extinction_ratio < 2.0 * expected


def test_eye_closes_for_fast_alternating_pattern():
    gamma = 7.9e6
    rate = 100 * gamma
    cfg = cfg_for((0, 1) * 24, rate, gamma_m=gamma)
    eye = eye_diagram(run_link(cfg), cfg)
    # steady-state alternating response of a first-order filter
    a = math.exp(-math.pi * gamma / rate)
    hi = 1.0 / (1.0 + a)
    lo = a / (1.0 + a)
    hi_mid = lo * math.sqrt(a) + (1 - math.sqrt(a))
    lo_mid = hi * math.sqrt(a)
    bound = max(0.0, hi_mid - lo_mid)
    assert eye.opening <= bound + 1e-9
    assert eye.opening < 0.02


def test_eye_needs_transitions():
    cfg = cfg_for((1, 1, 1, 1, 1, 1, 1, 1), 1e6, gamma_m=7.9e6)
    with pytest.raises(ParameterError):
        eye_diagram(run_link(cfg), cfg)


def test_link_metrics_bundle():
    cfg = cfg_for(PRBS48, 1e6, gamma_m=7.9e6)
    metrics = link_metrics(run_link(cfg), cfg)
    assert metrics["eye_opening"] > 0.9
    assert relerr(metrics["gamma_m_ringdown"], 7.9e6) < 0.02


# ------------------------------------------------------------- thermal drive

def test_thermal_drive_ring_up_ensemble():
    gamma = 4e6
    cfg = LinkConfig(bits=(1,) * 4, rate=1e6, gamma_m=gamma,
                     samples_per_bit=80, drive_mode="thermal", f_if=0.0)
    acc = None
    n_runs = 128
    for seed in range(n_runs):
        run = run_link(cfg, seed=seed)
        n_m = np.abs(run.beta) ** 2
        acc = n_m if acc is None else acc + n_m
    mean = acc / n_runs
    t = np.arange(mean.size) / cfg.sample_rate
    expected = cfg.v0 ** 2 * (1.0 - np.exp(-2 * math.pi * gamma * t))
    mask = expected > 0.2
    assert np.max(np.abs(mean[mask] / expected[mask] - 1.0)) < 0.35
    assert relerr(float(np.mean(mean[expected > 0.99])), cfg.v0 ** 2) < 0.2


# ---------------------------------------------------------------- harmonics

def harmonic_power(spec, f0, k):
    # line power = density * bin width, comparable across record lengths
    df = float(spec.x[1] - spec.x[0])
    total = 0.0
    for sign in (+1, -1):
        idx = int(np.argmin(np.abs(spec.x - sign * k * f0)))
        total += float(spec.y[idx]) * df
    return total


def chi_sq(f, gamma):
    return 1.0 / ((2 * math.pi * f) ** 2 + (math.pi * gamma) ** 2)


def test_harmonic_spectrum_odd_harmonics_only():
    gamma, f0 = 7.9e6, 0.5e6
    cfg = LinkConfig(bits=(1, 0), rate=2 * f0, gamma_m=gamma,
                     samples_per_bit=160)
    spec = harmonic_spectrum(cfg, f0, n_periods=64)
    p1 = harmonic_power(spec, f0, 1)
    p2 = harmonic_power(spec, f0, 2)
    p3 = harmonic_power(spec, f0, 3)
    p4 = harmonic_power(spec, f0, 4)
    assert 10 * math.log10(p2 / p1) < -30.0
    assert 10 * math.log10(p4 / p1) < -30.0
    # filtered square-wave Fourier series: P_k ~ (1/k^2) |chi(k f0)|^2
    expected_ratio = (1.0 / 9.0) * chi_sq(3 * f0, gamma) / chi_sq(f0, gamma)
    assert relerr(p3 / p1, expected_ratio) < 0.10
    # odd peaks present at the first three odd offsets
    for k in (1, 3, 5):
        assert harmonic_power(spec, f0, k) > 1e3 * p2


def test_harmonic_fundamental_rolls_off_past_the_linewidth():
    gamma = 2e6
    powers = {}
    for f0 in (20 * gamma, 40 * gamma):
        cfg = LinkConfig(bits=(1, 0), rate=2 * f0, gamma_m=gamma,
                         samples_per_bit=8)
        spec = harmonic_spectrum(cfg, f0, n_periods=64)
        powers[f0] = harmonic_power(spec, f0, 1)
    measured = powers[20 * gamma] / powers[40 * gamma]
    expected = chi_sq(20 * gamma, gamma) / chi_sq(40 * gamma, gamma)
    assert relerr(measured, expected) < 0.2
    assert 3.0 < measured < 5.0               # ~1/f^2 rolloff => factor ~4
