"""Classical bit-array transmission through the mechanical channel.

The RF carrier is never simulated: only the complex baseband envelope
of the mechanical mode is integrated, with an exact per-sample
exponential update (the drive is piecewise constant, so the first-order
linear ODE has a closed form). The detected quadratures oscillate at
the intermediate frequency and demodulate exactly; additive Gaussian
noise is applied on I and Q after demodulation with a caller-seeded
generator.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import FitError, ParameterError, SamplingError
from .fitting import FitResult, _gauss_newton
from .trace import Trace

EXTINCTION_CAP = 1e12


def parse_bits(text: str) -> tuple:
    """'0101' -> (0, 1, 0, 1); whitespace is ignored."""
    cleaned = "".join(text.split())
    if not cleaned or any(c not in "01" for c in cleaned):
        raise ParameterError(f"bit string must be nonempty 0/1 (got {text!r})")
    return tuple(int(c) for c in cleaned)


@dataclass(frozen=True)
class LinkConfig:
    """NRZ link settings.

    bits:            binary sequence (0/1)
    rate:            bit rate, bit/s
    gamma_m:         total mechanical linewidth in operation, Hz
    f_if:            intermediate frequency, Hz (0 for pure baseband)
    v0:              drive amplitude, V; a settled 1 gives |V_det| = v0
    noise_rms:       additive demodulated noise per quadrature, V rms
    samples_per_bit: envelope samples per unit interval (>= 8)
    drive_mode:      "coherent" (phase-stable tone) or "thermal"
                     (white-noise bath gated by the bits)
    """

    bits: tuple
    rate: float
    gamma_m: float
    f_if: float = 50e6
    v0: float = 1.0
    noise_rms: float = 0.0
    samples_per_bit: int = 32
    drive_mode: str = "coherent"

    def __post_init__(self):
        bad = []
        if not self.bits:
            bad.append("bits must be nonempty")
        elif any(b not in (0, 1) for b in self.bits):
            bad.append("bits must contain only 0 and 1")
        if self.rate <= 0:
            bad.append(f"rate must be > 0 (got {self.rate!r})")
        if self.gamma_m <= 0:
            bad.append(f"gamma_m must be > 0 (got {self.gamma_m!r})")
        if self.f_if < 0:
            bad.append(f"f_if must be >= 0 (got {self.f_if!r})")
        if self.v0 <= 0:
            bad.append(f"v0 must be > 0 (got {self.v0!r})")
        if self.noise_rms < 0:
            bad.append(f"noise_rms must be >= 0 (got {self.noise_rms!r})")
        if self.samples_per_bit < 8:
            bad.append(f"samples_per_bit must be >= 8 (got {self.samples_per_bit!r})")
        if self.drive_mode not in ("coherent", "thermal"):
            bad.append(f"drive_mode must be 'coherent' or 'thermal' "
                       f"(got {self.drive_mode!r})")
        if bad:
            raise ParameterError("; ".join(bad))
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))

    @property
    def sample_rate(self) -> float:
        return self.rate * self.samples_per_bit


@dataclass(frozen=True)
class LinkRun:
    """Demodulated link output: time axis, quadratures, envelope.

    beta is the pre-noise complex mechanical envelope; envelope is
    sqrt(I^2 + Q^2) of the stored (noisy) quadratures pointwise.
    """

    time: np.ndarray
    beta: np.ndarray
    i_trace: Trace
    q_trace: Trace
    envelope: Trace


def _check_sampling(cfg: LinkConfig) -> None:
    fs = cfg.sample_rate
    if fs < 20.0 * cfg.gamma_m:
        raise SamplingError(
            f"sample rate {fs:.3g} Hz < 20 * gamma_m = {20 * cfg.gamma_m:.3g} Hz; "
            "raise samples_per_bit")
    if cfg.f_if > 0 and fs < 2.0 * cfg.f_if:
        raise SamplingError(
            f"sample rate {fs:.3g} Hz cannot represent f_if = {cfg.f_if:.3g} Hz; "
            "raise samples_per_bit or set f_if = 0")


def run_link(cfg: LinkConfig, seed=0) -> LinkRun:
    """Integrate the mechanical envelope for the bit array and demodulate.

    dbeta/dt = -pi*gamma_m*beta + drive(t), drive on for 1-bits. The
    update per sample is the exact exponential solution, so an isolated
    0->1 step follows v0*(1 - exp(-pi*gamma_m*t)) to machine precision
    and a settled 1->0 edge decays as exp(-pi*gamma_m*t).
    """
    _check_sampling(cfg)
    rng = seed if isinstance(seed, np.random.Generator) \
        else np.random.default_rng(seed)
    spb = cfg.samples_per_bit
    n_steps = len(cfg.bits) * spb
    dt = 1.0 / cfg.sample_rate
    t = np.arange(n_steps + 1) * dt
    decay = math.exp(-math.pi * cfg.gamma_m * dt)

    beta = np.zeros(n_steps + 1, dtype=complex)
    gate = np.repeat(np.asarray(cfg.bits, dtype=float), spb)
    if cfg.drive_mode == "coherent":
        # settled drive level is v0: u/(pi*gamma) = v0
        kick = cfg.v0 * (1.0 - decay) * gate
        b = 0.0 + 0.0j
        for k in range(n_steps):
            b = b * decay + kick[k]
            beta[k + 1] = b
    else:
        # gated white-noise bath; stationary mean square |beta|^2 = v0^2
        sigma = cfg.v0 * math.sqrt(max(1.0 - decay ** 2, 0.0) / 2.0)
        xi = sigma * (rng.standard_normal(n_steps)
                      + 1j * rng.standard_normal(n_steps)) * gate
        b = 0.0 + 0.0j
        for k in range(n_steps):
            b = b * decay + xi[k]
            beta[k + 1] = b

    carrier = np.exp(1j * 2 * np.pi * cfg.f_if * t)
    v_det = beta * carrier
    i_sig = v_det.real
    q_sig = v_det.imag
    if cfg.noise_rms > 0:
        i_sig = i_sig + cfg.noise_rms * rng.standard_normal(t.size)
        q_sig = q_sig + cfg.noise_rms * rng.standard_normal(t.size)
    env = np.hypot(i_sig, q_sig)
    return LinkRun(
        time=t,
        beta=beta,
        i_trace=Trace(t, i_sig, "s", "v", label="I"),
        q_trace=Trace(t, q_sig, "s", "v", label="Q"),
        envelope=Trace(t, env, "s", "v", label="|V_det|"),
    )


def transition_indices(bits) -> list:
    """Bit positions j where bits[j] != bits[j-1]."""
    return [j for j in range(1, len(bits)) if bits[j] != bits[j - 1]]


@dataclass(frozen=True)
class EyeDiagram:
    """Overlaid two-unit-interval windows centered on transitions."""

    t: np.ndarray            # relative time within the window, s
    segments: np.ndarray     # one row per transition
    pre_bits: tuple
    post_bits: tuple
    opening: float           # min vertical gap at the sampling instants
    extinction_ratio: float  # mean high / mean low at the sampling instants


def eye_diagram(run: LinkRun, cfg: LinkConfig) -> EyeDiagram:
    """Overlay transition-centered windows and score the eye.

    Each window spans one unit interval before and after a transition.
    Levels are read at the conventional sampling instant, the center of
    each unit interval; the eye opening is min(high) - max(low) there
    (floored at zero) and the extinction ratio is mean high / mean low,
    capped at EXTINCTION_CAP when the low level is zero.
    """
    spb = cfg.samples_per_bit
    trans = transition_indices(cfg.bits)
    if len(trans) < 2:
        raise ParameterError("need at least 2 transitions for an eye diagram")
    env = run.envelope.y
    rows, pre, post = [], [], []
    for j in trans:
        c = j * spb
        rows.append(env[c - spb: c + spb + 1])
        pre.append(cfg.bits[j - 1])
        post.append(cfg.bits[j])
    segments = np.array(rows)
    t_rel = (np.arange(2 * spb + 1) - spb) / cfg.sample_rate

    half = spb // 2
    highs, lows = [], []
    for row, b_pre, b_post in zip(segments, pre, post):
        for idx, bit in ((half, b_pre), (spb + half, b_post)):
            (highs if bit else lows).append(row[idx])
    opening = max(0.0, float(np.min(highs) - np.max(lows)))
    mean_low = float(np.mean(lows))
    mean_high = float(np.mean(highs))
    if mean_low <= mean_high / EXTINCTION_CAP:
        extinction = EXTINCTION_CAP
    else:
        extinction = min(mean_high / mean_low, EXTINCTION_CAP)
    return EyeDiagram(t_rel, segments, tuple(pre), tuple(post),
                      opening, extinction)


def fit_ring(segment: Trace, kind: str) -> FitResult:
    """Fit a ring-up or ring-down edge of the demodulated envelope.

    kind "ringup":   |V_det|(t) = V_f * (1 - exp(-pi*gamma_m*t))
    kind "ringdown": |V_det|(t) = V_i * exp(-pi*gamma_m*t)
    with t measured from the segment start (the transition instant).
    A mismatched kind or a flat segment is flagged, not silently fit.
    """
    if kind not in ("ringup", "ringdown"):
        raise ParameterError(f"kind must be 'ringup' or 'ringdown' (got {kind!r})")
    t = segment.x - segment.x[0]
    y = segment.y
    if t.size < 6:
        raise FitError("segment too short to fit")
    y_max = float(np.max(np.abs(y)))
    if y_max <= 0 or float(np.ptp(y)) < 1e-9 * y_max:
        return FitResult({"gamma_m": 0.0, "v_i" if kind == "ringdown" else "v_f":
                          float(np.mean(y))}, {}, 0.0, False, 0,
                         ("unidentifiable: constant segment",))

    t_char = float(t[-1]) / 3.0
    if kind == "ringdown":
        v0 = float(y[0]) if y[0] > 0 else y_max
        below = np.nonzero(y <= v0 / math.e)[0]
        t_e = float(t[below[0]]) if below.size and below[0] > 0 else t_char
        p0 = [v0, 1.0 / (math.pi * t_e)]

        def fun_jac(p):
            vi, gam = p
            e = np.exp(-math.pi * gam * t)
            model = vi * e
            J = np.column_stack([e, -math.pi * t * vi * e])
            return model - y, J
        name = "v_i"
    else:
        vf = float(np.mean(y[-max(3, t.size // 10):]))
        if vf <= 0:
            vf = y_max
        above = np.nonzero(y >= vf * (1.0 - 1.0 / math.e))[0]
        t_e = float(t[above[0]]) if above.size and above[0] > 0 else t_char
        p0 = [vf, 1.0 / (math.pi * t_e)]

        def fun_jac(p):
            vf_, gam = p
            e = np.exp(-math.pi * gam * t)
            model = vf_ * (1.0 - e)
            J = np.column_stack([1.0 - e, math.pi * t * vf_ * e])
            return model - y, J
        name = "v_f"

    p, cov, rms, converged, it = _gauss_newton(
        fun_jac, p0, valid=lambda q: q[1] > 0)
    se = np.sqrt(np.abs(np.diag(cov)))
    notes = []
    if rms > 0.15 * y_max:
        notes.append("poor-fit: residual large; check segment kind")
        converged = False
    if not converged and "poor-fit: residual large; check segment kind" not in notes:
        notes.append("non-convergence")
    return FitResult({name: p[0], "gamma_m": p[1]},
                     {name: se[0], "gamma_m": se[1]},
                     rms, converged, it, tuple(notes))


def ring_segments(run: LinkRun, cfg: LinkConfig):
    """Longest ring-up and ring-down segments of a run, as Traces.

    Returns (ringup, ringdown); either may be None when the pattern has
    no such edge. Segments start at the transition instant and end at
    the next transition (or the end of the run).
    """
    spb = cfg.samples_per_bit
    bits = cfg.bits
    trans = transition_indices(bits) + [len(bits)]
    best = {"ringup": (0, None), "ringdown": (0, None)}
    for a, b in zip(trans[:-1], trans[1:]):
        kind = "ringup" if bits[a] == 1 else "ringdown"
        length = b - a
        if length > best[kind][0]:
            sl = slice(a * spb, b * spb + 1)
            best[kind] = (length, Trace(run.time[sl], run.envelope.y[sl],
                                        "s", "v", label=kind))
    return best["ringup"][1], best["ringdown"][1]


def link_metrics(run: LinkRun, cfg: LinkConfig) -> dict:
    """Eye metrics plus fitted ring-up/ring-down linewidths."""
    metrics = {}
    try:
        eye = eye_diagram(run, cfg)
        metrics["eye_opening"] = eye.opening
        metrics["extinction_ratio"] = eye.extinction_ratio
    except ParameterError:
        pass
    up, down = ring_segments(run, cfg)
    for seg, kind, key in ((up, "ringup", "gamma_m_ringup"),
                           (down, "ringdown", "gamma_m_ringdown")):
        if seg is None:
            continue
        try:
            fit = fit_ring(seg, kind)
        except FitError:
            continue
        if fit.converged:
            metrics[key] = fit.params["gamma_m"]
    return metrics


def harmonic_spectrum(cfg: LinkConfig, f0: float, n_periods: int = 64,
                      seed=0) -> Trace:
    """Two-sided PSD of the demodulated envelope for a square-wave drive.

    Drives the link with an n_periods-long 50%-duty square wave of
    fundamental f0 (bit rate 2*f0), demodulates to baseband, and
    returns the periodogram on offsets from the carrier. An exact
    integer number of periods lands every harmonic on an FFT bin, so
    only odd harmonics carry power, filtered by the mechanical
    susceptibility.
    """
    if f0 <= 0:
        raise ParameterError(f"f0 must be > 0 (got {f0!r})")
    if n_periods < 2:
        raise ParameterError(f"n_periods must be >= 2 (got {n_periods!r})")
    # warm up until the ring-up transient has decayed, then transform an
    # exact integer number of steady-state periods (leakage-free bins)
    warmup = int(math.ceil(8.0 * f0 / (math.pi * cfg.gamma_m))) + 1
    square = replace(cfg, bits=(1, 0) * (warmup + n_periods), rate=2.0 * f0)
    run = run_link(square, seed=seed)
    n = 2 * n_periods * square.samples_per_bit
    dt = 1.0 / square.sample_rate
    sl = slice(2 * warmup * square.samples_per_bit,
               2 * warmup * square.samples_per_bit + n)
    # demodulate to baseband: offsets are relative to the carrier
    v = (run.i_trace.y[sl] + 1j * run.q_trace.y[sl]) \
        * np.exp(-1j * 2 * np.pi * cfg.f_if * run.time[sl])
    spec = np.fft.fft(v) / n
    psd = (np.abs(spec) ** 2) * n * dt
    freqs = np.fft.fftfreq(n, dt)
    order = np.argsort(freqs)
    return Trace(freqs[order], psd[order], "hz", "lin",
                 label="envelope PSD (offset from carrier)")
