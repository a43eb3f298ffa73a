"""Resonator-boosted electromechanical coupling and qubit-swap feasibility.

The transmon is treated as a linear resonator restricted to a single
excitation: two coupled lossy amplitude equations with coupling g_em
and decay rates kappa_mu (qubit) and gamma_mi (mechanics).
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import DeviceParams
from .errors import ParameterError, SamplingError
from .trace import Trace


@dataclass(frozen=True)
class QubitConfig:
    """Microwave resonator/transmon: capacitance, frequency, linewidth."""

    c_q: float       # F
    f_mu: float      # Hz
    kappa_mu: float  # Hz

    def __post_init__(self):
        bad = [f"{n} must be > 0 (got {getattr(self, n)!r})"
               for n in ("c_q", "f_mu", "kappa_mu") if getattr(self, n) <= 0]
        if bad:
            raise ParameterError("; ".join(bad))


def qubit_impedance(q: QubitConfig, dev: DeviceParams) -> float:
    """Z_q = 1 / (2*pi*f_mu * (c_idt + c_q)), Ohm."""
    return 1.0 / (2 * math.pi * q.f_mu * (dev.c_idt + q.c_q))


def coupling_g_em(dev: DeviceParams, q: QubitConfig) -> float:
    """Resonant electromechanical coupling, Hz.

    g_em = (1/2) sqrt(gamma_me * f_m) * sqrt(Z_q / Z_0); the resonator
    impedance boosts the bare feedline coupling. Assumes f_mu tuned to
    the mechanical mode (no detuning correction).
    """
    z_q = qubit_impedance(q, dev)
    return 0.5 * math.sqrt(dev.gamma_me * dev.f_m) * math.sqrt(z_q / dev.z0)


@dataclass(frozen=True)
class SwapFeasibility:
    g_em: float
    z_q: float
    threshold_gamma: float   # 4 * g_em, Hz
    feasible: bool           # gamma_mi < threshold
    c_em: float              # 4 g_em^2 / (gamma_m * kappa_mu)


def swap_feasibility(dev: DeviceParams, q: QubitConfig) -> SwapFeasibility:
    """Swap condition gamma_mi < 4 g_em and electromechanical cooperativity.

    C_em uses the bare mechanical linewidth gamma_mi + gamma_me (the
    optical pump is off during a swap).
    """
    g_em = coupling_g_em(dev, q)
    threshold = 4.0 * g_em
    c_em = 4.0 * g_em ** 2 / (dev.gamma_m * q.kappa_mu)
    return SwapFeasibility(
        g_em=g_em,
        z_q=qubit_impedance(q, dev),
        threshold_gamma=threshold,
        feasible=dev.gamma_mi < threshold,
        c_em=c_em,
    )


def rabi_swap_sim(dev: DeviceParams, q: QubitConfig, t_grid,
                  lossless: bool = False) -> tuple[Trace, Trace]:
    """Excitation exchange between the qubit and the mechanical mode.

    Integrates
        da/dt = -pi*kappa_mu*a - i*2*pi*g_em*b
        db/dt = -pi*gamma_mi*b - i*2*pi*g_em*a
    from a = 1, b = 0 (qubit excited, mechanics in the ground state)
    with a fixed-substep RK4 and returns (|a|^2, |b|^2) on t_grid. In
    the lossless limit the exchange oscillates at 2*g_em with the first
    full swap at t = 1/(4*g_em).
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise ParameterError("t_grid must contain at least two times")
    if t[0] < 0 or not np.all(np.diff(t) > 0):
        raise ParameterError("t_grid must be nonnegative and strictly increasing")
    g_em = coupling_g_em(dev, q)
    if g_em > 0 and float(np.max(np.diff(t))) > 1.0 / (10.0 * g_em):
        raise SamplingError(
            f"t_grid step exceeds 1/(10*g_em) = {1.0 / (10.0 * g_em):.3g} s; "
            "the exchange would alias")

    kappa = 0.0 if lossless else q.kappa_mu
    gamma = 0.0 if lossless else dev.gamma_mi
    m = np.array([[-math.pi * kappa, -1j * 2 * math.pi * g_em],
                  [-1j * 2 * math.pi * g_em, -math.pi * gamma]])
    f_char = max(2.0 * g_em, kappa, gamma, 1.0 / float(t[-1]))
    dt_target = 1.0 / (256.0 * f_char)

    state = np.array([1.0 + 0.0j, 0.0 + 0.0j])
    out = np.empty((t.size, 2))
    prev = 0.0
    for i, ti in enumerate(t):
        span = ti - prev
        if span > 0:
            n_sub = max(int(math.ceil(span / dt_target)), 1)
            h = span / n_sub
            for _ in range(n_sub):
                k1 = m @ state
                k2 = m @ (state + 0.5 * h * k1)
                k3 = m @ (state + 0.5 * h * k2)
                k4 = m @ (state + h * k3)
                state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i] = np.abs(state) ** 2
        prev = ti
    qubit = Trace(t, out[:, 0], "s", "lin", label="qubit excitation")
    mech = Trace(t, out[:, 1], "s", "lin", label="phonon occupation")
    return qubit, mech
