"""Mechanical power spectra and the microwave-to-optical response.

Synthesizes thermal sideband spectra, coherently driven spectra with an
instrument-limited drive peak, and the multi-mode transduction spectrum
with interference between modes. Also implements the thermal-peak
calibration that turns a measured spectrum into a coherent phonon number
and an electromechanical decay rate.

Spectra are single-sided photon-flux densities around the mechanical
band; the optical carrier is not represented. Frequency-axis alignment
offsets are never applied silently.
"""

import math
from dataclasses import dataclass

import numpy as np

from .constants import CODATA
from .core import DeviceParams, PumpState, resolve_photon_number
from .errors import FitError, ParameterError
from .trace import Trace


@dataclass(frozen=True)
class MechanicalMode:
    """One mechanical resonance seen by the optical mode.

    f:        center frequency, Hz
    gamma:    total (operating) linewidth, Hz
    g:        vacuum optomechanical coupling magnitude, Hz
    phi:      coupling phase, rad (wrapped into [0, 2*pi))
    gamma_e:  electromechanical decay into the feedline, Hz
    """

    f: float
    gamma: float
    g: float
    phi: float = 0.0
    gamma_e: float = 0.0

    def __post_init__(self):
        bad = []
        if self.f <= 0:
            bad.append(f"f must be > 0 (got {self.f!r})")
        if self.gamma <= 0:
            bad.append(f"gamma must be > 0 (got {self.gamma!r})")
        if self.g < 0:
            bad.append(f"g must be >= 0 (got {self.g!r})")
        if self.gamma_e < 0:
            bad.append(f"gamma_e must be >= 0 (got {self.gamma_e!r})")
        if bad:
            raise ParameterError("; ".join(bad))
        object.__setattr__(self, "phi", self.phi % (2 * math.pi))


def mech_susceptibility(f, f_mode: float, gamma: float):
    """chi(f) = 1 / (i 2*pi (f_mode - f) + pi gamma), units 1/(angular Hz)."""
    return 1.0 / (1j * 2 * np.pi * (f_mode - f) + np.pi * gamma)


def sideband_rate(mode: MechanicalMode, n_c: float, kappa_o: float) -> float:
    """Per-phonon sideband scattering rate 4 n_c g^2 / kappa_o, Hz."""
    return 4.0 * n_c * mode.g ** 2 / kappa_o


def _as_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ParameterError("grid must be a nonempty 1-d array")
    if g.size > 1 and not np.all(np.diff(g) > 0):
        raise ParameterError("grid must be strictly increasing")
    return g


def _lorentzian_density(f, center, gamma):
    """Unit-area Lorentzian (1/pi)(gamma/2)/((f-center)^2+(gamma/2)^2)."""
    hw = 0.5 * gamma
    return (hw / np.pi) / ((f - center) ** 2 + hw ** 2)


def thermal_spectrum(dev: DeviceParams, modes, n_c: float, n_th: float,
                     grid) -> Trace:
    """Thermal sideband photon-flux spectrum of a set of mechanical modes.

    Mode j contributes a unit-area Lorentzian of width gamma_j scaled by
    its sideband photon rate Gamma_j = n_th * 4 n_c g_j^2 / kappa_o, so
    the integrated area of each mode equals Gamma_j and the peak
    density is 2 Gamma_j / (pi gamma_j).
    """
    f = _as_grid(grid)
    y = np.zeros_like(f)
    for mode in modes:
        rate = n_th * sideband_rate(mode, n_c, dev.kappa_o)
        y += rate * _lorentzian_density(f, mode.f, mode.gamma)
    return Trace(f, y, "hz", "lin", label="thermal sideband spectrum")


def steady_state_coherent_phonons(mode: MechanicalMode, p_mu: float,
                                  drive_f: float) -> float:
    """Coherent phonon number for a resonant microwave drive of power p_mu.

    Steady state of the driven damped mode:
        n_coh = 2*pi * gamma_e * Phi * |chi(drive_f)|^2,
    with Phi = p_mu / (h * drive_f) the drive photon flux. On resonance
    this reduces to (2/pi) * gamma_e * p_mu / (h f gamma^2) and is
    linear in p_mu.
    """
    if p_mu < 0:
        raise ParameterError(f"p_mu must be >= 0 (got {p_mu!r})")
    flux = p_mu / (CODATA.h * drive_f)
    chi = mech_susceptibility(drive_f, mode.f, mode.gamma)
    return 2 * math.pi * mode.gamma_e * flux * float(np.abs(chi)) ** 2


def gamma_me_from_phonons(n_coh: float, f_m: float, gamma_m: float,
                          p_mu: float) -> float:
    """Invert the resonant steady state for the feedline decay rate.

    gamma_me = (pi/2) * n_coh * h * f_m * gamma_m^2 / p_mu
    """
    if p_mu <= 0:
        raise ParameterError(f"p_mu must be > 0 (got {p_mu!r})")
    return 0.5 * math.pi * n_coh * CODATA.h * f_m * gamma_m ** 2 / p_mu


def _deposit_peak(f: np.ndarray, y: np.ndarray, center: float, width: float,
                  area: float) -> None:
    """Add a rectangle of the given area to the grid cells it overlaps."""
    if area == 0.0:
        return
    edges = np.concatenate(([f[0] - 0.5 * (f[1] - f[0])],
                            0.5 * (f[:-1] + f[1:]),
                            [f[-1] + 0.5 * (f[-1] - f[-2])])) \
        if f.size > 1 else np.array([center - width, center + width])
    lo, hi = center - 0.5 * width, center + 0.5 * width
    overlap = np.clip(np.minimum(edges[1:], hi) - np.maximum(edges[:-1], lo),
                      0.0, None)
    cells = np.diff(edges)
    with np.errstate(invalid="ignore"):
        y += np.where(cells > 0, area * (overlap / width) / cells, 0.0)


def driven_spectrum(dev: DeviceParams, modes, n_c: float, n_th: float,
                    drive_f: float, p_mu: float, rbw: float, grid) -> Trace:
    """Thermal spectrum plus a resolution-limited coherent drive peak.

    Each mode adds a peak at drive_f of integrated flux
    n_coh_j * Gamma_om_j; the drive peak is instrument-limited, so it is
    rendered as a rectangle of width rbw whose area is the physical
    quantity. Coherent phonons scale linearly with p_mu while the
    thermal part is unaffected.
    """
    if rbw <= 0:
        raise ParameterError(f"rbw must be > 0 (got {rbw!r})")
    thermal = thermal_spectrum(dev, modes, n_c, n_th, grid)
    f = thermal.x
    y = thermal.y.copy()
    for mode in modes:
        n_coh = steady_state_coherent_phonons(mode, p_mu, drive_f)
        _deposit_peak(f, y, drive_f, rbw, n_coh * sideband_rate(mode, n_c, dev.kappa_o))
    return Trace(f, y, "hz", "lin", label="driven sideband spectrum", rbw=rbw)


@dataclass(frozen=True)
class CoherentCalibration:
    """Result of the thermal-peak calibration."""

    n_coh: float
    thermal_fit: "FitResult"       # noqa: F821  (fitting.FitResult)
    coherent_area: float
    thermal_area: float
    peak_f: float
    significant: bool


def calibrate_coherent_phonons(spectrum: Trace, n_th: float) -> CoherentCalibration:
    """Coherent phonon number from the drive-peak / thermal-peak area ratio.

    Fits the broad thermal Lorentzian with the narrow drive peak masked
    out, integrates the excess flux in the masked window, and scales by
    the known thermal occupation:  n_coh = n_th * A_coh / A_thermal.
    Detection gain and the sideband scattering rate cancel in the ratio.
    """
    from .fitting import fit_lorentzian_multi

    if spectrum.rbw is None or spectrum.rbw <= 0:
        raise ParameterError("spectrum must carry a positive resolution bandwidth")
    f, y = spectrum.x, spectrum.y
    if f.size < 16:
        raise FitError("spectrum too short to resolve a Lorentzian and a peak")
    cells = spectrum.cell_widths()
    peak_idx = int(np.argmax(y))
    peak_f = float(f[peak_idx])
    half = 0.5 * spectrum.rbw + 2.0 * float(np.max(cells[max(0, peak_idx - 2):peak_idx + 3]))
    window = np.abs(f - peak_f) <= half
    if window.sum() >= f.size - 8:
        raise FitError("drive peak window covers the whole trace; peaks unresolvable")

    masked = Trace(f[~window], y[~window], spectrum.x_unit, spectrum.y_unit)
    thermal_fit = fit_lorentzian_multi(masked, 1, background="constant")
    if not thermal_fit.converged:
        raise FitError("thermal Lorentzian fit did not converge")
    a_th = thermal_fit.params["area_1"]
    gamma_th = thermal_fit.params["gamma_1"]
    f_th = thermal_fit.params["f_1"]
    bg = thermal_fit.params.get("bg0", 0.0)
    model = a_th * _lorentzian_density(f, f_th, gamma_th) + bg

    resid_out = y[~window] - model[~window]
    peak_height = 2 * a_th / (np.pi * gamma_th)
    if a_th <= 0 or np.sqrt(np.mean(resid_out ** 2)) > 0.3 * abs(peak_height):
        raise FitError("residual too large: thermal peak not resolvable")

    a_coh = float(np.sum((y - model)[window] * cells[window]))
    noise_floor = float(np.std(resid_out)) * math.sqrt(max(window.sum(), 1)) \
        * float(np.mean(cells))
    significant = a_coh > 5.0 * noise_floor
    a_coh = max(a_coh, 0.0)
    return CoherentCalibration(
        n_coh=n_th * a_coh / a_th,
        thermal_fit=thermal_fit,
        coherent_area=a_coh,
        thermal_area=a_th,
        peak_f=peak_f,
        significant=significant,
    )


def s_oe_spectrum(dev: DeviceParams, modes, pump: PumpState, grid) -> Trace:
    """Microwave-to-optical scattering amplitude |S_oe(f)|.

    Coherent sum over modes of the electromechanical-to-optomechanical
    conversion amplitude, filtered by the optical cavity:

        S_oe(f) = sqrt(eta_oc) * A_cav(f)
                  * sum_j 2*pi*sqrt(n_c)*g_j * sqrt(2*pi*gamma_ej)
                          * exp(i phi_j) * chi_j(f)

    with A_cav(f) = sqrt(2*pi*kappa_oe) / |i 2*pi(|detuning| - f) + pi kappa_o|.
    Mode phases carry the sign structure of the optomechanical overlap,
    so modes can interfere destructively. For a single mode on
    resonance, |S_oe|^2 equals total_efficiency() from the core module.
    """
    if not modes:
        raise ParameterError("empty mode list: nothing to transduce")
    f = _as_grid(grid)
    n_c = resolve_photon_number(dev, pump)
    amp = np.zeros(f.size, dtype=complex)
    for mode in modes:
        amp += (2 * np.pi * math.sqrt(n_c) * mode.g
                * math.sqrt(2 * math.pi * mode.gamma_e)
                * np.exp(1j * mode.phi)
                * mech_susceptibility(f, mode.f, mode.gamma))
    a_cav = np.sqrt(2 * np.pi * dev.kappa_oe) / np.abs(
        1j * 2 * np.pi * (abs(pump.detuning) - f) + np.pi * dev.kappa_o)
    y = math.sqrt(dev.eta_oc) * np.abs(amp) * a_cav
    return Trace(f, y, "hz", "lin", label="|S_oe| amplitude")
