"""Thermal, driven, and multi-mode transduction spectra.

Builds a four-mode mechanical band, synthesizes the thermal sideband
spectrum, adds a coherent drive peak, and evaluates the full
microwave-to-optical response with mode interference. All three traces
land in demo_output/ as CSV.
"""

import math
import os

import numpy as np

from transducersim import (MechanicalMode, PumpState, dbm_to_w,
                           driven_spectrum, load_device, s_oe_spectrum,
                           thermal_occupation, thermal_spectrum, write_trace)

OUT_DIR = os.environ.get("DEMO_OUT", "demo_output")

# relative coupling magnitudes and signs stand in for the mode overlap;
# the two pi-phased modes interfere with the first pair
MODES = [
    MechanicalMode(f=4.20e9, gamma=6e6, g=1.0e5, phi=0.0, gamma_e=40.0),
    MechanicalMode(f=4.28e9, gamma=8e6, g=1.0e5, phi=0.0, gamma_e=40.0),
    MechanicalMode(f=4.32e9, gamma=8.4e6, g=1.3e5, phi=0.0, gamma_e=58.0),
    MechanicalMode(f=4.44e9, gamma=9e6, g=0.7e5, phi=math.pi, gamma_e=20.0),
]


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    dev = load_device("table1_measured").device
    pump = PumpState(detuning=dev.f_m, p_on_chip=dbm_to_w(-7.9))
    n_th = thermal_occupation(dev.f_m, 300.0)
    n_c = 1.0e4
    grid = np.linspace(4.15e9, 4.50e9, 7001)

    thermal = thermal_spectrum(dev, MODES, n_c, n_th, grid)
    driven = driven_spectrum(dev, MODES, n_c, n_th, drive_f=4.32e9,
                             p_mu=dbm_to_w(-22.0), rbw=50e3, grid=grid)
    s_oe = s_oe_spectrum(dev, MODES, pump, grid)

    for name, trace in (("thermal_spectrum", thermal),
                        ("driven_spectrum", driven),
                        ("s_oe_band", s_oe)):
        path = os.path.join(OUT_DIR, f"{name}.csv")
        write_trace(trace, path)
        print(f"wrote {path}")
    print(f"thermal occupation at 300 K: {n_th:.1f}")
    print(f"peak |S_oe|^2: {float((s_oe.y ** 2).max()):.3g}")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    ax1.semilogy(grid / 1e9, driven.y, lw=0.8, label="driven")
    ax1.semilogy(grid / 1e9, thermal.y, lw=0.8, label="thermal")
    ax1.set_ylabel("sideband flux density (1/s/Hz)")
    ax1.legend()
    ax2.semilogy(grid / 1e9, s_oe.y ** 2, lw=0.8, color="tab:purple")
    ax2.set_ylabel("|S_oe|^2")
    ax2.set_xlabel("frequency (GHz)")
    fig.tight_layout()
    fig.savefig(os.path.join(OUT_DIR, "transduction_spectrum.png"), dpi=150)
    print(f"wrote {os.path.join(OUT_DIR, 'transduction_spectrum.png')}")


if __name__ == "__main__":
    main()
