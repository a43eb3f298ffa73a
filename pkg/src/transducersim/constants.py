"""CODATA physical constants (SI units)."""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants used by the rate and occupation formulas.

    h and k_B are exact by definition in SI; hbar = h / (2*pi).
    """

    h: float = 6.62607015e-34      # J s
    hbar: float = 6.62607015e-34 / (2 * math.pi)  # J s
    k_B: float = 1.380649e-23      # J / K


CODATA = PhysicalConstants()
