"""Number formatting shared by the emitters."""
import numpy as np

#: Magnitudes below this are written as 0 (float noise, never real data).
SNAP = 1e-12


def coord(v: float) -> str:
    """Plain decimal, up to 14 significant digits, no exponent."""
    v = float(v)
    if abs(v) < SNAP:
        return "0"
    return np.format_float_positional(v, precision=14, unique=False, fractional=False, trim="-")


def fixed2(v: float) -> str:
    return f"{float(v):.2f}"
