"""Stable evaluation of the exponential integrator phi functions.

phi1(z) = (e^z - 1)/z,  phi2(z) = (e^z - 1 - z)/z^2,
phi3(z) = (e^z - 1 - z - z^2/2)/z^3,

with phi_k(0) = 1/k!.  Direct formulas cancel catastrophically near z = 0, so
below a threshold the Taylor series is used instead; above it, expm1 keeps
the leading difference accurate.  Valid for any real z (very negative z
underflows e^z harmlessly; the asymptotics -1/z etc. come out right).
"""

from __future__ import annotations

import math

import numpy as np

SERIES_THRESHOLD = 1e-4


def _series(z: np.ndarray, k: int) -> np.ndarray:
    # truncation error ~ z^7/(7+k)!, far below machine eps at the threshold
    out = np.zeros_like(z, dtype=float)
    term = np.ones_like(z, dtype=float)
    for m in range(7):
        out = out + term / math.factorial(m + k)
        term = term * z
    return out


def _phi(z, k: int):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < SERIES_THRESHOLD
    zs = np.where(small, 0.0, z)  # avoid 0/0 in the direct branch
    with np.errstate(divide="ignore", invalid="ignore"):
        em1 = np.expm1(zs)
        if k == 1:
            direct = em1 / zs
        elif k == 2:
            direct = (em1 - zs) / zs**2
        elif k == 3:
            direct = (em1 - zs - 0.5 * zs**2) / zs**3
        else:
            raise ValueError("only phi1..phi3 are provided")
    out = np.where(small, _series(z, k), direct)
    return out if out.shape else float(out)


def phi1(z):
    return _phi(z, 1)


def phi2(z):
    return _phi(z, 2)


def phi3(z):
    return _phi(z, 3)
