"""Seeded random slow fields for sweeps.

Samples are real (conjugate-symmetric) fields supported on |k| <= k0 with
mode energies equidistributed in the Y_n = H^{2+2n} norm, rescaled to a
requested norm.  Determinism: the generator seed is the tuple
(seed, k0, index), so any row of any sweep can be reproduced in isolation.
"""

from __future__ import annotations

import numpy as np

from .spectral import FourierField, y_norm


def slow_field_sample(seed: int, k0: int, n: float, index: int = 0,
                      norm: float = 1.0) -> FourierField:
    """One reproducible sample with ||v||_{Y_n} = norm."""
    rng = np.random.default_rng([seed, k0, index])
    c = np.zeros(2 * k0 + 1, dtype=np.complex128)
    for k in range(0, k0 + 1):
        z = rng.standard_normal() + (1j * rng.standard_normal() if k > 0 else 0.0)
        c[k0 + k] = z * (1.0 + k * k) ** (-(1.0 + n))
        c[k0 - k] = np.conj(c[k0 + k])
    f = FourierField(k0, c, real=True)
    scale = y_norm(f, n)
    if scale == 0.0:
        return FourierField.basis(0, k0, norm * (1.0 + 0j))
    return (norm / scale) * f


def slow_field_samples(seed: int, k0: int, n: float, count: int,
                       norm: float = 1.0) -> list[FourierField]:
    return [slow_field_sample(seed, k0, n, i, norm) for i in range(count)]
