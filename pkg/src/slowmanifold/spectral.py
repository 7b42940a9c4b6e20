"""Fourier-side primitives on the 1-D torus.

Everything in this package works on truncated Fourier coefficient sequences
with the convention e_k = exp(2*pi*i*k*x) and coefficients taken in the
L2(T) inner product.  This module provides the coefficient container, the
Bessel-potential (Sobolev) norms

    ||u||_{H^s}^2 = sum_k (1 + k^2)^s |c_k|^2,

diagonal Fourier-multiplier operators and their semigroups, the slow/fast
spectral splitting parameterised by zeta, and exact (zero-padded) convolution
for polynomial nonlinearities.

All values are immutable after construction and all operations are pure
functions, so everything here is safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NegativeTimeOnFastModes, ZetaTooLarge

FOUR_PI_SQ = 4.0 * math.pi**2


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierField:
    """Truncated coefficient sequence c_k, k in {-K, ..., K}.

    ``coef[K + k]`` stores c_k.  Reads outside the resolution return 0.  With
    ``real=True`` conjugate symmetry c_{-k} = conj(c_k) is enforced on
    construction and preserved by every operation that can preserve it.
    """

    resolution: int
    coef: np.ndarray
    real: bool = False

    def __post_init__(self):
        K = int(self.resolution)
        if K < 0:
            raise ValueError("resolution must be nonnegative")
        c = np.asarray(self.coef, dtype=np.complex128)
        if c.shape != (2 * K + 1,):
            raise ValueError(f"coefficient array must have shape ({2*K+1},), got {c.shape}")
        if self.real:
            c = 0.5 * (c + np.conj(c[::-1]))
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "resolution", K)
        object.__setattr__(self, "coef", c)

    # -- constructors -------------------------------------------------------
    @staticmethod
    def zeros(resolution: int, real: bool = False) -> "FourierField":
        return FourierField(resolution, np.zeros(2 * resolution + 1, dtype=np.complex128), real)

    @staticmethod
    def basis(k: int, resolution: int | None = None, amplitude: complex = 1.0) -> "FourierField":
        """amplitude * e_k, at resolution max(|k|, resolution)."""
        K = abs(k) if resolution is None else int(resolution)
        if abs(k) > K:
            raise ValueError("basis mode outside resolution")
        c = np.zeros(2 * K + 1, dtype=np.complex128)
        c[K + k] = amplitude
        return FourierField(K, c)

    @staticmethod
    def from_modes(modes: dict[int, complex], resolution: int, real: bool = False) -> "FourierField":
        c = np.zeros(2 * resolution + 1, dtype=np.complex128)
        for k, val in modes.items():
            if abs(k) > resolution:
                raise ValueError(f"mode {k} outside resolution {resolution}")
            c[resolution + k] = val
        return FourierField(resolution, c, real)

    # -- access -------------------------------------------------------------
    def get(self, k: int) -> complex:
        if abs(k) > self.resolution:
            return 0.0 + 0.0j
        return complex(self.coef[self.resolution + k])

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.resolution, self.resolution + 1)

    def with_resolution(self, resolution: int) -> "FourierField":
        """Pad with zeros or truncate to the requested resolution."""
        K, K2 = self.resolution, int(resolution)
        if K2 == K:
            return self
        c = np.zeros(2 * K2 + 1, dtype=np.complex128)
        m = min(K, K2)
        c[K2 - m:K2 + m + 1] = self.coef[K - m:K + m + 1]
        return FourierField(K2, c, self.real)

    def support_radius(self, tol: float = 0.0) -> int:
        """Largest |k| with |c_k| > tol (0 for the zero field)."""
        nz = np.nonzero(np.abs(self.coef) > tol)[0]
        if nz.size == 0:
            return 0
        return int(max(abs(nz[0] - self.resolution), abs(nz[-1] - self.resolution)))

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other: "FourierField") -> "FourierField":
        K = max(self.resolution, other.resolution)
        a, b = self.with_resolution(K), other.with_resolution(K)
        return FourierField(K, a.coef + b.coef, self.real and other.real)

    def __sub__(self, other: "FourierField") -> "FourierField":
        K = max(self.resolution, other.resolution)
        a, b = self.with_resolution(K), other.with_resolution(K)
        return FourierField(K, a.coef - b.coef, self.real and other.real)

    def __mul__(self, scalar) -> "FourierField":
        s = complex(scalar)
        return FourierField(self.resolution, self.coef * s, self.real and s.imag == 0.0)

    __rmul__ = __mul__

    def __neg__(self) -> "FourierField":
        return FourierField(self.resolution, -self.coef, self.real)


# ---------------------------------------------------------------------------
# Sobolev scale
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SobolevIndex:
    """Smoothness order s of H^s(T), with the scale conventions

    X_alpha = H^{2 alpha}  (fast-variable scale),
    Y_alpha = H^{2 + 2 alpha}  (slow-variable scale),

    so only s >= -2 ever occurs (alpha >= -1).
    """

    s: float

    def __post_init__(self):
        if self.s < -2.0:
            raise ValueError("Sobolev order below the scale floor s = -2")

    @staticmethod
    def x_scale(alpha: float) -> "SobolevIndex":
        return SobolevIndex(2.0 * alpha)

    @staticmethod
    def y_scale(alpha: float) -> "SobolevIndex":
        return SobolevIndex(2.0 + 2.0 * alpha)


def sobolev_weights(modes: np.ndarray, s: float) -> np.ndarray:
    """Per-coefficient weights (1 + k^2)^{s/2} of the H^s norm."""
    return (1.0 + modes.astype(float) ** 2) ** (s / 2.0)


def sobolev_norm(field: FourierField, s: SobolevIndex | float) -> float:
    """H^s norm, s given directly or as a SobolevIndex."""
    sv = s.s if isinstance(s, SobolevIndex) else float(s)
    w = sobolev_weights(field.modes, sv)
    return float(np.linalg.norm(w * field.coef))


def x_norm(field: FourierField, alpha: float) -> float:
    """Norm in X_alpha = H^{2 alpha}."""
    return sobolev_norm(field, 2.0 * alpha)


def y_norm(field: FourierField, alpha: float) -> float:
    """Norm in Y_alpha = H^{2 + 2 alpha}."""
    return sobolev_norm(field, 2.0 + 2.0 * alpha)


# ---------------------------------------------------------------------------
# diagonal operators and semigroups
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagonalOperator:
    """Fourier multiplier operator: (A u)_k = mu(k) * u_k.

    ``multiplier`` must be even in k and vectorised over integer arrays.
    """

    multiplier: Callable[[np.ndarray], np.ndarray]
    name: str = "diagonal"

    def mu(self, modes: np.ndarray) -> np.ndarray:
        return np.asarray(self.multiplier(np.asarray(modes)), dtype=float)

    def apply(self, field: FourierField) -> FourierField:
        return FourierField(field.resolution, self.mu(field.modes) * field.coef, field.real)

    def solve(self, field: FourierField) -> FourierField:
        """A^{-1} field (all multipliers must be nonzero)."""
        mu = self.mu(field.modes)
        if np.any(mu == 0.0):
            raise ZeroDivisionError("operator has a zero Fourier multiplier")
        return FourierField(field.resolution, field.coef / mu, field.real)

    def resolvent_norm(self, s_from: float, s_to: float, max_mode: int = 4096) -> float:
        """Operator norm of A^{-1} from H^{s_from} to H^{s_to} over |k| <= max_mode."""
        k = np.arange(0, max_mode + 1)
        mu = self.mu(k)
        if np.any(mu == 0.0):
            return math.inf
        return float(np.max((1.0 + k.astype(float) ** 2) ** ((s_to - s_from) / 2.0) / np.abs(mu)))


def shifted_laplacian(shift: float = 1.0, name: str | None = None) -> DiagonalOperator:
    """Delta - shift on the torus: mu(k) = -(4 pi^2 k^2 + shift)."""
    def mult(k):
        return -(FOUR_PI_SQ * np.asarray(k, dtype=float) ** 2 + shift)
    return DiagonalOperator(mult, name or f"laplacian-{shift:g}")


def semigroup_apply(op: DiagonalOperator, field: FourierField, t: float,
                    timescale: float = 1.0, k0: int | None = None) -> FourierField:
    """exp(t A / timescale) applied to field.

    Forward time works on any field.  Negative t is the group extension and
    is only defined on the slow subspace: it requires the cutoff ``k0`` and a
    field with no content on modes |k| > k0.
    """
    if timescale <= 0:
        raise ValueError("timescale must be positive")
    if t < 0:
        if k0 is None:
            raise NegativeTimeOnFastModes(
                "negative semigroup time needs a slow-mode cutoff k0")
        if field.support_radius() > k0:
            raise NegativeTimeOnFastModes(
                f"negative semigroup time on a field with modes beyond |k| = {k0}")
    factors = np.exp(op.mu(field.modes) * (t / timescale))
    return FourierField(field.resolution, factors * field.coef, field.real)


# ---------------------------------------------------------------------------
# slow/fast splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralSplit:
    """Slow/fast decomposition data for one zeta.

    k0 is the mode cutoff bracketed by

        -4 pi^2 (k0+2)^2 < zeta^{-1} omega_A + 1 <= -4 pi^2 (k0+1)^2,

    N_S and N_F are the slow/fast decay-rate offsets and eta the history
    weight eta = zeta^{-1} omega_A + (N_S + N_F)/2.
    """

    zeta: float
    omega_A: float
    k0: int
    N_S: float
    N_F: float
    eta: float

    def __post_init__(self):
        if self.zeta <= 0:
            raise ValueError("zeta must be positive")
        if self.omega_A >= 0:
            raise ValueError("omega_A must be negative")
        w = -self.omega_A / self.zeta - 1.0
        lo = FOUR_PI_SQ * (self.k0 + 1) ** 2
        hi = FOUR_PI_SQ * (self.k0 + 2) ** 2
        if not (lo * (1 - 1e-12) <= w < hi):
            raise ValueError("cutoff bracketing violated for k0")
        if not (0 <= self.N_F < self.N_S < -self.omega_A / self.zeta):
            raise ValueError("rate ordering 0 <= N_F < N_S < -zeta^{-1} omega_A violated")
        eta_ref = self.omega_A / self.zeta + 0.5 * (self.N_S + self.N_F)
        if abs(self.eta - eta_ref) > 1e-9 * max(1.0, abs(eta_ref)):
            raise ValueError("eta inconsistent with zeta^{-1} omega_A + (N_S+N_F)/2")

    @property
    def gap(self) -> float:
        return self.N_S - self.N_F


def split_cutoff(zeta: float, omega_A: float) -> SpectralSplit:
    """Construct the spectral splitting for a given zeta.

    Raises ZetaTooLarge when no nonnegative cutoff satisfies the bracketing.
    Ties on the upper bracket boundary select the smaller k0.
    """
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    if omega_A >= 0:
        raise ValueError("omega_A must be negative")
    w = -omega_A / zeta - 1.0  # = -(zeta^{-1} omega_A + 1)
    if w < FOUR_PI_SQ:
        raise ZetaTooLarge(
            f"zeta={zeta:g} too large: zeta^(-1) omega_A + 1 = {-w:g} > -4 pi^2")
    k0 = int(math.floor(math.sqrt(w / FOUR_PI_SQ))) - 1
    # guard against floating-point wobble around the bracket boundaries
    while k0 > 0 and w < FOUR_PI_SQ * (k0 + 1) ** 2:
        k0 -= 1
    while w >= FOUR_PI_SQ * (k0 + 2) ** 2:
        k0 += 1
    N_S = w - FOUR_PI_SQ * k0**2
    N_F = w - FOUR_PI_SQ * (k0 + 1) ** 2
    eta = omega_A / zeta + 0.5 * (N_S + N_F)
    return SpectralSplit(zeta=zeta, omega_A=omega_A, k0=k0, N_S=N_S, N_F=N_F, eta=eta)


def split_for_k0(k0: int, omega_A: float, position: float = 1e-9) -> SpectralSplit:
    """Inverse of split_cutoff: pick the zeta that lands a desired cutoff.

    ``position`` in [0, 1) places -(zeta^{-1} omega_A + 1) inside the bracket
    [4 pi^2 (k0+1)^2, 4 pi^2 (k0+2)^2); the default sits just inside the
    upper boundary (largest admissible zeta), where N_F is near 0.
    """
    if k0 < 0:
        raise ValueError("k0 must be nonnegative")
    if not (0.0 <= position < 1.0):
        raise ValueError("position must lie in [0, 1)")
    lo = FOUR_PI_SQ * (k0 + 1) ** 2
    hi = FOUR_PI_SQ * (k0 + 2) ** 2
    w = lo + position * (hi - lo) + (0.0 if position > 0 else 1e-9 * lo)
    zeta = -omega_A / (w + 1.0)
    split = split_cutoff(zeta, omega_A)
    if split.k0 != k0:
        raise AssertionError("split_for_k0 round-trip failed")
    return split


def project_slow(field: FourierField, split: SpectralSplit | int) -> FourierField:
    """Zero all modes |k| > k0."""
    k0 = split if isinstance(split, int) else split.k0
    c = field.coef.copy()
    mask = np.abs(field.modes) > k0
    c[mask] = 0.0
    return FourierField(field.resolution, c, field.real)


def project_fast(field: FourierField, split: SpectralSplit | int) -> FourierField:
    """Zero all modes |k| <= k0."""
    k0 = split if isinstance(split, int) else split.k0
    c = field.coef.copy()
    mask = np.abs(field.modes) <= k0
    c[mask] = 0.0
    return FourierField(field.resolution, c, field.real)


# ---------------------------------------------------------------------------
# convolution algebra
# ---------------------------------------------------------------------------

def convolve(a: FourierField, b: FourierField, resolution: int | None = None,
             method: str = "direct") -> FourierField:
    """Exact linear convolution c_k = sum_{j+l=k} a_j b_l.

    Computed on the full support |k| <= K_a + K_b (zero padded, no aliasing),
    then truncated to ``resolution`` when given.  The FFT path must agree
    with the direct path to 1e-12 and exists only as an acceleration.
    """
    if method == "direct":
        full = np.convolve(a.coef, b.coef)
    elif method == "fft":
        n = len(a.coef) + len(b.coef) - 1
        nfft = 1 << (n - 1).bit_length()
        full = np.fft.ifft(np.fft.fft(a.coef, nfft) * np.fft.fft(b.coef, nfft))[:n]
    else:
        raise ValueError(f"unknown convolution method {method!r}")
    K = a.resolution + b.resolution
    out = FourierField(K, full, a.real and b.real)
    if resolution is not None and resolution != K:
        out = out.with_resolution(resolution)
    return out


def field_power(base: FourierField, power: int, method: str = "direct") -> FourierField:
    """base convolved with itself ``power`` times; power 0 is e_0."""
    if power < 0:
        raise ValueError("power must be nonnegative")
    if power == 0:
        return FourierField.basis(0, 0)
    out = base
    for _ in range(power - 1):
        out = convolve(out, base, method=method)
    return out
