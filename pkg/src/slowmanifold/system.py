"""Fast-slow problem definition and the contraction bookkeeping.

A :class:`FastSlowSystem` bundles the two diagonal operators, the polynomial
nonlinearities, the timescale separation epsilon and the user-declared
assumption constants.  The constants are validated for mutual consistency
(the omega_f relation and the resolvent invertibility condition); they are
declarations about a working ball, not quantities estimated from the
nonlinearity.

The contraction estimate gating the Lyapunov-Perron solve is

    2^gX L_f C_A Gamma(gX) / (2 (eps/zeta - 1) omega_A + eps (N_S + N_F))^gX
    + 2^dY L_g C_B Gamma(dY) / (N_S - N_F)^dY
    + 2 zeta^{dY - 1} L_g M_B / (N_S - N_F)   < 1,

valid in the timescale regime 0 < eps < c (omega_f / omega_A) zeta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import NonpositiveGap, TimescaleOrderViolated
from .spectral import DiagonalOperator, FourierField, SpectralSplit, convolve, field_power


# ---------------------------------------------------------------------------
# polynomial nonlinearities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolynomialNonlinearity:
    """Sum of monomials coefficient * u^p * v^q, evaluated spectrally.

    The normalization f(0,0) = 0 is enforced: constant monomials (p = q = 0)
    are rejected.
    """

    monomials: tuple[tuple[float, int, int], ...] = ()

    def __post_init__(self):
        cleaned = []
        for coef, p, q in self.monomials:
            p, q = int(p), int(q)
            if p < 0 or q < 0:
                raise ValueError("monomial powers must be nonnegative")
            if p == 0 and q == 0 and coef != 0.0:
                raise ValueError("constant monomials violate the f(0,0)=0 normalization")
            if coef != 0.0:
                cleaned.append((float(coef), p, q))
        object.__setattr__(self, "monomials", tuple(cleaned))

    @staticmethod
    def zero() -> "PolynomialNonlinearity":
        return PolynomialNonlinearity(())

    @property
    def is_zero(self) -> bool:
        return len(self.monomials) == 0

    @property
    def degree_u(self) -> int:
        return max((p for _, p, _ in self.monomials), default=0)

    @property
    def degree_v(self) -> int:
        return max((q for _, _, q in self.monomials), default=0)

    def depends_on_u(self) -> bool:
        return any(p > 0 for _, p, _ in self.monomials)

    def growth_rate(self, rate_u: float, rate_v: float) -> float:
        """Max backward-in-time exponential growth rate of monomial samples."""
        return max((p * rate_u + q * rate_v for _, p, q in self.monomials), default=0.0)


def evaluate_nonlinearity(nl: PolynomialNonlinearity, u: FourierField, v: FourierField,
                          resolution: int | None = None) -> FourierField:
    """Evaluate sum coef * u^p * v^q by exact convolution powers.

    Powers are formed on their full support and only the final sum is
    truncated to ``resolution`` (defaults to max input resolution).
    """
    K_out = resolution if resolution is not None else max(u.resolution, v.resolution)
    out = FourierField.zeros(K_out, real=u.real and v.real)
    for coef, p, q in nl.monomials:
        term = field_power(u, p) if p > 0 else None
        if q > 0:
            vq = field_power(v, q)
            term = vq if term is None else convolve(term, vq)
        if term is None:  # p == q == 0 cannot happen (normalization)
            continue
        out = out + coef * term.with_resolution(K_out)
    return out


# ---------------------------------------------------------------------------
# assumption constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionConstants:
    """User-declared semigroup and Lipschitz constants.

    ``ball_radius`` documents the working ball in Y_n on which L_f, L_g are
    declared valid; it is carried for bookkeeping and sampling, not derived.
    """

    L_f: float
    L_g: float
    C_A: float
    C_B: float
    M_A: float
    M_B: float
    omega_A: float
    omega_B: float
    omega_f: float
    gamma_X: float = 1.0
    delta_X: float = 1.0
    delta_Y: float = 1.0
    ball_radius: float = 1.0

    def validate(self) -> None:
        if not (0.0 < self.gamma_X <= 1.0):
            raise ValueError("gamma_X must lie in (0, 1]")
        if not (1.0 - self.gamma_X <= self.delta_X <= 1.0):
            raise ValueError("delta_X must lie in [1 - gamma_X, 1]")
        if not (0.0 < self.delta_Y <= 1.0):
            raise ValueError("delta_Y must lie in (0, 1]")
        if self.omega_A >= 0.0:
            raise ValueError("omega_A must be negative")
        if self.omega_f >= 0.0:
            raise ValueError("omega_f must be negative")
        if min(self.L_f, self.C_A, self.C_B, self.M_A, self.M_B) <= 0.0 or self.L_g < 0.0:
            raise ValueError("semigroup/Lipschitz constants must be positive (L_g >= 0)")
        if self.gamma_X < 1.0:
            g = self.gamma_X
            ref = self.omega_A + (2.0 * self.C_A * self.L_f) ** (1.0 / g) * (1.0 / g) ** ((1.0 - g) / g)
            if abs(self.omega_f - ref) > 1e-9 * max(1.0, abs(ref)):
                raise ValueError(
                    f"omega_f = {self.omega_f:g} inconsistent with the gamma_X < 1 formula value {ref:g}")
        else:
            if not self.omega_f > self.omega_A + self.C_A * self.L_f:
                raise ValueError("omega_f must exceed omega_A + C_A L_f when gamma_X = 1")

    def with_updates(self, **kwargs) -> "AssumptionConstants":
        return replace(self, **kwargs)


def omega_f_default(constants_like: dict) -> float:
    """The gamma_X < 1 formula value of omega_f, or a midpoint choice at gamma_X = 1."""
    g = constants_like.get("gamma_X", 1.0)
    omega_A = constants_like["omega_A"]
    CA, Lf = constants_like["C_A"], constants_like["L_f"]
    if g < 1.0:
        return omega_A + (2.0 * CA * Lf) ** (1.0 / g) * (1.0 / g) ** ((1.0 - g) / g)
    return 0.5 * (omega_A + CA * Lf)  # halfway between the floor and 0


def check_invertibility(constants: AssumptionConstants, op_A: DiagonalOperator,
                        max_mode: int = 4096) -> float:
    """L_f times the larger of the two declared resolvent norms; must be < 1.

    The norms are computed from the Fourier multipliers on the X scale
    (X_alpha = H^{2 alpha}): B(X_{gamma_X}, X_1) and B(X_{delta_X - 1}, X_{delta_X}).
    """
    r1 = op_A.resolvent_norm(2.0 * constants.gamma_X, 2.0, max_mode)
    r2 = op_A.resolvent_norm(2.0 * (constants.delta_X - 1.0), 2.0 * constants.delta_X, max_mode)
    value = constants.L_f * max(r1, r2)
    if not value < 1.0:
        raise ValueError(
            f"invertibility condition fails: L_f * max resolvent norm = {value:g} >= 1")
    return value


# ---------------------------------------------------------------------------
# the fast-slow system
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FastSlowSystem:
    """eps u' = A u + f(u, v),  v' = B v + g(u, v) at resolution |k| <= K."""

    op_A: DiagonalOperator
    op_B: DiagonalOperator
    f: PolynomialNonlinearity
    g: PolynomialNonlinearity
    epsilon: float
    resolution: int
    constants: AssumptionConstants
    gate_c: float = 0.9  # the c in eps < c (omega_f/omega_A) zeta
    # override for the gate ratio omega_f/omega_A; set to realize the
    # inverted omega_A/omega_f convention instead
    gate_ratio: float | None = None

    def __post_init__(self):
        if self.resolution < 1:
            raise ValueError("resolution must be at least 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not (0.0 < self.gate_c < 1.0):
            raise ValueError("gate constant c must lie in (0, 1)")
        if self.gate_ratio is not None and self.gate_ratio <= 0:
            raise ValueError("gate_ratio override must be positive")
        self.constants.validate()

    def with_epsilon(self, epsilon: float) -> "FastSlowSystem":
        return replace(self, epsilon=epsilon)

    def eval_f(self, u: FourierField, v: FourierField,
               resolution: int | None = None) -> FourierField:
        return evaluate_nonlinearity(self.f, u, v, resolution or self.resolution)

    def eval_g(self, u: FourierField, v: FourierField,
               resolution: int | None = None) -> FourierField:
        return evaluate_nonlinearity(self.g, u, v, resolution or self.resolution)


def timescale_gate(epsilon: float, zeta: float, c: float,
                   constants: AssumptionConstants,
                   ratio: float | None = None) -> bool:
    """True iff eps < c (omega_f / omega_A) zeta (strict).

    ``ratio`` overrides omega_f/omega_A for the alternative gate convention.
    """
    if not (0.0 < c < 1.0):
        raise ValueError("c must lie in (0, 1)")
    return epsilon < gate_threshold(zeta, c, constants, ratio)


def gate_threshold(zeta: float, c: float, constants: AssumptionConstants,
                   ratio: float | None = None) -> float:
    """The epsilon threshold c (omega_f / omega_A) zeta."""
    r = (constants.omega_f / constants.omega_A) if ratio is None else ratio
    return c * r * zeta


def contraction_constant(sys: FastSlowSystem, split: SpectralSplit,
                         c: float | None = None) -> float:
    """Left side of the Lyapunov-Perron contraction estimate.

    Raises TimescaleOrderViolated outside the gated regime and NonpositiveGap
    when N_S <= N_F.
    """
    cc = sys.gate_c if c is None else c
    cons = sys.constants
    if not timescale_gate(sys.epsilon, split.zeta, cc, cons, sys.gate_ratio):
        raise TimescaleOrderViolated(
            f"epsilon = {sys.epsilon:g} >= c (omega_f/omega_A) zeta = "
            f"{gate_threshold(split.zeta, cc, cons, sys.gate_ratio):g}")
    if split.N_S <= split.N_F:
        raise NonpositiveGap(f"N_S = {split.N_S:g} <= N_F = {split.N_F:g}")
    eps, zeta = sys.epsilon, split.zeta
    gX, dY = cons.gamma_X, cons.delta_Y
    denom = 2.0 * (eps / zeta - 1.0) * cons.omega_A + eps * (split.N_S + split.N_F)
    term_A = 2.0**gX * cons.L_f * cons.C_A * math.gamma(gX) / denom**gX
    gap = split.N_S - split.N_F
    term_B = 2.0**dY * cons.L_g * cons.C_B * math.gamma(dY) / gap**dY
    term_M = 2.0 * zeta ** (dY - 1.0) * cons.L_g * cons.M_B / gap
    return term_A + term_B + term_M
