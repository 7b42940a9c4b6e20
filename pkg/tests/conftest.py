import numpy as np
import pytest

from slowmanifold import (AssumptionConstants, FastSlowSystem, FourierField,
                          PolynomialNonlinearity, shifted_laplacian, y_norm)


EXAMPLE_CONSTANTS = AssumptionConstants(
    L_f=0.2, L_g=0.0, C_A=1.0, C_B=1.0, M_A=1.0, M_B=1.0,
    omega_A=-0.9, omega_B=-0.9, omega_f=-0.69,
    gamma_X=1.0, delta_X=1.0, delta_Y=1.0, ball_radius=1.0)


def make_example_system(epsilon=1e-3, resolution=8, L_g=0.0, g_coef=0.0,
                        gate_c=0.99) -> FastSlowSystem:
    """The quadratic worked system eps u' = (D-1)u + v^2, v' = (D-1)v,
    optionally with a small quadratic slow coupling g = g_coef * v^2."""
    g = PolynomialNonlinearity(((g_coef, 0, 2),)) if g_coef else PolynomialNonlinearity.zero()
    cons = EXAMPLE_CONSTANTS.with_updates(L_g=L_g) if L_g else EXAMPLE_CONSTANTS
    return FastSlowSystem(
        op_A=shifted_laplacian(1.0, "A"), op_B=shifted_laplacian(1.0, "B"),
        f=PolynomialNonlinearity(((1.0, 0, 2),)), g=g,
        epsilon=epsilon, resolution=resolution, constants=cons, gate_c=gate_c)


def random_field(rng, K, real=True, scale=1.0) -> FourierField:
    c = rng.standard_normal(2 * K + 1) + 1j * rng.standard_normal(2 * K + 1)
    return FourierField(K, scale * c, real=real)


def random_slow_field(rng, k0, n=1.0, norm=1.0) -> FourierField:
    """Reality-symmetric field on |k| <= k0 with ||.||_{Y_n} = norm."""
    c = np.zeros(2 * k0 + 1, dtype=np.complex128)
    for k in range(0, k0 + 1):
        z = rng.standard_normal() + (1j * rng.standard_normal() if k else 0.0)
        c[k0 + k] = z * (1.0 + k * k) ** (-(1.0 + n))
        c[k0 - k] = np.conj(c[k0 + k])
    f = FourierField(k0, c, real=True)
    return (norm / y_norm(f, n)) * f


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def example_system():
    return make_example_system()
