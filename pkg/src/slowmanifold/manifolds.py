"""Closed-form manifolds for the quadratic example, the general critical-
manifold solver, and the small-divisor resonance analysis.

For the worked system

    eps u' = (Delta - 1) u + v^2,    v' = (Delta - 1) v,

truncated to slow modes |k| <= k0, the invariant graph and the critical graph
have the explicit coefficients

    u_k      = sum_{j+l=k, |j|,|l|<=k0} v_j v_l / (1 + 4 pi^2 k^2 - eps (2 + 4 pi^2 (j^2 + l^2)))
    u_k(0+)  = sum_{j+l=k, |j|,|l|<=k0} v_j v_l / (1 + 4 pi^2 k^2),

for |k| <= 2 k0.  The denominators vanish exactly on a finite set of epsilon
values enumerated by :func:`resonance_set`; membership and ordering of that
set are decided in exact arithmetic (4 pi^2 is treated symbolically).
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import NoConvergence, NotResonant, ResonantEpsilon
from .spectral import FOUR_PI_SQ, FourierField, x_norm
from .system import FastSlowSystem

# Rational bracketing of q = 4 pi^2, tight to ~1e-25.  Exact sign decisions
# about integer-coefficient expressions alpha * q + beta only need q to this
# accuracy; an assertion guards the (never observed) undecidable case.
_Q_LO = Fraction("39.478417604357434475337963")
_Q_HI = Fraction("39.478417604357434475337965")


def _a(k: float) -> float:
    return 1.0 + FOUR_PI_SQ * k * k


# ---------------------------------------------------------------------------
# explicit graphs
# ---------------------------------------------------------------------------

def _pair_sum(v: FourierField, k0: int, denominator: Callable[[int, int, int], float],
              guard: float | None, out_K: int) -> FourierField:
    """sum over j+l=k, |j|,|l| <= k0 of v_j v_l / denominator(k, j, l)."""
    coef = np.zeros(2 * out_K + 1, dtype=np.complex128)
    offenders = []
    for k in range(-min(out_K, 2 * k0), min(out_K, 2 * k0) + 1):
        acc = 0.0 + 0.0j
        for j in range(max(-k0, k - k0), min(k0, k + k0) + 1):
            l = k - j
            den = denominator(k, j, l)
            if guard is not None and abs(den) / _a(k) < guard:
                offenders.append((j, l, k))
                continue
            acc += v.get(j) * v.get(l) / den
        coef[out_K + k] = acc
    if offenders:
        raise ResonantEpsilon(
            f"denominator below guard {guard:g} at triples {offenders}", offenders)
    return FourierField(out_K, coef, v.real)


def critical_manifold_explicit(v: FourierField, k0: int) -> FourierField:
    """Critical graph h0 of the quadratic example, supported on |k| <= 2 k0."""
    if v.support_radius() > k0:
        raise ValueError("slow field has content beyond |k| = k0")
    return _pair_sum(v, k0, lambda k, j, l: _a(k), None, 2 * k0)


def galerkin_manifold_explicit(v: FourierField, epsilon: float, k0: int,
                               guard: float = 1e-9) -> FourierField:
    """Explicit invariant graph of the truncated quadratic example.

    A denominator counts as singular when |den| < guard * (1 + 4 pi^2 k^2);
    then ResonantEpsilon carries the offending (j, l, k) triples.  At eps = 0
    this reduces to the critical graph.
    """
    if v.support_radius() > k0:
        raise ValueError("slow field has content beyond |k| = k0")

    def den(k, j, l):
        return _a(k) - epsilon * (2.0 + FOUR_PI_SQ * (j * j + l * l))

    return _pair_sum(v, k0, den, guard, 2 * k0)


def critical_manifold_solve(sys: FastSlowSystem, v: FourierField, tol: float = 1e-12,
                            n: float = 1.0, max_iter: int = 200,
                            damping: float = 1.0) -> FourierField:
    """Picard fixed point of u -> -A^{-1} f(u, v).

    Contraction is guaranteed by the invertibility condition on the declared
    constants; the residual ||A u + f(u, v)||_{X_n} is driven below tol.
    """
    K = sys.resolution
    u = FourierField.zeros(K, real=v.real)
    prev_disp = math.inf
    for _ in range(max_iter):
        fu = sys.eval_f(u, v, K)
        u_next = (-1.0) * sys.op_A.solve(fu)
        disp = x_norm(u_next - u, n)
        residual = x_norm(sys.op_A.apply(u_next) + sys.eval_f(u_next, v, K), n)
        if damping != 1.0:
            u_next = (1.0 - damping) * u + damping * u_next
        u = u_next
        if residual < tol:
            return u
        if disp > prev_disp * (1.0 + 1e-12) and disp > tol:
            raise NoConvergence(
                f"critical-manifold iteration not contracting (displacement {disp:g})")
        prev_disp = disp
    raise NoConvergence(f"critical-manifold residual above tol after {max_iter} iterations")


# ---------------------------------------------------------------------------
# resonance analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResonanceEntry:
    """One resonance value eps = (1 + k^2 q) / (2 + s q), q = 4 pi^2.

    ``key`` is the exact label (k^2, s = j^2 + l^2); two triples give the
    same epsilon iff they share the key (checked in exact arithmetic).
    """

    epsilon: float
    key: tuple[int, int]
    witnesses: tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class ResonanceSet:
    k0: int
    entries: tuple[ResonanceEntry, ...]

    def values(self) -> list[float]:
        return [e.epsilon for e in self.entries]

    def min_entry(self) -> ResonanceEntry:
        return self.entries[0]

    def contains_value(self, epsilon: float, rtol: float = 1e-12) -> bool:
        return any(abs(e.epsilon - epsilon) <= rtol * max(1.0, e.epsilon)
                   for e in self.entries)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epsilon", "j", "l", "k"])
            for e in self.entries:
                for (j, l, k) in e.witnesses:
                    w.writerow([repr(e.epsilon), j, l, k])


def _eps_value(key: tuple[int, int]) -> float:
    k2, s = key
    return (1.0 + k2 * FOUR_PI_SQ) / (2.0 + s * FOUR_PI_SQ)


def resonance_key_lt(key_a: tuple[int, int], key_b: tuple[int, int]) -> bool:
    """Exact comparison of two resonance values.

    eps_a < eps_b  iff  (1 + k_a^2 q)(2 + s_b q) < (1 + k_b^2 q)(2 + s_a q)
    iff  alpha q + beta < 0 with integer alpha, beta (after dividing by q > 0),
    decided using the rational bracketing of q.
    """
    (ka2, sa), (kb2, sb) = key_a, key_b
    alpha = ka2 * sb - kb2 * sa
    beta = 2 * (ka2 - kb2) + (sb - sa)
    if alpha == 0:
        return beta < 0
    lo = alpha * _Q_LO + beta
    hi = alpha * _Q_HI + beta
    if (lo < 0) != (hi < 0):
        raise AssertionError("resonance comparison undecidable at current q precision")
    return lo < 0


def resonance_set(k0: int, epsilon_range: tuple[float, float] = (0.0, 1.0)) -> ResonanceSet:
    """All eps in (0,1) where a manifold denominator vanishes, with witnesses.

    Enumerates triples (j, l, k = j + l) with |j|, |l| <= k0, |k| <= k0.
    Membership in (0, 1) is exact: eps < 1 iff s >= k^2 (with q > 1), eps > 0
    always.  Values are deduplicated by the exact key (k^2, s) and sorted
    ascending by exact comparison.  A sub-range of (0, 1) filters on floats.
    """
    if k0 < 0:
        raise ValueError("k0 must be nonnegative")
    groups: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    for j in range(-k0, k0 + 1):
        for l in range(-k0, k0 + 1):
            k = j + l
            if abs(k) > k0:
                continue
            s = j * j + l * l
            if s < k * k:  # eps >= 1, outside (0, 1)
                continue
            groups.setdefault((k * k, s), []).append((j, l, k))
    lo, hi = epsilon_range
    entries = []
    for key, wit in groups.items():
        val = _eps_value(key)
        if lo < val < hi or (lo, hi) == (0.0, 1.0):
            entries.append(ResonanceEntry(val, key, tuple(sorted(wit))))
    entries.sort(key=functools.cmp_to_key(
        lambda a, b: -1 if resonance_key_lt(a.key, b.key) else 1))
    return ResonanceSet(k0, tuple(entries))


def resonance_condition(epsilon: float, k0: int) -> float:
    """Condition diagnostic: min |denominator| / (1 + 4 pi^2 k^2) over all
    contributing triples.  Graph coefficients blow up like its inverse as
    eps approaches the resonance set."""
    worst = math.inf
    for j in range(-k0, k0 + 1):
        for l in range(-k0, k0 + 1):
            k = j + l
            if abs(k) > 2 * k0:
                continue
            den = _a(k) - epsilon * (2.0 + FOUR_PI_SQ * (j * j + l * l))
            worst = min(worst, abs(den) / _a(k))
    return worst


def safe_epsilon_bound(k0: int) -> float:
    """1 / (2 + 8 pi^2 k0^2); no resonance value lies strictly below it."""
    if k0 < 0:
        raise ValueError("k0 must be nonnegative")
    return 1.0 / (2.0 + 2.0 * FOUR_PI_SQ * k0 * k0)


def safe_epsilon_key(k0: int) -> tuple[int, int]:
    """Exact label of the safe bound: the (j, l, k) = (k0, -k0, 0) resonance."""
    return (0, 2 * k0 * k0)


def resonant_constraint_check(v: FourierField, epsilon: float, k0: int,
                              match_rtol: float = 1e-12,
                              sum_tol: float = 1e-10) -> dict[int, bool]:
    """For resonant eps, check per output mode k whether the resonant pair sum
    sum_{(j,l) in L_{k0,k}} v_j v_l vanishes (the admissible-slow-data test).

    Raises NotResonant when eps matches no resonance value of this cutoff.
    """
    rset = resonance_set(k0)
    matched = [e for e in rset.entries
               if abs(e.epsilon - epsilon) <= match_rtol * max(1.0, e.epsilon)]
    if not matched:
        raise NotResonant(f"epsilon = {epsilon!r} is not a resonance value for k0 = {k0}")
    pairs_by_k: dict[int, list[tuple[int, int]]] = {k: [] for k in range(-k0, k0 + 1)}
    for e in matched:
        for (j, l, k) in e.witnesses:
            pairs_by_k[k].append((j, l))
    scale = max(1.0, float(np.max(np.abs(v.coef))) ** 2)
    result = {}
    for k in range(-k0, k0 + 1):
        s = sum(v.get(j) * v.get(l) for (j, l) in pairs_by_k[k])
        result[k] = bool(abs(s) <= sum_tol * scale)
    return result


# ---------------------------------------------------------------------------
# graph objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifoldGraph:
    """Evaluator v_{0,S} -> (u component, fast-v component) of one graph kind.

    Kinds: ``critical`` (explicit or Picard), ``galerkin_explicit``,
    ``galerkin_lp`` and ``direct_lp`` (built in the lyapunov_perron module).
    """

    kind: str
    _evaluate: Callable[[FourierField], tuple[FourierField, FourierField]]
    params: dict

    def evaluate(self, v0S: FourierField) -> tuple[FourierField, FourierField]:
        return self._evaluate(v0S)

    def evaluate_u(self, v0S: FourierField) -> FourierField:
        return self.evaluate(v0S)[0]

    @staticmethod
    def critical_explicit(k0: int) -> "ManifoldGraph":
        def ev(v):
            u = critical_manifold_explicit(v, k0)
            return u, FourierField.zeros(u.resolution, real=v.real)
        return ManifoldGraph("critical", ev, {"k0": k0})

    @staticmethod
    def critical_solver(sys: FastSlowSystem, tol: float = 1e-12, n: float = 1.0) -> "ManifoldGraph":
        def ev(v):
            u = critical_manifold_solve(sys, v, tol=tol, n=n)
            return u, FourierField.zeros(u.resolution, real=v.real)
        return ManifoldGraph("critical", ev, {"tol": tol, "n": n})

    @staticmethod
    def galerkin_explicit(epsilon: float, k0: int, guard: float = 1e-9) -> "ManifoldGraph":
        def ev(v):
            u = galerkin_manifold_explicit(v, epsilon, k0, guard=guard)
            return u, FourierField.zeros(u.resolution, real=v.real)
        return ManifoldGraph("galerkin_explicit", ev, {"epsilon": epsilon, "k0": k0})
