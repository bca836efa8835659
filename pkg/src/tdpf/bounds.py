"""Evaluation of the explicit product-formula error bounds.

All bounds reduce to norms of composite objects built from the Hamiltonian
terms by two graded operations: commutation with a term curve and time
differentiation.  Composites are materialized as matrices at each probe time
(derivatives propagate through commutators by the Leibniz rule) and their
exact spectral norms are summed; no symbolic norm inequalities are applied
below the level of the published bound formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.integrate import dblquad, quad

from .errors import InvalidInputError, OutOfRegimeError, UnsupportedOrderError
from .formulas import EXACT, StagePlan
from .linalg import spectral_norm
from .models import Hamiltonian, OperatorCurve

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# Graded operator curves: evaluable composites with a derivative budget
# ---------------------------------------------------------------------------

class GradedOperatorCurve:
    """A matrix-valued function of time supporting nested commutators and
    derivative shifts, with explicit bookkeeping of the remaining derivative
    budget."""

    budget: int
    is_zero: bool

    def value(self, tau: float, q: int = 0) -> np.ndarray:
        raise NotImplementedError

    def apply_ad(self, curve: OperatorCurve) -> "GradedOperatorCurve":
        """[curve(t), self(t)] as a new graded curve (budget unchanged)."""
        return _Ad(curve, self)

    def apply_dt(self, factor: complex = 1.0) -> "GradedOperatorCurve":
        """factor * d/dt self(t); consumes one unit of budget."""
        return _Dt(self, factor)

    def __add__(self, other: "GradedOperatorCurve") -> "GradedOperatorCurve":
        return _Sum([self, other])


class _Leaf(GradedOperatorCurve):
    def __init__(self, curve: OperatorCurve):
        self.curve = curve
        self.budget = curve.derivative_budget
        self.is_zero = curve.is_zero

    def value(self, tau, q=0):
        return self.curve.value(tau, q)


class _Ad(GradedOperatorCurve):
    def __init__(self, left: OperatorCurve, right: GradedOperatorCurve):
        self.left = left
        self.right = right
        self.budget = min(left.derivative_budget, right.budget)
        self.is_zero = left.is_zero or right.is_zero

    def value(self, tau, q=0):
        out = np.zeros((self.left.dim, self.left.dim), dtype=np.complex128)
        if self.is_zero:
            return out
        for r in range(q + 1):
            lv = self.left.value(tau, r)
            rv = self.right.value(tau, q - r)
            out += math.comb(q, r) * (lv @ rv - rv @ lv)
        return out


class _Dt(GradedOperatorCurve):
    def __init__(self, inner: GradedOperatorCurve, factor: complex):
        self.inner = inner
        self.factor = complex(factor)
        self.budget = inner.budget - 1
        self.is_zero = inner.is_zero or self.factor == 0.0

    def value(self, tau, q=0):
        return self.factor * self.inner.value(tau, q + 1)


class _Sum(GradedOperatorCurve):
    def __init__(self, parts):
        self.parts = [p for p in parts if not p.is_zero]
        self.budget = min((p.budget for p in self.parts), default=0)
        self.is_zero = not self.parts
        self._shape_src = parts[0]

    def value(self, tau, q=0):
        if self.is_zero:
            return np.zeros_like(self._shape_src.value(tau, 0))
        out = self.parts[0].value(tau, q)
        for p in self.parts[1:]:
            out = out + p.value(tau, q)
        return out


def graded(curve: OperatorCurve) -> GradedOperatorCurve:
    return _Leaf(curve)


# ---------------------------------------------------------------------------
# Commutator factors
# ---------------------------------------------------------------------------

def _alpha_com_value(ham: Hamiltonian, order: int, tau: float,
                     deriv_coefficient: float) -> float:
    """Sum over operator sequences of || D_{g_p} ... D_{g_1} H_{g_seed} ||,
    D_g = ad_{H_g} for g <= Gamma and deriv_coefficient * d/dt for g = Gamma+1."""
    if order < 1:
        raise InvalidInputError("order must be >= 1")
    p = order - 1
    n = ham.n_terms
    norms = []
    for seed in range(1, n + 1):
        seed_curve = ham.term(seed)
        if seed_curve.is_zero:
            continue
        for seq in product(range(1, n + 2), repeat=p):
            # sequences touching an identically-zero term vanish
            if any(g <= n and ham.term(g).is_zero for g in seq):
                continue
            node: GradedOperatorCurve = _Leaf(seed_curve)
            for g in seq:
                if g <= n:
                    node = node.apply_ad(ham.term(g))
                else:
                    node = node.apply_dt(deriv_coefficient)
            norms.append(spectral_norm(node.value(tau)))
    return math.fsum(norms)


def alpha_com(ham: Hamiltonian, order: int, tau: float) -> float:
    """Commutator-and-derivative factor of the given order (= p + 1) at time
    tau; the derivative operator carries the weight 2 Gamma."""
    return _alpha_com_value(ham, order, tau, 2.0 * ham.n_terms)


def bar_alpha_com(ham: Hamiltonian, order: int, tau: float) -> float:
    """Variant of alpha_com whose derivative operator carries weight 1; it
    governs the instantaneous-Hamiltonian formula family."""
    return _alpha_com_value(ham, order, tau, 1.0)


# ---------------------------------------------------------------------------
# Reports and the grid maximizer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    bound_kind: str
    p: int
    t: float
    value: float
    tau_argmax: float | None = None
    term_count: int | None = None
    grid_size: int | None = None
    extra: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value

    def to_json(self) -> dict:
        out = {"bound_kind": self.bound_kind, "p": self.p, "t": self.t,
               "value": self.value, "tau_argmax": self.tau_argmax,
               "term_count": self.term_count, "grid_size": self.grid_size}
        out.update(self.extra)
        return out


def grid_max(fn, lo: float, hi: float, n_points: int = 65,
             refine_iters: int = 30) -> tuple[float, float]:
    """(max, argmax) of fn over [lo, hi]: uniform grid plus golden-section
    refinement around the grid argmax.  A sampled maximum is a lower bound on
    the true one, which reports flag via the grid_size field."""
    if hi < lo:
        raise InvalidInputError("empty maximization interval")
    if hi == lo:
        return fn(lo), lo
    xs = np.linspace(lo, hi, n_points)
    vals = [fn(x) for x in xs]
    k = int(np.argmax(vals))
    best_val, best_x = vals[k], float(xs[k])
    a = float(xs[max(k - 1, 0)])
    b = float(xs[min(k + 1, n_points - 1)])
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(refine_iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fn(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fn(x1)
        if f1 > best_val:
            best_val, best_x = f1, x1
        if f2 > best_val:
            best_val, best_x = f2, x2
    return best_val, best_x


# ---------------------------------------------------------------------------
# Error bounds
# ---------------------------------------------------------------------------

def corollary_bound(plan: StagePlan, ham: Hamiltonian, t: float,
                    grid_points: int = 65) -> BoundReport:
    """3 V^(p+1) max_tau alpha_com^(p+1)(tau) t^(p+1) over tau in [0, t]."""
    p = plan.order
    order = p + 1
    best, arg = grid_max(lambda tau: alpha_com(ham, order, tau), 0.0, t, grid_points)
    v = plan.n_layers
    value = 3.0 * v**order * best * t**order
    count = (ham.n_terms + 1) ** p * ham.n_terms
    return BoundReport("corollary", p, t, value, tau_argmax=arg,
                       term_count=count, grid_size=grid_points,
                       extra={"alpha_com_max": best, "layers": v})


def _tight_sum(plan: StagePlan, ham: Hamiltonian, tau: float,
               odd_weights: dict[int, float], even_weight: float,
               seed_counts: dict[int, int]) -> float:
    """Sum over operator-type sequences, with multiplicities folded in.

    The literal sum runs over stage indices k'_1..k'_p in {1..2K-1}; sequences
    sharing the same operator types have identical norms, so the stage
    weights |alpha~| factor into per-type weight sums.
    """
    p = plan.order
    n = ham.n_terms
    types = list(range(1, n + 1)) + ["dt"]
    total = []
    for seed in range(1, n + 1):
        if seed_counts[seed] == 0 or ham.term(seed).is_zero:
            continue
        for seq in product(types, repeat=p):
            weight = float(seed_counts[seed])
            node: GradedOperatorCurve = _Leaf(ham.term(seed))
            for ty in seq:
                if ty == "dt":
                    weight *= even_weight
                    node = node.apply_dt(1j)
                else:
                    weight *= odd_weights[ty]
                    node = node.apply_ad(ham.term(ty)) + node.apply_dt(1j)
            if weight == 0.0 or node.is_zero:
                continue
            total.append(weight * spectral_norm(node.value(tau)))
    return math.fsum(total)


def tight_bound(plan: StagePlan, ham: Hamiltonian, t: float,
                grid_points: int = 65) -> BoundReport:
    """Stage-resolved error bound 3 t^(p+1) max_tau sum_k sum_{k'_1..k'_p}
    ||prod |alpha~| D_{k'} H_{gamma_k}||, for exact-segment plans of order <= 2.

    Odd stage slots act as ad_{H_gamma} + i d/dt with weight |alpha_k|; even
    slots act as i d/dt with weight |beta_{k+1} - beta_k - alpha_k|.
    """
    p = plan.order
    if p > 2:
        raise UnsupportedOrderError(
            f"tight bound is enumerated only for p <= 2 (got p={p}); "
            "use corollary_bound for higher orders")
    if plan.family != EXACT:
        raise InvalidInputError("tight bound applies to exact-segment plans")
    if plan.n_terms != ham.n_terms:
        raise InvalidInputError("plan/Hamiltonian term count mismatch")
    stages = plan.stages
    k_count = plan.n_stages
    odd_weights = {g: 0.0 for g in range(1, ham.n_terms + 1)}
    seed_counts = {g: 0 for g in range(1, ham.n_terms + 1)}
    for st in stages:
        odd_weights[st.gamma] += abs(st.alpha)
        seed_counts[st.gamma] += 1
    even_weight = sum(abs(stages[k + 1].beta - stages[k].beta - stages[k].alpha)
                      for k in range(k_count - 1))
    best, arg = grid_max(
        lambda tau: _tight_sum(plan, ham, tau, odd_weights, even_weight, seed_counts),
        0.0, t, grid_points)
    value = 3.0 * t**(p + 1) * best
    return BoundReport("tight", p, t, value, tau_argmax=arg,
                       term_count=k_count * (2 * k_count - 1) ** p,
                       grid_size=grid_points, extra={"stage_sum_max": best})


def huyghebaert_bound(ham: Hamiltonian, t: float, epsabs: float = 1e-8) -> BoundReport:
    """First-order two-term bound: the ordered double integral of
    ||[H_1(t_2), H_2(t_1)]|| over 0 <= t_1 <= t_2 <= t.

    The first-order formula applies term 1 first, so the conjugation picture
    puts the later time in H_1; the transposed orientation is not a bound
    (it is numerically violated on driven models).
    """
    if ham.n_terms != 2:
        raise InvalidInputError("first-order bound needs exactly two terms")
    h1, h2 = ham.term(1), ham.term(2)

    def integrand(t1, t2):
        a, b = h1.value(t2), h2.value(t1)
        return spectral_norm(a @ b - b @ a)

    value, _err = dblquad(integrand, 0.0, t, 0.0, lambda t2: t2, epsabs=epsabs)
    return BoundReport("huyghebaert", 1, t, float(value),
                       extra={"quadrature_epsabs": epsabs})


def nonunitary_bound(plan: StagePlan, ham: Hamiltonian, t: float,
                     grid_points: int = 65, epsabs: float = 1e-8) -> BoundReport:
    """Commutator bound with the exponential amplification factor
    exp(4 V int_0^t sum_g ||Im H_g(tau)|| dtau) for non-Hermitian terms."""
    p = plan.order
    order = p + 1
    best, arg = grid_max(lambda tau: alpha_com(ham, order, tau), 0.0, t, grid_points)

    def im_norm(tau):
        total = 0.0
        for term in ham.terms:
            m = term.value(tau)
            total += spectral_norm((m - m.conj().T) / 2j)
        return total

    integral, _err = quad(im_norm, 0.0, t, epsabs=epsabs, limit=200)
    factor = math.exp(4.0 * plan.n_layers * integral)
    value = 3.0 * best * t**order * factor
    return BoundReport("nonunitary", p, t, value, tau_argmax=arg,
                       grid_size=grid_points,
                       extra={"alpha_com_max": best, "amplification": factor,
                              "im_integral": integral})


def mpf_bound_value(alpha_t: float, n_products: int, c_norm: float) -> float:
    """sqrt2 e^2 ||c||_1 (sqrt2 x)^(2J+1) with x = alpha_com(t) * t."""
    return math.sqrt(2.0) * math.e**2 * c_norm * (math.sqrt(2.0) * alpha_t) ** (2 * n_products + 1)


def _alpha_com_sup(ham: Hamiltonian, orders, lo: float, hi: float,
                   grid_points: int) -> float:
    """sup over tau in [lo, hi] and the given orders q of (alpha_com^q)^(1/q)."""
    best = 0.0
    for q in orders:
        m, _ = grid_max(lambda tau: alpha_com(ham, q, tau), lo, hi, grid_points)
        best = max(best, m ** (1.0 / q))
    return best


def mpf_bound(ham: Hamiltonian, t: float, n_products: int, c_norm: float,
              extended: Hamiltonian | None = None,
              grid_points: int = 33) -> BoundReport:
    """Multi-product error bound sqrt2 e^2 ||c||_1 (sqrt2 alpha_com(t) t)^(2J+1).

    The factor alpha_com(t) is the supremum of (alpha_com^q)^(1/q) over
    tau in [0, t] and odd q <= 2J+1; the small-time condition alpha_com t <
    1/2 is enforced on it.  The derivation's convergence radius references
    the same supremum over a full period of the periodic extension; that
    value explodes for bump-glued extensions of short windows (their high
    derivatives are not analytic-bounded), so it is reported alongside
    rather than enforced.
    """
    if n_products < 1:
        raise InvalidInputError("J must be >= 1")
    orders = list(range(3, 2 * n_products + 2, 2))
    alpha_local = _alpha_com_sup(ham, orders, 0.0, t, grid_points)
    if extended is not None:
        period = extended.metadata.get("extension", {}).get("period", 2.0 * t)
        alpha_global = _alpha_com_sup(extended, orders, 0.0, period, grid_points)
    else:
        alpha_global = alpha_local
    if alpha_local * t >= 0.5:
        raise OutOfRegimeError(
            f"alpha_com * t = {alpha_local * t:.4f} >= 1/2: multi-product "
            "bound is outside its validity regime")
    value = mpf_bound_value(alpha_local * t, n_products, c_norm)
    return BoundReport("mpf", 2 * n_products + 1, t, value, grid_size=grid_points,
                       extra={"J": n_products, "c_norm": c_norm,
                              "alpha_local": alpha_local, "alpha_global": alpha_global})
