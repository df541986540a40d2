"""Numerical side of the gauged calculus: weighted derivatives, gauges, norms."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import EmptyEnsemble, InsufficientOrder
from ..field import (DEFAULT_DEALIAS, TAIL_TOL, Field, derivative, l2_norm, product,
                     require_resolved, sobolev_norms, sup_norms)
from ..model import ValidatedProblem, require_range
from .symbolic import GaugedExpr

DEFAULT_RHO = 10.0


def weighted_derivatives(v: Field, problem: ValidatedProblem, k: int, *,
                         tail_tol: float = TAIL_TOL, fraction: float = DEFAULT_DEALIAS) -> list:
    """[v_0, v_1, ..., v_k] with v_{j+1} = alpha(v) d_x v_j (spectral d_x, dealiased product)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > problem.k_max:
        raise InsufficientOrder(f"k = {k} exceeds k_max = {problem.k_max}")
    require_range(v, problem.J)
    require_resolved(v.values, tail_tol, fraction)
    alpha = problem.alpha(v.values)
    out = [v.values]
    for _ in range(k):
        out.append(product(alpha, derivative(out[-1], v.period), fraction))
    return [v.with_values(w) for w in out]


def weighted_derivative(v: Field, problem: ValidatedProblem, k: int, **kw) -> Field:
    return weighted_derivatives(v, problem, k, **kw)[-1]


def gauge_field(v: Field, problem: ValidatedProblem, k: int) -> Field:
    """phi_k(v) = alpha(v)^(-(k-1)/3)."""
    require_range(v, problem.J)
    return v.with_values(problem.alpha(v.values) ** (-(k - 1) / 3.0))


def gauge_ode_residual(v: Field, problem: ValidatedProblem, k: int) -> Field:
    """3 alpha^2 d_x(phi_k(v)) + phi_k(v) f_k with f_k = (k-1) alpha'(v) v_1."""
    phi = gauge_field(v, problem, k).values
    alpha, dalpha = problem.alpha_derivatives(v.values, 1)
    v1 = alpha * derivative(v.values, v.period)
    f_k = (k - 1) * dalpha * v1
    return v.with_values(3.0 * alpha ** 2 * derivative(phi, v.period) + phi * f_k)


def residual_scale(v: Field) -> float:
    """Size normalisation 1 + ||v||_{H^3} used for all reported residuals."""
    return 1.0 + float(sobolev_norms(v.values, v.period, 3)[-1])


def evaluate_expr(e: GaugedExpr, v: Field, problem: ValidatedProblem, *, tail_tol: float = TAIL_TOL) -> Field:
    """Evaluate a symbolic expression on a concrete field, pointwise."""
    require_range(v, problem.J)
    if not e.terms:
        return v.with_values(np.zeros(v.n))
    vj = weighted_derivatives(v, problem, e.max_var(), tail_tol=tail_tol)
    need_alpha = max((o for name, o in e.symbols() if name == "alpha"), default=0)
    alphas = problem.alpha_derivatives(v.values, need_alpha)
    cache = {}
    total = np.zeros(v.n)
    for x, word, c in e.terms:
        term = np.full(v.n, float(c))
        for (name, order), power in word:
            if name == "alpha":
                base = alphas[order]
            else:
                key = (name, order)
                if key not in cache:
                    cache[key] = problem.coefficient(name, order, v.values)
                base = cache[key]
            term = term * base ** power
        for j, expo in enumerate(x):
            if expo:
                term = term * vj[j + 1].values ** expo
        total += term
    return v.with_values(total)


# -- weighted norms ------------------------------------------------------------
@dataclass(frozen=True)
class NormLevel:
    k: int
    gauged_l2: float  # ||phi_k v_k||_{L2}
    constant: float  # C'_{k-1} (0 for k = 0)
    gauged: float  # |v|_k
    sobolev: float  # ||v||_{H^k}


@dataclass(frozen=True)
class NormLadder:
    levels: tuple

    def gauged(self, k: int) -> float:
        return self.levels[k].gauged

    def sobolev(self, k: int) -> float:
        return self.levels[k].sobolev

    def ratio(self, k: int) -> float:
        """|v|_k^2 / ||v||_{H^k}^2."""
        lvl = self.levels[k]
        return lvl.gauged ** 2 / lvl.sobolev ** 2


def weighted_norm(v: Field, problem: ValidatedProblem, s: int,
                  constants: Sequence[float] | None = None, *, tail_tol: float = TAIL_TOL) -> NormLadder:
    """|v|_0 = ||v||_{L2}, |v|_k^2 = ||phi_k v_k||^2 + C'_{k-1} |v|_{k-1}^2."""
    if constants is None:
        constants = [1.0] * s
    if len(constants) < s:
        raise ValueError(f"need {s} constants C'_0..C'_{s - 1}, got {len(constants)}")
    vj = weighted_derivatives(v, problem, s, tail_tol=tail_tol)
    alpha = problem.alpha(v.values)
    sob = sobolev_norms(v.values, v.period, s)
    l0 = l2_norm(v.values, v.period)
    levels = [NormLevel(0, l0, 0.0, l0, float(sob[0]))]
    sq = l0 ** 2
    for k in range(1, s + 1):
        g = l2_norm(alpha ** (-(k - 1) / 3.0) * vj[k].values, v.period)
        c = float(constants[k - 1])
        sq = g ** 2 + c * sq
        levels.append(NormLevel(k, g, c, float(np.sqrt(sq)), float(sob[k])))
    return NormLadder(tuple(levels))


def _check_member(v: Field, problem: ValidatedProblem, rho: float) -> None:
    require_range(v, problem.J)
    w = sup_norms(v.values, v.period, 1)
    if w > rho:
        raise ValueError(f"ensemble member has ||v||_W1,inf = {w:.3g} > rho = {rho:g}")


def calibrate_constants(ensemble: Sequence[Field], problem: ValidatedProblem, s: int,
                        margin: float = 2.0, rho: float = DEFAULT_RHO) -> list:
    """Choose C'_0..C'_{s-1} from measured envelope constants.

    At level k, C_{k-1} is the smallest constant (at least 1) with
    C_{k-1} ||v||_{H^{k-1}}^2 + ||phi_k v_k||^2 >= ||v||_{H^k}^2 over the ensemble,
    c_{k-1} the measured equivalence constant of |.|_{k-1}, and
    C'_{k-1} = margin * c_{k-1} * C_{k-1}.
    """
    members = [v for v in ensemble if np.any(v.values)]
    if not members:
        raise EmptyEnsemble("no nonzero fields to calibrate on")
    for v in members:
        _check_member(v, problem, rho)
    constants: list = []
    for k in range(1, s + 1):
        big_c = 1.0
        spread = 1.0
        for v in members:
            ladder = weighted_norm(v, problem, k, constants + [0.0])
            lvl, prev = ladder.levels[k], ladder.levels[k - 1]
            need = (lvl.sobolev ** 2 - lvl.gauged_l2 ** 2) / prev.sobolev ** 2
            big_c = max(big_c, need)
            r = prev.gauged ** 2 / prev.sobolev ** 2
            spread = max(spread, r, 1.0 / r)
        constants.append(margin * spread * big_c)
    return constants


def equivalence_envelope(ensemble: Sequence[Field], problem: ValidatedProblem, s: int,
                         constants: Sequence[float] | None = None, rho: float = DEFAULT_RHO) -> tuple:
    """(min, max) of |v|_s^2 / ||v||_{H^s}^2 over the nonzero ensemble members."""
    members = [v for v in ensemble if np.any(v.values)]
    if not members:
        raise EmptyEnsemble("equivalence envelope needs at least one nonzero field")
    ratios = []
    for v in members:
        _check_member(v, problem, rho)
        ratios.append(weighted_norm(v, problem, s, constants).ratio(s))
    return float(min(ratios)), float(max(ratios))


def monomial_ratios(expr: GaugedExpr, ensemble: Sequence[Field], problem: ValidatedProblem, k: int) -> np.ndarray:
    """Per monomial Q of ``expr``: max over the ensemble of ||Q||_{L2} / ||v||_{H^k}."""
    monos = expr.monomials()
    out = np.zeros(len(monos))
    for v in ensemble:
        hk = float(sobolev_norms(v.values, v.period, k)[-1])
        if hk == 0.0:
            continue
        for i, q in enumerate(monos):
            out[i] = max(out[i], l2_norm(evaluate_expr(q, v, problem).values, v.period) / hk)
    return out
