"""Problem instances of the quasilinear KdV equation

    v_t + d_x p(v) + d_x( alpha(v) d_x( alpha(v) d_x v ) ) = 0,   alpha = sqrt(kappa),

on the torus R / period Z, with values confined to an admissible interval J.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .errors import DerivativeMismatch, InsufficientOrder, NonPositiveKappa, ProblemError, RangeViolation
from .field import Field

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


@dataclass(frozen=True)
class ProblemSpec:
    """Coefficients of the equation with their derivatives supplied as callables.

    ``p[i]`` is the i-th derivative of p (at least k_max + 2 entries) and
    ``kappa[i]`` the i-th derivative of kappa (at least k_max + 3 entries).
    ``params`` describes how the spec was built and is what gets fingerprinted.
    """

    p: Sequence[Callable]
    kappa: Sequence[Callable]
    period: float
    J: tuple
    k_max: int = 8
    name: str = "custom"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class ValidatedProblem:
    spec: ProblemSpec
    samples: dict

    # -- convenience ----------------------------------------------------
    @property
    def period(self) -> float:
        return self.spec.period

    @property
    def J(self) -> tuple:
        return self.spec.J

    @property
    def k_max(self) -> int:
        return self.spec.k_max

    @property
    def name(self) -> str:
        return self.spec.name

    def fingerprint(self) -> str:
        payload = json.dumps({"name": self.spec.name, "params": self.spec.params,
                              "period": self.spec.period, "J": list(self.spec.J),
                              "k_max": self.spec.k_max}, sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    # -- pointwise coefficient functions --------------------------------
    def kappa(self, v, order: int = 0) -> np.ndarray:
        return _call(self.spec.kappa, order, v)

    def p(self, v, order: int = 0) -> np.ndarray:
        return _call(self.spec.p, order, v)

    def a(self, v, order: int = 0) -> np.ndarray:
        """a = p' and its derivatives."""
        return _call(self.spec.p, order + 1, v)

    def alpha_derivatives(self, v, order: int) -> list:
        """[alpha, alpha', ..., alpha^(order)] from kappa by Leibniz on alpha^2 = kappa."""
        v = np.asarray(v, dtype=float)
        out = [np.sqrt(self.kappa(v))]
        for m in range(1, order + 1):
            acc = self.kappa(v, m)
            for i in range(1, m):
                acc = acc - math.comb(m, i) * out[i] * out[m - i]
            out.append(acc / (2.0 * out[0]))
        return out

    def alpha(self, v, order: int = 0) -> np.ndarray:
        return self.alpha_derivatives(v, order)[order]

    def f(self, v) -> np.ndarray:
        """f with f' = -p and f(j_lo) = 0, by 32-point Gauss-Legendre on [j_lo, v]."""
        v = np.asarray(v, dtype=float)
        lo = self.spec.J[0]
        half = 0.5 * (v - lo)
        nodes = lo + half[..., None] * (_GL_NODES + 1.0)
        return -half * np.sum(_GL_WEIGHTS * self.p(nodes), axis=-1)

    def coefficient(self, name: str, order: int, v) -> np.ndarray:
        if name == "alpha":
            return self.alpha(v, order)
        if name == "a":
            return self.a(v, order)
        raise KeyError(name)


def _call(funcs, order, v):
    if order >= len(funcs):
        raise InsufficientOrder(f"derivative of order {order} not supplied")
    out = funcs[order](np.asarray(v, dtype=float))
    return np.broadcast_to(np.asarray(out, dtype=float), np.shape(v)).copy()


# -- validation ----------------------------------------------------------------
def _fd_derivative(g, x, h):
    """Fourth-order central difference, Richardson-extrapolated to sixth order."""
    def d4(step):
        return (8.0 * (g(x + step) - g(x - step)) - (g(x + 2 * step) - g(x - 2 * step))) / (12.0 * step)
    return (16.0 * d4(0.5 * h) - d4(h)) / 15.0


def validate_problem(spec: ProblemSpec, *, fd_rtol: float = 1e-6, n_samples: int = 33,
                     dense: int = 513) -> ValidatedProblem:
    lo, hi = (float(t) for t in spec.J)
    if not lo < hi:
        raise ProblemError(f"empty admissible interval J = [{lo}, {hi}]")
    if spec.period <= 0:
        raise ProblemError("period must be positive")
    if spec.k_max < 4:
        raise InsufficientOrder(f"k_max = {spec.k_max} < 4")
    if len(spec.p) < spec.k_max + 2:
        raise InsufficientOrder(f"need p derivatives up to order {spec.k_max + 1}")
    if len(spec.kappa) < spec.k_max + 3:
        raise InsufficientOrder(f"need kappa derivatives up to order {spec.k_max + 2}")

    xs = np.linspace(lo, hi, dense)
    kap = _call(spec.kappa, 0, xs)
    if not np.all(kap > 0):
        bad = xs[np.argmin(kap)]
        raise NonPositiveKappa(f"kappa({bad:g}) = {kap.min():g} <= 0 on J")

    sample = np.linspace(lo, hi, n_samples)
    h = 2e-4 * (hi - lo)
    for label, funcs in (("p", spec.p), ("kappa", spec.kappa)):
        for i in range(1, len(funcs)):
            prev = lambda x, g=funcs[i - 1]: _call([g], 0, x)
            approx = _fd_derivative(prev, sample, h)
            exact = _call(funcs, i, sample)
            scale = max(1.0, float(np.max(np.abs(exact))))
            err = float(np.max(np.abs(approx - exact)))
            if err > fd_rtol * scale:
                raise DerivativeMismatch(
                    f"{label} derivative of order {i} disagrees with finite differences "
                    f"(max error {err:.3e}, scale {scale:.3e})")

    problem = ValidatedProblem(spec, {})
    problem.samples.update({
        "v": xs,
        "alpha": problem.alpha(xs),
        "a": problem.a(xs),
        "f": problem.f(xs),
    })
    return problem


# -- fields and coefficients ------------------------------------------------------
def check_range(v: Field, J) -> bool:
    lo, hi = J
    vals = v.values if isinstance(v, Field) else np.asarray(v)
    return bool(np.all(vals >= lo) and np.all(vals <= hi))


def require_range(v, J) -> None:
    vals = v.values if isinstance(v, Field) else np.asarray(v)
    if not check_range(vals, J):
        raise RangeViolation(f"values in [{vals.min():.6g}, {vals.max():.6g}] leave J = [{J[0]:g}, {J[1]:g}]")


_SYMBOLS = {
    "alpha": ("alpha", 0), "alpha'": ("alpha", 1), "alpha''": ("alpha", 2),
    "a": ("a", 0), "a'": ("a", 1), "a''": ("a", 2),
    "kappa": ("kappa", 0), "kappa'": ("kappa", 1),
    "f": ("f", 0),
}


def eval_coeffs(problem: ValidatedProblem, v: Field, orders) -> dict:
    """Pointwise coefficient fields alpha(v), a'(v), ... for the requested symbols."""
    require_range(v, problem.J)
    out = {}
    for sym in orders:
        try:
            name, order = _SYMBOLS[sym]
        except KeyError:
            raise KeyError(f"unknown coefficient symbol {sym!r}; known: {sorted(_SYMBOLS)}") from None
        if name == "alpha":
            vals = problem.alpha(v.values, order)
        elif name == "a":
            vals = problem.a(v.values, order)
        elif name == "kappa":
            vals = problem.kappa(v.values, order)
        else:
            vals = problem.f(v.values)
        out[sym] = v.with_values(vals)
    return out


# -- builtin problems ---------------------------------------------------------------
def _poly_derivs(coeffs, count):
    poly = Polynomial(coeffs)
    return [poly.deriv(i) if i else poly for i in range(count)]


def polynomial_problem(p_coeffs, kappa_coeffs, period, J, k_max=8, name="polynomial", params=None):
    """p and kappa given by ascending coefficient lists."""
    return ProblemSpec(
        p=_poly_derivs(p_coeffs, k_max + 2),
        kappa=_poly_derivs(kappa_coeffs, k_max + 3),
        period=float(period), J=(float(J[0]), float(J[1])), k_max=k_max, name=name,
        params=params or {"p": list(map(float, p_coeffs)), "kappa": list(map(float, kappa_coeffs))},
    )


def power_problem(m: int, period, J, k_max=8):
    """p(v) = v^m / m, kappa = 1 (m = 2: KdV, m = 3: modified KdV)."""
    coeffs = [0.0] * m + [1.0 / m]
    names = {2: "kdv", 3: "mkdv"}
    return polynomial_problem(coeffs, [1.0], period, J, k_max, name=names.get(m, f"power:{m}"),
                              params={"nonlinearity": f"power:{m}"})


def kdv_problem(period=40.0, J=(-2.0, 4.0), k_max=8):
    return power_problem(2, period, J, k_max)


def linear_problem(c, kappa0, period, J, k_max=8):
    """p(v) = c v, kappa = kappa0: the constant coefficient Airy flow."""
    return polynomial_problem([0.0, float(c)], [float(kappa0)], period, J, k_max,
                              name=f"linear:{c:g},{kappa0:g}",
                              params={"nonlinearity": f"linear:{c},{kappa0}"})


def integrable_problem(shift, eps, period, J, k_max=8):
    """kappa(v) = eps^2/12 (v + shift)^-3 with p(v) = v^2/2."""
    scale = eps ** 2 / 12.0

    def kappa_deriv(i):
        # d^i/dv^i (v + shift)^-3 = (-1)^i (i+2)!/2 (v + shift)^-(3+i)
        factor = scale * (-1) ** i * math.factorial(i + 2) / 2.0
        return lambda v: factor * (np.asarray(v, dtype=float) + shift) ** (-(3 + i))

    return ProblemSpec(
        p=_poly_derivs([0.0, 0.0, 0.5], k_max + 2),
        kappa=[kappa_deriv(i) for i in range(k_max + 3)],
        period=float(period), J=(float(J[0]), float(J[1])), k_max=k_max,
        name=f"integrable:{shift:g},{eps:g}",
        params={"nonlinearity": f"integrable:{shift},{eps}"},
    )


def builtin_problem(spec_name: str, period, J, k_max=8):
    """Parse ``kdv``, ``mkdv``, ``power:m``, ``integrable:a,eps`` or ``linear:c,kappa0``."""
    name, _, arg = spec_name.partition(":")
    try:
        if name == "kdv" and not arg:
            return power_problem(2, period, J, k_max)
        if name == "mkdv" and not arg:
            return power_problem(3, period, J, k_max)
        if name == "power":
            m = int(arg)
            if m < 1:
                raise ValueError
            return power_problem(m, period, J, k_max)
        if name == "integrable":
            shift, eps = (float(t) for t in arg.split(","))
            return integrable_problem(shift, eps, period, J, k_max)
        if name == "linear":
            c, kappa0 = (float(t) for t in arg.split(","))
            return linear_problem(c, kappa0, period, J, k_max)
    except ValueError:
        raise ProblemError(f"malformed nonlinearity {spec_name!r}") from None
    raise ProblemError(f"unknown nonlinearity {spec_name!r}")
