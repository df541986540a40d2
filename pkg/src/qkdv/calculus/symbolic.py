"""Exact symbolic calculus for the weighted derivatives v_k = (alpha(v) d/dx)^k v.

Expressions are polynomials in v_1, v_2, ... whose coefficients are formal
products of the coefficient functions alpha, a and their v-derivatives (with
integer, possibly negative, powers) times a rational number.  This alphabet is
closed under d/dx, products and division by alpha, which is all the gauged
commutator recursion ever needs, so identities can be tested exactly.

Spatial derivatives are always rewritten in the weighted variables:

    d/dx beta(v) = beta'(v) v_1 / alpha,     d/dx v_j = v_{j+1} / alpha.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Union

ALPHA = "alpha"
A = "a"
_NAME_ORDER = {ALPHA: 0, A: 1}

Symbol = tuple  # (name, derivative order)
Word = tuple  # sorted ((Symbol, exponent), ...)
Vars = tuple  # exponents of (v_1, ..., v_m), no trailing zeros
Number = Union[int, Fraction]


def _sym_key(sym):
    return (_NAME_ORDER[sym[0]], sym[1])


def _make_word(powers: Mapping) -> Word:
    return tuple(sorted(((s, e) for s, e in powers.items() if e != 0),
                        key=lambda item: _sym_key(item[0])))


def _make_vars(exps) -> Vars:
    exps = list(exps)
    while exps and exps[-1] == 0:
        exps.pop()
    return tuple(exps)


def _mul_word(w1: Word, w2: Word) -> Word:
    powers = dict(w1)
    for s, e in w2:
        powers[s] = powers.get(s, 0) + e
    return _make_word(powers)


def _mul_vars(x1: Vars, x2: Vars) -> Vars:
    m = max(len(x1), len(x2))
    return _make_vars((x1[i] if i < len(x1) else 0) + (x2[i] if i < len(x2) else 0)
                      for i in range(m))


def _weight(x: Vars) -> int:
    return sum((j + 1) * e for j, e in enumerate(x))


@dataclass(frozen=True)
class GaugedExpr:
    """Canonical sum of monomials ``c * word(v) * prod v_j**e_j``.

    ``terms`` is a sorted tuple of ``(vars, word, coefficient)``: sorted by
    exponent vector then by coefficient word, like terms merged, zero
    coefficients dropped.  Two expressions are equal iff their term tuples are.
    """

    terms: tuple = ()

    @classmethod
    def from_dict(cls, data: Mapping) -> "GaugedExpr":
        terms = [(x, w, Fraction(c)) for (w, x), c in data.items() if c != 0]
        terms.sort(key=lambda t: (t[0], tuple((_sym_key(s), e) for s, e in t[1])))
        return cls(tuple(terms))

    def as_dict(self) -> dict:
        return {(w, x): c for x, w, c in self.terms}

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls) -> "GaugedExpr":
        return cls(())

    @classmethod
    def number(cls, c: Number) -> "GaugedExpr":
        return cls.from_dict({((), ()): Fraction(c)})

    @classmethod
    def var(cls, j: int, power: int = 1) -> "GaugedExpr":
        """The weighted derivative v_j (j >= 1)."""
        if j < 1:
            raise ValueError("weighted variables start at v_1")
        exps = [0] * j
        exps[j - 1] = power
        return cls.from_dict({((), _make_vars(exps)): Fraction(1)})

    @classmethod
    def coef(cls, name: str, order: int = 0, power: int = 1) -> "GaugedExpr":
        """The coefficient function ``name^(order)(v)`` raised to ``power``."""
        if name not in _NAME_ORDER:
            raise ValueError(f"unknown coefficient symbol {name!r}")
        return cls.from_dict({(_make_word({(name, order): power}), ()): Fraction(1)})

    # -- algebra ----------------------------------------------------------
    def _coerce(self, other) -> "GaugedExpr":
        if isinstance(other, GaugedExpr):
            return other
        if isinstance(other, (int, Fraction)):
            return GaugedExpr.number(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = self.as_dict()
        for x, w, c in other.terms:
            acc[(w, x)] = acc.get((w, x), 0) + c
        return GaugedExpr.from_dict(acc)

    __radd__ = __add__

    def __neg__(self):
        return GaugedExpr(tuple((x, w, -c) for x, w, c in self.terms))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc: dict = {}
        for x1, w1, c1 in self.terms:
            for x2, w2, c2 in other.terms:
                key = (_mul_word(w1, w2), _mul_vars(x1, x2))
                acc[key] = acc.get(key, 0) + c1 * c2
        return GaugedExpr.from_dict(acc)

    __rmul__ = __mul__

    def __bool__(self):
        return bool(self.terms)

    # -- calculus ---------------------------------------------------------
    def dv(self) -> "GaugedExpr":
        """Derivative of the coefficient words with respect to v (vars frozen)."""
        acc: dict = {}
        for x, w, c in self.terms:
            powers = dict(w)
            for s, e in w:
                new = dict(powers)
                new[s] -= 1
                nxt = (s[0], s[1] + 1)
                new[nxt] = new.get(nxt, 0) + 1
                key = (_make_word(new), x)
                acc[key] = acc.get(key, 0) + c * e
        return GaugedExpr.from_dict(acc)

    def dx(self) -> "GaugedExpr":
        """Total x-derivative, expressed back in weighted variables."""
        inv_alpha = _make_word({(ALPHA, 0): -1})
        acc: dict = {}
        # coefficient part: beta'(v) v_x = beta'(v) v_1 / alpha
        for x, w, c in self.dv().terms:
            key = (_mul_word(w, inv_alpha), _mul_vars(x, (1,)))
            acc[key] = acc.get(key, 0) + c
        # variable part: d/dx v_j = v_{j+1} / alpha
        for x, w, c in self.terms:
            for j, e in enumerate(x):
                if e == 0:
                    continue
                exps = list(x) + [0]
                exps[j] -= 1
                exps[j + 1] += 1
                key = (_mul_word(w, inv_alpha), _make_vars(exps))
                acc[key] = acc.get(key, 0) + c * e
        return GaugedExpr.from_dict(acc)

    def time_derivative(self, vt: "GaugedExpr", dvars: Mapping[int, "GaugedExpr"]) -> "GaugedExpr":
        """Chain rule in t given v_t and the time derivatives of each v_j."""
        out = self.dv() * vt
        for x, w, c in self.terms:
            for j, e in enumerate(x):
                if e == 0:
                    continue
                exps = list(x)
                exps[j] -= 1
                rest = GaugedExpr.from_dict({(w, _make_vars(exps)): c * e})
                out = out + rest * dvars[j + 1]
        return out

    # -- inspection -------------------------------------------------------
    def weights(self) -> set:
        return {_weight(x) for x, _, _ in self.terms}

    def max_var(self) -> int:
        return max((len(x) for x, _, _ in self.terms), default=0)

    def symbols(self) -> set:
        return {s for _, w, _ in self.terms for s, _ in w}

    def coefficient_of(self, j: int, power: int = 1) -> "GaugedExpr":
        """Part of the expression multiplying exactly ``v_j**power`` (divided out)."""
        acc: dict = {}
        for x, w, c in self.terms:
            if j <= len(x) and x[j - 1] == power:
                exps = list(x)
                exps[j - 1] = 0
                acc[(w, _make_vars(exps))] = c
        return GaugedExpr.from_dict(acc)

    def without_var(self, j: int) -> "GaugedExpr":
        return GaugedExpr(tuple(t for t in self.terms if not (j <= len(t[0]) and t[0][j - 1])))

    def monomials(self) -> list:
        return [GaugedExpr(((x, w, c),)) for x, w, c in self.terms]

    def to_json(self) -> list:
        return [
            {
                "coefficient": str(c),
                "word": [{"symbol": s[0], "order": s[1], "power": e} for s, e in w],
                "vars": list(x),
                "weight": _weight(x),
            }
            for x, w, c in self.terms
        ]

    def __str__(self) -> str:
        return format_expr(self)


# -- pretty printing -------------------------------------------------------
_SUB = str.maketrans("0123456789", "₀₁₂₃₄₅₆₇₈₉")
_SUP = str.maketrans("0123456789-", "⁰¹²³⁴⁵⁶⁷⁸⁹⁻")
_GREEK = {ALPHA: "α", A: "a"}


def _fmt_symbol(sym) -> str:
    name, order = sym
    base = _GREEK[name]
    if order <= 3:
        return base + "′" * order
    return f"{base}⁽{str(order).translate(_SUP)}⁾"


def _fmt_power(base: str, e: int) -> str:
    return base if e == 1 else base + str(e).translate(_SUP)


def format_expr(expr: GaugedExpr) -> str:
    if not expr.terms:
        return "0"
    pieces = []
    for x, w, c in expr.terms:
        num = [_fmt_power(_fmt_symbol(s), e) for s, e in w if e > 0]
        den = [_fmt_power(_fmt_symbol(s), -e) for s, e in w if e < 0]
        num += [_fmt_power("v" + str(j + 1).translate(_SUB), e) for j, e in enumerate(x) if e]
        mag = abs(c)
        body = "·".join(num)
        if mag != 1 or not body:
            body = (f"{mag}·" + body) if body else f"{mag}"
        if den:
            body += "/" + "·".join(den) if len(den) == 1 else "/(" + "·".join(den) + ")"
        pieces.append(("-" if c < 0 else "+", body))
    first_sign, first = pieces[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


# -- the model equation in weighted variables --------------------------------
E = GaugedExpr
alpha = E.coef(ALPHA)
inv_alpha = E.coef(ALPHA, 0, -1)
dalpha = E.coef(ALPHA, 1)
a = E.coef(A)
da = E.coef(A, 1)


def v(j: int, power: int = 1) -> GaugedExpr:
    return E.var(j, power)


def velocity() -> GaugedExpr:
    """v_t = -a v_x - d/dx(alpha d/dx(alpha v_x)) = -(a/alpha) v_1 - v_3/alpha."""
    return -(a * inv_alpha * v(1)) - inv_alpha * v(3)


def dx_vk(k: int) -> GaugedExpr:
    """d/dx v_k = v_{k+1}/alpha."""
    return inv_alpha * v(k + 1)


def dxx_vk(k: int) -> GaugedExpr:
    """d^2/dx^2 v_k in weighted variables."""
    return dx_vk(k).dx()


@dataclass(frozen=True)
class Coefficients:
    """The triple (f_k, g_k, h_k) of the equation satisfied by v_k:

    d_t v_k + a d_x v_k + d_x alpha d_x alpha d_x v_k = f_k d_x^2 v_k + g_k d_x v_k + h_k
    """

    k: int
    f: GaugedExpr
    g: GaugedExpr
    h: GaugedExpr

    def rhs(self) -> GaugedExpr:
        return self.f * dxx_vk(self.k) + self.g * dx_vk(self.k) + self.h


def _base_k1() -> Coefficients:
    return Coefficients(1, E.zero(), E.zero(), -(da * inv_alpha * v(1, 2)))


def _lift(c: Coefficients) -> Coefficients:
    """One application of d/dx(alpha .) to the equation for v_k.

    Terms linear in d_x v_{k+1} that surface inside h are regrouped into g,
    which only happens when stepping from k = 1 (the d_x v_2 term is then of
    first order in v_2 itself).
    """
    k = c.k
    f, g, h = c.f, c.g, c.h
    q = E.coef(ALPHA, 1) * E.coef(ALPHA, 0, -2) * f * v(1)  # alpha'/alpha^2 f_k v_1
    f_next = f + dalpha * v(1)
    g_next = (g + f.dx() - 2 * dalpha * E.coef(ALPHA, 0, -2) * f * v(1)
              + E.coef(ALPHA, 1, 2) * E.coef(ALPHA, 0, -2) * v(1, 2))
    h_next = (alpha * h.dx()
              + (g.dx() - q.dx()) * v(k + 1)
              - da * inv_alpha * v(1) * v(k + 1)
              + dalpha * inv_alpha * v(k + 1)
              * (q * inv_alpha * v(1) - g * inv_alpha * v(1) - v(2).dx()))
    # terms carrying v_{k+2} = alpha d_x v_{k+1} belong to the first order part
    spill = h_next.coefficient_of(k + 2)
    if spill:
        h_next = h_next.without_var(k + 2)
        g_next = g_next + spill * alpha
    return Coefficients(k + 1, f_next, g_next, h_next)


@lru_cache(maxsize=None)
def coefficient_recursion(k: int) -> Coefficients:
    """(f_k, g_k, h_k) built by induction from the k = 1 equation."""
    if k < 1:
        raise ValueError("k must be >= 1")
    c = _base_k1()
    for _ in range(k - 1):
        c = _lift(c)
    return c


# -- independent route: direct chain-rule derivation ----------------------------
@lru_cache(maxsize=None)
def _time_derivatives(k: int) -> tuple:
    """Exact d_t v_j for j = 0..k, from v_t and d_t(alpha d_x w) = alpha' v_t d_x w + alpha d_x w_t."""
    vt = velocity()
    out = [vt]
    for j in range(k):
        out.append(dalpha * vt * dx_vk(j) + alpha * out[j].dx())
    return tuple(out)


@lru_cache(maxsize=None)
def derive_direct(k: int) -> Coefficients:
    """Read (f_k, g_k, h_k) off the exact commutator of d_t v_k with the flow.

    The residual d_t v_k + a d_x v_k + d_x alpha d_x alpha d_x v_k is computed by
    the chain rule alone and split by its dependence on v_{k+2} (second order
    part) and v_{k+1} (first order part).  No use is made of the induction.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    vtk = _time_derivatives(k)[k]
    principal = dx_vk(k + 2)  # d_x alpha d_x alpha d_x v_k = d_x v_{k+2}
    residual = vtk + a * dx_vk(k) + principal
    if residual.coefficient_of(k + 3) or residual.max_var() > k + 2:
        raise ArithmeticError("principal part failed to cancel")
    f = residual.coefficient_of(k + 2) * E.coef(ALPHA, 0, 2)
    rest = residual - f * dxx_vk(k)
    if rest.max_var() > k + 1:
        raise ArithmeticError("second order part not linear in v_{k+2}")
    first = GaugedExpr(tuple(t for t in rest.terms if len(t[0]) >= k + 1 and t[0][k]))
    g = E.zero()
    for x, w, c in first.terms:
        exps = list(x)
        exps[k] -= 1
        g = g + GaugedExpr.from_dict({(w, _make_vars(exps)): c})
    g = g * alpha
    h = rest - g * dx_vk(k)
    return Coefficients(k, f, g, h)


def principal_coefficient(k: int) -> GaugedExpr:
    """Closed form (k-1) alpha' v_1 of the second order coefficient."""
    return (k - 1) * dalpha * v(1)


def expr_weight(e: GaugedExpr) -> set:
    return e.weights()


def required_orders(exprs: Iterable[GaugedExpr]) -> dict:
    """Highest v-derivative order needed for each coefficient name, and the top v_j."""
    need = {ALPHA: 0, A: 0, "v": 0}
    for e in exprs:
        for name, order in e.symbols():
            need[name] = max(need[name], order)
        need["v"] = max(need["v"], e.max_var())
    return need
