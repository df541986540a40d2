"""Conserved quantities, PDE residuals and blow-up monitoring."""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .calculus.numeric import residual_scale, weighted_norm
from .field import Field, derivative, grid, l2_norm, product, sobolev_norms, sup_norms
from .model import ValidatedProblem, require_range

CSV_COLUMNS = ("t", "mass", "hamiltonian", "h0", "h1", "h2", "h3", "h4", "gauged4", "vmin", "vmax", "w3inf")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    hamiltonian: float
    sobolev: tuple  # ||v||_{H^k}, k = 0..4
    gauged: float  # |v|_4 with C' = 1
    range: tuple
    w3inf: float
    residual_l2: Optional[float] = None

    def row(self) -> list:
        return [self.t, self.mass, self.hamiltonian, *self.sobolev, self.gauged, *self.range, self.w3inf]

    def as_dict(self) -> dict:
        return asdict(self)


def mass(v: Field) -> float:
    return float(v.period * np.mean(v.values))


def hamiltonian_density(v: Field, problem: ValidatedProblem) -> np.ndarray:
    """1/2 kappa(v) v_x^2 + f(v)."""
    require_range(v, problem.J)
    vx = derivative(v.values, v.period)
    return 0.5 * problem.kappa(v.values) * vx ** 2 + problem.f(v.values)


def hamiltonian(v: Field, problem: ValidatedProblem) -> float:
    return float(v.period * np.mean(hamiltonian_density(v, problem)))


def variational_derivative(v: Field, problem: ValidatedProblem) -> Field:
    """delta H = f'(v) + 1/2 kappa'(v) v_x^2 - d_x(kappa(v) v_x), with f' = -p."""
    require_range(v, problem.J)
    vx = derivative(v.values, v.period)
    vals = (-problem.p(v.values) + 0.5 * problem.kappa(v.values, 1) * vx ** 2
            - derivative(problem.kappa(v.values) * vx, v.period))
    return v.with_values(vals)


def flux_operator(v: Field, problem: ValidatedProblem, eps: float = 0.0, fraction: Optional[float] = None) -> np.ndarray:
    """d_x p(v) + d_x(alpha d_x(alpha d_x v)) + eps^4 d_x^4 v, products optionally dealiased."""
    vals, L = v.values, v.period
    mul = (lambda a, b: a * b) if fraction is None else (lambda a, b: product(a, b, fraction))
    alpha = problem.alpha(vals)
    inner = mul(alpha, derivative(vals, L))
    out = derivative(problem.p(vals), L) + derivative(mul(alpha, derivative(inner, L)), L)
    if eps:
        out = out + eps ** 4 * derivative(vals, L, 4)
    return out


def pde_residual(candidate, problem: ValidatedProblem, eps: float = 0.0, *, n: Optional[int] = None,
                 t: float = 0.0, h: float = 1e-3) -> float:
    """Scaled L2 residual ||v_t + d_x p + d_x alpha d_x alpha d_x v + eps^4 d_x^4 v|| / (1 + ||v||_{H^3}).

    ``candidate`` is either a pair of Fields (v, v_t) or a callable
    ``v(t, x)``; in the latter case v_t comes from a fourth-order central
    difference in time with step ``h`` and the grid size ``n`` is required.
    """
    if callable(candidate):
        if n is None:
            raise ValueError("grid size n is required for analytic candidates")
        x = grid(n, problem.period)
        v = Field(candidate(t, x), problem.period)
        vt_vals = (8.0 * (candidate(t + h, x) - candidate(t - h, x))
                   - (candidate(t + 2 * h, x) - candidate(t - 2 * h, x))) / (12.0 * h)
    else:
        v, vt = candidate
        vt_vals = vt.values
    require_range(v, problem.J)
    res = vt_vals + flux_operator(v, problem, eps)
    return l2_norm(res, v.period) / residual_scale(v)


def record(v: Field, problem: ValidatedProblem, t: float) -> DiagnosticsRecord:
    sob = sobolev_norms(v.values, v.period, 4)
    ladder = _gauged_ladder(v, problem)
    return DiagnosticsRecord(
        t=float(t), mass=mass(v), hamiltonian=hamiltonian(v, problem),
        sobolev=tuple(float(s) for s in sob), gauged=ladder,
        range=(float(v.values.min()), float(v.values.max())),
        w3inf=sup_norms(v.values, v.period, 3),
    )


def _gauged_ladder(v: Field, problem: ValidatedProblem) -> float:
    """|v|_4 with all C' = 1; the solver has already checked resolution."""
    return weighted_norm(v, problem, min(4, problem.k_max), tail_tol=np.inf).levels[-1].gauged


@dataclass(frozen=True)
class BlowupStatus:
    ok: bool
    time: Optional[float] = None
    index: Optional[int] = None

    def __str__(self):
        return "ok" if self.ok else f"blowup-suspected(t={self.time:g})"


def blowup_monitor(traj, threshold: float) -> BlowupStatus:
    """First diagnostics row whose H^4 norm exceeds ``threshold``."""
    for i, rec in enumerate(traj.diagnostics):
        if rec.sobolev[4] > threshold:
            return BlowupStatus(False, rec.t, i)
    return BlowupStatus(True)


def drift(series) -> float:
    series = np.asarray(series, dtype=float)
    return float(np.max(np.abs(series - series[0])))
