"""Pseudospectral time integration of the regularised equation

    v_t + d_x p(v) + d_x alpha d_x alpha d_x v + eps^4 d_x^4 v = 0

on the torus.  The constant coefficient part of the linearisation about the
(conserved) spatial mean, a_bar v_x + kappa_bar v_xxx + eps^4 v_xxxx, is
integrated exactly in Fourier space; the remainder is explicit.  Nonlinear
terms are in divergence form, so the mean mode never changes.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import diagnostics
from .errors import BlowupDetected, RangeViolation, StepRejected
from .field import DEFAULT_DEALIAS, TAIL_TOL, Field, dealias_mask, require_resolved, spectral_tail, wavenumbers
from .model import ValidatedProblem, check_range, require_range

INTEGRATORS = ("exponential-rk", "imex-bdf2")


@dataclass(frozen=True)
class SolverConfig:
    n: int = 256
    dt: float = 1e-3
    T: float = 1.0
    eps: float = 0.0
    beta: float = 0.75
    dealias_fraction: float = DEFAULT_DEALIAS
    integrator: str = "exponential-rk"
    tail_tol: float = TAIL_TOL
    output_every: int = 10
    blowup_factor: float = 1e3
    max_halvings: int = 5
    window: str = "raised-cosine"

    def __post_init__(self):
        if not (self.dt > 0 and self.T > 0):
            raise ValueError("dt and T must be positive")
        if not 0 < self.dealias_fraction <= 2.0 / 3.0 + 1e-12:
            raise ValueError("dealias_fraction must lie in (0, 2/3]")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.eps < 0:
            raise ValueError("eps must be non-negative")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {sorted(WINDOWS)}")

    @property
    def steps(self) -> int:
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    @property
    def dt_effective(self) -> float:
        return self.T / self.steps

    def replace(self, **kw) -> "SolverConfig":
        return SolverConfig(**{**asdict(self), **kw})

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def append(self, t: float, state: Field, problem: ValidatedProblem) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("trajectory times must increase")
        if self.states and state.n != self.states[0].n:
            raise ValueError("trajectory states must share one grid")
        self.times.append(float(t))
        self.states.append(state)
        self.diagnostics.append(diagnostics.record(state, problem, t))

    @property
    def final(self) -> Field:
        return self.states[-1]

    def series(self, name: str) -> np.ndarray:
        if name.startswith("h") and name[1:].isdigit():
            k = int(name[1:])
            return np.array([d.sobolev[k] for d in self.diagnostics])
        return np.array([getattr(d, name) for d in self.diagnostics])


# -- mollifier windows ------------------------------------------------------
def _raised_cosine(u):
    u = np.abs(u)
    out = np.where(u <= 0.5, 1.0, 0.0)
    mid = (u > 0.5) & (u < 1.0)
    out[mid] = 0.5 * (1.0 + np.cos(np.pi * (2.0 * u[mid] - 1.0)))
    return out


def _smooth_step(u):
    """C-infinity transition from 1 at |u| = 1/2 to 0 at |u| = 1."""
    u = np.abs(u)
    s = np.clip(2.0 * u - 1.0, 0.0, 1.0)

    def g(t):
        return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)

    return g(1.0 - s) / (g(1.0 - s) + g(s))


WINDOWS = {"raised-cosine": _raised_cosine, "smooth": _smooth_step}


def mollifier_cutoff(eps: float, beta: float) -> float:
    """eta(eps) = eps^beta."""
    return eps ** beta


def mollify(v0: Field, eps: float, beta: float = 0.75, window: str = "raised-cosine") -> Field:
    """Multiply the spectrum by chi_hat(eta(eps) xi); eps = 0 returns v0 unchanged."""
    if eps == 0:
        return v0
    if eps < 0 or not 0 < beta < 1:
        raise ValueError("need eps > 0 and 0 < beta < 1")
    eta = mollifier_cutoff(eps, beta)
    xi = 2.0 * np.pi / v0.period * np.arange(v0.n // 2 + 1)
    return Field.from_spectrum(v0.spectrum * WINDOWS[window](eta * xi), v0.n, v0.period)


# -- operators ----------------------------------------------------------------
def rhs(v: Field, problem: ValidatedProblem, eps: float = 0.0, *, fraction: float = DEFAULT_DEALIAS,
        tail_tol: float = TAIL_TOL) -> Field:
    """-(d_x p(v) + d_x alpha d_x alpha d_x v + eps^4 d_x^4 v), dealiased products."""
    require_range(v, problem.J)
    require_resolved(v.values, tail_tol, fraction)
    return v.with_values(-diagnostics.flux_operator(v, problem, eps, fraction))


def airy_reference(v0: Field, c: float, kappa0: float, t: float) -> Field:
    """Exact flow of v_t + c v_x + kappa0 v_xxx = 0."""
    k = wavenumbers(v0.n, v0.period)
    return Field.from_spectrum(v0.spectrum * np.exp(1j * (kappa0 * k ** 3 - c * k) * t), v0.n, v0.period)


def _phi_functions(z: np.ndarray, points: int = 64):
    """phi_1(z) = (e^z - 1)/z and phi_2(z) = (e^z - 1 - z)/z^2 by contour averaging."""
    r = np.exp(2j * np.pi * (np.arange(points) + 0.5) / points)
    zz = z[:, None] + r[None, :]
    ez = np.exp(zz)
    phi1 = np.mean((ez - 1.0) / zz, axis=1)
    phi2 = np.mean((ez - 1.0 - zz) / zz ** 2, axis=1)
    return phi1, phi2


class _Stepper:
    """Integrator state for one run: spectral operators, masks and history."""

    def __init__(self, problem: ValidatedProblem, cfg: SolverConfig, n: int, period: float, mean: float):
        self.problem = problem
        self.cfg = cfg
        self.n = n
        self.period = period
        self.k = wavenumbers(n, period)
        self.ik = 1j * self.k
        self.mask = dealias_mask(n, cfg.dealias_fraction)
        self.abar = float(problem.a(np.array([mean]))[0])
        self.kbar = float(problem.kappa(np.array([mean]))[0])
        self.lin = -(self.abar * self.ik + self.kbar * self.ik ** 3 + cfg.eps ** 4 * self.k ** 4)
        self._cache = {}
        self.history = None  # (u_prev, N_prev) for BDF2

    def coefficients(self, h: float):
        if h not in self._cache:
            z = h * self.lin
            phi1, phi2 = _phi_functions(z)
            bdf = 1.0 / (3.0 - 2.0 * h * self.lin)
            self._cache[h] = (np.exp(z), h * phi1, h * phi2, bdf)
        return self._cache[h]

    def nonlinear(self, u: np.ndarray) -> np.ndarray:
        """Fourier transform of the explicit remainder, restricted to retained modes."""
        n, mask, ik = self.n, self.mask, self.ik
        vals = np.fft.irfft(u, n)
        if not check_range(vals, self.problem.J):
            raise RangeViolation("state left J during a stage")
        alpha = self.problem.alpha(vals)
        vx = np.fft.irfft(ik * u, n)
        inner = np.fft.rfft(alpha * vx)
        inner[~mask] = 0.0
        outer = np.fft.rfft(alpha * np.fft.irfft(ik * inner, n))
        outer[~mask] = 0.0
        flux = np.fft.rfft(self.problem.p(vals))
        flux[~mask] = 0.0
        out = -ik * (flux + outer) + (self.abar * ik + self.kbar * ik ** 3) * u
        out[~mask] = 0.0
        return out

    def etd2(self, u: np.ndarray, h: float, Nu: Optional[np.ndarray] = None) -> np.ndarray:
        E, p1, p2, _ = self.coefficients(h)
        if Nu is None:
            Nu = self.nonlinear(u)
        a = E * u + p1 * Nu
        return a + p2 * (self.nonlinear(a) - Nu)

    def advance(self, u: np.ndarray, h: float) -> np.ndarray:
        Nu = self.nonlinear(u)
        if self.cfg.integrator == "imex-bdf2" and self.history is not None:
            u_prev, N_prev = self.history
            bdf = self.coefficients(h)[3]
            new = bdf * (4.0 * u - u_prev + 2.0 * h * (2.0 * Nu - N_prev))
        else:
            new = self.etd2(u, h, Nu)
        self.history = (u, Nu)
        return new

    def acceptable(self, u: np.ndarray) -> bool:
        if not np.all(np.isfinite(u)):
            return False
        vals = np.fft.irfft(u, self.n)
        if not check_range(vals, self.problem.J):
            return False
        return spectral_tail(vals, self.cfg.dealias_fraction) <= self.cfg.tail_tol

    def step(self, u: np.ndarray, h: float) -> np.ndarray:
        """One step of size h; on rejection retry with 2, 4, ... 2^max_halvings ETD2 substeps."""
        history = self.history
        try:
            new = self.advance(u, h)
            if self.acceptable(new):
                return new
        except RangeViolation:
            pass
        for level in range(1, self.cfg.max_halvings + 1):
            m = 2 ** level
            sub = h / m
            w = u
            try:
                for _ in range(m):
                    w = self.etd2(w, sub)
                    if not self.acceptable(w):
                        break
                else:
                    # keep a BDF2 history consistent with spacing h
                    self.history = (u, self.nonlinear(u)) if history is not None else None
                    return w
            except RangeViolation:
                continue
        raise StepRejected(f"step rejected after {self.cfg.max_halvings} halvings")


def _initial_state(v0: Field, cfg: SolverConfig, problem: ValidatedProblem) -> np.ndarray:
    if v0.n != cfg.n:
        raise ValueError(f"initial data has n = {v0.n}, config has n = {cfg.n}")
    require_range(v0, problem.J)
    u = np.array(v0.spectrum)
    u[~dealias_mask(v0.n, cfg.dealias_fraction)] = 0.0
    return u


def step(state: Field, problem: ValidatedProblem, cfg: SolverConfig) -> Field:
    """Advance ``state`` by one step of size cfg.dt (self-starting ETD2 scheme)."""
    u = _initial_state(state, cfg, problem)
    stepper = _Stepper(problem, cfg, state.n, state.period, float(np.mean(state.values)))
    new = stepper.step(u, cfg.dt)
    return Field.from_spectrum(new, state.n, state.period)


def solve(v0: Field, problem: ValidatedProblem, cfg: SolverConfig) -> Trajectory:
    """Integrate to cfg.T, recording diagnostics every cfg.output_every steps and at T.

    Raises BlowupDetected (with the partial trajectory attached) when the H^4
    norm exceeds cfg.blowup_factor times its initial value.
    """
    if not np.isclose(v0.period, problem.period, rtol=1e-14, atol=0):
        raise ValueError("initial data period differs from the problem period")
    u = _initial_state(v0, cfg, problem)
    start = Field.from_spectrum(u, cfg.n, v0.period)
    require_resolved(start.values, cfg.tail_tol, cfg.dealias_fraction)
    stepper = _Stepper(problem, cfg, cfg.n, v0.period, float(u[0].real / cfg.n))
    traj = Trajectory()
    traj.append(0.0, start, problem)
    h = cfg.dt_effective
    weight = np.full(cfg.n // 2 + 1, 2.0)
    weight[0] = weight[-1] = 1.0
    k8 = sum(stepper.k ** (2 * j) for j in range(5))
    h4_sq = lambda w: float(np.sum(weight * np.abs(w) ** 2 * k8))
    limit = cfg.blowup_factor ** 2 * max(h4_sq(u), 1e-300)
    for i in range(1, cfg.steps + 1):
        u = stepper.step(u, h)
        t = i * h
        blown = h4_sq(u) > limit
        if i % cfg.output_every == 0 or i == cfg.steps or blown:
            traj.append(t, Field.from_spectrum(u, cfg.n, v0.period), problem)
        if blown:
            raise BlowupDetected(f"H^4 norm exceeded {cfg.blowup_factor:g} x initial at t = {t:g}",
                                 trajectory=traj, time=t)
    return traj
