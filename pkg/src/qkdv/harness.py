"""Experiments: epsilon sweeps, continuity, benchmarks and norm monitors.

Every experiment returns a plain result object with ``to_json()`` for the
report and ``tables()`` for the CSV outputs (name -> (header, rows)).
Independent solves run on a thread pool; results are always assembled in
input order so reports do not depend on scheduling.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .diagnostics import drift, pde_residual
from .errors import CertificationFailed, GridMismatch, RangeViolation
from .field import Field, derivative, l2_norm, sobolev_norms
from .initial import bump, periodization_defect, soliton
from .model import ValidatedProblem, integrable_problem, kdv_problem, require_range, validate_problem
from .solver import SolverConfig, Trajectory, mollifier_cutoff, mollify, solve

CERTIFICATION_TOL = 1e-6
PERIODIZATION_TOL = 1e-12


def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _check_grid(v0: Field, problem: ValidatedProblem, cfg: SolverConfig) -> None:
    if v0.n != cfg.n:
        raise GridMismatch(f"initial data has n = {v0.n} but the solver grid has n = {cfg.n}")
    if not math.isclose(v0.period, problem.period, rel_tol=1e-14):
        raise GridMismatch(f"initial data period {v0.period:g} differs from problem period {problem.period:g}")


def _derivative_diffs(a: Trajectory, b: Trajectory, p_max: int) -> list:
    """sup over recorded times of ||d_x^p (a - b)||_{L2}, p = 0..p_max."""
    if len(a.times) != len(b.times) or not np.allclose(a.times, b.times, rtol=0, atol=1e-12):
        raise GridMismatch("trajectories were recorded at different times")
    out = np.zeros(p_max + 1)
    for sa, sb in zip(a.states, b.states):
        z = sa.values - sb.values
        for p in range(p_max + 1):
            out[p] = max(out[p], l2_norm(derivative(z, sa.period, p) if p else z, sa.period))
    return out.tolist()


def _sup_sobolev_diff(a: Trajectory, b: Trajectory, s: int) -> float:
    if len(a.times) != len(b.times):
        raise GridMismatch("trajectories were recorded at different times")
    return max(float(sobolev_norms(sa.values - sb.values, sa.period, s)[-1])
               for sa, sb in zip(a.states, b.states))


def _slope(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def strictly_decreasing(seq) -> bool:
    seq = list(seq)
    return all(b < a for a, b in zip(seq, seq[1:]))


# -- epsilon sweep --------------------------------------------------------------
@dataclass(frozen=True)
class SweepPair:
    eps: float
    delta: float
    diffs: tuple  # sup_t ||d_x^p (v_eps - v_delta)||_{L2}, p = 0..q


@dataclass
class SweepResult:
    q: int
    beta: float
    eps_list: tuple
    pairs: list
    p_max: int
    fitted_rates: list  # per p, slope of log diff against log eta(eps)
    ratios: list  # per p, diff / eta(eps)^(q - p) along the ladder
    growth: dict  # s -> per eps, sup_t ||v_eps||_{H^s} eta^(s-q) / ||v0||_{H^q}
    pass_: bool
    config: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.pass_

    def to_json(self) -> dict:
        return {
            "experiment": "epsilon-sweep", "q": self.q, "beta": self.beta, "eps_list": list(self.eps_list),
            "p_max": self.p_max, "pass": self.pass_,
            "pairs": [{"eps": pr.eps, "delta": pr.delta, "diffs": list(pr.diffs)} for pr in self.pairs],
            "fitted_rates": self.fitted_rates, "ratios": self.ratios,
            "growth": {str(s): g for s, g in self.growth.items()}, "solver": self.config,
        }

    def tables(self) -> dict:
        q = self.q
        header = ["eps", "delta", "eta"] + [f"diff_p{p}" for p in range(q + 1)] + \
                 [f"ratio_p{p}" for p in range(q + 1)]
        rows = []
        for pr in self.pairs:
            eta = mollifier_cutoff(pr.eps, self.beta)
            rows.append([pr.eps, pr.delta, eta, *pr.diffs,
                         *[d / eta ** (q - p) for p, d in enumerate(pr.diffs)]])
        rates = [["p", "fitted_rate", "expected", "decreasing"]]
        for p in range(q + 1):
            dec = strictly_decreasing(self.ratios[p])
            rates.append([p, self.fitted_rates[p], q - p, int(dec)])
        growth_header = ["eps", "eta"] + [f"growth_s{s}" for s in sorted(self.growth)]
        growth_rows = [[e, mollifier_cutoff(e, self.beta), *[self.growth[s][i] for s in sorted(self.growth)]]
                       for i, e in enumerate(self.eps_list)]
        return {"sweep": (header, rows), "rates": (rates[0], rates[1:]),
                "growth": (growth_header, growth_rows)}


def _validate_ladder(eps_list) -> tuple:
    eps_list = tuple(float(e) for e in eps_list)
    if len(eps_list) < 3:
        raise ValueError("eps_list needs at least 3 entries")
    if any(e <= 0 for e in eps_list):
        raise ValueError("eps_list entries must be positive")
    if not strictly_decreasing(eps_list):
        raise ValueError("eps_list must be strictly decreasing")
    return eps_list


def regularized_solve(problem: ValidatedProblem, v0: Field, eps: float, cfg: SolverConfig) -> Trajectory:
    """Solve the eps-regularised problem from mollified data."""
    c = cfg.replace(eps=eps)
    return solve(mollify(v0, eps, c.beta, c.window), problem, c)


def compare_pair(problem: ValidatedProblem, v0: Field, eps: float, delta: float, cfg: SolverConfig,
                 p_max: int = 4) -> SweepPair:
    """Difference table for one pair; eps == delta is allowed and gives zeros."""
    _check_grid(v0, problem, cfg)
    a = regularized_solve(problem, v0, eps, cfg)
    b = a if delta == eps else regularized_solve(problem, v0, delta, cfg)
    return SweepPair(eps, delta, tuple(_derivative_diffs(a, b, p_max)))


def epsilon_sweep(problem: ValidatedProblem, v0: Field, eps_list: Sequence[float], cfg: SolverConfig,
                  q: int, *, threads: int = 1, growth_orders: Optional[Sequence[int]] = None) -> SweepResult:
    """Cauchy-rate sweep along a decreasing eps ladder.

    ``pass`` holds iff, for every p <= min(q, 4), diff_p / eta(eps)^(q-p) is
    strictly decreasing over the consecutive pairs.
    """
    eps_list = _validate_ladder(eps_list)
    if q < 0:
        raise ValueError("q must be non-negative")
    _check_grid(v0, problem, cfg)
    trajs = _map(lambda e: regularized_solve(problem, v0, e, cfg), eps_list, threads)
    pairs = [SweepPair(eps_list[i], eps_list[i + 1], tuple(_derivative_diffs(trajs[i], trajs[i + 1], q)))
             for i in range(len(eps_list) - 1)]
    etas = [mollifier_cutoff(pr.eps, cfg.beta) for pr in pairs]
    ratios = [[pr.diffs[p] / eta ** (q - p) for pr, eta in zip(pairs, etas)] for p in range(q + 1)]
    rates = [_slope(etas, [pr.diffs[p] for pr in pairs]) for p in range(q + 1)]
    p_max = min(q, 4)
    passed = all(strictly_decreasing(ratios[p]) for p in range(p_max + 1))

    if growth_orders is None:
        growth_orders = range(q + 1, q + 3)
    base = float(sobolev_norms(v0.values, v0.period, q)[-1]) or 1.0
    growth = {}
    for s in growth_orders:
        row = []
        for e, tr in zip(eps_list, trajs):
            sup = max(float(sobolev_norms(st.values, st.period, s)[-1]) for st in tr.states)
            row.append(sup * mollifier_cutoff(e, cfg.beta) ** (s - q) / base)
        growth[int(s)] = row
    return SweepResult(q, cfg.beta, eps_list, pairs, p_max, rates, ratios, growth, passed, cfg.as_dict())


# -- continuity -----------------------------------------------------------------
@dataclass
class ContinuityResult:
    s: int
    perturbations: tuple
    deltas_in: list
    deltas_out: list
    floor: float  # out-delta of a bit-identical rerun
    monotone_claim: bool
    K: float
    tolerance: float
    eps_reg: float = 0.0
    triangle: list = field(default_factory=list)  # per n: (||v^n - v^n_eps||, ||v^n_eps - v_eps||, ||v_eps - v||)
    config: dict = field(default_factory=dict)

    @property
    def decades(self) -> float:
        """Span of the perturbation ladder in powers of ten."""
        return float(np.log10(self.perturbations[0] / self.perturbations[-1]))

    @property
    def out_decades(self) -> float:
        a, b = self.deltas_out[0], self.deltas_out[-1]
        return float(np.log10(a / b)) if a > 0 and b > 0 else float("nan")

    def to_json(self) -> dict:
        return {
            "experiment": "continuity", "s": self.s, "perturbations": list(self.perturbations),
            "deltas_in": self.deltas_in, "deltas_out": self.deltas_out, "floor": self.floor,
            "monotone_claim": self.monotone_claim, "K": self.K, "tolerance": self.tolerance,
            "decades": self.decades, "out_decades": self.out_decades, "eps_reg": self.eps_reg, "triangle": self.triangle, "solver": self.config,
        }

    def tables(self) -> dict:
        header = ["perturbation", "delta_in", "delta_out", "amplification"]
        rows = [[p, i, o, o / i if i else float("nan")]
                for p, i, o in zip(self.perturbations, self.deltas_in, self.deltas_out)]
        out = {"continuity": (header, rows)}
        if self.triangle:
            out["triangle"] = (["perturbation", "data_to_regularized", "regularized_pair", "regularized_to_limit"],
                               [[p, *t] for p, t in zip(self.perturbations, self.triangle)])
        return out


def continuity_experiment(problem: ValidatedProblem, v0: Field, perturbations: Sequence[float],
                          cfg: SolverConfig, s: int, *, direction: Optional[Field] = None,
                          K: Optional[float] = None, tolerance: float = 10.0, eps_reg: float = 0.0,
                          threads: int = 1) -> ContinuityResult:
    """Solve from v0 + d * direction for each d and compare with the solve from v0.

    The reference limit uses cfg.eps (normally 0).  With ``eps_reg > 0`` the
    three terms of the triangle inequality through the regularised solutions
    are also measured.
    """
    perturbations = tuple(float(d) for d in perturbations)
    if not perturbations or any(d <= 0 for d in perturbations) or not strictly_decreasing(perturbations):
        raise ValueError("perturbations must be positive and strictly decreasing")
    _check_grid(v0, problem, cfg)
    if direction is None:
        direction = bump(v0.n, v0.period, width=0.5)
    if not direction.same_grid(v0):
        raise GridMismatch("perturbation direction lives on a different grid")
    data = [v0 + d * direction for d in perturbations]
    norms = [float(sobolev_norms(w.values, w.period, s)[-1]) for w in [v0, *data]]
    if K is None:
        K = max(norms)
    if max(norms) > K:
        raise ValueError(f"data norm {max(norms):.4g} exceeds the bound K = {K:g}")

    runs = _map(lambda w: solve(w, problem, cfg), [v0, v0, *data], threads)
    ref, again, perturbed = runs[0], runs[1], runs[2:]
    deltas_in = [float(sobolev_norms(w.values - v0.values, v0.period, s)[-1]) for w in data]
    deltas_out = [_sup_sobolev_diff(tr, ref, s) for tr in perturbed]
    floor = _sup_sobolev_diff(again, ref, s)
    claim = strictly_decreasing(deltas_out) and deltas_out[-1] <= tolerance * deltas_in[-1]

    triangle = []
    if eps_reg > 0:
        reg = cfg.replace(eps=eps_reg)
        reg_runs = _map(lambda w: regularized_solve(problem, w, eps_reg, reg), [v0, *data], threads)
        reg_ref = reg_runs[0]
        for tr, tr_reg in zip(perturbed, reg_runs[1:]):
            triangle.append([_sup_sobolev_diff(tr, tr_reg, s), _sup_sobolev_diff(tr_reg, reg_ref, s),
                             _sup_sobolev_diff(reg_ref, ref, s)])
    return ContinuityResult(s, perturbations, deltas_in, deltas_out, floor, claim, float(K), tolerance,
                            eps_reg, triangle, cfg.as_dict())


# -- soliton benchmark ------------------------------------------------------------
def _first_mode_position(v: Field) -> float:
    """Location encoded in the phase of the first Fourier mode."""
    return float(-np.angle(v.spectrum[1]) * v.period / (2 * np.pi)) % v.period


@dataclass
class SolitonReport:
    c: float
    period: float
    residual: float
    shape_error: float
    phase_error: float
    mass_drift: float
    hamiltonian_drift: float
    eps_errors: list
    trajectory: Trajectory = field(repr=False, default=None)
    exact_final: Field = field(repr=False, default=None)
    config: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        tol = self.tolerances
        return (self.shape_error <= tol.get("shape", np.inf) and self.mass_drift <= tol.get("mass", np.inf)
                and self.hamiltonian_drift <= tol.get("hamiltonian", np.inf))

    def to_json(self) -> dict:
        return {
            "experiment": "soliton", "c": self.c, "period": self.period, "residual": self.residual,
            "shape_error": self.shape_error, "phase_error": self.phase_error, "mass_drift": self.mass_drift,
            "hamiltonian_drift": self.hamiltonian_drift,
            "eps_errors": [{"eps": e, "shape_error": err} for e, err in self.eps_errors],
            "tolerances": self.tolerances, "pass": self.passed, "solver": self.config,
        }

    def tables(self) -> dict:
        tr = self.trajectory
        diag = (["t", "mass", "hamiltonian", "h4"],
                [[d.t, d.mass, d.hamiltonian, d.sobolev[4]] for d in tr.diagnostics])
        eps = (["eps", "shape_error"], [[0.0, self.shape_error], *[[e, err] for e, err in self.eps_errors]])
        return {"soliton_diagnostics": diag, "soliton_eps": eps}


def certify_soliton(problem: ValidatedProblem, c: float, n: int, t: float = 0.0,
                    tol: float = CERTIFICATION_TOL) -> float:
    """Residual of the soliton formula with v_t = -c v_x; raises CertificationFailed above tol."""
    v = soliton(c, n, problem.period, t=t)
    vt = v.with_values(-c * derivative(v.values, v.period))
    res = pde_residual((v, vt), problem, 0.0)
    if not res <= tol:
        raise CertificationFailed(f"soliton residual {res:.3e} exceeds {tol:g}")
    return res


def _relative_drift(series) -> float:
    series = np.asarray(series, float)
    return drift(series) / max(abs(series[0]), 1.0)


def soliton_benchmark(c: float, period: float, cfg: SolverConfig, *, problem: Optional[ValidatedProblem] = None,
                      eps_list: Sequence[float] = (0.1, 0.05, 0.025), tolerances: Optional[dict] = None,
                      threads: int = 1) -> SolitonReport:
    """KdV soliton of speed c on a torus of length ``period``, certified before use."""
    if problem is None:
        problem = validate_problem(kdv_problem(period, J=(-1.0, max(4.0, 3.0 * c + 1.0))))
    if 3.0 * c > problem.J[1] or c <= 0:
        raise RangeViolation(f"soliton height 3c = {3 * c:g} is outside J = {problem.J}")
    if periodization_defect(c, period) > PERIODIZATION_TOL:
        raise ValueError(f"period {period:g} too short: periodization defect {periodization_defect(c, period):.2e}")
    residual = max(certify_soliton(problem, c, cfg.n, 0.0), certify_soliton(problem, c, cfg.n, cfg.T))

    v0 = soliton(c, cfg.n, period)
    exact = soliton(c, cfg.n, period, t=cfg.T)
    runs = _map(lambda e: solve(v0, problem, cfg.replace(eps=0.0)) if e == 0 else regularized_solve(
        problem, v0, e, cfg), [0.0, *eps_list], threads)
    tr = runs[0]
    norm = l2_norm(exact.values, period)
    shape = l2_norm(tr.final.values - exact.values, period) / norm
    phase = (_first_mode_position(tr.final) - _first_mode_position(exact) + period / 2) % period - period / 2
    eps_errors = [(float(e), l2_norm(r.final.values - exact.values, period) / norm)
                  for e, r in zip(eps_list, runs[1:])]
    tol = {"shape": 1e-6, "mass": 1e-10, "hamiltonian": 1e-6}
    tol.update(tolerances or {})
    return SolitonReport(c, period, residual, shape, float(phase), _relative_drift(tr.series("mass")),
                         _relative_drift(tr.series("hamiltonian")), eps_errors, tr, exact, cfg.as_dict(), tol)


# -- integrable benchmark ------------------------------------------------------------
@dataclass
class IntegrableReport:
    a: float
    eps_param: float
    mass_drift: float
    hamiltonian_drift: float
    refined_drift: Optional[float]
    trajectory: Trajectory = field(repr=False, default=None)
    config: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    @property
    def refinement_ratio(self) -> Optional[float]:
        if self.refined_drift is None or self.refined_drift == 0:
            return None
        return self.hamiltonian_drift / self.refined_drift

    @property
    def passed(self) -> bool:
        tol = self.tolerances
        return self.mass_drift <= tol.get("mass", np.inf) and self.hamiltonian_drift <= tol.get("hamiltonian", np.inf)

    def to_json(self) -> dict:
        return {
            "experiment": "integrable", "a": self.a, "eps": self.eps_param, "mass_drift": self.mass_drift,
            "hamiltonian_drift": self.hamiltonian_drift, "refined_drift": self.refined_drift,
            "refinement_ratio": self.refinement_ratio, "tolerances": self.tolerances, "pass": self.passed,
            "solver": self.config,
        }

    def tables(self) -> dict:
        tr = self.trajectory
        diag = (["t", "mass", "hamiltonian", "h4", "vmin", "vmax"],
                [[d.t, d.mass, d.hamiltonian, d.sobolev[4], *d.range] for d in tr.diagnostics])
        return {"integrable_diagnostics": diag}


def integrable_benchmark(a: float, eps_param: float, cfg: SolverConfig, *, v0: Optional[Field] = None,
                         period: float = 2 * np.pi, amplitude: float = 0.1, J: Optional[tuple] = None,
                         refine: bool = True, tolerances: Optional[dict] = None) -> IntegrableReport:
    """kappa(v) = eps^2/12 (v + a)^-3, p = v^2/2, run to cfg.T; optional dt/2 rerun for the drift order."""
    if J is None:
        J = (-a + 0.25 * abs(a), a + 10.0) if a > 0 else (-a + 0.25 * abs(a) + 1e-3, -a + 10.0)
    problem = validate_problem(integrable_problem(a, eps_param, period, J))
    if v0 is None:
        v0 = Field.from_function(lambda x: amplitude * np.cos(2 * np.pi * x / period), cfg.n, period)
    require_range(v0, problem.J)
    tr = solve(v0, problem, cfg)
    refined = None
    if refine:
        fine = solve(v0, problem, cfg.replace(dt=cfg.dt / 2, output_every=2 * cfg.output_every))
        refined = _relative_drift(fine.series("hamiltonian"))
    tol = {"mass": 1e-10, "hamiltonian": 1e-5}
    tol.update(tolerances or {})
    return IntegrableReport(a, eps_param, _relative_drift(tr.series("mass")),
                            _relative_drift(tr.series("hamiltonian")), refined, tr, cfg.as_dict(), tol)


# -- monitors -----------------------------------------------------------------------
@dataclass(frozen=True)
class AprioriSeries:
    times: np.ndarray
    ratio: np.ndarray  # ||v(t)||_{H^s} / ||v0||_{H^s}
    w3inf: np.ndarray

    def envelope(self) -> float:
        return float(np.max(self.ratio))


def apriori_monitor(traj: Trajectory, problem: ValidatedProblem, s: int) -> AprioriSeries:
    """Norm growth against the initial norm, with the W^{3,inf} norm that controls it."""
    if not 0 <= s <= 4:
        raise ValueError("s must lie in 0..4")
    hs = traj.series(f"h{s}")
    ratio = np.ones_like(hs) if hs[0] == 0 else hs / hs[0]
    return AprioriSeries(np.asarray(traj.times), ratio, traj.series("w3inf"))


__all__ = [
    "AprioriSeries", "ContinuityResult", "IntegrableReport", "SolitonReport", "SweepPair", "SweepResult",
    "apriori_monitor", "certify_soliton", "compare_pair", "continuity_experiment", "epsilon_sweep",
    "integrable_benchmark", "regularized_solve", "soliton_benchmark", "strictly_decreasing",
]
