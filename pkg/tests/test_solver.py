import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qkdv.errors import BlowupDetected, RangeViolation, StepRejected
from qkdv.field import Field, l2_norm
from qkdv.initial import random_bandlimited, soliton
from qkdv.model import linear_problem, power_problem, validate_problem
from qkdv.solver import SolverConfig, airy_reference, mollify, rhs, solve, step

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def airy():
    return validate_problem(linear_problem(1.0, 0.5, TWO_PI, (-3.0, 3.0)))


@pytest.mark.parametrize("kw", [
    {"dt": 0.0}, {"T": -1.0}, {"dealias_fraction": 0.9}, {"beta": 1.0}, {"beta": 0.0},
    {"eps": -0.1}, {"integrator": "rk4"}, {"output_every": 0}, {"window": "box"},
])
def test_config_invariants(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_config_steps():
    cfg = SolverConfig(dt=0.3, T=1.0)
    assert cfg.steps == 4 and cfg.dt_effective == pytest.approx(0.25)
    assert cfg.replace(n=64).n == 64


# -- mollifier ---------------------------------------------------------------------
def mode(m, n=128, period=TWO_PI):
    return Field.from_function(lambda x: np.cos(2 * np.pi * m * x / period), n, period)


@pytest.mark.parametrize("window", ["raised-cosine", "smooth"])
def test_mollify_low_mode_unchanged(window):
    eps, beta = 0.1, 0.75
    eta = eps ** beta  # 0.178; modes with xi <= 1/(2 eta) = 2.81 pass
    v = mode(2)
    assert 2 * eta <= 0.5
    assert np.allclose(mollify(v, eps, beta, window).values, v.values, atol=1e-14)


@pytest.mark.parametrize("window", ["raised-cosine", "smooth"])
def test_mollify_high_mode_removed(window):
    v = mode(6)
    assert 6 * 0.1 ** 0.75 >= 1
    assert np.allclose(mollify(v, 0.1, 0.75, window).values, 0.0, atol=1e-14)


def test_mollify_eps_zero_identity():
    v = mode(3)
    assert mollify(v, 0.0) is v


def test_mollify_error_nonincreasing(rng):
    v = random_bandlimited(rng, 256, TWO_PI, modes=30, decay=0.5)
    errs = [l2_norm(mollify(v, e).values - v.values, TWO_PI) for e in (0.8, 0.4, 0.2, 0.1, 0.05, 0.025)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < errs[0]


def test_mollify_rejects_bad_beta():
    with pytest.raises(ValueError):
        mollify(mode(1), 0.1, beta=1.5)


# -- right-hand side ---------------------------------------------------------------------
def test_rhs_of_constant(kdv):
    assert np.all(rhs(Field.constant(0.3, 64, TWO_PI), kdv).values == 0.0)


@pytest.mark.parametrize("eps", [0.0, 0.3])
@pytest.mark.parametrize("m", [1, 3, 7])
def test_rhs_linear_multiplier(m, eps):
    c, k0 = 0.7, 1.3
    prob = validate_problem(linear_problem(c, k0, TWO_PI, (-2, 2)))
    v = mode(m)
    out = rhs(v, prob, eps).spectrum[m]
    xi = float(m)
    expected = -(1j * c * xi - 1j * k0 * xi ** 3 + eps ** 4 * xi ** 4) * v.spectrum[m]
    assert out == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("eps", [0.0, 0.2])
def test_rhs_soliton_finite_difference(eps):
    prob = validate_problem(power_problem(2, 40.0, (-1, 4)))
    v = soliton(1.0, 512, 40.0)
    dx = 40.0 / 512
    c8 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])

    def d(w):
        return sum(ci * np.roll(w, -j) for ci, j in zip(c8, range(-4, 5))) / dx

    vx = d(v.values)
    vxxx = d(d(vx))
    vxxxx = d(vxxx)
    oracle = -(v.values * vx + vxxx) - eps ** 4 * vxxxx
    assert np.max(np.abs(rhs(v, prob, eps).values - oracle)) <= 1e-6


def test_rhs_range_violation(kdv):
    with pytest.raises(RangeViolation):
        rhs(Field.constant(9.0, 32, TWO_PI), kdv)


# -- airy reference ------------------------------------------------------------------------
def test_airy_identities(rng):
    v = random_bandlimited(rng, 64, TWO_PI, modes=6)
    assert np.allclose(airy_reference(v, 1.0, 1.0, 0.0).values, v.values, atol=1e-15)
    assert np.allclose(airy_reference(v, 0.0, 0.0, 3.0).values, v.values, atol=1e-15)


def test_airy_phase_advance():
    c, k0, t, m = 0.4, 0.9, 0.7, 3
    v = mode(m, n=64)
    out = airy_reference(v, c, k0, t)
    assert out.spectrum[m] / v.spectrum[m] == pytest.approx(np.exp(1j * (k0 * m ** 3 - c * m) * t), abs=1e-14)


# -- stepping -------------------------------------------------------------------------
def test_step_fixed_points(kdv):
    cfg = SolverConfig(n=64, dt=1e-2)
    assert np.all(step(Field.constant(0.0, 64, TWO_PI), kdv, cfg).values == 0.0)
    out = step(Field.constant(0.8, 64, TWO_PI), kdv, cfg)
    assert np.allclose(out.values, 0.8, atol=1e-15)


@pytest.mark.parametrize("integrator", ["exponential-rk", "imex-bdf2"])
def test_linear_one_step_matches_airy(airy, rng, integrator):
    v = random_bandlimited(rng, 128, TWO_PI, modes=10)
    dt = 1e-2
    out = step(v, airy, SolverConfig(n=128, dt=dt, integrator=integrator))
    assert l2_norm(out.values - airy_reference(v, 1.0, 0.5, dt).values, TWO_PI) <= dt ** 3


def test_linear_solve_matches_airy(airy, rng):
    v = random_bandlimited(rng, 128, TWO_PI, modes=10)
    tr = solve(v, airy, SolverConfig(n=128, dt=1e-2, T=1.0))
    assert l2_norm(tr.final.values - airy_reference(v, 1.0, 0.5, 1.0).values, TWO_PI) <= 1e-8


def test_imex_linear_second_order(airy, rng):
    # BDF2 is not exact on the linear part, so check its order against the exact flow
    v = random_bandlimited(rng, 128, TWO_PI, modes=5)
    exact = airy_reference(v, 1.0, 0.5, 0.2).values
    errs = [l2_norm(solve(v, airy, SolverConfig(n=128, dt=dt, T=0.2, integrator="imex-bdf2",
                                                output_every=10 ** 6)).final.values - exact, TWO_PI)
            for dt in (4e-4, 2e-4, 1e-4)]
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


def test_zero_data_stays_zero(kdv):
    tr = solve(Field.constant(0.0, 64, TWO_PI), kdv, SolverConfig(n=64, dt=1e-2, T=0.2))
    assert all(np.all(s.values == 0.0) for s in tr.states)


def test_determinism(kdv, rng):
    v = random_bandlimited(rng, 128, TWO_PI, modes=5, w1=1.0)
    cfg = SolverConfig(n=128, dt=1e-3, T=0.2)
    a, b = solve(v, kdv, cfg), solve(v, kdv, cfg)
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a.states, b.states))


def test_trajectory_invariants(kdv, rng):
    v = random_bandlimited(rng, 128, TWO_PI, modes=4, w1=0.3)
    tr = solve(v, kdv, SolverConfig(n=128, dt=1e-3, T=0.05, output_every=7))
    assert np.all(np.diff(tr.times) > 0)
    assert tr.times[-1] == pytest.approx(0.05)
    assert len(tr.states) == len(tr.diagnostics) == len(tr.times)
    with pytest.raises(ValueError):
        tr.append(0.0, v, kdv)
    with pytest.raises(ValueError):
        tr.append(1.0, Field.constant(0.0, 32, TWO_PI), kdv)


@settings(max_examples=8)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 0.3), st.floats(-1.0, 1.0))
def test_mass_conserved(seed, eps, mean):
    prob = validate_problem(power_problem(2, TWO_PI, (-4, 4)))
    v = random_bandlimited(np.random.default_rng(seed), 128, TWO_PI, modes=4, w1=0.3, mean=mean)
    tr = solve(v, prob, SolverConfig(n=128, dt=2e-3, T=0.2, eps=eps))
    m = tr.series("mass")
    assert np.max(np.abs(m - m[0])) <= 1e-10 * (1 + abs(m[0]))


def test_linear_l2_non_expanding(airy, rng):
    v = random_bandlimited(rng, 128, TWO_PI, modes=20)
    dt, T = 1e-2, 1.0
    tr = solve(v, airy, SolverConfig(n=128, dt=dt, T=T, eps=0.3))
    norms = tr.series("h0")
    assert np.all(norms <= norms[0] * (1 + 10 * dt ** 2 * T))
    assert norms[-1] < norms[0]


@pytest.mark.parametrize("integrator", ["exponential-rk", "imex-bdf2"])
def test_temporal_self_convergence(kdv, integrator):
    v = Field.from_function(lambda x: 0.8 * np.cos(x) + 0.3 * np.sin(2 * x), 128, TWO_PI)
    finals = {}
    for dt in (4e-3, 2e-3, 1e-3):
        cfg = SolverConfig(n=128, dt=dt, T=0.5, integrator=integrator, output_every=10 ** 6)
        finals[dt] = solve(v, kdv, cfg).final.values
    e1 = l2_norm(finals[4e-3] - finals[2e-3], TWO_PI)
    e2 = l2_norm(finals[2e-3] - finals[1e-3], TWO_PI)
    assert e1 / e2 >= 3.5


def test_integrators_agree(kdv):
    v = Field.from_function(lambda x: 0.8 * np.cos(x), 128, TWO_PI)
    a = solve(v, kdv, SolverConfig(n=128, dt=1e-3, T=0.3)).final.values
    b = solve(v, kdv, SolverConfig(n=128, dt=1e-3, T=0.3, integrator="imex-bdf2")).final.values
    assert l2_norm(a - b, TWO_PI) <= 1e-5


def test_step_rejected_when_unresolved(kdv):
    # steepening KdV data on a 32-point grid fills the spectral tail
    v = Field.from_function(lambda x: np.cos(x), 32, TWO_PI)
    with pytest.raises(StepRejected):
        solve(v, kdv, SolverConfig(n=32, dt=1e-3, T=2.0))


def test_initial_data_out_of_range(kdv):
    with pytest.raises(RangeViolation):
        solve(Field.constant(7.0, 64, TWO_PI), kdv, SolverConfig(n=64))


def test_grid_size_must_match(kdv):
    with pytest.raises(ValueError):
        solve(Field.constant(0.0, 64, TWO_PI), kdv, SolverConfig(n=128))


def focusing_bump(amplitude, n):
    return Field.from_function(lambda x: amplitude * np.exp(-4 * (1 - np.cos(x - np.pi))), n, TWO_PI)


def test_blowup_detected_only_for_large_data():
    prob = validate_problem(power_problem(4, TWO_PI, (-20, 20)))
    cfg = SolverConfig(n=512, dt=1e-5, T=0.1, blowup_factor=10.0, output_every=100)
    small = solve(focusing_bump(0.5, 512), prob, cfg)
    assert small.times[-1] == pytest.approx(0.1)
    with pytest.raises(BlowupDetected) as info:
        solve(focusing_bump(4.0, 512), prob, cfg)
    tr = info.value.trajectory
    assert tr.diagnostics[-1].sobolev[4] > 10 * tr.diagnostics[0].sobolev[4]
    assert 0 < info.value.time < 0.1
    m = tr.series("mass")
    assert np.max(np.abs(m - m[0])) <= 1e-10 * (1 + abs(m[0]))
