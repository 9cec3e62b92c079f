import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import kreinfeller as kf
from kreinfeller import _quadrature as quad
from kreinfeller.calculus import tent_average
from kreinfeller.errors import BoundaryError, ConfigError, InsufficientEigenpairsError


def sin_pi(x):
    return np.sin(np.pi * x)


# -- heat kernel ---------------------------------------------------------------


def test_lebesgue_dirichlet_kernel_value():
    k = kf.heat_kernel(kf.lebesgue(), "D", 0.1)
    series = 2 * sum(math.exp(-(j * math.pi) ** 2 * 0.1) * math.sin(j * math.pi / 2) ** 2 for j in range(1, 60))
    assert k(0.5, 0.5) == pytest.approx(series, abs=1e-9)
    assert k(0.5, 0.5) == pytest.approx(0.7456932, abs=1e-7)
    assert k.truncation_estimate < 1e-10


def test_kernel_symmetric_and_nonnegative(builtin):
    k = kf.heat_kernel(builtin, "D", 0.05)
    pts = np.linspace(0, 1, 33)
    mat = k.matrix(pts)
    assert np.allclose(mat, mat.T, atol=1e-14)
    assert np.all(mat >= -k.truncation_estimate - 1e-12)
    assert k(0.2, 0.7) == pytest.approx(k(0.7, 0.2), abs=1e-14)


def test_neumann_kernel_is_stochastic(builtin):
    k = kf.heat_kernel(builtin, "N", 1.0)
    assert np.max(np.abs(k.row_masses() - 1)) < 1e-6
    k = kf.heat_kernel(builtin, "N", 0.05)
    assert np.max(np.abs(k.row_masses() - 1)) < k.truncation_estimate + 1e-8


def test_neumann_kernel_equilibrates():
    k = kf.heat_kernel(kf.lebesgue(), "N", 10.0)
    assert np.max(np.abs(k.values - 1)) < 1e-8


def test_small_time_kernel_is_refused():
    with pytest.raises(InsufficientEigenpairsError) as info:
        kf.heat_kernel(kf.lebesgue(), "D", 1e-5)
    assert info.value.required > 64


def test_kernel_argument_checks():
    with pytest.raises(ConfigError):
        kf.heat_kernel(kf.lebesgue(), "D", 0.0)
    with pytest.raises(ConfigError):
        kf.heat_kernel(kf.lebesgue(), "D", 0.1, tol=0)


# -- semigroup -------------------------------------------------------------------


def test_time_zero_returns_data(builtin):
    f = kf.GridFunction(np.linspace(0, 1, 9), np.linspace(0, 1, 9) ** 2)
    u = kf.apply_semigroup(builtin, "N", 0.0, f)
    assert u is f


def test_lebesgue_eigenmode_decay():
    u = kf.apply_semigroup(kf.lebesgue(), "D", 0.1, sin_pi)
    x = np.linspace(0, 1, 101)
    exact = math.exp(-(math.pi**2) * 0.1) * np.sin(np.pi * x)
    assert np.max(np.abs(u.smooth(x) - exact)) < 1e-8
    assert u.smooth(0.5) == pytest.approx(0.37270784, abs=1e-8)


@pytest.mark.parametrize("t", [0.01, 0.3, 2.0])
def test_constants_invariant(builtin, t):
    u = kf.apply_semigroup(builtin, "N", t, 0.7)
    assert np.max(np.abs(u.values - 0.7)) < 1e-9


def test_dirichlet_data_validated():
    with pytest.raises(BoundaryError):
        kf.apply_semigroup(kf.cantor(), "D", 0.1, lambda x: x)
    with pytest.raises(BoundaryError):
        kf.solve_heat(kf.cantor(), "D", lambda x: 1 + 0 * x, [0, 0.1])


def test_semigroup_argument_checks():
    with pytest.raises(ConfigError):
        kf.apply_semigroup(kf.lebesgue(), "N", -0.1, sin_pi)
    with pytest.raises(ConfigError):
        kf.apply_semigroup(kf.lebesgue(), "N", 0.1, sin_pi, method="crank")
    with pytest.raises(ConfigError):
        kf.apply_semigroup(kf.lebesgue(), "N", 0.1, sin_pi, method="backward_euler", steps=0)
    with pytest.raises(ConfigError):
        kf.solve_heat(kf.lebesgue(), "N", sin_pi, [0.1, 0.2])
    with pytest.raises(ConfigError):
        kf.solve_heat(kf.lebesgue(), "N", sin_pi, [0, 0.2, 0.2])


def test_backward_euler_is_iterated_scaled_resolvent():
    m = kf.cantor_approx(2)

    def f(x):
        return x * (1 - x)

    steps, t = 3, 0.2
    lam = steps / t
    u = kf.apply_semigroup(m, "N", t, f, method="backward_euler", steps=steps)
    v = f
    for _ in range(steps):
        v = kf.apply_resolvent(m, lam, "N", v, grid=u.grid).scaled(lam)
    assert np.max(np.abs(u.values - v.values)) < 1e-12


# -- heat equation ----------------------------------------------------------------


def test_solve_heat_lebesgue():
    sol = kf.solve_heat(kf.lebesgue(), "D", sin_pi, [0, 0.01, 0.1])
    x = np.linspace(0, 1, 201)
    for t, u in zip(sol.times, sol.states):
        assert np.max(np.abs(u.smooth(x) - math.exp(-(math.pi**2) * t) * np.sin(np.pi * x))) < 1e-4
    assert sol.states[0] is sol.initial


def test_solve_heat_matches_direct_evaluation():
    m = kf.cantor()

    def f(x):
        return x * (1 - x)

    times = [0, 0.05, 0.1, 0.5]
    sol = kf.solve_heat(m, "D", f, times)
    for t, u in zip(times[1:], sol.states[1:]):
        direct = kf.apply_semigroup(m, "D", t, f, grid=u.grid)
        assert np.max(np.abs(direct.values - u.values)) < 1e-9


def _heat_masses(m, f, method, n=2049):
    sol = kf.solve_heat(m, "N", f, [0, 0.02, 0.1, 0.5], method=method, steps=8, n=n)
    grid = sol.states[-1].grid
    cells = quad.cells(m, grid)
    # states[0] is the sampled data; the flow conserves the mass of f itself
    masses = np.array([quad.integral(cells, quad.sample(u, grid)) for u in sol.states[1:]])
    return np.max(np.abs(masses - kf.integrate(m, f)))


def _bumpy(x):
    return np.exp(2 * x) * (1 + np.cos(5 * x))


def test_neumann_mass_conserved(builtin):
    assert _heat_masses(builtin, _bumpy, "eigen") < 1e-6


def test_neumann_mass_backward_euler(builtin):
    # each step is a resolvent with lambda = steps / dt; its quadrature defect shrinks with the grid
    fine = _heat_masses(builtin, _bumpy, "backward_euler")
    assert fine < 1e-4
    if builtin != kf.lebesgue():
        assert fine < _heat_masses(builtin, _bumpy, "backward_euler", n=1025)


def test_heat_solution_invariants(builtin):
    def f(x):
        return np.sin(3 * np.pi * x) + 0.5 * np.sin(np.pi * x)

    sol = kf.solve_heat(builtin, "D", f, [0, 0.01, 0.05, 0.2])
    norms = sol.sup_norms()
    assert np.all(np.diff(norms) <= 1e-9)
    for u in sol.states:
        assert u.values[0] == 0.0 and u.values[-1] == 0.0


def _euler_gap_prediction(m, f, t, steps):
    """|sum c_k ((1 + lam_k t/steps)^-steps - exp(-lam_k t)) phi_k| from a long eigen-expansion."""
    dec = kf.eigen_shooting(m, "D", count=30)
    grid = dec.grid
    cells = quad.cells(m, grid)
    fs = quad.sample(f, grid)
    coef = np.array([quad.integral(cells, fs * quad.sample(phi, grid)) for phi in dec.eigenfunctions])
    lam = dec.eigenvalues
    factor = (1 + lam * t / steps) ** (-steps) - np.exp(-lam * t)
    return grid, (coef * factor) @ dec.values()


def test_euler_gap_on_hat_matches_rational_prediction():
    from kreinfeller.experiments import parse_rhs

    m = kf.cantor_approx(2)
    hat = parse_rhs("hat(0,0.5,1)")
    eig = kf.apply_semigroup(m, "D", 0.05, hat)
    grid, predicted = _euler_gap_prediction(m, hat, 0.05, 64)
    gaps = {}
    for steps in (64, 256):
        eul = kf.apply_semigroup(m, "D", 0.05, hat, method="backward_euler", steps=steps, grid=eig.grid)
        gaps[steps] = np.max(np.abs(eul.values - eig.values))
    diff = kf.apply_semigroup(m, "D", 0.05, hat, method="backward_euler", steps=64, grid=grid).smooth(grid)
    diff = diff - eig.smooth(grid)
    assert np.max(np.abs(diff - predicted)) < 1e-6
    assert gaps[64] == pytest.approx(np.max(np.abs(predicted)), rel=1e-3)
    assert gaps[256] < 1e-3


def test_euler_converges_at_first_order():
    m = kf.cantor()
    f = sin_pi
    eig = kf.apply_semigroup(m, "D", 0.1, f)
    errs = []
    for k in range(2, 7):
        u = kf.apply_semigroup(m, "D", 0.1, f, method="backward_euler", steps=2**k, grid=eig.grid)
        errs.append(np.max(np.abs(u.values - eig.values)))
    errs = np.array(errs)
    assert np.all(np.diff(errs) < 0)
    order = np.log2(errs[:-1] / errs[1:])
    assert np.all(np.abs(order[-2:] - 1) < 0.15)


# -- properties -----------------------------------------------------------------


@settings(max_examples=10)
@given(
    st.lists(st.floats(-1, 1), min_size=7, max_size=7),
    st.sampled_from([0.01, 0.1, 1.0]),
    st.sampled_from(["lebesgue", "cantor37", "approx2"]),
)
def test_contraction(values, t, name):
    from conftest import BUILTIN

    m = BUILTIN[name]()
    f = kf.GridFunction(np.linspace(0, 1, 7), np.array(values))
    u = kf.apply_semigroup(m, "N", t, f)
    assert u.sup_norm() <= f.sup_norm() + 1e-6


@pytest.mark.parametrize("bc", ["N", "D"])
def test_semigroup_law(builtin, bc):
    def f(x):
        return x * (1 - x) * np.exp(x)

    t, s = 0.05, 0.1
    whole = kf.apply_semigroup(builtin, bc, t + s, f)
    half = kf.apply_semigroup(builtin, bc, s, f, grid=whole.grid)
    twice = kf.apply_semigroup(builtin, bc, t, half, grid=whole.grid)
    assert np.max(np.abs(whole.values - twice.values)) < 1e-6


def test_strong_continuity(builtin):
    def f(x):
        return np.abs(x - 0.4)

    # t = 0.001 needs eigenvalues near 5e4, beyond the default grid for the piecewise-linear measure
    n = 4097
    fs = f(builtin.adapted_grid(n))
    dist = [
        np.max(np.abs(kf.apply_semigroup(builtin, "N", t, f, tol=1e-8, n=n).values - fs)) for t in (0.1, 0.01, 0.001)
    ]
    assert dist[0] > dist[1] > dist[2]


def test_solution_property():
    m = kf.cantor()

    def f(x):
        return x * (1 - x)

    t, dt = 0.1, 1e-4
    before, now, after = (kf.apply_semigroup(m, "N", s, f) for s in (t - dt, t, t + dt))
    grid = now.grid
    dudt = kf.GridFunction(grid, (after.values - before.values) / (2 * dt))
    op = kf.apply_krein_feller(m, now, h=1e-3)
    rhs = tent_average(m, dudt, op.points, 1e-3, grid)
    assert np.max(np.abs(op.values - rhs)) <= 0.05 * np.max(np.abs(rhs))
