import math

import numpy as np
import pytest

import kreinfeller as kf
from kreinfeller.calculus import tent_average
from kreinfeller.errors import ConfigError, NumericalError


def test_lebesgue_dirichlet():
    dec = kf.eigen_shooting(kf.lebesgue(), "D", count=5)
    k = np.arange(1, 6)
    assert np.allclose(dec.eigenvalues, (k * np.pi) ** 2, rtol=1e-6, atol=0)
    assert dec.count == 5 and dec.method == "shooting"
    x = dec.grid
    for j, phi in enumerate(dec.eigenfunctions, start=1):
        assert np.max(np.abs(phi.values - math.sqrt(2) * np.sin(j * np.pi * x))) < 1e-6


def test_lebesgue_neumann():
    dec = kf.eigen_shooting(kf.lebesgue(), "N", count=2)
    assert dec.eigenvalues[0] == 0.0
    assert dec.eigenvalues[1] == pytest.approx(math.pi**2, rel=1e-6)
    assert np.all(dec.eigenfunctions[0].values == 1.0)


def test_neumann_ground_state_is_constant(builtin):
    dec = kf.eigen_shooting(builtin, "N", count=1)
    assert dec.eigenvalues[0] == 0.0
    assert np.all(dec.eigenfunctions[0].values == 1.0)


def test_cantor_reference_values():
    # shooting and the string oracle agree on these to about 1e-7
    assert kf.eigen_shooting(kf.cantor(), "D", count=1).eigenvalues[0] == pytest.approx(14.43524051, rel=1e-8)
    neu = kf.eigen_shooting(kf.cantor(), "N", count=2).eigenvalues
    assert neu[1] == pytest.approx(7.0974311, rel=1e-7)


@pytest.mark.parametrize("bc", ["N", "D"])
def test_boundary_conditions_and_positive_ground_state(builtin, bc):
    dec = kf.eigen_shooting(builtin, bc, count=4)
    assert np.all(np.diff(dec.eigenvalues) > 0)
    if bc == "D":
        assert dec.eigenvalues[0] > 0
        for phi in dec.eigenfunctions:
            assert phi.values[0] == 0.0 and phi.values[-1] == 0.0
    else:
        assert dec.eigenvalues[0] >= 0
        for phi in dec.eigenfunctions:
            assert abs(phi.derivative[0]) < 1e-9
            assert abs(phi.derivative[-1]) < 1e-6 * max(1.0, np.abs(phi.derivative).max())


def test_sign_convention(builtin):
    dec = kf.eigen_shooting(builtin, "D", count=4)
    for phi in dec.eigenfunctions:
        v = phi.values
        first = np.flatnonzero(np.abs(v) > 0.1 * np.abs(v).max())[0]
        assert v[first] > 0


def test_orthonormality(builtin):
    dec = kf.eigen_shooting(builtin, "D", count=5)
    assert kf.orthonormality_defect(dec) < 1e-4


def test_orthonormality_examples():
    assert kf.orthonormality_defect(kf.eigen_shooting(kf.lebesgue(), "D", count=5)) < 1e-6
    single = kf.eigen_shooting(kf.cantor(0.3, 0.7), "D", count=1)
    assert abs(single.gram()[0, 0] - 1) < 1e-10
    m = kf.cantor_approx(3)
    coarse = kf.orthonormality_defect(kf.eigen_shooting(m, "N", count=4, n=257))
    fine = kf.orthonormality_defect(kf.eigen_shooting(m, "N", count=4))
    assert fine < 1e-4
    assert fine <= coarse


@pytest.mark.parametrize("bc", ["N", "D"])
def test_shooting_matches_oracle(builtin, bc):
    a = kf.eigen_shooting(builtin, bc, count=5).eigenvalues
    b = kf.eigen_matrix_oracle(builtin, bc, atoms=4000, count=5).eigenvalues
    assert b[0] == pytest.approx(a[0], abs=1e-6) if bc == "N" else True
    nonzero = slice(1, None) if bc == "N" else slice(None)
    assert np.allclose(b[nonzero], a[nonzero], rtol=1e-3, atol=0)


def test_oracle_examples():
    leb = kf.lebesgue()
    d = kf.eigen_matrix_oracle(leb, "D", atoms=2000, count=3)
    k = np.arange(1, 4)
    assert np.allclose(d.eigenvalues, (k * np.pi) ** 2, rtol=1e-4, atol=0)
    n = kf.eigen_matrix_oracle(leb, "N", atoms=2000, count=1)
    assert abs(n.eigenvalues[0]) < 1e-10
    c = kf.cantor()
    lo = kf.eigen_matrix_oracle(c, "D", atoms=4096, count=1).eigenvalues[0]
    hi = kf.eigen_matrix_oracle(c, "D", atoms=8192, count=1).eigenvalues[0]
    assert float(f"{lo:.3g}") == float(f"{hi:.3g}")


def test_oracle_requires_enough_atoms():
    with pytest.raises(ConfigError):
        kf.eigen_matrix_oracle(kf.lebesgue(), "D", atoms=40, count=5)


def test_dirichlet_neumann_bracketing(builtin):
    n = kf.eigen_shooting(builtin, "N", count=5).eigenvalues
    d = kf.eigen_shooting(builtin, "D", count=5).eigenvalues
    assert np.all(n <= d + 1e-9)


@pytest.mark.parametrize("bc", ["N", "D"])
def test_sign_changes_lebesgue(bc):
    dec = kf.eigen_shooting(kf.lebesgue(), bc, count=5)
    for k, phi in enumerate(dec.eigenfunctions, start=1):
        v = phi.values[1:-1]
        v = v[np.abs(v) > 1e-12]
        assert np.count_nonzero(np.diff(np.sign(v))) == k - 1


def test_residual(builtin):
    dec = kf.eigen_shooting(builtin, "D", count=3)
    for lk, phi in zip(dec.eigenvalues, dec.eigenfunctions):
        # the tent quotient estimates the tent-weighted mu-average of Delta phi
        op = kf.apply_krein_feller(builtin, phi)
        res = op.values + lk * tent_average(builtin, phi, op.points, 1e-3, dec.grid)
        assert np.max(np.abs(res)) < 1e-2 * lk


def test_below_selects_all_small_eigenvalues():
    dec = kf.eigen_shooting(kf.lebesgue(), "D", below=100.0)
    assert dec.count == 3
    assert dec.eigenvalues[-1] < 100.0


def test_bad_arguments():
    with pytest.raises(ConfigError):
        kf.eigen_shooting(kf.lebesgue(), "D", count=0)
    with pytest.raises(ConfigError):
        kf.eigen_shooting(kf.lebesgue(), "D", count=1, tol=0)


def test_coarse_grid_is_reported():
    with pytest.raises(NumericalError, match="grid too coarse"):
        kf.eigen_shooting(kf.lebesgue(), "D", count=40, grid=np.linspace(0, 1, 5))


def test_values_and_gram_shapes():
    dec = kf.eigen_shooting(kf.cantor(), "N", count=3)
    pts = np.linspace(0, 1, 7)
    assert dec.values(pts).shape == (3, 7)
    assert dec.gram().shape == (3, 3)
    assert np.array_equal(dec.values(), np.array([phi.values for phi in dec.eigenfunctions]))
