import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from kreinfeller.estimators import HeatSemigroupTransformer, KreinFellerSpectrum, ResolventTransformer

X = np.linspace(0, 1, 65)


def test_resolvent_transformer_constants():
    est = ResolventTransformer(measure="cantor", lam=2.0)
    out = est.fit_transform(np.ones((2, 65)))
    assert out.shape == (2, 65)
    assert np.allclose(out, 0.5, atol=1e-8)


def _errors(make, exact, row):
    out = []
    for n in (65, 129, 257):
        x = np.linspace(0, 1, n)
        out.append(np.max(np.abs(make().fit_transform(row(x)[None])[0] - exact * row(x))))
    return np.array(out)


# rows are read as piecewise-linear functions, so the error is O(h^2)
def test_resolvent_transformer_lebesgue_eigenfunction():
    err = _errors(lambda: ResolventTransformer(measure="lebesgue", lam=1.0), 1 / (1 + np.pi**2),
                  lambda x: np.cos(np.pi * x))
    assert err[0] < 2e-5
    assert np.allclose(err[:-1] / err[1:], 4.0, rtol=0.05)


def test_heat_transformer_decay():
    t = 0.05
    err = _errors(lambda: HeatSemigroupTransformer(measure="lebesgue", t=t, bc="dirichlet"), np.exp(-np.pi**2 * t),
                  lambda x: np.sin(np.pi * x))
    assert err[0] < 2e-4
    assert np.allclose(err[:-1] / err[1:], 4.0, rtol=0.05)


def test_heat_transformer_rejects_negative_time():
    with pytest.raises(ValueError):
        HeatSemigroupTransformer(t=-1.0).fit(np.ones((1, 5)))


def test_spectrum_roundtrip():
    est = KreinFellerSpectrum(measure="lebesgue", bc="dirichlet", n_components=3)
    est.fit()
    assert np.allclose(est.eigenvalues_, [(k * np.pi) ** 2 for k in (1, 2, 3)], rtol=1e-6)
    rows = np.vstack([np.sqrt(2) * np.sin(np.pi * X), np.sqrt(2) * np.sin(2 * np.pi * X)])
    coef = est.transform(rows)
    assert np.allclose(np.abs(coef), np.eye(2, 3), atol=1e-3)
    back = est.inverse_transform(coef)
    assert np.allclose(back, rows, atol=1e-2)


def test_spectrum_oracle_method():
    est = KreinFellerSpectrum(measure="cantor", n_components=2, method="oracle", atoms=2048).fit()
    assert est.eigenvalues_[0] == pytest.approx(KreinFellerSpectrum(n_components=2).fit().eigenvalues_[0], rel=1e-2)
    with pytest.raises(ValueError):
        KreinFellerSpectrum(method="magic").fit()


@pytest.mark.parametrize("est", [ResolventTransformer(), HeatSemigroupTransformer(), KreinFellerSpectrum()])
def test_not_fitted(est):
    with pytest.raises(NotFittedError):
        est.transform(np.ones((1, 5)))


@pytest.mark.parametrize("est", [ResolventTransformer(lam=3.0), HeatSemigroupTransformer(t=0.2), KreinFellerSpectrum(n_components=4)])
def test_clone_keeps_params(est):
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    assert twin is not est


def test_shape_checks():
    est = ResolventTransformer(measure="lebesgue").fit(np.ones((1, 9)))
    with pytest.raises(ValueError):
        est.transform(np.ones((1, 8)))
    with pytest.raises(ValueError):
        ResolventTransformer(points=[0, 0.5, 1]).fit(np.ones((1, 4)))
    with pytest.raises(ValueError):
        ResolventTransformer().fit(np.ones((1, 1)))


def test_pipeline():
    pipe = make_pipeline(ResolventTransformer(measure="lebesgue", lam=1.0), KreinFellerSpectrum(measure="lebesgue", bc="neumann", n_components=2))
    coef = pipe.fit_transform(np.ones((1, 33)))
    assert coef.shape == (1, 2)
    assert abs(coef[0, 0]) == pytest.approx(1.0, abs=1e-3)
