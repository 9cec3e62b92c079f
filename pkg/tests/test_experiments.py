import csv
import io
import json
import math

import numpy as np
import pytest

import kreinfeller as kf
from kreinfeller import experiments as ex
from kreinfeller.errors import BoundaryError, ConfigError, ConvergenceError, InvariantViolation, SupportInclusionError


# -- right-hand sides ------------------------------------------------------------


@pytest.mark.parametrize(
    "text, x, value",
    [
        ("const(2.5)", 0.3, 2.5),
        ("-1", 0.7, -1.0),
        ("x", 0.3, 0.3),
        ("x(1-x)", 0.3, 0.21),
        ("x * (1 - x)", 0.5, 0.25),
        ("sin(pi x)", 0.5, 1.0),
        ("sin(2*pi*x)", 0.25, 1.0),
        ("sin(3πx)", 1 / 6, 1.0),
        ("hat(0,0.5,1)", 0.25, 0.5),
        ("hat(0.2,0.3,0.6)", 0.45, 0.5),
        ("hat(0.2,0.3,0.6)", 0.1, 0.0),
    ],
)
def test_parse_rhs(text, x, value):
    rhs = ex.parse_rhs(text)
    assert float(rhs(np.array([x]))[0]) == pytest.approx(value, abs=1e-14)
    assert rhs.descriptor == text


def test_rhs_derivatives():
    x = np.linspace(0.05, 0.95, 7)
    assert np.allclose(ex.parse_rhs("sin(2 pi x)").derivative(x), 2 * np.pi * np.cos(2 * np.pi * x))
    assert np.allclose(ex.parse_rhs("x(1-x)").derivative(x), 1 - 2 * x)


@pytest.mark.parametrize("text", ["cos(x)", "hat(0.5,0.2,1)", "hat(0,0.5,2)", "", "sin(pix"])
def test_parse_rhs_rejects(text):
    with pytest.raises(ConfigError):
        ex.parse_rhs(text)


def test_tabulated_rhs(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("0,0\n0.5,1\n1,0\n")
    rhs = ex.parse_rhs(f"@{path}")
    assert float(rhs(np.array([0.25]))[0]) == pytest.approx(0.5)
    with pytest.raises(ConfigError):
        ex.parse_rhs(f"@{tmp_path / 'missing.csv'}")


# -- families --------------------------------------------------------------------


def test_mixture_family_cdf():
    fam = ex.build_family({"kind": "epsilon_mixture", "limit": {"type": "cantor"}, "epsilons": [1.0]})
    assert fam.approximants[0].cdf(0.5) == pytest.approx(0.5, abs=1e-14)
    assert fam.labels == ["eps=1.0"]


def test_cantor_levels_family():
    fam = ex.build_family({"kind": "cantor_levels"})
    assert fam.labels == [f"n={n}" for n in range(1, 7)]
    d = np.array(fam.distances())
    assert d[0] == pytest.approx(1 / 12, abs=1e-12)
    assert np.all(np.abs(d[1:] / d[:-1] - 0.5) <= 0.05)


def test_composed_family_pairs_levels_and_epsilons():
    fam = ex.build_family({"kind": "composed", "levels": [0, 2], "epsilons": [0.5, 0.1]})
    assert fam.labels == ["n=0;eps=0.5", "n=2;eps=0.1"]
    assert fam.approximants[1] == kf.mixture(kf.cantor_approx(2), 0.1)


def test_family_from_json_text_and_file(tmp_path):
    spec = {"kind": "cantor_levels", "levels": [1, 2]}
    a = ex.build_family(json.dumps(spec))
    path = tmp_path / "fam.json"
    path.write_text(json.dumps(spec))
    b = ex.build_family(str(path))
    assert a.approximants == b.approximants


@pytest.mark.parametrize(
    "spec",
    [
        {"kind": "spiral"},
        {"kind": "cantor_levels", "levels": [-1]},
        {"kind": "cantor_levels", "levels": []},
        {"kind": "cantor_levels", "weights": [0.2, 0.2]},
        {"kind": "composed", "levels": [1, 2], "epsilons": [0.5]},
        {"kind": "epsilon_mixture", "epsilons": [-0.5]},
        "not json {",
        "/no/such/family.json",
    ],
)
def test_invalid_family(spec):
    with pytest.raises(ConfigError):
        ex.build_family(spec)


def test_distances_non_increasing():
    for spec in ({"kind": "epsilon_mixture"}, {"kind": "composed"}):
        d = np.array(ex.build_family(spec).distances())
        assert np.all(np.diff(d) <= 1e-15)


# -- support inclusion and embedding ---------------------------------------------


def test_support_inclusion():
    c = kf.cantor()
    ex.check_support_inclusion(c, kf.cantor_approx(2))
    ex.check_support_inclusion(c, kf.mixture(c, 0.1))
    ex.check_support_inclusion(c, kf.lebesgue())
    with pytest.raises(SupportInclusionError):
        ex.check_support_inclusion(kf.lebesgue(), c)
    with pytest.raises(SupportInclusionError):
        ex.check_support_inclusion(kf.cantor_approx(1), kf.cantor_approx(3))


def test_embed_identity():
    c = kf.cantor()
    f = kf.GridFunction(np.linspace(0, 1, 11), np.linspace(0, 1, 11) ** 2)
    assert ex.embed(f, c, c) is f


def _wiggle(m):
    grid = m.adapted_grid(2049)
    return kf.GridFunction(grid, np.sin(7 * grid) + grid**2)


def test_embed_fixes_values_on_support():
    c = kf.cantor()
    f = _wiggle(c)
    g = ex.embed(f, c, kf.mixture(c, 0.1))
    # grid points of the limit lie on its support or at gap endpoints
    assert np.max(np.abs(g.smooth(f.grid) - f.values)) < 1e-12


def test_embed_is_linear_across_gaps():
    c = kf.cantor()
    f = _wiggle(c)
    g = ex.embed(f, c, kf.lebesgue())
    a, b = 1 / 3, 2 / 3
    x = np.linspace(a, b, 17)
    line = f.smooth(a) + (x - a) / (b - a) * (f.smooth(b) - f.smooth(a))
    assert np.max(np.abs(g(x) - line)) < 1e-12
    assert g.sup_norm() == pytest.approx(f.sup_norm(), abs=1e-12)


def test_embed_rejects_non_nested_supports():
    f = _wiggle(kf.lebesgue())
    with pytest.raises(SupportInclusionError):
        ex.embed(f, kf.lebesgue(), kf.cantor())


# -- experiments -------------------------------------------------------------------


def self_family():
    c = kf.cantor()
    return ex.MeasureFamily(c, [c], "cantor_levels", ["self"], {"kind": "self"})


def test_single_member_errors_vanish():
    fam = self_family()
    rep = ex.resolvent_convergence(fam, 1.0, "N", "x")
    assert rep.rows[0].error_sup < 1e-12
    assert rep.rows[0].extra["density_sup"] < 1e-12
    assert ex.graph_norm_convergence(fam, 1.0, "D", "sin(pi x)").rows[0].error_sup < 1e-12


def test_single_member_semigroup_with_eigenfunction():
    fam = self_family()
    phi = kf.eigen_shooting(fam.limit, "D", count=2).eigenfunctions[1]
    rhs = ex.Rhs("phi_2", phi.smooth, phi.slope)
    rep = ex.semigroup_convergence(fam, (0, 0.05, 0.1), "D", rhs)
    assert rep.rows[0].error_sup < 1e-10


@pytest.fixture(scope="module")
def small_family():
    return ex.build_family({"kind": "cantor_levels", "levels": [1, 2, 3]})


def test_resolvent_rows(small_family):
    rep = ex.resolvent_convergence(small_family, 1.0, "N", "x")
    err = rep.column("error_sup")
    assert np.all(np.diff(err) < 0)
    assert np.all(rep.column("density_sup") <= rep.column("theory_bound"))
    assert [r.label for r in rep.rows] == small_family.labels
    assert np.all(np.isfinite(err)) and np.all(err >= 0)


def test_graph_norm_identity(small_family):
    rep = ex.graph_norm_convergence(small_family, 2.0, "D", "sin(pi x)")
    for r in rep.rows:
        assert r.error_sup == 2.0 * r.extra["function_error"]
    assert np.all(np.diff(rep.column("function_error")) < 0)


def test_semigroup_rows(small_family):
    rep = ex.semigroup_convergence(small_family, (0.05, 0.1), "N", "x(1-x)", cross_check=True)
    assert rep.parameters["times"] == [0.0, 0.05, 0.1]
    for r in rep.rows:
        assert r.error_sup == max(r.extra["per_time"])
        assert r.extra["backward_euler_gap"] < 1e-2
    assert np.all(np.diff(rep.column("error_sup")) < 0)


def test_dirichlet_data_checked(small_family):
    with pytest.raises(BoundaryError):
        ex.semigroup_convergence(small_family, (0.1,), "D", "x")


def test_bound_violation_is_raised(small_family, monkeypatch):
    monkeypatch.setattr(ex, "resolvent_error_bound", lambda lam, bc, d: 0.0)
    with pytest.raises(InvariantViolation):
        ex.resolvent_convergence(small_family, 1.0, "N", "x")


def test_bad_times(small_family):
    for times in ([0.1, 0.05], [-0.1, 0.2], []):
        with pytest.raises(ConfigError):
            ex.semigroup_convergence(small_family, times)


def test_composed_search_reports_failure():
    fam = ex.build_family({"kind": "composed", "levels": [0], "epsilons": [1.0]})
    with pytest.raises(ConvergenceError):
        ex.composed_search(fam, 0.1, 1e-6)
    with pytest.raises(ConfigError):
        ex.composed_search(fam, 0.1, 0.0)


# -- reports -----------------------------------------------------------------------


def test_csv_contract(small_family):
    rep = ex.resolvent_convergence(small_family, 1.0, "N", "x")
    text = rep.to_csv()
    assert text.endswith("\n")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["label", "cdf_dist", "error_sup", "theory_bound", "runtime_s"]
    assert len(rows) == 1 + len(small_family)
    for line, row in zip(rows[1:], rep.rows):
        assert line[0] == row.label
        assert float(line[1]) == row.cdf_dist and line[1] == repr(row.cdf_dist)
        assert float(line[2]) == row.error_sup
        assert line[4] == ""
    timed = list(csv.reader(io.StringIO(rep.to_csv(timing=True))))
    assert all(float(line[4]) >= 0 for line in timed[1:])


def test_json_report(small_family, tmp_path):
    rep = ex.graph_norm_convergence(small_family, 1.0, "D", "sin(pi x)")
    doc = json.loads(rep.to_json())
    assert doc["experiment"] == "graph_norm" and doc["bc"] == "dirichlet"
    assert [r["label"] for r in doc["rows"]] == small_family.labels
    assert "runtime_s" not in doc["rows"][0]
    path = ex.write_report(rep, tmp_path / "r.json", "json")
    assert json.loads(path.read_text()) == doc
    path = ex.write_report(rep, tmp_path / "r.csv")
    assert path.read_text() == rep.to_csv()


def test_reports_are_deterministic(small_family):
    a = ex.resolvent_convergence(small_family, 1.0, "N", "x").to_csv()
    b = ex.resolvent_convergence(small_family, 1.0, "N", "x").to_csv()
    assert a == b
    assert not math.isnan(float(a.splitlines()[1].split(",")[2]))


def test_mixture_dirichlet_semigroup_decreases():
    fam = ex.build_family({"kind": "epsilon_mixture", "epsilons": [0.5, 0.1, 0.02]})
    rep = ex.semigroup_convergence(fam, (0, 0.05, 0.1, 0.5), "D", "sin(pi x)")
    assert np.all(np.diff(rep.column("error_sup")) < 0)
