# the worked-example catalog and its suite runner

import numpy as np
import pytest

from solitonlab import examples as exm
from solitonlab import expr as ex
from solitonlab import geometry as geo
from solitonlab import soliton as so
from solitonlab import spaces as sp


@pytest.mark.parametrize("example_id", exm.EXAMPLE_IDS)
def test_catalog_defaults_pass(example_id):
    run = exm.run_example(example_id, count=120)
    assert run.passed, [(r.name, r.sup) for r in run.checks]
    assert run.checks


def test_example_ids_match_registry():
    assert set(exm.EXAMPLE_IDS) == set(exm.EXAMPLES)


def test_space_form_gradient_residual_tiny():
    run = exm.run_example("space-form-gradient", count=120)
    by_name = {r.name: r for r in run.checks}
    assert by_name["soliton-residual"].sup < 1e-10
    assert by_name["gradient-soliton-residual"].sup < 1e-10
    assert "divric-identity" in by_name
    assert run.trivial is False


def test_space_form_hyperbolic_branch():
    run = exm.run_example("space-form-gradient",
                          {"c": -1, "tau": 5.0, "m": 2.0}, count=100)
    assert run.passed
    assert run.classification == "expanding"
    # the chart carries the u > 0 predicate
    u = run.structure.potential
    pts = so.default_points(run.structure, count=50)
    assert np.all(geo.eval_scalar(u, pts) > 0.0)


def test_space_form_rejections():
    with pytest.raises(ValueError, match="c must be"):
        exm.example_space_form(2, 3, 2.0, 1.0)
    with pytest.raises(ValueError, match="n >= 2"):
        exm.example_space_form(1, 1, 2.0, 1.0)
    with pytest.raises(ValueError, match="nonzero"):
        exm.example_space_form(1, 3, 0.0, 1.0)
    # tau > 1/n is strict on the sphere
    with pytest.raises(ValueError, match="must exceed"):
        exm.example_space_form(1, 3, 2.0, 1.0 / 3.0)
    # hyperbolic with tau too negative: u < 0 on the whole box
    with pytest.raises(ValueError, match="no admissible region"):
        exm.example_space_form(-1, 3, 2.0, -40.0)


def test_euclidean_gradient_shrinking_and_expanding():
    run = exm.run_example("euclidean-gradient", count=100)
    assert run.passed and run.classification == "shrinking"
    by_name = {r.name: r for r in run.checks}
    assert by_name["gradient-soliton-residual"].sup < 1e-10
    run = exm.run_example("euclidean-gradient", {"m": -3.0}, count=100)
    assert run.passed and run.classification == "expanding"


def test_euclidean_gradient_is_almost_but_homothetic():
    run = exm.run_example("euclidean-gradient", count=100)
    assert run.trivial is False
    assert run.triviality.sup_traceless < 1e-12
    assert run.triviality.lambda_spread > so.LAMBDA_SPREAD_TOL


def test_euclidean_gradient_rejections():
    with pytest.raises(ValueError, match="positive"):
        exm.example_euclidean_gradient(3, 2.0, 0.0)
    with pytest.raises(ValueError, match="nonzero"):
        exm.example_euclidean_gradient(3, 0.0, 1.0)


def test_claimed_conformal_fails_with_exact_entries():
    X, expect_failure = exm.example_euclidean_claimed_conformal(3)
    assert expect_failure
    E = sp.make_euclidean(3)
    pts = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [0.5, -0.5, 2.0]])
    v = so.conformal_killing_check(E.metric, X, pts)
    assert not v.conformal
    # traceless (i, n) entries are exactly x_i / 2
    T0 = v.traceless_part
    for i in range(2):
        vals = ex.eval_many([T0.comps[i][2]], pts)[0]
        np.testing.assert_allclose(vals, pts[:, i] / 2.0, atol=1e-10)


def test_claimed_conformal_run_counts_failure_as_success():
    run = exm.run_example("euclidean-conformal-claimed", count=80)
    assert run.passed
    assert not run.checks[0].passed
    assert run.notes  # the discrepancy is recorded


def test_corrected_conformal_passes_with_linear_factor():
    X, expect_failure = exm.example_euclidean_corrected_conformal(3)
    assert not expect_failure
    E = sp.make_euclidean(3)
    pts = so.default_points(E.chart, count=60)
    v = so.conformal_killing_check(E.metric, X, pts)
    assert v.conformal
    np.testing.assert_allclose(v.rho_samples, pts[:, 2], atol=1e-12)  # rho = x_n
    run = exm.run_example("euclidean-conformal-corrected", count=80)
    assert run.passed and run.checks[0].passed


def test_pseudo_hyperbolic_flat_fiber():
    run = exm.run_example("pseudo-hyperbolic", count=100)
    assert run.passed and run.classification == "expanding"
    by_name = {r.name: r for r in run.checks}
    assert "mu-constancy" in by_name
    assert abs(by_name["mu-constancy"].metadata["mu_estimate"]) < 1e-10
    assert "potential-hessian-equation" in by_name
    assert by_name["potential-hessian-equation"].sup < exm.HESSIAN_EQ_TOL


def test_pseudo_hyperbolic_negative_amplitude():
    run = exm.run_example("pseudo-hyperbolic", {"A": -1.0}, count=80)
    assert run.passed


def test_pseudo_hyperbolic_curved_fiber():
    m, l = 2.0, 3.0
    run = exm.run_example("pseudo-hyperbolic",
                          {"k": -4.0, "A": 2.0, "l": l, "m": m}, count=80)
    assert run.passed
    by_name = {r.name: r for r in run.checks}
    assert by_name["mu-constancy"].metadata["mu_estimate"] == pytest.approx(
        (m - 1.0) * l, abs=1e-8)
    # potential stays positive on the half-line chart
    u = run.structure.potential
    pts = so.default_points(run.structure, count=60)
    assert np.all(geo.eval_scalar(u, pts) > 0.0)


def test_pseudo_hyperbolic_free_h():
    run = exm.run_example("pseudo-hyperbolic", {"h_expr": "sinh(t)"}, count=80)
    assert run.passed
    by_name = {r.name: r for r in run.checks}
    assert "mu-constancy" not in by_name          # free form: no conserved quantity
    assert "eqpprinc-identity" not in by_name
    assert run.structure.h_form == so.FORM_FREE


def test_pseudo_hyperbolic_product_geometry():
    W, u_expr = exm.pseudo_hyperbolic_product(3, -1.0, 1.0, 0.0)
    assert W.dim == 3 and W.fiber_mu == 0.0
    W, _ = exm.pseudo_hyperbolic_product(4, -1.0, 1.0, 2.0)
    assert W.fiber_dim == 3
    assert W.fiber_mu == pytest.approx(-(4 - 2) * 2.0)


def test_pseudo_hyperbolic_rejections():
    with pytest.raises(ValueError, match="n >= 3"):
        exm.example_pseudo_hyperbolic(2, -1.0, 1.0, 0.0, m=2.0)
    with pytest.raises(ValueError, match="k must be negative"):
        exm.example_pseudo_hyperbolic(3, 1.0, 1.0, 0.0, m=2.0)
    with pytest.raises(ValueError, match="A must be nonzero"):
        exm.example_pseudo_hyperbolic(3, -1.0, 0.0, 0.0, m=2.0)
    with pytest.raises(ValueError, match="l must be nonnegative"):
        exm.example_pseudo_hyperbolic(3, -1.0, 1.0, -1.0, m=2.0)
    with pytest.raises(ValueError, match="nonzero"):
        exm.example_pseudo_hyperbolic(3, -1.0, 1.0, 0.0, m=0.0)


def test_neg_m_sphere_suite():
    run = exm.run_example("neg-m-sphere", count=120)
    assert run.passed
    by_name = {r.name: r for r in run.checks}
    assert "eqpprinc-identity" in by_name
    assert "mu-constancy" not in by_name          # lambda varies
    assert run.classification == "shrinking"
    assert run.trivial is False


def test_neg_m_sphere_rejections():
    with pytest.raises(ValueError, match="b > |a|"):
        exm.example_neg_m_sphere(3, 2.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="positive"):
        exm.example_neg_m_sphere(3, -2.0, 1.0, 2.0)


def test_run_example_unknown_id_and_param():
    with pytest.raises(ValueError, match="unknown example"):
        exm.run_example("torus-of-revolution")
    with pytest.raises(ValueError, match="unknown parameter"):
        exm.run_example("neg-m-sphere", {"radius": 2.0})


def test_example_spec_defaults_are_immutable_merge():
    spec = exm.EXAMPLES["pseudo-hyperbolic"]
    p = spec.params({"k": -2.0, "h_expr": None})
    assert p["k"] == -2.0 and p["h_expr"] is None
    assert dict(spec.defaults)["k"] == -1.0  # untouched


def test_runs_are_seed_deterministic():
    a = exm.run_example("neg-m-sphere", count=60, seed=9)
    b = exm.run_example("neg-m-sphere", count=60, seed=9)
    assert a.checks[0].sup == b.checks[0].sup
    assert a.checks[0].worst_point == b.checks[0].worst_point
