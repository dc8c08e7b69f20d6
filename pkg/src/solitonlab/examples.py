"""A catalog of explicit soliton structures with known closed forms.

Each constructor returns a ready-to-verify structure (or, for the conformal
fields, a vector field plus an expected-failure flag), and the registry pairs
every catalog id with default parameters and the verdicts its check suite is
expected to realize.  run_example executes the suite and reports whether all
expectations were met — including the one construction that is supposed to
fail its conformal check and does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

from . import expr as ex
from . import geometry as geo
from . import soliton as so
from . import spaces as sp
from .geometry import Chart, MetricField, ScalarField, VectorField

EXAMPLE_IDS = (
    "space-form-gradient",
    "euclidean-gradient",
    "euclidean-conformal-claimed",
    "euclidean-conformal-corrected",
    "pseudo-hyperbolic",
    "neg-m-sphere",
)

HESSIAN_EQ_TOL = 1e-9   # |Hess u + k u g| on the pseudo-hyperbolic examples


def _check_m(m) -> float:
    m = float(m)
    if m == 0:
        raise ValueError("m must be nonzero")
    return m


def _signed_form(m: float):
    """(h_form, |m|) with the sign of m folded into the form tag."""
    return (so.FORM_M_OVER_U if m > 0 else so.FORM_NEG_M_OVER_U), abs(m)


def example_space_form(c, n, m, tau) -> so.SolitonStructure:
    """u = tau - c*h_v/n, h = m/u on the curvature-c space form.

    lambda = c(n-1) + (m c^2/(n tau - c h_v)) h_v.  For c = 1 positivity of u
    forces tau > 1/n; for c = -1 the chart gets the predicate u > 0 and the
    admissible region must be nonempty in the sampling box.
    """
    c = int(c)
    if c not in (-1, 1):
        raise ValueError("c must be -1 or 1")
    n = int(n)
    if n < 2:
        raise ValueError("need n >= 2")
    m = _check_m(m)
    tau = float(tau)
    if c == 1 and not tau > 1.0 / n:
        raise ValueError(f"tau = {tau:g} must exceed 1/n = {1.0 / n:g} on the sphere")
    space = sp.make_sphere(n) if c == 1 else sp.make_hyperbolic(n)
    v = (0.0,) * n + (1.0,)
    hv = sp.height_function(space, v).field.expr
    u_expr = ex.sub(ex.const(tau), ex.div(ex.mul(ex.const(float(c)), hv), ex.const(n)))
    chart = space.chart
    if c == -1:
        chart = Chart(chart.coords, chart.box, domain=chart.domain + (u_expr,),
                      params=chart.params)
        try:
            geo.sample_points(chart, 16, 0)
        except geo.SamplingError as err:
            raise ValueError(
                f"tau = {tau:g} leaves no admissible region in the box") from err
    metric = MetricField(chart, space.metric.comps)
    u = ScalarField(chart, u_expr)
    h = ScalarField(chart, ex.div(ex.const(m), u_expr))
    lam = ScalarField(chart, ex.add(
        ex.const(c * (n - 1.0)),
        ex.div(ex.mul(ex.const(m * c * c), hv),
               ex.sub(ex.const(n * tau), ex.mul(ex.const(float(c)), hv)))))
    form, m_abs = _signed_form(m)
    return so.SolitonStructure(metric, h, lam, potential=u, h_form=form, m=m_abs)


def example_euclidean_gradient(n, m, tau) -> so.SolitonStructure:
    """u = tau + |x|^2, h = m/u, lambda = 2m/u on flat space; tau > 0."""
    n = int(n)
    if n < 2:
        raise ValueError("need n >= 2")
    m = _check_m(m)
    tau = float(tau)
    if not tau > 0:
        raise ValueError("tau must be positive")
    E = sp.make_euclidean(n)
    u_expr = ex.add(ex.const(tau),
                    ex.nsum(ex.powi(ex.coord(i), 2) for i in range(n)))
    u = ScalarField(E.chart, u_expr)
    h = ScalarField(E.chart, ex.div(ex.const(m), u_expr))
    lam = ScalarField(E.chart, ex.div(ex.const(2.0 * m), u_expr))
    form, m_abs = _signed_form(m)
    return so.SolitonStructure(E.metric, h, lam, potential=u, h_form=form, m=m_abs)


def example_euclidean_claimed_conformal(n):
    """The field (x_n x_1, ..., x_n x_{n-1}, x_n^2/2) on flat space.

    Claimed conformal; it is not: the traceless part of half the Lie
    derivative has (i,n) entries x_i/2.  Returned with an expected-failure
    flag so the catalog records the discrepancy instead of hiding it.
    """
    n = int(n)
    if n < 2:
        raise ValueError("need n >= 2")
    E = sp.make_euclidean(n)
    xn = ex.coord(n - 1)
    comps = [ex.mul(xn, ex.coord(i)) for i in range(n - 1)]
    comps.append(ex.mul(ex.const(0.5), ex.powi(xn, 2)))
    return VectorField(E.chart, comps), True


def example_euclidean_corrected_conformal(n):
    """The special-conformal repair <x,e_n> x - (|x|^2/2) e_n.

    First n-1 components agree with the claimed field; the last becomes
    x_n^2 - |x|^2/2.  Genuinely conformal with factor rho = x_n.  Marked
    non-failure.  A repair supplied by this tool, not part of the source
    catalog the claimed field was copied from.
    """
    n = int(n)
    if n < 2:
        raise ValueError("need n >= 2")
    E = sp.make_euclidean(n)
    xn = ex.coord(n - 1)
    norm2 = ex.nsum(ex.powi(ex.coord(i), 2) for i in range(n))
    comps = [ex.mul(xn, ex.coord(i)) for i in range(n - 1)]
    comps.append(ex.sub(ex.powi(xn, 2), ex.mul(ex.const(0.5), norm2)))
    return VectorField(E.chart, comps), False


def _pseudo_hyperbolic_base(n, k, A, l):
    """Line chart, profile f, and potential u = sign(A) f'/s for R x_f F.

    For l = 0 the potential coincides with f and is positive on all of R; for
    l > 0 it is positive only past the zero of f' at t0 = artanh(-A/sqrt(A^2+l))/s,
    so the box moves to a half-line segment on the positive side and the chart
    carries the predicate u > 0.
    """
    s = math.sqrt(-k)
    if l > 0:
        t0 = math.atanh(-A / math.sqrt(A * A + l)) / s
        box = (t0 + 0.15, t0 + 2.15) if A > 0 else (t0 - 2.15, t0 - 0.15)
    else:
        box = (-1.5, 1.5)
    f = sp.warping_solution(k, A, l, box=box)
    u_expr = ex.mul(ex.const(math.copysign(1.0, A) / s),
                    ex.differentiate(f.expr, 0))
    chart = f.chart
    if l > 0:
        chart = Chart(chart.coords, chart.box, domain=(u_expr,))
        f = ScalarField(chart, f.expr)
    return chart, f, u_expr


def pseudo_hyperbolic_product(n, k, A, l):
    """The warped space R x_f F^{n-1} itself, plus its potential expression."""
    n = int(n)
    if n < 3:
        raise ValueError("need n >= 3 (the fiber needs dimension >= 2)")
    k, A, l = float(k), float(A), float(l)
    if not k < 0:
        raise ValueError("k must be negative")
    if A == 0:
        raise ValueError("A must be nonzero")
    if l < 0:
        raise ValueError("l must be nonnegative")
    chart, f, u_expr = _pseudo_hyperbolic_base(n, k, A, l)
    base = (chart, sp.line_metric(chart))
    if l == 0:
        fiber = sp.make_euclidean(n - 1)
        fiber_mu = 0.0
    else:
        fiber_mu = -(n - 2) * l
        fiber = so.einstein_fiber(n - 1, fiber_mu, "hyperbolic")
    W = sp.make_warped(base, fiber, f, fiber_mu=fiber_mu)
    return W, u_expr


def example_pseudo_hyperbolic(n, k, A, l, m=None, h_expr=None) -> so.SolitonStructure:
    """Gradient structure on R x_f F^{n-1} with f'' + k f = 0, (f')^2 + k f^2 = -l.

    The fiber is flat for l = 0 and hyperbolic (rescaled to Einstein constant
    -(n-2)l) for l > 0.  The potential u satisfies Hess u + k u g = 0.  With
    the default h = -m/u the soliton function is the constant (n+m-1)k; an
    explicit h_expr (in the product coordinates, e.g. "sinh(t)") gives the
    h-almost structure with lambda = (n-1)k - h k u.
    """
    W, u_expr = pseudo_hyperbolic_product(n, k, A, l)
    n, k = int(n), float(k)
    u = ScalarField(W.chart, u_expr)
    if h_expr is None:
        m = _check_m(m)
        h = ScalarField(W.chart, ex.div(ex.const(-m), u_expr))
        lam = ScalarField(W.chart, ex.const((n + m - 1) * k))
        form = so.FORM_NEG_M_OVER_U if m > 0 else so.FORM_M_OVER_U
        return so.SolitonStructure(W.metric, h, lam, potential=u,
                                   h_form=form, m=abs(m))
    h_e = W.chart.parse(h_expr) if isinstance(h_expr, str) else h_expr
    h = ScalarField(W.chart, h_e)
    lam = ScalarField(W.chart, ex.sub(
        ex.const((n - 1) * k), ex.mul(h_e, ex.mul(ex.const(k), u_expr))))
    return so.SolitonStructure(W.metric, h, lam, potential=u)


def example_neg_m_sphere(n, m, a, b) -> so.SolitonStructure:
    """u = a h_v + b with b > |a| on the round sphere; h = -m/u.

    lambda = (n-1) + m a h_v/(a h_v + b) is non-constant whenever a != 0, so
    this is a genuinely almost structure.
    """
    n = int(n)
    if n < 2:
        raise ValueError("need n >= 2")
    m = _check_m(m)
    if not m > 0:
        raise ValueError("m must be positive for the -m/u form")
    a, b = float(a), float(b)
    if not b > abs(a):
        raise ValueError(f"need b > |a| for a positive potential (got a={a:g}, b={b:g})")
    S = sp.make_sphere(n)
    hv = sp.height_function(S, (0.0,) * n + (1.0,)).field.expr
    u_expr = ex.add(ex.mul(ex.const(a), hv), ex.const(b))
    u = ScalarField(S.chart, u_expr)
    h = ScalarField(S.chart, ex.div(ex.const(-m), u_expr))
    lam = ScalarField(S.chart, ex.add(
        ex.const(n - 1.0), ex.div(ex.mul(ex.const(m * a), hv), u_expr)))
    return so.SolitonStructure(S.metric, h, lam, potential=u,
                               h_form=so.FORM_NEG_M_OVER_U, m=m)


# ---------------------------------------------------------------------------
# registry and suite runner


@dataclass(frozen=True)
class ExampleSpec:
    example_id: str
    defaults: tuple                  # ((name, value), ...)
    expect_fail: tuple = ()          # check names that must fail; rest must pass
    expected_trivial: bool = None

    def params(self, overrides=None) -> dict:
        p = dict(self.defaults)
        for key, val in (overrides or {}).items():
            if val is None:
                continue
            if key not in p:
                raise ValueError(f"unknown parameter {key!r} for {self.example_id}")
            p[key] = val
        return p


EXAMPLES = {
    "space-form-gradient": ExampleSpec(
        "space-form-gradient",
        (("c", 1), ("n", 3), ("m", 2.0), ("tau", 1.0)),
        expected_trivial=False),
    "euclidean-gradient": ExampleSpec(
        "euclidean-gradient",
        (("n", 3), ("m", 3.0), ("tau", 1.0)),
        expected_trivial=False),
    "euclidean-conformal-claimed": ExampleSpec(
        "euclidean-conformal-claimed",
        (("n", 3),),
        expect_fail=("conformal-killing",)),
    "euclidean-conformal-corrected": ExampleSpec(
        "euclidean-conformal-corrected",
        (("n", 3),)),
    "pseudo-hyperbolic": ExampleSpec(
        "pseudo-hyperbolic",
        (("n", 3), ("k", -1.0), ("A", 1.0), ("l", 0.0), ("m", 2.0),
         ("h_expr", None)),
        expected_trivial=False),
    "neg-m-sphere": ExampleSpec(
        "neg-m-sphere",
        (("n", 3), ("m", 2.0), ("a", 1.0), ("b", 2.0)),
        expected_trivial=False),
}


@dataclass
class ExampleRun:
    example_id: str
    params: dict
    checks: list
    classification: str = None
    trivial: bool = None
    triviality: so.TrivialityVerdict = None
    passed: bool = False
    structure: so.SolitonStructure = None
    vector_field: VectorField = None
    metric: MetricField = None
    notes: list = dc_field(default_factory=list)


def structure_checks(s: so.SolitonStructure, pts, tol: float) -> list:
    """The declared suite for a structure: the defining residual(s), then the
    identities its form makes applicable."""
    checks = [so.soliton_residual(s, pts, tol)]
    if s.is_gradient:
        checks.append(so.gradient_soliton_residual(s, pts, tol))
    verified = checks[0].passed
    if verified:
        checks.append(so.divric_identity_residual(s, pts))
    if verified and s.h_form == so.FORM_NEG_M_OVER_U:
        if so.lambda_is_constant(s, pts):
            checks.append(so.mu_field(s, pts))
        checks.append(so.eqpprinc_residual(s, pts))
    return checks


def _hessian_equation_check(s: so.SolitonStructure, k: float, pts) -> so.ResidualReport:
    # Hess u + k u g = 0 characterizes the pseudo-hyperbolic potential
    g = s.metric
    n = g.chart.dim
    hess = geo.hessian(g, s.potential)
    ku = ex.mul(ex.const(k), s.potential.expr)
    comps = [[ex.add(hess.comps[i][j], ex.mul(ku, g.comps[i][j]))
              for j in range(n)] for i in range(n)]
    _, ginv = geo.eval_metric(g, pts, s.params)
    tv = geo.eval_sym2_comps(comps, pts, g.chart, s.params)
    return so._report("potential-hessian-equation", HESSIAN_EQ_TOL, pts,
                      geo.gnorm_sym2(tv, ginv))


def _expected_classification(example_id: str, p: dict) -> str:
    if example_id == "euclidean-gradient":
        return "shrinking" if p["m"] > 0 else "expanding"
    if example_id == "pseudo-hyperbolic" and p.get("h_expr") is None:
        sig = (p["n"] + p["m"] - 1) * p["k"]
        if abs(sig) <= so.STEADY_EPS:
            return "steady"
        return "shrinking" if sig > 0 else "expanding"
    return None


def run_example(example_id: str, params=None, count: int = 200,
                tol: float = 1e-8, seed: int = 42) -> ExampleRun:
    """Build the catalog entry, run its suite, and compare against the
    expected verdicts (an expected failure that fails counts as success)."""
    if example_id not in EXAMPLES:
        known = ", ".join(sorted(EXAMPLES))
        raise ValueError(f"unknown example {example_id!r} (known: {known})")
    spec = EXAMPLES[example_id]
    p = spec.params(params)
    run = ExampleRun(example_id, p, [])

    if example_id in ("euclidean-conformal-claimed", "euclidean-conformal-corrected"):
        build = (example_euclidean_claimed_conformal
                 if example_id == "euclidean-conformal-claimed"
                 else example_euclidean_corrected_conformal)
        X, expect_failure = build(**p)
        g = sp.make_euclidean(int(p["n"])).metric
        pts = geo.points_array(geo.sample_points(g.chart, count, seed))
        verdict = so.conformal_killing_check(g, X, pts, tol)
        run.checks.append(so._report("conformal-killing", tol, pts, verdict.residuals))
        run.vector_field, run.metric = X, g
        if expect_failure:
            run.notes.append("conformal claim does not hold; failure expected")
    else:
        builder = {
            "space-form-gradient": example_space_form,
            "euclidean-gradient": example_euclidean_gradient,
            "pseudo-hyperbolic": example_pseudo_hyperbolic,
            "neg-m-sphere": example_neg_m_sphere,
        }[example_id]
        s = builder(**p)
        pts = so.default_points(s, count, seed)
        run.structure, run.metric = s, s.metric
        run.checks = structure_checks(s, pts, tol)
        if example_id == "pseudo-hyperbolic":
            run.checks.append(_hessian_equation_check(s, float(p["k"]), pts))
        run.classification = so.classify_lambda(s, pts)
        tv = so.triviality_check(s, pts, tol)
        run.triviality, run.trivial = tv, tv.trivial

    ok = all(rep.passed != (rep.name in spec.expect_fail) for rep in run.checks)
    want = _expected_classification(example_id, p)
    if want is not None and run.classification != want:
        ok = False
        run.notes.append(f"classification {run.classification!r}, expected {want!r}")
    if spec.expected_trivial is not None and run.trivial != spec.expected_trivial:
        ok = False
        run.notes.append(f"triviality {run.trivial}, expected {spec.expected_trivial}")
    run.passed = ok
    return run
