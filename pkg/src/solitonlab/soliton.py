"""Soliton structures, residual operators, and structural identity checks.

The central object is SolitonStructure: a metric g together with a vector
field X (or a potential u with X = grad u), a function h, and a soliton
function lambda, satisfying

    Ric + (h/2) L_X g = lambda g          (vector form)
    Ric + h Hess u    = lambda g          (gradient form)

when the structure is genuine.  Residual operators evaluate the g-norm of the
defect tensor at sampled points and return ResidualReports.  Sign convention:
the soliton is expanding when lambda < 0, steady when lambda = 0, shrinking
when lambda > 0.

For gradient structures with h = -m/u the module also checks the conserved
quantity mu = lambda u^2 + u lap u + (m-1)|grad u|^2 (constant when lambda
is), the 1-form identity

    d((n-2)/m u^2 lambda - u lap u - (m-1)|grad u|^2)
        - ((m+n-2)/m) lambda d(u^2) = 0,

and builds warped-product Einstein metrics B x_u F^m with Ric = lambda g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from . import expr as ex
from . import geometry as geo
from . import spaces as sp
from .geometry import (
    MetricField, OneFormField, ScalarField, SymTensorField, VectorField,
)

FORM_FREE = "free"
FORM_M_OVER_U = "m-over-u"
FORM_NEG_M_OVER_U = "neg-m-over-u"
_FORMS = (FORM_FREE, FORM_M_OVER_U, FORM_NEG_M_OVER_U)

LAMBDA_SPREAD_TOL = 1e-8       # h-Ricci soliton vs h-almost: constancy of lambda
HOMOTHETY_SPREAD_TOL = 1e-6    # triviality: relative spread of (2/n) div X
DEGENERATE_H = 1e-12           # points with |h| below this are excluded from rho
STEADY_EPS = 1e-12


class PreconditionError(Exception):
    """A check was invoked on a structure that fails its preconditions."""


def _normalize_binding(binding):
    if binding is None:
        return ()
    if isinstance(binding, dict):
        return tuple(sorted((str(k), float(v)) for k, v in binding.items()))
    return tuple(sorted((str(k), float(v)) for k, v in binding))


@dataclass(frozen=True)
class SolitonStructure:
    metric: MetricField
    h: ScalarField
    lam: ScalarField
    vector_field: VectorField = None
    potential: ScalarField = None
    binding: tuple = ()
    h_form: str = FORM_FREE
    m: float = None

    def __post_init__(self):
        object.__setattr__(self, "binding", _normalize_binding(self.binding))
        if self.vector_field is None and self.potential is None:
            raise ValueError("need a vector field or a potential")
        if self.vector_field is not None and self.potential is not None:
            raise ValueError("give either a vector field or a potential, not both")
        if self.h_form not in _FORMS:
            raise ValueError(f"unknown h form {self.h_form!r}")
        if self.h_form != FORM_FREE:
            if self.potential is None:
                raise ValueError(f"h form {self.h_form!r} needs a gradient structure")
            if self.m is None or not self.m > 0:
                raise ValueError(f"h form {self.h_form!r} needs m > 0")
        for f in (self.h, self.lam, self.vector_field, self.potential):
            if f is not None and f.chart != self.metric.chart:
                raise ValueError("all structure fields must live on the metric's chart")

    @property
    def chart(self):
        return self.metric.chart

    @property
    def is_gradient(self) -> bool:
        return self.potential is not None

    @property
    def params(self) -> dict:
        return dict(self.binding)


@dataclass(frozen=True)
class QuasiEinsteinStructure:
    """Ric + Hess f - mu_qe df⊗df = lambda g."""

    metric: MetricField
    f: ScalarField
    mu_qe: ScalarField
    lam: ScalarField
    binding: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "binding", _normalize_binding(self.binding))
        if not isinstance(self.mu_qe, ScalarField):
            object.__setattr__(
                self, "mu_qe", ScalarField(self.metric.chart, ex.const(self.mu_qe)))

    @property
    def params(self) -> dict:
        return dict(self.binding)


@dataclass(frozen=True)
class DerivedFields:
    X: VectorField
    ric: SymTensorField
    scal: ScalarField
    S: SymTensorField          # ½ L_X g
    S0: SymTensorField         # traceless part
    ric0: SymTensorField
    div_x: ScalarField
    rho: ScalarField           # (1/h)(lambda - R/n)


@lru_cache(maxsize=None)
def derive(s: SolitonStructure) -> DerivedFields:
    g = s.metric
    n = g.chart.dim
    X = s.vector_field if s.vector_field is not None else geo.gradient(g, s.potential)
    ric = geo.ricci(g)
    scal = geo.scalar_curvature(g)
    L = geo.lie_derivative_metric(g, X)
    half = ex.const(0.5)
    S = SymTensorField(g.chart, [[ex.mul(half, L.comps[i][j]) for j in range(n)]
                                 for i in range(n)])
    S0 = geo.traceless(g, S)
    ric0 = geo.traceless(g, ric)
    div_x = geo.divergence_vector(g, X)
    rho = ScalarField(g.chart, ex.div(
        ex.sub(s.lam.expr, ex.div(scal.expr, ex.const(n))), s.h.expr))
    return DerivedFields(X, ric, scal, S, S0, ric0, div_x, rho)


@dataclass
class ResidualReport:
    name: str
    tolerance: float
    points: np.ndarray
    residuals: np.ndarray
    sup: float
    passed: bool
    worst_point: tuple
    metadata: dict = dc_field(default_factory=dict)


def _report(name, tol, pts, res, **metadata) -> ResidualReport:
    res = np.asarray(res, dtype=float)
    i = int(np.argmax(res))
    sup = float(res[i])
    return ResidualReport(name, float(tol), pts, res, sup, sup <= tol,
                          tuple(pts[i]), metadata)


def default_points(s, count: int = 200, seed: int = 42) -> np.ndarray:
    """Seeded admissible samples for a structure (or metric, or chart)."""
    if isinstance(s, SolitonStructure):
        chart, metric, binding = s.chart, s.metric, s.params
    elif isinstance(s, MetricField):
        chart, metric, binding = s.chart, s, None
    else:
        chart, metric, binding = s, None, None
    pts = geo.sample_points(chart, count, seed, metric=metric, binding=binding)
    return geo.points_array(pts)


def _combine_sym2(chart, n, build) -> SymTensorField:
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            v = build(i, j)
            rows[i][j] = v
            rows[j][i] = v
    return SymTensorField(chart, rows)


def _sym2_gnorms(s_or_metric, T: SymTensorField, pts, binding) -> np.ndarray:
    g = s_or_metric.metric if isinstance(s_or_metric, SolitonStructure) else s_or_metric
    _, ginv = geo.eval_metric(g, pts, binding)
    tv = geo.eval_sym2_comps(T.comps, pts, g.chart, binding)
    return geo.gnorm_sym2(tv, ginv)


# ---------------------------------------------------------------------------
# residual operators


def soliton_residual(s: SolitonStructure, points, tol: float = 1e-8) -> ResidualReport:
    """g-norm of Ric + (h/2) L_X g - lambda g at the given points."""
    pts = geo.points_array(points)
    d = derive(s)
    g = s.metric
    n = g.chart.dim
    T = _combine_sym2(g.chart, n, lambda i, j: ex.sub(
        ex.add(d.ric.comps[i][j], ex.mul(s.h.expr, d.S.comps[i][j])),
        ex.mul(s.lam.expr, g.comps[i][j])))
    res = _sym2_gnorms(s, T, pts, s.params)
    return _report("soliton-residual", tol, pts, res, form=s.h_form, **s.params)


def gradient_soliton_residual(s: SolitonStructure, points, tol: float = 1e-8) -> ResidualReport:
    """g-norm of Ric + h Hess u - lambda g; needs a potential."""
    if not s.is_gradient:
        raise PreconditionError("gradient residual needs a structure with a potential")
    pts = geo.points_array(points)
    g = s.metric
    n = g.chart.dim
    ric = geo.ricci(g)
    hess = geo.hessian(g, s.potential)
    T = _combine_sym2(g.chart, n, lambda i, j: ex.sub(
        ex.add(ric.comps[i][j], ex.mul(s.h.expr, hess.comps[i][j])),
        ex.mul(s.lam.expr, g.comps[i][j])))
    res = _sym2_gnorms(s, T, pts, s.params)
    return _report("gradient-soliton-residual", tol, pts, res, form=s.h_form, **s.params)


def quasi_einstein_residual(q: QuasiEinsteinStructure, points, tol: float = 1e-8) -> ResidualReport:
    """g-norm of Ric + Hess f - mu_qe df⊗df - lambda g."""
    pts = geo.points_array(points)
    g = q.metric
    n = g.chart.dim
    ric = geo.ricci(g)
    hess = geo.hessian(g, q.f)
    df = [ex.differentiate(q.f.expr, i) for i in range(n)]
    T = _combine_sym2(g.chart, n, lambda i, j: ex.sub(
        ex.add(ric.comps[i][j], hess.comps[i][j]),
        ex.add(ex.mul(q.mu_qe.expr, ex.mul(df[i], df[j])),
               ex.mul(q.lam.expr, g.comps[i][j]))))
    _, ginv = geo.eval_metric(g, pts, q.params)
    tv = geo.eval_sym2_comps(T.comps, pts, g.chart, q.params)
    return _report("quasi-einstein-residual", tol, pts, geo.gnorm_sym2(tv, ginv),
                   **q.params)


def substitute_u_for_f(q: QuasiEinsteinStructure, m: float) -> SolitonStructure:
    """Rewrite the quasi-Einstein data through u = exp(f/m), h = m/u.

    Requires the df⊗df coefficient mu_qe = -1/m (checked when it is a
    constant), which is exactly when the two equations are equivalent; a
    negative m realizes the (-m/u) form.
    """
    m = float(m)
    if m == 0:
        raise ValueError("m must be nonzero")
    if q.mu_qe.expr.kind == "const" and abs(q.mu_qe.expr.payload + 1.0 / m) > 1e-12:
        raise ValueError("substitution needs mu_qe = -1/m")
    u = ScalarField(q.metric.chart, ex.exp(ex.div(q.f.expr, ex.const(m))))
    h = ScalarField(q.metric.chart, ex.div(ex.const(m), u.expr))
    form = FORM_M_OVER_U if m > 0 else FORM_NEG_M_OVER_U
    return SolitonStructure(q.metric, h, q.lam, potential=u, binding=q.binding,
                            h_form=form, m=abs(m))


def lambda_is_constant(s: SolitonStructure, points) -> bool:
    """Relative spread of lambda below 1e-8: h-Ricci soliton, not just almost."""
    vals = geo.eval_scalar(s.lam, geo.points_array(points), s.params)
    mean = float(np.mean(vals))
    return float(np.max(vals) - np.min(vals)) < LAMBDA_SPREAD_TOL * max(1.0, abs(mean))


def classify_lambda(s: SolitonStructure, points) -> str:
    """expanding / steady / shrinking per the sign of lambda (steady: |lambda|
    < 1e-12 everywhere; mixed signs: undefined).  Note the convention:
    expanding means lambda < 0."""
    pts = geo.points_array(points)
    vals = geo.eval_scalar(s.lam, pts, s.params)
    zero = np.abs(vals) <= STEADY_EPS
    if np.all(zero):
        return "steady"
    if np.all(vals > STEADY_EPS):
        return "shrinking"
    if np.all(vals < -STEADY_EPS):
        return "expanding"
    return "undefined"


@dataclass
class TrivialityVerdict:
    trivial: bool
    constant: float
    sup_traceless: float
    spread: float
    lambda_spread: float = 0.0


def triviality_check(s: SolitonStructure, points, tol: float = 1e-8) -> TrivialityVerdict:
    """Trivial iff X is homothetic (L_X g = c g, c constant) and the structure
    is an honest soliton (lambda constant).

    Homothety is tested as vanishing traceless part of ½ L_X g plus relative
    spread of the candidate constant (2/n) div X below 1e-6.  A structure with
    varying lambda counts as nontrivial even when X is homothetic: the flat
    gradient example has X = 2x but is a genuinely non-Einstein almost
    structure, and its source labels it nontrivial on those grounds.
    """
    pts = geo.points_array(points)
    d = derive(s)
    n = s.chart.dim
    sup0 = float(np.max(_sym2_gnorms(s, d.S0, pts, s.params)))
    c_vals = (2.0 / n) * geo.eval_scalar(d.div_x, pts, s.params)
    mean = float(np.mean(c_vals))
    spread = float((np.max(c_vals) - np.min(c_vals)) / max(1.0, abs(mean)))
    lam_vals = geo.eval_scalar(s.lam, pts, s.params)
    lam_spread = float((np.max(lam_vals) - np.min(lam_vals))
                       / max(1.0, abs(float(np.mean(lam_vals)))))
    trivial = (sup0 <= tol and spread < HOMOTHETY_SPREAD_TOL
               and lam_spread < LAMBDA_SPREAD_TOL)
    return TrivialityVerdict(trivial, mean, sup0, spread, lam_spread)


@dataclass
class ConformalVerdict:
    conformal: bool
    sup_traceless: float
    rho_samples: np.ndarray
    rho: ScalarField
    traceless_part: SymTensorField
    points: np.ndarray
    residuals: np.ndarray


def conformal_killing_check(g: MetricField, X: VectorField, points,
                            tol: float = 1e-8, binding=None) -> ConformalVerdict:
    """Does L_X g = 2 rho g hold?  Passes iff the traceless part of ½ L_X g
    vanishes at the points; the conformal factor is rho = div X / n."""
    pts = geo.points_array(points)
    n = g.chart.dim
    L = geo.lie_derivative_metric(g, X)
    half = ex.const(0.5)
    S = SymTensorField(g.chart, [[ex.mul(half, L.comps[i][j]) for j in range(n)]
                                 for i in range(n)])
    S0 = geo.traceless(g, S)
    _, ginv = geo.eval_metric(g, pts, binding)
    tv = geo.eval_sym2_comps(S0.comps, pts, g.chart, binding)
    norms = geo.gnorm_sym2(tv, ginv)
    sup0 = float(np.max(norms))
    rho = ScalarField(g.chart, ex.div(geo.divergence_vector(g, X).expr, ex.const(n)))
    rho_vals = geo.eval_scalar(rho, pts, binding)
    return ConformalVerdict(sup0 <= tol, sup0, rho_vals, rho, S0, pts, norms)


def conformal_factor_hessian_check(g: MetricField, rho: ScalarField, points,
                                   tol: float = 1e-9, binding=None) -> ResidualReport:
    """g-norm of Hess rho + (R/(n(n-1))) rho g (the conformal-factor equation)."""
    pts = geo.points_array(points)
    n = g.chart.dim
    hess = geo.hessian(g, rho)
    scal = geo.scalar_curvature(g)
    coef = ex.mul(ex.div(scal.expr, ex.const(n * (n - 1))), rho.expr)
    T = _combine_sym2(g.chart, n, lambda i, j: ex.add(
        hess.comps[i][j], ex.mul(coef, g.comps[i][j])))
    _, ginv = geo.eval_metric(g, pts, binding)
    tv = geo.eval_sym2_comps(T.comps, pts, g.chart, binding)
    return _report("conformal-factor-hessian", tol, pts, geo.gnorm_sym2(tv, ginv))


def potential_from_factor(g: MetricField, rho: ScalarField, points,
                          binding=None) -> ScalarField:
    """u = -(n(n-1)/R) rho, for constant nonzero scalar curvature.

    The returned potential satisfies ½ L_{grad u} g = rho g on the samples.
    """
    pts = geo.points_array(points)
    n = g.chart.dim
    rv = geo.eval_scalar(geo.scalar_curvature(g), pts, binding)
    mean = float(np.mean(rv))
    spread = float((np.max(rv) - np.min(rv)) / max(1.0, abs(mean)))
    if spread >= 1e-8:
        raise PreconditionError(
            f"scalar curvature is not constant (relative spread {spread:.3e})")
    if abs(mean) <= 1e-10:
        raise PreconditionError("scalar curvature vanishes; no potential of this form")
    return ScalarField(g.chart, ex.mul(ex.const(-n * (n - 1) / mean), rho.expr))


# ---------------------------------------------------------------------------
# structural identities of verified structures


def divric_identity_residual(s: SolitonStructure, points, tol: float = 1e-7,
                             precheck_tol: float = 1e-8) -> ResidualReport:
    """|div(Ric0(X)) - (n-2)/(2n) <grad R, X> + h |S0|^2| at the points.

    The left side is expanded as (div Ric0)(X) + <grad X, Ric0>.  Requires the
    structure to satisfy the soliton equation first.
    """
    pts = geo.points_array(points)
    pre = soliton_residual(s, pts, precheck_tol)
    if not pre.passed:
        raise PreconditionError(
            f"soliton residual {pre.sup:.3e} exceeds {precheck_tol:g}; "
            "the divergence identity only holds on verified structures")
    d = derive(s)
    g = s.metric
    n = g.chart.dim
    div_ric0 = geo.divergence_sym2(g, d.ric0)
    lhs1 = ex.nsum(ex.mul(div_ric0.comps[j], d.X.comps[j]) for j in range(n))
    grad_x = geo.covariant_derivative_vector(g, d.X)
    lhs2 = geo.inner_rank2(g, grad_x, d.ric0).expr
    dr = [ex.differentiate(d.scal.expr, j) for j in range(n)]
    rhs1 = ex.mul(ex.const((n - 2) / (2.0 * n)),
                  ex.nsum(ex.mul(dr[j], d.X.comps[j]) for j in range(n)))
    s0_sq = geo.tensor_inner(g, d.S0, d.S0).expr
    rhs2 = ex.mul(s.h.expr, s0_sq)
    resid = ex.sub(ex.add(lhs1, lhs2), ex.sub(rhs1, rhs2))
    vals = np.abs(ex.eval_many([resid], pts, s.params)[0])
    return _report("divric-identity", tol, pts, vals, precheck_sup=pre.sup)


def _require_neg_form(s: SolitonStructure, pts) -> float:
    if s.h_form != FORM_NEG_M_OVER_U:
        raise PreconditionError("this check needs the declared form h = -m/u")
    m = float(s.m)
    probe = ex.add(ex.mul(s.h.expr, s.potential.expr), ex.const(m))
    dev = float(np.max(np.abs(ex.eval_many([probe], pts, s.params)[0])))
    if dev > 1e-8 * max(1.0, m):
        raise PreconditionError(
            f"declared form h = -m/u is inconsistent with h (deviation {dev:.3e})")
    return m


def mu_scalar_field(s: SolitonStructure) -> ScalarField:
    """lambda u^2 + u lap u + (m-1) |grad u|^2 as a scalar field."""
    g = s.metric
    u = s.potential.expr
    m = float(s.m)
    lap = geo.laplacian(g, s.potential).expr
    grad2 = geo.grad_norm2(g, s.potential).expr
    mu = ex.add(ex.add(ex.mul(s.lam.expr, ex.powi(u, 2)), ex.mul(u, lap)),
                ex.mul(ex.const(m - 1.0), grad2))
    return ScalarField(g.chart, mu)


def mu_field(s: SolitonStructure, points, tol: float = 1e-9) -> ResidualReport:
    """Constancy of mu = lambda u^2 + u lap u + (m-1)|grad u|^2.

    Needs the declared form h = -m/u and constant lambda; the report carries
    the mu estimate (mean over points) and the max deviation from it.
    """
    pts = geo.points_array(points)
    m = _require_neg_form(s, pts)
    lam_vals = geo.eval_scalar(s.lam, pts, s.params)
    lam_mean = float(np.mean(lam_vals))
    lam_spread = float((np.max(lam_vals) - np.min(lam_vals)) / max(1.0, abs(lam_mean)))
    if lam_spread >= LAMBDA_SPREAD_TOL:
        raise PreconditionError(
            f"lambda is not constant (relative spread {lam_spread:.3e}); "
            "the conserved quantity needs an h-Ricci soliton")
    mu_vals = geo.eval_scalar(mu_scalar_field(s), pts, s.params)
    mu_mean = float(np.mean(mu_vals))
    dev = np.abs(mu_vals - mu_mean)
    return _report("mu-constancy", tol, pts, dev, mu_estimate=mu_mean,
                   lambda_estimate=lam_mean, m=m)


def eqpprinc_residual(s: SolitonStructure, points, tol: float = 1e-8,
                      precheck_tol: float = 1e-8) -> ResidualReport:
    """g-norm of the 1-form
    d((n-2)/m u^2 lambda - u lap u - (m-1)|grad u|^2) - ((m+n-2)/m) lambda d(u^2),
    which vanishes on gradient (-m/u)-almost structures."""
    pts = geo.points_array(points)
    m = _require_neg_form(s, pts)
    pre = gradient_soliton_residual(s, pts, precheck_tol)
    if not pre.passed:
        raise PreconditionError(
            f"gradient soliton residual {pre.sup:.3e} exceeds {precheck_tol:g}")
    g = s.metric
    n = g.chart.dim
    u = s.potential.expr
    u2 = ex.powi(u, 2)
    lap = geo.laplacian(g, s.potential).expr
    grad2 = geo.grad_norm2(g, s.potential).expr
    phi = ex.sub(ex.sub(ex.mul(ex.const((n - 2) / m), ex.mul(u2, s.lam.expr)),
                        ex.mul(u, lap)),
                 ex.mul(ex.const(m - 1.0), grad2))
    c2 = ex.const((m + n - 2) / m)
    comps = []
    for j in range(n):
        dphi = ex.differentiate(phi, j)
        du2 = ex.differentiate(u2, j)
        comps.append(ex.sub(dphi, ex.mul(ex.mul(c2, s.lam.expr), du2)))
    w = OneFormField(g.chart, comps)
    _, ginv = geo.eval_metric(g, pts, s.params)
    wv = geo.eval_components(w.comps, pts, g.chart, s.params)
    vals = geo.gnorm_oneform(wv, ginv)
    return _report("eqpprinc-identity", tol, pts, vals, precheck_sup=pre.sup, m=m)


# ---------------------------------------------------------------------------
# the warped-Einstein construction


def warped_einstein_construct(s: SolitonStructure, fiber_dim: int, fiber_mu: float,
                              fiber_kind: str = "auto", *, points=None,
                              count: int = 200, seed: int = 42,
                              tol: float = 1e-8):
    """Build B x_u F^m from a gradient (-m/u)-Ricci soliton and verify Einstein.

    The fiber is Einstein with Ric_F = fiber_mu <,>, which must match the
    conserved quantity of the base within 1e-7; lambda must be constant.  For
    an explicit fiber (flat, sphere, or scaled hyperbolic, chosen by the sign
    of fiber_mu under "auto") the assembled product metric's Ricci tensor is
    compared against lambda g; for an abstract fiber only the base block and
    the scalar fiber relation are checkable.  Returns (WarpedProduct, report).
    """
    if isinstance(fiber_dim, float):
        if not fiber_dim.is_integer():
            raise ValueError("fiber dimension must be an integer >= 2")
        fiber_dim = int(fiber_dim)
    if not isinstance(fiber_dim, int) or fiber_dim < 2:
        raise ValueError("fiber dimension must be an integer >= 2")
    if s.m is not None and abs(float(s.m) - fiber_dim) > 1e-12:
        raise ValueError(
            f"fiber dimension {fiber_dim} must equal the m = {s.m:g} of the "
            "declared h = -m/u form")
    fiber_mu = float(fiber_mu)
    pts = geo.points_array(points) if points is not None else default_points(s, count, seed)
    murep = mu_field(s, pts)
    if not murep.passed:
        raise PreconditionError(
            f"conserved quantity is not constant (deviation {murep.sup:.3e})")
    mu_est = murep.metadata["mu_estimate"]
    lam_est = murep.metadata["lambda_estimate"]
    if abs(mu_est - fiber_mu) > 1e-7:
        raise ValueError(
            f"fiber Einstein constant {fiber_mu:g} does not match the base's "
            f"conserved quantity {mu_est:.12g}")

    fiber = einstein_fiber(fiber_dim, fiber_mu, fiber_kind)
    w = sp.make_warped((s.chart, s.metric), fiber, s.potential,
                       fiber_mu=fiber_mu, binding=s.params, seed=seed)
    meta = {
        "lambda": lam_est, "mu": mu_est, "fiber_kind": fiber_kind,
        "lambda_positive": lam_est > 0,
        "compactness_note": ("the compact case needs lambda > 0; recorded, "
                             "not enforced"),
    }
    if w.chart is not None:
        prod_pts = geo.points_array(geo.sample_points(
            w.chart, len(pts), seed, metric=w.metric, binding=s.params))
        n_tot = w.chart.dim
        prod_ric = geo.ricci(w.metric)
        T = _combine_sym2(w.chart, n_tot, lambda i, j: ex.sub(
            prod_ric.comps[i][j],
            ex.mul(ex.const(lam_est), w.metric.comps[i][j])))
        _, ginv = geo.eval_metric(w.metric, prod_pts, s.params)
        tv = geo.eval_sym2_comps(T.comps, prod_pts, w.chart, s.params)
        rep = _report("warped-einstein", tol, prod_pts, geo.gnorm_sym2(tv, ginv), **meta)
    else:
        g = s.metric
        n = g.chart.dim
        hess = geo.hessian(g, s.potential)
        mh = ex.div(ex.const(float(fiber_dim)), s.potential.expr)
        T = _combine_sym2(g.chart, n, lambda i, j: ex.sub(
            ex.sub(geo.ricci(g).comps[i][j], ex.mul(mh, hess.comps[i][j])),
            ex.mul(ex.const(lam_est), g.comps[i][j])))
        res = _sym2_gnorms(g, T, pts, s.params)
        meta["fiber_relation_deviation"] = murep.sup
        rep = _report("warped-einstein-base-block", tol, pts, res, **meta)
    return w, rep


def einstein_fiber(dim: int, mu: float, kind: str = "auto"):
    """An Einstein fiber with Ric = mu <,>: flat, round, scaled hyperbolic,
    or abstract."""
    if kind == "abstract":
        return sp.AbstractFiber(dim, mu)
    if kind == "auto":
        kind = "flat" if abs(mu) <= 1e-9 else ("sphere" if mu > 0 else "hyperbolic")
    if kind == "flat":
        if abs(mu) > 1e-9:
            raise ValueError("a flat fiber has mu = 0")
        return sp.make_euclidean(dim)
    if kind == "sphere":
        if not mu > 0:
            raise ValueError("a round fiber needs mu > 0")
        return sp.make_sphere(dim, math.sqrt((dim - 1) / mu))
    if kind == "hyperbolic":
        if not mu < 0:
            raise ValueError("a hyperbolic fiber needs mu < 0")
        model = sp.make_hyperbolic(dim)
        scale = ex.const((dim - 1) / (-mu))
        comps = [[ex.mul(scale, model.metric.comps[i][j]) for j in range(dim)]
                 for i in range(dim)]
        return (model.chart, MetricField(model.chart, comps))
    raise ValueError(f"unknown fiber kind {kind!r}")
