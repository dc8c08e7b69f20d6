"""Randomized suites for the universal tensor identities.

These checks do not depend on any soliton structure: contracted Bianchi,
the four product/derivative formulas

    div(phi T) = phi div T + T(grad phi, .)
    nabla(phi T) = phi nabla T + d phi (x) T
    (1/2) d|grad phi|^2 = Hess phi(grad phi, .)
    div Hess phi = Ric(grad phi, .) + d(lap phi)

and the contraction rule

    div(T(phi Z)) = phi (div T)(Z) + phi <nabla Z, T> + T(grad phi, Z)

hold on every Riemannian metric, so they are exercised on randomly perturbed
metrics with random polynomial fields.  Perturbations keep strict diagonal
dominance on the sampling box, so every generated metric is positive definite
by construction.  All randomness is seeded; a suite called twice with the
same arguments sees the same metrics, fields, and points.
"""

from __future__ import annotations

import numpy as np

from . import expr as ex
from . import geometry as geo
from . import soliton as so
from . import spaces as sp
from .geometry import Chart, MetricField, ScalarField, SymTensorField, VectorField

SUITE_TOL = 1e-7
_TAGS = {"bianchi": 11, "fg": 13, "lemma21": 17}


def _chart(n: int) -> Chart:
    return Chart(tuple(f"x{i+1}" for i in range(n)), ((-1.0, 1.0),) * n)


def random_polynomial(rng, n: int, scale: float = 0.5) -> ex.Expression:
    """Random quadratic sum c0 + sum c_i x_i + sum c_ij x_i x_j, coefficients
    uniform in (-scale, scale)."""
    terms = [ex.const(rng.uniform(-scale, scale))]
    for i in range(n):
        terms.append(ex.mul(ex.const(rng.uniform(-scale, scale)), ex.coord(i)))
    for i in range(n):
        for j in range(i, n):
            terms.append(ex.mul(ex.const(rng.uniform(-scale, scale)),
                                ex.mul(ex.coord(i), ex.coord(j))))
    return ex.nsum(terms)


def random_perturbed_metric(rng, n: int) -> MetricField:
    """delta_ij plus a small random quadratic perturbation.

    Each entry's perturbation is bounded by 0.4/n on the box, so the rows stay
    strictly diagonally dominant and the metric is positive definite
    everywhere it is sampled.
    """
    chart = _chart(n)
    terms_per_entry = 1 + n + n * (n + 1) // 2
    scale = 0.4 / (n * terms_per_entry)
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            q = random_polynomial(rng, n, scale)
            e = ex.add(ex.ONE, q) if i == j else q
            rows[i][j] = e
            rows[j][i] = e
    return MetricField(chart, rows)


def random_vector(rng, chart: Chart, scale: float = 0.5) -> VectorField:
    n = chart.dim
    return VectorField(chart, [random_polynomial(rng, n, scale) for _ in range(n)])


def random_sym2(rng, chart: Chart, scale: float = 0.5) -> SymTensorField:
    n = chart.dim
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            e = random_polynomial(rng, n, scale)
            rows[i][j] = e
            rows[j][i] = e
    return SymTensorField(chart, rows)


def suite_metrics(dim: int = 3, metric_count: int = 20, seed: int = 7):
    """The deterministic family of perturbed metrics shared by all suites."""
    rng = np.random.default_rng((seed, 3))
    return [random_perturbed_metric(rng, dim) for _ in range(metric_count)]


def _suite_points(chart, point_count, seed, idx):
    pts = geo.sample_points(chart, point_count, 7919 * seed + idx)
    return geo.points_array(pts)


def _aggregate(name, tol, pts_list, res_list, **metadata):
    return so._report(name, tol, np.concatenate(pts_list),
                      np.concatenate(res_list), **metadata)


def bianchi_suite(dim: int = 3, metric_count: int = 20, point_count: int = 100,
                  seed: int = 7, tol: float = SUITE_TOL, metrics=None):
    """Contracted Bianchi: div Ric = (1/2) dR on random metrics."""
    gs = metrics if metrics is not None else suite_metrics(dim, metric_count, seed)
    pts_list, res_list = [], []
    for idx, g in enumerate(gs):
        n = g.chart.dim
        div_ric = geo.divergence_sym2(g, geo.ricci(g))
        scal = geo.scalar_curvature(g)
        comps = [ex.sub(div_ric.comps[j],
                        ex.mul(ex.const(0.5), ex.differentiate(scal.expr, j)))
                 for j in range(n)]
        pts = _suite_points(g.chart, point_count, seed, idx)
        _, ginv = geo.eval_metric(g, pts)
        wv = geo.eval_components(comps, pts, g.chart)
        pts_list.append(pts)
        res_list.append(geo.gnorm_oneform(wv, ginv))
    return [_aggregate("bianchi", tol, pts_list, res_list,
                       metrics=len(gs), points_per_metric=point_count, seed=seed)]


def _grad_comps(g, phi_expr):
    n = g.chart.dim
    inv = geo.inverse_metric(g)
    dphi = [ex.differentiate(phi_expr, i) for i in range(n)]
    return [ex.nsum(ex.mul(inv[i][j], dphi[j]) for j in range(n)) for i in range(n)], dphi


def fg_formulas_suite(dim: int = 3, metric_count: int = 20, point_count: int = 100,
                      seed: int = 7, tol: float = SUITE_TOL, metrics=None):
    """The four product/derivative formulas, one aggregated report each."""
    gs = metrics if metrics is not None else suite_metrics(dim, metric_count, seed)
    names = ("fg-div-product", "fg-covariant-product", "fg-half-grad-square",
             "fg-hessian-divergence")
    pts_all = {nm: [] for nm in names}
    res_all = {nm: [] for nm in names}
    for idx, g in enumerate(gs):
        n = g.chart.dim
        chart = g.chart
        rng = np.random.default_rng((seed, idx, _TAGS["fg"]))
        phi = random_polynomial(rng, n)
        T = random_sym2(rng, chart)
        pts = _suite_points(chart, point_count, seed, idx)
        _, ginv = geo.eval_metric(g, pts)
        grad_phi, dphi = _grad_comps(g, phi)

        phiT = SymTensorField(chart, [[ex.mul(phi, T.comps[i][j]) for j in range(n)]
                                      for i in range(n)])
        # div(phi T) - phi div T - T(grad phi, .)
        lhs = geo.divergence_sym2(g, phiT)
        rhs_div = geo.divergence_sym2(g, T)
        comps = [ex.sub(lhs.comps[j],
                        ex.add(ex.mul(phi, rhs_div.comps[j]),
                               ex.nsum(ex.mul(T.comps[i][j], grad_phi[i])
                                       for i in range(n))))
                 for j in range(n)]
        wv = geo.eval_components(comps, pts, chart)
        pts_all["fg-div-product"].append(pts)
        res_all["fg-div-product"].append(geo.gnorm_oneform(wv, ginv))

        # nabla(phi T) - phi nabla T - d phi (x) T
        lhs3 = geo.covariant_derivative_sym2(g, phiT)
        rhs3 = geo.covariant_derivative_sym2(g, T)
        rank3 = [[[ex.sub(lhs3[a][i][j],
                          ex.add(ex.mul(phi, rhs3[a][i][j]),
                                 ex.mul(dphi[a], T.comps[i][j])))
                   for j in range(n)] for i in range(n)] for a in range(n)]
        flat = [rank3[a][i][j] for a in range(n) for i in range(n) for j in range(n)]
        av = geo.eval_components(flat, pts, chart).reshape(len(pts), n, n, n)
        pts_all["fg-covariant-product"].append(pts)
        res_all["fg-covariant-product"].append(geo.gnorm_rank3(av, ginv))

        # (1/2) d|grad phi|^2 - Hess phi(grad phi, .)
        phi_f = ScalarField(chart, phi)
        gn2 = geo.grad_norm2(g, phi_f).expr
        hess = geo.hessian(g, phi_f)
        comps = [ex.sub(ex.mul(ex.const(0.5), ex.differentiate(gn2, j)),
                        ex.nsum(ex.mul(hess.comps[i][j], grad_phi[i])
                                for i in range(n)))
                 for j in range(n)]
        wv = geo.eval_components(comps, pts, chart)
        pts_all["fg-half-grad-square"].append(pts)
        res_all["fg-half-grad-square"].append(geo.gnorm_oneform(wv, ginv))

        # div Hess phi - Ric(grad phi, .) - d(lap phi)
        div_hess = geo.divergence_sym2(g, hess)
        ric = geo.ricci(g)
        lap = geo.laplacian(g, phi_f).expr
        comps = [ex.sub(div_hess.comps[j],
                        ex.add(ex.nsum(ex.mul(ric.comps[i][j], grad_phi[i])
                                       for i in range(n)),
                               ex.differentiate(lap, j)))
                 for j in range(n)]
        wv = geo.eval_components(comps, pts, chart)
        pts_all["fg-hessian-divergence"].append(pts)
        res_all["fg-hessian-divergence"].append(geo.gnorm_oneform(wv, ginv))

    return [_aggregate(nm, tol, pts_all[nm], res_all[nm],
                       metrics=len(gs), points_per_metric=point_count, seed=seed)
            for nm in names]


def lemma21_suite(dim: int = 3, metric_count: int = 20, point_count: int = 100,
                  seed: int = 7, tol: float = SUITE_TOL, metrics=None):
    """div(T(phi Z)) = phi (div T)(Z) + phi <nabla Z, T> + T(grad phi, Z)."""
    gs = metrics if metrics is not None else suite_metrics(dim, metric_count, seed)
    pts_list, res_list = [], []
    for idx, g in enumerate(gs):
        n = g.chart.dim
        chart = g.chart
        rng = np.random.default_rng((seed, idx, _TAGS["lemma21"]))
        phi = random_polynomial(rng, n)
        T = random_sym2(rng, chart)
        Z = random_vector(rng, chart)
        inv = geo.inverse_metric(g)
        grad_phi, _ = _grad_comps(g, phi)

        # vector W^i = g^{ij} T_jk (phi Z)^k, LHS = div W
        W = VectorField(chart, [
            ex.nsum(ex.mul(ex.mul(inv[i][j], T.comps[j][k]),
                           ex.mul(phi, Z.comps[k]))
                    for j in range(n) for k in range(n))
            for i in range(n)])
        lhs = geo.divergence_vector(g, W).expr

        div_t = geo.divergence_sym2(g, T)
        term1 = ex.mul(phi, ex.nsum(ex.mul(div_t.comps[j], Z.comps[j])
                                    for j in range(n)))
        nabla_z = geo.covariant_derivative_vector(g, Z)
        term2 = ex.mul(phi, geo.inner_rank2(g, nabla_z, T).expr)
        term3 = ex.nsum(ex.mul(T.comps[i][j], ex.mul(grad_phi[i], Z.comps[j]))
                        for i in range(n) for j in range(n))
        resid = ex.sub(lhs, ex.add(ex.add(term1, term2), term3))
        pts = _suite_points(chart, point_count, seed, idx)
        vals = np.abs(ex.eval_many([resid], pts)[0])
        pts_list.append(pts)
        res_list.append(vals)
    return [_aggregate("lemma21", tol, pts_list, res_list,
                       metrics=len(gs), points_per_metric=point_count, seed=seed)]


def oneill_suite(w, count: int = 100, seed: int = 7, tol: float = 1e-9,
                 binding=None):
    """Direct symbolic Ricci of an assembled warped product against the
    blockwise base/fiber formulas, componentwise sup over sampled points."""
    if w.chart is None:
        raise ValueError("the comparison needs an explicit product chart")
    pts = geo.points_array(geo.sample_points(w.chart, count, seed,
                                             metric=w.metric, binding=binding))
    ric = geo.ricci(w.metric)
    direct = geo.eval_sym2_comps(ric.comps, pts, w.chart, binding)
    res = np.empty(len(pts))
    for a, p in enumerate(pts):
        formula = sp.oneill_ricci(w, p, binding)
        res[a] = float(np.max(np.abs(direct[a] - formula)))
    return [so._report("oneill", tol, pts, res, points_per_metric=count, seed=seed)]
