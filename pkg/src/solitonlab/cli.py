"""Command-line front end.

Commands: verify-example, verify-manifest, check-identity, construct-warped,
classify.  Every run prints a deterministic JSON report document to stdout
(--json PATH writes the same bytes to a file) and exits 0 when all expected
verdicts were realized, 1 when a numeric check failed, and 2 on input or
precondition errors.  Identical flags always produce byte-identical reports.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from . import examples as cat
from . import expr as ex
from . import geometry as geo
from . import identities as idn
from . import manifest as mf
from . import soliton as so
from . import spaces as sp
from .geometry import ScalarField, VectorField

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

IDENTITY_NAMES = ("bianchi", "fg-formulas", "lemma21", "divric", "eqpprinc",
                  "mu-const", "conformal-factor", "oneill")
_IDENTITY_TOL = {
    "bianchi": idn.SUITE_TOL, "fg-formulas": idn.SUITE_TOL,
    "lemma21": idn.SUITE_TOL, "divric": 1e-7, "eqpprinc": 1e-8,
    "mu-const": 1e-9, "conformal-factor": 1e-9, "oneill": 1e-9,
}

_PARAM_FLAGS = (
    ("--c", int), ("--n", int), ("--m", float), ("--tau", float),
    ("--k", float), ("--A", float), ("--l", float), ("--a", float),
    ("--b", float), ("--h-expr", str),
)

_STRUCTURE_BUILDERS = {
    "space-form-gradient": cat.example_space_form,
    "euclidean-gradient": cat.example_euclidean_gradient,
    "pseudo-hyperbolic": cat.example_pseudo_hyperbolic,
    "neg-m-sphere": cat.example_neg_m_sphere,
}


def _build_catalog_structure(eid, overrides) -> so.SolitonStructure:
    if eid not in cat.EXAMPLES:
        raise ValueError(f"unknown example {eid!r}")
    builder = _STRUCTURE_BUILDERS.get(eid)
    if builder is None:
        raise ValueError(f"example {eid!r} carries no soliton structure")
    return builder(**cat.EXAMPLES[eid].params(overrides))


def check_dict(rep: so.ResidualReport) -> dict:
    return {
        "name": rep.name,
        "points": int(len(rep.residuals)),
        "sup_residual": float(rep.sup),
        "tolerance": float(rep.tolerance),
        "pass": bool(rep.passed),
        "worst_point": [float(v) for v in rep.worst_point],
    }


def report_document(digest, checks, classification=None, trivial=None,
                    passed=None) -> dict:
    if passed is None:
        passed = all(c["pass"] for c in checks)
    return {
        "version": __version__,
        "manifest_digest": digest,
        "checks": checks,
        "classification": classification,
        "trivial": trivial,
        "pass": bool(passed),
    }


def emit(doc: dict, json_path=None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _overrides(args) -> dict:
    out = {}
    for flag, _ in _PARAM_FLAGS:
        key = flag.lstrip("-").replace("-", "_")
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    return out


def _example_digest(run: cat.ExampleRun) -> str:
    if run.structure is not None:
        return mf.digest(mf.structure_to_dict(run.structure))
    return mf.digest({"example": run.example_id, "parameters": run.params})


def cmd_verify_example(args) -> int:
    run = cat.run_example(args.id, _overrides(args), count=args.points,
                          tol=args.tol if args.tol is not None else 1e-8,
                          seed=args.seed)
    doc = report_document(_example_digest(run), [check_dict(r) for r in run.checks],
                          run.classification, run.trivial, run.passed)
    emit(doc, args.json)
    return EXIT_OK if run.passed else EXIT_FAIL


def cmd_verify_manifest(args) -> int:
    man = mf.load(args.path)
    s = man.build_structure()
    tol = args.tol if args.tol is not None else 1e-8
    pts = so.default_points(s, args.points, args.seed)
    checks = [so.soliton_residual(s, pts, tol)]
    if s.is_gradient:
        checks.append(so.gradient_soliton_residual(s, pts, tol))
    if checks[0].passed and s.h_form == so.FORM_NEG_M_OVER_U:
        if so.lambda_is_constant(s, pts):
            checks.append(so.mu_field(s, pts))
        checks.append(so.eqpprinc_residual(s, pts))
    classification = so.classify_lambda(s, pts)
    verdict = so.triviality_check(s, pts, tol)
    doc = report_document(man.digest, [check_dict(r) for r in checks],
                          classification, verdict.trivial)
    emit(doc, args.json)
    return EXIT_OK if doc["pass"] else EXIT_FAIL


def _identity_reports(args, tol):
    name = args.name
    count = args.points
    if name in ("bianchi", "fg-formulas", "lemma21"):
        suite = {"bianchi": idn.bianchi_suite, "fg-formulas": idn.fg_formulas_suite,
                 "lemma21": idn.lemma21_suite}[name]
        reps = suite(dim=args.dim, metric_count=args.random_metrics,
                     point_count=count, seed=args.seed, tol=tol)
        digest = mf.digest({"identity": name, "dim": args.dim,
                            "metrics": args.random_metrics, "points": count,
                            "seed": args.seed})
        return reps, digest

    if name == "oneill":
        wid = args.warped or "pseudo-hyperbolic"
        if wid != "pseudo-hyperbolic":
            raise ValueError(f"unknown warped space {wid!r}")
        p = cat.EXAMPLES["pseudo-hyperbolic"].params(
            {k: v for k, v in _overrides(args).items()
             if k in ("n", "k", "A", "l")})
        w, _ = cat.pseudo_hyperbolic_product(p["n"], p["k"], p["A"], p["l"])
        reps = idn.oneill_suite(w, count=count, seed=args.seed, tol=tol)
        digest = mf.digest({"identity": name, "warped": wid,
                            "parameters": {k: p[k] for k in ("n", "k", "A", "l")},
                            "points": count, "seed": args.seed})
        return reps, digest

    if name == "conformal-factor":
        S = sp.make_sphere(3)
        rho = sp.height_function(S, (0.0, 0.0, 0.0, 1.0)).field
        pts = geo.points_array(geo.sample_points(S.chart, count, args.seed))
        reps = [so.conformal_factor_hessian_check(S.metric, rho, pts, tol)]
        u = so.potential_from_factor(S.metric, rho, pts)
        L = geo.lie_derivative_metric(S.metric, geo.gradient(S.metric, u))
        n = S.chart.dim
        comps = [[ex.sub(ex.mul(ex.const(0.5), L.comps[i][j]),
                         ex.mul(rho.expr, S.metric.comps[i][j]))
                  for j in range(n)] for i in range(n)]
        _, ginv = geo.eval_metric(S.metric, pts)
        tv = geo.eval_sym2_comps(comps, pts, S.chart)
        reps.append(so._report("factor-potential", tol, pts,
                               geo.gnorm_sym2(tv, ginv)))
        digest = mf.digest({"identity": name, "points": count, "seed": args.seed})
        return reps, digest

    # structure-bound identities, run on a catalog example
    default_example = "pseudo-hyperbolic" if name == "mu-const" else "neg-m-sphere"
    s = _build_catalog_structure(args.example or default_example, _overrides(args))
    pts = so.default_points(s, count, args.seed)
    op = {"divric": so.divric_identity_residual, "eqpprinc": so.eqpprinc_residual,
          "mu-const": so.mu_field}[name]
    reps = [op(s, pts, tol)]
    digest = mf.digest(mf.structure_to_dict(s))
    return reps, digest


def cmd_check_identity(args) -> int:
    tol = args.tol if args.tol is not None else _IDENTITY_TOL[args.name]
    reps, digest = _identity_reports(args, tol)
    doc = report_document(digest, [check_dict(r) for r in reps])
    emit(doc, args.json)
    return EXIT_OK if doc["pass"] else EXIT_FAIL


def _base_structure(args) -> so.SolitonStructure:
    base = args.base
    if base in cat.EXAMPLES:
        return _build_catalog_structure(base, _overrides(args))
    if os.path.exists(base):
        return mf.load(base).build_structure()
    raise ValueError(f"--base {base!r} is neither a catalog id nor a manifest path")


def cmd_construct_warped(args) -> int:
    s = _base_structure(args)
    tol = args.tol if args.tol is not None else 1e-8
    if args.fiber_dim is not None:
        fiber_dim = args.fiber_dim
    elif s.m is not None:
        fiber_dim = int(round(s.m))
    else:
        raise ValueError("--fiber-dim is required when the base declares no m")
    if args.fiber == "abstract" and args.out:
        raise ValueError("an abstract fiber has no chart; no manifest to write")
    pts = so.default_points(s, args.points, args.seed)
    if args.fiber_mu is not None:
        fiber_mu = args.fiber_mu
    else:
        murep = so.mu_field(s, pts)
        fiber_mu = murep.metadata["mu_estimate"]
    w, rep = so.warped_einstein_construct(s, fiber_dim, fiber_mu,
                                          fiber_kind=args.fiber, points=pts,
                                          seed=args.seed, tol=tol)
    lam_bar = rep.metadata["lambda"]
    if abs(lam_bar) <= so.STEADY_EPS:
        classification = "steady"
    else:
        classification = "shrinking" if lam_bar > 0 else "expanding"
    if w.chart is not None:
        d = w.chart.dim
        prod = so.SolitonStructure(
            w.metric, ScalarField(w.chart, ex.ONE),
            ScalarField(w.chart, ex.const(lam_bar)),
            vector_field=VectorField(w.chart, [ex.ZERO] * d),
            binding=s.params)
        out_doc = mf.structure_to_dict(prod)
        if args.out:
            mf.write(out_doc, args.out)
        digest = mf.digest(out_doc)
    else:
        digest = mf.digest(mf.structure_to_dict(s))
    doc = report_document(digest, [check_dict(rep)], classification, True)
    emit(doc, args.json)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_classify(args) -> int:
    if (args.example is None) == (args.manifest is None):
        raise ValueError("give exactly one of --example or --manifest")
    if args.example is not None:
        s = _build_catalog_structure(args.example, _overrides(args))
        digest = mf.digest(mf.structure_to_dict(s))
    else:
        man = mf.load(args.manifest)
        s = man.build_structure()
        digest = man.digest
    pts = so.default_points(s, args.points, args.seed)
    tol = args.tol if args.tol is not None else 1e-8
    verdict = so.triviality_check(s, pts, tol)
    doc = report_document(digest, [], so.classify_lambda(s, pts), verdict.trivial,
                          passed=True)
    emit(doc, args.json)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, param_flags=False):
    p.add_argument("--points", type=int, default=200,
                   help="admissible sample count (default 200)")
    p.add_argument("--tol", type=float, default=None,
                   help="residual tolerance (default 1e-8, or the identity's own)")
    p.add_argument("--seed", type=int, default=42, help="sampler seed (default 42)")
    p.add_argument("--json", metavar="PATH", default=None,
                   help="also write the JSON report to PATH")
    if param_flags:
        for flag, typ in _PARAM_FLAGS:
            p.add_argument(flag, type=typ, default=None, dest=flag.lstrip("-").replace("-", "_"),
                           help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="solitonlab",
        description="Construct and verify h-almost Ricci soliton structures "
                    "at sampled chart points.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-example", help="run a catalog example's check suite")
    p.add_argument("id", choices=cat.EXAMPLE_IDS)
    _add_common(p, param_flags=True)
    p.set_defaults(func=cmd_verify_example)

    p = sub.add_parser("verify-manifest", help="verify a manifest file")
    p.add_argument("path")
    _add_common(p)
    p.set_defaults(func=cmd_verify_manifest)

    p = sub.add_parser("check-identity", help="run a structural identity suite")
    p.add_argument("name", choices=IDENTITY_NAMES)
    p.add_argument("--random-metrics", type=int, default=20,
                   help="perturbed metrics for the universal suites (default 20)")
    p.add_argument("--dim", type=int, default=3,
                   help="dimension for random metrics (default 3)")
    p.add_argument("--example", default=None,
                   help="catalog structure for divric/eqpprinc/mu-const")
    p.add_argument("--warped", default=None,
                   help="warped space for the oneill comparison")
    _add_common(p, param_flags=True)
    p.set_defaults(func=cmd_check_identity)

    p = sub.add_parser("construct-warped",
                       help="build a warped-product Einstein metric from a "
                            "gradient base structure")
    p.add_argument("--base", required=True,
                   help="catalog id or manifest path of the base structure")
    p.add_argument("--fiber-dim", type=int, default=None)
    p.add_argument("--fiber-mu", type=float, default=None)
    p.add_argument("--fiber", default="auto",
                   choices=("auto", "flat", "sphere", "hyperbolic", "abstract"))
    p.add_argument("--out", default=None, help="write the product manifest here")
    _add_common(p, param_flags=True)
    p.set_defaults(func=cmd_construct_warped)

    p = sub.add_parser("classify", help="classification and triviality only")
    p.add_argument("--example", default=None)
    p.add_argument("--manifest", default=None)
    _add_common(p, param_flags=True)
    p.set_defaults(func=cmd_classify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except mf.ManifestError as err:
        print(f"manifest error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except so.PreconditionError as err:
        print(f"precondition not met: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, TypeError) as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return EXIT_INPUT
    except geo.GeometryError as err:
        print(f"geometry error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except ex.ExprError as err:
        print(f"expression error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
