"""Soliton manifests: a JSON interchange format for chart + structure data.

A manifest fully describes one structure: coordinates, sampling box, domain
predicates, parameter values, the metric's upper triangle, either a potential
or a vector field, and the h and lambda expressions — everything as strings
in the expression grammar.  Loading validates the schema and parses every
expression against the declared names, reporting the exact offset of any
syntax error.  The digest (sha256 over a canonical single-line JSON
serialization) identifies the manifest in reports.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

from . import expr as ex
from . import soliton as so
from .geometry import Chart, MetricField, ScalarField, VectorField, sym_rows

SCHEMA = "soliton-manifest/1"
_FORM_TAGS = (so.FORM_FREE, so.FORM_M_OVER_U, so.FORM_NEG_M_OVER_U)


class ManifestError(Exception):
    def __init__(self, message, field=None, position=None):
        super().__init__(message)
        self.field = field
        self.position = position


@dataclass
class Manifest:
    document: dict
    chart: Chart
    metric: MetricField
    binding: dict
    structure_kind: str          # "potential" | "vector_field"
    potential: ScalarField
    vector_field: VectorField
    h: ScalarField
    lam: ScalarField
    form_tag: str
    form_m: float
    digest: str

    def build_structure(self) -> so.SolitonStructure:
        return so.SolitonStructure(
            self.metric, self.h, self.lam,
            vector_field=self.vector_field, potential=self.potential,
            binding=self.binding, h_form=self.form_tag, m=self.form_m)


def canonical_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, sort_keys=True, separators=(",", ":"),
                       allow_nan=False) + "\n").encode("utf-8")


def digest(doc: dict) -> str:
    return hashlib.sha256(canonical_bytes(doc)).hexdigest()


def _fail(msg, field=None, position=None):
    raise ManifestError(msg, field=field, position=position)


def _need(doc, key, kind, field=None):
    field = field or key
    if key not in doc:
        _fail(f"missing field {field!r}", field=field)
    v = doc[key]
    if not isinstance(v, kind):
        names = kind.__name__ if isinstance(kind, type) else "/".join(
            k.__name__ for k in kind)
        _fail(f"field {field!r} must be {names}", field=field)
    return v


def _parse(text, coords, params, field):
    if not isinstance(text, str):
        _fail(f"{field} must be an expression string", field=field)
    try:
        return ex.parse_expression(text, coords, params)
    except ex.ParseError as err:
        _fail(f"{field}: {err.message} at offset {err.position}",
              field=field, position=err.position)


def from_dict(doc: dict) -> Manifest:
    if not isinstance(doc, dict):
        _fail("manifest must be a JSON object")
    schema = _need(doc, "schema", str)
    if schema != SCHEMA:
        _fail(f"unsupported schema {schema!r} (expected {SCHEMA!r})", field="schema")
    n = _need(doc, "dimension", int)
    if isinstance(n, bool) or n < 1:
        _fail("dimension must be a positive integer", field="dimension")
    coords = _need(doc, "coordinates", list)
    if len(coords) != n or not all(isinstance(c, str) for c in coords):
        _fail(f"coordinates must be {n} names", field="coordinates")
    box = _need(doc, "box", list)
    if len(box) != n:
        _fail(f"box must have {n} intervals", field="box")
    box_t = []
    for i, pair in enumerate(box):
        ok = (isinstance(pair, list) and len(pair) == 2
              and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                      and math.isfinite(v) for v in pair)
              and pair[0] < pair[1])
        if not ok:
            _fail(f"box[{i}] must be [lo, hi] with lo < hi", field="box")
        box_t.append((float(pair[0]), float(pair[1])))

    raw_params = doc.get("parameters", {})
    if not isinstance(raw_params, dict):
        _fail("parameters must be an object of name: value", field="parameters")
    binding = {}
    for name, val in raw_params.items():
        if not isinstance(val, (int, float)) or isinstance(val, bool) \
                or not math.isfinite(val):
            _fail(f"parameter {name!r} must be a finite number", field="parameters")
        binding[str(name)] = float(val)
    params = tuple(sorted(binding))

    metric_texts = _need(doc, "metric", list)
    want = n * (n + 1) // 2
    if len(metric_texts) != want:
        _fail(f"metric must list {want} upper-triangle entries (row-major), "
              f"got {len(metric_texts)}", field="metric")
    domain_texts = doc.get("domain", [])
    if not isinstance(domain_texts, list):
        _fail("domain must be a list of predicate expressions", field="domain")

    domain = tuple(_parse(t, coords, params, f"domain[{i}]")
                   for i, t in enumerate(domain_texts))
    try:
        chart = Chart(tuple(coords), tuple(box_t), domain=domain, params=params)
    except Exception as err:
        _fail(f"invalid chart: {err}")
    entries = [_parse(t, coords, params, f"metric[{i}]")
               for i, t in enumerate(metric_texts)]
    try:
        metric = MetricField(chart, sym_rows(entries))
    except Exception as err:
        _fail(f"invalid metric: {err}", field="metric")

    block = _need(doc, "structure", dict)
    potential = vector_field = None
    if ("potential" in block) == ("vector_field" in block):
        _fail("structure needs exactly one of 'potential' or 'vector_field'",
              field="structure")
    if "potential" in block:
        kind = "potential"
        potential = ScalarField(chart, _parse(block["potential"], coords, params,
                                              "structure.potential"))
    else:
        kind = "vector_field"
        comps = block["vector_field"]
        if not isinstance(comps, list) or len(comps) != n:
            _fail(f"vector_field must list {n} components", field="structure")
        vector_field = VectorField(chart, [
            _parse(t, coords, params, f"structure.vector_field[{i}]")
            for i, t in enumerate(comps)])

    h = ScalarField(chart, _parse(_need(doc, "h", str), coords, params, "h"))
    lam = ScalarField(chart, _parse(_need(doc, "lambda", str), coords, params,
                                    "lambda"))

    form_tag, form_m = so.FORM_FREE, None
    if "form" in doc:
        fb = _need(doc, "form", dict)
        form_tag = fb.get("tag", so.FORM_FREE)
        if form_tag not in _FORM_TAGS:
            _fail(f"unknown form tag {form_tag!r}", field="form")
        if form_tag != so.FORM_FREE:
            m_val = fb.get("m")
            if not isinstance(m_val, (int, float)) or isinstance(m_val, bool) \
                    or not m_val > 0:
                _fail("form needs m > 0", field="form")
            form_m = float(m_val)

    man = Manifest(doc, chart, metric, binding, kind, potential, vector_field,
                   h, lam, form_tag, form_m, digest(doc))
    try:
        man.build_structure()
    except ValueError as err:
        _fail(f"inconsistent structure: {err}")
    return man


def load(path: str) -> Manifest:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        _fail(f"cannot read manifest: {err}")
    except json.JSONDecodeError as err:
        _fail(f"not valid JSON: {err}")
    return from_dict(doc)


def structure_to_dict(s: so.SolitonStructure) -> dict:
    """Serialize a structure back to a manifest document (dict)."""
    chart = s.chart
    n = chart.dim
    doc = {
        "schema": SCHEMA,
        "dimension": n,
        "coordinates": list(chart.coords),
        "box": [[lo, hi] for lo, hi in chart.box],
        "metric": [chart.text(s.metric.comps[i][j])
                   for i in range(n) for j in range(i, n)],
        "h": chart.text(s.h.expr),
        "lambda": chart.text(s.lam.expr),
    }
    if chart.domain:
        doc["domain"] = [chart.text(e) for e in chart.domain]
    if s.binding:
        doc["parameters"] = {k: v for k, v in s.binding}
    if s.potential is not None:
        doc["structure"] = {"potential": chart.text(s.potential.expr)}
    else:
        doc["structure"] = {"vector_field": [chart.text(c)
                                             for c in s.vector_field.comps]}
    if s.h_form != so.FORM_FREE:
        doc["form"] = {"tag": s.h_form, "m": s.m}
    return doc


def write(doc: dict, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n")
