"""Ethical-maturity metrics, the Markdown Value Register and the JSON export."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from enum import Enum
from fractions import Fraction
from typing import Any, Sequence

from vbec.diagnostics import Diagnostic
from vbec.model import (
    CRITERIA,
    EvrStatus,
    Polarity,
    Register,
    evr_status,
    kind_of,
    lens_coverage,
)
from vbec.riskengine import RiskAssessment, assess, residual_report
from vbec.tracegraph import canonical_numbers, core_value_order, cross_references
from vbec.validator import Gate, severity_gate, validate


class ReportRefused(Exception):
    """The register has errors; no document is produced."""

    def __init__(self, diagnostics: Sequence[Diagnostic]) -> None:
        self.diagnostics = list(diagnostics)
        super().__init__(f"register has {sum(d.is_error for d in diagnostics)} error(s)")


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaturityMetrics:
    values_per_stakeholder: Fraction
    harm_count: int
    benefit_count: int
    evr_coverage: Fraction
    value_based_share: Fraction
    residual_count: int
    reopened_count: int
    # ratio fields whose denominator was empty and were reported as 0
    undefined: tuple[str, ...] = ()


def _ratio(num: int, den: int, name: str, undefined: list[str]) -> Fraction:
    if den == 0:
        undefined.append(name)
        return Fraction(0)
    return Fraction(num, den)


def metrics(register: Register, assessments: Sequence[RiskAssessment] | None = None) -> MaturityMetrics:
    undefined: list[str] = []

    distinct: dict[str, set[str]] = {}
    for s in register.statements:
        distinct.setdefault(s.by, set()).add(s.value_name.casefold())
    vps = _ratio(sum(len(v) for v in distinct.values()), len(distinct),
                 "values_per_stakeholder", undefined)

    harms = sum(s.polarity is Polarity.HARM for s in register.statements)
    covered = sum(bool(register.evrs_of_quality.get(q.id)) for q in register.qualities)
    coverage = _ratio(covered, len(register.qualities), "evr_coverage", undefined)
    share = _ratio(sum(r.value_based for r in register.sysreqs), len(register.sysreqs),
                   "value_based_share", undefined)

    if assessments is None:
        assessments = assess(register)
    reopened = sum(evr_status(register, e.id) is EvrStatus.REOPENED for e in register.evrs)
    return MaturityMetrics(
        values_per_stakeholder=vps,
        harm_count=harms,
        benefit_count=len(register.statements) - harms,
        evr_coverage=coverage,
        value_based_share=share,
        residual_count=len(residual_report(assessments)),
        reopened_count=reopened,
        undefined=tuple(undefined),
    )


def ratio_number(value: Fraction) -> float:
    """Round to at most 6 decimals, half-even, for JSON output."""
    with localcontext() as ctx:
        ctx.prec = 50
        dec = Decimal(value.numerator) / Decimal(value.denominator)
    return float(dec.quantize(Decimal("0.000001"), rounding=ROUND_HALF_EVEN))


def ratio_text(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator} ({ratio_number(value):g})"


def metrics_json(m: MaturityMetrics) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for f in fields(m):
        value = getattr(m, f.name)
        if isinstance(value, Fraction):
            value = ratio_number(value)
        elif isinstance(value, tuple):
            value = list(value)
        out[f.name] = value
    return out


# ---------------------------------------------------------------------------
# JSON export
# ---------------------------------------------------------------------------


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (frozenset, set)):
        return sorted(_plain(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict) or hasattr(value, "items"):
        return {k: _plain(v) for k, v in value.items()}
    if hasattr(value, "__dataclass_fields__"):
        return {f.name: _plain(getattr(value, f.name)) for f in fields(value) if f.name != "span"}
    return value


def _entity_fields(entity: Any) -> dict[str, Any]:
    return {f.name: _plain(getattr(entity, f.name)) for f in fields(entity)
            if f.name not in ("id", "span")}


def emit_json(register: Register, assessments: Sequence[RiskAssessment] | None = None,
              maturity: MaturityMetrics | None = None,
              diagnostics: Sequence[Diagnostic] | None = None) -> str:
    """Single JSON document with sorted keys; errors are embedded, not refused."""
    if assessments is None:
        assessments = assess(register)
    if maturity is None:
        maturity = metrics(register, assessments)
    if diagnostics is None:
        diagnostics = validate(register)
    numbers = canonical_numbers(register)
    entities: dict[str, Any] = {}
    for group in register.entity_groups():
        for ent in group:
            num = numbers.get(ent.id)
            entities[ent.id] = {
                "kind": kind_of(ent),
                "fields": _entity_fields(ent),
                "canonical_number": str(num) if num else None,
            }
    # "$" keeps these out of the identifier namespace
    if register.project is not None:
        entities["$project"] = {"kind": "project", "fields": _entity_fields(register.project),
                                "canonical_number": None}
    if register.ranking is not None:
        entities["$ranking"] = {"kind": "ranking", "fields": _plain(register.ranking),
                                "canonical_number": None}
    doc = {
        "entities": entities,
        "diagnostics": [d.to_json() for d in diagnostics],
        "assessments": [a.to_json() for a in assessments],
        "metrics": metrics_json(maturity),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


# ---------------------------------------------------------------------------
# Markdown report
# ---------------------------------------------------------------------------


def _cell(value: Any) -> str:
    text = "" if value is None else str(value)
    return text.replace("\\", "\\\\").replace("|", "\\|").replace("\n", " ")


def _table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> list[str]:
    if not rows:
        return ["_None._"]
    out = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    out += ["| " + " | ".join(_cell(c) for c in row) + " |" for row in rows]
    return out


def _decision(accepted: bool, controlled: bool) -> str:
    parts = (["controlled"] if controlled else []) + (["accepted"] if accepted else [])
    return ", ".join(parts) or "open"


def _yn(flag: bool) -> str:
    return "yes" if flag else "no"


def emit_report(register: Register, assessments: Sequence[RiskAssessment] | None = None,
                maturity: MaturityMetrics | None = None) -> str:
    """Render the Value Register as Markdown.

    Raises :class:`ReportRefused` when the register does not pass the
    non-strict gate.
    """
    diags = validate(register)
    if severity_gate(diags, strict=False) is Gate.FAIL:
        raise ReportRefused(diags)
    if assessments is None:
        assessments = assess(register)
    if maturity is None:
        maturity = metrics(register, assessments)
    numbers = canonical_numbers(register)
    xrefs = cross_references(register)
    num = lambda eid: str(numbers[eid])  # noqa: E731

    out: list[str] = []
    project = register.project
    out.append(f"# Value Register: {project.name}" if project else "# Value Register")
    out.append("")

    out += ["## Project & Preconditions", ""]
    if project:
        out.append(f"- System of interest: {project.soi_description}")
        if project.value_lead:
            out.append(f"- Value Lead: {project.value_lead}")
        out.append("")
        out += _table(["Precondition", "Met"],
                      [(k, _yn(v)) for k, v in project.preconditions.items()])
    else:
        out.append("_No project declared._")
    out.append("")

    out += ["## Stakeholders & Partners", ""]
    out += _table(["Id", "Stakeholder", "Kind", "Critical", "Statements"],
                  [(s.id, s.label, s.kind.value, _yn(s.critical),
                    len(register.statements_by.get(s.id, ()))) for s in register.stakeholders])
    out.append("")
    out += _table(["Id", "Partner", "System access"],
                  [(p.id, p.label, _yn(p.system_access)) for p in register.partners])
    out.append("")

    out += ["## Elicitation Summary", ""]
    lenses = lens_coverage(register)
    out += _table(["Lens", "Statements"], list(lenses.items()))
    out.append("")
    harms = sum(s.polarity is Polarity.HARM for s in register.statements)
    out.append(f"Statements: {len(register.statements)} ({harms} harm, "
               f"{len(register.statements) - harms} benefit).")
    out.append("")

    out += ["## Core Value Clusters", ""]
    if not register.corevalues:
        out += ["_None._", ""]
    evr_children: dict[str, list[str]] = {}
    for e in register.evrs:
        evr_children.setdefault(e.covers[0].quality, []).append(e.id)
    xref_children: dict[str, list[str]] = {}
    for eid, parents in xrefs.items():
        if eid not in register or kind_of(register[eid]) != "evr":
            continue
        for c in register[eid].covers[1:]:
            if c.quality != register[eid].covers[0].quality:
                xref_children.setdefault(c.quality, []).append(eid)
    for cv_id in core_value_order(register):
        cv = register[cv_id]
        tag = "intrinsic" if cv.intrinsic else "extrinsic"
        out.append(f"### {num(cv_id)} {cv_id}: {cv.name} ({tag})")
        out.append("")
        if not cv.qualities:
            out.append("_No qualities._")
        for q_id in cv.qualities:
            q = register[q_id]
            src = f"conceptual: {q.citation}" if q.conceptual else f"stakeholder: {q.statement}"
            out.append(f"- {num(q_id)} {q_id}: {q.name} ({q.relation.value}; {src})")
            for e in evr_children.get(q_id, ()):
                out.append(f"  - {num(e)} {e}")
            for e in dict.fromkeys(xref_children.get(q_id, ())):
                out.append(f"  - see {num(e)} {e}")
        out.append("")

    out += ["## Ranking", ""]
    ranking = register.ranking
    if ranking is None:
        out += ["_No ranking declared._", ""]
    else:
        for i, c in enumerate(ranking.order, 1):
            out.append(f"{i}. {c}: {register[c].name}")
        out.append("")
        out += _table(["Core value", "Min rank", "Because"],
                      [(c.core, c.min_rank, c.reason) for c in ranking.constraints])
        out.append("")
        out.append("Criteria acknowledged: "
                   + (", ".join(c for c in CRITERIA if c in ranking.criteria) or "none"))
        out.append("")

    out += ["## EVRs", ""]
    if not register.evrs:
        out += ["_None._", ""]
    for e in sorted(register.evrs, key=lambda e: numbers[e.id].sort_key()):
        out.append(f"### {num(e.id)} {e.id}")
        out.append("")
        out.append(e.statement)
        out.append("")
        covers = ", ".join(f"{c.core}/{c.quality}" for c in e.covers)
        out.append(f"- Covers: {covers}")
        out.append(f"- Nature: {e.nature.value}")
        out.append(f"- Path: {e.path.numeral} ({e.path.value})")
        out.append(f"- Status: {evr_status(register, e.id).value}")
        for t in e.thresholds:
            out.append(f"- Threshold: {t}")
        out.append("")

    out += ["## Risk Analysis", ""]
    threat_rows = []
    scored = {a.threat: a for a in assessments}
    for t_id in (t for t in numbers if kind_of(register[t]) == "threat"):
        t = register[t_id]
        a = scored.get(t_id)
        controls = ", ".join(register.controls_of.get(t_id, ())) or "-"
        threat_rows.append((
            num(t_id), t_id, t.text, a.score if a else "-", a.band.value if a else "-",
            a.obligation.value if a else "-", controls, _decision(t.accepted, controls != "-"),
        ))
    out += _table(["No.", "Threat", "Description", "Score", "Band", "Obligation", "Controls", "Decision"],
                  threat_rows)
    out.append("")
    out += ["### Residual risks", ""]
    out += _table(["Threat", "Score", "Residual risk"], residual_report(assessments))
    out.append("")
    out += ["### Controls", ""]
    ctl_rows = []
    for c_id in (c for c in numbers if kind_of(register[c]) == "control"):
        also = ", ".join(str(n) for n in xrefs.get(c_id, ()))
        ctl_rows.append((num(c_id), c_id, register[c_id].text,
                         ", ".join(register[c_id].threats), also or "-"))
    out += _table(["No.", "Control", "Description", "Mitigates", "Also under"], ctl_rows)
    out.append("")

    out += ["## Measures", ""]
    out += _table(["No.", "Measure", "EVR", "Description"],
                  [(num(m), m, register[m].evr, register[m].text)
                   for m in numbers if kind_of(register[m]) == "measure"])
    out.append("")

    out += ["## Roadmap", ""]
    rows = []
    for r in register.sysreqs:
        origin = f"control {r.control}" if r.control else "functional"
        rows.append((str(numbers[r.id]) if r.id in numbers else "-", r.id, r.text, origin, r.status.value))
    out += _table(["No.", "Requirement", "Description", "Origin", "Status"], rows)
    out.append("")

    out += ["## Monitoring", ""]
    out += _table(["Id", "Observes", "Outcome", "Action", "Note"],
                  [(m.id, m.quality or f'"{m.value_name}"', m.outcome.value, m.action.value, m.note)
                   for m in register.monitors])
    out.append("")

    out += ["## Metrics", ""]
    mrows = [
        ("values_per_stakeholder", ratio_text(maturity.values_per_stakeholder)),
        ("harm_count", maturity.harm_count),
        ("benefit_count", maturity.benefit_count),
        ("evr_coverage", ratio_text(maturity.evr_coverage)),
        ("value_based_share", ratio_text(maturity.value_based_share)),
        ("residual_count", maturity.residual_count),
        ("reopened_count", maturity.reopened_count),
    ]
    out += _table(["Metric", "Value"], mrows)
    if maturity.undefined:
        out.append("")
        out.append("Undefined (empty denominator, shown as 0): " + ", ".join(maturity.undefined))
    out.append("")
    return "\n".join(out)

