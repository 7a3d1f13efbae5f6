"""Semantic checks over a linked register.

Codes (parse and link stages own E001-E003 and E013-E015):

  E004  EVR covers CORE/QUALITY where the quality belongs to another core value
  E005  cycle in the trace graph
  E006  impact-assessment threat without likelihood or damage
  E007  threat with no mitigating control that is not accepted
  E008  ranking omits or repeats a declared core value
  E009  ranking places a constrained core value below its min_rank
  E010  organizational-path EVR without any measure
  E011  high-band threat accepted instead of controlled
  E012  ranking does not acknowledge all seven criteria c1..c7
  E016  accepted threat without a residual_note

  W001  core value with no qualities
  W002  quality covered by no EVR
  W003  stakeholder with no statements
  W004  canonical lens with no statements (once elicitation has started)
  W005  organizational precondition answered no
  W007  core value whose qualities are all stakeholder-sourced
  W008  partner that does not grant system access
"""

from __future__ import annotations

from collections import Counter
from enum import Enum
from typing import Iterable, Iterator

from vbec.diagnostics import NO_SPAN, Diagnostic, sort_diagnostics
from vbec.model import CANONICAL_LENSES, CRITERIA, DesignPath, Register, lens_coverage
from vbec.riskengine import Band, risk_score
from vbec.tracegraph import CycleError, build

CODES = {
    "E001": "unknown reference",
    "E002": "duplicate id",
    "E003": "invalid or missing field value",
    "E004": "quality not owned by paired core value",
    "E005": "cycle in trace graph",
    "E006": "impact-assessment threat not quantified",
    "E007": "threat neither controlled nor accepted",
    "E008": "ranking not a permutation of core values",
    "E009": "ranking violates min_rank constraint",
    "E010": "organizational EVR without measure",
    "E011": "high-risk threat accepted without control",
    "E012": "prioritization criteria not all acknowledged",
    "E013": "unknown field key",
    "E014": "duplicate field key",
    "E015": "malformed token or block",
    "E016": "accepted threat without residual note",
    "W001": "core value without qualities",
    "W002": "quality not covered by any EVR",
    "W003": "stakeholder without statements",
    "W004": "moral lens without statements",
    "W005": "organizational precondition not met",
    "W007": "no conceptual analysis for core value",
    "W008": "partner without system access",
}


class Gate(str, Enum):
    PASS = "pass"
    FAIL = "fail"


def _chain(register: Register, extra_edges) -> Iterator[Diagnostic]:
    for evr in register.evrs:
        for c in evr.covers:
            owner = register[c.quality].core
            if owner != c.core:
                yield Diagnostic(
                    "E004",
                    f"EVR {evr.id} pairs quality {c.quality} with {c.core}, "
                    f"but {c.quality} belongs to {owner}",
                    c.span, evr.id,
                )
    try:
        build(register, extra_edges)
    except CycleError as exc:
        # anchor on the entity whose outgoing edge closes the cycle
        closing = exc.cycle[-2]
        ent = register.by_id.get(closing)
        yield Diagnostic("E005", str(exc), ent.span if ent is not None else NO_SPAN, closing)


def _risk(register: Register) -> Iterator[Diagnostic]:
    for t in register.threats:
        evr = register[t.evr]
        controlled = bool(register.controls_of.get(t.id))
        if evr.path is DesignPath.IMPACT_ASSESSMENT and t.levels is None:
            missing = [n for n, v in (("likelihood", t.likelihood), ("damage", t.damage)) if v is None]
            yield Diagnostic(
                "E006",
                f"threat {t.id} on impact-assessment EVR {evr.id} lacks {' and '.join(missing)}",
                t.span, t.id,
            )
        if not controlled and not t.accepted:
            yield Diagnostic("E007", f"threat {t.id} has no mitigating control and is not accepted",
                             t.span, t.id)
        if t.accepted and not (t.residual_note and t.residual_note.strip()):
            yield Diagnostic("E016", f"accepted threat {t.id} must document a residual_note",
                             t.span, t.id)
        if (t.accepted and not controlled and t.levels is not None
                and evr.path is DesignPath.IMPACT_ASSESSMENT):
            score, band = risk_score(*t.levels, register.config)
            if band is Band.HIGH:
                yield Diagnostic(
                    "E011",
                    f"threat {t.id} scores {score} (high) and needs a control; acceptance is not enough",
                    t.span, t.id,
                )
    for evr in register.evrs:
        if evr.path is DesignPath.ORGANIZATIONAL and not register.measures_of.get(evr.id):
            yield Diagnostic("E010", f"organizational EVR {evr.id} has no measure", evr.span, evr.id)


def _ranking(register: Register) -> Iterator[Diagnostic]:
    ranking = register.ranking
    if ranking is None:
        return
    declared = [c.id for c in register.corevalues]
    counts = Counter(ranking.order)
    missing = [c for c in declared if c not in counts]
    repeated = [c for c, n in counts.items() if n > 1]
    if missing:
        yield Diagnostic("E008", "ranking omits core value(s): " + ", ".join(missing),
                         ranking.span, "ranking")
    if repeated:
        yield Diagnostic("E008", "ranking lists core value(s) more than once: " + ", ".join(repeated),
                         ranking.span, "ranking")
    position = {}
    for i, c in enumerate(ranking.order, 1):
        position.setdefault(c, i)
    for con in ranking.constraints:
        rank = position.get(con.core)
        if rank is not None and rank > con.min_rank:
            yield Diagnostic(
                "E009",
                f"{con.core} is ranked {rank} but must be ranked {con.min_rank} or higher ({con.reason})",
                con.span, "ranking",
            )
    absent = [c for c in CRITERIA if c not in ranking.criteria]
    if absent:
        yield Diagnostic("E012", "ranking does not acknowledge criteria: " + ", ".join(absent),
                         ranking.span, "ranking")


def _coverage(register: Register) -> Iterator[Diagnostic]:
    for cv in register.corevalues:
        if not cv.qualities:
            yield Diagnostic("W001", f"core value {cv.id} has no value qualities", cv.span, cv.id)
        elif all(not register[q].conceptual for q in cv.qualities):
            yield Diagnostic(
                "W007",
                f"all qualities of core value {cv.id} come from stakeholders; add conceptual analysis",
                cv.span, cv.id,
            )
    for q in register.qualities:
        if not register.evrs_of_quality.get(q.id):
            yield Diagnostic("W002", f"quality {q.id} is not covered by any EVR", q.span, q.id)


def _elicitation(register: Register) -> Iterator[Diagnostic]:
    for s in register.stakeholders:
        if not register.statements_by.get(s.id):
            yield Diagnostic("W003", f"stakeholder {s.id} has no value statements", s.span, s.id)
    if register.statements:
        counts = lens_coverage(register)
        anchor = register.statements[0].span
        for lens in CANONICAL_LENSES:
            if counts[lens] == 0:
                yield Diagnostic("W004", f"no statements elicited through the {lens} lens",
                                 anchor, None)
    if register.project is not None:
        for key, ok in register.project.preconditions.items():
            if not ok:
                yield Diagnostic("W005", f"organizational precondition '{key}' is not met",
                                 register.project.span, "project")
    for p in register.partners:
        if not p.system_access:
            yield Diagnostic("W008", f"partner {p.id} does not grant access to its systems",
                             p.span, p.id)


def validate(register: Register, extra_edges: Iterable[tuple[str, str]] = ()) -> list[Diagnostic]:
    """Run every semantic check; result is sorted by code, then span."""
    diags: list[Diagnostic] = []
    for check in (_ranking, _coverage, _elicitation, _risk):
        diags.extend(check(register))
    diags.extend(_chain(register, extra_edges))
    return sort_diagnostics(diags)


def severity_gate(diagnostics: Iterable[Diagnostic], strict: bool = False) -> Gate:
    diagnostics = list(diagnostics)
    if any(d.is_error for d in diagnostics):
        return Gate.FAIL
    if strict and diagnostics:
        return Gate.FAIL
    return Gate.PASS
