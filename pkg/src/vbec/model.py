"""Domain entities of a Value Register and the linker that builds them.

``link`` turns parsed items into an immutable :class:`Register` in which every
reference is known to resolve. It either returns a register or raises
:class:`LinkError` carrying all diagnostics; it never returns a partial model.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Any, Iterable, Mapping, Sequence

from vbec.diagnostics import NO_SPAN, Diagnostic, SourceSpan, sort_diagnostics
from vbec.parser import PRECONDITIONS, Constraint, Ident, Pair, SyntaxItem

# ---------------------------------------------------------------------------
# Enumerations
# ---------------------------------------------------------------------------


class StakeholderKind(str, Enum):
    DIRECT = "direct"
    INDIRECT = "indirect"


class Polarity(str, Enum):
    BENEFIT = "benefit"
    HARM = "harm"


class Relation(str, Enum):
    INSTRUMENTAL = "instrumental"
    UNDERMINING = "undermining"


class Nature(str, Enum):
    ORGANIZATIONAL = "organizational"
    TECHNICAL = "technical"
    MIXED = "mixed"


class DesignPath(str, Enum):
    ORGANIZATIONAL = "organizational"  # path I
    STANDARD = "standard"  # path II
    IMPACT_ASSESSMENT = "impact_assessment"  # path III

    @property
    def numeral(self) -> str:
        return {"organizational": "I", "standard": "II", "impact_assessment": "III"}[self.value]


class Likelihood(int, Enum):
    RARE = 1
    UNLIKELY = 2
    POSSIBLE = 3
    LIKELY = 4
    FREQUENT = 5


class Damage(int, Enum):
    NEGLIGIBLE = 1
    LIMITED = 2
    SUBSTANTIAL = 3
    SERIOUS = 4
    CATASTROPHIC = 5


class RequirementStatus(str, Enum):
    ROADMAP = "roadmap"
    IMPLEMENTED = "implemented"
    VALIDATED = "validated"


class Outcome(str, Enum):
    ACTUALIZED = "actualized"
    NOT_ACTUALIZED = "not_actualized"
    UNEXPECTED = "unexpected"


class MonitorAction(str, Enum):
    NONE = "none"
    REOPEN = "reopen"


class EvrStatus(str, Enum):
    DRAFT = "draft"
    RISK_ANALYZED = "risk_analyzed"
    IMPLEMENTED = "implemented"
    VALIDATED = "validated"
    REOPENED = "reopened"


CANONICAL_LENSES = ("utilitarian", "virtue", "duty")
CRITERIA = tuple(f"c{i}" for i in range(1, 8))

# ---------------------------------------------------------------------------
# Entities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RiskConfig:
    low_max: int = 4
    medium_max: int = 14

    def __post_init__(self) -> None:
        if not (1 <= self.low_max < self.medium_max < 25):
            raise ValueError(
                f"risk bands need 1 <= low_max < medium_max < 25, got {self.low_max}, {self.medium_max}"
            )


@dataclass(frozen=True)
class Project:
    name: str
    soi_description: str
    preconditions: Mapping[str, bool]
    value_lead: str | None = None
    span: SourceSpan = NO_SPAN


@dataclass(frozen=True)
class Stakeholder:
    id: str
    label: str
    kind: StakeholderKind
    critical: bool = False
    span: SourceSpan = NO_SPAN


@dataclass(frozen=True)
class Partner:
    id: str
    label: str
    system_access: bool
    span: SourceSpan = NO_SPAN


@dataclass(frozen=True)
class Lens:
    """One of the canonical moral lenses, or a named culture-specific one."""

    name: str
    custom: bool = False

    @property
    def key(self) -> str:
        return f"custom({self.name})" if self.custom else self.name


@dataclass(frozen=True)
class ValueStatement:
    id: str
    by: str
    lens: Lens
    polarity: Polarity
    value_name: str
    text: str = ""
    span: SourceSpan = NO_SPAN


@dataclass(frozen=True)
class CoreValue:
    id: str
    name: str
    intrinsic: bool
    qualities: tuple[str, ...] = ()
    span: SourceSpan = NO_SPAN


@dataclass(frozen=True)
class ValueQuality:
    """A quality is stakeholder-sourced (``statement`` set) or conceptual (``citation`` set)."""

    id: str
    name: str
    core: str
    relation: Relation
    statement: str | None = None
    citation: str | None = None
    span: SourceSpan = NO_SPAN

    @property
    def conceptual(self) -> bool:
        return self.statement is None


@dataclass(frozen=True)
class RankConstraint:
    core: str
    min_rank: int
    reason: str
    span: SourceSpan = NO_SPAN


@dataclass(frozen=True)
class Ranking:
    criteria: frozenset[str]
    order: tuple[str, ...]
    constraints: tuple[RankConstraint, ...] = ()
    span: SourceSpan = NO_SPAN


@dataclass(frozen=True)
class Cover:
    core: str
    quality: str
    span: SourceSpan = NO_SPAN


@dataclass(frozen=True)
class EthicalValueRequirement:
    id: str
    covers: tuple[Cover, ...]
    statement: str
    nature: Nature
    path: DesignPath
    thresholds: tuple[str, ...] = ()
    span: SourceSpan = NO_SPAN


@dataclass(frozen=True)
class Measure:
    id: str
    evr: str
    text: str
    span: SourceSpan = NO_SPAN


@dataclass(frozen=True)
class Threat:
    id: str
    evr: str
    text: str
    likelihood: Likelihood | None = None
    damage: Damage | None = None
    accepted: bool = False
    residual_note: str | None = None
    span: SourceSpan = NO_SPAN

    @property
    def levels(self) -> tuple[int, int] | None:
        if self.likelihood is None or self.damage is None:
            return None
        return int(self.likelihood), int(self.damage)


@dataclass(frozen=True)
class Control:
    id: str
    threats: tuple[str, ...]
    text: str
    span: SourceSpan = NO_SPAN


@dataclass(frozen=True)
class SystemRequirement:
    """``control`` is None for a functional (non-value-based) requirement."""

    id: str
    control: str | None
    text: str
    status: RequirementStatus = RequirementStatus.ROADMAP
    span: SourceSpan = NO_SPAN

    @property
    def value_based(self) -> bool:
        return self.control is not None


@dataclass(frozen=True)
class MonitorEntry:
    """``quality`` is None only for unexpected outcomes, which carry ``value_name``."""

    id: str
    quality: str | None
    outcome: Outcome
    note: str = ""
    action: MonitorAction = MonitorAction.NONE
    value_name: str | None = None
    span: SourceSpan = NO_SPAN


Entity = Any


def _group(pairs: Iterable[tuple[str, str]]) -> Mapping[str, tuple[str, ...]]:
    out: dict[str, list[str]] = {}
    for key, val in pairs:
        out.setdefault(key, []).append(val)
    return MappingProxyType({k: tuple(v) for k, v in out.items()})


@dataclass(frozen=True)
class Register:
    """A fully linked Value Register. All collections are in declaration order."""

    project: Project | None = None
    config: RiskConfig = RiskConfig()
    stakeholders: tuple[Stakeholder, ...] = ()
    partners: tuple[Partner, ...] = ()
    statements: tuple[ValueStatement, ...] = ()
    corevalues: tuple[CoreValue, ...] = ()
    qualities: tuple[ValueQuality, ...] = ()
    ranking: Ranking | None = None
    evrs: tuple[EthicalValueRequirement, ...] = ()
    measures: tuple[Measure, ...] = ()
    threats: tuple[Threat, ...] = ()
    controls: tuple[Control, ...] = ()
    sysreqs: tuple[SystemRequirement, ...] = ()
    monitors: tuple[MonitorEntry, ...] = ()

    by_id: Mapping[str, Entity] = field(init=False, compare=False, repr=False)
    statements_by: Mapping[str, tuple[str, ...]] = field(init=False, compare=False, repr=False)
    evrs_of_quality: Mapping[str, tuple[str, ...]] = field(init=False, compare=False, repr=False)
    measures_of: Mapping[str, tuple[str, ...]] = field(init=False, compare=False, repr=False)
    threats_of: Mapping[str, tuple[str, ...]] = field(init=False, compare=False, repr=False)
    controls_of: Mapping[str, tuple[str, ...]] = field(init=False, compare=False, repr=False)
    sysreqs_of: Mapping[str, tuple[str, ...]] = field(init=False, compare=False, repr=False)
    monitors_of: Mapping[str, tuple[str, ...]] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        by_id: dict[str, Entity] = {}
        for group in self.entity_groups():
            for ent in group:
                by_id[ent.id] = ent
        indexes = {
            "by_id": MappingProxyType(by_id),
            "statements_by": _group((s.by, s.id) for s in self.statements),
            "evrs_of_quality": _group(
                (c.quality, e.id) for e in self.evrs for c in _unique_covers(e)
            ),
            "measures_of": _group((m.evr, m.id) for m in self.measures),
            "threats_of": _group((t.evr, t.id) for t in self.threats),
            "controls_of": _group((t, c.id) for c in self.controls for t in dict.fromkeys(c.threats)),
            "sysreqs_of": _group((r.control, r.id) for r in self.sysreqs if r.control),
            "monitors_of": _group((m.quality, m.id) for m in self.monitors if m.quality),
        }
        for name, value in indexes.items():
            object.__setattr__(self, name, value)

    def entity_groups(self) -> tuple[tuple[Entity, ...], ...]:
        return (
            self.stakeholders, self.partners, self.statements, self.corevalues,
            self.qualities, self.evrs, self.measures, self.threats, self.controls,
            self.sysreqs, self.monitors,
        )

    def __getitem__(self, entity_id: str) -> Entity:
        return self.by_id[entity_id]

    def __contains__(self, entity_id: object) -> bool:
        return entity_id in self.by_id


def _unique_covers(evr: EthicalValueRequirement) -> list[Cover]:
    seen: dict[str, Cover] = {}
    for c in evr.covers:
        seen.setdefault(c.quality, c)
    return list(seen.values())


KIND_OF: dict[type, str] = {
    Stakeholder: "stakeholder",
    Partner: "partner",
    ValueStatement: "statement",
    CoreValue: "corevalue",
    ValueQuality: "quality",
    EthicalValueRequirement: "evr",
    Measure: "measure",
    Threat: "threat",
    Control: "control",
    SystemRequirement: "sysreq",
    MonitorEntry: "monitor",
}


def kind_of(entity: Entity) -> str:
    return KIND_OF[type(entity)]


# ---------------------------------------------------------------------------
# Linking
# ---------------------------------------------------------------------------


class LinkError(Exception):
    """Raised by :func:`link` with every resolution and schema diagnostic."""

    def __init__(self, diagnostics: Sequence[Diagnostic]) -> None:
        self.diagnostics = sort_diagnostics(diagnostics)
        super().__init__(f"{len(self.diagnostics)} link error(s)")


_ID_KINDS = ("stakeholder", "partner", "statement", "corevalue", "quality", "evr",
             "measure", "threat", "control", "sysreq", "monitor")
_ID_REQUIRED = set(_ID_KINDS) | {"config"}
_TITLE_REQUIRED = {"project", "stakeholder", "partner", "corevalue", "quality",
                   "measure", "threat", "control"}
_TITLE_FORBIDDEN = {"config", "ranking", "evr"}

_KIND_WORDS = {
    "stakeholder": "a stakeholder", "statement": "a value statement",
    "corevalue": "a core value", "quality": "a value quality", "evr": "an EVR",
    "threat": "a threat", "control": "a control",
}

_MISSING = object()


class _Linker:
    def __init__(self, items: Sequence[SyntaxItem]) -> None:
        self.items = items
        self.diags: list[Diagnostic] = []
        self.kinds: dict[str, str] = {}

    # -- helpers -----------------------------------------------------------

    def _err(self, code: str, message: str, span: SourceSpan | None, related: str | None) -> None:
        self.diags.append(Diagnostic(code, message, span or NO_SPAN, related))

    def _field(self, item: SyntaxItem, key: str, expect: str, *, required: bool = False,
               default: Any = None) -> Any:
        """Return the typed value of ``key`` or ``default``; type errors are E003."""
        f = item.get(key)
        if f is None:
            if required:
                self._err("E003", f"{item.kind} {item.id or ''} is missing required field '{key}'".replace("  ", " "),
                          item.span, item.id)
                return _MISSING
            return default
        value = f.value
        ok = {
            "str": isinstance(value, str),
            "bool": isinstance(value, bool),
            "int": isinstance(value, int) and not isinstance(value, bool),
            "ident": isinstance(value, Ident),
            "list": isinstance(value, list),
            "any": True,
        }[expect]
        if not ok:
            self._err("E003", f"field '{key}' of {item.kind} expects {_EXPECT_WORDS[expect]}",
                      f.value_span, item.id)
            return _MISSING
        return value

    def _enum(self, item: SyntaxItem, key: str, enum: type[Enum], *, required: bool = False,
              default: Any = None) -> Any:
        f = item.get(key)
        value = self._field(item, key, "any", required=required, default=_MISSING)
        if value is _MISSING:
            return _MISSING if required else default
        name = value.name if isinstance(value, Ident) else value
        if isinstance(name, str):
            for member in enum:
                if member.name.lower() == name or member.value == name:
                    return member
        if isinstance(name, int) and not isinstance(name, bool) and issubclass(enum, int):
            try:
                return enum(name)
            except ValueError:
                pass
        allowed = ", ".join(m.name.lower() for m in enum)
        self._err("E003", f"field '{key}' of {item.kind} must be one of: {allowed}",
                  f.value_span if f else item.span, item.id)
        return _MISSING

    def _ref(self, ident: Ident, kind: str, owner: SyntaxItem) -> str | None:
        actual = self.kinds.get(ident.name)
        if actual is None:
            self._err("E001", f"unknown reference '{ident.name}' (expected {_KIND_WORDS.get(kind, kind)})",
                      ident.span or owner.span, owner.id)
            return None
        if actual != kind:
            self._err("E001", f"'{ident.name}' is {_KIND_WORDS.get(actual, 'a ' + actual)}, "
                              f"expected {_KIND_WORDS.get(kind, kind)}",
                      ident.span or owner.span, owner.id)
            return None
        return ident.name

    def _title(self, item: SyntaxItem) -> str:
        if item.title is None:
            if item.kind in _TITLE_REQUIRED:
                self._err("E003", f"{item.kind} {item.id or ''} needs a quoted title".replace("  ", " "),
                          item.span, item.id)
            return ""
        if item.kind in _TITLE_FORBIDDEN:
            self._err("E003", f"{item.kind} blocks take no quoted title", item.span, item.id)
        return item.title

    # -- passes ------------------------------------------------------------

    def declare(self) -> None:
        singles: dict[str, SyntaxItem] = {}
        for item in self.items:
            if item.kind in ("project", "ranking"):
                if item.kind in singles:
                    self._err("E002", f"duplicate {item.kind} block", item.span, item.kind)
                singles[item.kind] = item
                continue
            if item.id is None:
                if item.kind in _ID_REQUIRED:
                    self._err("E003", f"{item.kind} block needs an identifier", item.span, None)
                continue
            if item.kind == "config":
                continue
            if item.id in self.kinds:
                self._err("E002", f"duplicate id '{item.id}' (already declared as "
                                  f"{self.kinds[item.id]})", item.span, item.id)
                continue
            self.kinds[item.id] = item.kind

    def run(self) -> Register:
        self.declare()
        seen: set[str] = set()
        out: dict[str, list] = {k: [] for k in _ID_KINDS}
        project = ranking = None
        config = {"low_max": 4, "medium_max": 14}
        config_span = None
        for item in self.items:
            if item.kind == "project":
                if project is None:
                    project = self._project(item)
                continue
            if item.kind == "ranking":
                if ranking is None:
                    ranking = self._ranking(item)
                continue
            if item.kind == "config":
                self._title(item)
                self._config(item, config)
                config_span = item.span
                continue
            if item.id is None or item.id in seen or self.kinds.get(item.id) != item.kind:
                continue
            seen.add(item.id)
            entity = getattr(self, "_" + item.kind)(item)
            if entity is not None:
                out[item.kind].append(entity)

        try:
            risk = RiskConfig(**config)
        except (TypeError, ValueError) as exc:
            self._err("E003", str(exc), config_span, None)
            risk = RiskConfig()

        if self.diags:
            raise LinkError(self.diags)

        qualities_of = _group((q.core, q.id) for q in out["quality"])
        corevalues = tuple(
            CoreValue(c.id, c.name, c.intrinsic, qualities_of.get(c.id, ()), c.span)
            for c in out["corevalue"]
        )
        return Register(
            project=project, config=risk,
            stakeholders=tuple(out["stakeholder"]), partners=tuple(out["partner"]),
            statements=tuple(out["statement"]), corevalues=corevalues,
            qualities=tuple(out["quality"]), ranking=ranking, evrs=tuple(out["evr"]),
            measures=tuple(out["measure"]), threats=tuple(out["threat"]),
            controls=tuple(out["control"]), sysreqs=tuple(out["sysreq"]),
            monitors=tuple(out["monitor"]),
        )

    def _project(self, item: SyntaxItem) -> Project | None:
        name = self._title(item)
        soi = self._field(item, "soi", "str", required=True)
        lead = self._field(item, "value_lead", "str")
        pre: dict[str, bool] = {}
        for f in item.fields:
            if f.key != "precondition":
                continue
            if not isinstance(f.value, bool):
                self._err("E003", f"precondition {f.arg} must be yes or no", f.value_span, "project")
                continue
            pre[f.arg] = f.value
        missing = [p for p in PRECONDITIONS if p not in pre and not any(
            f.key == "precondition" and f.arg == p for f in item.fields)]
        if missing:
            self._err("E003", "project is missing precondition(s): " + ", ".join(missing),
                      item.span, "project")
        if soi is _MISSING or lead is _MISSING:
            return None
        ordered = {p: pre[p] for p in PRECONDITIONS if p in pre}
        return Project(name, soi, MappingProxyType(ordered), lead, item.span)

    def _config(self, item: SyntaxItem, config: dict[str, int]) -> None:
        version = self._field(item, "version", "int")
        if version not in (None, _MISSING, 1):
            f = item.get("version")
            self._err("E003", f"unsupported register version {version}", f.value_span, item.id)
        for key in ("low_max", "medium_max"):
            value = self._field(item, key, "int")
            if value is not None and value is not _MISSING:
                config[key] = value

    def _stakeholder(self, item: SyntaxItem) -> Stakeholder | None:
        label = self._title(item)
        kind = self._enum(item, "kind", StakeholderKind, required=True)
        critical = self._field(item, "critical", "bool", default=False)
        if _MISSING in (kind, critical):
            return None
        return Stakeholder(item.id, label, kind, critical, item.span)

    def _partner(self, item: SyntaxItem) -> Partner | None:
        label = self._title(item)
        access = self._field(item, "system_access", "bool", required=True)
        if access is _MISSING:
            return None
        return Partner(item.id, label, access, item.span)

    def _statement(self, item: SyntaxItem) -> ValueStatement | None:
        text = self._title(item)
        by = self._field(item, "by", "ident", required=True)
        by_id = self._ref(by, "stakeholder", item) if isinstance(by, Ident) else None
        lens_f = item.get("lens")
        lens_v = self._field(item, "lens", "any", required=True)
        lens = None
        if isinstance(lens_v, Ident):
            if lens_v.name in CANONICAL_LENSES:
                lens = Lens(lens_v.name)
            else:
                self._err("E003", f"lens '{lens_v.name}' is not canonical "
                                  f"({', '.join(CANONICAL_LENSES)}); quote the name for a custom lens",
                          lens_f.value_span, item.id)
        elif isinstance(lens_v, str) and lens_v.strip():
            lens = Lens(lens_v, custom=True)
        elif lens_v is not _MISSING:
            self._err("E003", "field 'lens' expects a canonical lens or a quoted custom lens name",
                      lens_f.value_span, item.id)
        polarity = self._enum(item, "polarity", Polarity, required=True)
        value = self._field(item, "value", "str", required=True)
        if None in (by_id, lens) or _MISSING in (polarity, value):
            return None
        return ValueStatement(item.id, by_id, lens, polarity, value, text, item.span)

    def _corevalue(self, item: SyntaxItem) -> CoreValue | None:
        name = self._title(item)
        intrinsic = self._field(item, "intrinsic", "bool", default=True)
        if intrinsic is _MISSING:
            return None
        return CoreValue(item.id, name, intrinsic, (), item.span)

    def _quality(self, item: SyntaxItem) -> ValueQuality | None:
        name = self._title(item)
        core = self._field(item, "core", "ident", required=True)
        core_id = self._ref(core, "corevalue", item) if isinstance(core, Ident) else None
        relation = self._enum(item, "relation", Relation, default=Relation.INSTRUMENTAL)
        source = self._field(item, "source", "any", required=True)
        statement = citation = None
        ok = True
        if isinstance(source, Ident):
            statement = self._ref(source, "statement", item)
            ok = statement is not None
        elif isinstance(source, str) and source.strip():
            citation = source
        elif source is not _MISSING:
            self._err("E003", "field 'source' expects a statement reference or a quoted citation",
                      item.get("source").value_span, item.id)
            ok = False
        else:
            ok = False
        if core_id is None or relation is _MISSING or not ok:
            return None
        return ValueQuality(item.id, name, core_id, relation, statement, citation, item.span)

    def _ranking_list(self, item: SyntaxItem, key: str) -> list[Ident] | None:
        value = self._field(item, key, "list", default=[])
        if value is _MISSING:
            return None
        if not all(isinstance(v, Ident) for v in value):
            self._err("E003", f"field '{key}' of ranking expects a list of identifiers",
                      item.get(key).value_span, "ranking")
            return None
        return value

    def _ranking(self, item: SyntaxItem) -> Ranking | None:
        self._title(item)
        criteria = self._ranking_list(item, "criteria")
        order = self._ranking_list(item, "order")
        ok = criteria is not None and order is not None
        if criteria:
            for c in criteria:
                if c.name not in CRITERIA:
                    self._err("E003", f"unknown prioritization criterion '{c.name}' (expected c1..c7)",
                              c.span, "ranking")
                    ok = False
        resolved = [self._ref(v, "corevalue", item) for v in order or []]
        constraints = []
        for f in item.fields:
            if f.key != "constraint":
                continue
            c: Constraint = f.value
            core = self._ref(c.core, "corevalue", item)
            if c.min_rank < 1:
                self._err("E003", "min_rank must be at least 1", f.span, "ranking")
                ok = False
            if core is not None:
                constraints.append(RankConstraint(core, c.min_rank, c.reason, f.span))
        if not ok or None in resolved:
            return None
        return Ranking(frozenset(c.name for c in criteria), tuple(resolved),
                       tuple(constraints), item.span)

    def _evr(self, item: SyntaxItem) -> EthicalValueRequirement | None:
        self._title(item)
        covers_v = self._field(item, "covers", "list", required=True)
        covers: list[Cover] = []
        ok = covers_v is not _MISSING
        if ok:
            if not covers_v:
                self._err("E003", "evr must cover at least one CORE/QUALITY tuple",
                          item.get("covers").value_span, item.id)
                ok = False
            for v in covers_v:
                if not isinstance(v, Pair):
                    self._err("E003", "covers entries must be CORE/QUALITY tuples",
                              getattr(v, "span", None) or item.get("covers").value_span, item.id)
                    ok = False
                    continue
                core = self._ref(v.core, "corevalue", item)
                quality = self._ref(v.quality, "quality", item)
                if core is None or quality is None:
                    ok = False
                else:
                    covers.append(Cover(core, quality, v.span or item.span))
        statement = self._field(item, "statement", "str", required=True)
        path = self._enum(item, "path", DesignPath, required=True)
        default_nature = Nature.ORGANIZATIONAL if path is DesignPath.ORGANIZATIONAL else Nature.TECHNICAL
        nature = self._enum(item, "nature", Nature, default=default_nature)
        thresholds = self._field(item, "thresholds", "list", default=[])
        if thresholds is not _MISSING and not all(isinstance(t, str) for t in thresholds):
            self._err("E003", "thresholds must be a list of quoted qualifiers",
                      item.get("thresholds").value_span, item.id)
            thresholds = _MISSING
        if not ok or _MISSING in (statement, path, nature, thresholds):
            return None
        return EthicalValueRequirement(item.id, tuple(covers), statement, nature, path,
                                       tuple(thresholds), item.span)

    def _measure(self, item: SyntaxItem) -> Measure | None:
        text = self._title(item)
        ref = self._field(item, "implements", "ident", required=True)
        evr = self._ref(ref, "evr", item) if isinstance(ref, Ident) else None
        if evr is None:
            return None
        return Measure(item.id, evr, text, item.span)

    def _threat(self, item: SyntaxItem) -> Threat | None:
        text = self._title(item)
        ref = self._field(item, "against", "ident", required=True)
        evr = self._ref(ref, "evr", item) if isinstance(ref, Ident) else None
        likelihood = self._enum(item, "likelihood", Likelihood)
        damage = self._enum(item, "damage", Damage)
        accepted = self._field(item, "accepted", "bool", default=False)
        note = self._field(item, "residual_note", "str")
        if evr is None or _MISSING in (likelihood, damage, accepted, note):
            return None
        return Threat(item.id, evr, text, likelihood, damage, accepted, note, item.span)

    def _control(self, item: SyntaxItem) -> Control | None:
        text = self._title(item)
        value = self._field(item, "mitigates", "any", required=True)
        if value is _MISSING:
            return None
        refs = value if isinstance(value, list) else [value]
        if not refs or not all(isinstance(r, Ident) for r in refs):
            self._err("E003", "field 'mitigates' expects a non-empty list of threat references",
                      item.get("mitigates").value_span, item.id)
            return None
        threats = [self._ref(r, "threat", item) for r in refs]
        if None in threats:
            return None
        return Control(item.id, tuple(threats), text, item.span)

    def _sysreq(self, item: SyntaxItem) -> SystemRequirement | None:
        text = self._title(item)
        origin = self._field(item, "origin", "ident", required=True)
        status = self._enum(item, "status", RequirementStatus, default=RequirementStatus.ROADMAP)
        if not isinstance(origin, Ident) or status is _MISSING:
            return None
        if origin.name == "functional":
            if not text:
                self._err("E003", f"functional requirement {item.id} needs a quoted text", item.span, item.id)
                return None
            return SystemRequirement(item.id, None, text, status, item.span)
        control = self._ref(origin, "control", item)
        if control is None:
            return None
        if not text:
            for other in self.items:
                if other.kind == "control" and other.id == control:
                    text = other.title or ""
                    break
        return SystemRequirement(item.id, control, text, status, item.span)

    def _monitor(self, item: SyntaxItem) -> MonitorEntry | None:
        note = self._title(item)
        observes = self._field(item, "observes", "any", required=True)
        outcome = self._enum(item, "outcome", Outcome, required=True)
        action = self._enum(item, "action", MonitorAction, default=MonitorAction.NONE)
        if _MISSING in (observes, outcome, action):
            return None
        if isinstance(observes, Ident):
            quality = self._ref(observes, "quality", item)
            if quality is None:
                return None
            return MonitorEntry(item.id, quality, outcome, note, action, None, item.span)
        if isinstance(observes, str) and outcome is Outcome.UNEXPECTED and observes.strip():
            return MonitorEntry(item.id, None, outcome, note, action, observes, item.span)
        self._err("E003", "field 'observes' expects a quality reference "
                          "(a quoted value name is allowed only for unexpected outcomes)",
                  item.get("observes").value_span, item.id)
        return None


_EXPECT_WORDS = {
    "str": "a quoted string", "bool": "yes or no", "int": "an integer",
    "ident": "an identifier", "list": "a list", "any": "a value",
}


def link(items: Sequence[SyntaxItem]) -> Register:
    """Resolve parsed items into a :class:`Register`.

    Raises :class:`LinkError` on unknown references (E001), duplicate ids
    (E002) or schema value errors (E003).
    """
    return _Linker(items).run()


# ---------------------------------------------------------------------------
# Derived queries
# ---------------------------------------------------------------------------


def reachable_controls(register: Register, evr_id: str) -> list[str]:
    out: dict[str, None] = {}
    for t in register.threats_of.get(evr_id, ()):
        for c in register.controls_of.get(t, ()):
            out[c] = None
    return list(out)


def evr_status(register: Register, evr_id: str) -> EvrStatus:
    """Derive the lifecycle state of one EVR from the chain below it."""
    from vbec.riskengine import obligations_met

    evr = register.by_id.get(evr_id)
    if not isinstance(evr, EthicalValueRequirement):
        raise KeyError(f"unknown EVR {evr_id!r}")

    covered = {c.quality for c in evr.covers}
    for m in register.monitors:
        if m.action is MonitorAction.REOPEN and m.quality in covered:
            return EvrStatus.REOPENED

    if not obligations_met(register, evr):
        return EvrStatus.DRAFT

    controls = reachable_controls(register, evr_id)
    reqs = [register[r] for c in controls for r in register.sysreqs_of.get(c, ())]
    if not reqs or any(not register.sysreqs_of.get(c) for c in controls):
        return EvrStatus.RISK_ANALYZED
    done = (RequirementStatus.IMPLEMENTED, RequirementStatus.VALIDATED)
    if not all(r.status in done for r in reqs):
        return EvrStatus.RISK_ANALYZED
    if all(r.status is RequirementStatus.VALIDATED for r in reqs):
        return EvrStatus.VALIDATED
    return EvrStatus.IMPLEMENTED


def lens_coverage(register: Register) -> dict[str, int]:
    """Statement count per lens; the three canonical lenses are always present."""
    counts = Counter(s.lens.key for s in register.statements)
    out = {lens: counts.pop(lens, 0) for lens in CANONICAL_LENSES}
    for key in sorted(counts):
        out[key] = counts[key]
    return out
