"""Risk scoring and design-path obligations for EVR threats.

Scores are the product of a 1-5 likelihood level and a 1-5 damage level.
Bands come from :class:`~vbec.model.RiskConfig`::

    low     score <= low_max          (default 4)
    medium  score <= medium_max       (default 14)
    high    otherwise

Only impact-assessment EVRs (path III) must be quantified. Standard-path
EVRs (path II) are scored when both levels happen to be given, and
organizational EVRs (path I) are never scored.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from vbec.model import DesignPath, EthicalValueRequirement, Register, RiskConfig, Threat
from vbec.tracegraph import canonical_numbers, number_sort_key

LEVELS = range(1, 6)


class Band(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class Obligation(str, Enum):
    CONTROL_REQUIRED = "control_required"
    CONTROL_OR_ACCEPT = "control_or_accept"
    ACCEPTANCE_OK = "acceptance_ok"


BAND_OBLIGATION = {
    Band.HIGH: Obligation.CONTROL_REQUIRED,
    Band.MEDIUM: Obligation.CONTROL_OR_ACCEPT,
    Band.LOW: Obligation.ACCEPTANCE_OK,
}


@dataclass(frozen=True)
class RiskAssessment:
    threat: str
    evr: str
    score: int
    band: Band
    obligation: Obligation
    satisfied: bool
    residual: str | None = None

    def to_json(self) -> dict:
        return {
            "threat": self.threat,
            "evr": self.evr,
            "score": self.score,
            "band": self.band.value,
            "obligation": self.obligation.value,
            "satisfied": self.satisfied,
            "residual": self.residual,
        }


def risk_score(likelihood: int, damage: int, config: RiskConfig = RiskConfig()) -> tuple[int, Band]:
    if likelihood not in LEVELS or damage not in LEVELS:
        raise ValueError(f"risk levels must be 1..5, got likelihood={likelihood}, damage={damage}")
    score = int(likelihood) * int(damage)
    if score <= config.low_max:
        return score, Band.LOW
    if score <= config.medium_max:
        return score, Band.MEDIUM
    return score, Band.HIGH


def _documented_acceptance(threat: Threat) -> bool:
    return threat.accepted and bool(threat.residual_note and threat.residual_note.strip())


def threat_addressed(register: Register, threat: Threat, path: DesignPath) -> bool:
    """Whether a threat meets the obligation its EVR's path imposes."""
    controlled = bool(register.controls_of.get(threat.id))
    if path is DesignPath.ORGANIZATIONAL:
        return True
    if path is DesignPath.STANDARD:
        return controlled or _documented_acceptance(threat)
    if threat.levels is None:
        return False
    _, band = risk_score(*threat.levels, register.config)
    if BAND_OBLIGATION[band] is Obligation.CONTROL_REQUIRED:
        return controlled
    return controlled or _documented_acceptance(threat)


def obligations_met(register: Register, evr: EthicalValueRequirement) -> bool:
    if evr.path is DesignPath.ORGANIZATIONAL:
        return bool(register.measures_of.get(evr.id))
    threats = register.threats_of.get(evr.id, ())
    return bool(threats) and all(threat_addressed(register, register[t], evr.path) for t in threats)


def assess(register: Register, config: RiskConfig | None = None) -> list[RiskAssessment]:
    """Score every quantifiable threat, in canonical-number order.

    Path III threats lacking a level are skipped here and reported by the
    validator as E006.
    """
    config = config or register.config
    out: list[RiskAssessment] = []
    for threat in register.threats:
        evr = register[threat.evr]
        if evr.path is DesignPath.ORGANIZATIONAL or threat.levels is None:
            continue
        score, band = risk_score(*threat.levels, config)
        if evr.path is DesignPath.IMPACT_ASSESSMENT:
            obligation = BAND_OBLIGATION[band]
        else:
            obligation = Obligation.CONTROL_OR_ACCEPT
        controlled = bool(register.controls_of.get(threat.id))
        if obligation is Obligation.CONTROL_REQUIRED:
            satisfied = controlled
        else:
            satisfied = controlled or _documented_acceptance(threat)
        residual = threat.residual_note if _documented_acceptance(threat) else None
        out.append(RiskAssessment(threat.id, evr.id, score, band, obligation, satisfied, residual))
    key = number_sort_key(canonical_numbers(register), register)
    return sorted(out, key=lambda a: key(a.threat))


def residual_report(assessments: Iterable[RiskAssessment]) -> list[tuple[str, int, str]]:
    """Accepted threats with documented residual risk, highest score first.

    Ties keep the input order, which callers pass in canonical-number order.
    """
    rows = [(a.threat, a.score, a.residual) for a in assessments if a.residual]
    return sorted(rows, key=lambda row: -row[1])
