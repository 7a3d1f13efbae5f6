"""Shared registers: the diagnostics catalog and the fixture corpus."""

from __future__ import annotations

from conftest import chain_text, read_fixture
from generators import telemedicine

BASE = chain_text()
ALL_CRITERIA = "criteria: [c1, c2, c3, c4, c5, c6, c7]"
CV2 = 'corevalue CV2 "second value" { intrinsic: yes }\n'
IMPACT_EVR = 'evr EVR3 { covers: [CV/VQ], statement: "s", path: impact_assessment }\n'
STAKEHOLDER = 'stakeholder ST "customer" { kind: direct }\n'


def _statement(i: int, lens: str) -> str:
    return f'statement S{i} {{ by: ST, lens: {lens}, polarity: benefit, value: "v{i}" }}\n'


def project(answer: str) -> str:
    pre = "\n".join(f"  precondition {p}: {answer if p == 'resourcing' else 'yes'}" for p in (
        "stakeholder_inclusion", "open_culture", "quality_commitment", "top_level_value_dedication",
        "resourcing"))
    return f'project "p" {{\n  soi: "s"\n{pre}\n}}\n'


def _threat(extra: str) -> str:
    return f'threat T3 "t" {{ against: EVR3, {extra} }}\n'


# code -> (minimal failing register, minimal passing register)
CATALOG: dict[str, tuple[str, str]] = {
    "E001": (BASE + "sysreq SR_2 { origin: CTL_GONE }\n", BASE),
    "E002": (BASE + 'corevalue CV "duplicate" { intrinsic: no }\n', BASE),
    "E003": (BASE + 'stakeholder ST "s" { kind: sideways }\n', BASE),
    "E004": (BASE + CV2 + 'quality VQ2 "q" { core: CV2, source: "x" }\n'
             'evr EVR2 { covers: [CV/VQ2], statement: "s", path: standard }\n',
             BASE + CV2 + 'quality VQ2 "q" { core: CV2, source: "x" }\n'
             'evr EVR2 { covers: [CV2/VQ2], statement: "s", path: standard }\n'),
    "E006": (BASE + IMPACT_EVR + _threat('damage: serious, accepted: yes, residual_note: "r"'),
             BASE + IMPACT_EVR + _threat('likelihood: rare, damage: serious, accepted: yes, residual_note: "r"')),
    "E007": (chain_text(control=False), BASE),
    "E008": (BASE + f"ranking {{ {ALL_CRITERIA}, order: [] }}\n",
             BASE + f"ranking {{ {ALL_CRITERIA}, order: [CV] }}\n"),
    "E009": (BASE + CV2 + f'ranking {{ {ALL_CRITERIA}, order: [CV2, CV]\n  constraint CV min_rank 1 because "law" }}\n',
             BASE + CV2 + f'ranking {{ {ALL_CRITERIA}, order: [CV, CV2]\n  constraint CV min_rank 1 because "law" }}\n'),
    "E010": (BASE + 'evr EVR2 { covers: [CV/VQ], statement: "s", path: organizational }\n',
             BASE + 'evr EVR2 { covers: [CV/VQ], statement: "s", path: organizational }\n'
             'measure M "m" { implements: EVR2 }\n'),
    "E011": (BASE + IMPACT_EVR + _threat('likelihood: likely, damage: serious, accepted: yes, residual_note: "r"'),
             BASE + IMPACT_EVR + _threat('likelihood: rare, damage: limited, accepted: yes, residual_note: "r"')),
    "E012": (BASE + "ranking { criteria: [c1, c2], order: [CV] }\n",
             BASE + f"ranking {{ {ALL_CRITERIA}, order: [CV] }}\n"),
    "E013": (BASE + 'corevalue CV9 "x" { color: red }\n', BASE),
    "E014": (BASE + 'corevalue CV9 "x" { intrinsic: yes, intrinsic: no }\n', BASE),
    "E015": (BASE + 'corevalue CV9 "x" { intrinsic yes }\n', BASE),
    "E016": (chain_text(control=False).replace("{ against: EVR }", "{ against: EVR, accepted: yes }"),
             chain_text(control=False).replace("{ against: EVR }",
                                               '{ against: EVR, accepted: yes, residual_note: "low" }')),
    "W001": (BASE + CV2, BASE),
    "W002": (BASE + 'quality VQ2 "q" { core: CV, source: "y" }\n', BASE),
    "W003": (BASE + STAKEHOLDER,
             BASE + STAKEHOLDER + _statement(1, "utilitarian") + _statement(2, "virtue") + _statement(3, "duty")),
    "W004": (BASE + STAKEHOLDER + _statement(1, "utilitarian"),
             BASE + STAKEHOLDER + _statement(1, "utilitarian") + _statement(2, "virtue") + _statement(3, "duty")),
    "W005": (BASE + project("no"), BASE + project("yes")),
    "W007": (read_fixture("privacy_stakeholder.vbr"),
             read_fixture("privacy_stakeholder.vbr") + read_fixture("privacy_conceptual.vbr")),
    "W008": (BASE + 'partner P "vendor" { system_access: no }\n',
             BASE + 'partner P "vendor" { system_access: yes }\n'),
}

# closes a cycle from the leaf of the straight chain back to its root
CYCLE_EDGE = [("SR_1", "CV")]

# every fixture register, keyed by a short name
REGISTERS = {
    "chain": read_fixture("chain.vbr"),
    "retail": read_fixture("retail.vbr"),
    "privacy_stakeholder": read_fixture("privacy_stakeholder.vbr"),
    "privacy_completed": read_fixture("privacy_stakeholder.vbr") + read_fixture("privacy_conceptual.vbr"),
    "telemedicine": telemedicine(),
}
