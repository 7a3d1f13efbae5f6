"""Random register generator for property and acceptance tests.

Generated registers parse, link and validate without errors. Source text is
deliberately non-canonical: shuffled field order, optional commas, comments
and awkward string content.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

_ALPHABET = "abc xyz ÄÖü ç 日本 \"q\" \\ \t\n#{}[]:,/"


def rand_text(rng: random.Random, lo: int = 0, hi: int = 20) -> str:
    return "".join(rng.choice(_ALPHABET) for _ in range(rng.randint(lo, hi)))


def _q(text: str) -> str:
    esc = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{esc}"'


@dataclass
class _Block:
    kind: str
    id: str | None
    title: str | None
    fields: list[str] = field(default_factory=list)


@dataclass
class Generated:
    text: str
    n_entities: int
    ids: list[str]


def _render(rng: random.Random, blocks: list[_Block]) -> str:
    out = []
    for b in blocks:
        head = [b.kind] + ([b.id] if b.id else []) + ([_q(b.title)] if b.title is not None else [])
        fields = list(b.fields)
        rng.shuffle(fields)
        if rng.random() < 0.2:
            out.append(f"# {b.kind} {b.id or ''}")
        if rng.random() < 0.5:
            sep = rng.choice([", ", " ", " ,"])
            out.append(" ".join(head) + " { " + sep.join(fields) + " }")
        else:
            out.append(" ".join(head) + " {")
            out += [rng.choice(["  ", "\t", "    "]) + f + rng.choice(["", ","]) for f in fields]
            out.append("}")
        if rng.random() < 0.3:
            out.append("")
    return "\n".join(out) + rng.choice(["", "\n", "\n\n"])


def generate(rng: random.Random, max_entities: int = 200) -> Generated:
    # mandatory extras (first measure, one control per threat chunk) at most
    # double the room-checked entities
    budget = rng.randint(1, max_entities // 2)
    blocks: list[_Block] = []
    ids: list[str] = []
    counter = [0]

    def new_id(prefix: str) -> str:
        counter[0] += 1
        ident = f"{prefix}{counter[0]}"
        ids.append(ident)
        return ident

    def room() -> bool:
        return len(ids) < budget

    if rng.random() < 0.7:
        fields = [f"soi: {_q(rand_text(rng))}"]
        fields += [f"precondition {p}: {rng.choice(['yes', 'no'])}" for p in (
            "stakeholder_inclusion", "open_culture", "quality_commitment",
            "top_level_value_dedication", "resourcing")]
        if rng.random() < 0.5:
            fields.append(f"value_lead: {_q(rand_text(rng))}")
        blocks.append(_Block("project", None, rand_text(rng, 1), fields))
    if rng.random() < 0.3:
        low = rng.randint(1, 10)
        blocks.append(_Block("config", "risk", None,
                             ["version: 1", f"low_max: {low}", f"medium_max: {rng.randint(low + 1, 24)}"]))

    stakeholders = []
    for _ in range(rng.randint(0, 3)):
        if not room():
            break
        sid = new_id("ST")
        stakeholders.append(sid)
        blocks.append(_Block("stakeholder", sid, rand_text(rng),
                             [f"kind: {rng.choice(['direct', 'indirect'])}", f"critical: {rng.choice(['yes', 'no'])}"]))
    statements = []
    for _ in range(rng.randint(0, 6) if stakeholders else 0):
        if not room():
            break
        sid = new_id("S")
        statements.append(sid)
        lens = rng.choice(["utilitarian", "virtue", "duty", _q(rng.choice(["ubuntu", "dharma"]))])
        blocks.append(_Block("statement", sid, rand_text(rng) if rng.random() < 0.8 else None, [
            f"by: {rng.choice(stakeholders)}", f"lens: {lens}",
            f"polarity: {rng.choice(['benefit', 'harm'])}", f"value: {_q(rand_text(rng, 1, 8))}"]))

    cvs: list[str] = []
    qualities: dict[str, list[str]] = {}
    for _ in range(rng.randint(1, 5)):
        if not room() and cvs:
            break
        cid = new_id("CV")
        cvs.append(cid)
        qualities[cid] = []
        blocks.append(_Block("corevalue", cid, rand_text(rng), [f"intrinsic: {rng.choice(['yes', 'no'])}"]))
    for cid in cvs:
        for _ in range(rng.randint(0, 4)):
            if not room():
                break
            qid = new_id("VQ")
            qualities[cid].append(qid)
            src = rng.choice(statements) if statements and rng.random() < 0.5 else _q(rand_text(rng) + "src")
            fields = [f"core: {cid}", f"source: {src}"]
            if rng.random() < 0.5:
                fields.append(f"relation: {rng.choice(['instrumental', 'undermining'])}")
            blocks.append(_Block("quality", qid, rand_text(rng), fields))

    if rng.random() < 0.6:
        order = list(cvs)
        rng.shuffle(order)
        fields = ["criteria: [" + ", ".join(f"c{i}" for i in range(1, 8)) + "]",
                  "order: [" + ", ".join(order) + "]"]
        for pos, cid in enumerate(order, 1):
            if rng.random() < 0.3:
                fields.append(f"constraint {cid} min_rank {rng.randint(pos, pos + 2)} because {_q(rand_text(rng))}")
        blocks.append(_Block("ranking", None, None, fields))

    tuples = [(c, q) for c in cvs for q in qualities[c]]
    evrs: list[tuple[str, str]] = []
    for _ in range(rng.randint(0, 2 * len(tuples)) if tuples else 0):
        if not room():
            break
        eid = new_id("EVR")
        path = rng.choice(["organizational", "standard", "impact_assessment"])
        evrs.append((eid, path))
        covers = rng.sample(tuples, rng.randint(1, min(3, len(tuples))))
        fields = ["covers: [" + ", ".join(f"{c}/{q}" for c, q in covers) + "]",
                  f"statement: {_q(rand_text(rng, 1))}", f"path: {path}"]
        if rng.random() < 0.5:
            fields.append(f"nature: {rng.choice(['organizational', 'technical', 'mixed'])}")
        if rng.random() < 0.5:
            fields.append("thresholds: [" + ", ".join(_q(rand_text(rng)) for _ in range(rng.randint(0, 3))) + "]")
        blocks.append(_Block("evr", eid, None, fields))

    threats: list[str] = []
    for eid, path in evrs:
        if path == "organizational":
            for k in range(rng.randint(1, 2)):
                if k and not room():
                    break
                mid = new_id("M")
                blocks.append(_Block("measure", mid, rand_text(rng), [f"implements: {eid}"]))
        for _ in range(rng.randint(1 if path != "organizational" else 0, 3)):
            if not room():
                break
            tid = new_id("THR")
            threats.append(tid)
            fields = [f"against: {eid}"]
            if path == "impact_assessment" or rng.random() < 0.3:
                fields += [f"likelihood: {rng.choice(['rare', 'unlikely', 'possible', 'likely', 'frequent'])}",
                           f"damage: {rng.choice(['negligible', 'limited', 'substantial', 'serious', 'catastrophic'])}"]
            if rng.random() < 0.2:
                fields += ["accepted: yes", f"residual_note: {_q(rand_text(rng, 1) + 'x')}"]
            blocks.append(_Block("threat", tid, rand_text(rng), fields))

    # every threat gets at least one control so the register stays error-free
    uncovered = list(threats)
    rng.shuffle(uncovered)
    controls: list[str] = []
    while uncovered:
        k = rng.randint(1, min(3, len(uncovered)))
        mine, uncovered = uncovered[:k], uncovered[k:]
        if threats and rng.random() < 0.3:
            mine.append(rng.choice(threats))
        cid = new_id("CTL")
        controls.append(cid)
        refs = mine if len(mine) > 1 or rng.random() < 0.7 else mine[0]
        val = "[" + ", ".join(refs) + "]" if isinstance(refs, list) else refs
        blocks.append(_Block("control", cid, rand_text(rng), [f"mitigates: {val}"]))
    for cid in controls:
        for _ in range(rng.randint(0, 2)):
            if not room():
                break
            rid = new_id("SR")
            fields = [f"origin: {cid}", f"status: {rng.choice(['roadmap', 'implemented', 'validated'])}"]
            blocks.append(_Block("sysreq", rid, rand_text(rng) if rng.random() < 0.5 else None, fields))
    for _ in range(rng.randint(0, 2) if room() else 0):
        rid = new_id("SR")
        blocks.append(_Block("sysreq", rid, rand_text(rng, 1) + "f", ["origin: functional"]))
    all_q = [q for qs in qualities.values() for q in qs]
    for _ in range(rng.randint(0, 2) if room() else 0):
        mid = new_id("MON")
        action = f"action: {rng.choice(['none', 'reopen'])}"
        if all_q and rng.random() < 0.7:
            fields = [f"observes: {rng.choice(all_q)}",
                      f"outcome: {rng.choice(['actualized', 'not_actualized', 'unexpected'])}", action]
        else:
            fields = [f"observes: {_q(rand_text(rng, 1) + 'v')}", "outcome: unexpected", action]
        blocks.append(_Block("monitor", mid, rand_text(rng), fields))
    for _ in range(rng.randint(0, 2) if room() else 0):
        pid = new_id("P")
        blocks.append(_Block("partner", pid, rand_text(rng), [f"system_access: {rng.choice(['yes', 'no'])}"]))

    return Generated(_render(rng, blocks), len(ids), ids)


def telemedicine(harms: int = 54, benefits: int = 63, stakeholders: int = 6) -> str:
    """Register sized like a telemedicine case study elicitation."""
    lines = []
    for i in range(stakeholders):
        lines.append(f'stakeholder ST{i} "stakeholder {i}" {{ kind: direct }}')
    lenses = ["utilitarian", "virtue", "duty"]
    for i in range(harms + benefits):
        polarity = "harm" if i < harms else "benefit"
        lines.append(
            f'statement S{i} "statement {i}" {{ by: ST{i % stakeholders}, lens: {lenses[i % 3]}, '
            f'polarity: {polarity}, value: "value {i}" }}'
        )
    lines.append('corevalue CV_HEALTH "health" { intrinsic: yes }')
    lines.append('quality VQ_ACCESS "access to care" { core: CV_HEALTH, source: S0 }')
    lines.append('quality VQ_CONFID "medical confidentiality" { core: CV_HEALTH, source: "GDPR Art. 9" }')
    return "\n".join(lines) + "\n"
