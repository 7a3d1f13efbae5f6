from __future__ import annotations

import sys
from pathlib import Path

import pytest

from vbec.diagnostics import Diagnostic
from vbec.model import LinkError, Register, link
from vbec.parser import KINDS, parse
from vbec.validator import validate

FIXTURES = Path(__file__).parent / "fixtures"


def read_fixture(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


def load(text: str, file_name: str = "t.vbr") -> Register:
    items, diags = parse(text, file_name)
    assert not diags, [d.render() for d in diags]
    return link(items)


def diagnose(text: str, file_name: str = "t.vbr") -> list[Diagnostic]:
    """Run the whole pipeline, returning the diagnostics of the first failing stage."""
    items, diags = parse(text, file_name)
    if diags:
        return diags
    try:
        register = link(items)
    except LinkError as exc:
        return exc.diagnostics
    return validate(register)


def codes(diags) -> list[str]:
    return [d.code for d in diags]


def remove_block(text: str, line: int) -> str:
    """Drop the top-level block that contains 1-based ``line``."""
    lines = text.split("\n")
    starts = [i for i, ln in enumerate(lines) if ln.split(" ", 1)[0] in KINDS]
    start = max(s for s in starts if s <= line - 1)
    later = [s for s in starts if s > start]
    end = later[0] if later else len(lines)
    return "\n".join(lines[:start] + lines[end:])


CHAIN_TEMPLATE = """\
corevalue CV "privacy" {{ intrinsic: yes }}
quality VQ "informed consent" {{ core: CV, source: "GDPR Art. 7" }}
evr EVR {{
  covers: [CV/VQ]
  statement: "Ensure that a user can give consent in an easy and informed way"
  path: standard
}}
{threat}
{control}
{sysreq}
{monitor}
"""


def chain_text(*, threat: bool = True, control: bool = True, sysreq: str | None = "roadmap",
               monitor: str | None = None) -> str:
    """The five-layer straight chain CV -> VQ -> EVR -> THR -> CTL -> SR_1 with knobs."""
    return CHAIN_TEMPLATE.format(
        threat='threat THR "consent bundled into the terms" { against: EVR }' if threat else "",
        control='control CTL "separate consent dialog" { mitigates: [THR] }' if control else "",
        sysreq=f"sysreq SR_1 {{ origin: CTL, status: {sysreq} }}" if sysreq and control else "",
        monitor=(f'monitor MON "pilot feedback" {{ observes: VQ, outcome: not_actualized, action: {monitor} }}'
                 if monitor else ""),
    )


@pytest.fixture
def chain_register() -> Register:
    return load(read_fixture("chain.vbr"), "chain.vbr")


@pytest.fixture
def retail_text() -> str:
    return read_fixture("retail.vbr")


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.RESULTS:
        terminalreporter.write_line(line)
