"""Requirements-as-code toolchain for IEEE 7000 style Value Registers."""

from vbec.diagnostics import Diagnostic, Severity, SourceSpan
from vbec.model import LinkError, Register, evr_status, lens_coverage, link
from vbec.parser import format_canonical, parse
from vbec.validator import severity_gate, validate

__version__ = "0.1.0"

__all__ = [
    "Diagnostic",
    "LinkError",
    "Register",
    "Severity",
    "SourceSpan",
    "evr_status",
    "format_canonical",
    "lens_coverage",
    "link",
    "parse",
    "severity_gate",
    "validate",
]
