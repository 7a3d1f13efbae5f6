"""Lexer, parser and canonical formatter for the ``.vbr`` register language.

A register file is a flat sequence of blocks::

    corevalue CV_PRIV "privacy" {
      intrinsic: yes
    }

    quality VQ_CONSENT "informed consent" {
      core: CV_PRIV
      source: "GDPR Art. 7"
    }

Parsing never raises. Every problem becomes a diagnostic and the parser
resumes at the next entity keyword that starts a line.

Codes raised here:

  E013  unknown field key for the entity kind
  E014  duplicate field key within a block
  E015  malformed token or block
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Union

from vbec.diagnostics import Diagnostic, SourceSpan

# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------

PRECONDITIONS = (
    "stakeholder_inclusion",
    "open_culture",
    "quality_commitment",
    "top_level_value_dedication",
    "resourcing",
)

# Field keys per entity kind, in canonical output order.
SCHEMA: dict[str, tuple[str, ...]] = {
    "project": ("soi", "value_lead", "precondition"),
    "config": ("version", "low_max", "medium_max"),
    "stakeholder": ("kind", "critical"),
    "partner": ("system_access",),
    "statement": ("by", "lens", "polarity", "value"),
    "corevalue": ("intrinsic",),
    "quality": ("core", "relation", "source"),
    "ranking": ("criteria", "order", "constraint"),
    "evr": ("covers", "statement", "nature", "path", "thresholds"),
    "measure": ("implements",),
    "threat": ("against", "likelihood", "damage", "accepted", "residual_note"),
    "control": ("mitigates",),
    "sysreq": ("origin", "status"),
    "monitor": ("observes", "outcome", "action"),
}

KINDS = tuple(SCHEMA)

_ORDER = {kind: {key: i for i, key in enumerate(keys)} for kind, keys in SCHEMA.items()}
_PRECONDITION_ORDER = {name: i for i, name in enumerate(PRECONDITIONS)}


# ---------------------------------------------------------------------------
# Syntax tree
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ident:
    name: str
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Pair:
    """``CORE/QUALITY`` tuple used by ``evr.covers``."""

    core: Ident
    quality: Ident
    span: SourceSpan | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Constraint:
    """``constraint CV min_rank N because "reason"`` inside a ranking."""

    core: Ident
    min_rank: int
    reason: str


Value = Union[str, int, bool, Ident, Pair, Constraint, list]


@dataclass(frozen=True)
class Field:
    """One ``key: value`` entry. ``arg`` names the precondition or constrained value."""

    key: str
    value: Any
    arg: str | None = None
    span: SourceSpan | None = field(default=None, compare=False, repr=False)
    value_span: SourceSpan | None = field(default=None, compare=False, repr=False)

    @property
    def slot(self) -> tuple[str, str | None]:
        return (self.key, self.arg)


@dataclass(frozen=True, eq=False)
class SyntaxItem:
    """One parsed block.

    Equality is structural: spans are ignored and fields compare in schema
    order, so an item equals its canonically formatted re-parse.
    """

    kind: str
    id: str | None
    title: str | None
    fields: tuple[Field, ...]
    span: SourceSpan | None = field(default=None, compare=False, repr=False)

    def canonical_fields(self) -> tuple[Field, ...]:
        return tuple(sorted(self.fields, key=lambda f: _field_key(self.kind, f)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SyntaxItem):
            return NotImplemented
        return (self.kind, self.id, self.title, self.canonical_fields()) == (
            other.kind, other.id, other.title, other.canonical_fields())

    __hash__ = None  # type: ignore[assignment]

    def get(self, key: str) -> Field | None:
        for f in self.fields:
            if f.key == key:
                return f
        return None


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\[^\n])*")
  | (?P<unterminated>"(?:[^"\\\n]|\\[^\n])*\\?)
  | (?P<punct>[{}\[\]:,/])
  | (?P<bad>.)
    """,
    re.VERBOSE,
)

_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}
_UNESCAPE_RE = re.compile(r"\\(.)")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | int | string | punct | eof
    text: str
    span: SourceSpan
    line_start: bool
    value: Any = None


def _unescape(body: str) -> tuple[str, str | None]:
    bad: list[str] = []

    def sub(m: re.Match) -> str:
        ch = m.group(1)
        if ch not in _ESCAPES:
            bad.append(ch)
            return ch
        return _ESCAPES[ch]

    text = _UNESCAPE_RE.sub(sub, body)
    return text, (f"unknown escape sequence '\\{bad[0]}' in string" if bad else None)


def tokenize(source: str, file_name: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    line, line_off = 1, 0
    first_on_line = True
    for m in _TOKEN_RE.finditer(source):
        kind = m.lastgroup
        start = m.start()
        text = m.group()
        if kind == "nl":
            line += 1
            line_off = m.end()
            first_on_line = True
            continue
        if kind in ("ws", "comment"):
            continue
        span = SourceSpan(file_name, line, start - line_off + 1, len(text))
        if kind == "bad":
            diags.append(Diagnostic("E015", f"unexpected character {text!r}", span))
            first_on_line = False
            continue
        value: Any = None
        if kind in ("string", "unterminated"):
            if kind == "unterminated":
                diags.append(Diagnostic("E015", "unterminated string literal", span))
                body = text[1:]
            else:
                body = text[1:-1]
            value, err = _unescape(body)
            if err:
                diags.append(Diagnostic("E015", err, span))
            kind = "string"
        elif kind == "int":
            value = int(text)
        tokens.append(Token(kind, text, span, first_on_line, value))
        first_on_line = False
    eof_col = len(source) - line_off + 1
    tokens.append(Token("eof", "", SourceSpan(file_name, line, eof_col, 0), True))
    return tokens, diags


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _SyntaxError(Exception):
    def __init__(self, message: str, span: SourceSpan) -> None:
        super().__init__(message)
        self.diagnostic = Diagnostic("E015", message, span)


def _describe(tok: Token) -> str:
    if tok.kind == "eof":
        return "end of file"
    return repr(tok.text)


class _Parser:
    def __init__(self, tokens: list[Token], diags: list[Diagnostic]) -> None:
        self.toks = tokens
        self.pos = 0
        self.diags = diags

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def _advance(self) -> Token:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def _is(self, kind: str, text: str | None = None) -> bool:
        tok = self.tok
        return tok.kind == kind and (text is None or tok.text == text)

    def _expect(self, kind: str, text: str | None = None, what: str | None = None) -> Token:
        if not self._is(kind, text):
            want = what or (repr(text) if text else kind)
            raise _SyntaxError(f"expected {want}, found {_describe(self.tok)}", self.tok.span)
        return self._advance()

    def _at_item_start(self) -> bool:
        tok = self.tok
        return tok.kind == "eof" or (tok.kind == "ident" and tok.text in SCHEMA and tok.line_start)

    def _recover(self) -> None:
        while not self._at_item_start():
            self._advance()

    def parse_file(self) -> list[SyntaxItem]:
        items: list[SyntaxItem] = []
        while self.tok.kind != "eof":
            tok = self.tok
            if tok.kind != "ident" or tok.text not in SCHEMA:
                self.diags.append(
                    Diagnostic("E015", f"expected an entity keyword, found {_describe(tok)}", tok.span)
                )
                self._recover()
                continue
            try:
                items.append(self._item())
            except _SyntaxError as exc:
                self.diags.append(exc.diagnostic)
                self._recover()
        return items

    def _item(self) -> SyntaxItem:
        kw = self._advance()
        kind = kw.text
        ident = title = None
        if self._is("ident"):
            ident = self._advance().text
        if self._is("string"):
            title = self._advance().value
        self._expect("punct", "{")
        fields: list[Field] = []
        seen: set[tuple[str, str | None]] = set()
        while not self._is("punct", "}"):
            f = self._field(kind)
            if f is not None:
                if f.slot in seen:
                    label = f.key if f.arg is None else f"{f.key} {f.arg}"
                    self.diags.append(Diagnostic("E014", f"duplicate field '{label}' in {kind} block", f.span, ident))
                else:
                    seen.add(f.slot)
                    fields.append(f)
            if self._is("punct", ","):
                self._advance()
        self._advance()
        return SyntaxItem(kind, ident, title, tuple(fields), kw.span)

    def _field(self, kind: str) -> Field | None:
        key_tok = self._expect("ident", what="a field key")
        key = key_tok.text
        allowed = SCHEMA[kind]
        if key == "precondition":
            name = self._expect("ident", what="a precondition name")
            self._expect("punct", ":")
            vspan = self.tok.span
            value = self._value()
            if kind != "project":
                return self._unknown(key_tok, kind)
            if name.text not in _PRECONDITION_ORDER:
                self.diags.append(
                    Diagnostic("E013", f"unknown precondition '{name.text}'", name.span)
                )
                return None
            return Field(key, value, name.text, key_tok.span, vspan)
        if key == "constraint":
            core = self._expect("ident", what="a core value reference")
            self._expect("ident", "min_rank")
            rank_tok = self._expect("int", what="an integer rank")
            self._expect("ident", "because")
            reason = self._expect("string", what="a quoted reason")
            if kind != "ranking":
                return self._unknown(key_tok, kind)
            value = Constraint(Ident(core.text, core.span), rank_tok.value, reason.value)
            return Field(key, value, core.text, key_tok.span, core.span)
        self._expect("punct", ":")
        vspan = self.tok.span
        value = self._value()
        if key not in allowed:
            return self._unknown(key_tok, kind)
        return Field(key, value, None, key_tok.span, vspan)

    def _unknown(self, key_tok: Token, kind: str) -> None:
        self.diags.append(
            Diagnostic("E013", f"unknown field '{key_tok.text}' for {kind}", key_tok.span)
        )
        return None

    def _value(self) -> Value:
        tok = self.tok
        if tok.kind == "string" or tok.kind == "int":
            self._advance()
            return tok.value
        if tok.kind == "ident":
            self._advance()
            if self._is("punct", "/"):
                self._advance()
                q = self._expect("ident", what="a quality reference after '/'")
                span = SourceSpan(tok.span.file, tok.span.line, tok.span.column,
                                  q.span.column + q.span.length - tok.span.column)
                return Pair(Ident(tok.text, tok.span), Ident(q.text, q.span), span)
            if tok.text == "yes":
                return True
            if tok.text == "no":
                return False
            return Ident(tok.text, tok.span)
        if self._is("punct", "["):
            self._advance()
            out: list[Value] = []
            if not self._is("punct", "]"):
                out.append(self._value())
                while self._is("punct", ","):
                    self._advance()
                    out.append(self._value())
            self._expect("punct", "]")
            return out
        raise _SyntaxError(f"expected a value, found {_describe(tok)}", tok.span)


def parse(source: str, file_name: str = "<input>") -> tuple[list[SyntaxItem], list[Diagnostic]]:
    """Parse ``source`` into items plus every syntax diagnostic found."""
    tokens, diags = tokenize(source, file_name)
    items = _Parser(tokens, diags).parse_file()
    return items, diags


# ---------------------------------------------------------------------------
# Canonical formatter
# ---------------------------------------------------------------------------


def quote(text: str) -> str:
    out = text.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
    return f'"{out}"'


def format_value(value: Value) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return quote(value)
    if isinstance(value, Ident):
        return value.name
    if isinstance(value, Pair):
        return f"{value.core.name}/{value.quality.name}"
    if isinstance(value, list):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    raise TypeError(f"cannot format {value!r}")


def _field_key(kind: str, f: Field) -> tuple[int, int]:
    # used with stable sorts, so repeatable constraints keep declaration order
    primary = _ORDER.get(kind, {}).get(f.key, len(SCHEMA.get(kind, ())))
    secondary = _PRECONDITION_ORDER.get(f.arg, 0) if f.key == "precondition" else 0
    return (primary, secondary)


def _format_field(f: Field) -> str:
    if f.key == "precondition":
        return f"precondition {f.arg}: {format_value(f.value)}"
    if f.key == "constraint":
        c: Constraint = f.value
        return f"constraint {c.core.name} min_rank {c.min_rank} because {quote(c.reason)}"
    return f"{f.key}: {format_value(f.value)}"


def format_item(item: SyntaxItem) -> str:
    head = [item.kind]
    if item.id is not None:
        head.append(item.id)
    if item.title is not None:
        head.append(quote(item.title))
    lines = [" ".join(head) + " {"]
    for f in item.canonical_fields():
        lines.append("  " + _format_field(f))
    lines.append("}")
    return "\n".join(lines)


def format_canonical(items: Iterable[SyntaxItem]) -> str:
    """Render items as deterministic source text. Comments are not preserved."""
    blocks = [format_item(item) for item in items]
    return "\n\n".join(blocks) + ("\n" if blocks else "")
