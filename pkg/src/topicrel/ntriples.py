"""Line-oriented N-Triples reader and writer.

Covers the subset needed for taxonomy interchange: IRI subjects and
predicates, IRI or literal objects, language tags, and the standard
string escapes. Datatyped literals are accepted and their datatype is
discarded. Parsing is strict: the first line that is neither blank,
a comment, nor a well-formed statement aborts with MalformedLine.
"""
from __future__ import annotations

import re
from dataclasses import dataclass


class MalformedLine(ValueError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


@dataclass(frozen=True)
class Triple:
    """One statement. ``obj`` is an IRI unless ``is_literal`` is set, in
    which case it is the decoded literal text and ``lang`` its optional tag."""

    subject: str
    predicate: str
    obj: str
    is_literal: bool = False
    lang: str | None = None


_IRIREF = re.compile(r"<([^<>\x00-\x20]*)>")
_LITERAL = re.compile(r'"((?:[^"\\\n\r]|\\.)*)"')
_LANGTAG = re.compile(r"@([A-Za-z]+(?:-[A-Za-z0-9]+)*)")

_ESCAPES = {
    "t": "\t",
    "b": "\b",
    "n": "\n",
    "r": "\r",
    "f": "\f",
    '"': '"',
    "'": "'",
    "\\": "\\",
}


def unescape_literal(raw: str, line_number: int = 0) -> str:
    """Decode N-Triples string escapes, including \\uXXXX and \\UXXXXXXXX."""
    if "\\" not in raw:
        return raw
    out: list[str] = []
    i = 0
    n = len(raw)
    while i < n:
        ch = raw[i]
        if ch != "\\":
            out.append(ch)
            i += 1
            continue
        if i + 1 >= n:
            raise MalformedLine(line_number, "dangling escape at end of literal")
        esc = raw[i + 1]
        if esc in _ESCAPES:
            out.append(_ESCAPES[esc])
            i += 2
        elif esc in ("u", "U"):
            width = 4 if esc == "u" else 8
            digits = raw[i + 2 : i + 2 + width]
            if len(digits) < width or not re.fullmatch(r"[0-9A-Fa-f]+", digits):
                raise MalformedLine(line_number, f"invalid \\{esc} escape in literal")
            code = int(digits, 16)
            if code > 0x10FFFF:
                raise MalformedLine(line_number, f"\\{esc} escape out of range")
            out.append(chr(code))
            i += 2 + width
        else:
            raise MalformedLine(line_number, f"invalid escape \\{esc} in literal")
    return "".join(out)


def escape_literal(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


def _skip_ws(line: str, pos: int) -> int:
    while pos < len(line) and line[pos] in " \t":
        pos += 1
    return pos


def _parse_statement(line: str, line_number: int) -> Triple:
    pos = _skip_ws(line, 0)

    m = _IRIREF.match(line, pos)
    if not m:
        raise MalformedLine(line_number, "subject must be an IRI")
    subject = m.group(1)
    if not subject:
        raise MalformedLine(line_number, "empty subject IRI")
    pos = _skip_ws(line, m.end())

    m = _IRIREF.match(line, pos)
    if not m:
        if pos < len(line) and line[pos] == ".":
            raise MalformedLine(line_number, "missing predicate")
        raise MalformedLine(line_number, "predicate must be an IRI")
    predicate = m.group(1)
    if not predicate:
        raise MalformedLine(line_number, "empty predicate IRI")
    pos = _skip_ws(line, m.end())

    if pos >= len(line) or line[pos] == ".":
        raise MalformedLine(line_number, "missing object")

    is_literal = False
    lang: str | None = None
    m = _IRIREF.match(line, pos)
    if m:
        obj = m.group(1)
        if not obj:
            raise MalformedLine(line_number, "empty object IRI")
        pos = m.end()
    else:
        m = _LITERAL.match(line, pos)
        if not m:
            raise MalformedLine(line_number, "object must be an IRI or literal")
        obj = unescape_literal(m.group(1), line_number)
        is_literal = True
        pos = m.end()
        if pos < len(line) and line[pos] == "@":
            m = _LANGTAG.match(line, pos)
            if not m:
                raise MalformedLine(line_number, "invalid language tag")
            lang = m.group(1)
            pos = m.end()
        elif line.startswith("^^", pos):
            m = _IRIREF.match(line, pos + 2)
            if not m:
                raise MalformedLine(line_number, "invalid datatype IRI")
            pos = m.end()  # datatype accepted but not retained

    pos = _skip_ws(line, pos)
    if pos >= len(line) or line[pos] != ".":
        raise MalformedLine(line_number, "statement must end with '.'")
    if _skip_ws(line, pos + 1) != len(line):
        raise MalformedLine(line_number, "trailing content after '.'")

    return Triple(subject, predicate, obj, is_literal, lang)


def parse_ntriples(text: str) -> list[Triple]:
    """Parse N-Triples text into a list of Triple, preserving order
    and duplicates. Blank lines and ``#`` comment lines are skipped."""
    triples: list[Triple] = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        triples.append(_parse_statement(raw, line_number))
    return triples


def format_triple(triple: Triple) -> str:
    if triple.is_literal:
        obj = f'"{escape_literal(triple.obj)}"'
        if triple.lang:
            obj += f"@{triple.lang}"
    else:
        obj = f"<{triple.obj}>"
    return f"<{triple.subject}> <{triple.predicate}> {obj} ."


def write_ntriples(triples: list[Triple]) -> str:
    """Serialize triples one statement per line, trailing newline included."""
    if not triples:
        return ""
    return "\n".join(format_triple(t) for t in triples) + "\n"
