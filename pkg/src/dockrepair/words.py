"""Reading the literal text of shell words.

A shell word (command name, argument, assignment, redirect target) is a
sequence of parts: bare literals, quoted strings, variables and
substitutions. Only words built purely from literal parts have a known
value; anything else is reported as ``None`` so callers never guess.
"""

from __future__ import annotations

import re

from .tree import WORD_KINDS, AstNode, NodeKind

_DQ_ESCAPABLE = '$`"\\\n'
_VAR_NAME = re.compile(r"\$\{?#?([A-Za-z_][A-Za-z0-9_]*|[0-9@*#?$!-])")


def unescape_bare(raw: str) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\" and i + 1 < len(raw):
            out.append(raw[i + 1])
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def unescape_double(raw: str) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\" and i + 1 < len(raw) and raw[i + 1] in _DQ_ESCAPABLE:
            out.append(raw[i + 1])
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


_ANSI_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'", '"': '"', "a": "\a", "b": "\b", "e": "\x1b", "f": "\f", "v": "\v"}


def unescape_ansi(raw: str) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\" and i + 1 < len(raw) and raw[i + 1] in _ANSI_ESCAPES:
            out.append(_ANSI_ESCAPES[raw[i + 1]])
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def _part_text(part: AstNode, quote: str | None) -> str | None:
    kind = part.kind
    if kind is NodeKind.BashLiteral:
        raw = part.value or ""
        if quote is None:
            return unescape_bare(raw)
        if quote == '"':
            return unescape_double(raw)
        if quote == "$'":
            return unescape_ansi(raw)
        return raw
    if kind is NodeKind.BashQuotedString:
        pieces = []
        for child in part.children:
            text = _part_text(child, part.value)
            if text is None:
                return None
            pieces.append(text)
        return "".join(pieces)
    return None


def literal_text(word: AstNode) -> str | None:
    """Unquoted value of a word, or ``None`` if any part is not literal."""
    if word.kind in (NodeKind.DockerLiteral, NodeKind.DockerKeyword, NodeKind.DockerFlag):
        return word.value
    if word.kind not in WORD_KINDS:
        return _part_text(word, None)
    pieces = []
    for part in word.children:
        text = _part_text(part, None)
        if text is None:
            return None
        pieces.append(text)
    return "".join(pieces)


def literal_prefix(word: AstNode) -> str:
    """Literal text up to the first non-literal part of a word."""
    parts = word.children if word.kind in WORD_KINDS else [word]
    pieces = []
    for part in parts:
        if part.kind is NodeKind.BashQuotedString:
            inner_done = False
            for child in part.children:
                text = _part_text(child, part.value)
                if text is None:
                    inner_done = True
                    break
                pieces.append(text)
            if inner_done:
                break
            continue
        text = _part_text(part, None)
        if text is None:
            break
        pieces.append(text)
    return "".join(pieces)


def is_literal(word: AstNode) -> bool:
    return literal_text(word) is not None


def variable_name(node: AstNode) -> str | None:
    """Name of a ``$X`` / ``${X...}`` variable node."""
    if node.kind is not NodeKind.BashVariable or not node.value:
        return None
    m = _VAR_NAME.match(node.value)
    return m.group(1) if m else None


def variables_in(word: AstNode) -> set[str]:
    names = set()
    for node in word.iter():
        name = variable_name(node)
        if name:
            names.add(name)
    return names


def template_text(word: AstNode, placeholder: str = "\0") -> str | None:
    """Literal text of a word with each plain variable replaced by ``placeholder``.

    Command substitutions and other dynamic parts still yield ``None``.
    """
    def walk(part: AstNode, quote: str | None) -> str | None:
        if part.kind is NodeKind.BashVariable:
            return placeholder
        if part.kind is NodeKind.BashQuotedString:
            pieces = [walk(c, part.value) for c in part.children]
            return None if None in pieces else "".join(pieces)
        return _part_text(part, quote)

    parts = word.children if word.kind in WORD_KINDS else [word]
    pieces = [walk(p, None) for p in parts]
    return None if None in pieces else "".join(pieces)
