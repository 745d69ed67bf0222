"""Reprinting trees to text, and unified diffs between two texts.

Preserve mode reuses the original characters of every untouched node and
the original gaps between surviving children, so only repaired regions
change. Normalized mode prints one instruction per line with continuations
folded and whitespace collapsed.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass

from .parser.offsets import fold
from .tree import INSTRUCTION_KINDS, WORD_KINDS, AstNode, NodeKind

K = NodeKind


class InconsistentSpans(Exception):
    """An unmodified node no longer matches the source text it points at."""


@dataclass(frozen=True)
class PrintMode:
    preserve_formatting: bool = True


_LIST_KINDS = frozenset(
    {K.BashStatementList, K.BashIfCondition, K.BashIfBody, K.BashElseBody}
)
_WORDISH = WORD_KINDS | {K.BashQuotedString}


def escape_char(root: AstNode) -> str:
    for child in root.children:
        if child.kind is K.ParserDirective:
            body = (child.value or "").lstrip("#").strip()
            key, _, value = body.partition("=")
            if key.strip().lower() == "escape" and value.strip() in ("\\", "`"):
                return value.strip()
    return "\\"


# -- canonical rendering -------------------------------------------------------


def render_canonical(node: AstNode) -> str:
    kind = node.kind
    kids = node.children
    if kind is K.DockerFile:
        return "\n".join(render_canonical(c) for c in kids)
    if kind in INSTRUCTION_KINDS:
        return " ".join(render_canonical(c) for c in kids)
    if kind is K.DockerExecForm:
        return "[" + ", ".join(render_canonical(c) for c in kids) + "]"
    if kind is K.DockerLiteral and node.parent is not None and node.parent.kind is K.DockerExecForm:
        return json.dumps(node.value or "")
    if kind is K.BashScript:
        return "".join(render_canonical(c) for c in kids)
    if kind in _LIST_KINDS:
        return _render_items(kids)
    if kind is K.BashCommand:
        return " ".join(render_canonical(c) for c in kids)
    if kind is K.BashRedirect:
        return (node.value or "") + "".join(render_canonical(c) for c in kids)
    if kind in WORD_KINDS:
        return "".join(render_canonical(c) for c in kids)
    if kind is K.BashQuotedString:
        close = "'" if node.value == "$'" else node.value
        return f"{node.value}{''.join(render_canonical(c) for c in kids)}{close}"
    if kind is K.BashCommandSubstitution:
        inner = "".join(render_canonical(c) for c in kids)
        return f"`{inner}`" if node.value == "`" else f"$({inner})"
    if kind is K.BashSubshell:
        body = render_canonical(kids[0]) if kids else ""
        redirects = "".join(" " + render_canonical(c) for c in kids[1:])
        if node.value == "{":
            return f"{{ {_terminated(body)} }}{redirects}"
        return f"({body}){redirects}"
    if kind is K.BashIf:
        return _render_if(node)
    if kind is K.BashFor:
        var = render_canonical(kids[0]) if kids else ""
        words = [render_canonical(c) for c in kids if c.kind is K.BashCommandArgs]
        body = next((c for c in kids if c.kind is K.BashStatementList), None)
        head = f"for {var}" + (f" in {' '.join(words)}" if words else "")
        return f"{head}; do {_terminated(render_canonical(body) if body else '')} done"
    return node.value or ""


def _render_items(items: list[AstNode]) -> str:
    out = []
    for i, item in enumerate(items):
        text = render_canonical(item)
        if i > 0:
            prev = items[i - 1]
            tight = (item.kind is K.BashOperatorSemicolon) or (
                prev.kind is K.BashOperatorSemicolon and prev.value == "\n"
            )
            if not tight:
                out.append(" ")
        out.append(text)
    return "".join(out)


def _terminated(text: str) -> str:
    stripped = text.rstrip()
    if stripped.endswith((";", "&", "\n")):
        return stripped
    return stripped + ";"


def _render_if(node: AstNode, keyword: str = "if") -> str:
    parts = {c.kind: c for c in node.children}
    cond = render_canonical(parts[K.BashIfCondition]) if K.BashIfCondition in parts else ""
    body = render_canonical(parts[K.BashIfBody]) if K.BashIfBody in parts else ""
    text = f"{keyword} {_terminated(cond)} then {_terminated(body)}"
    else_body = parts.get(K.BashElseBody)
    if else_body is not None:
        kids = else_body.children
        if len(kids) == 1 and kids[0].kind is K.BashIf:
            return f"{text} {_render_if(kids[0], 'elif')}"
        text += f" else {_terminated(render_canonical(else_body))}"
    return text + " fi"


# -- preserve mode -------------------------------------------------------------


def _default_separator(parent: AstNode, child: AstNode) -> str:
    if parent.kind is K.DockerFile:
        return "\n"
    if parent.kind in _WORDISH:
        return ""
    if child.kind is K.BashOperatorSemicolon and child.value in (";", "&"):
        return ""
    return " "


def _emit(node: AstNode, source: str) -> str:
    if node.synthetic or node.span is None:
        return render_canonical(node)
    if not node.modified:
        return source[node.span.start:node.span.end]
    layout = node.layout
    if not layout:
        return render_canonical(node)
    position = {id(c): i for i, c in enumerate(layout)}
    out = [source[node.span.start:layout[0].span.start]]
    for k, child in enumerate(node.children):
        if k > 0:
            i = position.get(id(child)) if not child.synthetic else None
            if i is not None and i > 0:
                out.append(source[layout[i - 1].span.end:child.span.start])
            else:
                out.append(_default_separator(node, child))
        out.append(_emit(child, source))
    out.append(source[layout[-1].span.end:node.span.end])
    return "".join(out)


def _folds_to(source: str, start: int, end: int, escape: str, value: str) -> bool:
    # fold with the rest of the line attached: whether a line counts as blank
    # inside a continuation depends on what follows the node on that line
    nl = source.find("\n", end)
    tail = source[end:nl if nl != -1 else len(source)].rstrip("\r")
    whole = fold(source[start:end] + tail, 0, end - start + len(tail), escape).text
    rest = fold(tail, 0, len(tail), escape).text
    return whole == value + rest


def validate_spans(root: AstNode) -> None:
    source = root.source
    if source is None:
        return
    escape = escape_char(root)
    for node in root.iter():
        if node.synthetic or node.span is None:
            continue
        span = node.span
        if not 0 <= span.start <= span.end <= len(source):
            raise InconsistentSpans(f"{node!r} lies outside the source")
        if node.modified or node.children or node.value is None:
            continue
        piece = source[span.start:span.end]
        if node.value == piece:
            continue
        if node.kind is K.DockerLiteral and node.parent is not None and node.parent.kind is K.DockerExecForm:
            try:
                if json.loads(fold(piece, 0, len(piece), escape).text) == node.value:
                    continue
            except ValueError:
                pass
        elif _folds_to(source, span.start, span.end, escape, node.value):
            continue
        raise InconsistentSpans(f"{node!r} no longer slices to its value")


# -- normalized mode -----------------------------------------------------------


def collapse_whitespace(text: str) -> str:
    """Collapse blank runs outside quotes into single spaces."""
    out = []
    quote = None
    i = 0
    pending = False
    while i < len(text):
        ch = text[i]
        if quote is None:
            if ch in " \t\r":
                pending = True
                i += 1
                continue
            if pending and out:
                out.append(" ")
            pending = False
            if ch == "\\" and i + 1 < len(text):
                out.append(text[i:i + 2])
                i += 2
                continue
            if ch in "'\"":
                quote = ch
            out.append(ch)
        else:
            if ch == "\\" and quote == '"' and i + 1 < len(text):
                out.append(text[i:i + 2])
                i += 2
                continue
            if ch == quote:
                quote = None
            out.append(ch)
        i += 1
    return "".join(out)


def _normalize_top(node: AstNode, source: str, escape: str) -> str:
    text = _emit(node, source)
    if node.kind in (K.ParserDirective, K.Comment):
        return text.strip()  # a trailing escape character here is not a continuation
    if any(n.kind is K.BashOpaque and "\n" in (n.value or "") for n in node.iter()):
        return text  # heredoc bodies are line-sensitive
    folded = fold(text, 0, len(text), escape).text
    return collapse_whitespace(folded).strip()


def print_node(node: AstNode, mode: PrintMode = PrintMode()) -> str:
    root = node.root
    source = root.source
    if source is None:
        return render_canonical(node)
    if mode.preserve_formatting:
        return _emit(node, source)
    if node.kind is not K.DockerFile:
        return _normalize_top(node, source, escape_char(root))
    escape = escape_char(root)
    lines = [_normalize_top(c, source, escape) for c in node.children]
    text = "\n".join(line for line in lines if line)
    if source.endswith("\n") and text:
        text += "\n"
    return text


def print_dockerfile(root: AstNode, mode: PrintMode = PrintMode()) -> str:
    if mode.preserve_formatting:
        validate_spans(root)
    return print_node(root, mode)


# -- diffs ---------------------------------------------------------------------


def _split_lines(text: str) -> list[str]:
    if not text:
        return []
    parts = text.split("\n")
    lines = [p + "\n" for p in parts[:-1]]
    if parts[-1]:
        lines.append(parts[-1])
    return lines


def diff(
    original: str,
    repaired: str,
    context_lines: int = 3,
    fromfile: str = "a/Dockerfile",
    tofile: str = "b/Dockerfile",
) -> str:
    """Unified diff; empty string when the texts are identical."""
    if original == repaired:
        return ""
    out = []
    for line in difflib.unified_diff(
        _split_lines(original), _split_lines(repaired), fromfile, tofile, n=context_lines
    ):
        if line.endswith("\n"):
            out.append(line)
        else:
            out.append(line + "\n\\ No newline at end of file\n")
    return "".join(out)
