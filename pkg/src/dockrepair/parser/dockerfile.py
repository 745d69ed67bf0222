"""Instruction-level Dockerfile parser producing the unified tree."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from ..tree import AstNode, LineIndex, NodeKind, freeze_layout
from .diagnostics import ParseDiagnostic, UnsupportedEncoding
from .offsets import OffsetMap, continuation_regex, fold, is_skippable_line, iter_lines
from .shell import DEFAULT_WRAPPERS, WrapperSpec, parse_shell_fragment

K = NodeKind

KEYWORDS: dict[str, NodeKind] = {
    "FROM": K.From,
    "RUN": K.Run,
    "COPY": K.Copy,
    "ADD": K.Add,
    "ENV": K.Env,
    "ARG": K.Arg,
    "WORKDIR": K.Workdir,
    "EXPOSE": K.Expose,
    "ENTRYPOINT": K.Entrypoint,
    "CMD": K.Cmd,
    "LABEL": K.Label,
    "USER": K.User,
    "VOLUME": K.Volume,
    "SHELL": K.Shell,
    "HEALTHCHECK": K.Healthcheck,
    "ONBUILD": K.Onbuild,
    "STOPSIGNAL": K.Stopsignal,
    "MAINTAINER": K.Maintainer,
}

_FLAGGED = frozenset({K.Run, K.Copy, K.Add, K.From, K.Healthcheck})
_SHELL_PAYLOAD = frozenset({K.Run, K.Cmd, K.Entrypoint})
_HEREDOC_CAPABLE = frozenset({K.Run, K.Copy, K.Add})
_DIRECTIVE_RE = re.compile(r"#[ \t]*([A-Za-z][A-Za-z0-9_-]*)[ \t]*=[ \t]*(\S.*?)[ \t]*$")
_KNOWN_DIRECTIVES = frozenset({"syntax", "escape", "check"})
_HEREDOC_RE = re.compile(r"<<(-?)(['\"]?)([A-Za-z0-9_.-]+)\2")
_JSON_STRING_RE = re.compile(r'"(?:[^"\\]|\\.)*"')
_WINDOWS_IMAGE_RE = re.compile(r"windows|nanoserver|servercore", re.IGNORECASE)
_WINDOWS_SHELLS = ("powershell", "pwsh", "cmd", "cmd.exe", "powershell.exe", "pwsh.exe")


@dataclass
class ParseResult:
    root: AstNode
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)
    escape_char: str = "\\"

    @property
    def has_errors(self) -> bool:
        return any(d.severity == "error" for d in self.diagnostics)


def decode(data: bytes | str) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise UnsupportedEncoding(f"input is not valid UTF-8: {exc}") from exc


def _tokens(text: str) -> list[tuple[int, int]]:
    """Quote-aware whitespace split; returns ``(start, end)`` pairs."""
    out = []
    i, n = 0, len(text)
    while i < n:
        while i < n and text[i] in " \t\r\n":
            i += 1
        if i >= n:
            break
        start = i
        while i < n and text[i] not in " \t\r\n":
            ch = text[i]
            if ch in "'\"":
                j = i + 1
                while j < n and text[j] != ch:
                    j += 2 if ch == '"' and text[j] == "\\" else 1
                i = min(j + 1, n)
                continue
            if ch == "\\":
                i += 2
                continue
            i += 1
        out.append((start, min(i, n)))
    return out


class _DockerfileParser:
    def __init__(self, text: str, wrappers: dict[str, WrapperSpec]) -> None:
        self.text = text
        self.lines = LineIndex(text)
        self.wrappers = wrappers
        self.diagnostics: list[ParseDiagnostic] = []
        self.escape = "\\"
        self.windows = False

    def span(self, start: int, end: int):
        return self.lines.span(start, end)

    def leaf(self, kind: NodeKind, start: int, end: int, value: str | None = None) -> AstNode:
        return AstNode(kind, None, self.span(start, end), value)

    def error(self, severity: str, message: str, start: int, end: int, code: str) -> None:
        self.diagnostics.append(ParseDiagnostic(severity, message, self.span(start, end), code))

    def parse(self) -> AstNode:
        text = self.text
        children: list[AstNode] = []
        directives_open = True
        cont = None
        lines = list(iter_lines(text))
        idx = 0
        while idx < len(lines):
            line_start, content_end, _ = lines[idx]
            content = text[line_start:content_end]
            stripped = content.lstrip(" \t\ufeff")
            first = line_start + (len(content) - len(stripped))
            if not stripped.strip():
                directives_open = False
                idx += 1
                continue
            if stripped.startswith("#"):
                end = line_start + len(content.rstrip(" \t"))
                m = _DIRECTIVE_RE.match(text, first, end)
                if directives_open and m and m.group(1).lower() in _KNOWN_DIRECTIVES:
                    key, value = m.group(1).lower(), m.group(2)
                    if key == "escape":
                        if value in ("\\", "`"):
                            self.escape = value
                        else:
                            self.error("error", f"invalid escape directive {value!r}", first, end, "MalformedDirective")
                    children.append(self.leaf(K.ParserDirective, first, end, text[first:end]))
                else:
                    directives_open = False
                    children.append(self.leaf(K.Comment, first, end, text[first:end]))
                idx += 1
                continue
            directives_open = False
            cont = cont or continuation_regex(self.escape)
            # extent of the instruction: follow continuations, skipping blank/comment lines
            end = content_end
            last_real = idx
            j = idx
            while cont.search(text, lines[j][0], lines[j][1]) and j + 1 < len(lines):
                j += 1
                while j < len(lines) and is_skippable_line(text, lines[j][0], lines[j][1]):
                    j += 1
                if j >= len(lines):
                    j = last_real
                    break
                last_real = j
            end = lines[last_real][1]
            end = self._trim_end(first, end)
            folded = fold(text, first, end, self.escape)
            node, end = self.instruction(folded, first, end, lines, last_real)
            children.append(node)
            # skip physical lines consumed by the instruction (continuations, heredocs)
            while idx < len(lines) and lines[idx][0] < end:
                idx += 1
        root = AstNode(K.DockerFile, children, self.span(0, len(text)))
        return root

    def _trim_end(self, start: int, end: int) -> int:
        while end > start and self.text[end - 1] in " \t":
            end -= 1
        return end

    # -- instructions ----------------------------------------------------------

    def instruction(
        self, folded: OffsetMap, start: int, end: int, lines: list, last_line: int
    ) -> tuple[AstNode, int]:
        m = re.match(r"[A-Za-z]+", folded.text)
        keyword = m.group() if m else ""
        kind = KEYWORDS.get(keyword.upper())
        after = m.end() if m else 0
        if kind is None or (after < len(folded.text) and folded.text[after] not in " \t"):
            self.error("error", f"unknown instruction {folded.text.split()[0]!r}", start, end, "MalformedInstruction")
            return self.leaf(K.BashOpaque, start, end, self.text[start:end]), end
        return self._instruction(kind, folded, after, start, end, lines, last_line)

    def _instruction(
        self, kind: NodeKind, folded: OffsetMap, after: int, start: int, end: int,
        lines: list, last_line: int,
    ) -> tuple[AstNode, int]:
        kw_end = folded.to_file(after - 1) + 1
        children = [self.leaf(K.DockerKeyword, folded.to_file(0), kw_end, folded.text[:after])]
        rest = folded.slice(after)
        pos = _skip_ws(rest.text, 0)
        if kind in _FLAGGED:
            while rest.text.startswith("--", pos):
                stop = pos
                while stop < len(rest.text) and rest.text[stop] not in " \t":
                    stop += 1
                children.append(self._folded_leaf(K.DockerFlag, rest, pos, stop))
                pos = _skip_ws(rest.text, stop)
        payload = rest.slice(pos)

        if kind is K.From:
            self.windows = False
        if kind in _HEREDOC_CAPABLE and _HEREDOC_RE.search(payload.text):
            end = self._heredoc_end(payload.text, lines, last_line, end)
            if payload.text:
                p_start = payload.to_file(0)
                self.error("info", "heredoc payload kept verbatim", p_start, end, "opaque-heredoc")
                children.append(self.leaf(K.BashOpaque, p_start, end, self.text[p_start:end]))
        elif kind is K.Onbuild:
            inner_m = re.match(r"[A-Za-z]+", payload.text)
            inner_kind = KEYWORDS.get(inner_m.group().upper()) if inner_m else None
            if inner_kind is None or inner_kind in (K.Onbuild, K.From, K.Maintainer):
                if payload.text:
                    self.error("error", "invalid ONBUILD trigger", start, end, "MalformedInstruction")
                    children.append(self._folded_leaf(K.BashOpaque, payload, 0, len(payload.text)))
            else:
                inner, _ = self._instruction(
                    inner_kind, payload, inner_m.end(), payload.to_file(0), end, lines, last_line
                )
                children.append(inner)
        elif kind in _SHELL_PAYLOAD or kind is K.Shell:
            exec_form = self._exec_form(payload)
            if exec_form is not None:
                children.append(exec_form)
                if kind is K.Shell:
                    first = exec_form.children[0].value if exec_form.children else ""
                    self.windows = first.lower().rsplit("\\", 1)[-1].rsplit("/", 1)[-1] in _WINDOWS_SHELLS
            elif payload.text:
                if kind is K.Shell:
                    self.error("error", "SHELL requires a JSON array", start, end, "MalformedInstruction")
                    children.append(self._folded_leaf(K.BashOpaque, payload, 0, len(payload.text)))
                else:
                    out = parse_shell_fragment(payload, self.lines, self.wrappers, opaque=self.windows)
                    self.diagnostics.extend(out.diagnostics)
                    children.append(out.script)
        else:
            for a, b in _tokens(payload.text):
                children.append(self._folded_leaf(K.DockerLiteral, payload, a, b))
            if kind is K.From:
                image = next((c.value for c in children if c.kind is K.DockerLiteral), "")
                self.windows = bool(image and _WINDOWS_IMAGE_RE.search(image))
        node = AstNode(kind, children, self.span(start, end))
        return node, end

    def _folded_leaf(self, kind: NodeKind, fold_map: OffsetMap, a: int, b: int) -> AstNode:
        s = fold_map.to_file(a)
        e = fold_map.positions[b - 1] + 1 if b > a else s
        return self.leaf(kind, s, e, fold_map.text[a:b])

    def _exec_form(self, payload: OffsetMap) -> AstNode | None:
        text = payload.text.rstrip()
        if not text.startswith("["):
            return None
        try:
            data = json.loads(text)
        except ValueError:
            return None
        if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
            return None
        items = []
        for m, value in zip(_JSON_STRING_RE.finditer(text), data):
            leaf = self._folded_leaf(K.DockerLiteral, payload, m.start(), m.end())
            leaf.value = value
            items.append(leaf)
        node = AstNode(K.DockerExecForm, items)
        node.span = self.span(payload.to_file(0), payload.positions[len(text) - 1] + 1)
        return node

    def _heredoc_end(self, first_line: str, lines: list, last_line: int, end: int) -> int:
        markers = [(m.group(1) == "-", m.group(3)) for m in _HEREDOC_RE.finditer(first_line)]
        j = last_line + 1
        for strip_tabs, word in markers:
            while j < len(lines):
                body = self.text[lines[j][0]:lines[j][1]]
                j += 1
                if (body.lstrip("\t") if strip_tabs else body) == word:
                    end = lines[j - 1][1]
                    break
            else:
                self.error("warning", f"unterminated heredoc {word!r}", lines[last_line][0], len(self.text), "opaque-heredoc")
                end = self._trim_end(0, len(self.text.rstrip("\r\n")))
        return end


def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos] in " \t":
        pos += 1
    return pos


def parse_dockerfile(
    data: bytes | str, wrappers: dict[str, WrapperSpec] | None = None
) -> ParseResult:
    """Parse a whole Dockerfile into the unified tree."""
    text = decode(data)
    parser = _DockerfileParser(text, DEFAULT_WRAPPERS if wrappers is None else wrappers)
    root = parser.parse()
    freeze_layout(root, text)
    return ParseResult(root, parser.diagnostics, parser.escape)
