"""Folding line continuations while remembering where every character came from."""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass

from ..tree import LineIndex, SourceSpan


class OutOfRange(ValueError):
    """A fragment span reaches outside the folded payload."""


@dataclass
class OffsetMap:
    """Folded payload text plus the file offset of each of its characters.

    ``positions`` has one extra trailing entry: the file offset just past the
    last kept character, used for empty spans at the very end.
    """

    text: str
    positions: list[int]

    @property
    def base(self) -> int:
        return self.positions[0]

    def to_file(self, index: int) -> int:
        if not 0 <= index <= len(self.text):
            raise OutOfRange(f"fragment offset {index} outside 0..{len(self.text)}")
        return self.positions[index]

    def slice(self, start: int, end: int | None = None) -> OffsetMap:
        """Sub-map for ``text[start:end]`` keeping file offsets."""
        if end is None:
            end = len(self.text)
        positions = self.positions[start:end]
        sentinel = positions[-1] + 1 if positions else self.positions[start]
        if end == len(self.text):
            sentinel = self.positions[-1]
        return OffsetMap(self.text[start:end], positions + [sentinel])

    def to_fragment(self, offset: int) -> int:
        """Inverse of ``to_file`` for offsets of kept characters."""
        i = bisect.bisect_left(self.positions, offset, 0, len(self.text))
        if i < len(self.text) and self.positions[i] == offset:
            return i
        if offset == self.positions[-1]:
            return len(self.text)
        raise OutOfRange(f"file offset {offset} was folded away")


def span_to_file_coords(
    start: int, end: int, fold: OffsetMap, lines: LineIndex | None = None
) -> SourceSpan:
    """Translate a fragment-relative span into file coordinates."""
    n = len(fold.text)
    if not 0 <= start <= end <= n:
        raise OutOfRange(f"fragment span {start}:{end} outside 0..{n}")
    file_start = fold.positions[start]
    file_end = fold.positions[end - 1] + 1 if end > start else file_start
    if lines is None:
        return SourceSpan(file_start, file_end)
    return lines.span(file_start, file_end)


def iter_lines(text: str, start: int = 0, end: int | None = None):
    """Yield ``(line_start, content_end, next_line_start)`` for physical lines.

    ``content_end`` excludes the line terminator (``\\n`` or ``\\r\\n``).
    """
    if end is None:
        end = len(text)
    pos = start
    while pos < end:
        nl = text.find("\n", pos, end)
        if nl == -1:
            yield pos, end, end
            return
        content_end = nl - 1 if nl > pos and text[nl - 1] == "\r" else nl
        yield pos, content_end, nl + 1
        pos = nl + 1


def continuation_regex(escape: str) -> re.Pattern[str]:
    return re.compile(re.escape(escape) + r"[ \t]*$")


def is_skippable_line(text: str, start: int, end: int) -> bool:
    """Blank and comment lines are dropped inside a continued instruction."""
    stripped = text[start:end].lstrip(" \t")
    return not stripped or stripped.startswith("#")


def fold(text: str, start: int, end: int, escape: str = "\\") -> OffsetMap:
    """Fold the continued instruction region ``text[start:end]``."""
    cont = continuation_regex(escape)
    chars: list[str] = []
    positions: list[int] = []
    continuing = False
    last = start
    for line_start, content_end, _next in iter_lines(text, start, end):
        if continuing and is_skippable_line(text, line_start, content_end):
            continue
        content = text[line_start:content_end]
        m = cont.search(content)
        keep_end = line_start + m.start() if m else content_end
        for i in range(line_start, keep_end):
            chars.append(text[i])
            positions.append(i)
        if keep_end > line_start:
            last = keep_end
        continuing = m is not None
        if not continuing:
            break
    positions.append(last if positions else start)
    return OffsetMap("".join(chars), positions)
