"""Tree patterns over node kinds, annotations and literal values.

``Q(head, *children)`` matches a node when the head accepts it and every
child pattern can be bound to its own distinct node somewhere below it.
So ``Q(NodeKind.BashCommand, Q(NodeKind.BashCommandArgs), Q(NodeKind.BashCommandArgs))``
reads "a command with at least two arguments".
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from .tree import AstNode, NodeKind


@dataclass(frozen=True)
class Value:
    """Head that accepts nodes whose literal text matches ``regex``.

    The regex is applied with ``re.search``; anchor it when needed. ``kind``
    and ``tag`` optionally restrict the node kind and require an annotation.
    """

    regex: str
    kind: NodeKind | None = None
    tag: str | None = None

    def accepts(self, node: AstNode) -> bool:
        if self.kind is not None and node.kind is not self.kind:
            return False
        if self.tag is not None and self.tag not in node.annotations:
            return False
        from .words import literal_text

        text = literal_text(node)
        if text is None and not node.children:
            text = node.value
        return text is not None and re.search(self.regex, text) is not None


@dataclass(frozen=True)
class AnyNode:
    """Head that accepts every node."""

    def accepts(self, node: AstNode) -> bool:
        return True


ANY = AnyNode()

Head = Union[NodeKind, str, Value, AnyNode]


@dataclass(frozen=True)
class QueryPattern:
    head: Head
    children: tuple[QueryPattern, ...] = field(default=())

    def head_accepts(self, node: AstNode) -> bool:
        head = self.head
        if isinstance(head, NodeKind):
            return node.kind is head
        if isinstance(head, str):
            return head in node.annotations
        return head.accepts(node)

    def tags(self) -> set[str]:
        """Every annotation tag mentioned anywhere in the pattern."""
        found = {self.head} if isinstance(self.head, str) else set()
        if isinstance(self.head, Value) and self.head.tag:
            found.add(self.head.tag)
        for child in self.children:
            found |= child.tags()
        return found

    def __str__(self) -> str:
        head = self.head
        if isinstance(head, NodeKind):
            text = head.value
        elif isinstance(head, str):
            text = repr(head)
        elif isinstance(head, Value):
            text = f"Value({head.regex!r})"
        else:
            text = "*"
        if not self.children:
            return f"Q({text})"
        return f"Q({text}, {', '.join(str(c) for c in self.children)})"


def Q(head: Head | QueryPattern, *children: Head | QueryPattern) -> QueryPattern:
    if isinstance(head, QueryPattern):
        if children:
            raise TypeError("a QueryPattern head cannot take extra children")
        return head
    return QueryPattern(head, tuple(as_pattern(c) for c in children))


def as_pattern(what: Head | QueryPattern) -> QueryPattern:
    if isinstance(what, QueryPattern):
        return what
    if isinstance(what, (NodeKind, str, Value, AnyNode)):
        return QueryPattern(what)
    raise TypeError(f"cannot build a pattern from {what!r}")


class _Matcher:
    """Memoized matcher; valid for one unchanged tree."""

    def __init__(self) -> None:
        self._memo: dict[tuple[int, int], bool] = {}
        self._descendants: dict[int, list[AstNode]] = {}

    def below(self, node: AstNode) -> list[AstNode]:
        key = id(node)
        found = self._descendants.get(key)
        if found is None:
            found = list(node.descendants())
            self._descendants[key] = found
        return found

    def matches(self, node: AstNode, pattern: QueryPattern) -> bool:
        key = (id(node), id(pattern))
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        result = pattern.head_accepts(node)
        if result and pattern.children:
            below = self.below(node)
            candidates = [
                [i for i, d in enumerate(below) if self.matches(d, child)]
                for child in pattern.children
            ]
            result = _injective(candidates)
        self._memo[key] = result
        return result


def _injective(candidates: list[list[int]]) -> bool:
    """True when every pattern can take a distinct candidate (bipartite matching)."""
    if any(not c for c in candidates):
        return False
    owner: dict[int, int] = {}

    def assign(p: int, seen: set[int]) -> bool:
        for node in candidates[p]:
            if node in seen:
                continue
            seen.add(node)
            if node not in owner or assign(owner[node], seen):
                owner[node] = p
                return True
        return False

    order = sorted(range(len(candidates)), key=lambda p: len(candidates[p]))
    return all(assign(p, set()) for p in order)


def matches(node: AstNode, pattern: Head | QueryPattern) -> bool:
    return _Matcher().matches(node, as_pattern(pattern))


def find(root: AstNode, pattern: Head | QueryPattern) -> list[AstNode]:
    """All nodes of ``root``'s tree (root included) matching, in document order."""
    pattern = as_pattern(pattern)
    matcher = _Matcher()
    return [n for n in root.iter() if matcher.matches(n, pattern)]
