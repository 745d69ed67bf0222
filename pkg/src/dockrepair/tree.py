"""Unified Dockerfile + shell syntax tree.

Every node produced by the parser keeps the character span it occupies in
the original file, so the printer can reuse the developer's own text for
anything that was not touched by a repair.
"""

from __future__ import annotations

import bisect
from collections.abc import Iterator
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Union

if TYPE_CHECKING:
    from .query import QueryPattern


class NodeKind(Enum):
    # Dockerfile instructions
    From = "From"
    Run = "Run"
    Copy = "Copy"
    Add = "Add"
    Env = "Env"
    Arg = "Arg"
    Workdir = "Workdir"
    Expose = "Expose"
    Entrypoint = "Entrypoint"
    Cmd = "Cmd"
    Label = "Label"
    User = "User"
    Volume = "Volume"
    Shell = "Shell"
    Healthcheck = "Healthcheck"
    Onbuild = "Onbuild"
    Stopsignal = "Stopsignal"
    Maintainer = "Maintainer"
    Comment = "Comment"
    ParserDirective = "ParserDirective"
    DockerFile = "DockerFile"
    # Dockerfile-level leaves
    DockerKeyword = "DockerKeyword"
    DockerFlag = "DockerFlag"
    DockerLiteral = "DockerLiteral"
    DockerExecForm = "DockerExecForm"
    # shell
    BashScript = "BashScript"
    BashStatementList = "BashStatementList"
    BashCommand = "BashCommand"
    BashCommandName = "BashCommandName"
    BashCommandArgs = "BashCommandArgs"
    BashAssignment = "BashAssignment"
    BashLiteral = "BashLiteral"
    BashVariable = "BashVariable"
    BashCommandSubstitution = "BashCommandSubstitution"
    BashQuotedString = "BashQuotedString"
    BashOperatorAnd = "BashOperatorAnd"
    BashOperatorOr = "BashOperatorOr"
    BashOperatorSemicolon = "BashOperatorSemicolon"
    BashPipe = "BashPipe"
    BashRedirect = "BashRedirect"
    BashSubshell = "BashSubshell"
    BashIf = "BashIf"
    BashIfCondition = "BashIfCondition"
    BashIfBody = "BashIfBody"
    BashElseBody = "BashElseBody"
    BashFor = "BashFor"
    BashOpaque = "BashOpaque"


INSTRUCTION_KINDS = frozenset(
    {
        NodeKind.From,
        NodeKind.Run,
        NodeKind.Copy,
        NodeKind.Add,
        NodeKind.Env,
        NodeKind.Arg,
        NodeKind.Workdir,
        NodeKind.Expose,
        NodeKind.Entrypoint,
        NodeKind.Cmd,
        NodeKind.Label,
        NodeKind.User,
        NodeKind.Volume,
        NodeKind.Shell,
        NodeKind.Healthcheck,
        NodeKind.Onbuild,
        NodeKind.Stopsignal,
        NodeKind.Maintainer,
    }
)

# Nodes whose children are the parts of one shell word.
WORD_KINDS = frozenset(
    {
        NodeKind.BashCommandName,
        NodeKind.BashCommandArgs,
        NodeKind.BashAssignment,
        NodeKind.BashRedirect,
    }
)

OPERATOR_KINDS = frozenset(
    {
        NodeKind.BashOperatorAnd,
        NodeKind.BashOperatorOr,
        NodeKind.BashOperatorSemicolon,
        NodeKind.BashPipe,
    }
)


class StructuralError(Exception):
    """Raised when a mutation would break the tree shape."""


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int
    start_line: int = 0
    start_col: int = 0
    end_line: int = 0
    end_col: int = 0

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"span start {self.start} after end {self.end}")

    def __len__(self) -> int:
        return self.end - self.start

    def contains(self, other: SourceSpan) -> bool:
        return self.start <= other.start and other.end <= self.end

    def overlaps(self, other: SourceSpan) -> bool:
        return self.start < other.end and other.start < self.end


class LineIndex:
    """Maps character offsets of one text to 1-based line/column pairs."""

    def __init__(self, text: str) -> None:
        self.length = len(text)
        self._starts = [0]
        pos = text.find("\n")
        while pos != -1:
            self._starts.append(pos + 1)
            pos = text.find("\n", pos + 1)

    def position(self, offset: int) -> tuple[int, int]:
        line = bisect.bisect_right(self._starts, offset) - 1
        return line + 1, offset - self._starts[line] + 1

    def line_start(self, line: int) -> int:
        return self._starts[line - 1]

    def span(self, start: int, end: int) -> SourceSpan:
        sl, sc = self.position(start)
        el, ec = self.position(end)
        return SourceSpan(start, end, sl, sc, el, ec)


PatternLike = Union["QueryPattern", NodeKind, str]


class AstNode:
    """One node of the unified tree.

    ``value`` holds literal text for leaves (raw source text for shell
    literals, with continuations folded away). ``synthetic`` marks nodes
    built by code rather than by the parser; they always print canonically.
    """

    __slots__ = (
        "kind",
        "children",
        "span",
        "value",
        "annotations",
        "modified",
        "synthetic",
        "parent",
        "layout",
        "source",
        "line_index",
    )

    def __init__(
        self,
        kind: NodeKind,
        children: list[AstNode] | None = None,
        span: SourceSpan | None = None,
        value: str | None = None,
    ) -> None:
        self.kind = kind
        self.children: list[AstNode] = []
        self.span = span
        self.value = value
        self.annotations: set[str] = set()
        self.synthetic = span is None
        self.modified = span is None
        self.parent: AstNode | None = None
        # children as they were when parsing finished; used for reprinting
        self.layout: tuple[AstNode, ...] = ()
        self.source: str | None = None
        self.line_index: LineIndex | None = None
        for child in children or ():
            child.parent = self
            self.children.append(child)

    def __repr__(self) -> str:
        extra = f" {self.value!r}" if self.value is not None else ""
        where = f" @{self.span.start}:{self.span.end}" if self.span else ""
        return f"<{self.kind.value}{extra}{where}>"

    # -- traversal -------------------------------------------------------

    def iter(self) -> Iterator[AstNode]:
        """Preorder traversal including ``self``."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def descendants(self) -> Iterator[AstNode]:
        it = self.iter()
        next(it)
        return it

    def ancestors(self) -> Iterator[AstNode]:
        node = self.parent
        while node is not None:
            yield node
            node = node.parent

    @property
    def root(self) -> AstNode:
        node = self
        while node.parent is not None:
            node = node.parent
        return node

    @property
    def index(self) -> int:
        if self.parent is None:
            return -1
        for i, child in enumerate(self.parent.children):
            if child is self:
                return i
        raise StructuralError("node not found in its parent")

    def next_sibling(self) -> AstNode | None:
        if self.parent is None:
            return None
        i = self.index + 1
        return self.parent.children[i] if i < len(self.parent.children) else None

    def previous_sibling(self) -> AstNode | None:
        if self.parent is None:
            return None
        i = self.index - 1
        return self.parent.children[i] if i >= 0 else None

    # -- navigation --------------------------------------------------------

    def get_parent(self, what: PatternLike) -> AstNode | None:
        from .query import as_pattern, matches

        pattern = as_pattern(what)
        for node in self.ancestors():
            if matches(node, pattern):
                return node
        return None

    def get_child(self, what: PatternLike) -> AstNode | None:
        found = self.get_children(what)
        return found[0] if found else None

    def get_children(self, what: PatternLike) -> list[AstNode]:
        from .query import as_pattern, matches

        pattern = as_pattern(what)
        return [c for c in self.children if matches(c, pattern)]

    def get_element(self, what: PatternLike) -> AstNode | None:
        from .query import as_pattern, matches

        pattern = as_pattern(what)
        for node in self.iter():
            if matches(node, pattern):
                return node
        return None

    def get_elements(self, what: PatternLike) -> list[AstNode]:
        from .query import find

        return find(self, what)

    def find(self, what: PatternLike) -> list[AstNode]:
        from .query import find

        return find(self, what)

    # -- annotations -------------------------------------------------------

    def annotate(self, tag: str) -> None:
        if not tag:
            raise ValueError("annotation tag must be non-empty")
        self.annotations.add(tag)

    def has_annotation(self, tag: str) -> bool:
        return tag in self.annotations

    # -- mutation ----------------------------------------------------------

    def add_child(self, node: AstNode, position: int | None = None) -> AstNode:
        if node.parent is not None:
            raise StructuralError("node already belongs to a tree; remove it first")
        if position is None:
            position = len(self.children)
        if not 0 <= position <= len(self.children):
            raise StructuralError(f"position {position} outside 0..{len(self.children)}")
        self.children.insert(position, node)
        node.parent = self
        _anchor(node, _insertion_offset(self, position))
        _mark_modified(node)
        return node

    def replace(self, new: AstNode) -> AstNode:
        parent = self.parent
        if parent is None or self.kind is NodeKind.DockerFile:
            raise StructuralError("cannot replace the document root")
        if new.parent is not None:
            raise StructuralError("replacement already belongs to a tree")
        i = self.index
        parent.children[i] = new
        new.parent = parent
        self.parent = None
        if self.span is not None:
            _anchor(new, self.span.start)
        _mark_modified(new)
        return new

    def remove(self) -> AstNode:
        parent = self.parent
        if parent is None or self.kind is NodeKind.DockerFile:
            raise StructuralError("cannot remove the document root")
        del parent.children[self.index]
        self.parent = None
        _mark_modified(parent)
        return self

    def set_value(self, value: str) -> None:
        self.value = value
        _mark_modified(self)

    def to_string(self, preserve: bool = False) -> str:
        from .printer import PrintMode, print_node

        return print_node(self, PrintMode(preserve_formatting=preserve))


def _mark_modified(node: AstNode) -> None:
    current: AstNode | None = node
    while current is not None and not (current.modified and current is not node):
        current.modified = True
        current = current.parent
    # ancestors above an already-dirty node are dirty by invariant


def _insertion_offset(parent: AstNode, position: int) -> int | None:
    siblings = parent.children
    # ``siblings`` already contains the inserted node at ``position``
    for i in range(position + 1, len(siblings)):
        if siblings[i].span is not None:
            return siblings[i].span.start
    for i in range(position - 1, -1, -1):
        if siblings[i].span is not None:
            return siblings[i].span.end
    if parent.span is not None:
        return parent.span.start
    return None


def _anchor(node: AstNode, offset: int | None) -> None:
    if offset is None:
        return
    index = node.root.line_index
    for n in node.iter():
        if n.synthetic and n.span is None:
            n.span = index.span(offset, offset) if index else SourceSpan(offset, offset)


def detach_copy(node: AstNode) -> AstNode:
    """Deep copy of ``node`` as a synthetic subtree (no spans, all modified)."""
    copy = AstNode(node.kind, [detach_copy(c) for c in node.children], None, node.value)
    copy.annotations = set(node.annotations)
    return copy


def freeze_layout(root: AstNode, source: str) -> None:
    """Record the parsed child layout of every node; called once by the parser."""
    root.source = source
    root.line_index = LineIndex(source)
    for node in root.iter():
        node.layout = tuple(node.children)
        node.modified = False
        node.synthetic = False


def fingerprint(node: AstNode, with_annotations: bool = True) -> tuple:
    """Hashable structural summary of a subtree."""
    return (
        node.kind.value,
        node.value,
        (node.span.start, node.span.end) if node.span else None,
        tuple(sorted(node.annotations)) if with_annotations else (),
        node.modified,
        tuple(fingerprint(c, with_annotations) for c in node.children),
    )


def shape(node: AstNode) -> tuple:
    """Structure and values only: spans, annotations and flags ignored."""
    return (node.kind.value, node.value, tuple(shape(c) for c in node.children))
