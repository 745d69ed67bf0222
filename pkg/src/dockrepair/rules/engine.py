"""Evaluating smell rules over an enriched tree.

A rule has a trigger pattern and an optional consequent. A smell is
reported for every trigger match whose consequent is not satisfied:

* ``inNode``: the consequent pattern matches somewhere below the trigger;
* ``beforeNode`` / ``afterNode``: some command of the same RUN instruction,
  earlier or later in execution order and running whenever the trigger's
  command runs, matches the consequent pattern.

Only triggers inside RUN instructions (including ``ONBUILD RUN``) count.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

from ..query import QueryPattern, _Matcher, as_pattern
from ..tree import AstNode, NodeKind, SourceSpan
from .ordering import OrderedCommand, evaluate_ordering

K = NodeKind

IN_NODE = "inNode"
BEFORE_NODE = "beforeNode"
AFTER_NODE = "afterNode"
SAME_COMMAND = "sameCommand"
SAME_RUN = "sameRunInstruction"

Relation = Callable[[AstNode, AstNode], bool]
Guard = Callable[[AstNode], bool]


class UnknownRuleId(KeyError):
    """A requested rule id is not in the catalog."""

    def __str__(self) -> str:
        return f"unknown rule id: {self.args[0]}"


@dataclass(frozen=True)
class Consequent:
    """What must hold around a trigger for it to be compliant.

    ``relation(trigger, candidate)`` optionally ties the candidate to the
    specific trigger, e.g. an ``rm`` of the very archive a ``tar`` extracted.
    """

    mode: str
    pattern: QueryPattern
    relation: Relation | None = None

    def __post_init__(self) -> None:
        if self.mode not in (IN_NODE, BEFORE_NODE, AFTER_NODE):
            raise ValueError(f"unknown consequent mode {self.mode!r}")
        object.__setattr__(self, "pattern", as_pattern(self.pattern))

    @property
    def scope(self) -> str:
        return SAME_COMMAND if self.mode == IN_NODE else SAME_RUN


def in_node(pattern, relation: Relation | None = None) -> Consequent:
    return Consequent(IN_NODE, pattern, relation)


def before_node(pattern, relation: Relation | None = None) -> Consequent:
    return Consequent(BEFORE_NODE, pattern, relation)


def after_node(pattern, relation: Relation | None = None) -> Consequent:
    return Consequent(AFTER_NODE, pattern, relation)


@dataclass(frozen=True)
class SmellRule:
    """A trigger pattern, an optional guard on the matched node, and a consequent.

    Without a consequent every guarded trigger match is a smell.
    """

    id: str
    trigger: QueryPattern
    consequent: Consequent | None
    message: str
    repairable: bool = True
    guard: Guard | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "trigger", as_pattern(self.trigger))


@dataclass(frozen=True)
class SmellReport:
    rule_id: str
    node: AstNode = field(compare=False, hash=False, repr=False)
    span: SourceSpan
    message: str
    instruction: AstNode = field(compare=False, hash=False, repr=False)

    @property
    def line(self) -> int:
        return self.span.start_line

    @property
    def instruction_line(self) -> int:
        """Line where the enclosing top-level instruction starts."""
        span = self.instruction.span
        return span.start_line if span else self.span.start_line

    @property
    def column(self) -> int:
        return self.span.start_col

    def key(self) -> tuple[str, int, int]:
        return (self.rule_id, self.span.start, self.span.end)

    def to_dict(self) -> dict[str, object]:
        return {
            "rule_id": self.rule_id,
            "line": self.line,
            "column": self.column,
            "instruction_line": self.instruction_line,
            "end_line": self.span.end_line,
            "end_column": self.span.end_col,
            "message": self.message,
        }


def run_instructions(root: AstNode) -> list[tuple[AstNode, AstNode]]:
    """``(top-level instruction, RUN node)`` pairs, ONBUILD RUN included."""
    found = []
    for child in root.children if root.kind is K.DockerFile else [root]:
        if child.kind is K.Run:
            found.append((child, child))
        elif child.kind is K.Onbuild:
            for inner in child.children:
                if inner.kind is K.Run:
                    found.append((child, inner))
    return found


def nearest_command(node: AstNode) -> AstNode | None:
    if node.kind is K.BashCommand:
        return node
    for anc in node.ancestors():
        if anc.kind is K.BashCommand:
            return anc
    return None


class _RunContext:
    """Lazily computed execution order for one RUN instruction."""

    def __init__(self, run: AstNode) -> None:
        self.run = run
        self._order: list[OrderedCommand] | None = None
        self._index: dict[int, int] = {}

    @property
    def order(self) -> list[OrderedCommand]:
        if self._order is None:
            self._order = evaluate_ordering(self.run)
            self._index = {id(o.node): i for i, o in enumerate(self._order)}
        return self._order

    def position(self, command: AstNode) -> int | None:
        self.order
        return self._index.get(id(command))


def _satisfied(
    rule: SmellRule, trigger: AstNode, ctx: _RunContext, matcher: _Matcher
) -> bool:
    cons = rule.consequent
    if cons is None:
        return False
    relation = cons.relation
    if cons.mode == IN_NODE:
        return any(
            matcher.matches(n, cons.pattern) and (relation is None or relation(trigger, n))
            for n in matcher.below(trigger)
        )
    command = nearest_command(trigger)
    if command is None:
        return False
    pos = ctx.position(command)
    if pos is None:
        return False
    order = ctx.order
    me = order[pos]
    others = order[:pos] if cons.mode == BEFORE_NODE else order[pos + 1:]
    for other in others:
        if not other.runs_whenever(me):
            continue
        if matcher.matches(other.node, cons.pattern) and (relation is None or relation(trigger, other.node)):
            return True
    return False


def evaluate(
    root: AstNode, rules: Iterable[SmellRule]
) -> list[SmellReport]:
    rules = list(rules)
    reports: list[SmellReport] = []
    matcher = _Matcher()
    for instruction, run in run_instructions(root):
        ctx = _RunContext(run)
        for rule in rules:
            for node in run.iter():
                if not matcher.matches(node, rule.trigger):
                    continue
                if rule.guard is not None and not rule.guard(node):
                    continue
                if _satisfied(rule, node, ctx, matcher):
                    continue
                span = node.span or SourceSpan(0, 0)
                reports.append(SmellReport(rule.id, node, span, rule.message, instruction))
    reports.sort(key=lambda r: (r.span.start, r.span.end, r.rule_id))
    return reports
