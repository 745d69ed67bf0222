"""Linear execution order of the commands in a RUN payload.

Each command is flagged ``guaranteed`` when it runs whenever the RUN
instruction itself succeeds: the right side of ``||``, if/else branches,
loop bodies and command substitutions are all treated as conditional.

Every command also carries a ``scope``: the chain of conditional regions it
sits in. A command whose scope is a prefix of another's runs whenever the
other one does, which is what before/after consequents need.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..tree import AstNode, NodeKind

K = NodeKind

_LISTS = frozenset({K.BashStatementList, K.BashIfCondition, K.BashIfBody, K.BashElseBody})
_CONDITIONAL = frozenset({K.BashIf, K.BashFor, K.BashCommandSubstitution})


@dataclass(frozen=True)
class OrderedCommand:
    node: AstNode
    scope: tuple[int, ...] = ()

    @property
    def guaranteed(self) -> bool:
        return not self.scope

    def runs_whenever(self, other: OrderedCommand) -> bool:
        """True when this command executes in every run where ``other`` does."""
        return other.scope[: len(self.scope)] == self.scope


def evaluate_ordering(run_node: AstNode) -> list[OrderedCommand]:
    """Commands of a RUN instruction (or any subtree) in execution order."""
    out: list[OrderedCommand] = []
    _Walker(out).visit(run_node, ())
    return out


class _Walker:
    def __init__(self, out: list[OrderedCommand]) -> None:
        self.out = out
        self.keys = itertools.count(1)

    def visit(self, node: AstNode, scope: tuple[int, ...]) -> None:
        kind = node.kind
        if kind is K.BashOpaque:
            return
        if kind in _CONDITIONAL:
            inner = scope + (next(self.keys),)
            for child in node.children:
                self.visit(child, inner)
        elif kind in _LISTS:
            self.visit_list(node.children, scope)
        elif kind is K.BashCommand:
            self.visit_command(node, scope)
        else:
            for child in node.children:
                self.visit(child, scope)

    def visit_list(self, items: list[AstNode], base: tuple[int, ...]) -> None:
        current = base
        for item in items:
            kind = item.kind
            if kind is K.BashOperatorOr:
                current = base + (next(self.keys),)
            elif kind in (K.BashOperatorAnd, K.BashOperatorSemicolon):
                current = base
            elif kind is K.BashPipe or kind is K.Comment:
                continue
            else:
                self.visit(item, current)

    def visit_command(self, cmd: AstNode, scope: tuple[int, ...]) -> None:
        embedded: list[AstNode] = []
        for child in cmd.children:
            if child.kind is K.BashCommand:
                embedded.append(child)
                continue
            for sub in _substitutions(child, embedded):
                self.visit(sub, scope)
        if any(c.kind is K.BashCommandName for c in cmd.children):
            self.out.append(OrderedCommand(cmd, scope))
        for node in embedded:
            self.visit(node, scope)


def _substitutions(word: AstNode, embedded: list[AstNode]) -> list[AstNode]:
    """Outermost command substitutions in a word; embedded scripts go to ``embedded``."""
    found: list[AstNode] = []
    stack = [word]
    while stack:
        node = stack.pop()
        if node.kind is K.BashCommandSubstitution:
            found.append(node)
            continue
        if node.kind is K.BashScript:
            embedded.append(node)
            continue
        stack.extend(reversed(node.children))
    found.sort(key=lambda n: n.span.start if n.span else 0)
    return found
