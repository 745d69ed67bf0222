from __future__ import annotations

from collections.abc import Iterable

from ..tree import AstNode
from .catalog import (
    DEFAULT_KEYSERVER,
    HA_POOL,
    RULE_IDS,
    default_rules,
    is_plain_http_url,
    path_covers,
    select_rules,
)
from .engine import (
    AFTER_NODE,
    BEFORE_NODE,
    IN_NODE,
    Consequent,
    SmellReport,
    SmellRule,
    UnknownRuleId,
    after_node,
    before_node,
    evaluate,
    in_node,
    run_instructions,
)
from .ordering import OrderedCommand, evaluate_ordering


def analyze(root: AstNode, rules: Iterable[SmellRule | str] | None = None) -> list[SmellReport]:
    """Smell reports for an enriched tree, sorted by location.

    ``rules`` may mix rule objects and catalog ids; None means every rule.
    """
    if rules is None:
        resolved = default_rules()
    else:
        items = list(rules)
        ids = [r for r in items if isinstance(r, str)]
        by_id = {r.id: r for r in select_rules(ids)} if ids else {}
        resolved = [by_id[r] if isinstance(r, str) else r for r in items]
    return evaluate(root, resolved)


__all__ = [
    "AFTER_NODE",
    "BEFORE_NODE",
    "DEFAULT_KEYSERVER",
    "HA_POOL",
    "IN_NODE",
    "RULE_IDS",
    "Consequent",
    "OrderedCommand",
    "SmellReport",
    "SmellRule",
    "UnknownRuleId",
    "after_node",
    "analyze",
    "before_node",
    "default_rules",
    "evaluate",
    "evaluate_ordering",
    "in_node",
    "is_plain_http_url",
    "path_covers",
    "run_instructions",
    "select_rules",
]
