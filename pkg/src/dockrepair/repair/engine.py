"""Applying repair templates to reported smells until nothing changes."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field

from ..enricher import SchemaSet, enrich
from ..rules import SmellReport, SmellRule, default_rules, evaluate
from ..tree import AstNode, SourceSpan
from .templates import (
    SKIPPED_UNSUPPORTED,
    TEMPLATES,
    RepairConfig,
    RepairContext,
    RepairSkipped,
    SkippedConflict,
)

MAX_PASSES = 3


@dataclass(frozen=True)
class AppliedRepair:
    rule_id: str
    span: SourceSpan
    action: str
    detail: str

    def key(self) -> tuple[str, int, int]:
        return (self.rule_id, self.span.start, self.span.end)

    def to_dict(self) -> dict[str, object]:
        return {
            "rule_id": self.rule_id,
            "line": self.span.start_line,
            "column": self.span.start_col,
            "action": self.action,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class SkippedRepair:
    rule_id: str
    span: SourceSpan
    reason: str
    detail: str

    def key(self) -> tuple[str, int, int]:
        return (self.rule_id, self.span.start, self.span.end)

    def to_dict(self) -> dict[str, object]:
        return {
            "rule_id": self.rule_id,
            "line": self.span.start_line,
            "column": self.span.start_col,
            "reason": self.reason,
            "detail": self.detail,
        }


@dataclass
class RepairOutcome:
    applied: list[AppliedRepair] = field(default_factory=list)
    skipped: list[SkippedRepair] = field(default_factory=list)
    passes: int = 0
    touched: list[AstNode] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict[str, object]:
        return {
            "applied": [a.to_dict() for a in self.applied],
            "skipped": [s.to_dict() for s in self.skipped],
            "passes": self.passes,
        }


def _attached(node: AstNode, root: AstNode) -> bool:
    return node.root is root


def _still_reported(report: SmellReport, root: AstNode, rule: SmellRule) -> bool:
    return any(r.node is report.node for r in evaluate(root, [rule]))


def _repair(
    report: SmellReport, root: AstNode, config: RepairConfig, claimed: set[int]
) -> tuple[AppliedRepair | SkippedRepair, list[AstNode]]:
    template = TEMPLATES.get(report.rule_id)
    if template is None:
        return SkippedRepair(report.rule_id, report.span, SKIPPED_UNSUPPORTED, "rule has no repair template"), []
    if not _attached(report.node, root):
        skip = SkippedRepair(report.rule_id, report.span, SkippedConflict.reason, "target was replaced by another repair")
        return skip, []
    ctx = RepairContext(report, config, claimed)
    try:
        detail = template.apply(ctx)
    except RepairSkipped as exc:
        return SkippedRepair(report.rule_id, report.span, exc.reason, exc.detail), []
    return AppliedRepair(report.rule_id, report.span, template.action, detail), ctx.touched


def repair_one(
    report: SmellReport, root: AstNode, config: RepairConfig = RepairConfig()
) -> AppliedRepair | SkippedRepair:
    """Apply the template registered for ``report.rule_id``."""
    return _repair(report, root, config, set())[0]


def repair_all(
    root: AstNode,
    rules: Iterable[SmellRule] | None = None,
    config: RepairConfig = RepairConfig(),
    schemas: SchemaSet | None = None,
) -> RepairOutcome:
    """Detect, repair and re-detect, for at most ``MAX_PASSES`` passes."""
    rules = list(rules) if rules is not None else default_rules(config.keyserver)
    by_id = {r.id: r for r in rules}
    outcome = RepairOutcome()
    applied: dict[tuple[str, int, int], AppliedRepair] = {}
    skipped: dict[tuple[str, int, int], SkippedRepair] = {}
    enrich(root, schemas)
    for _ in range(MAX_PASSES):
        reports = evaluate(root, rules)
        if not reports:
            break
        outcome.passes += 1
        claimed: set[int] = set()
        changed = 0
        for report in reports:
            rule = by_id[report.rule_id]
            if changed and not _still_reported(report, root, rule):
                continue  # fixed as a side effect of an earlier repair
            result, touched = _repair(report, root, config, claimed)
            key = result.key()
            if isinstance(result, AppliedRepair):
                applied[key] = result
                skipped.pop(key, None)
                outcome.touched.extend(touched)
                changed += 1
                enrich(root, schemas)
            else:
                skipped[key] = result
        if not changed:
            break
    outcome.applied = sorted(applied.values(), key=lambda a: (a.span.start, a.rule_id))
    outcome.skipped = sorted(skipped.values(), key=lambda s: (s.span.start, s.rule_id))
    return outcome
