"""Detect and repair Dockerfile smells with format-preserving rewrites."""

from __future__ import annotations

from .enricher import EnrichmentStats, builtin_schemas, enrich, load_schemas
from .parser import ParseResult, parse_dockerfile
from .pipeline import FileReport, Pipeline, process_file, process_text
from .printer import PrintMode, diff, print_dockerfile
from .query import Q, Value, find, matches
from .repair import RepairConfig, RepairOutcome, repair_all, repair_one
from .rules import RULE_IDS, SmellReport, SmellRule, analyze, default_rules, select_rules
from .tree import AstNode, NodeKind, SourceSpan

__version__ = "0.1.0"

__all__ = [
    "RULE_IDS",
    "AstNode",
    "EnrichmentStats",
    "FileReport",
    "NodeKind",
    "ParseResult",
    "Pipeline",
    "PrintMode",
    "Q",
    "RepairConfig",
    "RepairOutcome",
    "SmellReport",
    "SmellRule",
    "SourceSpan",
    "Value",
    "analyze",
    "builtin_schemas",
    "default_rules",
    "diff",
    "enrich",
    "find",
    "load_schemas",
    "matches",
    "parse_dockerfile",
    "print_dockerfile",
    "process_file",
    "process_text",
    "repair_all",
    "repair_one",
    "select_rules",
]
