from .engine import MAX_PASSES, AppliedRepair, RepairOutcome, SkippedRepair, repair_all, repair_one
from .templates import (
    SKIPPED_CONFLICT,
    SKIPPED_NON_LITERAL,
    SKIPPED_UNSUPPORTED,
    TEMPLATES,
    RepairConfig,
    RepairSkipped,
    RepairTemplate,
    SkippedConflict,
    SkippedNonLiteral,
    SkippedUnsupported,
    parse_command,
    parse_word,
)

__all__ = [
    "MAX_PASSES",
    "SKIPPED_CONFLICT",
    "SKIPPED_NON_LITERAL",
    "SKIPPED_UNSUPPORTED",
    "TEMPLATES",
    "AppliedRepair",
    "RepairConfig",
    "RepairOutcome",
    "RepairSkipped",
    "RepairTemplate",
    "SkippedConflict",
    "SkippedNonLiteral",
    "SkippedRepair",
    "SkippedUnsupported",
    "parse_command",
    "parse_word",
    "repair_all",
    "repair_one",
]
