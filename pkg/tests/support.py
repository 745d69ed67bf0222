"""Fixture locations and small helpers shared by the test modules."""

from __future__ import annotations

from pathlib import Path

from dockrepair import parse_dockerfile
from dockrepair.enricher import builtin_schemas, wrapper_specs

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "corpus"
GROUND_TRUTH = FIXTURES / "ground_truth"
RULE_FIXTURES = FIXTURES / "rules"
SCENARIOS = FIXTURES / "scenarios"


def corpus_files() -> list[Path]:
    return sorted(CORPUS.glob("*Dockerfile"))


def ground_truth_files() -> list[Path]:
    return sorted(GROUND_TRUTH.glob("*.Dockerfile"))


def rule_fixture_files() -> list[Path]:
    return sorted(RULE_FIXTURES.glob("*/*.Dockerfile"))


def every_dockerfile() -> list[Path]:
    return corpus_files() + ground_truth_files() + rule_fixture_files() + sorted(SCENARIOS.glob("*.Dockerfile"))


def read(path: Path) -> str:
    return path.read_bytes().decode("utf-8")


def parse(text: str):
    """Parse with the wrapper table the pipeline uses."""
    return parse_dockerfile(text, wrapper_specs(builtin_schemas()))

