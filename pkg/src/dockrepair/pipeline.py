"""The per-file pipeline: parse, enrich, analyze, and optionally repair.

Repair mode runs the full sequence: parse, enrich, analyze, repair, print,
reparse, re-analyze and diff. Each stage is timed in milliseconds.
"""

from __future__ import annotations

import time
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from .enricher import EnrichmentStats, SchemaSet, builtin_schemas, enrich, wrapper_specs
from .parser import ParseDiagnostic, UnsupportedEncoding, parse_dockerfile
from .printer import InconsistentSpans, PrintMode, diff, print_dockerfile
from .repair import RepairConfig, RepairOutcome, repair_all
from .rules import SmellReport, SmellRule, default_rules, evaluate

ANALYZE = "analyze"
REPAIR = "repair"


@dataclass
class FileReport:
    path: str
    mode: str = ANALYZE
    error: str | None = None
    parse_diagnostics: list[ParseDiagnostic] = field(default_factory=list)
    smells: list[SmellReport] = field(default_factory=list)
    repairs: RepairOutcome | None = None
    residual: list[SmellReport] | None = None
    enrichment: EnrichmentStats = field(default_factory=EnrichmentStats)
    timing_ms: dict[str, float] = field(default_factory=dict)
    round_trip_ok: bool = False
    original: str | None = field(default=None, repr=False)
    repaired: str | None = field(default=None, repr=False)
    diff: str = ""
    written: bool = False

    @property
    def has_parse_errors(self) -> bool:
        return any(d.severity == "error" for d in self.parse_diagnostics)

    @property
    def failed(self) -> bool:
        return self.error is not None or self.has_parse_errors

    @property
    def changed(self) -> bool:
        return self.repaired is not None and self.repaired != self.original

    def exit_code(self, fail_threshold: int = 1) -> int:
        if self.failed:
            return 2
        if self.mode == REPAIR:
            return 1 if self.residual else 0
        return 1 if len(self.smells) >= max(fail_threshold, 1) else 0

    def to_dict(self) -> dict[str, object]:
        return {
            "path": self.path,
            "status": "error" if self.failed else "ok",
            "error": self.error,
            "parse_diagnostics": [d.to_dict() for d in self.parse_diagnostics],
            "smells": [s.to_dict() for s in self.smells],
            "repairs": self.repairs.to_dict() if self.repairs is not None else None,
            "residual_smells": [s.to_dict() for s in self.residual] if self.residual is not None else None,
            "enrichment": self.enrichment.to_dict(),
            "timing_ms": {k: round(v, 3) for k, v in self.timing_ms.items()},
            "round_trip_ok": self.round_trip_ok,
            "diff": self.diff if self.mode == REPAIR else None,
            "written": self.written,
        }


@dataclass
class Pipeline:
    """Reusable settings for processing many files the same way."""

    rules: list[SmellRule] | None = None
    schemas: SchemaSet | None = None
    config: RepairConfig = field(default_factory=RepairConfig)

    def __post_init__(self) -> None:
        if self.schemas is None:
            self.schemas = builtin_schemas()
        if self.rules is None:
            self.rules = default_rules(self.config.keyserver)
        self._wrappers = wrapper_specs(self.schemas)

    def process_text(self, text: str | bytes, path: str = "Dockerfile", mode: str = ANALYZE) -> FileReport:
        if mode not in (ANALYZE, REPAIR):
            raise ValueError(f"unknown mode {mode!r}")
        report = FileReport(path, mode)
        timings = report.timing_ms
        started = time.perf_counter()

        @contextmanager
        def stage(name: str) -> Iterator[None]:
            t0 = time.perf_counter()
            try:
                yield
            finally:
                timings[name] = timings.get(name, 0.0) + (time.perf_counter() - t0) * 1000.0

        try:
            with stage("parse"):
                parsed = parse_dockerfile(text, self._wrappers)
        except UnsupportedEncoding as exc:
            report.error = str(exc)
            timings["total"] = (time.perf_counter() - started) * 1000.0
            return report
        source = parsed.root.source or ""
        report.original = source
        report.parse_diagnostics = list(parsed.diagnostics)
        with stage("enrich"):
            report.enrichment = enrich(parsed.root, self.schemas)
        with stage("analyze"):
            report.smells = evaluate(parsed.root, self.rules)
        with stage("roundtrip"):
            try:
                report.round_trip_ok = print_dockerfile(parsed.root) == source
            except InconsistentSpans:
                report.round_trip_ok = False
        if mode == REPAIR and not report.failed:
            self._repair(report, parsed.root, source, stage)
        timings["total"] = (time.perf_counter() - started) * 1000.0
        return report

    def _repair(self, report: FileReport, root, source: str, stage) -> None:
        if not report.round_trip_ok:
            report.error = "unmodified tree does not reprint byte-identically; repair refused"
            return
        with stage("repair"):
            report.repairs = repair_all(root, self.rules, self.config, self.schemas)
        with stage("print"):
            repaired = print_dockerfile(root, PrintMode(preserve_formatting=True))
        report.repaired = repaired
        with stage("reparse"):
            reparsed = parse_dockerfile(repaired, self._wrappers)
        if any(d.severity == "error" for d in reparsed.diagnostics):
            report.error = "repaired text no longer parses cleanly"
        with stage("enrich"):
            enrich(reparsed.root, self.schemas)
        with stage("reanalyze"):
            report.residual = evaluate(reparsed.root, self.rules)
        with stage("diff"):
            name = report.path.lstrip("/")
            report.diff = diff(source, repaired, fromfile=f"a/{name}", tofile=f"b/{name}")

    def process_file(self, path: str | Path, mode: str = ANALYZE) -> FileReport:
        path = Path(path)
        try:
            data = path.read_bytes()
        except OSError as exc:
            return FileReport(str(path), mode, error=f"cannot read file: {exc.strerror or exc}")
        return self.process_text(data, str(path), mode)


def process_text(text: str | bytes, path: str = "Dockerfile", mode: str = ANALYZE, **settings) -> FileReport:
    """One-shot helper; ``settings`` are passed to :class:`Pipeline`."""
    return Pipeline(**settings).process_text(text, path, mode)


def process_file(path: str | Path, mode: str = ANALYZE, **settings) -> FileReport:
    return Pipeline(**settings).process_file(path, mode)
