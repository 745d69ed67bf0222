"""Command line entry point: ``dockrepair analyze|repair|list-rules``."""

from __future__ import annotations

import argparse
import glob
import json
import os
import shutil
import sys
import tempfile
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .enricher import SchemaError, builtin_schemas, load_schemas
from .pipeline import ANALYZE, REPAIR, Pipeline
from .repair import RepairConfig
from .rules import DEFAULT_KEYSERVER, UnknownRuleId, default_rules, select_rules

SCHEMA_VERSION = "1.0"
RULES_ENV = "DOCKREPAIR_RULES"
CANDIDATE_MARKER = "Dockerfile"

EXIT_CLEAN = 0
EXIT_SMELLS = 1
EXIT_ERROR = 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Settings:
    """Everything a worker needs to rebuild the pipeline; must stay picklable."""

    include: tuple[str, ...] | None
    exclude: tuple[str, ...]
    keyserver: str
    schema_path: str | None


@dataclass(frozen=True)
class FileResult:
    path: str
    report: dict
    original: str | None
    repaired: str | None
    diff: str
    failed: bool
    round_trip_ok: bool
    smells: int
    residual: int


_PIPELINES: dict[Settings, Pipeline] = {}


def build_pipeline(settings: Settings) -> Pipeline:
    pipeline = _PIPELINES.get(settings)
    if pipeline is None:
        schemas = builtin_schemas()
        if settings.schema_path:
            schemas = schemas.extended(load_schemas(settings.schema_path).schemas)
        rules = select_rules(settings.include, settings.exclude, settings.keyserver)
        pipeline = Pipeline(rules, schemas, RepairConfig(settings.keyserver))
        _PIPELINES[settings] = pipeline
    return pipeline


def process_one(path: str, mode: str, settings: Settings) -> FileResult:
    """Run one file; never raises, so one bad file cannot sink the batch."""
    try:
        report = build_pipeline(settings).process_file(path, mode)
    except Exception as exc:  # noqa: BLE001 - isolate unexpected failures per file
        data = {
            "path": path,
            "status": "error",
            "error": f"internal error: {type(exc).__name__}: {exc}",
            "parse_diagnostics": [],
            "smells": [],
            "repairs": None,
            "residual_smells": None,
            "enrichment": {"total_commands": 0, "annotated_commands": 0, "coverage_ratio": 0.0},
            "timing_ms": {},
            "round_trip_ok": False,
            "diff": None,
            "written": False,
        }
        return FileResult(path, data, None, None, "", True, False, 0, 0)
    return FileResult(
        path,
        report.to_dict(),
        report.original,
        report.repaired,
        report.diff,
        report.failed,
        report.round_trip_ok,
        len(report.smells),
        len(report.residual or ()),
    )


# -- inputs --------------------------------------------------------------------


def _is_candidate(path: Path) -> bool:
    return CANDIDATE_MARKER in path.name


def _walk(directory: Path) -> list[Path]:
    found = []
    for dirpath, dirnames, filenames in os.walk(directory):
        dirnames.sort()
        for name in filenames:
            if CANDIDATE_MARKER in name:
                found.append(Path(dirpath) / name)
    return found


def resolve_inputs(inputs: list[str]) -> tuple[list[str], list[str]]:
    """Candidate files plus inputs that matched nothing.

    Explicitly named files are taken as given; directories and glob patterns
    only contribute files whose name contains "Dockerfile".
    """
    files: list[Path] = []
    missing: list[str] = []
    for item in inputs:
        path = Path(item)
        if path.is_dir():
            files.extend(_walk(path))
        elif path.is_file():
            files.append(path)
        else:
            matches = [Path(m) for m in sorted(glob.glob(item, recursive=True))]
            if not matches:
                missing.append(item)
            for match in matches:
                if match.is_dir():
                    files.extend(_walk(match))
                elif match.is_file() and _is_candidate(match):
                    files.append(match)
    unique = sorted({str(f) for f in files})
    return unique, missing


# -- output --------------------------------------------------------------------


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read rule config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"rule config {path} must be a JSON object")
    return doc


def _id_list(text: str | None) -> list[str] | None:
    if text is None:
        return None
    return [part.strip() for part in text.split(",") if part.strip()]


def _settings(args: argparse.Namespace) -> Settings:
    config = _load_config(args.config or os.environ.get(RULES_ENV))
    include = _id_list(args.rules)
    if include is None and config.get("rules") is not None:
        include = list(config["rules"])
    exclude = _id_list(args.exclude_rules)
    if exclude is None:
        exclude = list(config.get("exclude_rules", []))
    keyserver = args.keyserver or config.get("keyserver") or DEFAULT_KEYSERVER
    settings = Settings(tuple(include) if include is not None else None, tuple(exclude), keyserver, args.schema)
    _PIPELINES.pop(settings, None)  # the schema file may have changed since the last call
    try:
        build_pipeline(settings)
    except UnknownRuleId as exc:
        raise UsageError(str(exc)) from exc
    except (SchemaError, OSError) as exc:
        raise UsageError(f"cannot load schema: {exc}") from exc
    return settings


def _patch_name(path: str) -> str:
    return path.strip("/").replace(os.sep, "__").replace("/", "__") + ".patch"


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        shutil.copymode(path, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_outputs(results: list[FileResult], args: argparse.Namespace) -> list[str]:
    errors = []
    patch_dir = Path(args.patch_dir) if args.patch_dir else None
    if patch_dir is not None:
        patch_dir.mkdir(parents=True, exist_ok=True)
    for result in results:
        if result.failed or result.repaired is None or result.repaired == result.original:
            continue
        try:
            if args.in_place:
                if not result.round_trip_ok:
                    continue  # the pipeline already refuses, this is belt and braces
                _write_atomic(Path(result.path), result.repaired)
                result.report["written"] = True
            elif patch_dir is not None:
                (patch_dir / _patch_name(result.path)).write_text(result.diff, encoding="utf-8")
                result.report["written"] = True
        except OSError as exc:
            result.report["status"] = "error"
            result.report["error"] = f"write failure: {exc}"
            errors.append(result.path)
    return errors


def build_document(mode: str, settings: Settings, results: list[FileResult], exit_code: int) -> dict:
    files = [r.report for r in results]
    by_rule = Counter(s["rule_id"] for f in files for s in f["smells"])
    total = sum(f["enrichment"]["total_commands"] for f in files)
    annotated = sum(f["enrichment"]["annotated_commands"] for f in files)
    rule_ids = [r.id for r in select_rules(settings.include, settings.exclude, settings.keyserver)]
    return {
        "schema_version": SCHEMA_VERSION,
        "mode": mode,
        "rules": rule_ids,
        "files": files,
        "summary": {
            "files": len(files),
            "failed_files": sum(1 for f in files if f["status"] == "error"),
            "smells": sum(by_rule.values()),
            "smells_by_rule": dict(sorted(by_rule.items())),
            "repairs_applied": sum(len(f["repairs"]["applied"]) for f in files if f["repairs"]),
            "repairs_skipped": sum(len(f["repairs"]["skipped"]) for f in files if f["repairs"]),
            "residual_smells": sum(len(f["residual_smells"] or ()) for f in files),
            "enrichment": {
                "total_commands": total,
                "annotated_commands": annotated,
                "coverage_ratio": round(annotated / total, 6) if total else 0.0,
            },
            "exit_code": exit_code,
        },
    }


def render_text(doc: dict) -> str:
    lines = []
    for f in doc["files"]:
        path = f["path"]
        if f["error"]:
            lines.append(f"{path}: error: {f['error']}")
        for d in f["parse_diagnostics"]:
            lines.append(f"{path}:{d['line']}:{d['column']}: {d['severity']}: {d['message']}")
        for s in f["smells"]:
            lines.append(f"{path}:{s['line']}:{s['column']}: {s['rule_id']}: {s['message']}")
        if f["repairs"] is not None:
            for a in f["repairs"]["applied"]:
                lines.append(f"{path}:{a['line']}:{a['column']}: repaired {a['rule_id']} ({a['action']})")
            for s in f["repairs"]["skipped"]:
                lines.append(f"{path}:{s['line']}:{s['column']}: skipped {s['rule_id']} [{s['reason']}] {s['detail']}")
    summary = doc["summary"]
    cov = summary["enrichment"]
    tail = (
        f"{summary['files']} file(s), {summary['smells']} smell(s), "
        f"{summary['failed_files']} failed, command coverage {cov['coverage_ratio'] * 100:.2f}%"
    )
    if doc["mode"] == REPAIR:
        tail += (
            f", {summary['repairs_applied']} repaired, {summary['repairs_skipped']} skipped, "
            f"{summary['residual_smells']} residual"
        )
    lines.append(tail)
    return "\n".join(lines) + "\n"


# -- main ----------------------------------------------------------------------


def _exit_code(mode: str, results: list[FileResult], fail_threshold: int) -> int:
    if any(r.report["status"] == "error" for r in results):
        return EXIT_ERROR
    if mode == REPAIR:
        return EXIT_SMELLS if any(r.residual for r in results) else EXIT_CLEAN
    total = sum(r.smells for r in results)
    return EXIT_SMELLS if total and total >= max(fail_threshold, 1) else EXIT_CLEAN


def run_batch(paths: list[str], mode: str, settings: Settings, jobs: int = 1) -> list[FileResult]:
    if jobs <= 1 or len(paths) <= 1:
        results = [process_one(p, mode, settings) for p in paths]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(process_one, paths, [mode] * len(paths), [settings] * len(paths)))
    return sorted(results, key=lambda r: r.path)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("paths", nargs="+", help="files, directories or glob patterns")
    parser.add_argument("--rules", help="comma-separated rule ids to run (default: all)")
    parser.add_argument("--exclude-rules", help="comma-separated rule ids to skip")
    parser.add_argument("--config", help=f"JSON rule config file (default: ${RULES_ENV})")
    parser.add_argument("--format", choices=("text", "json"), default="text")
    parser.add_argument("--output", "-o", help="write the report to this file instead of stdout")
    parser.add_argument("--schema", help="extra command schema JSON merged over the built-in one")
    parser.add_argument("--keyserver", help="keyserver accepted and written by gpgUseHaPools")
    parser.add_argument("--jobs", "-j", type=int, default=1, help="worker processes (default: 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dockrepair", description="Detect and repair Dockerfile smells.")
    sub = parser.add_subparsers(dest="command", required=True)
    analyze = sub.add_parser("analyze", help="report smells")
    _add_common(analyze)
    analyze.add_argument(
        "--fail-threshold", type=int, default=1, help="smell count that makes the exit code 1 (default: 1)"
    )
    repair = sub.add_parser("repair", help="repair smells")
    _add_common(repair)
    write = repair.add_mutually_exclusive_group()
    write.add_argument("--in-place", action="store_true", help="rewrite files in place")
    write.add_argument("--diff", action="store_true", help="print unified diffs to stdout")
    write.add_argument("--patch-dir", help="write one .patch file per changed Dockerfile here")
    sub.add_parser("list-rules", help="print the rule catalog")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "list-rules":
        for rule in default_rules():
            print(f"{rule.id}\t{rule.message}")
        return EXIT_CLEAN
    mode = ANALYZE if args.command == "analyze" else REPAIR
    try:
        settings = _settings(args)
    except UsageError as exc:
        print(f"dockrepair: {exc}", file=sys.stderr)
        return EXIT_ERROR
    paths, missing = resolve_inputs(args.paths)
    for item in missing:
        print(f"dockrepair: no such file or pattern: {item}", file=sys.stderr)
    if not paths:
        print("dockrepair: no candidate Dockerfiles found", file=sys.stderr)
        return EXIT_ERROR
    results = run_batch(paths, mode, settings, args.jobs)
    if mode == REPAIR:
        _write_outputs(results, args)
    exit_code = _exit_code(mode, results, getattr(args, "fail_threshold", 1))
    if missing:
        exit_code = EXIT_ERROR
    doc = build_document(mode, settings, results, exit_code)
    rendered = json.dumps(doc, indent=2) + "\n" if args.format == "json" else render_text(doc)
    diff_mode = mode == REPAIR and args.diff
    if diff_mode:
        sys.stdout.write("".join(r.diff for r in results))
    if args.output:
        Path(args.output).write_text(rendered, encoding="utf-8")
    else:
        (sys.stderr if diff_mode else sys.stdout).write(rendered)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
