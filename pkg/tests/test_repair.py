from __future__ import annotations

import posixpath
import shlex
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dockrepair import Pipeline, print_dockerfile
from dockrepair.enricher import command_args, enrich
from dockrepair.repair import RepairConfig, repair_all, repair_one
from dockrepair.repair.engine import MAX_PASSES, _repair
from dockrepair.repair.templates import (
    SKIPPED_CONFLICT,
    SKIPPED_NON_LITERAL,
    SKIPPED_UNSUPPORTED,
    TEMPLATES,
)
from dockrepair.rules import RULE_IDS, default_rules, evaluate
from dockrepair.tree import NodeKind

from support import SCENARIOS, RULE_FIXTURES, corpus_files, ground_truth_files, parse, read

K = NodeKind
PIPELINE = Pipeline()
ACTIONS = {"insertFlag", "appendCleanupCommand", "insertCommandAfter", "rewriteLiteral", "mergeIntoSequence"}
POSITIVES = sorted(RULE_FIXTURES.glob("*/positive*.Dockerfile"))


def repaired(text: str) -> str:
    report = PIPELINE.process_text(text, "Dockerfile", "repair")
    assert report.error is None
    return report.repaired


def test_one_template_per_rule_with_a_known_action() -> None:
    assert sorted(TEMPLATES) == sorted(RULE_IDS)
    assert {t.action for t in TEMPLATES.values()} == ACTIONS


@pytest.mark.parametrize("path", POSITIVES, ids=lambda p: f"{p.parent.name}/{p.stem}")
def test_positive_fixtures_reach_a_clean_fixpoint(path) -> None:
    report = PIPELINE.process_text(read(path), str(path), "repair")
    assert report.residual == []
    applied = {a.rule_id for a in report.repairs.applied}
    assert path.parent.name in applied
    assert not report.repairs.skipped


def test_residuals_are_only_explained_update_skips() -> None:
    for path in corpus_files() + ground_truth_files():
        report = PIPELINE.process_text(read(path), str(path), "repair")
        for smell in report.residual:
            assert smell.rule_id == "aptGetUpdatePrecedesInstall", path
        skipped_lines = {(s.rule_id, s.span.start_line) for s in report.repairs.skipped}
        for s in report.repairs.skipped:
            assert s.reason == SKIPPED_UNSUPPORTED and s.detail
        assert len(report.residual) == len(skipped_lines)


def test_repair_is_idempotent() -> None:
    for path in POSITIVES + corpus_files() + ground_truth_files():
        once = repaired(read(path))
        second = PIPELINE.process_text(once, str(path), "repair")
        assert second.repairs.applied == []
        assert second.repaired == once


def test_applied_and_skipped_are_disjoint() -> None:
    for path in corpus_files() + ground_truth_files():
        outcome = PIPELINE.process_text(read(path), str(path), "repair").repairs
        assert not {a.key() for a in outcome.applied} & {s.key() for s in outcome.skipped}
        assert outcome.passes <= MAX_PASSES


def test_clean_file_is_identity() -> None:
    text = "FROM alpine:3.19\n# nothing to fix\nRUN apk add --no-cache curl\nCMD [\"sh\"]\n"
    report = PIPELINE.process_text(text, "Dockerfile", "repair")
    assert report.repaired == text and report.diff == ""
    assert report.repairs.applied == [] and report.repairs.skipped == [] and report.repairs.passes == 0


def test_npm_cache_clean_gets_force() -> None:
    out = repaired(read(SCENARIOS / "node_app.Dockerfile"))
    assert out.splitlines()[20] == "RUN npm cache clean --force"


def test_two_rules_in_one_pass() -> None:
    text = "FROM node:alpine\nRUN npm cache clean\nRUN apk add x\n"
    report = PIPELINE.process_text(text, "Dockerfile", "repair")
    assert report.repairs.passes == 1 and report.residual == []
    assert report.repaired == "FROM node:alpine\nRUN npm cache clean --force\nRUN apk add --no-cache x\n"


def _modified(root) -> set[int]:
    return {id(n) for n in root.iter() if n.modified}


def _expected_dirty(root, touched) -> set[int]:
    out: set[int] = set()
    for node in touched:
        if node.root is not root:
            continue  # replaced by its rewrite
        out.add(id(node))
        out.update(id(a) for a in node.ancestors())
        out.update(id(d) for d in node.iter() if d.synthetic)
    return out


@pytest.mark.parametrize("path", POSITIVES[::2] + corpus_files()[::4], ids=lambda p: p.name)
def test_only_touched_nodes_and_their_ancestors_are_dirty(path) -> None:
    root = parse(read(path)).root
    enrich(root)
    outcome = repair_all(root)
    assert _modified(root) == _expected_dirty(root, outcome.touched)


FLAG_CASES = [
    ("RUN apt-get install curl wget", "aptGetInstallUseY"),
    ("RUN apt-get -q install --reinstall curl", "aptGetInstallUseNoRec"),
    ("RUN pip install -r req.txt flask", "pipUseNoCacheDir"),
    ("RUN sudo apk add --virtual .deps gcc", "apkAddUseNoCache"),
    ("RUN curl -o out https://example.com/x", "curlUseFlagF"),
    ("RUN gem update --system", "gemUpdateNoDocument"),
    ("RUN npm cache clean", "npmCacheCleanUseForce"),
    ("RUN yum install -q httpd", "yumInstallForceYes"),
]


@pytest.mark.parametrize("line,rule_id", FLAG_CASES)
def test_inserted_flag_sits_after_subcommand_and_before_operands(line: str, rule_id: str) -> None:
    root = parse(f"FROM base\n{line}\n").root
    enrich(root)
    (report,) = [r for r in evaluate(root, default_rules()) if r.rule_id == rule_id]
    assert type(repair_one(report, root)).__name__ == "AppliedRepair"
    cmd = next(n for n in root.iter() if n.kind is K.BashCommand and any(c.synthetic for c in n.children))
    args = command_args(cmd)
    pos = next(i for i, a in enumerate(args) if a.synthetic)
    subs = [i for i, a in enumerate(args) if "SUBCOMMAND" in a.annotations]
    assert pos == (subs[-1] + 1 if subs else 0)
    # the original words keep their relative order
    original = [a.to_string() for a in args if not a.synthetic]
    assert " ".join(original) in line


def test_multiple_inserted_flags_keep_insertion_order() -> None:
    out = repaired("FROM debian\nRUN apt-get update && apt-get install curl && rm -rf /var/lib/apt/lists/*\n")
    assert "apt-get install --no-install-recommends -y curl" in out


# -- archive removal placement --------------------------------------------------


class PathSimulator:
    """Tracks the working directory and the set of files a command chain touches."""

    def __init__(self, archives: dict[str, list[str]]) -> None:
        self.cwd = "/"
        self.files: set[str] = set()
        self.dirs: set[str] = {"/"}
        self.archives = archives
        self.removed_existing: list[str] = []

    def path(self, p: str) -> str:
        return posixpath.normpath(posixpath.join(self.cwd, p))

    def run(self, argv: list[str]) -> None:
        name, args = argv[0], argv[1:]
        if name == "wget":
            self.files.add(self.path(args[args.index("-O") + 1]))
        elif name == "tar":
            archive = self.path(args[1] if args[0].endswith("f") else args[args.index("-f") + 1])
            if archive not in self.files:
                raise AssertionError(f"tar reads missing {archive}")
            for d in self.archives[posixpath.basename(archive)]:
                self.dirs.add(self.path(d))
        elif name == "mkdir":
            self.dirs.update(self.path(a) for a in args if not a.startswith("-"))
        elif name == "cd":
            target = self.path(args[0])
            if target not in self.dirs:
                raise AssertionError(f"cd into missing {target}")
            self.cwd = target
        elif name == "rm":
            for a in args:
                if a.startswith("-"):
                    continue
                target = self.path(a)
                if target not in self.files:
                    raise AssertionError(f"rm of missing {target}")
                self.files.discard(target)
                self.removed_existing.append(target)

    def run_chain(self, script: str) -> None:
        words = shlex.split(script.replace("\\\n", " "))
        chain: list[list[str]] = [[]]
        for w in words:
            if w == "&&":
                chain.append([])
            else:
                chain[-1].append(w)
        for argv in chain:
            self.run(argv)


def _run_payload(text: str) -> str:
    return text.split("RUN ", 1)[1]


def test_gsl_build_archive_removed_before_changing_directory() -> None:
    original = read(SCENARIOS / "gsl_build.Dockerfile")
    out = repaired(original)
    sim = PathSimulator({"gsl.tgz": ["gsl-1.16"]})
    sim.run_chain(_run_payload(out))
    assert sim.removed_existing == ["/gsl.tgz"]
    assert "tar -zxf gsl.tgz && rm gsl.tgz && mkdir gsl" in out.replace("\\\n", "").replace("  ", " ")

    # appending at the end of the RUN would remove a file that is no longer there
    naive = original.rstrip("\n") + " && rm gsl.tgz\n"
    with pytest.raises(AssertionError, match="rm of missing"):
        PathSimulator({"gsl.tgz": ["gsl-1.16"]}).run_chain(_run_payload(naive))


_dirs = st.lists(st.sampled_from(["src", "build", "pkg-1.0", "out"]), min_size=0, max_size=3, unique=True)


@settings(max_examples=40)
@given(_dirs, _dirs, st.sampled_from(["a.tgz", "dl/b.tar.gz", "c.tar"]))
def test_archive_removal_is_valid_under_directory_changes(before: list[str], after: list[str], archive: str) -> None:
    steps = [f"mkdir {d} && cd {d}" for d in before]
    steps += [f"wget -O {archive} https://example.com/x", f"tar -xf {archive}"]
    steps += [f"mkdir {d} && cd {d}" for d in after]
    text = "FROM debian\nRUN " + " && ".join(steps) + "\n"
    out = repaired(text)
    sim = PathSimulator({posixpath.basename(archive): ["pkg"]})
    sim.run_chain(_run_payload(out))
    assert len(sim.removed_existing) == 1


# -- skips ------------------------------------------------------------------------


def test_install_inside_if_body_is_skipped_as_unsupported() -> None:
    text = "FROM debian\nRUN if [ -f x ]; then apt-get install -y --no-install-recommends x && rm -rf /var/lib/apt/lists/*; fi\n"
    report = PIPELINE.process_text(text, "Dockerfile", "repair")
    assert [(s.rule_id, s.reason) for s in report.repairs.skipped] == [("aptGetUpdatePrecedesInstall", SKIPPED_UNSUPPORTED)]
    assert report.repaired == text
    assert [s.rule_id for s in report.residual] == ["aptGetUpdatePrecedesInstall"]


def test_update_after_install_is_skipped() -> None:
    text = "FROM debian\nRUN apt-get install -y --no-install-recommends x && apt-get update && rm -rf /var/lib/apt/lists/*\n"
    report = PIPELINE.process_text(text, "Dockerfile", "repair")
    assert [s.reason for s in report.repairs.skipped] == [SKIPPED_UNSUPPORTED]


def test_mktemp_without_variable_is_skipped_as_non_literal() -> None:
    report = PIPELINE.process_text("FROM debian\nRUN cd $(mktemp -d) && make\n", "Dockerfile", "repair")
    assert [s.reason for s in report.repairs.skipped] == [SKIPPED_NON_LITERAL]


def test_second_rewrite_of_a_claimed_node_is_a_conflict() -> None:
    root = parse("FROM debian\nRUN wget http://example.com/a\n").root
    enrich(root)
    (report,) = evaluate(root, default_rules())
    claimed: set[int] = set()
    first, _ = _repair(report, root, RepairConfig(), claimed)
    second, _ = _repair(report, root, RepairConfig(), claimed)
    assert type(first).__name__ == "AppliedRepair"
    assert second.reason == SKIPPED_CONFLICT


def test_replaced_target_is_a_conflict() -> None:
    root = parse("FROM debian\nRUN gpg --batch --keyserver pgp.mit.edu --recv-keys ABC\n").root
    enrich(root)
    (report,) = evaluate(root, default_rules())
    assert type(repair_one(report, root)).__name__ == "AppliedRepair"
    assert repair_one(report, root).reason == SKIPPED_CONFLICT


def test_keyserver_is_configurable() -> None:
    text = "FROM debian\nRUN gpg --batch --keyserver=pgp.mit.edu --recv-keys ABC\n"
    default = Pipeline().process_text(text, "Dockerfile", "repair")
    assert "--keyserver=hkp://ha.pool.sks-keyservers.net" in default.repaired
    custom = Pipeline(config=RepairConfig("keyserver.ubuntu.com")).process_text(text, "Dockerfile", "repair")
    assert "--keyserver=keyserver.ubuntu.com" in custom.repaired
    assert custom.residual == []


def test_cleanups_join_with_and() -> None:
    out = repaired("FROM debian\nRUN apt-get update && apt-get install -y --no-install-recommends x\n")
    assert out.endswith("apt-get install -y --no-install-recommends x && rm -rf /var/lib/apt/lists/*\n")


def test_sudo_cleanup_keeps_sudo() -> None:
    out = repaired("FROM debian\nRUN sudo yum install -y httpd\n")
    assert out == "FROM debian\nRUN sudo yum install -y httpd && sudo rm -rf /var/cache/yum\n"


def test_repair_result_reparses_to_same_tree_shape_as_printed() -> None:
    for path in POSITIVES:
        root = parse(read(path)).root
        enrich(root)
        repair_all(root)
        text = print_dockerfile(root)
        assert print_dockerfile(parse(text).root) == text


def test_report_counts_by_rule_over_positives() -> None:
    applied: Counter[str] = Counter()
    for path in POSITIVES:
        report = PIPELINE.process_text(read(path), str(path), "repair")
        applied.update(a.rule_id for a in report.repairs.applied if a.rule_id == path.parent.name)
    assert set(applied) == set(RULE_IDS)
    assert all(v == 3 for v in applied.values())
