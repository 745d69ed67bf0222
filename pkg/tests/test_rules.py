from __future__ import annotations

import json
import re
import shlex
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dockrepair.enricher import enrich
from dockrepair.repair.templates import TEMPLATES
from dockrepair.rules import (
    RULE_IDS,
    SmellReport,
    UnknownRuleId,
    analyze,
    default_rules,
    evaluate,
    is_plain_http_url,
    select_rules,
)
from dockrepair.tree import NodeKind, fingerprint

from support import GROUND_TRUTH, RULE_FIXTURES, corpus_files, ground_truth_files, parse, read

K = NodeKind
ALL_RULES = default_rules()


def reports_for(text: str, rules=None) -> list[SmellReport]:
    root = parse(text).root
    enrich(root)
    return evaluate(root, ALL_RULES if rules is None else rules)


def ids(text: str) -> Counter[str]:
    return Counter(r.rule_id for r in reports_for(text))


def _fixtures(kind: str) -> list[tuple[str, str]]:
    return [(p.parent.name, p.name) for p in sorted(RULE_FIXTURES.glob(f"*/{kind}*.Dockerfile"))]


# -- catalog ------------------------------------------------------------------


def test_catalog_has_the_twenty_five_named_rules() -> None:
    assert len(RULE_IDS) == 25 == len(set(RULE_IDS))
    assert sorted(p.name for p in RULE_FIXTURES.iterdir()) == sorted(RULE_IDS)


def test_every_repairable_rule_has_a_template() -> None:
    for rule in ALL_RULES:
        assert not rule.repairable or rule.id in TEMPLATES


def test_every_rule_has_positives_negatives_and_a_sudo_positive() -> None:
    for rid in RULE_IDS:
        folder = RULE_FIXTURES / rid
        assert len(list(folder.glob("positive*.Dockerfile"))) >= 2
        assert len(list(folder.glob("negative*.Dockerfile"))) >= 2
        assert "sudo " in read(folder / "positive2.Dockerfile")


@pytest.mark.parametrize("rule_id,name", _fixtures("positive"))
def test_positive_fixture_reports_its_rule_once(rule_id: str, name: str) -> None:
    assert ids(read(RULE_FIXTURES / rule_id / name))[rule_id] == 1


@pytest.mark.parametrize("rule_id,name", _fixtures("negative"))
def test_negative_fixture_is_silent_for_its_rule(rule_id: str, name: str) -> None:
    assert ids(read(RULE_FIXTURES / rule_id / name))[rule_id] == 0


def test_npm_cache_clean_force_required() -> None:
    assert ids("FROM node\nRUN npm cache clean\n") == Counter({"npmCacheCleanUseForce": 1})
    assert ids("FROM node\nRUN npm cache clean --force\n") == Counter()


def test_empty_dockerfile_has_no_reports() -> None:
    assert reports_for("") == []
    assert reports_for("FROM scratch\n") == []


def test_reports_carry_node_spans_in_order() -> None:
    for path in ground_truth_files():
        reports = reports_for(read(path))
        assert [r.span.start for r in reports] == sorted(r.span.start for r in reports)
        for r in reports:
            assert r.span == r.node.span
            assert r.instruction.span.start <= r.span.start < r.instruction.span.end


# -- ground truth -------------------------------------------------------------

ANNOTATIONS = json.loads((GROUND_TRUTH / "annotations.json").read_text())


def test_ground_truth_corpus_size() -> None:
    assert len(ANNOTATIONS) == 40
    assert sorted(ANNOTATIONS) == [p.name for p in ground_truth_files()]


@pytest.mark.parametrize("name", sorted(ANNOTATIONS))
def test_analyze_equals_manual_annotations(name: str) -> None:
    found = Counter((r.instruction_line, r.rule_id) for r in reports_for(read(GROUND_TRUTH / name)))
    expected = Counter((a["line"], a["rule"]) for a in ANNOTATIONS[name])
    assert found == expected


# -- http literal check -------------------------------------------------------


def _http_oracle(word: str) -> bool:
    if "$" in word.split("://")[0] or word.startswith(("$", '"$')):
        return False
    tokens = shlex.split(word)
    return len(tokens) == 1 and re.match(r"^http://", tokens[0], re.IGNORECASE) is not None


_schemes = st.sampled_from(["http://", "https://", "ftp://", "HTTP://", "Http://", "file://", "", "http:/"])
_hosts = st.from_regex(r"[a-z]{1,8}\.(com|org|net)/[a-z0-9._-]{0,10}", fullmatch=True)
_prefixes = st.sampled_from(["", "$MIRROR/", "${BASE}", "$HTTPS_URL", "$(cat url)"])
_quotes = st.sampled_from(["", "'", '"'])


@given(_prefixes, _schemes, _hosts, _quotes)
def test_plain_http_check_matches_literal_regex_oracle(prefix: str, scheme: str, host: str, quote: str) -> None:
    if prefix.startswith("$(") and quote == "'":
        quote = '"'
    word = f"{quote}{prefix}{scheme}{host}{quote}"
    root = parse(f"FROM alpine\nRUN wget {word}\n").root
    enrich(root)
    (arg,) = [n for n in root.iter() if "WGET-URL" in n.annotations]
    expected = False if prefix else _http_oracle(word)
    assert is_plain_http_url(arg) is expected


@pytest.mark.parametrize(
    "word,expected",
    [
        ("ftp://google.com/all_data.zip", False),
        ("https://x", False),
        ("$HTTPS_URL", False),
        ("http://example.com/a", True),
        ("'http://example.com/a'", True),
    ],
)
def test_plain_http_examples(word: str, expected: bool) -> None:
    assert (ids(f"FROM alpine\nRUN wget {word}\n")["wgetUseHttpsUrl"] == 1) is expected


# -- properties -----------------------------------------------------------------


def _sudo_wrapped(text: str) -> str:
    root = parse(text).root
    starts = []
    for node in root.iter():
        if node.kind is not K.BashCommand or node.parent.kind is K.BashCommand:
            continue
        if node.children and node.children[0].kind is K.BashCommandName:
            starts.append(node.span.start)
    for pos in sorted(starts, reverse=True):
        text = text[:pos] + "sudo " + text[pos:]
    return text


@pytest.mark.parametrize("rule_id,name", [f for f in _fixtures("positive") if f[1] != "positive2.Dockerfile"])
def test_sudo_wrapping_preserves_reports(rule_id: str, name: str) -> None:
    text = read(RULE_FIXTURES / rule_id / name)
    wrapped = _sudo_wrapped(text)
    assert wrapped.count("sudo ") > text.count("sudo ")
    assert ids(wrapped) == ids(text)


FLAG_EDITS = {
    "npmCacheCleanUseForce": (r"npm cache clean", " --force"),
    "aptGetInstallUseY": (r"apt-get (-\S+ )*install", " -y"),
    "aptGetInstallUseNoRec": (r"apt-get (-\S+ )*install", " --no-install-recommends"),
    "pipUseNoCacheDir": (r"\bpip[0-9.]* install", " --no-cache-dir"),
    "apkAddUseNoCache": (r"apk add", " --no-cache"),
    "curlUseFlagF": (r"\bcurl(?= )", " -f"),
    "curlUseFlagL": (r"\bcurl(?= )", " -L"),
    "gpgUseBatchFlag": (r"\bgpg2?(?= )", " --batch"),
    "gemUpdateNoDocument": (r"gem update", " --no-document"),
    "yumInstallForceYes": (r"yum install", " -y"),
    "configureShouldUseBuildFlag": (r"\./configure", " --build=x86_64-linux-gnu"),
}


@pytest.mark.parametrize("rule_id,name", [f for f in _fixtures("positive") if f[0] in FLAG_EDITS])
def test_adding_the_flag_removes_only_that_report(rule_id: str, name: str) -> None:
    text = read(RULE_FIXTURES / rule_id / name)
    pattern, flag = FLAG_EDITS[rule_id]
    fixed = re.sub(pattern, lambda m: m.group(0) + flag, text)
    assert fixed != text
    before = Counter((r.rule_id, r.instruction_line) for r in reports_for(text))
    after = Counter((r.rule_id, r.instruction_line) for r in reports_for(fixed))
    removed = before - after
    assert sum(removed.values()) == 1 and next(iter(removed))[0] == rule_id
    assert after == before - removed


def test_analysis_is_deterministic_and_order_independent() -> None:
    for path in ground_truth_files() + corpus_files()[:30]:
        text = read(path)
        first = [r.key() for r in reports_for(text)]
        assert [r.key() for r in reports_for(text)] == first
        assert [r.key() for r in reports_for(text, list(reversed(ALL_RULES)))] == first


def test_analysis_does_not_touch_the_tree() -> None:
    for path in ground_truth_files():
        root = parse(read(path)).root
        enrich(root)
        before = fingerprint(root)
        evaluate(root, ALL_RULES)
        assert fingerprint(root) == before


GT_TEXTS = [read(p) for p in ground_truth_files()]


@given(st.sets(st.sampled_from(RULE_IDS)), st.sets(st.sampled_from(RULE_IDS)), st.sampled_from(GT_TEXTS))
def test_adding_rules_only_adds_reports(a: set[str], b: set[str], text: str) -> None:
    small = {r.key() for r in reports_for(text, select_rules(sorted(a)))}
    large = {r.key() for r in reports_for(text, select_rules(sorted(a | b)))}
    assert small <= large
    everything = reports_for(text)
    assert small == {r.key() for r in everything if r.rule_id in a}


def test_cleanup_inside_if_body_does_not_count() -> None:
    text = "FROM debian\nRUN apt-get update && apt-get install -y --no-install-recommends x && if true; then rm -rf /var/lib/apt/lists/*; fi\n"
    assert ids(text) == Counter({"aptGetInstallThenRmAptLists": 1})


def test_cleanup_in_a_later_run_does_not_count() -> None:
    text = "FROM debian\nRUN apt-get update && apt-get install -y --no-install-recommends x\nRUN rm -rf /var/lib/apt/lists/*\n"
    assert ids(text) == Counter({"aptGetInstallThenRmAptLists": 1})


def test_right_side_of_or_does_not_satisfy_before() -> None:
    text = "FROM debian\nRUN true || apt-get update; apt-get install -y --no-install-recommends x && rm -rf /var/lib/apt/lists/*\n"
    assert ids(text) == Counter({"aptGetUpdatePrecedesInstall": 1})


def test_onbuild_run_is_analyzed_but_cmd_is_not() -> None:
    assert ids("FROM node\nONBUILD RUN npm cache clean\n") == Counter({"npmCacheCleanUseForce": 1})
    assert ids("FROM node\nCMD npm cache clean\n") == Counter()


def test_variable_tar_archive_is_not_reported() -> None:
    assert ids('FROM debian\nRUN tar -xzf "$ARCHIVE" -C /opt\n')["tarSomethingRmTheSomething"] == 0
    assert ids("FROM debian\nRUN tar -xzf a.tgz -C /opt\n")["tarSomethingRmTheSomething"] == 1


def test_configured_keyserver_is_accepted() -> None:
    text = "FROM debian\nRUN gpg --batch --keyserver hkps://keys.openpgp.org --recv-keys ABC\n"
    assert ids(text)["gpgUseHaPools"] == 1
    root = parse(text).root
    enrich(root)
    assert evaluate(root, default_rules("hkps://keys.openpgp.org")) == []


def test_select_rules_by_id() -> None:
    assert [r.id for r in select_rules(["curlUseFlagF"])] == ["curlUseFlagF"]
    assert len(select_rules(exclude=["curlUseFlagF"])) == 24
    assert select_rules([]) == []
    with pytest.raises(UnknownRuleId):
        select_rules(["noSuchRule"])
    with pytest.raises(UnknownRuleId):
        select_rules(exclude=["noSuchRule"])


def test_analyze_accepts_ids() -> None:
    root = parse("FROM node\nRUN npm cache clean && curl http://x\n").root
    enrich(root)
    assert [r.rule_id for r in analyze(root, ["npmCacheCleanUseForce"])] == ["npmCacheCleanUseForce"]
    with pytest.raises(UnknownRuleId):
        analyze(root, ["nope"])
