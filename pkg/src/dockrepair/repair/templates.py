"""Per-rule tree mutations that remove a reported smell."""

from __future__ import annotations

import re
import shlex
from collections.abc import Callable
from dataclasses import dataclass, field

from ..enricher.enrich import command_args, command_name_node
from ..parser.shell import parse_shell
from ..rules.catalog import (
    DEFAULT_KEYSERVER,
    _HEX_SEPARATOR,
    _PLACEHOLDER,
    asc_operand,
    is_plain_http_url,
    mktemp_variable,
    tagged_words,
    tar_archive,
    usr_src_paths,
    usr_src_root,
)
from ..rules.engine import SmellReport, nearest_command
from ..rules.ordering import evaluate_ordering
from ..tree import AstNode, NodeKind

K = NodeKind

SKIPPED_UNSUPPORTED = "SkippedUnsupported"
SKIPPED_NON_LITERAL = "SkippedNonLiteral"
SKIPPED_CONFLICT = "SkippedConflict"

_LISTS = frozenset({K.BashStatementList, K.BashIfCondition, K.BashIfBody, K.BashElseBody})


class RepairSkipped(Exception):
    reason = SKIPPED_UNSUPPORTED

    def __init__(self, detail: str) -> None:
        super().__init__(detail)
        self.detail = detail


class SkippedUnsupported(RepairSkipped):
    reason = SKIPPED_UNSUPPORTED


class SkippedNonLiteral(RepairSkipped):
    reason = SKIPPED_NON_LITERAL


class SkippedConflict(RepairSkipped):
    reason = SKIPPED_CONFLICT


@dataclass(frozen=True)
class RepairConfig:
    keyserver: str = DEFAULT_KEYSERVER


@dataclass
class RepairContext:
    """What a template needs besides the report; collects the nodes it rewrote."""

    report: SmellReport
    config: RepairConfig
    claimed: set[int] = field(default_factory=set)
    touched: list[AstNode] = field(default_factory=list)

    @property
    def run(self) -> AstNode:
        node = self.report.node
        for anc in node.ancestors():
            if anc.kind is K.Run:
                return anc
        raise SkippedUnsupported("trigger is not inside a RUN instruction")

    def claim(self, node: AstNode) -> None:
        if id(node) in self.claimed:
            raise SkippedConflict("node already rewritten by another repair in this pass")
        self.claimed.add(id(node))
        self.touched.append(node)


@dataclass(frozen=True)
class RepairTemplate:
    rule_id: str
    action: str
    apply: Callable[[RepairContext], str] = field(compare=False)
    parameter: str = ""


# -- synthetic nodes ---------------------------------------------------------


def _synthesize(node: AstNode) -> AstNode:
    for n in node.iter():
        n.span = None
        n.synthetic = True
        n.modified = True
        n.layout = ()
        n.annotations = set()
    node.parent = None
    return node


def parse_command(text: str) -> AstNode:
    """A detached synthetic command parsed from ``text``."""
    script = parse_shell(text)
    items = script.children[0].children if script.children else []
    if len(items) != 1 or items[0].kind is not K.BashCommand:
        raise ValueError(f"not a single simple command: {text!r}")
    return _synthesize(items[0])


def parse_word(text: str) -> AstNode:
    cmd = parse_command("x " + text)
    args = command_args(cmd)
    if len(args) != 1:
        raise ValueError(f"not a single word: {text!r}")
    word = args[0]
    cmd.children.remove(word)
    word.parent = None
    return word


def operator_and() -> AstNode:
    return AstNode(K.BashOperatorAnd, value="&&")


# -- locating ----------------------------------------------------------------


def trigger_command(ctx: RepairContext) -> AstNode:
    cmd = nearest_command(ctx.report.node)
    if cmd is None:
        raise SkippedUnsupported("trigger is not part of a command")
    return cmd


def statement_item(cmd: AstNode) -> AstNode:
    """The list element a command belongs to (outermost wrapper command)."""
    item = cmd
    while item.parent is not None and item.parent.kind is K.BashCommand:
        item = item.parent
    if item.parent is None or item.parent.kind not in _LISTS:
        raise SkippedUnsupported("command is not a statement of a command list")
    return item


def under_sudo(cmd: AstNode) -> bool:
    from ..words import literal_text

    for anc in cmd.ancestors():
        if anc.kind is not K.BashCommand:
            break
        name = command_name_node(anc)
        if name is not None and literal_text(name) == "sudo":
            return True
    return False


def run_list(run: AstNode) -> AstNode:
    for child in run.children:
        if child.kind is K.BashScript and child.children and child.children[0].kind is K.BashStatementList:
            return child.children[0]
    raise SkippedUnsupported("RUN payload is not a parsed shell script")


def _sudo_prefix(cmd: AstNode) -> str:
    return "sudo " if under_sudo(cmd) else ""


# -- actions -----------------------------------------------------------------


def insert_flag(flag: str) -> Callable[[RepairContext], str]:
    def apply(ctx: RepairContext) -> str:
        cmd = trigger_command(ctx)
        kids = cmd.children
        subs = [a for a in command_args(cmd) if "SUBCOMMAND" in a.annotations]
        anchor = subs[-1] if subs else command_name_node(cmd)
        if anchor is None:
            raise SkippedUnsupported("command has no name")
        pos = kids.index(anchor) + 1
        while pos < len(kids) and kids[pos].synthetic:
            pos += 1  # keep earlier inserted flags first
        cmd.add_child(parse_word(flag), pos)
        ctx.touched.append(cmd)
        return f"inserted {flag}"

    return apply


def _append_position(items: list[AstNode]) -> int:
    pos = len(items)
    while pos > 0 and (
        items[pos - 1].kind is K.Comment
        or (items[pos - 1].kind is K.BashOperatorSemicolon and items[pos - 1].value in (";", "\n"))
    ):
        pos -= 1
    if pos == 0:
        raise SkippedUnsupported("RUN has no statements to extend")
    last = items[pos - 1]
    if last.kind in (K.BashOperatorSemicolon, K.BashOperatorAnd, K.BashOperatorOr, K.BashPipe):
        raise SkippedUnsupported("RUN ends with a background or dangling operator")
    return pos


def append_cleanup(text: str | Callable[[RepairContext], str]) -> Callable[[RepairContext], str]:
    def apply(ctx: RepairContext) -> str:
        command_text = text(ctx) if callable(text) else text
        command_text = _sudo_prefix(trigger_command(ctx)) + command_text
        lst = run_list(ctx.run)
        pos = _append_position(lst.children)
        lst.add_child(operator_and(), pos)
        lst.add_child(parse_command(command_text), pos + 1)
        ctx.touched.append(lst)
        return f"appended && {command_text}"

    return apply


def insert_after(text: Callable[[RepairContext], str]) -> Callable[[RepairContext], str]:
    def apply(ctx: RepairContext) -> str:
        cmd = trigger_command(ctx)
        command_text = _sudo_prefix(cmd) + text(ctx)
        item = statement_item(cmd)
        lst = item.parent
        i = lst.children.index(item)
        following = lst.children[i + 1] if i + 1 < len(lst.children) else None
        if following is not None and following.kind is K.BashPipe:
            raise SkippedUnsupported("command feeds a pipeline")
        lst.add_child(operator_and(), i + 1)
        lst.add_child(parse_command(command_text), i + 2)
        ctx.touched.append(lst)
        return f"inserted && {command_text} after the command"

    return apply


def _first_literal_leaf(word: AstNode) -> AstNode | None:
    for node in word.iter():
        if node.kind is K.BashLiteral:
            return node
        if node.kind in (K.BashVariable, K.BashCommandSubstitution, K.BashOpaque):
            return None
    return None


def rewrite_scheme(ctx: RepairContext) -> str:
    word = ctx.report.node
    leaf = _first_literal_leaf(word)
    if leaf is not None and id(leaf) in ctx.claimed:
        raise SkippedConflict("node already rewritten by another repair in this pass")
    if not is_plain_http_url(word):
        raise SkippedNonLiteral("URL scheme is not literal")
    raw = (leaf.value or "") if leaf is not None else ""
    m = re.match(r"(--url=)?(http)://", raw, re.IGNORECASE)
    if leaf is None or m is None:
        raise SkippedUnsupported("scheme is split across word parts")
    ctx.claim(leaf)
    leaf.set_value(raw[: m.start(2)] + "https" + raw[m.end(2):])
    return "rewrote http:// to https://"


def double_checksum_space(ctx: RepairContext) -> str:
    cmd = trigger_command(ctx)
    words = tagged_words(cmd, "ECHO-ARG")
    if len(words) != 1:
        raise SkippedUnsupported("hash and file name are separate echo arguments")
    from ..words import template_text

    text = template_text(words[0], _PLACEHOLDER)
    m = _HEX_SEPARATOR.match(text or "")
    if m is None:
        raise SkippedNonLiteral("checksum line is not literal")
    target = m.end() - 1
    offset = 0
    for leaf in _word_leaves(words[0]):
        if leaf.kind is K.BashVariable:
            offset += 1
            continue
        raw = leaf.value or ""
        if offset <= target < offset + len(raw):
            if "\\" in raw:
                raise SkippedUnsupported("escaped characters in checksum line")
            j = target - offset
            ctx.claim(leaf)
            leaf.set_value(raw[:j] + " " + raw[j:])
            return "doubled the space after the hash"
        offset += len(raw)
    raise SkippedUnsupported("separator not found in a literal part")


def _word_leaves(word: AstNode) -> list[AstNode]:
    return [n for n in word.iter() if not n.children and n.kind in (K.BashLiteral, K.BashVariable)]


def set_keyserver(ctx: RepairContext) -> str:
    word = ctx.report.node
    ks = ctx.config.keyserver
    inline = "GPG-KEYSERVER-FLAG" in word.annotations
    new = parse_word(f"--keyserver={ks}" if inline else shlex.quote(ks))
    ctx.claim(word)
    word.replace(new)
    ctx.touched.append(new)
    return f"keyserver set to {ks}"


def merge_update(ctx: RepairContext) -> str:
    install = trigger_command(ctx)
    order = evaluate_ordering(ctx.run)
    entry = next((o for o in order if o.node is install), None)
    if entry is None or not entry.guaranteed:
        raise SkippedUnsupported("install runs conditionally")
    if any(o.guaranteed and "APT-GET-UPDATE" in o.node.annotations for o in order):
        raise SkippedUnsupported("update already runs in this RUN, after the install")
    item = statement_item(install)
    lst = item.parent
    i = lst.children.index(item)
    if (i > 0 and lst.children[i - 1].kind is K.BashPipe) or (
        i + 1 < len(lst.children) and lst.children[i + 1].kind is K.BashPipe
    ):
        raise SkippedUnsupported("install is part of a pipeline")
    text = _sudo_prefix(install) + "apt-get update"
    lst.add_child(parse_command(text), i)
    lst.add_child(operator_and(), i + 1)
    ctx.touched.append(lst)
    return f"prepended {text} &&"


# -- parameter helpers -------------------------------------------------------


def _archive_rm(ctx: RepairContext) -> str:
    archive = tar_archive(trigger_command(ctx))
    if archive is None:
        raise SkippedNonLiteral("archive operand is not literal")
    return f"rm {shlex.quote(archive)}"


def _asc_rm(ctx: RepairContext) -> str:
    asc = asc_operand(trigger_command(ctx))
    if asc is None:
        raise SkippedNonLiteral("signature operand is not literal")
    return f"rm {shlex.quote(asc)}"


def _usr_src_rm(ctx: RepairContext) -> str:
    roots = dict.fromkeys(usr_src_root(p) for p in usr_src_paths(trigger_command(ctx)))
    if not roots:
        raise SkippedNonLiteral("created path is not literal")
    return "rm -rf " + " ".join(shlex.quote(r) for r in roots)


def _mktemp_rm(ctx: RepairContext) -> str:
    name = mktemp_variable(trigger_command(ctx))
    if name is None:
        raise SkippedNonLiteral("mktemp result is not stored in a variable")
    return f'rm -rf "${name}"'


TEMPLATES: dict[str, RepairTemplate] = {
    t.rule_id: t
    for t in [
        RepairTemplate("npmCacheCleanUseForce", "insertFlag", insert_flag("--force"), "--force"),
        RepairTemplate("aptGetInstallUseY", "insertFlag", insert_flag("-y"), "-y"),
        RepairTemplate(
            "aptGetInstallUseNoRec", "insertFlag", insert_flag("--no-install-recommends"), "--no-install-recommends"
        ),
        RepairTemplate("pipUseNoCacheDir", "insertFlag", insert_flag("--no-cache-dir"), "--no-cache-dir"),
        RepairTemplate("apkAddUseNoCache", "insertFlag", insert_flag("--no-cache"), "--no-cache"),
        RepairTemplate("curlUseFlagF", "insertFlag", insert_flag("-f"), "-f"),
        RepairTemplate("curlUseFlagL", "insertFlag", insert_flag("-L"), "-L"),
        RepairTemplate("gpgUseBatchFlag", "insertFlag", insert_flag("--batch"), "--batch"),
        RepairTemplate("gemUpdateNoDocument", "insertFlag", insert_flag("--no-document"), "--no-document"),
        RepairTemplate("yumInstallForceYes", "insertFlag", insert_flag("-y"), "-y"),
        RepairTemplate(
            "configureShouldUseBuildFlag",
            "insertFlag",
            insert_flag('--build="$(gcc -dumpmachine)"'),
            '--build="$(gcc -dumpmachine)"',
        ),
        RepairTemplate(
            "aptGetInstallThenRmAptLists",
            "appendCleanupCommand",
            append_cleanup("rm -rf /var/lib/apt/lists/*"),
            "rm -rf /var/lib/apt/lists/*",
        ),
        RepairTemplate(
            "yumInstallRmVarCacheYum", "appendCleanupCommand", append_cleanup("rm -rf /var/cache/yum"), "rm -rf /var/cache/yum"
        ),
        RepairTemplate(
            "npmCacheCleanAfterInstall",
            "appendCleanupCommand",
            append_cleanup("npm cache clean --force"),
            "npm cache clean --force",
        ),
        RepairTemplate(
            "yarnCacheCleanAfterInstall", "appendCleanupCommand", append_cleanup("yarn cache clean"), "yarn cache clean"
        ),
        RepairTemplate(
            "gemUpdateSystemRmRootGem", "appendCleanupCommand", append_cleanup("rm -rf /root/.gem"), "rm -rf /root/.gem"
        ),
        RepairTemplate("mkdirUsrSrcThenRemove", "appendCleanupCommand", append_cleanup(_usr_src_rm), "rm -rf <dir>"),
        RepairTemplate("rmRecursiveAfterMktempD", "appendCleanupCommand", append_cleanup(_mktemp_rm), 'rm -rf "$<var>"'),
        RepairTemplate("tarSomethingRmTheSomething", "insertCommandAfter", insert_after(_archive_rm), "rm <archive>"),
        RepairTemplate("gpgVerifyAscRmAsc", "insertCommandAfter", insert_after(_asc_rm), "rm <signature>"),
        RepairTemplate("curlUseHttpsUrl", "rewriteLiteral", rewrite_scheme, "http:// -> https://"),
        RepairTemplate("wgetUseHttpsUrl", "rewriteLiteral", rewrite_scheme, "http:// -> https://"),
        RepairTemplate("sha256sumEchoOneSpaces", "rewriteLiteral", double_checksum_space, "one space -> two spaces"),
        RepairTemplate("gpgUseHaPools", "rewriteLiteral", set_keyserver, "keyserver"),
        RepairTemplate("aptGetUpdatePrecedesInstall", "mergeIntoSequence", merge_update, "apt-get update &&"),
    ]
}
