"""The shipped smell rules and the predicates they rely on."""

from __future__ import annotations

import fnmatch
import posixpath
import re
from collections.abc import Iterable

from ..enricher.enrich import command_args
from ..query import Q, Value
from ..tree import AstNode, NodeKind
from ..words import literal_prefix, literal_text, template_text, variables_in
from .engine import SmellRule, UnknownRuleId, after_node, before_node, in_node

K = NodeKind

HA_POOL = "ha.pool.sks-keyservers.net"
DEFAULT_KEYSERVER = f"hkp://{HA_POOL}"

_HEX_SEPARATOR = re.compile(r"^(?:[0-9a-fA-F]{32,128}|\0) (?=[^ *])")
_PLACEHOLDER = "\0"


# -- word helpers ------------------------------------------------------------


def tagged_words(cmd: AstNode, tag: str) -> list[AstNode]:
    return [a for a in command_args(cmd) if tag in a.annotations]


def url_prefix(word: AstNode) -> str:
    prefix = literal_prefix(word)
    if prefix.startswith("--url="):
        prefix = prefix[len("--url="):]
    return prefix


def is_plain_http_url(word: AstNode) -> bool:
    """True when the word visibly starts with ``http://``.

    Only the literal prefix counts, so ``$HTTPS_URL`` or ``"$MIRROR/x"``
    never match.
    """
    return url_prefix(word).lower().startswith("http://")


def _inline_value(word: AstNode, text: str, long_names: tuple[str, ...], short: str) -> str:
    for name in long_names:
        if text.startswith(name + "="):
            return text[len(name) + 1:]
    if text.startswith("-") and not text.startswith("--") and short in text[1:-1]:
        return text[text.index(short, 1) + 1:]
    return text


def tar_archive(cmd: AstNode) -> str | None:
    """Literal archive operand of a tar invocation, or None."""
    for word in tagged_words(cmd, "TAR-ARCHIVE"):
        text = literal_text(word)
        if text is None:
            return None
        if "TAR-FILE-FLAG" in word.annotations:
            text = _inline_value(word, text, ("--file",), "f")
        return text or None
    return None


def is_tar_extract_of_file(cmd: AstNode) -> bool:
    if not tagged_words(cmd, "TAR-EXTRACT-FLAG"):
        return False
    archive = tar_archive(cmd)
    return archive is not None and archive != "-"


def _normal(path: str) -> str:
    if not path:
        return path
    norm = posixpath.normpath(path)
    return norm[2:] if norm.startswith("./") else norm


def path_covers(rm_path: str, target: str) -> bool:
    """Whether removing ``rm_path`` removes ``target`` (same spelling assumed)."""
    rm_path, target = _normal(rm_path), _normal(target)
    if not rm_path or not target:
        return False
    if rm_path == target or fnmatch.fnmatchcase(target, rm_path):
        return True
    return target.startswith(rm_path.rstrip("/") + "/")


def rm_paths(cmd: AstNode) -> list[str]:
    return [t for t in (literal_text(w) for w in tagged_words(cmd, "RM-PATH")) if t]


def rm_removes(cmd: AstNode, target: str) -> bool:
    if "RM" not in cmd.annotations:
        return False
    return any(path_covers(p, target) for p in rm_paths(cmd))


def usr_src_paths(cmd: AstNode) -> list[str]:
    out = []
    for word in tagged_words(cmd, "MKDIR-PATH"):
        text = literal_text(word)
        if text and _normal(text).startswith("/usr/src/"):
            out.append(_normal(text))
    return out


def usr_src_root(path: str) -> str:
    """``/usr/src/php/ext`` -> ``/usr/src/php``."""
    parts = _normal(path).split("/")
    return "/".join(parts[:4])


def asc_operand(cmd: AstNode) -> str | None:
    for word in tagged_words(cmd, "GPG-OPERAND"):
        text = literal_text(word)
        if text and text.endswith(".asc"):
            return text
    return None


_DECLARERS = frozenset({"export", "local", "declare", "readonly", "typeset"})


def mktemp_variable(cmd: AstNode) -> str | None:
    """Variable a ``$(mktemp -d)`` result is stored in, when that is visible."""
    sub = next((a for a in cmd.ancestors() if a.kind is K.BashCommandSubstitution), None)
    if sub is None:
        return None
    word = sub.parent
    while word is not None and word.kind not in (K.BashAssignment, K.BashCommandArgs):
        if word.kind is K.BashCommand:
            return None
        word = word.parent
    if word is None or not word.children:
        return None
    if word.kind is K.BashCommandArgs:
        owner = word.parent
        name_word = next((c for c in owner.children if c.kind is K.BashCommandName), None) if owner else None
        if name_word is None or literal_text(name_word) not in _DECLARERS:
            return None
    first = word.children[0]
    if first.kind is not K.BashLiteral or "=" not in (first.value or ""):
        return None
    name = first.value.split("=", 1)[0]
    return name if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name) else None


def removes_variable(cmd: AstNode, name: str) -> bool:
    if "RM" not in cmd.annotations or not tagged_words(cmd, "RM-RECURSIVE-FLAG"):
        return False
    for word in tagged_words(cmd, "RM-PATH"):
        text = template_text(word, _PLACEHOLDER)
        if name in variables_in(word) and text is not None and text.startswith(_PLACEHOLDER):
            return True
    return False


def echo_checksum_text(cmd: AstNode) -> str | None:
    args = tagged_words(cmd, "ECHO-ARG")
    texts = [template_text(a, _PLACEHOLDER) for a in args]
    if not texts or None in texts:
        return None
    return " ".join(texts)


def piped_into_checksum(cmd: AstNode) -> bool:
    while cmd.parent is not None and cmd.parent.kind is K.BashCommand:
        cmd = cmd.parent  # echo wrapped in sudo
    parent = cmd.parent
    if parent is None or parent.kind is not K.BashStatementList:
        return False
    items = parent.children
    i = cmd.index
    if i + 2 >= len(items) or items[i + 1].kind is not K.BashPipe:
        return False
    target = items[i + 2]
    while target.kind is K.BashCommand:
        if "SHA256SUM" in target.annotations:
            return bool(tagged_words(target, "SHA256SUM-CHECK-FLAG"))
        target = next((c for c in target.children if c.kind is K.BashCommand), None)
        if target is None:
            return False
    return False


def has_one_space_checksum(cmd: AstNode) -> bool:
    if not piped_into_checksum(cmd):
        return False
    text = echo_checksum_text(cmd)
    return text is not None and _HEX_SEPARATOR.match(text) is not None


def keyserver_text(word: AstNode) -> str | None:
    text = literal_text(word)
    if text is None:
        return None
    if text.startswith("--keyserver="):
        text = text[len("--keyserver="):]
    return text


def _host(url: str) -> str:
    return re.sub(r"^[a-z0-9+]+://", "", url.lower()).split("/")[0].split(":")[0]


# -- catalog -----------------------------------------------------------------


def default_rules(keyserver: str = DEFAULT_KEYSERVER) -> list[SmellRule]:
    """All 25 shipped rules. ``keyserver`` is also accepted by gpgUseHaPools."""
    accepted_hosts = {HA_POOL, _host(keyserver)}

    def bad_keyserver(word: AstNode) -> bool:
        text = keyserver_text(word)
        return text is not None and _host(text) not in accepted_hosts

    def removes_archive(trigger: AstNode, cmd: AstNode) -> bool:
        archive = tar_archive(trigger)
        return archive is not None and rm_removes(cmd, archive)

    def removes_usr_src(trigger: AstNode, cmd: AstNode) -> bool:
        if not tagged_words(cmd, "RM-RECURSIVE-FLAG"):
            return False
        return all(rm_removes(cmd, p) for p in usr_src_paths(trigger))

    def removes_asc(trigger: AstNode, cmd: AstNode) -> bool:
        asc = asc_operand(trigger)
        return asc is not None and rm_removes(cmd, asc)

    def removes_mktemp_dir(trigger: AstNode, cmd: AstNode) -> bool:
        name = mktemp_variable(trigger)
        return name is not None and removes_variable(cmd, name)

    def cleans_yum_cache(trigger: AstNode, cmd: AstNode) -> bool:
        return "YUM-CLEAN" in cmd.annotations or rm_removes(cmd, "/var/cache/yum")

    rm_lists = Q("RM", Q(Value(r"^/var/lib/apt/lists(/|\*|$)", tag="RM-PATH")))
    rm_root_gem = Q("RM", Q(Value(r"^(/root|~)/\.gem(/|\*|$)", tag="RM-PATH")))

    return [
        SmellRule(
            "aptGetInstallUseNoRec",
            Q("APT-GET-INSTALL"),
            in_node(Q("APT-GET-INSTALL-NO-INSTALL-RECOMMENDS-FLAG")),
            "apt-get install without --no-install-recommends pulls in unneeded packages",
        ),
        SmellRule(
            "aptGetInstallThenRmAptLists",
            Q("APT-GET-INSTALL"),
            after_node(rm_lists),
            "apt-get install is not followed by removing /var/lib/apt/lists",
        ),
        SmellRule(
            "curlUseFlagF",
            Q("CURL"),
            in_node(Q("CURL-FAIL-FLAG")),
            "curl without -f/--fail turns HTTP errors into saved error pages",
        ),
        SmellRule(
            "curlUseFlagL",
            Q("CURL"),
            in_node(Q("CURL-LOCATION-FLAG")),
            "curl without -L/--location does not follow redirects",
        ),
        SmellRule(
            "pipUseNoCacheDir",
            Q("PIP-INSTALL"),
            in_node(Q("PIP-INSTALL-NO-CACHE-DIR-FLAG")),
            "pip install without --no-cache-dir keeps the download cache in the image",
        ),
        SmellRule(
            "gpgUseBatchFlag",
            Q("GPG"),
            in_node(Q("GPG-BATCH-FLAG")),
            "gpg without --batch may prompt during the build",
        ),
        SmellRule(
            "aptGetUpdatePrecedesInstall",
            Q("APT-GET-INSTALL"),
            before_node(Q("APT-GET-UPDATE")),
            "apt-get install is not preceded by apt-get update in the same RUN",
        ),
        SmellRule(
            "npmCacheCleanAfterInstall",
            Q("NPM-INSTALL"),
            after_node(Q("NPM-CACHE-CLEAN")),
            "npm install is not followed by npm cache clean",
        ),
        SmellRule(
            "yarnCacheCleanAfterInstall",
            Q("YARN-INSTALL"),
            after_node(Q("YARN-CACHE-CLEAN")),
            "yarn install is not followed by yarn cache clean",
        ),
        SmellRule(
            "yumInstallRmVarCacheYum",
            Q("YUM-INSTALL"),
            after_node(Q(K.BashCommand), cleans_yum_cache),
            "yum install is not followed by removing /var/cache/yum",
        ),
        SmellRule(
            "curlUseHttpsUrl",
            Q("CURL-URL"),
            None,
            "curl downloads over plain http",
            guard=is_plain_http_url,
        ),
        SmellRule(
            "wgetUseHttpsUrl",
            Q("WGET-URL"),
            None,
            "wget downloads over plain http",
            guard=is_plain_http_url,
        ),
        SmellRule(
            "apkAddUseNoCache",
            Q("APK-ADD"),
            in_node(Q("APK-ADD-NO-CACHE-FLAG")),
            "apk add without --no-cache keeps the package index in the image",
        ),
        SmellRule(
            "configureShouldUseBuildFlag",
            Q("CONFIGURE"),
            in_node(Q("CONFIGURE-BUILD-FLAG")),
            "./configure without --build relies on guessing the build system type",
        ),
        SmellRule(
            "tarSomethingRmTheSomething",
            Q("TAR", Q("TAR-EXTRACT-FLAG"), Q("TAR-ARCHIVE")),
            after_node(Q("RM"), removes_archive),
            "the extracted archive is never removed",
            guard=is_tar_extract_of_file,
        ),
        SmellRule(
            "gpgUseHaPools",
            Q("GPG-KEYSERVER-VALUE"),
            None,
            f"gpg keyserver is not the {HA_POOL} pool",
            guard=bad_keyserver,
        ),
        SmellRule(
            "mkdirUsrSrcThenRemove",
            Q("MKDIR", Q(Value(r"^/usr/src/.", tag="MKDIR-PATH"))),
            after_node(Q("RM"), removes_usr_src),
            "a directory created under /usr/src is never removed",
            guard=lambda cmd: bool(usr_src_paths(cmd)),
        ),
        SmellRule(
            "aptGetInstallUseY",
            Q("APT-GET-INSTALL"),
            in_node(Q("APT-GET-INSTALL-Y-FLAG")),
            "apt-get install without -y waits for confirmation",
        ),
        SmellRule(
            "npmCacheCleanUseForce",
            Q("NPM-CACHE-CLEAN"),
            in_node(Q("NPM-F-FORCE")),
            "npm cache clean refuses to run without --force",
        ),
        SmellRule(
            "rmRecursiveAfterMktempD",
            Q("MKTEMP", Q("MKTEMP-DIRECTORY-FLAG")),
            after_node(Q("RM"), removes_mktemp_dir),
            "the directory created by mktemp -d is never removed",
        ),
        SmellRule(
            "sha256sumEchoOneSpaces",
            Q("ECHO", Q("ECHO-ARG")),
            None,
            "checksum line piped to sha256sum -c needs two spaces between hash and file",
            guard=has_one_space_checksum,
        ),
        SmellRule(
            "gemUpdateSystemRmRootGem",
            Q("GEM-UPDATE", Q("GEM-UPDATE-SYSTEM-FLAG")),
            after_node(rm_root_gem),
            "gem update --system is not followed by removing /root/.gem",
        ),
        SmellRule(
            "gemUpdateNoDocument",
            Q("GEM-UPDATE"),
            in_node(Q("GEM-UPDATE-NO-DOCUMENT-FLAG")),
            "gem update without --no-document installs documentation",
        ),
        SmellRule(
            "gpgVerifyAscRmAsc",
            Q("GPG", Q("GPG-VERIFY-FLAG"), Q(Value(r"\.asc$", tag="GPG-OPERAND"))),
            after_node(Q("RM"), removes_asc),
            "the verified .asc signature file is never removed",
            guard=lambda cmd: asc_operand(cmd) is not None,
        ),
        SmellRule(
            "yumInstallForceYes",
            Q("YUM-INSTALL"),
            in_node(Q("YUM-INSTALL-Y-FLAG")),
            "yum install without -y waits for confirmation",
        ),
    ]


RULE_IDS: tuple[str, ...] = tuple(r.id for r in default_rules())


def select_rules(
    include: Iterable[str] | None = None,
    exclude: Iterable[str] | None = None,
    keyserver: str = DEFAULT_KEYSERVER,
) -> list[SmellRule]:
    """Catalog subset by id; unknown ids raise ``UnknownRuleId``."""
    rules = default_rules(keyserver)
    known = {r.id for r in rules}
    include = list(include) if include is not None else None
    exclude = list(exclude or ())
    for rid in (include or []) + exclude:
        if rid not in known:
            raise UnknownRuleId(rid)
    wanted = set(include) if include is not None else known
    return [r for r in rules if r.id in wanted and r.id not in exclude]


__all__ = [
    "DEFAULT_KEYSERVER",
    "HA_POOL",
    "RULE_IDS",
    "default_rules",
    "is_plain_http_url",
    "path_covers",
    "select_rules",
]
