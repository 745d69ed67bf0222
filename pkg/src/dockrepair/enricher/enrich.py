"""Annotating command nodes with tags drawn from command schemas."""

from __future__ import annotations

from dataclasses import dataclass

from ..parser.shell import WrapperSpec
from ..tree import AstNode, NodeKind
from ..words import literal_prefix, literal_text
from .schema import SUBCOMMAND_TAG, CommandSchema, FlagSchema, SchemaSet, SubcommandSchema, builtin_schemas

K = NodeKind


@dataclass(frozen=True)
class EnrichmentStats:
    total_commands: int = 0
    annotated_commands: int = 0

    @property
    def coverage_ratio(self) -> float:
        if self.total_commands == 0:
            return 0.0
        return self.annotated_commands / self.total_commands

    def to_dict(self) -> dict[str, float | int]:
        return {
            "total_commands": self.total_commands,
            "annotated_commands": self.annotated_commands,
            "coverage_ratio": round(self.coverage_ratio, 6),
        }


def command_name_node(cmd: AstNode) -> AstNode | None:
    for child in cmd.children:
        if child.kind is K.BashCommandName:
            return child
    return None


def command_name(cmd: AstNode) -> str | None:
    """Literal name of a command, or None for dynamic or missing names."""
    node = command_name_node(cmd)
    return literal_text(node) if node is not None else None


def basename(name: str) -> str:
    return name.rstrip("/").rsplit("/", 1)[-1]


def schema_for(cmd: AstNode, schemas: SchemaSet) -> CommandSchema | None:
    name = command_name(cmd)
    if not name:
        return None
    return schemas.get(name) or schemas.get(basename(name))


def command_args(cmd: AstNode) -> list[AstNode]:
    return [c for c in cmd.children if c.kind is K.BashCommandArgs]


def wrapper_specs(schemas: SchemaSet) -> dict[str, WrapperSpec]:
    """Parser wrapper table derived from the schemas marked as wrappers."""
    specs: dict[str, WrapperSpec] = {}
    for schema in schemas:
        if schema.wrapper is None:
            continue
        value_flags = frozenset(n for f in schema.flags if f.takes_value for n in f.names)
        for name in schema.names:
            specs[name] = WrapperSpec(name, schema.wrapper, value_flags, schema.script_flag)
    return specs


def enrich_embedded(command: AstNode) -> AstNode | None:
    """The command or script a wrapper invocation embeds, if any.

    Embedding happens at parse time, so this only locates the node: a nested
    ``BashCommand`` for prefix wrappers, a ``BashScript`` for ``sh -c``.
    """
    for child in command.children:
        if child.kind is K.BashCommand:
            return child
    for arg in command_args(command):
        for node in arg.iter():
            if node.kind is K.BashScript:
                return node
    return None


class _FlagTable:
    def __init__(self, flags: list[FlagSchema]) -> None:
        self.by_name: dict[str, FlagSchema] = {}
        for flag in flags:
            for name in flag.names:
                self.by_name.setdefault(name, flag)

    def get(self, name: str) -> FlagSchema | None:
        return self.by_name.get(name)


def _chain(schema: CommandSchema, args: list[AstNode], table: _FlagTable) -> tuple[list[SubcommandSchema], list[AstNode]]:
    """Walk the subcommand path; returns the chain and the subcommand words."""
    chain: list[SubcommandSchema] = []
    words: list[AstNode] = []
    owner: CommandSchema | SubcommandSchema = schema
    skip = False
    saw_positional = False
    for arg in args:
        if skip:
            skip = False
            continue
        text = literal_text(arg)
        if text is None:
            if literal_prefix(arg).startswith("--") and "=" in literal_prefix(arg):
                continue
            saw_positional = True
            break
        if text == "--":
            break
        if text.startswith("-") and len(text) > 1:
            skip = _consumes_next(text, table, schema.bundling)
            continue
        sub = owner.lookup(text)
        if sub is None:
            saw_positional = True
            break
        chain.append(sub)
        words.append(arg)
        owner = sub
        if not sub.subcommands:
            break
    if not chain and not saw_positional and schema.default_subcommand:
        default = schema.lookup(schema.default_subcommand)
        if default is not None:
            chain.append(default)
    return chain, words


def _consumes_next(text: str, table: _FlagTable, bundling: bool) -> bool:
    if text.startswith("--"):
        if "=" in text:
            return False
        flag = table.get(text)
        return bool(flag and flag.takes_value)
    flag = table.get(text)
    if flag is not None:
        return flag.takes_value
    if bundling:
        for i, ch in enumerate(text[1:], start=1):
            f = table.get("-" + ch)
            if f is None:
                return False
            if f.takes_value:
                return i == len(text) - 1
    return False


def _tag_flag(word: AstNode, flag: FlagSchema, inline_value: bool) -> None:
    word.annotate(flag.tag)
    if inline_value and flag.value_tag:
        word.annotate(flag.value_tag)


def _tag_args(
    schema: CommandSchema,
    args: list[AstNode],
    table: _FlagTable,
    subcommand_words: list[AstNode],
    role: str | None,
) -> None:
    pending: list[FlagSchema] = []  # value flags waiting for their operand
    options_done = False
    skip_ids = {id(w) for w in subcommand_words}
    for index, arg in enumerate(args):
        if id(arg) in skip_ids:
            continue
        if pending:
            flag = pending.pop(0)
            if flag.value_tag:
                arg.annotate(flag.value_tag)
            continue
        text = literal_text(arg)
        if text is None:
            prefix = literal_prefix(arg)
            if not options_done and prefix.startswith("--") and "=" in prefix:
                # --name="$value": the flag is known even if its value is not
                flag = table.get(prefix.partition("=")[0])
                if flag is not None:
                    _tag_flag(arg, flag, True)
            elif role and not prefix.startswith("-"):
                arg.annotate(role)
            continue
        if options_done or text == "-" or not text.startswith("-"):
            if index == 0 and schema.first_arg_bundle and text and not options_done:
                letters = [table.get("-" + ch) for ch in text]
                if all(letters):
                    for flag in letters:
                        arg.annotate(flag.tag)
                        if flag.takes_value:
                            pending.append(flag)
                    continue
            if role:
                arg.annotate(role)
            continue
        if text == "--":
            options_done = True
            continue
        if text.startswith("--"):
            name, eq, _value = text.partition("=")
            flag = table.get(name)
            if flag is not None:
                _tag_flag(arg, flag, bool(eq))
                if flag.takes_value and not eq:
                    pending.append(flag)
            continue
        flag = table.get(text)
        if flag is not None:
            arg.annotate(flag.tag)
            if flag.takes_value:
                pending.append(flag)
            continue
        if not schema.bundling:
            continue
        found: list[tuple[FlagSchema, bool]] = []
        ok = True
        for i, ch in enumerate(text[1:], start=1):
            f = table.get("-" + ch)
            if f is None:
                ok = False
                break
            inline = f.takes_value and i < len(text) - 1
            found.append((f, inline))
            if f.takes_value:
                break
        if not ok:
            continue
        for f, inline in found:
            _tag_flag(arg, f, inline)
        last, inline = found[-1]
        if last.takes_value and not inline:
            pending.append(last)


def enrich_command(cmd: AstNode, schemas: SchemaSet) -> bool:
    """Annotate one command; True when a schema matched."""
    schema = schema_for(cmd, schemas)
    if schema is None:
        return False
    args = command_args(cmd)
    chain_table = _FlagTable(schema.all_flags())
    chain, sub_words = _chain(schema, args, chain_table)
    cmd.annotate(schema.tag)
    for sub in chain:
        cmd.annotate(sub.tag)
    for word in sub_words:
        word.annotate(SUBCOMMAND_TAG)
    merged = list(schema.flags)
    for sub in chain:
        merged.extend(sub.flags)
    role = schema.positional_role
    for sub in chain:
        if sub.positional_role:
            role = sub.positional_role
    _tag_args(schema, args, _FlagTable(merged), sub_words, role)
    return True


def _clear(root: AstNode, vocabulary: frozenset[str]) -> None:
    for node in root.iter():
        if node.annotations:
            node.annotations.difference_update(vocabulary)


def enrich(root: AstNode, schemas: SchemaSet | None = None) -> EnrichmentStats:
    """Annotate every command in the tree; reapplying gives the same result."""
    schemas = schemas or builtin_schemas()
    _clear(root, schemas.vocabulary)
    total = annotated = 0
    for node in root.iter():
        if node.kind is not K.BashCommand or command_name_node(node) is None:
            continue
        total += 1
        if enrich_command(node, schemas):
            annotated += 1
    return EnrichmentStats(total, annotated)
