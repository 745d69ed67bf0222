"""Command schemas: which subcommands, flags and operand roles a command has.

Schemas are plain JSON records::

    {"commands": [
      {"name": "npm",
       "subcommands": {
         "cache": {"subcommands": {
           "clean": {"flags": [{"names": ["-f", "--force"], "tag": "NPM-F-FORCE"}]}}}}}
    ]}

Tags left out are derived: ``NPM`` for the command, ``NPM-CACHE-CLEAN`` for
the subcommand path, ``<OWNER>-<NAME>-FLAG`` for flags, where NAME is the
first long name if there is one.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

SUBCOMMAND_TAG = "SUBCOMMAND"


class SchemaError(ValueError):
    """A schema document is malformed or inconsistent."""


def slug(text: str) -> str:
    return re.sub(r"[^A-Z0-9]+", "-", text.lstrip("-+").upper()).strip("-")


@dataclass(frozen=True)
class FlagSchema:
    names: tuple[str, ...]
    tag: str
    takes_value: bool = False
    value_tag: str | None = None


@dataclass
class SubcommandSchema:
    name: str
    tag: str
    aliases: tuple[str, ...] = ()
    flags: list[FlagSchema] = field(default_factory=list)
    positional_role: str | None = None
    subcommands: dict[str, SubcommandSchema] = field(default_factory=dict)

    def lookup(self, word: str) -> SubcommandSchema | None:
        for sub in self.subcommands.values():
            if word == sub.name or word in sub.aliases:
                return sub
        return None


@dataclass
class CommandSchema:
    command_name: str
    tag: str
    aliases: tuple[str, ...] = ()
    flags: list[FlagSchema] = field(default_factory=list)
    subcommands: dict[str, SubcommandSchema] = field(default_factory=dict)
    positional_role: str | None = None
    wrapper: str | None = None  # "prefix" | "script" | "module"
    script_flag: str = "c"
    bundling: bool = False
    first_arg_bundle: bool = False
    default_subcommand: str | None = None

    @property
    def names(self) -> tuple[str, ...]:
        return (self.command_name, *self.aliases)

    def lookup(self, word: str) -> SubcommandSchema | None:
        for sub in self.subcommands.values():
            if word == sub.name or word in sub.aliases:
                return sub
        return None

    def all_flags(self) -> list[FlagSchema]:
        found = list(self.flags)
        stack = list(self.subcommands.values())
        while stack:
            sub = stack.pop()
            found.extend(sub.flags)
            stack.extend(sub.subcommands.values())
        return found

    def tags(self) -> set[str]:
        out = {self.tag}
        if self.positional_role:
            out.add(self.positional_role)
        for flag in self.flags:
            out.add(flag.tag)
            if flag.value_tag:
                out.add(flag.value_tag)
        stack = list(self.subcommands.values())
        while stack:
            sub = stack.pop()
            out.add(sub.tag)
            if sub.positional_role:
                out.add(sub.positional_role)
            for flag in sub.flags:
                out.add(flag.tag)
                if flag.value_tag:
                    out.add(flag.value_tag)
            stack.extend(sub.subcommands.values())
        return out


def _tag_name(names: list[str]) -> str:
    # long names are case-safe; -c and -C would otherwise both slug to C
    return next((n for n in names if n.startswith("--")), names[0])


def _flag(raw: dict[str, Any], owner: str) -> FlagSchema:
    names = raw.get("names")
    if not names or not all(isinstance(n, str) and n for n in names):
        raise SchemaError(f"flag under {owner} needs a non-empty 'names' list")
    return FlagSchema(
        names=tuple(names),
        tag=raw.get("tag") or f"{owner}-{slug(_tag_name(names))}-FLAG",
        takes_value=bool(raw.get("takes_value", False)),
        value_tag=raw.get("value_tag"),
    )


def _subcommand(name: str, raw: dict[str, Any], parent_tag: str) -> SubcommandSchema:
    tag = raw.get("tag") or f"{parent_tag}-{slug(name)}"
    return SubcommandSchema(
        name=name,
        tag=tag,
        aliases=tuple(raw.get("aliases", ())),
        flags=[_flag(f, tag) for f in raw.get("flags", ())],
        positional_role=raw.get("positional_role"),
        subcommands={k: _subcommand(k, v, tag) for k, v in raw.get("subcommands", {}).items()},
    )


def command_from_dict(raw: dict[str, Any]) -> CommandSchema:
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaError("command record needs a 'name'")
    tag = raw.get("tag") or slug(name)
    wrapper = raw.get("wrapper")
    if wrapper not in (None, "prefix", "script", "module"):
        raise SchemaError(f"{name}: wrapper must be 'prefix', 'script' or 'module'")
    schema = CommandSchema(
        command_name=name,
        tag=tag,
        aliases=tuple(raw.get("aliases", ())),
        flags=[_flag(f, tag) for f in raw.get("flags", ())],
        subcommands={k: _subcommand(k, v, tag) for k, v in raw.get("subcommands", {}).items()},
        positional_role=raw.get("positional_role"),
        wrapper=wrapper,
        script_flag=raw.get("script_flag", "c"),
        bundling=bool(raw.get("bundling", False)),
        first_arg_bundle=bool(raw.get("first_arg_bundle", False)),
        default_subcommand=raw.get("default_subcommand"),
    )
    if schema.default_subcommand and schema.lookup(schema.default_subcommand) is None:
        raise SchemaError(f"{name}: default subcommand {schema.default_subcommand!r} is not defined")
    _check_unique_flag_tags(schema)
    return schema


def _check_unique_flag_tags(schema: CommandSchema) -> None:
    seen: dict[str, tuple[str, ...]] = {}
    for flag in schema.all_flags():
        other = seen.get(flag.tag)
        if other is not None and other != flag.names:
            raise SchemaError(f"{schema.command_name}: flag tag {flag.tag} used twice")
        seen[flag.tag] = flag.names


class SchemaSet:
    """Immutable lookup of command schemas by invoked name."""

    def __init__(self, schemas: list[CommandSchema]) -> None:
        self.schemas = list(schemas)
        self._by_name: dict[str, CommandSchema] = {}
        for schema in self.schemas:
            for name in schema.names:
                if name in self._by_name:
                    raise SchemaError(f"command name {name!r} defined twice")
                self._by_name[name] = schema
        self.vocabulary = frozenset(
            {SUBCOMMAND_TAG}.union(*(s.tags() for s in self.schemas)) if self.schemas else {SUBCOMMAND_TAG}
        )

    def get(self, name: str) -> CommandSchema | None:
        return self._by_name.get(name)

    def __len__(self) -> int:
        return len(self.schemas)

    def __iter__(self):
        return iter(self.schemas)

    def extended(self, extra: list[CommandSchema]) -> SchemaSet:
        """A new set with ``extra`` schemas replacing same-named ones."""
        names = {n for s in extra for n in s.names}
        kept = [s for s in self.schemas if not names & set(s.names)]
        return SchemaSet(kept + list(extra))


def load_schemas(source: str | Path | dict[str, Any]) -> SchemaSet:
    """Load schemas from a JSON file path or an already-parsed document."""
    if isinstance(source, dict):
        doc = source
    else:
        try:
            doc = json.loads(Path(source).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{source}: invalid JSON: {exc}") from exc
    commands = doc.get("commands")
    if not isinstance(commands, list):
        raise SchemaError("schema document needs a 'commands' list")
    return SchemaSet([command_from_dict(c) for c in commands])


_BUILTIN: SchemaSet | None = None


def builtin_schemas() -> SchemaSet:
    global _BUILTIN
    if _BUILTIN is None:
        text = resources.files("dockrepair").joinpath("schemas/builtin.json").read_text(encoding="utf-8")
        _BUILTIN = load_schemas(json.loads(text))
    return _BUILTIN
