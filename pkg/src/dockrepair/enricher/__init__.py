from .enrich import (
    EnrichmentStats,
    command_args,
    command_name,
    command_name_node,
    enrich,
    enrich_command,
    enrich_embedded,
    schema_for,
    wrapper_specs,
)
from .schema import (
    SUBCOMMAND_TAG,
    CommandSchema,
    FlagSchema,
    SchemaError,
    SchemaSet,
    SubcommandSchema,
    builtin_schemas,
    load_schemas,
)

__all__ = [
    "SUBCOMMAND_TAG",
    "CommandSchema",
    "EnrichmentStats",
    "FlagSchema",
    "SchemaError",
    "SchemaSet",
    "SubcommandSchema",
    "builtin_schemas",
    "command_args",
    "command_name",
    "command_name_node",
    "enrich",
    "enrich_command",
    "enrich_embedded",
    "load_schemas",
    "schema_for",
    "wrapper_specs",
]
