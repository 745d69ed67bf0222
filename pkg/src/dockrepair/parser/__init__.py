from .diagnostics import ParseDiagnostic, UnsupportedEncoding
from .dockerfile import ParseResult, parse_dockerfile
from .offsets import OffsetMap, OutOfRange, fold, span_to_file_coords
from .shell import DEFAULT_WRAPPERS, WrapperSpec, parse_shell, parse_shell_fragment

__all__ = [
    "DEFAULT_WRAPPERS",
    "OffsetMap",
    "OutOfRange",
    "ParseDiagnostic",
    "ParseResult",
    "UnsupportedEncoding",
    "WrapperSpec",
    "fold",
    "parse_dockerfile",
    "parse_shell",
    "parse_shell_fragment",
    "span_to_file_coords",
]
