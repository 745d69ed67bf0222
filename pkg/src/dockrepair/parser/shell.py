"""Recursive-descent parser for the shell subset found in RUN payloads.

The parser works on a folded payload (continuations removed) and builds
nodes whose spans are mapped straight back to file coordinates. Anything
outside the supported subset becomes a ``BashOpaque`` node covering exactly
its source text, so reprinting never loses bytes.
"""

from __future__ import annotations

import posixpath
import re
from dataclasses import dataclass, field

from ..tree import AstNode, LineIndex, NodeKind, SourceSpan
from .diagnostics import ParseDiagnostic
from .offsets import OffsetMap, span_to_file_coords

K = NodeKind

_META = frozenset(" \t\n;&|()<>")
_BLANK = " \t"
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ASSIGN_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(\[[^\]]*\])?\+?=")
_REDIR_RE = re.compile(r"(\d*)(&>>|&>|>>|>&|>\||<<<|<<-|<<|<&|<>|>|<)")
_SPECIAL_VARS = frozenset("@*#?$!-0123456789")
_OPAQUE_WORDS = frozenset({"while", "until", "case", "select", "function", "[["})
_OPENERS = frozenset({"if", "case", "for", "while", "until", "select", "{"})
_CLOSERS = frozenset({"fi", "esac", "done", "}"})
_CMD_POS_WORDS = frozenset({"do", "then", "else", "elif", "!", "time", "in"})


@dataclass(frozen=True)
class WrapperSpec:
    """How a wrapper command embeds another command.

    ``mode`` is ``"prefix"`` (sudo-style: the trailing arguments are a
    command), ``"script"`` (sh-style: the argument after ``script_flag``
    is a shell script) or ``"module"`` (python-style: the argument after
    ``script_flag`` names a command that receives the remaining arguments).
    """

    name: str
    mode: str
    value_flags: frozenset[str] = frozenset()
    script_flag: str = "c"


DEFAULT_WRAPPERS: dict[str, WrapperSpec] = {
    "sudo": WrapperSpec(
        "sudo",
        "prefix",
        frozenset(
            {"-u", "-g", "-p", "-h", "-C", "-D", "-U", "-r", "-t", "-T",
             "--user", "--group", "--prompt", "--host", "--close-from",
             "--chdir", "--other-user", "--role", "--type", "--command-timeout"}
        ),
    ),
    **{name: WrapperSpec(name, "script") for name in ("sh", "bash", "dash", "ash", "zsh")},
    **{
        name: WrapperSpec(name, "module", frozenset({"-W", "-X", "--check-hash-based-pycs"}), "m")
        for name in ("python", "python2", "python3")
    },
}


class ShellSyntaxError(Exception):
    def __init__(self, message: str, pos: int) -> None:
        super().__init__(message)
        self.pos = pos


class _Heredoc(ShellSyntaxError):
    pass


@dataclass
class ShellParseOutput:
    script: AstNode
    diagnostics: list[ParseDiagnostic] = field(default_factory=list)


class _Parser:
    def __init__(
        self,
        fold: OffsetMap,
        lines: LineIndex | None,
        wrappers: dict[str, WrapperSpec],
        diagnostics: list[ParseDiagnostic],
    ) -> None:
        self.fold = fold
        self.s = fold.text
        self.i = 0
        self.n = len(self.s)
        self.lines = lines
        self.wrappers = wrappers
        self.diagnostics = diagnostics

    # -- helpers -------------------------------------------------------------

    def mk(self, kind: NodeKind, start: int, end: int, value: str | None = None,
           children: list[AstNode] | None = None) -> AstNode:
        span = span_to_file_coords(start, end, self.fold, self.lines)
        return AstNode(kind, children, span, value)

    def note(self, severity: str, message: str, start: int, end: int, code: str) -> None:
        span = span_to_file_coords(start, end, self.fold, self.lines)
        self.diagnostics.append(ParseDiagnostic(severity, message, span, code))

    def peek(self, k: int = 0) -> str:
        j = self.i + k
        return self.s[j] if j < self.n else ""

    def skip_blanks(self) -> None:
        while self.i < self.n and self.s[self.i] in _BLANK:
            self.i += 1

    def skip_blanks_newlines(self) -> None:
        while self.i < self.n and self.s[self.i] in " \t\n":
            self.i += 1

    def peek_word(self) -> str:
        j = self.i
        while j < self.n and self.s[j] not in _META and self.s[j] not in "'\"`$\\":
            j += 1
        if j < self.n and self.s[j] not in _META:
            return ""  # quoted or expanded words are never keywords
        return self.s[self.i:j]

    def expect_word(self, word: str) -> None:
        if self.peek_word() != word:
            raise ShellSyntaxError(f"expected '{word}'", self.i)
        self.i += len(word)

    def span_of(self, items: list[AstNode], fallback: int) -> tuple[int, int]:
        if not items:
            return fallback, fallback
        return self._frag(items[0].span.start), self._frag_end(items[-1])

    def _frag(self, file_offset: int) -> int:
        return self.fold.to_fragment(file_offset)

    def _frag_end(self, node: AstNode) -> int:
        if node.span.end == node.span.start:
            return self._frag(node.span.start)
        return self.fold.to_fragment(node.span.end - 1) + 1

    # -- statement lists -----------------------------------------------------

    def statement_list(self, stops: frozenset[str]) -> list[AstNode]:
        items: list[AstNode] = []
        while True:
            self.skip_blanks()
            if self.i >= self.n:
                break
            c = self.s[self.i]
            two = self.s[self.i:self.i + 2]
            if c == "\n":
                if items and items[-1].kind not in _OPERATORS and items[-1].kind is not K.Comment:
                    items.append(self.mk(K.BashOperatorSemicolon, self.i, self.i + 1, "\n"))
                self.i += 1
                continue
            if c == "#":
                end = self.s.find("\n", self.i, self.n)
                end = self.n if end == -1 else end
                items.append(self.mk(K.Comment, self.i, end, self.s[self.i:end]))
                self.i = end
                continue
            if c == ")":
                if ")" in stops:
                    break
                raise ShellSyntaxError("unexpected ')'", self.i)
            if two in ("&&", "||"):
                kind = K.BashOperatorAnd if two == "&&" else K.BashOperatorOr
                items.append(self.mk(kind, self.i, self.i + 2, two))
                self.i += 2
                self.skip_blanks_newlines()
                continue
            if two == "|&":
                items.append(self.mk(K.BashPipe, self.i, self.i + 2, two))
                self.i += 2
                self.skip_blanks_newlines()
                continue
            if c == "|":
                items.append(self.mk(K.BashPipe, self.i, self.i + 1, "|"))
                self.i += 1
                self.skip_blanks_newlines()
                continue
            if two == ";;":
                raise ShellSyntaxError("';;' outside case", self.i)
            if c == ";" or (c == "&" and two != "&>"):
                items.append(self.mk(K.BashOperatorSemicolon, self.i, self.i + 1, c))
                self.i += 1
                continue
            word = self.peek_word()
            if word and word in stops:
                break
            if word == "!" :
                items.append(self.mk(K.BashOpaque, self.i, self.i + 1, "!"))
                self.i += 1
                continue
            items.append(self.command())
        return items

    def make_list(self, items: list[AstNode], fallback: int) -> AstNode:
        start, end = self.span_of(items, fallback)
        return self.mk(K.BashStatementList, start, end, children=items)

    # -- commands ------------------------------------------------------------

    def command(self) -> AstNode:
        start = self.i
        c = self.peek()
        word = self.peek_word()
        if c == "(":
            if self.peek(1) == "(":
                return self.opaque_compound(start, "((")
            return self.subshell()
        if word == "{":
            return self.brace_group()
        if word == "if":
            return self.if_clause()
        if word == "for":
            j = self.i + 3
            while j < self.n and self.s[j] in _BLANK:
                j += 1
            if self.s.startswith("((", j):
                return self.opaque_compound(start, "for((")
            return self.for_clause()
        if word in _OPAQUE_WORDS:
            return self.opaque_compound(start, word)
        if word and _NAME_RE.fullmatch(word):
            j = self.i + len(word)
            while j < self.n and self.s[j] in _BLANK:
                j += 1
            if self.s.startswith("()", j) or (self.s.startswith("(", j) and self.s[j + 1:j + 2] in _BLANK + ")"):
                return self.opaque_compound(start, "function")
        try:
            return self.simple_command()
        except _Heredoc:
            self.note("warning", "heredoc inside a shell payload kept verbatim", start, self.n, "opaque-heredoc")
            node = self.mk(K.BashOpaque, start, self.n, self.s[start:self.n])
            self.i = self.n
            return node

    def trailing_redirects(self, children: list[AstNode]) -> None:
        while True:
            save = self.i
            self.skip_blanks()
            if not self.at_redirect():
                self.i = save
                return
            children.append(self.redirect())

    def subshell(self) -> AstNode:
        start = self.i
        self.i += 1
        items = self.statement_list(frozenset({")"}))
        if self.peek() != ")":
            raise ShellSyntaxError("unterminated '('", start)
        body = self.make_list(items, self.i)
        self.i += 1
        children = [body]
        self.trailing_redirects(children)
        return self.mk(K.BashSubshell, start, self._end_of(children, self.i), "(", children)

    def brace_group(self) -> AstNode:
        start = self.i
        self.i += 1
        items = self.statement_list(frozenset({"}"}))
        if self.peek_word() != "}":
            raise ShellSyntaxError("unterminated '{'", start)
        body = self.make_list(items, self.i)
        self.i += 1
        children = [body]
        self.trailing_redirects(children)
        return self.mk(K.BashSubshell, start, self._end_of(children, self.i), "{", children)

    def _end_of(self, children: list[AstNode], fallback: int) -> int:
        if children and children[-1].kind is K.BashRedirect:
            return self._frag_end(children[-1])
        return fallback

    def if_clause(self) -> AstNode:
        start = self.i
        self.i += 2  # "if" or the "el" of "elif" already skipped by caller
        cond_items = self.statement_list(frozenset({"then"}))
        cond = self.mk(K.BashIfCondition, *self.span_of(cond_items, self.i), children=cond_items)
        self.expect_word("then")
        body_items = self.statement_list(frozenset({"elif", "else", "fi"}))
        body = self.mk(K.BashIfBody, *self.span_of(body_items, self.i), children=body_items)
        children = [cond, body]
        word = self.peek_word()
        if word == "elif":
            self.i += 2
            nested = self.if_clause()
            nested_span = (self._frag(nested.span.start) - 2, self._frag_end(nested))
            # the nested if starts at "elif"
            nested.span = span_to_file_coords(*nested_span, self.fold, self.lines)
            children.append(self.mk(K.BashElseBody, *nested_span, children=[nested]))
            end = self.i
        else:
            if word == "else":
                self.i += 4
                else_items = self.statement_list(frozenset({"fi"}))
                children.append(
                    self.mk(K.BashElseBody, *self.span_of(else_items, self.i), children=else_items)
                )
            self.expect_word("fi")
            end = self.i
            self.trailing_redirects(children)
            end = self._end_of(children, end)
        return self.mk(K.BashIf, start, end, children=children)

    def for_clause(self) -> AstNode:
        start = self.i
        self.i += 3
        self.skip_blanks()
        m = _NAME_RE.match(self.s, self.i, self.n)
        if not m:
            raise ShellSyntaxError("expected loop variable", self.i)
        children = [self.mk(K.BashVariable, m.start(), m.end(), m.group())]
        self.i = m.end()
        self.skip_blanks()
        if self.peek_word() == "in":
            self.i += 2
            while True:
                self.skip_blanks()
                c = self.peek()
                if c in ("", ";", "\n"):
                    break
                if c in _META:
                    raise ShellSyntaxError("unexpected operator in for list", self.i)
                children.append(self.word(K.BashCommandArgs))
        if self.peek() in (";", "\n"):
            self.i += 1
        self.skip_blanks_newlines()
        self.expect_word("do")
        items = self.statement_list(frozenset({"done"}))
        children.append(self.make_list(items, self.i))
        self.expect_word("done")
        end = self.i
        self.trailing_redirects(children)
        return self.mk(K.BashFor, start, self._end_of(children, end), children=children)

    def opaque_compound(self, start: int, what: str) -> AstNode:
        if what == "[[":
            end = self.scan_to_word(start + 2, "]]")
        elif what == "((":
            end = self.scan_balanced(start, "(", ")") + 1
        elif what == "for((":
            j = self.s.index("((", start)
            end = self.scan_balanced(j, "(", ")") + 1
            end = self.scan_keyword_block(end, need_open=True)
        elif what == "function":
            end = self.scan_keyword_block(start, need_open=True, function=True)
        else:
            end = self.scan_keyword_block(start, need_open=False)
        end = self.absorb_tail(end)
        self.note("info", f"'{what}' construct kept verbatim", start, end, "opaque-construct")
        self.i = end
        return self.mk(K.BashOpaque, start, end, self.s[start:end])

    def absorb_tail(self, pos: int) -> int:
        """Extend an opaque construct over trailing redirects up to the next operator."""
        j = pos
        while j < self.n and self.s[j] not in ";&|)\n":
            if self.s[j] == "\\":
                j += 2
                continue
            if self.s[j] in "'\"":
                j = self.skip_quoted(j)
                continue
            j += 1
        end = min(j, self.n)
        while end > pos and self.s[end - 1] in _BLANK:
            end -= 1
        return end

    # -- raw scanners for opaque regions --------------------------------------

    def skip_quoted(self, j: int) -> int:
        q = self.s[j]
        k = j + 1
        while k < self.n:
            ch = self.s[k]
            if ch == "\\" and q == '"':
                k += 2
                continue
            if ch == q:
                return k + 1
            k += 1
        raise ShellSyntaxError("unterminated quote", j)

    def scan_balanced(self, open_idx: int, open_ch: str, close_ch: str) -> int:
        """Index of the close matching ``self.s[open_idx]``."""
        depth = 0
        j = open_idx
        while j < self.n:
            ch = self.s[j]
            if ch == "\\":
                j += 2
                continue
            if ch in "'\"":
                j = self.skip_quoted(j)
                continue
            if ch == open_ch:
                depth += 1
            elif ch == close_ch:
                depth -= 1
                if depth == 0:
                    return j
            j += 1
        raise ShellSyntaxError(f"unbalanced '{open_ch}'", open_idx)

    def scan_to_word(self, j: int, word: str) -> int:
        while j < self.n:
            ch = self.s[j]
            if ch == "\\":
                j += 2
                continue
            if ch in "'\"":
                j = self.skip_quoted(j)
                continue
            if self.s.startswith(word, j) and (j + len(word) >= self.n or self.s[j + len(word)] in _META):
                return j + len(word)
            j += 1
        raise ShellSyntaxError(f"missing '{word}'", j)

    def scan_keyword_block(self, j: int, need_open: bool, function: bool = False) -> int:
        """End of a keyword-delimited block starting at ``j``."""
        depth = 0
        opened = False
        command_pos = True
        while j < self.n:
            ch = self.s[j]
            if ch in _BLANK:
                j += 1
                continue
            if ch in "'\"":
                j = self.skip_quoted(j)
                command_pos = False
                continue
            if ch == "\\":
                j += 2
                command_pos = False
                continue
            if ch == "$" and self.s.startswith("$(", j):
                j = self.scan_balanced(j + 1, "(", ")") + 1
                command_pos = False
                continue
            if ch in ";&|\n":
                j += 1
                command_pos = True
                continue
            if ch in "()":
                j += 1
                command_pos = True
                continue
            k = j
            while k < self.n and self.s[k] not in _META and self.s[k] not in "'\"":
                k += 1
            word = self.s[j:k]
            if k == j:
                j += 1
                continue
            if function and not opened:
                is_open = word == "{"
            else:
                is_open = command_pos and word in _OPENERS
            if is_open:
                depth += 1
                opened = True
            elif command_pos and word in _CLOSERS:
                depth -= 1
                if depth == 0 and (opened or not need_open):
                    return k
            command_pos = word in _CMD_POS_WORDS or (word in _OPENERS and word != "case")
            j = k
        raise ShellSyntaxError("unterminated compound command", j)

    # -- simple commands -----------------------------------------------------

    def at_redirect(self) -> bool:
        c = self.peek()
        if c in "<>" and self.peek(1) == "(":
            return False
        m = _REDIR_RE.match(self.s, self.i, self.n)
        if not m:
            return False
        if c == "&":
            return m.group(2).startswith("&")
        return True

    def redirect(self) -> AstNode:
        start = self.i
        m = _REDIR_RE.match(self.s, self.i, self.n)
        op = m.group(2)
        if op in ("<<", "<<-"):
            raise _Heredoc("heredoc", start)
        self.i = m.end()
        self.skip_blanks()
        parts = self.word_parts()
        if not parts:
            raise ShellSyntaxError("redirect without target", start)
        return self.mk(K.BashRedirect, start, self.i, m.group(0), parts)

    def simple_command(self) -> AstNode:
        start = self.i
        children: list[AstNode] = []
        named = False
        while True:
            self.skip_blanks()
            if self.i >= self.n:
                break
            c = self.s[self.i]
            if c in "<>&" and self.at_redirect():
                children.append(self.redirect())
                continue
            if c in "<>" and self.peek(1) == "(":
                kind = K.BashCommandArgs if named else K.BashCommandName
                children.append(self.word(kind))
                named = True
                continue
            if c.isdigit() and self.at_redirect():
                children.append(self.redirect())
                continue
            if c in "\n;&|)":
                break
            if c == "(":
                raise ShellSyntaxError("unexpected '('", self.i)
            if c == "#":
                break
            if not named and _ASSIGN_RE.match(self.s, self.i, self.n):
                children.append(self.word(K.BashAssignment))
                continue
            children.append(self.word(K.BashCommandArgs if named else K.BashCommandName))
            named = True
        if not children:
            raise ShellSyntaxError("empty command", start)
        cmd = self.mk(K.BashCommand, start, self._frag_end(children[-1]), children=children)
        self.embed_wrapped(cmd)
        return cmd

    # -- words ---------------------------------------------------------------

    def word(self, kind: NodeKind) -> AstNode:
        start = self.i
        parts = self.word_parts()
        if not parts:
            raise ShellSyntaxError("expected a word", start)
        return self.mk(kind, start, self.i, children=parts)

    def word_parts(self) -> list[AstNode]:
        parts: list[AstNode] = []
        start = self.i
        while self.i < self.n:
            c = self.s[self.i]
            if c in "<>" and self.i == start and self.peek(1) == "(":
                end = self.scan_balanced(self.i + 1, "(", ")") + 1
                self.note("info", "process substitution kept verbatim", self.i, end, "opaque-construct")
                parts.append(self.mk(K.BashOpaque, self.i, end, self.s[self.i:end]))
                self.i = end
                continue
            if c == "(" and parts and self.s[self.i - 1] == "=":
                end = self.scan_balanced(self.i, "(", ")") + 1
                parts.append(self.mk(K.BashOpaque, self.i, end, self.s[self.i:end]))
                self.i = end
                continue
            if c in _META:
                break
            if c == "'":
                parts.append(self.single_quoted())
            elif c == '"':
                parts.append(self.double_quoted())
            elif c == "$" and self._dollar_expands(in_double=False):
                parts.append(self.dollar(in_double=False))
            elif c == "`":
                parts.append(self.backtick())
            else:
                parts.append(self.literal_run())
        return _merge_literals(parts)

    def literal_run(self) -> AstNode:
        start = self.i
        while self.i < self.n:
            c = self.s[self.i]
            if c in _META or c in "'\"`":
                break
            if c == "$" and self._dollar_expands(in_double=False):
                break
            if c == "\\":
                self.i = min(self.i + 2, self.n)
                continue
            self.i += 1
        if self.i == start:
            self.i += 1  # lone '$' that does not expand
        return self.mk(K.BashLiteral, start, self.i, self.s[start:self.i])

    def single_quoted(self) -> AstNode:
        start = self.i
        end = self.s.find("'", start + 1, self.n)
        if end == -1:
            raise ShellSyntaxError("unterminated single quote", start)
        children = []
        if end > start + 1:
            children.append(self.mk(K.BashLiteral, start + 1, end, self.s[start + 1:end]))
        self.i = end + 1
        return self.mk(K.BashQuotedString, start, self.i, "'", children)

    def ansi_quoted(self) -> AstNode:
        start = self.i
        j = start + 2
        while j < self.n and self.s[j] != "'":
            j += 2 if self.s[j] == "\\" else 1
        if j >= self.n:
            raise ShellSyntaxError("unterminated $' quote", start)
        children = []
        if j > start + 2:
            children.append(self.mk(K.BashLiteral, start + 2, j, self.s[start + 2:j]))
        self.i = j + 1
        return self.mk(K.BashQuotedString, start, self.i, "$'", children)

    def double_quoted(self) -> AstNode:
        start = self.i
        self.i += 1
        children: list[AstNode] = []
        run = self.i
        while True:
            if self.i >= self.n:
                raise ShellSyntaxError("unterminated double quote", start)
            c = self.s[self.i]
            if c == '"' or c == "`" or (c == "$" and self._dollar_expands(in_double=True)):
                if self.i > run:
                    children.append(self.mk(K.BashLiteral, run, self.i, self.s[run:self.i]))
                if c == '"':
                    self.i += 1
                    break
                children.append(self.backtick() if c == "`" else self.dollar(in_double=True))
                run = self.i
                continue
            if c == "\\":
                self.i += 2
                continue
            self.i += 1
        return self.mk(K.BashQuotedString, start, self.i, '"', children)

    def _dollar_expands(self, in_double: bool) -> bool:
        nxt = self.peek(1)
        if nxt in ("{", "("):
            return True
        if nxt == "'" and not in_double:
            return True
        return bool(nxt) and (nxt in _SPECIAL_VARS or nxt.isalpha() or nxt == "_")

    def dollar(self, in_double: bool) -> AstNode:
        start = self.i
        nxt = self.peek(1)
        if self.s.startswith("$((", start):
            end = self.scan_balanced(start + 1, "(", ")") + 1
            self.i = end
            return self.mk(K.BashOpaque, start, end, self.s[start:end])
        if nxt == "(":
            self.i += 2
            items = self.statement_list(frozenset({")"}))
            if self.peek() != ")":
                raise ShellSyntaxError("unterminated '$('", start)
            children = [self.make_list(items, self.i)] if items else []
            self.i += 1
            return self.mk(K.BashCommandSubstitution, start, self.i, "$(", children)
        if nxt == "{":
            end = self.scan_balanced(start + 1, "{", "}") + 1
            self.i = end
            return self.mk(K.BashVariable, start, end, self.s[start:end])
        if nxt == "'" and not in_double:
            return self.ansi_quoted()
        m = _NAME_RE.match(self.s, start + 1, self.n)
        end = m.end() if m else start + 2
        self.i = end
        return self.mk(K.BashVariable, start, end, self.s[start:end])

    def backtick(self) -> AstNode:
        start = self.i
        j = start + 1
        while j < self.n and self.s[j] != "`":
            j += 2 if self.s[j] == "\\" else 1
        if j >= self.n:
            raise ShellSyntaxError("unterminated backtick", start)
        saved_n = self.n
        self.i, self.n = start + 1, j
        items = self.statement_list(frozenset())
        self.n = saved_n
        children = [self.make_list(items, j)] if items else []
        self.i = j + 1
        return self.mk(K.BashCommandSubstitution, start, self.i, "`", children)

    # -- wrappers ------------------------------------------------------------

    def embed_wrapped(self, cmd: AstNode) -> None:
        name = cmd.get_child(K.BashCommandName)
        if name is None:
            return
        from ..words import literal_text

        text = literal_text(name)
        if not text:
            return
        spec = self.wrappers.get(posixpath.basename(text))
        if spec is None:
            return
        if spec.mode == "prefix":
            self._embed_prefix(cmd, name, spec)
        elif spec.mode == "script":
            self._embed_script(cmd, name, spec)
        elif spec.mode == "module":
            self._embed_module(cmd, name, spec)

    def _embed_prefix(self, cmd: AstNode, name: AstNode, spec: WrapperSpec) -> None:
        from ..words import literal_text

        kids = cmd.children
        k = kids.index(name) + 1
        skip_value = False
        while k < len(kids):
            child = kids[k]
            if child.kind is not K.BashCommandArgs:
                k += 1
                continue
            if skip_value:
                skip_value = False
                k += 1
                continue
            text = literal_text(child)
            if text is None:
                return
            if text == "--":
                k += 1
                break
            if text.startswith("-") and len(text) > 1:
                if text in spec.value_flags:
                    skip_value = True
                k += 1
                continue
            break
        self._nest(cmd, k)

    def _embed_module(self, cmd: AstNode, name: AstNode, spec: WrapperSpec) -> None:
        from ..words import literal_text

        kids = cmd.children
        skip_value = False
        for k in range(kids.index(name) + 1, len(kids)):
            child = kids[k]
            if child.kind is not K.BashCommandArgs:
                continue
            if skip_value:
                skip_value = False
                continue
            text = literal_text(child)
            if text is None or not text.startswith("-") or text == "-":
                return  # a script path or stdin, not a module
            if text == "-" + spec.script_flag:
                self._nest(cmd, k + 1)
                return
            if text in spec.value_flags:
                skip_value = True
            elif not text.startswith("--") and any(ch in "cm" for ch in text[1:]):
                return  # -c code, or -m bundled with other letters

    def _nest(self, cmd: AstNode, k: int) -> None:
        """Move the arguments from child ``k`` on into a nested command."""
        kids = cmd.children
        inner = [c for c in kids[k:] if c.kind is K.BashCommandArgs]
        if not inner:
            return
        head = inner[0]
        first = kids.index(head)
        rest = kids[first:]
        head_name = AstNode(K.BashCommandName, list(head.children), head.span)
        nested_children = [head_name] + rest[1:]
        for c in rest:
            c.parent = None
        for c in nested_children:
            c.parent = None
        nested = AstNode(K.BashCommand, nested_children)
        nested.span = _join_spans(head.span, rest[-1].span)
        del kids[first:]
        kids.append(nested)
        nested.parent = cmd
        self.embed_wrapped(nested)

    def _embed_script(self, cmd: AstNode, name: AstNode, spec: WrapperSpec) -> None:
        from ..words import literal_text

        args = [c for c in cmd.children if c.kind is K.BashCommandArgs]
        script_arg = None
        skip = False
        for idx, arg in enumerate(args):
            if skip:
                skip = False
                continue
            text = literal_text(arg)
            if text is None or text[:1] not in ("-", "+"):
                return
            if text in ("-o", "+o", "-O", "+O"):
                skip = True
                continue
            if text.startswith("--"):
                continue
            if spec.script_flag in text[1:]:
                if idx + 1 < len(args):
                    script_arg = args[idx + 1]
                break
        if script_arg is None or len(script_arg.children) != 1:
            return
        part = script_arg.children[0]
        if part.kind is K.BashQuotedString:
            if part.value not in ("'", '"') or not part.children:
                return
            start = self._frag(part.span.start) + 1
            end = self._frag_end(part) - 1
            if part.value == '"' and ("\\" in self.s[start:end] or "`" in self.s[start:end]):
                return
            holder = part
        elif part.kind is K.BashLiteral:
            if "\\" in (part.value or ""):
                return
            start = self._frag(part.span.start)
            end = self._frag_end(part)
            holder = script_arg
        else:
            return
        sub = _Parser(self.fold, self.lines, self.wrappers, [])
        sub.i, sub.n = start, end
        try:
            items = sub.statement_list(frozenset())
            if sub.i != end:
                return
        except (ShellSyntaxError, _Heredoc):
            return
        self.diagnostics.extend(sub.diagnostics)
        script_children = [sub.make_list(items, start)] if items else []
        script = self.mk(K.BashScript, start, end, children=script_children)
        for c in holder.children:
            c.parent = None
        holder.children = [script]
        script.parent = holder


_OPERATORS = frozenset(
    {K.BashOperatorAnd, K.BashOperatorOr, K.BashOperatorSemicolon, K.BashPipe}
)


def _join_spans(first: SourceSpan, last: SourceSpan) -> SourceSpan:
    return SourceSpan(
        first.start, last.end, first.start_line, first.start_col, last.end_line, last.end_col
    )


def _merge_literals(parts: list[AstNode]) -> list[AstNode]:
    """Adjacent bare literal runs (split around a lone '$') become one literal."""
    merged: list[AstNode] = []
    for part in parts:
        prev = merged[-1] if merged else None
        if (
            prev is not None
            and prev.kind is K.BashLiteral
            and part.kind is K.BashLiteral
            and prev.span.end == part.span.start
        ):
            span = _join_spans(prev.span, part.span)
            merged[-1] = AstNode(K.BashLiteral, None, span, (prev.value or "") + (part.value or ""))
        else:
            merged.append(part)
    return merged


def parse_shell_fragment(
    fold: OffsetMap,
    lines: LineIndex | None = None,
    wrappers: dict[str, WrapperSpec] | None = None,
    opaque: bool = False,
) -> ShellParseOutput:
    """Parse a folded payload into a ``BashScript`` with file-coordinate spans.

    With ``opaque=True`` the whole payload is kept as one opaque node; this
    is also the fallback when the payload falls outside the subset.
    """
    diagnostics: list[ParseDiagnostic] = []
    parser = _Parser(fold, lines, DEFAULT_WRAPPERS if wrappers is None else wrappers, diagnostics)
    text = fold.text
    lo = len(text) - len(text.lstrip())
    hi = len(text.rstrip())
    whole = (0, len(text))
    if lo >= hi:
        return ShellParseOutput(parser.mk(K.BashScript, *whole), diagnostics)
    if not opaque:
        try:
            items = parser.statement_list(frozenset())
            if parser.i < parser.n:
                raise ShellSyntaxError("unexpected input", parser.i)
            body = parser.make_list(items, lo)
            return ShellParseOutput(parser.mk(K.BashScript, *whole, children=[body]), diagnostics)
        except ShellSyntaxError as exc:
            diagnostics.clear()
            pos = min(max(exc.pos, 0), len(text))
            parser.note("warning", f"shell payload kept verbatim: {exc}", pos, pos, "opaque-payload")
    node = parser.mk(K.BashOpaque, lo, hi, text[lo:hi])
    return ShellParseOutput(parser.mk(K.BashScript, *whole, children=[node]), diagnostics)


def parse_shell(text: str, wrappers: dict[str, WrapperSpec] | None = None) -> AstNode:
    """Parse a standalone shell string (offsets relative to ``text``)."""
    fold = OffsetMap(text, list(range(len(text) + 1)))
    return parse_shell_fragment(fold, LineIndex(text), wrappers).script
