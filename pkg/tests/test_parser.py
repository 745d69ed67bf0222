from __future__ import annotations

import shlex

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dockrepair.parser import UnsupportedEncoding, fold, parse_dockerfile, parse_shell
from dockrepair.tree import NodeKind
from dockrepair.words import literal_text

from support import corpus_files, parse, read

K = NodeKind

# plain commands only: no operators, expansions or globbing, so shlex agrees with bash
SHLEX_PAYLOADS = [
    "echo hello",
    "echo 'single quoted words'",
    'echo "double quoted words"',
    "apt-get install -y curl wget",
    "printf '%s\\n' a b c",
    'echo "a \\"quoted\\" word"',
    "echo a\\ b",
    "echo 'it'\\''s'",
    "ls -la /tmp",
    'echo "mixed"\'concat\'bare',
    "tar -xzf archive.tar.gz -C /opt",
    "git clone --depth 1 https://example.com/repo.git",
    "echo ''",
    'echo ""',
    "echo a''b",
    "pip install 'requests>=2.0' \"flask<3\"",
    "sed -e 's/a/b/g' file",
    "awk '{ print $1 }' file",
    "chmod 0755 /usr/local/bin/tool",
    "useradd -m -s /bin/bash user",
    'echo "tab\tinside"',
    "echo \\'escaped\\'",
    "cp a\\\\b c",
    "gpg --batch --keyserver keyserver.ubuntu.com --recv-keys ABC",
    "ln -sf /usr/bin/python3 /usr/bin/python",
    "echo 'x y' \"z w\" v",
    "mkdir -p /usr/src/app",
    "npm install -g yarn@1.22",
    "curl -fsSL https://get.example.com -o get.sh",
    'echo "semi;colon" \'and&amp\'',
]


def _words(script) -> list[str | None]:
    cmd = next(n for n in script.iter() if n.kind is K.BashCommand)
    parts = [c for c in cmd.children if c.kind in (K.BashCommandName, K.BashCommandArgs)]
    return [literal_text(p) for p in parts]


@pytest.mark.parametrize("payload", SHLEX_PAYLOADS)
def test_words_agree_with_shlex(payload: str) -> None:
    assert _words(parse_shell(payload)) == shlex.split(payload, posix=True)


def test_shlex_payload_count() -> None:
    assert len(SHLEX_PAYLOADS) == 30


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.name)
def test_leaf_values_slice_back_to_source(path) -> None:
    text = read(path)
    root = parse(text).root
    for node in root.iter():
        if node.children or node.value is None or node.kind is K.DockerLiteral:
            continue
        piece = text[node.span.start:node.span.end]
        if "\\\n" in piece or "\\\r\n" in piece or "`\n" in piece:
            continue  # continued leaves are covered by the fold tests
        if node.kind is K.BashOpaque:
            assert node.value.strip() == piece.strip()
        else:
            assert piece == node.value, node


_plain_line = st.text(st.characters(blacklist_characters="\\\r\n`", blacklist_categories=("Cs",)), max_size=20)


@given(st.lists(_plain_line, min_size=1, max_size=5))
def test_fold_joins_continued_lines(lines: list[str]) -> None:
    # every line but the last gets a continuation; none is blank or a comment
    lines = ["x" + ln for ln in lines]
    text = "\\\n".join(lines)
    folded = fold(text, 0, len(text))
    assert folded.text == "".join(lines)
    for i, ch in enumerate(folded.text):
        assert text[folded.positions[i]] == ch


@given(_plain_line)
def test_fold_without_continuation_is_identity(line: str) -> None:
    folded = fold(line, 0, len(line))
    assert folded.text == line
    assert folded.positions[: len(line)] == list(range(len(line)))


def test_fold_skips_comment_and_blank_lines_inside_continuation() -> None:
    text = "a \\\n# note\n\n  b"
    assert fold(text, 0, len(text)).text == "a   b"


def test_backtick_escape_directive() -> None:
    text = "# escape=`\nFROM windows\nRUN echo a `\n  b\n"
    result = parse_dockerfile(text)
    assert result.escape_char == "`"


def test_non_utf8_input_is_rejected() -> None:
    with pytest.raises(UnsupportedEncoding):
        parse_dockerfile(b"FROM alpine\nRUN echo \xff\n")


def test_unknown_instruction_is_an_error_diagnostic() -> None:
    result = parse_dockerfile("FROM alpine\nFOO bar\n")
    assert result.has_errors
    assert result.diagnostics[0].span.start_line == 2


def test_clean_file_has_no_error_diagnostics() -> None:
    for path in corpus_files():
        assert not parse(read(path)).has_errors, path


def test_exec_form_run_is_not_shell_parsed() -> None:
    root = parse('FROM alpine\nRUN ["apk", "add", "curl"]\n').root
    run = root.get_child(K.Run)
    assert run.get_child(K.DockerExecForm) is not None
    assert run.get_element(K.BashCommand) is None


def test_sudo_embeds_the_wrapped_command() -> None:
    root = parse("FROM debian\nRUN sudo -u app apt-get install docker\n").root
    outer = root.get_element(K.BashCommand)
    inner = outer.get_child(K.BashCommand)
    assert inner is not None
    assert literal_text(inner.get_child(K.BashCommandName)) == "apt-get"


def test_sh_c_script_is_embedded() -> None:
    root = parse("FROM debian\nRUN sh -c 'apt-get update && apt-get install -y x'\n").root
    inner = [n for n in root.iter() if n.kind is K.BashScript]
    assert len(inner) == 2


def test_heredoc_run_is_opaque_with_diagnostic() -> None:
    result = parse("FROM debian\nRUN <<EOF\necho hi\nEOF\n")
    assert result.root.get_element(K.BashOpaque) is not None
    assert result.diagnostics and not result.has_errors


def test_spans_are_file_global_across_continuations() -> None:
    text = "FROM debian\nRUN apt-get update && \\\n    apt-get install -y curl\n"
    root = parse(text).root
    names = [n for n in root.iter() if n.kind is K.BashCommandName]
    second = names[1]
    assert text[second.span.start:second.span.end] == "apt-get"
    assert second.span.start_line == 3 and second.span.start_col == 5


def test_if_and_for_structure() -> None:
    root = parse("FROM debian\nRUN if [ -f x ]; then a; else b; fi; for i in 1 2; do c $i; done\n").root
    assert root.get_element(K.BashIf).get_child(K.BashIfCondition) is not None
    assert root.get_element(K.BashElseBody) is not None
    assert root.get_element(K.BashFor) is not None


def test_operators_and_pipes_are_nodes() -> None:
    root = parse("FROM debian\nRUN a && b || c; d | e\n").root
    kinds = [n.kind for n in root.get_element(K.BashStatementList).children]
    assert K.BashOperatorAnd in kinds
    assert K.BashOperatorOr in kinds
    assert K.BashOperatorSemicolon in kinds
    assert K.BashPipe in kinds


def test_crlf_file_parses_without_errors() -> None:
    text = "FROM alpine\r\nRUN apk add --no-cache \\\r\n    git\r\n"
    result = parse(text)
    assert not result.has_errors
    args = [literal_text(a) for a in result.root.iter() if a.kind is K.BashCommandArgs]
    assert args == ["add", "--no-cache", "git"]
