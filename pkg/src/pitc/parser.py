"""Concrete syntax: tokenizer, recursive-descent parser, and pretty printer.

Grammar (tightest binding first):

    prefix      tau.P   x!y.P   x?(y).P
    nu          nu x. P
    parallel    P | Q
    sum         P + Q

`0` is the inert process, `A(x,y)` calls a definition, parentheses group,
`#` starts a line comment.  Source files hold one entry per line, either a
definition `A(x,y) := P` or a named term `name = P`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .errors import ParseError
from .syntax import (
    NIL, Call, Definition, Environment, InputPrefix, Nil, OutputPrefix, Par,
    Process, Restriction, Sum, TauPrefix,
)

_SINGLE = set("!?().+|,=")


@dataclass(frozen=True, slots=True)
class Token:
    kind: str          # NAME, ZERO, TAU, NU, or a punctuation string
    text: str
    line: int
    column: int


def tokenize(text: str, first_line: int = 1) -> list[Token]:
    toks: list[Token] = []
    line = first_line
    col = 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith(":=", i):
            toks.append(Token(":=", ":=", line, col))
            i += 2
            col += 2
            continue
        if c == "0":
            toks.append(Token("ZERO", "0", line, col))
            i += 1
            col += 1
            continue
        if c.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word == "tau":
                toks.append(Token("TAU", word, line, col))
            elif word == "nu":
                toks.append(Token("NU", word, line, col))
            else:
                toks.append(Token("NAME", word, line, col))
            col += j - i
            i = j
            continue
        if c in _SINGLE:
            toks.append(Token(c, c, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(Token("EOF", "", line, col))
    return toks


class _Parser:
    def __init__(self, tokens: list[Token], named: Mapping[str, Process]) -> None:
        self.toks = tokens
        self.pos = 0
        self.named = named

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.text or 'end of input'!r}",
                             t.line, t.column)
        return self.next()

    def fail(self, message: str) -> ParseError:
        t = self.peek()
        return ParseError(message, t.line, t.column)

    def name(self, what: str = "name") -> Token:
        t = self.peek()
        if t.kind != "NAME":
            raise self.fail(f"expected {what}, found {t.text or 'end of input'!r}")
        return self.next()

    # term := sum
    def term(self) -> Process:
        return self.sum()

    def sum(self) -> Process:
        p = self.par()
        while self.peek().kind == "+":
            self.next()
            p = Sum(p, self.par())
        return p

    def par(self) -> Process:
        p = self.res()
        while self.peek().kind == "|":
            self.next()
            p = Par(p, self.res())
        return p

    def res(self) -> Process:
        if self.peek().kind == "NU":
            self.next()
            binder = self.name("restricted name")
            self.expect(".")
            return Restriction(binder.text, self.res())
        return self.prefix()

    def prefix(self) -> Process:
        t = self.peek()
        if t.kind == "TAU":
            self.next()
            self.expect(".")
            return TauPrefix(self.res())
        if t.kind == "NAME":
            after = self.toks[self.pos + 1]
            if after.kind == "!":
                self.next()
                self.next()
                obj = self.name("output object")
                self.expect(".")
                return OutputPrefix(t.text, obj.text, self.res())
            if after.kind == "?":
                self.next()
                self.next()
                self.expect("(")
                binder = self.name("input binder")
                self.expect(")")
                self.expect(".")
                return InputPrefix(t.text, binder.text, self.res())
        return self.atom()

    def atom(self) -> Process:
        t = self.peek()
        if t.kind == "ZERO":
            self.next()
            return NIL
        if t.kind == "(":
            self.next()
            p = self.sum()
            self.expect(")")
            return p
        if t.kind == "NAME":
            after = self.toks[self.pos + 1]
            if after.kind == "(":
                self.next()
                self.next()
                args: list[str] = []
                if self.peek().kind != ")":
                    args.append(self.name("argument").text)
                    while self.peek().kind == ",":
                        self.next()
                        args.append(self.name("argument").text)
                self.expect(")")
                return Call(t.text, tuple(args))
            if t.text in self.named:
                self.next()
                return self.named[t.text]
            raise ParseError(f"unknown term name {t.text!r} "
                             "(a bare name is only a term when bound in a file)",
                             t.line, t.column)
        raise self.fail(f"expected a process term, found {t.text or 'end of input'!r}")


def parse_term(text: str, named: Optional[Mapping[str, Process]] = None,
               first_line: int = 1) -> Process:
    parser = _Parser(tokenize(text, first_line), named or {})
    p = parser.term()
    parser.expect("EOF")
    return p


# --------------------------------------------------------------------------
# Source files
# --------------------------------------------------------------------------

@dataclass
class SourceFile:
    """Parsed `.pitc` file: definitions plus optional named terms."""

    definitions: list[Definition] = field(default_factory=list)
    named: dict[str, Process] = field(default_factory=dict)

    def environment(self) -> Environment:
        return Environment(self.definitions)


def parse_file(text: str) -> SourceFile:
    out = SourceFile()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        toks = tokenize(raw, first_line=lineno)
        # Definition heads look like NAME ( params ) :=
        if (toks[0].kind == "NAME" and len(toks) > 1 and toks[1].kind == "("):
            close = next((k for k, t in enumerate(toks) if t.kind == ")"), None)
            if close is not None and close + 1 < len(toks) and toks[close + 1].kind == ":=":
                out.definitions.append(_parse_definition(toks, out.named))
                continue
        if toks[0].kind == "NAME" and len(toks) > 1 and toks[1].kind == "=":
            name = toks[0].text
            if name in out.named:
                raise ParseError(f"duplicate named term {name!r}",
                                 toks[0].line, toks[0].column)
            parser = _Parser(toks[2:] , out.named)
            body = parser.term()
            parser.expect("EOF")
            out.named[name] = body
            continue
        raise ParseError("expected `A(params) := term` or `name = term`",
                         toks[0].line, toks[0].column)
    return out


def _parse_definition(toks: list[Token], named: Mapping[str, Process]) -> Definition:
    parser = _Parser(toks, named)
    head = parser.name("identifier")
    parser.expect("(")
    params: list[str] = []
    if parser.peek().kind != ")":
        params.append(parser.name("parameter").text)
        while parser.peek().kind == ",":
            parser.next()
            params.append(parser.name("parameter").text)
    parser.expect(")")
    parser.expect(":=")
    body = parser.term()
    parser.expect("EOF")
    return Definition(head.text, tuple(params), body)


def load_file(path: str) -> SourceFile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_file(fh.read())


# --------------------------------------------------------------------------
# Pretty printer
# --------------------------------------------------------------------------

_LEVEL_SUM = 0
_LEVEL_PAR = 1
_LEVEL_RES = 2
_LEVEL_ATOM = 4


def format_process(p: Process) -> str:
    return _fmt(p, _LEVEL_SUM)


def _level(p: Process) -> int:
    if isinstance(p, Sum):
        return _LEVEL_SUM
    if isinstance(p, Par):
        return _LEVEL_PAR
    if isinstance(p, (Restriction, TauPrefix, OutputPrefix, InputPrefix)):
        return _LEVEL_RES
    return _LEVEL_ATOM


def _fmt(p: Process, minimum: int) -> str:
    lvl = _level(p)
    if isinstance(p, Nil):
        body = "0"
    elif isinstance(p, Call):
        body = f"{p.ident}({', '.join(p.args)})" if p.args else f"{p.ident}()"
    elif isinstance(p, TauPrefix):
        body = f"tau.{_fmt(p.cont, _LEVEL_RES)}"
    elif isinstance(p, OutputPrefix):
        body = f"{p.subject}!{p.object}.{_fmt(p.cont, _LEVEL_RES)}"
    elif isinstance(p, InputPrefix):
        body = f"{p.subject}?({p.binder}).{_fmt(p.cont, _LEVEL_RES)}"
    elif isinstance(p, Restriction):
        body = f"nu {p.binder}. {_fmt(p.body, _LEVEL_RES)}"
    elif isinstance(p, Par):
        body = f"{_fmt(p.left, _LEVEL_PAR)} | {_fmt(p.right, _LEVEL_PAR + 1)}"
    elif isinstance(p, Sum):
        body = f"{_fmt(p.left, _LEVEL_SUM)} + {_fmt(p.right, _LEVEL_SUM + 1)}"
    else:
        raise TypeError(f"not a process: {p!r}")
    if lvl < minimum:
        return f"({body})"
    return body
