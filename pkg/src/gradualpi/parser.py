"""Concrete syntax for `.gpi` programs, plus the pretty-printers.

A program is a sequence of `chan NAME : TYPE ;` declarations followed by
`run PROCESS`.  The grammar is LL(1): prefix operators bind tighter than
`+`, which binds tighter than `|`; both binary operators associate to the
right; `--` starts a line comment; a trailing `.0` after a prefix may be
omitted.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field, replace
from typing import Optional

from .syntax import (
    Capability,
    CastChannel,
    CastProcess,
    ChanType,
    Choice,
    CChoice,
    CInput,
    CNil,
    COutput,
    CPar,
    CReplicate,
    CRestrict,
    CTypeError,
    DYN,
    Input,
    Name,
    Nil,
    Output,
    Par,
    Process,
    Replicate,
    Restrict,
    ReverseOutput,
    Span,
    SurfaceProcess,
    Type,
    TypeEnv,
    free_names,
    substitute,
    substitute_surface,
)


class GpiParseError(Exception):
    """Any rejection of input text; always carries a source position."""

    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = expected
        super().__init__(f"{line}:{col}: {message}")


class GpiSyntaxError(GpiParseError):
    pass


class UndeclaredChannelError(GpiParseError):
    def __init__(self, name: Name, line: int, col: int):
        super().__init__(f"channel {name} is used but not declared", line, col)
        self.name = name


class DuplicateDeclarationError(GpiParseError):
    def __init__(self, name: Name, line: int, col: int):
        super().__init__(f"channel {name} is declared twice", line, col)
        self.name = name


@dataclass(frozen=True)
class Program:
    """A parsed `.gpi` file: declared channel types and the process to run."""

    env: TypeEnv
    proc: SurfaceProcess
    source: Optional[str] = field(default=None, compare=False)


# --------------------------------------------------------------------------
# Lexer
# --------------------------------------------------------------------------

_IDENT_START = set(string.ascii_letters + "_")
_IDENT_CONT = _IDENT_START | set(string.digits) | {"'"}
_KEYWORDS = {"chan", "run", "new", "dyn"}


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    col: int

    @property
    def end_col(self) -> int:
        return self.col + len(self.text)


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i = 1, 1, 0
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
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c in _IDENT_START:
            j = i
            while j < n and text[j] in _IDENT_CONT:
                j += 1
            word = text[i:j]
            kind = word if word in _KEYWORDS else "ident"
            tokens.append(_Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        if c == "0" and (i + 1 >= n or text[i + 1] not in _IDENT_CONT):
            tokens.append(_Token("0", "0", line, col))
            i += 1
            col += 1
            continue
        if text.startswith("!!", i):
            tokens.append(_Token("!!", "!!", line, col))
            i += 2
            col += 2
            continue
        if c in "()<>:;,.!?+|":
            tokens.append(_Token(c, c, line, col))
            i += 1
            col += 1
            continue
        raise GpiSyntaxError(f"unexpected character {c!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail((kind,))
        return self.next()

    def fail(self, expected: tuple[str, ...]) -> None:
        tok = self.peek()
        shown = tok.text if tok.kind != "eof" else "end of input"
        want = ", ".join(repr(e) for e in expected)
        raise GpiSyntaxError(f"unexpected {shown!r}, expected one of: {want}", tok.line, tok.col, expected)

    # -- types ------------------------------------------------------------

    def parse_type(self) -> Type:
        tok = self.peek()
        if tok.kind == "dyn":
            self.next()
            return DYN
        if tok.kind == "ident" and tok.text in ("i", "o"):
            self.next()
            cap = Capability.IN if tok.text == "i" else Capability.OUT
            self.expect("(")
            args: list[Type] = []
            if self.peek().kind != ")":
                args.append(self.parse_type())
                while self.peek().kind == ",":
                    self.next()
                    args.append(self.parse_type())
            self.expect(")")
            return ChanType(cap, tuple(args))
        self.fail(("dyn", "i", "o"))
        raise AssertionError  # unreachable

    # -- processes ---------------------------------------------------------

    def parse_process(self) -> SurfaceProcess:
        start = self.peek()
        left = self.parse_choice()
        if self.peek().kind == "|":
            self.next()
            right = self.parse_process()
            return Par(left, right, self._span(start))
        return left

    def parse_choice(self) -> SurfaceProcess:
        start = self.peek()
        left = self.parse_prefix()
        if self.peek().kind == "+":
            self.next()
            right = self.parse_choice()
            return Choice(left, right, self._span(start))
        return left

    def parse_prefix(self) -> SurfaceProcess:
        tok = self.peek()
        if tok.kind == "0":
            self.next()
            return Nil(Span(tok.line, tok.col, tok.line, tok.end_col))
        if tok.kind == "!":
            self.next()
            body = self.parse_prefix()
            return Replicate(body, self._span(tok))
        if tok.kind == "!!":
            # '!!P' is two replications; the reverse-output '!!' only follows a name.
            self.next()
            body = self.parse_prefix()
            inner = Replicate(body, self._span(tok))
            return Replicate(inner, self._span(tok))
        if tok.kind == "new":
            self.next()
            self.expect("(")
            name_tok = self.expect("ident")
            self.expect(":")
            ty = self.parse_type()
            self.expect(")")
            body = self.parse_prefix()
            return Restrict(Name(name_tok.text), ty, body, self._span(tok))
        if tok.kind == "(":
            self.next()
            inner = self.parse_process()
            close = self.expect(")")
            return replace(inner, span=Span(tok.line, tok.col, close.line, close.end_col))
        if tok.kind == "ident":
            return self.parse_prefixed(tok)
        self.fail(("0", "!", "new", "(", "channel name"))
        raise AssertionError

    def parse_prefixed(self, start: _Token) -> SurfaceProcess:
        subject = Name(self.next().text)
        tok = self.peek()
        if tok.kind == "?":
            self.next()
            self.expect("(")
            binders: list[tuple[Name, Type]] = []
            if self.peek().kind != ")":
                binders.append(self.parse_binder(binders))
                while self.peek().kind == ",":
                    self.next()
                    binders.append(self.parse_binder(binders))
            close = self.expect(")")
            body = self.parse_continuation(close)
            return Input(subject, tuple(binders), body, self._span(start))
        if tok.kind in ("!", "!!"):
            self.next()
            self.expect("<")
            args: list[Name] = []
            if self.peek().kind != ">":
                args.append(Name(self.expect("ident").text))
                while self.peek().kind == ",":
                    self.next()
                    args.append(Name(self.expect("ident").text))
            close = self.expect(">")
            body = self.parse_continuation(close)
            node = Output if tok.kind == "!" else ReverseOutput
            return node(subject, tuple(args), body, self._span(start))
        self.fail(("?", "!", "!!"))
        raise AssertionError

    def parse_binder(self, seen: list[tuple[Name, Type]]) -> tuple[Name, Type]:
        tok = self.expect("ident")
        name = Name(tok.text)
        if any(name == m for m, _ in seen):
            raise GpiSyntaxError(f"binder {name} repeated in one input", tok.line, tok.col)
        self.expect(":")
        return name, self.parse_type()

    def parse_continuation(self, close: _Token) -> SurfaceProcess:
        if self.peek().kind == ".":
            self.next()
            return self.parse_prefix()
        # omitted trailing .0
        return Nil(Span(close.line, close.end_col, close.line, close.end_col))

    def _span(self, start: _Token) -> Span:
        prev = self.tokens[self.pos - 1]
        return Span(start.line, start.col, prev.line, prev.end_col)

    # -- programs ----------------------------------------------------------

    def parse_program(self, source: Optional[str]) -> Program:
        decls: list[tuple[Name, Type]] = []
        while self.peek().kind == "chan":
            self.next()
            tok = self.expect("ident")
            name = Name(tok.text)
            if any(name == m for m, _ in decls):
                raise DuplicateDeclarationError(name, tok.line, tok.col)
            self.expect(":")
            ty = self.parse_type()
            self.expect(";")
            decls.append((name, ty))
        self.expect("run")
        proc = self.parse_process()
        self.expect("eof")
        _check_declared(proc, frozenset(n for n, _ in decls))
        return Program(TypeEnv(tuple(decls)), proc, source)


def _check_declared(proc: SurfaceProcess, declared: frozenset[Name]) -> None:
    def walk(p: SurfaceProcess, bound: frozenset[Name]) -> None:
        def need(n: Name) -> None:
            if n not in bound and n not in declared:
                span = p.span
                line, col = (span.line, span.col) if span else (0, 0)
                raise UndeclaredChannelError(n, line, col)

        match p:
            case Nil():
                return
            case Input(a, binders, body):
                need(a)
                walk(body, bound | {n for n, _ in binders})
            case Output(a, args, body) | ReverseOutput(a, args, body):
                need(a)
                for x in args:
                    need(x)
                walk(body, bound)
            case Par(l, r) | Choice(l, r):
                walk(l, bound)
                walk(r, bound)
            case Restrict(x, _, body):
                walk(body, bound | {x})
            case Replicate(body):
                walk(body, bound)

    walk(proc, frozenset())


def parse(text: str, source: Optional[str] = None) -> Program:
    """Parse a `.gpi` program; every rejection raises a positioned error."""
    return _Parser(_lex(text)).parse_program(source)


def parse_process(text: str) -> SurfaceProcess:
    """Parse a bare process (no declarations); used by tests."""
    parser = _Parser(_lex(text))
    proc = parser.parse_process()
    parser.expect("eof")
    return proc


# --------------------------------------------------------------------------
# Pretty-printers
# --------------------------------------------------------------------------

_PAR, _CHOICE, _PREFIX = 0, 1, 2


def format_type(t: Type) -> str:
    return str(t)


def format_channel(c: CastChannel) -> str:
    """Collapsed chain notation, e.g. `(x : o(o()) => dyn => o(o()))`.

    Stacks whose frames do not chain are printed as nested groups.
    """
    if c.is_bare:
        return str(c.base)
    out = str(c.base)
    chain: list[Type] = [c.casts[0][0], c.casts[0][1]]
    for source, target in c.casts[1:]:
        if source == chain[-1]:
            chain.append(target)
        else:
            out = f"({out} : {' => '.join(str(t) for t in chain)})"
            chain = [source, target]
    return f"({out} : {' => '.join(str(t) for t in chain)})"


def print_surface(p: SurfaceProcess) -> str:
    """Deterministic text that re-parses to an alpha-equivalent process."""
    return _fmt(p, _PAR)


def print_cast(p: CastProcess) -> str:
    """Deterministic text for cast-calculus terms; `typeError` prints as such."""
    return _fmt(p, _PAR)


def _fmt(p: Process, want: int) -> str:
    s, level = _raw(p)
    return f"({s})" if level < want else s


def _binder_list(binders: tuple[tuple[Name, Type], ...]) -> str:
    return ", ".join(f"{n}:{t}" for n, t in binders)


def _safe_binders(binders, body, is_surface: bool):
    """Rename binders whose rendering would collide with a free name's."""
    free_renders = {str(n) for n in free_names(body) - {n for n, _ in binders}}
    taken: set[str] = set()
    out = []
    for n, t in binders:
        m = n
        while str(m) in free_renders or str(m) in taken:
            m = Name(m.base, m.index + 1)
        if m != n:
            if is_surface:
                body = substitute_surface(body, {n: m})
            else:
                body = substitute(body, {n: CastChannel(m)})
        taken.add(str(m))
        out.append((m, t))
    return tuple(out), body


def _raw(p: Process) -> tuple[str, int]:
    match p:
        case Nil() | CNil():
            return "0", _PREFIX
        case CTypeError():
            return "typeError", _PREFIX
        case Input(a, binders, body):
            binders, body = _safe_binders(binders, body, True)
            return f"{a}?({_binder_list(binders)}).{_fmt(body, _PREFIX)}", _PREFIX
        case CInput(c, binders, body):
            binders, body = _safe_binders(binders, body, False)
            return f"{format_channel(c)}?({_binder_list(binders)}).{_fmt(body, _PREFIX)}", _PREFIX
        case Output(a, args, body):
            inner = ", ".join(str(x) for x in args)
            return f"{a}!<{inner}>.{_fmt(body, _PREFIX)}", _PREFIX
        case ReverseOutput(a, args, body):
            inner = ", ".join(str(x) for x in args)
            return f"{a}!!<{inner}>.{_fmt(body, _PREFIX)}", _PREFIX
        case COutput(c, args, body):
            inner = ", ".join(format_channel(x) for x in args)
            return f"{format_channel(c)}!<{inner}>.{_fmt(body, _PREFIX)}", _PREFIX
        case Par(l, r) | CPar(l, r):
            return f"{_fmt(l, _CHOICE)} | {_fmt(r, _PAR)}", _PAR
        case Choice(l, r) | CChoice(l, r):
            return f"{_fmt(l, _PREFIX)} + {_fmt(r, _CHOICE)}", _CHOICE
        case Restrict(x, t, body) | CRestrict(x, t, body):
            (binder,), body = _safe_binders(((x, t),), body, isinstance(p, Restrict))
            return f"new ({binder[0]}:{binder[1]}) {_fmt(body, _PREFIX)}", _PREFIX
        case Replicate(body) | CReplicate(body):
            inner = _fmt(body, _PREFIX)
            if isinstance(body, (Replicate, CReplicate)):
                inner = f"({inner})"
            return f"!{inner}", _PREFIX
    raise TypeError(f"not a process: {p!r}")
