from __future__ import annotations

import random

import pytest

from conftest import CORPUS, load
from gen import random_surface
from gradualpi.parser import (
    DuplicateDeclarationError,
    GpiParseError,
    GpiSyntaxError,
    UndeclaredChannelError,
    format_channel,
    parse,
    parse_process,
    print_cast,
    print_surface,
)
from gradualpi.syntax import (
    Capability,
    CastChannel,
    ChanType,
    Choice,
    CTypeError,
    DYN,
    Input,
    Name,
    Nil,
    Output,
    Par,
    Replicate,
    Restrict,
    ReverseOutput,
    alpha_equal,
    free_names,
)

T = ChanType(Capability.OUT, ())


def test_parse_empty_program():
    program = parse("run 0")
    assert program.env.bindings == ()
    assert program.proc == Nil()


def test_parse_client_shape():
    program = load("client.gpi")
    r, b, m100, s = Name("r"), Name("b"), Name("m100"), Name("s")
    assert program.env.lookup(r) == ChanType(Capability.IN, (DYN,))
    assert program.env.lookup(m100) == T
    expected = Input(
        r,
        ((b, DYN),),
        Choice(Output(b, (m100,), Nil()), Input(b, ((s, T),), Nil())),
    )
    assert program.proc == expected


def test_parse_reverse_output_and_sugar():
    proc = parse_process("r!!<x>")
    assert proc == ReverseOutput(Name("r"), (Name("x"),), Nil())
    assert print_surface(proc) == "r!!<x>.0"


def test_parse_precedence_and_associativity():
    proc = parse_process("a!<>.0 + b!<>.0 | c!<>.0")
    assert isinstance(proc, Par)
    assert isinstance(proc.left, Choice)
    right = parse_process("a!<> | b!<> | c!<>")
    assert isinstance(right, Par) and isinstance(right.right, Par)
    plus = parse_process("a!<> + b!<> + c!<>")
    assert isinstance(plus, Choice) and isinstance(plus.right, Choice)


def test_parse_prefix_binds_tighter_than_choice():
    proc = parse_process("new (x:dyn) a!<>.0 + b!<>.0")
    assert isinstance(proc, Choice)
    assert isinstance(proc.left, Restrict)


def test_parse_replication_forms():
    assert parse_process("!a?(x:dyn).0") == Replicate(Input(Name("a"), ((Name("x"), DYN),), Nil()))
    assert parse_process("!!0") == Replicate(Replicate(Nil()))
    assert print_surface(Replicate(Replicate(Nil()))) == "!(!0)"


def test_parse_zero_arity_forms():
    proc = parse_process("a?().a!<>.0")
    assert proc == Input(Name("a"), (), Output(Name("a"), (), Nil()))


def test_parse_errors_carry_positions():
    with pytest.raises(GpiSyntaxError) as err:
        parse("chan a : i(;\nrun 0")
    assert err.value.line == 1 and err.value.col == 12
    assert err.value.expected


def test_duplicate_declaration_rejected():
    with pytest.raises(DuplicateDeclarationError):
        parse("chan a : o(); chan a : o(); run 0")


def test_undeclared_free_name_rejected():
    with pytest.raises(UndeclaredChannelError) as err:
        parse("chan a : o(); run a!<b>.0")
    assert err.value.name == Name("b")


def test_binder_repetition_rejected():
    with pytest.raises(GpiSyntaxError):
        parse_process("a?(x:dyn, x:dyn).0")


def test_capability_letters_are_usable_as_channel_names():
    proc = parse_process("i?(o:dyn).o!<>.0")
    assert proc == Input(Name("i"), ((Name("o"), DYN),), Output(Name("o"), (), Nil()))


def test_reserved_words_are_not_channel_names():
    with pytest.raises(GpiSyntaxError):
        parse("chan dyn : o(); run 0")
    with pytest.raises(GpiSyntaxError):
        parse_process("new!<>.0")


def test_parse_totality_fuzz():
    rng = random.Random(23)
    alphabet = "chan run new dyn io?!<>():;,.|+01xyz'_\"\\\n\t $éλ"
    for _ in range(500):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
        try:
            parse(text)
        except GpiParseError as exc:
            assert exc.line >= 0 and exc.col >= 0


def test_roundtrip_parse_print_surface():
    rng = random.Random(29)
    for _ in range(300):
        proc = random_surface(rng, 6)
        text = print_surface(proc)
        again = parse_process(text)
        assert alpha_equal(proc, again), f"{text!r} reparsed differently"


def test_print_is_deterministic():
    rng = random.Random(31)
    for _ in range(50):
        proc = random_surface(rng, 5)
        assert print_surface(proc) == print_surface(proc)


def test_print_renames_binder_clashing_with_free_rendering():
    # binder (x,1) renders as x'1; a literal free channel x'1 must not be captured
    clash = Name("x'1")
    proc = Input(Name("a"), ((Name("x", 1), DYN),), Output(clash, (Name("x", 1),), Nil()))
    text = print_surface(proc)
    again = parse_process(text)
    assert alpha_equal(proc, again)


def test_spans_cover_and_nest():
    for name in ("client.gpi", "agency.gpi", "sneaky_client.gpi"):
        program = load(name)

        def walk(p, parent):
            assert p.span is not None
            if parent is not None:
                assert parent.contains(p.span), f"{name}: child span escapes parent"
            for attr in ("body", "left", "right"):
                child = getattr(p, attr, None)
                if child is not None:
                    walk(child, p.span)

        walk(program.proc, None)


def test_format_channel_collapses_chains():
    oT = ChanType(Capability.OUT, (T,))
    chan = CastChannel(Name("x"), ((oT, DYN), (DYN, oT)))
    assert format_channel(chan) == "(x : o(o()) => dyn => o(o()))"


def test_format_channel_breaks_at_seams():
    chan = CastChannel(Name("v"), ((T, DYN), (T, DYN)))
    assert format_channel(chan) == "((v : o() => dyn) : o() => dyn)"


def test_print_cast_type_error():
    assert print_cast(CTypeError()) == "typeError"


def test_corpus_files_parse():
    for path in sorted(CORPUS.glob("*.gpi")):
        program = parse(path.read_text(encoding="utf-8"), source=path.name)
        declared = {n for n, _ in program.env.bindings}
        assert free_names(program.proc) <= declared
