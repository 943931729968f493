from __future__ import annotations

import functools
from pathlib import Path

import pytest

from gradualpi.castinsert import insert_casts
from gradualpi.parser import Program, parse
from gradualpi.runtime import Configuration, normalize
from gradualpi.syntax import CPar, CastProcess, free_names
from gradualpi.typecheck import check

CORPUS = Path(__file__).parent / "corpus"
GOLDEN = Path(__file__).parent / "golden"

# Compositions explored by the progress suite: each entry is the list of
# corpus files whose compiled processes run in parallel.
RUNNABLE_CORPUS = [
    ("client.gpi",),
    ("agency.gpi",),
    ("client.gpi", "agency.gpi"),
    ("client.gpi", "misuse_agency.gpi", "stray_payer.gpi"),
    ("printer_server.gpi", "printer_clients.gpi"),
    ("race.gpi",),
    ("repl_dyn.gpi",),
    ("stuck_pair.gpi",),
    ("empty.gpi",),
]


def load(name: str) -> Program:
    path = CORPUS / name
    return parse(path.read_text(encoding="utf-8"), source=str(path))


def compile_corpus(*names: str) -> Configuration:
    """Check and compile each file under its own env, compose, normalize."""
    compiled: list[CastProcess] = []
    protected: set = set()
    for name in names:
        program = load(name)
        result = check(program.env, program.proc)
        assert result.ok, f"{name} failed to check: {result.diagnostics}"
        proc = insert_casts(program.env, program.proc).proc
        compiled.append(proc)
        protected |= free_names(proc) | {n for n, _ in program.env.bindings}
    return normalize(functools.reduce(CPar, compiled), frozenset(protected))


def golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


@pytest.fixture
def corpus_program():
    return load
