"""Execution of cast-calculus configurations.

A configuration is the canonical form standing in for structural
congruence: restrictions hoisted to the top (freshened on the way up),
parallel compositions flattened into a thread list, nils dropped.  The
step relation has four redex kinds:

* ``comm``   -- both subjects bare, same channel: communicate.
* ``c-solve`` -- same channel, at least one subject cast: commit to the
  pair and resolve both subjects' casts in one big step (output side
  first), leaving a bare pair behind or halting with a type error.
* ``choice`` -- replace a choice thread by one branch (the scheduler, or
  a human in interactive mode, decides which).
* ``replicate`` -- lay down one copy of a replicated thread, offered only
  when the copy could take part in some communication.

Casts on an output's arguments never block anything; they are examined
only if the value is later used as a subject.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence, Union

from .parser import format_channel, print_cast
from .syntax import (
    Capability,
    CastChannel,
    CastProcess,
    ChanType,
    CChoice,
    CInput,
    CNil,
    COutput,
    CPar,
    CReplicate,
    CRestrict,
    CTypeError,
    DYN,
    Dyn,
    Name,
    Type,
    canonical,
    free_names,
    free_occurrence_order,
    fresh_name,
    substitute,
)


class Status(enum.Enum):
    NORMAL_STUCK = "normal-stuck"
    TYPE_ERROR = "type-error"
    MAX_STEPS = "max-steps"
    DEPTH_EXCEEDED = "depth-exceeded"


class MalformedCastError(Exception):
    """A cast frame no resolution rule covers: an internal-invariant breach,
    deliberately distinct from a run-time typeError."""


class InteractiveAbort(Exception):
    """The interactive chooser gave up (end of input)."""


@dataclass(frozen=True)
class Halt:
    status: Status
    failing: Optional[CastChannel] = None
    rule: Optional[str] = None

    def describe(self) -> str:
        if self.status is Status.TYPE_ERROR and self.failing is not None:
            return f"type-error({format_channel(self.failing)})"
        return self.status.value


@dataclass(frozen=True)
class Configuration:
    """Canonical run-time state: hoisted restrictions plus a thread list."""

    restrictions: tuple[tuple[Name, Type], ...]
    threads: tuple[CastProcess, ...]
    halted: Optional[Halt] = None
    protected: frozenset[Name] = frozenset()


@dataclass(frozen=True)
class Redex:
    kind: str  # "comm" | "c-solve" | "choice-left" | "choice-right" | "replicate"
    participants: tuple[int, ...]
    channel: Optional[Name] = None

    def describe(self) -> str:
        if self.kind in ("comm", "c-solve"):
            i, j = self.participants
            return f"{self.kind} on {self.channel} (threads {i}, {j})"
        return f"{self.kind} (thread {self.participants[0]})"


@dataclass(frozen=True)
class TraceEvent:
    index: int
    rule: str  # "comm" | "c-solve" | "choice" | "replicate"
    detail: tuple[str, ...]
    before: str
    after: str

    def format(self) -> str:
        label = self.rule if not self.detail else f"{self.rule}: {', '.join(self.detail)}"
        return f"#{self.index} [{label}] {self.before} --> {self.after}"


@dataclass(frozen=True)
class Outcome:
    status: Status
    halt: Halt
    trace: tuple[TraceEvent, ...]


@dataclass(frozen=True)
class RunReport:
    outcomes: tuple[Outcome, ...]

    def statuses(self) -> tuple[Status, ...]:
        return tuple(o.status for o in self.outcomes)


# --------------------------------------------------------------------------
# Normalization (structural congruence as a canonical form)
# --------------------------------------------------------------------------


def _flatten_into(
    term: CastProcess,
    restrictions: list[tuple[Name, Type]],
    threads: list[CastProcess],
    avoid: set[Name],
    halts: list[Halt],
) -> None:
    match term:
        case CNil():
            return
        case CPar(l, r):
            _flatten_into(l, restrictions, threads, avoid, halts)
            _flatten_into(r, restrictions, threads, avoid, halts)
        case CRestrict(x, t, body):
            if x in avoid:
                renamed = fresh_name(x, avoid)
                body = substitute(body, {x: CastChannel(renamed)})
                x = renamed
            avoid.add(x)
            restrictions.append((x, t))
            _flatten_into(body, restrictions, threads, avoid, halts)
        case CTypeError():
            halts.append(Halt(Status.TYPE_ERROR))
            threads.append(term)
        case _:
            threads.append(term)


def normalize(proc: CastProcess, protected: frozenset[Name] = frozenset()) -> Configuration:
    """Flatten a process into a configuration, extruding restrictions."""
    avoid = set(protected) | set(free_names(proc))
    restrictions: list[tuple[Name, Type]] = []
    threads: list[CastProcess] = []
    halts: list[Halt] = []
    _flatten_into(proc, restrictions, threads, avoid, halts)
    return Configuration(
        tuple(restrictions),
        tuple(threads),
        halts[0] if halts else None,
        frozenset(protected),
    )


def _rebuild(
    cfg: Configuration,
    replacements: Mapping[int, Sequence[CastProcess]],
    halted: Optional[Halt] = None,
) -> Configuration:
    avoid = set(cfg.protected)
    avoid.update(name for name, _ in cfg.restrictions)
    for i, thread in enumerate(cfg.threads):
        if i not in replacements:
            avoid |= free_names(thread)
    for items in replacements.values():
        for item in items:
            avoid |= free_names(item)
    restrictions = list(cfg.restrictions)
    threads: list[CastProcess] = []
    halts: list[Halt] = []
    for i, thread in enumerate(cfg.threads):
        if i in replacements:
            for item in replacements[i]:
                _flatten_into(item, restrictions, threads, avoid, halts)
        else:
            threads.append(thread)
    final = halted or cfg.halted or (halts[0] if halts else None)
    return Configuration(tuple(restrictions), tuple(threads), final, cfg.protected)


# --------------------------------------------------------------------------
# Redex enumeration
# --------------------------------------------------------------------------

_KIND_ORDER = {"comm": 0, "c-solve": 0, "choice-left": 1, "choice-right": 2, "replicate": 3}


def enumerate_redexes(cfg: Configuration) -> tuple[Redex, ...]:
    """Every enabled redex, in a fixed order (thread index, then channel)."""
    if cfg.halted is not None:
        return ()
    redexes: list[Redex] = []
    inputs = [(i, t) for i, t in enumerate(cfg.threads) if isinstance(t, CInput)]
    outputs = [(j, t) for j, t in enumerate(cfg.threads) if isinstance(t, COutput)]
    for i, inp in inputs:
        for j, out in outputs:
            if inp.subject.base != out.subject.base:
                continue
            if len(inp.binders) != len(out.args):
                continue
            bare = inp.subject.is_bare and out.subject.is_bare
            redexes.append(Redex("comm" if bare else "c-solve", (i, j), inp.subject.base))
    for i, thread in enumerate(cfg.threads):
        if isinstance(thread, CChoice):
            redexes.append(Redex("choice-left", (i,)))
            redexes.append(Redex("choice-right", (i,)))
        elif isinstance(thread, CReplicate) and _unfold_useful(cfg, i, thread):
            redexes.append(Redex("replicate", (i,)))
    redexes.sort(
        key=lambda r: (
            r.participants[0],
            _KIND_ORDER[r.kind],
            r.participants[1:],
            r.channel.base if r.channel else "",
            r.channel.index if r.channel else -1,
        )
    )
    return tuple(redexes)


def _heads(term: CastProcess, acc: list[tuple[str, Name, int]]) -> None:
    """Input/output prefixes reachable without consuming any prefix."""
    match term:
        case CNil() | CTypeError():
            return
        case CInput(c, binders, _):
            acc.append(("in", c.base, len(binders)))
        case COutput(c, args, _):
            acc.append(("out", c.base, len(args)))
        case CPar(l, r) | CChoice(l, r):
            _heads(l, acc)
            _heads(r, acc)
        case CRestrict(_, _, body) | CReplicate(body):
            _heads(body, acc)


def _unfold_useful(cfg: Configuration, index: int, thread: CReplicate) -> bool:
    mine: list[tuple[str, Name, int]] = []
    _heads(thread.body, mine)
    pool: list[tuple[str, Name, int]] = list(mine)
    for k, other in enumerate(cfg.threads):
        if k != index:
            _heads(other, pool)
    for direction, base, arity in mine:
        want = "in" if direction == "out" else "out"
        if any(d == want and b == base and n == arity for d, b, n in pool):
            return True
    return False


# --------------------------------------------------------------------------
# Big-step cast resolution
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CastFailure:
    failing: CastChannel
    rule: str  # "c-out-fail" | "c-in-fail"


def resolve_output_casts(
    out: COutput,
) -> tuple[Union[COutput, CastFailure], tuple[str, ...]]:
    """Strip the output subject's casts, distributing them to the arguments.

    Each popped o-to-o frame wraps every argument contravariantly (from the
    frame's target argument type back to its source argument type); a dyn
    source is first expanded to an output capability of dyns with the
    target's arity; an i-to-o frame is a run-time type error.  Returns the
    bare-subject output (or the failure) plus the rules applied, in order.
    """
    subject = out.subject
    args = list(out.args)
    applied: list[str] = []
    while subject.casts:
        source, target = subject.casts[-1]
        if not (isinstance(target, ChanType) and target.cap is Capability.OUT):
            raise MalformedCastError(
                f"output subject cast does not end in an output capability: {format_channel(subject)}"
            )
        if isinstance(source, Dyn):
            expanded = ChanType(Capability.OUT, (DYN,) * len(target.args))
            frames = list(subject.casts)
            frames[-1] = (expanded, target)
            if len(frames) >= 2 and frames[-2][1] == source:
                frames[-2] = (frames[-2][0], expanded)
            subject = CastChannel(subject.base, tuple(frames))
            applied.append("c-out-expand")
            continue
        if source.cap is Capability.IN:
            applied.append("c-out-fail")
            return CastFailure(subject, "c-out-fail"), tuple(applied)
        if len(source.args) != len(target.args) or len(target.args) != len(args):
            raise MalformedCastError(
                f"cast frame arity does not match the output arguments: {format_channel(subject)}"
            )
        args = [a.push(s, t) for a, s, t in zip(args, target.args, source.args)]
        subject = CastChannel(subject.base, subject.casts[:-1])
        applied.append("c-out-succeed")
    return COutput(subject, tuple(args), out.body), tuple(applied)


def resolve_input_casts(
    inp: CInput, out: COutput
) -> tuple[Union[tuple[CInput, COutput], CastFailure], tuple[str, ...]]:
    """Strip the input subject's casts against a bare-subject output partner.

    Each popped i-to-i frame rewrites the binder annotations from the
    frame's target arguments to its source arguments and wraps the output's
    arguments in the matching contravariant frames; dyn sources expand; an
    o-to-i frame is a run-time type error.
    """
    if not out.subject.is_bare:
        raise MalformedCastError("input casts are resolved against a bare-subject output")
    subject = inp.subject
    binders = list(inp.binders)
    args = list(out.args)
    applied: list[str] = []
    while subject.casts:
        source, target = subject.casts[-1]
        if not (isinstance(target, ChanType) and target.cap is Capability.IN):
            raise MalformedCastError(
                f"input subject cast does not end in an input capability: {format_channel(subject)}"
            )
        if list(target.args) != [t for _, t in binders]:
            raise MalformedCastError(
                f"cast frame does not match the binder annotations: {format_channel(subject)}"
            )
        if isinstance(source, Dyn):
            expanded = ChanType(Capability.IN, (DYN,) * len(target.args))
            frames = list(subject.casts)
            frames[-1] = (expanded, target)
            if len(frames) >= 2 and frames[-2][1] == source:
                frames[-2] = (frames[-2][0], expanded)
            subject = CastChannel(subject.base, tuple(frames))
            applied.append("c-in-expand")
            continue
        if source.cap is Capability.OUT:
            applied.append("c-in-fail")
            return CastFailure(subject, "c-in-fail"), tuple(applied)
        if len(source.args) != len(target.args) or len(target.args) != len(args):
            raise MalformedCastError(
                f"cast frame arity does not match the communication: {format_channel(subject)}"
            )
        args = [c.push(s, t) for c, s, t in zip(args, target.args, source.args)]
        binders = [(n, t) for (n, _), t in zip(binders, source.args)]
        subject = CastChannel(subject.base, subject.casts[:-1])
        applied.append("c-in-succeed")
    resolved = (CInput(subject, tuple(binders), inp.body), COutput(out.subject, tuple(args), out.body))
    return resolved, tuple(applied)


# --------------------------------------------------------------------------
# The step relation
# --------------------------------------------------------------------------


def _pair_strings(cfg: Configuration, i: int, j: int) -> tuple[int, int, str]:
    lo, hi = (i, j) if i < j else (j, i)
    return lo, hi, f"{print_cast(cfg.threads[lo])} | {print_cast(cfg.threads[hi])}"


def step(cfg: Configuration, redex: Redex, index: int = 0) -> tuple[Configuration, TraceEvent]:
    """Apply one redex; returns the new configuration and its trace event."""
    if cfg.halted is not None:
        raise ValueError("cannot step a halted configuration")
    if any(k >= len(cfg.threads) for k in redex.participants):
        raise ValueError(f"stale redex: {redex}")

    if redex.kind == "comm":
        i, j = redex.participants
        inp, out = cfg.threads[i], cfg.threads[j]
        if not (isinstance(inp, CInput) and isinstance(out, COutput)):
            raise ValueError(f"stale redex: {redex}")
        mapping = {name: chan for (name, _), chan in zip(inp.binders, out.args)}
        results = {i: substitute(inp.body, mapping), j: out.body}
        lo, hi, before = _pair_strings(cfg, i, j)
        after = f"{print_cast(results[lo])} | {print_cast(results[hi])}"
        cfg2 = _rebuild(cfg, {i: [results[i]], j: [results[j]]})
        return cfg2, TraceEvent(index, "comm", (), before, after)

    if redex.kind == "c-solve":
        i, j = redex.participants
        inp, out = cfg.threads[i], cfg.threads[j]
        if not (isinstance(inp, CInput) and isinstance(out, COutput)):
            raise ValueError(f"stale redex: {redex}")
        lo, hi, before = _pair_strings(cfg, i, j)
        out_result, out_applied = resolve_output_casts(out)
        if isinstance(out_result, CastFailure):
            halt = Halt(Status.TYPE_ERROR, out_result.failing, out_result.rule)
            cfg2 = _rebuild(cfg, {i: [CTypeError()], j: []}, halted=halt)
            return cfg2, TraceEvent(index, "c-solve", out_applied, before, "typeError")
        in_result, in_applied = resolve_input_casts(inp, out_result)
        applied = out_applied + in_applied
        if isinstance(in_result, CastFailure):
            halt = Halt(Status.TYPE_ERROR, in_result.failing, in_result.rule)
            cfg2 = _rebuild(cfg, {i: [CTypeError()], j: []}, halted=halt)
            return cfg2, TraceEvent(index, "c-solve", applied, before, "typeError")
        inp2, out2 = in_result
        results = {i: inp2, j: out2}
        after = f"{print_cast(results[lo])} | {print_cast(results[hi])}"
        cfg2 = _rebuild(cfg, {i: [inp2], j: [out2]})
        return cfg2, TraceEvent(index, "c-solve", applied, before, after)

    if redex.kind in ("choice-left", "choice-right"):
        (i,) = redex.participants
        thread = cfg.threads[i]
        if not isinstance(thread, CChoice):
            raise ValueError(f"stale redex: {redex}")
        side = "left" if redex.kind == "choice-left" else "right"
        branch = thread.left if side == "left" else thread.right
        cfg2 = _rebuild(cfg, {i: [branch]})
        return cfg2, TraceEvent(index, "choice", (side,), print_cast(thread), print_cast(branch))

    if redex.kind == "replicate":
        (i,) = redex.participants
        thread = cfg.threads[i]
        if not isinstance(thread, CReplicate):
            raise ValueError(f"stale redex: {redex}")
        cfg2 = _rebuild(cfg, {i: [thread.body, thread]})
        after = f"{print_cast(thread.body)} | {print_cast(thread)}"
        return cfg2, TraceEvent(index, "replicate", (), print_cast(thread), after)

    raise ValueError(f"unknown redex kind: {redex.kind}")


# --------------------------------------------------------------------------
# State hashing for exhaustive exploration
# --------------------------------------------------------------------------


def configuration_key(cfg: Configuration) -> str:
    """A key equal only for alpha-equivalent configurations.

    Restricted names are renamed canonically (ordered by first use over a
    deterministic thread ordering), bound names canonically per thread, and
    the resulting thread prints sorted into a multiset key.  Ties in the
    masked ordering can split alpha-equivalent states into distinct keys,
    which merely weakens deduplication, never corrupts it.
    """
    restricted = [name for name, _ in cfg.restrictions]
    mask = {name: CastChannel(Name("#r")) for name in restricted}
    masked = [print_cast(canonical(substitute(t, mask))) for t in cfg.threads]
    order = sorted(range(len(cfg.threads)), key=lambda k: (masked[k], print_cast(cfg.threads[k])))
    rename: dict[Name, CastChannel] = {}
    counter = 0
    for k in order:
        for name in free_occurrence_order(cfg.threads[k]):
            if name in mask and name not in rename:
                rename[name] = CastChannel(Name("#r", counter))
                counter += 1
    types = {name: t for name, t in cfg.restrictions}
    reslist = sorted(
        (rename[name].base.index, str(types[name])) for name in restricted if name in rename
    )
    unused = sorted(str(types[name]) for name in restricted if name not in rename)
    threads = sorted(print_cast(canonical(substitute(t, rename))) for t in cfg.threads)
    halted = cfg.halted.status.value if cfg.halted else ""
    return repr((reslist, unused, threads, halted))


# --------------------------------------------------------------------------
# Schedulers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Seeded:
    seed: int = 0
    max_steps: int = 1000


@dataclass(frozen=True)
class Exhaustive:
    depth: int = 20


@dataclass(frozen=True)
class Interactive:
    choose: Callable[[Configuration, tuple[Redex, ...]], Optional[int]]
    max_steps: int = 1000


Scheduler = Union[Seeded, Exhaustive, Interactive]

_STATUS_ORDER = (Status.NORMAL_STUCK, Status.TYPE_ERROR, Status.DEPTH_EXCEEDED)


def run(cfg: Configuration, scheduler: Scheduler) -> RunReport:
    """Drive a configuration to a terminal status under the given policy."""
    if isinstance(scheduler, Seeded):
        rng = random.Random(scheduler.seed)
        pick = lambda _cfg, rxs: rng.randrange(len(rxs))
        return RunReport((_run_sequential(cfg, pick, scheduler.max_steps),))
    if isinstance(scheduler, Interactive):
        return RunReport((_run_sequential(cfg, scheduler.choose, scheduler.max_steps),))
    if isinstance(scheduler, Exhaustive):
        return _run_exhaustive(cfg, scheduler.depth)
    raise TypeError(f"unknown scheduler: {scheduler!r}")


def _run_sequential(cfg: Configuration, pick, max_steps: int) -> Outcome:
    events: list[TraceEvent] = []
    while True:
        if cfg.halted is not None:
            return Outcome(cfg.halted.status, cfg.halted, tuple(events))
        redexes = enumerate_redexes(cfg)
        if not redexes:
            return Outcome(Status.NORMAL_STUCK, Halt(Status.NORMAL_STUCK), tuple(events))
        if len(events) >= max_steps:
            return Outcome(Status.MAX_STEPS, Halt(Status.MAX_STEPS), tuple(events))
        choice = pick(cfg, redexes)
        if choice is None:
            raise InteractiveAbort()
        cfg, event = step(cfg, redexes[choice], len(events))
        events.append(event)


def _run_exhaustive(cfg0: Configuration, depth: int) -> RunReport:
    from collections import deque

    witnesses: dict[Status, Outcome] = {}
    seen: dict[str, int] = {}
    queue = deque([(cfg0, 0, ())])
    while queue:
        cfg, d, trace = queue.popleft()
        key = configuration_key(cfg)
        prev = seen.get(key)
        if prev is not None and prev <= d:
            continue
        seen[key] = d
        if cfg.halted is not None:
            witnesses.setdefault(cfg.halted.status, Outcome(cfg.halted.status, cfg.halted, trace))
            continue
        redexes = enumerate_redexes(cfg)
        if not redexes:
            halt = Halt(Status.NORMAL_STUCK)
            witnesses.setdefault(Status.NORMAL_STUCK, Outcome(halt.status, halt, trace))
            continue
        if d >= depth:
            halt = Halt(Status.DEPTH_EXCEEDED)
            witnesses.setdefault(Status.DEPTH_EXCEEDED, Outcome(halt.status, halt, trace))
            continue
        for redex in redexes:
            cfg2, event = step(cfg, redex, len(trace))
            queue.append((cfg2, d + 1, trace + (event,)))
    ordered = tuple(witnesses[s] for s in _STATUS_ORDER if s in witnesses)
    return RunReport(ordered)


def format_trace(outcome: Outcome) -> list[str]:
    """The wire format consumed by the CLI and the golden tests."""
    lines = [event.format() for event in outcome.trace]
    lines.append(f"HALT: {outcome.halt.describe()}")
    return lines
