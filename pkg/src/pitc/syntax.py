"""Abstract syntax, name hygiene, substitution, and definition environments.

Names are plain interned strings.  Processes and actions are immutable
trees, so every value in this module can be shared freely across threads
and used as a dictionary key.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional

from .errors import BadDefinition, UnknownIdentifier

Name = str

#: Identifiers accepted by the concrete syntax.
NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")

#: Reserved words that can never be channel or identifier names.
RESERVED = frozenset({"tau", "nu"})


def is_valid_name(text: str) -> bool:
    return bool(NAME_RE.fullmatch(text)) and text not in RESERVED


def fresh_name(avoid: Iterable[Name], prefix: str = "w") -> Name:
    """First name of the deterministic sequence w0, w1, ... not in `avoid`."""
    taken = set(avoid)
    i = 0
    while True:
        cand = f"{prefix}{i}"
        if cand not in taken:
            return cand
        i += 1


def fresh_names(avoid: Iterable[Name], count: int, prefix: str = "w") -> list[Name]:
    taken = set(avoid)
    out: list[Name] = []
    for _ in range(count):
        n = fresh_name(taken, prefix)
        out.append(n)
        taken.add(n)
    return out


# --------------------------------------------------------------------------
# Actions
# --------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Tau:
    def __str__(self) -> str:
        return "tau"


@dataclass(frozen=True, slots=True)
class FreeOutput:
    subject: Name
    object: Name

    def __str__(self) -> str:
        return f"{self.subject}!{self.object}"


@dataclass(frozen=True, slots=True)
class Input:
    subject: Name
    placeholder: Name

    def __str__(self) -> str:
        return f"{self.subject}?({self.placeholder})"


@dataclass(frozen=True, slots=True)
class BoundOutput:
    subject: Name
    placeholder: Name

    def __str__(self) -> str:
        return f"{self.subject}!({self.placeholder})"


Action = Tau | FreeOutput | Input | BoundOutput

TAU = Tau()


def action_free_names(a: Action) -> frozenset[Name]:
    if isinstance(a, Tau):
        return frozenset()
    if isinstance(a, FreeOutput):
        return frozenset((a.subject, a.object))
    return frozenset((a.subject,))


def action_bound_names(a: Action) -> frozenset[Name]:
    if isinstance(a, (Input, BoundOutput)):
        return frozenset((a.placeholder,))
    return frozenset()


def action_names(a: Action) -> frozenset[Name]:
    return action_free_names(a) | action_bound_names(a)


def action_subject(a: Action) -> Optional[Name]:
    return None if isinstance(a, Tau) else a.subject


def rename_action(a: Action, sub: Mapping[Name, Name]) -> Action:
    """Apply a plain name map to every name slot, placeholders included."""
    if isinstance(a, Tau):
        return a
    if isinstance(a, FreeOutput):
        return FreeOutput(sub.get(a.subject, a.subject), sub.get(a.object, a.object))
    if isinstance(a, Input):
        return Input(sub.get(a.subject, a.subject), sub.get(a.placeholder, a.placeholder))
    return BoundOutput(sub.get(a.subject, a.subject), sub.get(a.placeholder, a.placeholder))


# --------------------------------------------------------------------------
# Processes
# --------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Nil:
    pass


@dataclass(frozen=True, slots=True)
class TauPrefix:
    cont: "Process"


@dataclass(frozen=True, slots=True)
class OutputPrefix:
    subject: Name
    object: Name
    cont: "Process"


@dataclass(frozen=True, slots=True)
class InputPrefix:
    subject: Name
    binder: Name
    cont: "Process"


@dataclass(frozen=True, slots=True)
class Restriction:
    binder: Name
    body: "Process"


@dataclass(frozen=True, slots=True)
class Sum:
    left: "Process"
    right: "Process"


@dataclass(frozen=True, slots=True)
class Par:
    left: "Process"
    right: "Process"


@dataclass(frozen=True, slots=True)
class Call:
    ident: Name
    args: tuple[Name, ...]


Process = Nil | TauPrefix | OutputPrefix | InputPrefix | Restriction | Sum | Par | Call

NIL = Nil()


def sum_of(terms: Iterable[Process]) -> Process:
    """Right-nested sum of `terms`; the empty sum is nil."""
    items = list(terms)
    if not items:
        return NIL
    out = items[-1]
    for t in reversed(items[:-1]):
        out = Sum(t, out)
    return out


def subterms(p: Process) -> Iterator[Process]:
    """Preorder traversal of the syntax tree."""
    stack = [p]
    while stack:
        t = stack.pop()
        yield t
        if isinstance(t, TauPrefix):
            stack.append(t.cont)
        elif isinstance(t, (OutputPrefix, InputPrefix)):
            stack.append(t.cont)
        elif isinstance(t, Restriction):
            stack.append(t.body)
        elif isinstance(t, (Sum, Par)):
            stack.append(t.right)
            stack.append(t.left)


def free_names(p: Process) -> frozenset[Name]:
    if isinstance(p, Nil):
        return frozenset()
    if isinstance(p, TauPrefix):
        return free_names(p.cont)
    if isinstance(p, OutputPrefix):
        return free_names(p.cont) | {p.subject, p.object}
    if isinstance(p, InputPrefix):
        return (free_names(p.cont) - {p.binder}) | {p.subject}
    if isinstance(p, Restriction):
        return free_names(p.body) - {p.binder}
    if isinstance(p, (Sum, Par)):
        return free_names(p.left) | free_names(p.right)
    if isinstance(p, Call):
        return frozenset(p.args)
    raise TypeError(f"not a process: {p!r}")


def all_names(p: Process) -> frozenset[Name]:
    """Every name occurring in `p`, free or bound."""
    out: set[Name] = set()
    for t in subterms(p):
        if isinstance(t, OutputPrefix):
            out.add(t.subject)
            out.add(t.object)
        elif isinstance(t, InputPrefix):
            out.add(t.subject)
            out.add(t.binder)
        elif isinstance(t, Restriction):
            out.add(t.binder)
        elif isinstance(t, Call):
            out.update(t.args)
    return frozenset(out)


def bound_names(p: Process) -> frozenset[Name]:
    return all_names(p) - free_names(p)


def prefix_height(p: Process) -> Optional[int]:
    """Longest chain of nested prefixes; None when a Call makes it unbounded."""
    if isinstance(p, Nil):
        return 0
    if isinstance(p, TauPrefix):
        h = prefix_height(p.cont)
        return None if h is None else h + 1
    if isinstance(p, (OutputPrefix, InputPrefix)):
        h = prefix_height(p.cont)
        return None if h is None else h + 1
    if isinstance(p, Restriction):
        return prefix_height(p.body)
    if isinstance(p, (Sum, Par)):
        a = prefix_height(p.left)
        b = prefix_height(p.right)
        return None if a is None or b is None else max(a, b)
    return None  # Call


def has_call(p: Process) -> bool:
    return any(isinstance(t, Call) for t in subterms(p))


# --------------------------------------------------------------------------
# Substitution (capture-avoiding)
# --------------------------------------------------------------------------

def substitute(p: Process, sub: Mapping[Name, Name]) -> Process:
    """Apply the name-for-name substitution `sub` to `p`.

    Binders are renamed to deterministic fresh names whenever they would
    capture a name introduced by the substitution, so the result is always
    alpha-equivalent to the naive textual substitution when no capture is
    possible.
    """
    live = {k: v for k, v in sub.items() if k != v}
    if not live:
        return p
    return _subst(p, live)


def _subst(p: Process, sub: dict[Name, Name]) -> Process:
    if isinstance(p, Nil):
        return p
    if isinstance(p, TauPrefix):
        return TauPrefix(_subst(p.cont, sub))
    if isinstance(p, OutputPrefix):
        return OutputPrefix(sub.get(p.subject, p.subject), sub.get(p.object, p.object),
                            _subst(p.cont, sub))
    if isinstance(p, InputPrefix):
        binder, cont = _subst_binder(p.binder, p.cont, sub)
        return InputPrefix(sub.get(p.subject, p.subject), binder, cont)
    if isinstance(p, Restriction):
        binder, body = _subst_binder(p.binder, p.body, sub)
        return Restriction(binder, body)
    if isinstance(p, Sum):
        return Sum(_subst(p.left, sub), _subst(p.right, sub))
    if isinstance(p, Par):
        return Par(_subst(p.left, sub), _subst(p.right, sub))
    if isinstance(p, Call):
        return Call(p.ident, tuple(sub.get(a, a) for a in p.args))
    raise TypeError(f"not a process: {p!r}")


def _subst_binder(binder: Name, scope: Process,
                  sub: dict[Name, Name]) -> tuple[Name, Process]:
    relevant = {k: v for k, v in sub.items()
                if k != binder and k in free_names(scope)}
    if not relevant:
        return binder, scope
    if binder in relevant.values():
        # Renaming first keeps the incoming names from being captured.
        avoid = all_names(scope) | set(relevant) | set(relevant.values()) | {binder}
        newb = fresh_name(avoid)
        scope = _subst(scope, {binder: newb})
        binder = newb
    return binder, _subst(scope, relevant)


# --------------------------------------------------------------------------
# Canonical alpha-normal form
# --------------------------------------------------------------------------

def canonical(p: Process) -> Process:
    """Rename binders to the deterministic sequence b0, b1, ... in preorder.

    Two processes are alpha-equivalent exactly when their canonical forms
    are structurally equal.
    """
    avoid = free_names(p)
    counter = [0]

    def next_binder() -> Name:
        while True:
            cand = f"b{counter[0]}"
            counter[0] += 1
            if cand not in avoid:
                return cand

    def go(t: Process, env: dict[Name, Name]) -> Process:
        if isinstance(t, Nil):
            return t
        if isinstance(t, TauPrefix):
            return TauPrefix(go(t.cont, env))
        if isinstance(t, OutputPrefix):
            return OutputPrefix(env.get(t.subject, t.subject),
                                env.get(t.object, t.object), go(t.cont, env))
        if isinstance(t, InputPrefix):
            nb = next_binder()
            inner = dict(env)
            inner[t.binder] = nb
            return InputPrefix(env.get(t.subject, t.subject), nb, go(t.cont, inner))
        if isinstance(t, Restriction):
            nb = next_binder()
            inner = dict(env)
            inner[t.binder] = nb
            return Restriction(nb, go(t.body, inner))
        if isinstance(t, Sum):
            return Sum(go(t.left, env), go(t.right, env))
        if isinstance(t, Par):
            return Par(go(t.left, env), go(t.right, env))
        if isinstance(t, Call):
            return Call(t.ident, tuple(env.get(a, a) for a in t.args))
        raise TypeError(f"not a process: {t!r}")

    return go(p, {})


def alpha_eq(p: Process, q: Process) -> bool:
    """Equality up to consistent renaming of binders."""
    return canonical(p) == canonical(q)


# --------------------------------------------------------------------------
# Definitions and environments
# --------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Definition:
    ident: Name
    params: tuple[Name, ...]
    body: Process


class Environment:
    """Immutable table of process identifier definitions.

    Validates, at construction, that parameters are pairwise distinct, that
    each body's free names stay within its parameters, and that every call
    in every body resolves with the right arity.
    """

    def __init__(self, defs: Iterable[Definition] = ()) -> None:
        table: dict[Name, Definition] = {}
        for d in defs:
            if d.ident in table:
                raise BadDefinition(f"duplicate definition of {d.ident}")
            if len(set(d.params)) != len(d.params):
                raise BadDefinition(f"{d.ident}: parameters must be pairwise distinct")
            table[d.ident] = d
        for d in table.values():
            extra = free_names(d.body) - set(d.params)
            if extra:
                raise BadDefinition(
                    f"{d.ident}: free names {sorted(extra)} not among parameters")
        self._defs = table
        for d in table.values():
            self.check_calls(d.body)
        self._key = tuple(sorted(
            (d.ident, d.params, canonical(d.body)) for d in table.values()))

    def check_calls(self, p: Process) -> None:
        for t in subterms(p):
            if isinstance(t, Call):
                self.lookup(t.ident, arity=len(t.args))

    def lookup(self, ident: Name, arity: Optional[int] = None) -> Definition:
        d = self._defs.get(ident)
        if d is None:
            raise UnknownIdentifier(f"no definition for identifier {ident}")
        if arity is not None and arity != len(d.params):
            raise BadDefinition(
                f"{ident} called with {arity} argument(s), defined with {len(d.params)}")
        return d

    def instantiate(self, call: Call) -> Process:
        d = self.lookup(call.ident, arity=len(call.args))
        return substitute(d.body, dict(zip(d.params, call.args)))

    def names(self) -> frozenset[Name]:
        out: set[Name] = set()
        for d in self._defs.values():
            out.update(d.params)
            out.update(all_names(d.body))
        return frozenset(out)

    def idents(self) -> tuple[Name, ...]:
        return tuple(sorted(self._defs))

    def __contains__(self, ident: Name) -> bool:
        return ident in self._defs

    def __len__(self) -> int:
        return len(self._defs)

    @property
    def key(self):
        """Stable fingerprint used by caches."""
        return self._key


EMPTY_ENV = Environment()
