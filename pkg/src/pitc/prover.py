"""Equational prover: head normal forms, the expansion law, and a
completeness-style decision procedure for recursion-free terms.

Normalization is an explicit rewrite loop over the term, so every proof
is a replayable sequence of axiom instances: identifier unfolding (I),
restriction laws (R0 and generalizations of R2-R4, plus scope extrusion
O which the axiom set needs but does not name), summation laws (S0-S3),
and the expansion law (E).  A head normal form is a sum of multi-prefix
summands; a summand whose prefixes fire several actions at once is
realized as the parallel composition of its single-prefix parts, which
fires them as one step under the maximal-step discipline.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Optional, Sequence

from .errors import DepthExceeded, NotWeaklyGuarded, StateBudgetExceeded
from .parser import format_process
from .syntax import (
    EMPTY_ENV, NIL, TAU, Action, BoundOutput, Call, Environment, FreeOutput,
    Input, InputPrefix, Name, Nil, OutputPrefix, Par, Process, Restriction,
    Sum, TauPrefix, action_names, all_names, alpha_eq, canonical, free_names,
    fresh_name, fresh_names, substitute, subterms, sum_of,
)
from .semantics import (
    canonical_order, class_bijections, join_plans, label_key,
)

DEFAULT_UNFOLD_CAP = 16
_REWRITE_CAP = 200_000

AXIOM_TAGS = ("A", "C", "S0", "S1", "S2", "S3",
              "R0", "R1", "R2", "R3", "R4", "E", "I", "O")


# --------------------------------------------------------------------------
# Traces
# --------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class TraceStep:
    tag: str
    path: tuple[str, ...]
    before: Process
    after: Process

    def render(self) -> str:
        where = "/".join(self.path) or "top"
        return (f"{self.tag:<2} @ {where}: {format_process(self.before)} "
                f"= {format_process(self.after)}")

    def to_json(self) -> dict:
        return {
            "axiom": self.tag,
            "position": list(self.path),
            "before": format_process(self.before),
            "after": format_process(self.after),
        }


ProofTrace = list[TraceStep]


def _get(term: Process, path: tuple[str, ...]) -> Process:
    for step in path:
        if step == "left":
            term = term.left          # type: ignore[union-attr]
        elif step == "right":
            term = term.right         # type: ignore[union-attr]
        elif step == "body":
            term = term.body          # type: ignore[union-attr]
        else:
            raise ValueError(f"bad path component {step!r}")
    return term


def _put(term: Process, path: tuple[str, ...], new: Process) -> Process:
    if not path:
        return new
    step, rest = path[0], path[1:]
    if step == "left":
        return type(term)(_put(term.left, rest, new), term.right)  # type: ignore
    if step == "right":
        return type(term)(term.left, _put(term.right, rest, new))  # type: ignore
    if step == "body":
        return Restriction(term.binder, _put(term.body, rest, new))  # type: ignore
    raise ValueError(f"bad path component {step!r}")


def replay(trace: Sequence[TraceStep], start: Process) -> Process:
    """Apply each recorded rewrite in order; raises if a redex mismatches."""
    cur = start
    for step in trace:
        at = _get(cur, step.path)
        if not alpha_eq(at, step.before):
            raise ValueError(
                f"trace does not replay: expected {format_process(step.before)} "
                f"at {'/'.join(step.path) or 'top'}, found {format_process(at)}")
        cur = _put(cur, step.path, step.after)
    return cur


# --------------------------------------------------------------------------
# Head normal forms
# --------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Summand:
    """(alpha_1 || ... || alpha_n).cont with `enc` a term realizing it."""

    prefixes: tuple[Action, ...]
    cont: Process
    enc: Process

    def render(self) -> str:
        pre = " || ".join(str(a) for a in self.prefixes)
        return f"({pre}).{format_process(self.cont)}"


@dataclass(frozen=True, slots=True)
class HeadNormalForm:
    summands: tuple[Summand, ...]

    def render(self) -> str:
        if not self.summands:
            return "0"
        return " + ".join(s.render() for s in self.summands)

    def to_process(self) -> Process:
        encs: list[Process] = []
        seen = set()
        for s in self.summands:
            key = canonical(s.enc)
            if key not in seen:
                seen.add(key)
                encs.append(s.enc)
        return sum_of(sorted(encs, key=lambda e: str(canonical(e))))


def _summand_key(s: Summand) -> tuple:
    classes = [n for n, _ in _classes_of(s.prefixes)]
    markers = {n: f"~s{i}" for i, n in enumerate(classes)}
    return (label_key(s.prefixes),
            format_process(canonical(substitute(s.cont, markers))))


def _classes_of(prefixes: Sequence[Action]) -> list[tuple[Name, str]]:
    seen: dict[Name, str] = {}
    for a in prefixes:
        if isinstance(a, Input):
            seen.setdefault(a.placeholder, "in")
        elif isinstance(a, BoundOutput):
            seen.setdefault(a.placeholder, "bout")
    return list(seen.items())


# --------------------------------------------------------------------------
# Weak guardedness
# --------------------------------------------------------------------------

def _calls_guarded(p: Process, under_prefix: bool) -> bool:
    if isinstance(p, Call):
        return under_prefix
    if isinstance(p, (TauPrefix, OutputPrefix, InputPrefix)):
        return _calls_guarded(p.cont, True)
    if isinstance(p, Restriction):
        return _calls_guarded(p.body, under_prefix)
    if isinstance(p, (Sum, Par)):
        return (_calls_guarded(p.left, under_prefix)
                and _calls_guarded(p.right, under_prefix))
    return True


def weakly_guarded(env: Environment) -> dict[Name, bool]:
    """Per identifier: is every call in its body under at least one prefix?"""
    return {ident: _calls_guarded(env.lookup(ident).body, False)
            for ident in env.idents()}


def _reachable_idents(p: Process, env: Environment) -> set[Name]:
    seen: set[Name] = set()
    work = [t.ident for t in subterms(p) if isinstance(t, Call)]
    while work:
        ident = work.pop()
        if ident in seen:
            continue
        seen.add(ident)
        body = env.lookup(ident).body
        work.extend(t.ident for t in subterms(body) if isinstance(t, Call))
    return seen


def _require_guarded(p: Process, env: Environment) -> None:
    table = weakly_guarded(env)
    bad = sorted(i for i in _reachable_idents(p, env) if not table[i])
    if bad:
        raise NotWeaklyGuarded(
            f"identifier(s) not weakly guardedly defined: {', '.join(bad)}")


# --------------------------------------------------------------------------
# Normalizer
# --------------------------------------------------------------------------

class Prover:
    """Shared normalization and equality engine with cross-call memo tables."""

    def __init__(self, env: Environment = EMPTY_ENV,
                 unfold_cap: int = DEFAULT_UNFOLD_CAP) -> None:
        self.env = env
        self.unfold_cap = unfold_cap
        self.fuel = unfold_cap
        self._norm_cache: dict[Process, tuple[Process, tuple[TraceStep, ...]]] = {}
        self._sums_cache: dict[Process, tuple[Summand, ...]] = {}
        self._eq_memo: dict[tuple, bool] = {}
        self._active: set[tuple] = set()

    # -- rewriting ---------------------------------------------------------

    def normalize(self, p: Process) -> tuple[Process, list[TraceStep]]:
        hit = self._norm_cache.get(p)
        if hit is not None:
            return hit[0], list(hit[1])
        cur = p
        steps: list[TraceStep] = []
        for _ in range(_REWRITE_CAP):
            redex = self._find_redex(cur, ())
            if redex is None:
                self._norm_cache[p] = (cur, tuple(steps))
                return cur, steps
            tag, path, before, after = redex
            steps.append(TraceStep(tag, path, before, after))
            cur = _put(cur, path, after)
        raise StateBudgetExceeded("normalization did not converge")

    def _find_redex(self, t: Process, path: tuple[str, ...]
                    ) -> Optional[tuple[str, tuple[str, ...], Process, Process]]:
        # Innermost-first over the head region only: prefix continuations
        # are left untouched, they are normalized lazily by the recursion.
        if isinstance(t, (Sum, Par)):
            r = self._find_redex(t.left, path + ("left",))
            if r is not None:
                return r
            r = self._find_redex(t.right, path + ("right",))
            if r is not None:
                return r
        elif isinstance(t, Restriction):
            r = self._find_redex(t.body, path + ("body",))
            if r is not None:
                return r
        if isinstance(t, Call):
            if self.fuel <= 0:
                raise DepthExceeded(
                    f"unfold cap {self.unfold_cap} reached while normalizing")
            self.fuel -= 1
            return ("I", path, t, self.env.instantiate(t))
        if isinstance(t, Sum):
            return self._sum_redex(t, path)
        if isinstance(t, Par):
            return self._par_redex(t, path)
        if isinstance(t, Restriction):
            return self._res_redex(t, path)
        return None

    def _sum_redex(self, t: Sum, path):
        addends = _addends(t)
        for i, a in enumerate(addends):
            if isinstance(a, Nil) and len(addends) > 1:
                rest = addends[:i] + addends[i + 1:]
                return ("S0", path, t, sum_of(rest))
        canons = [canonical(a) for a in addends]
        for i in range(len(addends)):
            for j in range(i + 1, len(addends)):
                if canons[i] == canons[j]:
                    rest = addends[:j] + addends[j + 1:]
                    return ("S1", path, t, sum_of(rest))
        ordered = sorted(addends, key=lambda a: str(canonical(a)))
        if ordered != addends:
            return ("S2", path, t, sum_of(ordered))
        desired = sum_of(addends)
        if desired != t:
            return ("S3", path, t, desired)
        return None

    def _par_redex(self, t: Par, path):
        ls = self.summands_of(t.left)
        rs = self.summands_of(t.right)
        encs = self._joined_encs(ls, rs, t.left, t.right)
        uniq: list[Process] = []
        seen = set()
        for e in encs:
            c = canonical(e)
            if c not in seen:
                seen.add(c)
                uniq.append(e)
        if len(uniq) == 1 and alpha_eq(uniq[0], t):
            return None
        after = sum_of(sorted(uniq, key=lambda e: str(canonical(e))))
        if alpha_eq(after, t):
            return None
        return ("E", path, t, after)

    def _res_redex(self, t: Restriction, path):
        y = t.binder
        body = t.body
        if y not in free_names(body):
            return ("R0", path, t, body)
        if isinstance(body, Sum):
            after = Sum(Restriction(y, body.left), Restriction(y, body.right))
            return ("R2", path, t, after)
        if isinstance(body, (TauPrefix, OutputPrefix, InputPrefix)):
            act = _head_action(body)
            if y not in action_names(act):
                return ("R3", path, t,
                        _with_cont(body, Restriction(y, body.cont)))
            if isinstance(body, OutputPrefix) and body.object == y \
                    and body.subject != y:
                return None  # scope extrusion: realized by the term itself
            return ("R4", path, t, NIL)
        inner = self.summands_of(body)
        if not inner:
            return ("R4", path, t, NIL)
        if all(y not in _prefix_names(s.prefixes) for s in inner):
            return None
        if len(inner) == 1 and _all_outputs_of(inner[0].prefixes, y):
            return None
        return ("R4", path, t, NIL)

    # -- summand extraction -------------------------------------------------

    def summands_of(self, t: Process) -> tuple[Summand, ...]:
        hit = self._sums_cache.get(t)
        if hit is not None:
            return hit
        out = self._summands(t)
        self._sums_cache[t] = out
        return out

    def _summands(self, t: Process) -> tuple[Summand, ...]:
        if isinstance(t, Nil):
            return ()
        if isinstance(t, TauPrefix):
            return (self._canon_summand((TAU,), t.cont, t),)
        if isinstance(t, OutputPrefix):
            return (self._canon_summand((FreeOutput(t.subject, t.object),),
                                        t.cont, t),)
        if isinstance(t, InputPrefix):
            return (self._canon_summand((Input(t.subject, t.binder),),
                                        t.cont, t),)
        if isinstance(t, Sum):
            return self._summands(t.left) + self._summands(t.right)
        if isinstance(t, Restriction):
            out: list[Summand] = []
            for s in self._summands(t.body):
                if t.binder not in _prefix_names(s.prefixes):
                    out.append(self._canon_summand(
                        s.prefixes, Restriction(t.binder, s.cont),
                        Restriction(t.binder, s.enc)))
                elif _all_outputs_of(s.prefixes, t.binder):
                    w = fresh_name(all_names(s.cont) | all_names(t)
                                   | _prefix_names(s.prefixes))
                    prefixes = tuple(
                        BoundOutput(a.subject, w) for a in s.prefixes)
                    out.append(self._canon_summand(
                        prefixes, substitute(s.cont, {t.binder: w}),
                        Restriction(t.binder, s.enc)))
            return tuple(out)
        if isinstance(t, Par):
            ls = self._summands(t.left)
            rs = self._summands(t.right)
            if not ls and not rs:
                return ()
            if not rs:
                return tuple(self._canon_summand(
                    s.prefixes, Par(s.cont, t.right), Par(s.enc, t.right))
                    for s in ls)
            if not ls:
                return tuple(self._canon_summand(
                    s.prefixes, Par(t.left, s.cont), Par(t.left, s.enc))
                    for s in rs)
            out = []
            for sl in ls:
                for sr in rs:
                    out.extend(self._join_summands(sl, sr))
            return tuple(out)
        if isinstance(t, Call):
            raise DepthExceeded("identifier in head position of a normal form")
        raise TypeError(f"not a process: {t!r}")

    def _canon_summand(self, prefixes: tuple[Action, ...], cont: Process,
                       enc: Process) -> Summand:
        _, order = canonical_order(prefixes)
        avoid = (set(all_names(cont)) | set(all_names(enc))
                 | _prefix_names(prefixes))
        mapping: dict[Name, Name] = {}
        for i in order:
            a = prefixes[i]
            if isinstance(a, (Input, BoundOutput)) \
                    and a.placeholder not in mapping:
                w = fresh_name(avoid)
                avoid.add(w)
                mapping[a.placeholder] = w
        newpfx = tuple(_rename_binders(prefixes[i], mapping) for i in order)
        newcont = substitute(cont, mapping)
        return Summand(newpfx, newcont, enc)

    def _join_summands(self, sl: Summand, sr: Summand) -> list[Summand]:
        # Keep the two sides' placeholders apart before planning the join.
        clash = {n for n, _ in _classes_of(sr.prefixes)}
        taken = (_prefix_names(sl.prefixes) | _prefix_names(sr.prefixes)
                 | all_names(sl.cont) | all_names(sr.cont))
        renames: dict[Name, Name] = {}
        for n in sorted(clash):
            w = fresh_name(taken)
            taken.add(w)
            renames[n] = w
        rp = tuple(_rename_binders(a, renames) for a in sr.prefixes)
        rc = substitute(sr.cont, renames)
        ax = list(sl.prefixes)
        ay = list(rp)
        tx = [_ph(a) for a in ax]
        ty = [_ph(a) for a in ay]
        out: list[Summand] = []
        for plan in join_plans(ax, tx, ay, ty):
            sub_x: dict[Name, Name] = {}
            sub_y: dict[Name, Name] = {}
            wraps: list[Name] = []
            for cx, cy in plan.sharing:
                sub_y[cy] = cx
            for i, j in plan.merges:
                f, g = ax[i], ay[j]
                if isinstance(f, (FreeOutput, BoundOutput)):
                    snd, rcv, rsub = f, g, sub_y
                else:
                    snd, rcv, rsub = g, f, sub_x
                if isinstance(snd, FreeOutput):
                    rsub[rcv.placeholder] = snd.object
                else:
                    rsub[rcv.placeholder] = snd.placeholder
                    wraps.append(snd.placeholder)
            prefixes = tuple(
                [_rename_binders(ax[i], sub_x) for i in plan.rest_x]
                + [_rename_binders(ay[j], sub_y) for j in plan.rest_y]
                + [TAU] * len(plan.merges))
            cont: Process = Par(substitute(sl.cont, sub_x),
                                substitute(rc, sub_y))
            for w in wraps:
                cont = Restriction(w, cont)
            cand = self._canon_summand(prefixes, cont, Par(sl.enc, sr.enc))
            if len(cand.prefixes) == 1:
                # A fully merged communication reads better as a silent prefix.
                cand = Summand(cand.prefixes, cand.cont,
                               _direct_enc(cand.prefixes[0], cand.cont))
            out.append(cand)
        return out

    def _joined_encs(self, ls, rs, lproc: Process, rproc: Process) -> list[Process]:
        if not ls and not rs:
            return []
        if not rs:
            return [Par(s.enc, rproc) for s in ls]
        if not ls:
            return [Par(lproc, s.enc) for s in rs]
        return [s.enc for sl in ls for sr in rs
                for s in self._join_summands(sl, sr)]

    # -- equality -----------------------------------------------------------

    def hnf(self, p: Process) -> tuple[HeadNormalForm, list[TraceStep]]:
        _require_guarded(p, self.env)
        normal, steps = self.normalize(p)
        sums = self.summands_of(normal)
        uniq: dict[tuple, Summand] = {}
        for s in sums:
            uniq.setdefault(_summand_key(s), s)
        ordered = tuple(uniq[k] for k in sorted(uniq))
        return HeadNormalForm(ordered), steps

    def eq(self, p: Process, q: Process) -> bool:
        cp = canonical(p)
        cq = canonical(q)
        if cp == cq:
            return True
        key = (cp, cq)
        hit = self._eq_memo.get(key)
        if hit is not None:
            return hit
        if key in self._active:
            # The pair reproduces itself under unfolding; deciding it would
            # need unique-solution reasoning, which is out of scope.
            raise DepthExceeded("undecided: equation loops under unfolding")
        self._active.add(key)
        try:
            np_, _ = self.normalize(p)
            nq_, _ = self.normalize(q)
            sp = self._dedup(self.summands_of(np_))
            sq = self._dedup(self.summands_of(nq_))
            ok = (all(any(self._summands_eq(s, t) for t in sq) for s in sp)
                  and all(any(self._summands_eq(t, s) for s in sp) for t in sq))
        finally:
            self._active.discard(key)
        self._eq_memo[key] = ok
        return ok

    @staticmethod
    def _dedup(sums: Iterable[Summand]) -> list[Summand]:
        uniq: dict[tuple, Summand] = {}
        for s in sums:
            uniq.setdefault(_summand_key(s), s)
        return [uniq[k] for k in sorted(uniq)]

    def _summands_eq(self, s: Summand, t: Summand) -> bool:
        if label_key(s.prefixes) != label_key(t.prefixes):
            return False
        for beta in class_bijections(s.prefixes, t.prefixes):
            classes = _classes_of(s.prefixes)
            avoid = (all_names(s.cont) | all_names(t.cont)
                     | _prefix_names(s.prefixes) | _prefix_names(t.prefixes))
            commons = fresh_names(avoid, len(classes))
            sub_s = {n: c for (n, _), c in zip(classes, commons)}
            sub_t = {beta[n]: c for (n, _), c in zip(classes, commons)}
            cs = substitute(s.cont, sub_s)
            ct = substitute(t.cont, sub_t)
            inputs = [c for (n, k), c in zip(classes, commons) if k == "in"]
            names = sorted(free_names(cs) | free_names(ct))
            names.append(fresh_name(all_names(cs) | all_names(ct)
                                    | set(commons), prefix="v"))
            ok = True
            for values in product(names, repeat=len(inputs)):
                inst = dict(zip(inputs, values))
                if not self.eq(substitute(cs, inst), substitute(ct, inst)):
                    ok = False
                    break
            if ok:
                return True
        return False

    def unmatched(self, p: Process, q: Process) -> Optional[dict]:
        np_, _ = self.normalize(p)
        nq_, _ = self.normalize(q)
        sp = self._dedup(self.summands_of(np_))
        sq = self._dedup(self.summands_of(nq_))
        for s in sp:
            if not any(self._summands_eq(s, t) for t in sq):
                return {"side": "left", "summand": s.render()}
        for t in sq:
            if not any(self._summands_eq(s, t) for s in sp):
                return {"side": "right", "summand": t.render()}
        return None


def _addends(t: Process) -> list[Process]:
    if isinstance(t, Sum):
        return _addends(t.left) + _addends(t.right)
    return [t]


def _head_action(t: Process) -> Action:
    if isinstance(t, TauPrefix):
        return TAU
    if isinstance(t, OutputPrefix):
        return FreeOutput(t.subject, t.object)
    if isinstance(t, InputPrefix):
        return Input(t.subject, t.binder)
    raise TypeError(f"not a prefix: {t!r}")


def _with_cont(t: Process, cont: Process) -> Process:
    if isinstance(t, TauPrefix):
        return TauPrefix(cont)
    if isinstance(t, OutputPrefix):
        return OutputPrefix(t.subject, t.object, cont)
    if isinstance(t, InputPrefix):
        return InputPrefix(t.subject, t.binder, cont)
    raise TypeError(f"not a prefix: {t!r}")


def _prefix_names(prefixes: Iterable[Action]) -> set[Name]:
    out: set[Name] = set()
    for a in prefixes:
        out |= action_names(a)
    return out


def _all_outputs_of(prefixes: Sequence[Action], y: Name) -> bool:
    return all(isinstance(a, FreeOutput) and a.object == y and a.subject != y
               for a in prefixes)


def _ph(a: Action) -> Optional[Name]:
    if isinstance(a, (Input, BoundOutput)):
        return a.placeholder
    return None


def _rename_binders(a: Action, sub: dict[Name, Name]) -> Action:
    """Rename only the bound placeholder slot; subjects and objects are
    free references and must stay put."""
    if isinstance(a, Input):
        return Input(a.subject, sub.get(a.placeholder, a.placeholder))
    if isinstance(a, BoundOutput):
        return BoundOutput(a.subject, sub.get(a.placeholder, a.placeholder))
    return a


def _direct_enc(a: Action, cont: Process) -> Process:
    if isinstance(a, Input):
        return InputPrefix(a.subject, a.placeholder, cont)
    if isinstance(a, FreeOutput):
        return OutputPrefix(a.subject, a.object, cont)
    if isinstance(a, BoundOutput):
        return Restriction(a.placeholder,
                           OutputPrefix(a.subject, a.placeholder, cont))
    return TauPrefix(cont)


# --------------------------------------------------------------------------
# Public operations
# --------------------------------------------------------------------------

def hnf(p: Process, env: Environment = EMPTY_ENV, *,
        unfold_cap: int = DEFAULT_UNFOLD_CAP
        ) -> tuple[HeadNormalForm, ProofTrace]:
    return Prover(env, unfold_cap).hnf(p)


def expand(p: Process, env: Environment = EMPTY_ENV, *,
           unfold_cap: int = DEFAULT_UNFOLD_CAP) -> Process:
    """The right-hand side of the expansion law for a parallel composition."""
    if not isinstance(p, Par):
        raise ValueError("expand takes a parallel composition")
    prover = Prover(env, unfold_cap)
    _require_guarded(p, env)
    nl, _ = prover.normalize(p.left)
    nr, _ = prover.normalize(p.right)
    encs = prover._joined_encs(prover.summands_of(nl), prover.summands_of(nr),
                               nl, nr)
    uniq: list[Process] = []
    seen = set()
    for e in encs:
        c = canonical(e)
        if c not in seen:
            seen.add(c)
            uniq.append(e)
    return sum_of(sorted(uniq, key=lambda e: str(canonical(e))))


def prove_eq(p: Process, q: Process, env: Environment = EMPTY_ENV, *,
             unfold_cap: int = DEFAULT_UNFOLD_CAP
             ) -> tuple[bool, ProofTrace | dict]:
    """Decide STC-provable equality; on success the trace replays p into q."""
    _require_guarded(p, env)
    _require_guarded(q, env)
    prover = Prover(env, unfold_cap)
    if not prover.eq(p, q):
        return False, (prover.unmatched(p, q)
                       or {"side": "both", "summand": "?"})
    np_, steps_p = prover.normalize(p)
    nq_, steps_q = prover.normalize(q)
    trace = list(steps_p)
    if not alpha_eq(np_, nq_):
        trace.append(TraceStep("C", (), np_, nq_))
    elif np_ != nq_:
        trace.append(TraceStep("A", (), np_, nq_))
    trace.extend(TraceStep(s.tag, s.path, s.after, s.before)
                 for s in reversed(steps_q))
    return True, trace


def depth(p: Process, env: Environment = EMPTY_ENV, *,
          unfold_cap: int = DEFAULT_UNFOLD_CAP) -> int:
    """The completeness proof's depth measure over head normal forms."""
    prover = Prover(env, unfold_cap)
    memo: dict[Process, int] = {}
    active: set[Process] = set()

    def go(t: Process) -> int:
        c = canonical(t)
        if c in memo:
            return memo[c]
        if c in active:
            raise DepthExceeded("depth is unbounded under recursion")
        active.add(c)
        try:
            normal, _ = prover.normalize(t)
            sums = prover.summands_of(normal)
            d = 0 if not sums else 1 + max(go(s.cont) for s in sums)
        finally:
            active.discard(c)
        memo[c] = d
        return d

    _require_guarded(p, env)
    return go(p)
