"""One-step (multi-action) transition semantics.

The transition relation is computed on *annotated* terms: every prefix
carries the set of events that fired strictly above it, so the unfolding
module can recover causality.  Plain `transitions` erases the annotations.

Step discipline: a parallel component may idle only when it has no
transition at all, so components that can act must act together, either
side by side or by communicating.  Communication merges exactly one
output with one complementary input into a silent action; a step is never
allowed to keep a complementary pair side by side.  Simultaneous inputs
may share one placeholder, which is how joint reception of a single name
is expressed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import permutations, product
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .errors import UnguardedRecursion
from .syntax import (
    EMPTY_ENV, NIL, TAU, Action, BoundOutput, Call, Environment, FreeOutput,
    Input, InputPrefix, Name, Nil, OutputPrefix, Par, Process, Restriction,
    Sum, TauPrefix, Tau, action_names, all_names, canonical, fresh_name,
    rename_action, substitute,
)

DEFAULT_GUARD_DEPTH = 64

EventRef = int  # >= 0 resolved by the unfolder, < 0 provisional within one derivation


# --------------------------------------------------------------------------
# Annotated terms
# --------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class ANil:
    pass


@dataclass(frozen=True, slots=True)
class ATau:
    guards: frozenset[EventRef]
    uid: int
    cont: "ATerm"


@dataclass(frozen=True, slots=True)
class AOut:
    guards: frozenset[EventRef]
    uid: int
    subject: Name
    object: Name
    cont: "ATerm"


@dataclass(frozen=True, slots=True)
class AIn:
    guards: frozenset[EventRef]
    uid: int
    subject: Name
    binder: Name
    cont: "ATerm"


@dataclass(frozen=True, slots=True)
class ARes:
    binder: Name
    body: "ATerm"


@dataclass(frozen=True, slots=True)
class ASum:
    left: "ATerm"
    right: "ATerm"


@dataclass(frozen=True, slots=True)
class APar:
    left: "ATerm"
    right: "ATerm"


@dataclass(frozen=True, slots=True)
class ACall:
    guards: frozenset[EventRef]
    uid: int
    ident: Name
    args: tuple[Name, ...]


ATerm = ANil | ATau | AOut | AIn | ARes | ASum | APar | ACall

A_NIL = ANil()


class Alloc:
    """Deterministic counters for occurrence ids, provisional events, tokens."""

    def __init__(self) -> None:
        self._uid = 0
        self._ev = 0
        self._tok = 0

    def uid(self) -> int:
        self._uid += 1
        return self._uid

    def ev(self) -> EventRef:
        self._ev += 1
        return -self._ev

    def tok(self) -> Name:
        self._tok += 1
        return f"~t{self._tok}"


def annotate(p: Process, alloc: Alloc,
             guards: frozenset[EventRef] = frozenset()) -> ATerm:
    if isinstance(p, Nil):
        return A_NIL
    if isinstance(p, TauPrefix):
        return ATau(guards, alloc.uid(), annotate(p.cont, alloc, guards))
    if isinstance(p, OutputPrefix):
        return AOut(guards, alloc.uid(), p.subject, p.object,
                    annotate(p.cont, alloc, guards))
    if isinstance(p, InputPrefix):
        return AIn(guards, alloc.uid(), p.subject, p.binder,
                   annotate(p.cont, alloc, guards))
    if isinstance(p, Restriction):
        return ARes(p.binder, annotate(p.body, alloc, guards))
    if isinstance(p, Sum):
        return ASum(annotate(p.left, alloc, guards), annotate(p.right, alloc, guards))
    if isinstance(p, Par):
        return APar(annotate(p.left, alloc, guards), annotate(p.right, alloc, guards))
    if isinstance(p, Call):
        return ACall(guards, alloc.uid(), p.ident, p.args)
    raise TypeError(f"not a process: {p!r}")


def erase(ap: ATerm) -> Process:
    if isinstance(ap, ANil):
        return NIL
    if isinstance(ap, ATau):
        return TauPrefix(erase(ap.cont))
    if isinstance(ap, AOut):
        return OutputPrefix(ap.subject, ap.object, erase(ap.cont))
    if isinstance(ap, AIn):
        return InputPrefix(ap.subject, ap.binder, erase(ap.cont))
    if isinstance(ap, ARes):
        return Restriction(ap.binder, erase(ap.body))
    if isinstance(ap, ASum):
        return Sum(erase(ap.left), erase(ap.right))
    if isinstance(ap, APar):
        return Par(erase(ap.left), erase(ap.right))
    if isinstance(ap, ACall):
        return Call(ap.ident, ap.args)
    raise TypeError(f"not an annotated term: {ap!r}")


def anames(ap: ATerm) -> frozenset[Name]:
    out: set[Name] = set()

    def go(t: ATerm) -> None:
        if isinstance(t, ATau):
            go(t.cont)
        elif isinstance(t, AOut):
            out.add(t.subject)
            out.add(t.object)
            go(t.cont)
        elif isinstance(t, AIn):
            out.add(t.subject)
            out.add(t.binder)
            go(t.cont)
        elif isinstance(t, ARes):
            out.add(t.binder)
            go(t.body)
        elif isinstance(t, (ASum, APar)):
            go(t.left)
            go(t.right)
        elif isinstance(t, ACall):
            out.update(t.args)

    go(ap)
    return frozenset(out)


def afree(ap: ATerm) -> frozenset[Name]:
    if isinstance(ap, ANil):
        return frozenset()
    if isinstance(ap, ATau):
        return afree(ap.cont)
    if isinstance(ap, AOut):
        return afree(ap.cont) | {ap.subject, ap.object}
    if isinstance(ap, AIn):
        return (afree(ap.cont) - {ap.binder}) | {ap.subject}
    if isinstance(ap, ARes):
        return afree(ap.body) - {ap.binder}
    if isinstance(ap, (ASum, APar)):
        return afree(ap.left) | afree(ap.right)
    if isinstance(ap, ACall):
        return frozenset(ap.args)
    raise TypeError(f"not an annotated term: {ap!r}")


def asubst(ap: ATerm, sub: Mapping[Name, Name]) -> ATerm:
    """Capture-avoiding substitution on annotated terms."""
    live = {k: v for k, v in sub.items() if k != v}
    if not live:
        return ap
    return _asubst(ap, live)


def _asubst(ap: ATerm, sub: dict[Name, Name]) -> ATerm:
    if isinstance(ap, ANil):
        return ap
    if isinstance(ap, ATau):
        return replace(ap, cont=_asubst(ap.cont, sub))
    if isinstance(ap, AOut):
        return replace(ap, subject=sub.get(ap.subject, ap.subject),
                       object=sub.get(ap.object, ap.object),
                       cont=_asubst(ap.cont, sub))
    if isinstance(ap, AIn):
        binder, cont = _abinder(ap.binder, ap.cont, sub)
        return replace(ap, subject=sub.get(ap.subject, ap.subject),
                       binder=binder, cont=cont)
    if isinstance(ap, ARes):
        binder, body = _abinder(ap.binder, ap.body, sub)
        return ARes(binder, body)
    if isinstance(ap, ASum):
        return ASum(_asubst(ap.left, sub), _asubst(ap.right, sub))
    if isinstance(ap, APar):
        return APar(_asubst(ap.left, sub), _asubst(ap.right, sub))
    if isinstance(ap, ACall):
        return replace(ap, args=tuple(sub.get(a, a) for a in ap.args))
    raise TypeError(f"not an annotated term: {ap!r}")


def _abinder(binder: Name, scope: ATerm,
             sub: dict[Name, Name]) -> tuple[Name, ATerm]:
    relevant = {k: v for k, v in sub.items() if k != binder and k in afree(scope)}
    if not relevant:
        return binder, scope
    if binder in relevant.values():
        avoid = anames(scope) | set(relevant) | set(relevant.values()) | {binder}
        newb = fresh_name(avoid)
        scope = _asubst(scope, {binder: newb})
        binder = newb
    return binder, _asubst(scope, relevant)


def rename_all(ap: ATerm, sub: Mapping[Name, Name]) -> ATerm:
    """Rename every occurrence, binders included.

    Only safe for injective maps whose targets are globally fresh, which is
    how token placeholders are turned into final `w` names.
    """
    if not sub:
        return ap
    if isinstance(ap, ANil):
        return ap
    if isinstance(ap, ATau):
        return replace(ap, cont=rename_all(ap.cont, sub))
    if isinstance(ap, AOut):
        return replace(ap, subject=sub.get(ap.subject, ap.subject),
                       object=sub.get(ap.object, ap.object),
                       cont=rename_all(ap.cont, sub))
    if isinstance(ap, AIn):
        return replace(ap, subject=sub.get(ap.subject, ap.subject),
                       binder=sub.get(ap.binder, ap.binder),
                       cont=rename_all(ap.cont, sub))
    if isinstance(ap, ARes):
        return ARes(sub.get(ap.binder, ap.binder), rename_all(ap.body, sub))
    if isinstance(ap, ASum):
        return ASum(rename_all(ap.left, sub), rename_all(ap.right, sub))
    if isinstance(ap, APar):
        return APar(rename_all(ap.left, sub), rename_all(ap.right, sub))
    if isinstance(ap, ACall):
        return replace(ap, args=tuple(sub.get(a, a) for a in ap.args))
    raise TypeError(f"not an annotated term: {ap!r}")


def add_guard(ap: ATerm, refs: frozenset[EventRef]) -> ATerm:
    if not refs:
        return ap
    if isinstance(ap, ANil):
        return ap
    if isinstance(ap, (ATau, AOut, AIn)):
        return replace(ap, guards=ap.guards | refs, cont=add_guard(ap.cont, refs))
    if isinstance(ap, ARes):
        return ARes(ap.binder, add_guard(ap.body, refs))
    if isinstance(ap, ASum):
        return ASum(add_guard(ap.left, refs), add_guard(ap.right, refs))
    if isinstance(ap, APar):
        return APar(add_guard(ap.left, refs), add_guard(ap.right, refs))
    if isinstance(ap, ACall):
        return replace(ap, guards=ap.guards | refs)
    raise TypeError(f"not an annotated term: {ap!r}")


def map_guards(ap: ATerm, sub: Mapping[EventRef, EventRef]) -> ATerm:
    if not sub:
        return ap
    if isinstance(ap, ANil):
        return ap
    if isinstance(ap, (ATau, AOut, AIn, ACall)):
        guards = frozenset(sub.get(g, g) for g in ap.guards)
        if isinstance(ap, ACall):
            return replace(ap, guards=guards)
        return replace(ap, guards=guards, cont=map_guards(ap.cont, sub))
    if isinstance(ap, ARes):
        return ARes(ap.binder, map_guards(ap.body, sub))
    if isinstance(ap, ASum):
        return ASum(map_guards(ap.left, sub), map_guards(ap.right, sub))
    if isinstance(ap, APar):
        return APar(map_guards(ap.left, sub), map_guards(ap.right, sub))
    raise TypeError(f"not an annotated term: {ap!r}")


# --------------------------------------------------------------------------
# Raw step derivation
# --------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Fire:
    """One action occurrence inside a step."""

    action: Action
    uids: frozenset[int]
    causes: frozenset[EventRef]
    ev: EventRef
    tok: Optional[Name]


RawTransition = tuple[tuple[Fire, ...], ATerm]


def communicating(a: Action, b: Action) -> bool:
    """True when `a` and `b` are an output/input pair on the same subject."""
    if isinstance(a, (FreeOutput, BoundOutput)) and isinstance(b, Input):
        return a.subject == b.subject
    if isinstance(b, (FreeOutput, BoundOutput)) and isinstance(a, Input):
        return b.subject == a.subject
    return False


def raw_steps(ap: ATerm, env: Environment, alloc: Alloc,
              fuel: int) -> list[RawTransition]:
    if isinstance(ap, ANil):
        return []
    if isinstance(ap, ATau):
        ev = alloc.ev()
        fire = Fire(TAU, frozenset((ap.uid,)), ap.guards, ev, None)
        return [((fire,), add_guard(ap.cont, frozenset((ev,))))]
    if isinstance(ap, AOut):
        ev = alloc.ev()
        fire = Fire(FreeOutput(ap.subject, ap.object), frozenset((ap.uid,)),
                    ap.guards, ev, None)
        return [((fire,), add_guard(ap.cont, frozenset((ev,))))]
    if isinstance(ap, AIn):
        ev = alloc.ev()
        tok = alloc.tok()
        fire = Fire(Input(ap.subject, tok), frozenset((ap.uid,)), ap.guards, ev, tok)
        target = asubst(add_guard(ap.cont, frozenset((ev,))), {ap.binder: tok})
        return [((fire,), target)]
    if isinstance(ap, ACall):
        if fuel <= 0:
            raise UnguardedRecursion(
                f"unfolding {ap.ident} exceeded the guard depth without "
                "reaching a prefix")
        body = env.instantiate(Call(ap.ident, ap.args))
        return raw_steps(annotate(body, alloc, ap.guards), env, alloc, fuel - 1)
    if isinstance(ap, ASum):
        return (raw_steps(ap.left, env, alloc, fuel)
                + raw_steps(ap.right, env, alloc, fuel))
    if isinstance(ap, ARes):
        out: list[RawTransition] = []
        for fires, target in raw_steps(ap.body, env, alloc, fuel):
            if all(ap.binder not in action_names(f.action) for f in fires):
                out.append((fires, ARes(ap.binder, target)))
                continue
            if all(isinstance(f.action, FreeOutput)
                   and f.action.object == ap.binder
                   and f.action.subject != ap.binder for f in fires):
                tok = alloc.tok()
                opened = tuple(
                    replace(f, action=BoundOutput(f.action.subject, tok), tok=tok)
                    for f in fires)
                out.append((opened, asubst(target, {ap.binder: tok})))
            # otherwise the restricted name escapes: the step is blocked
        return out
    if isinstance(ap, APar):
        left = raw_steps(ap.left, env, alloc, fuel)
        right = raw_steps(ap.right, env, alloc, fuel)
        if not left and not right:
            return []
        if not right:
            return [(fires, APar(t, ap.right)) for fires, t in left]
        if not left:
            return [(fires, APar(ap.left, t)) for fires, t in right]
        out = []
        for xf, xt in left:
            for yf, yt in right:
                out.extend(_join(xf, xt, yf, yt, alloc))
        return out
    raise TypeError(f"not an annotated term: {ap!r}")


def _matchings(cands: Sequence[tuple[int, int]]) -> Iterator[frozenset[tuple[int, int]]]:
    """All partial matchings over candidate index pairs, empty included."""

    def go(k: int, used_x: frozenset[int], used_y: frozenset[int],
           acc: frozenset[tuple[int, int]]) -> Iterator[frozenset[tuple[int, int]]]:
        if k == len(cands):
            yield acc
            return
        i, j = cands[k]
        yield from go(k + 1, used_x, used_y, acc)
        if i not in used_x and j not in used_y:
            yield from go(k + 1, used_x | {i}, used_y | {j}, acc | {(i, j)})

    yield from go(0, frozenset(), frozenset(), frozenset())


def _class_matchings(xs: Sequence[Name], ys: Sequence[Name]
                     ) -> Iterator[tuple[tuple[Name, Name], ...]]:
    """All injective partial pairings between two token-class lists."""

    def go(k: int, used: frozenset[Name],
           acc: tuple[tuple[Name, Name], ...]) -> Iterator[tuple[tuple[Name, Name], ...]]:
        if k == len(xs):
            yield acc
            return
        yield from go(k + 1, used, acc)
        for y in ys:
            if y not in used:
                yield from go(k + 1, used | {y}, acc + ((xs[k], y),))

    yield from go(0, frozenset(), ())


@dataclass(frozen=True, slots=True)
class JoinPlan:
    """One way to combine a left step with a right step.

    `merges` are output/input pairs fused into silent actions, `rest_x`
    and `rest_y` the surviving action positions, `sharing` the unified
    input placeholder classes (left token, right token).
    """

    merges: tuple[tuple[int, int], ...]
    rest_x: tuple[int, ...]
    rest_y: tuple[int, ...]
    sharing: tuple[tuple[Name, Name], ...]


def join_plans(ax: Sequence[Action], tx: Sequence[Optional[Name]],
               ay: Sequence[Action], ty: Sequence[Optional[Name]]
               ) -> list[JoinPlan]:
    """Every admissible combination of two component steps.

    A communication merge requires its two actions to hold unshared
    placeholders; whatever is left on the two sides may not contain a
    complementary pair.  Surviving input classes may be pairwise unified.
    """

    def unshared(toks: Sequence[Optional[Name]], i: int) -> bool:
        t = toks[i]
        return t is None or sum(1 for s in toks if s == t) == 1

    cands = [
        (i, j)
        for i in range(len(ax))
        for j in range(len(ay))
        if communicating(ax[i], ay[j]) and unshared(tx, i) and unshared(ty, j)
    ]
    plans: list[JoinPlan] = []
    for m in _matchings(cands):
        used_x = {i for i, _ in m}
        used_y = {j for _, j in m}
        rest_x = tuple(i for i in range(len(ax)) if i not in used_x)
        rest_y = tuple(j for j in range(len(ay)) if j not in used_y)
        if any(communicating(ax[i], ay[j]) for i in rest_x for j in rest_y):
            continue
        xcls = _input_class_toks(ax, tx, rest_x)
        ycls = _input_class_toks(ay, ty, rest_y)
        for sharing in _class_matchings(xcls, ycls):
            plans.append(JoinPlan(tuple(sorted(m)), rest_x, rest_y, sharing))
    return plans


def _input_class_toks(acts: Sequence[Action], toks: Sequence[Optional[Name]],
                      rest: Sequence[int]) -> list[Name]:
    seen: list[Name] = []
    for i in rest:
        if isinstance(acts[i], Input) and toks[i] is not None \
                and toks[i] not in seen:
            seen.append(toks[i])
    return seen


def _join(xf: tuple[Fire, ...], xt: ATerm, yf: tuple[Fire, ...], yt: ATerm,
          alloc: Alloc) -> list[RawTransition]:
    ax = [f.action for f in xf]
    ay = [g.action for g in yf]
    tx = [f.tok for f in xf]
    ty = [g.tok for g in yf]
    return [_assemble(xf, xt, yf, yt, plan)
            for plan in join_plans(ax, tx, ay, ty)]


def _assemble(xf: tuple[Fire, ...], xt: ATerm, yf: tuple[Fire, ...], yt: ATerm,
              plan: JoinPlan) -> RawTransition:
    sub_x: dict[Name, Name] = {}
    sub_y: dict[Name, Name] = {}
    ev_x: dict[EventRef, EventRef] = {}
    ev_y: dict[EventRef, EventRef] = {}
    wraps: list[Name] = []
    taus: list[Fire] = []
    for tx, ty in plan.sharing:
        sub_y[ty] = tx
    for i, j in plan.merges:
        f, g = xf[i], yf[j]
        if isinstance(f.action, (FreeOutput, BoundOutput)):
            snd, rcv = f, g
            rcv_sub, rcv_ev = sub_y, ev_y
        else:
            snd, rcv = g, f
            rcv_sub, rcv_ev = sub_x, ev_x
        if isinstance(snd.action, FreeOutput):
            rcv_sub[rcv.action.placeholder] = snd.action.object
        else:
            rcv_sub[rcv.action.placeholder] = snd.action.placeholder
            wraps.append(snd.action.placeholder)
        rcv_ev[rcv.ev] = snd.ev
        taus.append(Fire(TAU, snd.uids | rcv.uids, snd.causes | rcv.causes,
                         snd.ev, None))
    lt = map_guards(asubst(xt, sub_x), ev_x)
    rt = map_guards(asubst(yt, sub_y), ev_y)
    combined: ATerm = APar(lt, rt)
    for w in wraps:
        combined = ARes(w, combined)
    fires: list[Fire] = []
    for i in plan.rest_x:
        f = xf[i]
        fires.append(replace(f, action=rename_action(f.action, sub_x))
                     if sub_x else f)
    for j in plan.rest_y:
        g = yf[j]
        if sub_y:
            tok = sub_y.get(g.tok, g.tok) if g.tok is not None else None
            fires.append(replace(g, action=rename_action(g.action, sub_y), tok=tok))
        else:
            fires.append(g)
    fires.extend(taus)
    return tuple(fires), combined


# --------------------------------------------------------------------------
# Canonical labels
# --------------------------------------------------------------------------

def _base_key(a: Action) -> tuple:
    if isinstance(a, Tau):
        return (0, "", "")
    if isinstance(a, FreeOutput):
        return (1, a.subject, a.object)
    if isinstance(a, Input):
        return (2, a.subject, "")
    return (3, a.subject, "")


def _placeholder(a: Action) -> Optional[Name]:
    if isinstance(a, (Input, BoundOutput)):
        return a.placeholder
    return None


def canonical_order(actions: Sequence[Action]) -> tuple[tuple, tuple[int, ...]]:
    """Order a step's actions canonically, abstracting placeholder identity.

    Returns `(key, order)` where `key` is a hashable normal form of the
    multiset (placeholders replaced by sharing-aware indices) and `order`
    lists the input positions in canonical sequence.
    """
    indexed = sorted(range(len(actions)), key=lambda i: _base_key(actions[i]))
    groups: list[list[int]] = []
    for i in indexed:
        if groups and _base_key(actions[groups[-1][0]]) == _base_key(actions[i]):
            groups[-1].append(i)
        else:
            groups.append([i])
    best: Optional[tuple[tuple, tuple[int, ...]]] = None
    # Only tie groups holding placeholders can affect the normal form.
    choices = [permutations(g) if any(_placeholder(actions[i]) for i in g)
               else (tuple(g),) for g in groups]
    for perm in product(*choices):
        order = tuple(i for g in perm for i in g)
        tokidx: dict[Name, int] = {}
        rendered = []
        for i in order:
            a = actions[i]
            ph = _placeholder(a)
            slot = -1
            if ph is not None:
                if ph not in tokidx:
                    tokidx[ph] = len(tokidx)
                slot = tokidx[ph]
            rendered.append(_base_key(a) + (slot,))
        cand = (tuple(rendered), order)
        if best is None or cand[0] < best[0]:
            best = cand
    assert best is not None
    return best


def label_key(label: Sequence[Action]) -> tuple:
    """Normal form of a step label, stable under placeholder renaming."""
    return canonical_order(label)[0]


def label_alpha_eq(l1: Sequence[Action], l2: Sequence[Action]) -> bool:
    """Multiset equality up to a bijective renaming of bound placeholders."""
    return label_key(l1) == label_key(l2)


def label_free_names(label: Sequence[Action]) -> frozenset[Name]:
    out: set[Name] = set()
    bound = {_placeholder(a) for a in label if _placeholder(a) is not None}
    for a in label:
        if isinstance(a, FreeOutput):
            out.add(a.subject)
            if a.object not in bound:
                out.add(a.object)
        elif isinstance(a, (Input, BoundOutput)):
            out.add(a.subject)
    return frozenset(out)


def label_bound_names(label: Sequence[Action]) -> frozenset[Name]:
    return frozenset(ph for a in label
                     if (ph := _placeholder(a)) is not None)


def label_classes(label: Sequence[Action]) -> list[tuple[Name, str]]:
    """Distinct bound placeholders in first-occurrence order, with kind."""
    seen: dict[Name, str] = {}
    for a in label:
        if isinstance(a, Input):
            seen.setdefault(a.placeholder, "in")
        elif isinstance(a, BoundOutput):
            seen.setdefault(a.placeholder, "bout")
    return list(seen.items())


def _rendered_label(label: Sequence[Action], sub: dict[Name, Name]) -> tuple:
    return tuple(sorted(str(rename_action(a, sub)) for a in label))


def class_bijections(l1: Sequence[Action],
                     l2: Sequence[Action]) -> Iterator[dict[Name, Name]]:
    """Placeholder-class pairings under which the two labels coincide."""
    c1 = label_classes(l1)
    c2 = label_classes(l2)
    if len(c1) != len(c2):
        return
    markers = [f"~m{i}" for i in range(len(c1))]
    want = _rendered_label(l1, {n: m for (n, _), m in zip(c1, markers)})
    for perm in permutations(c2):
        if any(k1 != k2 for (_, k1), (_, k2) in zip(c1, perm)):
            continue
        if _rendered_label(l2, {n: m for (n, _), m in zip(perm, markers)}) == want:
            yield {n1: n2 for (n1, _), (n2, _) in zip(c1, perm)}


def format_action(a: Action) -> str:
    return str(a)


def format_label(label: Sequence[Action]) -> str:
    return "{" + ", ".join(str(a) for a in label) + "}"


# --------------------------------------------------------------------------
# Public transitions
# --------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Transition:
    source: Process
    label: tuple[Action, ...]
    target: Process

    def __str__(self) -> str:
        from .parser import format_process
        return f"{format_label(self.label)} -> {format_process(self.target)}"


_TRANS_CACHE: dict[tuple, tuple[Transition, ...]] = {}


def clear_caches() -> None:
    _TRANS_CACHE.clear()


def transitions(p: Process, env: Environment = EMPTY_ENV, *,
                avoid: Iterable[Name] = (),
                guard_depth: int = DEFAULT_GUARD_DEPTH) -> tuple[Transition, ...]:
    """All derivable steps of `p`, one canonical representative per alpha
    class of labels.  Placeholders are drawn from the deterministic fresh
    sequence, avoiding every name of `p`, of the environment, and of
    `avoid`."""
    base_avoid = frozenset(all_names(p) | env.names() | set(avoid))
    key = (canonical(p), env.key, base_avoid, guard_depth)
    hit = _TRANS_CACHE.get(key)
    if hit is not None:
        return hit
    alloc = Alloc()
    ap = annotate(p, alloc)
    raws = raw_steps(ap, env, alloc, guard_depth)
    seen: dict[tuple, Transition] = {}
    for fires, target in raws:
        label, plain = finalize(fires, target, base_avoid)
        k = (label, canonical(plain))
        if k not in seen:
            seen[k] = Transition(p, label, plain)
    result = tuple(sorted(seen.values(),
                          key=lambda t: (label_key(t.label),
                                         str(canonical(t.target)))))
    _TRANS_CACHE[key] = result
    return result


def finalize(fires: tuple[Fire, ...], target: ATerm,
             base_avoid: frozenset[Name]) -> tuple[tuple[Action, ...], Process]:
    """Turn a raw derivation into a canonical label and plain target."""
    _, order = canonical_order([f.action for f in fires])
    tokmap: dict[Name, Name] = {}
    taken = set(base_avoid)
    for i in order:
        tok = fires[i].tok
        if tok is not None and tok not in tokmap:
            w = fresh_name(taken)
            tokmap[tok] = w
            taken.add(w)
    for tok in _residual_toks(target):
        if tok not in tokmap:
            w = fresh_name(taken)
            tokmap[tok] = w
            taken.add(w)
    label = tuple(rename_action(fires[i].action, tokmap) for i in order)
    plain = erase(rename_all(target, tokmap))
    return label, plain


def finalize_fires(fires: tuple[Fire, ...], target: ATerm,
                   base_avoid: frozenset[Name]
                   ) -> tuple[tuple[Fire, ...], ATerm]:
    """Like `finalize`, but keeps the annotated structure for unfolding."""
    _, order = canonical_order([f.action for f in fires])
    tokmap: dict[Name, Name] = {}
    taken = set(base_avoid)
    for i in order:
        tok = fires[i].tok
        if tok is not None and tok not in tokmap:
            w = fresh_name(taken)
            tokmap[tok] = w
            taken.add(w)
    for tok in _residual_toks(target):
        if tok not in tokmap:
            w = fresh_name(taken)
            tokmap[tok] = w
            taken.add(w)
    ordered = tuple(
        replace(fires[i], action=rename_action(fires[i].action, tokmap),
                tok=tokmap.get(fires[i].tok) if fires[i].tok is not None else None)
        for i in order)
    return ordered, rename_all(target, tokmap)


def _residual_toks(ap: ATerm) -> list[Name]:
    """Token names still present in a target, in deterministic preorder."""
    out: list[Name] = []

    def note(n: Name) -> None:
        if n.startswith("~") and n not in out:
            out.append(n)

    def go(t: ATerm) -> None:
        if isinstance(t, ATau):
            go(t.cont)
        elif isinstance(t, AOut):
            note(t.subject)
            note(t.object)
            go(t.cont)
        elif isinstance(t, AIn):
            note(t.subject)
            note(t.binder)
            go(t.cont)
        elif isinstance(t, ARes):
            note(t.binder)
            go(t.body)
        elif isinstance(t, (ASum, APar)):
            go(t.left)
            go(t.right)
        elif isinstance(t, ACall):
            for a in t.args:
                note(a)

    go(ap)
    return out


def open_transition_targets(p: Process, env: Environment = EMPTY_ENV, *,
                            avoid: Iterable[Name] = (),
                            guard_depth: int = DEFAULT_GUARD_DEPTH
                            ) -> tuple[Transition, ...]:
    """Scope-extruding transitions of a restriction, derived directly.

    For each transition of the body whose actions all output the
    restricted name on other subjects, emits the bound-output step with
    one canonical fresh placeholder.  Subsumed by `transitions`; exposed
    so the extrusion rule can be tested in isolation.
    """
    if not isinstance(p, Restriction):
        raise ValueError("open_transition_targets takes a restriction")
    base_avoid = frozenset(all_names(p) | env.names() | set(avoid))
    out = []
    for t in transitions(p.body, env, avoid=base_avoid,
                         guard_depth=guard_depth):
        if t.label and all(isinstance(a, FreeOutput)
                           and a.object == p.binder
                           and a.subject != p.binder for a in t.label):
            w = fresh_name(base_avoid)
            label = tuple(BoundOutput(a.subject, w) for a in t.label)
            out.append(Transition(p, label,
                                  substitute(t.target, {p.binder: w})))
    return tuple(sorted(out, key=lambda t: (label_key(t.label),
                                            str(canonical(t.target)))))


def transition_json(t: Transition) -> dict:
    from .parser import format_process
    return {
        "source": format_process(t.source),
        "label": [str(a) for a in t.label],
        "target": format_process(t.target),
    }
