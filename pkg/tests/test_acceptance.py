"""Acceptance suite: one test per criterion, one printed line each.

Criterion 9 (the implication chain) is evaluated over every pair checked
by the earlier criteria, so its test must run last in this module.
"""

from __future__ import annotations

import time
from itertools import combinations_with_replacement

from pitc import (
    NIL, InputPrefix, OutputPrefix, Par, Restriction, Sum, TauPrefix, check,
    check_step, expand, format_process, free_names, parse_term, substitute,
    transitions,
)
from pitc.equivalences import _Budget, _StepGame
from pitc.prover import Prover
from pitc.semantics import (
    class_bijections, label_bound_names, label_free_names, label_key,
    rename_action,
)
from pitc.syntax import EMPTY_ENV, TAU, all_names, alpha_eq, canonical, \
    fresh_names, sum_of

from helpers import (
    ALL_LAWS, alpha_variant, injective_renaming, law_instances,
    random_process, rng_for,
)

RELATIONS = ("step", "pomset", "hp", "hhp")

#: Every all-relation verdict recorded while the suite runs; criterion 9
#: checks the implication chain over these.
CHAIN_RECORDS: list[dict[str, bool]] = []


def check_all(p, q, env=EMPTY_ENV, depth=4,
              relations=RELATIONS) -> dict[str, bool]:
    got = {rel: check(rel, p, q, env, depth).equivalent for rel in relations}
    CHAIN_RECORDS.append(got)
    return got


def test_criterion_1_hhp_counterexample_pair_one():
    start = time.time()
    s1 = parse_term("(a!u.0 + b!v.0) | c!w.0")
    t1 = parse_term("(a!u.0 | c!w.0) + (b!v.0 | c!w.0)")
    got = check_all(s1, t1, depth=4)
    elapsed = time.time() - start
    assert got == {"step": True, "pomset": True, "hp": True, "hhp": False}
    assert elapsed < 1.0
    print(f"CRITERION 1: PASS — s1~t1 under step/pomset/hp, not hhp "
          f"({elapsed:.2f}s)")


def test_criterion_2_hhp_counterexample_pair_two():
    start = time.time()
    s2 = parse_term("a!u.0 | (b!v.0 + c!w.0)")
    t2 = parse_term("(a!u.0 | b!v.0) + (a!u.0 | c!w.0)")
    got = check_all(s2, t2, depth=4)
    elapsed = time.time() - start
    assert got == {"step": True, "pomset": True, "hp": True, "hhp": False}
    assert elapsed < 1.0
    print(f"CRITERION 2: PASS — s2~t2 under step/pomset/hp, not hhp "
          f"({elapsed:.2f}s)")


def test_criterion_3_law_suites():
    start = time.time()
    rng = rng_for(1003)
    failures = []
    for law in ALL_LAWS:
        for i in range(200):
            lhs, rhs, env = law_instances(rng, law)
            got = check_all(lhs, rhs, env, depth=4)
            if not all(got.values()):
                failures.append((law, i, format_process(lhs),
                                 format_process(rhs), got))
    elapsed = time.time() - start
    assert not failures, failures[:3]
    assert elapsed < 60.0
    print(f"CRITERION 3: PASS — {len(ALL_LAWS)}x200 law instances under all "
          f"four checkers, zero failures ({elapsed:.1f}s)")


def _expansion_summand(rng):
    channels = ["x", "y", "a"]
    cont = random_process(rng, 1, names=channels + ["b"],
                          allow_restriction=False)
    roll = rng.random()
    if roll < 0.2:
        return TauPrefix(cont)
    if roll < 0.5:
        return OutputPrefix(rng.choice(channels),
                            rng.choice(channels + ["b"]), cont)
    if roll < 0.8:
        return InputPrefix(rng.choice(channels), "v0", cont)
    return Restriction("u0", OutputPrefix(rng.choice(channels), "u0", cont))


def test_criterion_4_expansion_law():
    start = time.time()
    rng = rng_for(1004)
    # Fixed pairs exercising the four communication residue cases.
    fixed = [
        "x!y.a!b.0 | x?(v).v!c.0",            # free output meets input
        "(nu u. x!u.a!b.0) | x?(v).v!c.0",     # bound output meets input
        "x?(v).v!c.0 | x!y.a!b.0",            # input meets free output
        "x?(v).v!c.0 | (nu u. x!u.a!b.0)",     # input meets bound output
    ]
    checked = 0
    for src in fixed:
        p = parse_term(src)
        assert check_step(p, expand(p), depth=5).equivalent, src
        checked += 1
    for _ in range(96):
        p = Par(sum_of([_expansion_summand(rng)
                        for _ in range(rng.randrange(1, 4))]),
                sum_of([_expansion_summand(rng)
                        for _ in range(rng.randrange(1, 4))]))
        assert check_step(p, expand(p), depth=5).equivalent, format_process(p)
        checked += 1
    elapsed = time.time() - start
    assert checked == 100
    assert elapsed < 60.0
    print(f"CRITERION 4: PASS — 100 expansion instances match under "
          f"check_step ({elapsed:.1f}s)")


def test_criterion_5_soundness_cross_validation():
    start = time.time()
    rng = rng_for(1005)
    prover = Prover(EMPTY_ENV)
    provable = 0
    for _ in range(500):
        p = random_process(rng, 2)
        q = random_process(rng, 2)
        if not prover.eq(p, q):
            continue
        provable += 1
        got = check_all(p, q, depth=4, relations=("step", "pomset", "hp"))
        assert all(got.values()), (format_process(p), format_process(q), got)
    elapsed = time.time() - start
    assert provable > 0
    print(f"CRITERION 5: PASS — 500 pairs, {provable} provable, zero "
          f"violations ({elapsed:.1f}s)")


def _completeness_terms():
    def prefixes(cont):
        yield TauPrefix(cont)
        for subj in "ab":
            for obj in "ab":
                yield OutputPrefix(subj, obj, cont)
            yield InputPrefix(subj, "z", cont)

    level1 = [NIL] + list(prefixes(NIL))
    terms = set()
    for t in level1:
        terms.add(canonical(t))
        for p in prefixes(t):
            terms.add(canonical(p))
    for a, b in combinations_with_replacement(level1, 2):
        terms.add(canonical(Sum(a, b)))
        terms.add(canonical(Par(a, b)))
    return sorted(terms, key=lambda t: (len(format_process(t)),
                                        format_process(t)))


def test_criterion_6_desk_scale_completeness():
    start = time.time()
    terms = _completeness_terms()
    pairs = len(terms) * (len(terms) - 1) // 2
    assert pairs <= 11_000
    prover = Prover(EMPTY_ENV)
    game = _StepGame(EMPTY_ENV, _Budget(50_000_000))
    mismatches = []
    for i, p in enumerate(terms):
        for q in terms[i + 1:]:
            provable = prover.eq(p, q)
            bisimilar = game.eq(p, q, 3)
            if provable != bisimilar:
                mismatches.append((format_process(p), format_process(q),
                                   provable, bisimilar))
    elapsed = time.time() - start
    assert not mismatches, mismatches[:5]
    assert elapsed < 300.0
    print(f"CRITERION 6: PASS — prove_eq iff step-bisimilar on {pairs} "
          f"enumerated pairs over 2 channels ({elapsed:.1f}s)")


def _transition_matches(label, target, candidates) -> bool:
    want = label_key(label)
    for u in candidates:
        if label_key(u.label) != want:
            continue
        for beta in class_bijections(label, u.label):
            classes = sorted(beta)
            avoid = (all_names(target) | all_names(u.target)
                     | set(beta.values()) | set(classes))
            commons = fresh_names(avoid, len(classes))
            sub1 = dict(zip(classes, commons))
            sub2 = {beta[c]: w for c, w in zip(classes, commons)}
            if alpha_eq(substitute(target, sub1),
                        substitute(u.target, sub2)):
                return True
    return False


def test_criterion_7_transition_propositions():
    start = time.time()
    rng = rng_for(1007)
    transitions_seen = 0
    for _ in range(1000):
        p = random_process(rng, 3)
        fn = free_names(p)
        for t in transitions(p):
            transitions_seen += 1
            assert label_free_names(t.label) <= fn
            assert free_names(t.target) <= fn | label_bound_names(t.label)
    assert transitions_seen > 500
    renamed_checked = 0
    for _ in range(200):
        p = random_process(rng, 2)
        sigma = injective_renaming(p, rng)
        ps = substitute(p, sigma)
        got = transitions(ps, avoid=all_names(p))
        for t in transitions(p):
            want_label = tuple(rename_action(a, sigma) if not isinstance(a, type(TAU))
                               else a for a in t.label)
            assert _transition_matches(want_label, substitute(t.target, sigma),
                                       got), (format_process(p), sigma)
            renamed_checked += 1
    elapsed = time.time() - start
    print(f"CRITERION 7: PASS — scoping on {transitions_seen} transitions, "
          f"renaming commutation on {renamed_checked} ({elapsed:.1f}s)")


def test_criterion_8_alpha_theorem():
    start = time.time()
    rng = rng_for(1008)
    for _ in range(200):
        p = random_process(rng, 3)
        q = alpha_variant(p, rng)
        got = check_all(p, q, depth=4)
        assert all(got.values()), (format_process(p), format_process(q), got)
    elapsed = time.time() - start
    print(f"CRITERION 8: PASS — 200 alpha-variant pairs equivalent under all "
          f"four checkers ({elapsed:.1f}s)")


def test_criterion_9_implication_chain():
    assert len(CHAIN_RECORDS) > 3000
    order = ("hhp", "hp", "pomset", "step")
    violations = []
    for rec in CHAIN_RECORDS:
        present = [rel for rel in order if rel in rec]
        for finer, coarser in zip(present, present[1:]):
            if rec[finer] and not rec[coarser]:
                violations.append(rec)
    assert not violations, violations[:5]
    print(f"CRITERION 9: PASS — hhp => hp => pomset => step held across "
          f"{len(CHAIN_RECORDS)} checked pairs")
