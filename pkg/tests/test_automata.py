import itertools
import random

import pytest

from hyperweave.automata import (AlphabetError, Dfa, Nfa, check_wellformed,
                                 concat, determinize, equivalent,
                                 first_difference_trace, from_words, minimize,
                                 reindex, shuffle)


def nfa_accepts(nfa: Nfa, word) -> bool:
    states = {nfa.initial}
    for a in word:
        states = {t for q in states for t in nfa.trans.get((q, a), ())}
        if not states:
            return False
    return bool(states & nfa.finals)


def random_nfa(rng, n, alphabet):
    trans = {}
    for q in range(n):
        for a in alphabet:
            for t in range(n):
                if rng.random() < 0.25:
                    trans.setdefault((q, a), set()).add(t)
    finals = {q for q in range(n) if rng.random() < 0.4}
    return Nfa(n, tuple(alphabet), trans, 0, finals)


def test_determinize_singleton():
    nfa = Nfa(2, ("a",), {(0, "a"): {1}}, 0, {1})
    dfa = determinize(nfa)
    check_wellformed(dfa)
    assert dfa.accepts(("a",)) and not dfa.accepts(()) and not dfa.accepts(("a", "a"))


def test_determinize_merges_nondeterminism():
    nfa = Nfa(3, ("a",), {(0, "a"): {1, 2}}, 0, {2})
    dfa = determinize(nfa)
    assert dfa.accepts(("a",))


def test_determinize_agrees_with_nfa_simulation():
    rng = random.Random(5)
    alphabet = ("a", "b")
    for trial in range(500):
        nfa = random_nfa(rng, rng.randint(1, 5), alphabet)
        dfa = determinize(nfa)
        check_wellformed(dfa)
        for n in range(0, 7):
            for _ in range(4):
                w = tuple(rng.choice(alphabet) for _ in range(n))
                assert dfa.accepts(w) == nfa_accepts(nfa, w)


def test_shuffle_basic():
    A = from_words([("a",)], ("a",))
    B = from_words([("b",)], ("b",))
    S = shuffle(A, B)
    assert S.words_upto(3) == {("a", "b"), ("b", "a")}


def test_shuffle_with_empty_word_language():
    A = from_words([("a",), ("a", "a")], ("a",))
    E = from_words([()], ("b",))
    S = shuffle(A, E)
    assert {w for w in S.words_upto(4)} == {("a",), ("a", "a")}


def test_shuffle_rejects_overlapping_alphabets():
    A = from_words([("a",)], ("a",))
    with pytest.raises(AlphabetError):
        shuffle(A, A)


def test_shuffle_counts_match_interleaving_formula():
    rng = random.Random(11)
    A = from_words([("a",), ("a", "a", "a")], ("a",))
    B = from_words([("b", "b")], ("b",))
    S = shuffle(A, B)
    words = S.words_upto(5)
    # |interleavings of u and v| = C(|u|+|v|, |u|)
    import math
    expect = sum(math.comb(len(u) + len(v), len(u))
                 for u in [("a",), ("a", "a", "a")] for v in [("b", "b")])
    assert len(words) == expect


def test_concat():
    A = from_words([("a",)], ("a",))
    B = from_words([("b",)], ("b",))
    assert concat(A, B).words_upto(3) == {("a", "b")}
    empty = from_words([], ("a",))
    assert concat(empty, A).words_upto(4) == set()


def test_concat_enumeration():
    A = from_words([(), ("a",)], ("a",))
    B = from_words([("b",), ("b", "b")], ("b",))
    got = concat(A, B).words_upto(4)
    want = {u + v for u in [(), ("a",)] for v in [("b",), ("b", "b")]}
    assert got == want


def test_first_difference_inclusion_none():
    P = from_words([("b",)], ("a", "b"))
    Pi = from_words([("a",), ("b",)], ("a", "b"))
    assert first_difference_trace(P, Pi) is None


def test_first_difference_least_word():
    P = from_words([("a",), ("b",)], ("a", "b"))
    Pi = from_words([("b",)], ("a", "b"))
    assert first_difference_trace(P, Pi) == ["a"]


def test_first_difference_agrees_with_scan():
    rng = random.Random(23)
    alphabet = ("a", "b")
    for _ in range(200):
        nfa1 = random_nfa(rng, rng.randint(1, 4), alphabet)
        nfa2 = random_nfa(rng, rng.randint(1, 4), alphabet)
        p, pi = determinize(nfa1), determinize(nfa2)
        got = first_difference_trace(p, pi)
        scan = None
        done = False
        for n in range(0, 8):
            for w in itertools.product(alphabet, repeat=n):
                if p.accepts(w) and not pi.accepts(w):
                    scan = list(w)
                    done = True
                    break
            if done:
                break
        if scan is None:
            assert got is None
        else:
            assert got == scan


def test_minimize_preserves_language():
    rng = random.Random(7)
    for _ in range(120):
        nfa = random_nfa(rng, rng.randint(1, 5), ("a", "b"))
        dfa = determinize(nfa)
        small = minimize(dfa)
        assert small.n <= dfa.n
        assert equivalent(dfa, small)


def test_reindex():
    P = from_words([("a", "b")], ("a", "b"))
    Q = reindex(P, ("b", "a"))
    assert Q.accepts(("a", "b")) and not Q.accepts(("b", "a"))
