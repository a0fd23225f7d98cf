import itertools
import random

import pytest

from hyperweave import antichain as ac
from hyperweave.antichain import (Strategy, ac_covers, ac_join, ac_meet,
                                  check, downset, extract_counterexamples,
                                  fmax_step)
from hyperweave.automata import Dfa
from hyperweave.frontend import load_program
from hyperweave.lta import (inactive_baseline, is_empty, lta_intersect,
                            lta_powerset)
from hyperweave.reduction import LINEAR, PARTITION, sleep_reduction_lta
from tests.conftest import random_dep, random_dfa


def masks(*sets):
    out = []
    for s in sets:
        m = 0
        for x in s:
            m |= 1 << x
        out.append(m)
    return out


def test_join_examples():
    assert set(ac_join(masks({0}, {1}), masks({0, 1}))) == {0b11}
    x = masks({0}, {2})
    assert set(ac_join(x, [])) == set(x)


def test_meet_examples():
    assert set(ac_meet(masks({0, 1}), masks({1, 2}))) == {0b010}
    x = masks({0}, {1, 2})
    assert set(ac_meet(x, [0b111])) == set(x)


def test_join_meet_downset_laws():
    rng = random.Random(3)
    k = 4
    for _ in range(300):
        xa, ya = [], []
        for _ in range(rng.randint(0, 3)):
            ac.ac_insert(xa, rng.randrange(1 << k))
        for _ in range(rng.randint(0, 3)):
            ac.ac_insert(ya, rng.randrange(1 << k))
        j = ac_join(xa, ya)
        m = ac_meet(xa, ya)
        assert downset(j, k) == downset(xa, k) | downset(ya, k)
        assert downset(m, k) == downset(xa, k) & downset(ya, k)
        for items in (j, m):
            for a, b in itertools.combinations(items, 2):
                assert a & ~b and b & ~a  # pairwise incomparable


def random_table(rng, ap, api, k):
    table = {}
    for qp in range(ap.n):
        for qpi in range(api.n):
            if rng.random() < 0.5:
                items = []
                for _ in range(rng.randint(1, 2)):
                    m = rng.randrange(1 << k)
                    if not ac_covers(items, m):
                        items = ac_join(items, [m])
                table[(qp, qpi)] = items
    return table


def explicit_fstep(table, ap, api, dep, orders, k):
    """Baseline inactive-step over explicit (q, iota, S)xq_pi states."""
    out = {}
    rels = orders.relations(k)
    full = (1 << k) - 1
    for qp in range(ap.n):
        for qpi in range(api.n):
            got = []
            for s in range(1 << k):
                # state ((qp, False, s), qpi) is in F(X) iff for every order
                # some letter's successor lies in the downward closure of X
                ok = True
                for r in rels:
                    if qp in ap.finals and qpi not in api.finals:
                        ok = False  # no admissible transition: vacuous
                        break
                    found = False
                    for a in range(k):
                        if s >> a & 1:
                            continue  # successor has iota set: always active
                        sleep = (s | r[a]) & ~dep[a]
                        cell = table.get((ap.delta[qp][a], api.delta[qpi][a]), [])
                        if ac_covers(cell, sleep):
                            found = True
                            break
                    if not found:
                        ok = False
                        break
                if qp in ap.finals and qpi not in api.finals:
                    ok = True  # vacuously inactive, every sleep set
                if ok:
                    got.append(s)
            out[(qp, qpi)] = got
    return out


def test_fmax_step_matches_explicit_operator():
    rng = random.Random(21)
    for trial in range(120):
        k = rng.randint(1, 2)
        ap = random_dfa(rng, 3, k)
        api = random_dfa(rng, 2, k)
        dep = random_dep(rng, k)
        table = random_table(rng, ap, api, k)
        for orders in (LINEAR, PARTITION):
            want = explicit_fstep(table, ap, api, dep, orders, k)
            for (qp, qpi), sets in want.items():
                got = fmax_step(table, qp, qpi, ap, api, dep, orders)
                assert downset(got, k) == set(sets), (trial, qp, qpi)


def test_partition_fast_path_equals_generic_meet():
    rng = random.Random(33)
    for _ in range(300):
        k = rng.randint(1, 4)
        dep = random_dep(rng, k)
        full = (1 << k) - 1
        children = []
        for _ in range(k):
            items = []
            for _ in range(rng.randint(0, 3)):
                m = rng.randrange(1 << k)
                if not ac_covers(items, m):
                    items = ac_join(items, [m])
            children.append(items)
        got = ac._partition_survivors(children, dep, full, None)
        want = ac._meet_over_orders(children, dep, PARTITION.relations(k),
                                    full, None)
        assert downset(got, k) == downset(want, k)


def test_fmax_accepting_program_nonaccepting_proof():
    ap = Dfa((0,), [[0]], 0, frozenset({0}))
    api = Dfa((0,), [[0]], 0, frozenset())
    got = fmax_step({}, 0, 0, ap, api, (0b1,), LINEAR)
    assert got == [0b1]


def test_fmax_empty_children():
    ap = Dfa((0,), [[0]], 0, frozenset())
    api = Dfa((0,), [[0]], 0, frozenset())
    assert fmax_step({}, 0, 0, ap, api, (0b1,), LINEAR) == []


def test_check_equals_baseline_on_random_instances():
    rng = random.Random(7)
    for orders in (LINEAR, PARTITION):
        for _ in range(150):
            k = rng.randint(1, 3)
            ap = random_dfa(rng, 6, k)
            api = random_dfa(rng, 4, k)
            dep = random_dep(rng, k)
            res = check(ap, api, dep, orders)
            m = lta_intersect(sleep_reduction_lta(ap, dep, orders),
                              lta_powerset(api))
            assert res.covered == (not is_empty(m))


def test_keep_active_states_never_inactive():
    # in the explicit intersection no state with the ignored flag set is
    # inactive: its transitions always step to another ignored state
    rng = random.Random(41)
    checked = 0
    for _ in range(60):
        k = rng.randint(1, 2)
        ap = random_dfa(rng, 4, k)
        api = random_dfa(rng, 3, k)
        dep = random_dep(rng, k)
        red = sleep_reduction_lta(ap, dep, LINEAR)
        m = lta_intersect(red, lta_powerset(api))
        inact = inactive_baseline(m)
        for q in inact.inactive:
            id1, _ = m.labels[q]
            qp, iota, s = red.labels[id1]
            assert iota is False
            checked += 1
    assert checked > 20


def test_counterexamples_valid_and_strategies():
    dfa, dep, _ = load_program(
        "var x, y; { x := 1; } || { y := 2; } assume(x != y);")
    api = Dfa(dfa.alphabet, [[1] * 3, [1] * 3], 0, frozenset())  # empty proof
    res = check(dfa, api, dep.masks, LINEAR)
    assert not res.covered
    by_thread = {s.thread: s for s in dfa.alphabet}
    # round robin picks thread 0 then thread 1 then the glue assume
    rr = extract_counterexamples(res.forest, dfa.alphabet, Strategy("bpe", "rr"))
    assert len(rr) == 1
    t = [dfa.alphabet[a] for a in rr[0]]
    assert [s.thread for s in t] == [0, 1, 2]
    # leftmost-1 is the sequential composition order (statement id order)
    l1 = extract_counterexamples(res.forest, dfa.alphabet, Strategy("bpe", "l", 1))
    assert [dfa.alphabet[a].id for a in l1[0]] == sorted(
        dfa.alphabet[a].id for a in l1[0])
    pe = extract_counterexamples(res.forest, dfa.alphabet, Strategy("pe"))
    assert set(pe) >= set(rr)
    for w in pe + rr + l1:
        word = [dfa.alphabet[a] for a in w]
        assert dfa.accepts(word) and not api.accepts(word)
    m2 = extract_counterexamples(res.forest, dfa.alphabet, Strategy("bpe", "m", 2))
    assert 1 <= len(m2) <= 2


def test_strategy_parse():
    assert Strategy.parse("bpe-rr") == Strategy("bpe", "rr")
    assert Strategy.parse("bpe-l3") == Strategy("bpe", "l", 3)
    assert Strategy.parse("bpe-m1") == Strategy("bpe", "m", 1)
    assert Strategy.parse("pe") == Strategy("pe")
    with pytest.raises(ValueError):
        Strategy.parse("nope")


def test_stats_counters_present():
    dfa, dep, _ = load_program("var x; x := 1; assume(x = 1);")
    api = Dfa(dfa.alphabet, [[1] * 2, [1] * 2], 0, frozenset())
    res = check(dfa, api, dep.masks, PARTITION)
    d = res.stats.as_dict()
    assert d["cells"] > 0 and d["fmax_calls"] > 0
    assert "peak_width" in d and "joins" in d and "meets" in d
