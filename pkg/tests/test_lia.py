import random

from fractions import Fraction

from hyperweave import exprs, lia
from hyperweave.exprs import atom_from_cmp, num, var


def cmp(op, l, r):
    return atom_from_cmp(op, l, r)


def test_unsat_with_certificate():
    lits = [cmp(">", var("x"), num(0)), cmp("<", var("x"), num(0))]
    facets, _ = lia.expand_literals(lits)
    res, cert = lia.solve_facets(facets)
    assert res == "unsat"
    assert cert is not None and lia.verify_cert(facets, cert)


def test_sat_model_satisfies():
    f = exprs.c_and([cmp(">", var("x"), num(3)), cmp("<", var("x"), num(9)),
                     cmp("=", var("y"), ("add", var("x"), num(2)))])
    res, model = lia.solve_formula(f)
    assert res == "sat"
    assert exprs.eval_formula(f, model)


def test_integer_only_infeasibility():
    # x + 2y = 0 and x = 1 is rationally fine but has no integer solution
    f = exprs.c_and([
        cmp("=", ("add", var("x"), ("mul", num(2), var("y"))), num(0)),
        cmp("=", var("x"), num(1))])
    assert lia.solve_formula(f)[0] == "unsat"


def test_equality_elimination_keeps_models():
    lits = [cmp("=", var("x"), ("add", var("y"), num(1))),
            cmp("<=", var("y"), num(5)),
            cmp("<=", num(5), var("y"))]
    res, model = lia.solve_literals(lits)
    assert res == "sat"
    assert model["y"] == 5 and model["x"] == 6


def test_le_pair_merge():
    lits = [("le", (("x", 1), ("y", -2)), 0),
            ("le", (("x", -1), ("y", 2)), 0),
            ("le", (("x", -1),), 1)]   # x >= 1
    merged = lia.merge_le_pairs(lits)
    assert ("eq", (("x", 1), ("y", -2)), 0) in merged
    res, model = lia.solve_literals(lits)
    assert res == "sat"
    assert model["x"] == 2 * model["y"] and model["x"] >= 1


def test_disjunction_and_ne():
    f = exprs.c_and([cmp("!=", var("x"), num(0)),
                     cmp(">=", var("x"), num(0)),
                     cmp("<=", var("x"), num(1))])
    res, model = lia.solve_formula(f)
    assert res == "sat" and model["x"] == 1
    g = exprs.c_and([f, cmp("!=", var("x"), num(1))])
    assert lia.solve_formula(g)[0] == "unsat"


def test_random_conjunctions_against_bruteforce():
    rng = random.Random(3)
    names = ["x", "y"]
    for _ in range(120):
        lits = []
        for _ in range(rng.randint(1, 4)):
            cs = {v: rng.randint(-2, 2) for v in names}
            k = rng.randint(-3, 3)
            op = rng.choice(["<=", "=", "<", "!=", ">"])
            lhs = ("add", ("mul", num(cs["x"]), var("x")),
                   ("mul", num(cs["y"]), var("y")))
            lits.append(cmp(op, lhs, num(k)))
        f = exprs.c_and(lits)
        res, model = lia.solve_formula(f)
        brute = any(exprs.eval_formula(f, {"x": x, "y": y})
                    for x in range(-8, 9) for y in range(-8, 9))
        if res == "sat":
            assert exprs.eval_formula(f, model)
        elif res == "unsat":
            assert not brute
        # bounded brute force cannot refute 'unknown' or out-of-range models


def test_partial_sums_are_valid_chain():
    # certificate multipliers accumulate into intermediate inequalities
    facets = [((("x", 1),), 0),            # x <= 0
              ((("x", -1), ("y", 1)), 0),  # y <= x
              ((("y", -1),), 1)]           # y >= 1
    cert = lia.rational_cert(facets)
    assert cert is not None and lia.verify_cert(facets, cert)
    partial = {}
    const = Fraction(0)
    for idx in range(2):
        m = cert.get(idx, Fraction(0))
        for v, a in facets[idx][0]:
            partial[v] = partial.get(v, Fraction(0)) + m * a
        const += m * facets[idx][1]
    # after the first two facets the combination implies y <= 0
    assert partial.get("x", 0) == 0 and partial["y"] > 0
