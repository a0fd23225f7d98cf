import random

import pytest

from hyperweave import proofdb
from hyperweave.automata import Dfa


@pytest.fixture(scope="session")
def solver():
    client = proofdb.SolverClient()
    yield client
    client.close()


def random_dfa(rng: random.Random, max_states: int, k: int,
               final_p: float = 0.4) -> Dfa:
    n = rng.randint(1, max_states)
    delta = [[rng.randrange(n) for _ in range(k)] for _ in range(n)]
    finals = frozenset(q for q in range(n) if rng.random() < final_p)
    return Dfa(tuple(range(k)), delta, 0, finals)


def random_dep(rng: random.Random, k: int, p: float = 0.5) -> tuple:
    masks = [1 << a for a in range(k)]
    for a in range(k):
        for b in range(a + 1, k):
            if rng.random() < p:
                masks[a] |= 1 << b
                masks[b] |= 1 << a
    return tuple(masks)


def random_closed_language(rng: random.Random, k: int, maxlen: int,
                           dep: tuple, max_words: int = 10):
    """A random finite language closed under swapping independent letters."""
    from hyperweave.reduction import closure

    words = set()
    for _ in range(rng.randint(1, max_words)):
        n = rng.randint(0, maxlen)
        words.add(tuple(rng.randrange(k) for _ in range(n)))
    return closure(words, dep)
