"""Antichain-optimized emptiness for the program/proof intersection LTA.

A state of the intersection automaton is ((q_P, iota, S), q_Pi).  States with
iota set are never inactive, so the table only tracks iota = false; for fixed
(q_P, q_Pi) the inactive sleep sets form a downward-closed family represented
by its maximal elements (an antichain of bitmasks).  The fixpoint is computed
lazily cell by cell with dependency tracking; witnesses are reconstructed on
demand from per-element insertion ranks rather than stored per order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .automata import Dfa, reindex
from .reduction import OrderSource, _dep_masks


class ResourceLimit(Exception):
    pass


# ---------------------------------------------------------- antichain bits

def ac_covers(items, m: int) -> bool:
    for e in items:
        if m & ~e == 0:
            return True
    return False


def ac_insert(items: list, m: int) -> bool:
    """Insert into a maximal-element list; False if m was subsumed."""
    for e in items:
        if m & ~e == 0:
            return False
    items[:] = [e for e in items if e & ~m]
    items.append(m)
    return True


def ac_join(x, y) -> list:
    out = list(x)
    for m in y:
        ac_insert(out, m)
    return out


def ac_meet(x, y) -> list:
    out: list = []
    for a in x:
        for b in y:
            ac_insert(out, a & b)
    return out


def _antichain_eq(x, y) -> bool:
    return len(x) == len(y) and set(x) == set(y)


def downset(items, k: int) -> frozenset:
    """Explicit downward closure over pow(k letters); test use only."""
    out = set()
    for e in items:
        sub = e
        while True:
            out.add(sub)
            if sub == 0:
                break
            sub = (sub - 1) & e
    return frozenset(out)


# ------------------------------------------------------------------ stats

@dataclass
class Stats:
    cells: int = 0
    fmax_calls: int = 0
    joins: int = 0
    meets: int = 0
    peak_width: int = 0
    births: int = 0

    def as_dict(self) -> dict:
        return dict(cells=self.cells, fmax_calls=self.fmax_calls,
                    joins=self.joins, meets=self.meets,
                    peak_width=self.peak_width, births=self.births)


# ------------------------------------------------------------- fmax steps

def fmax_step(table, qp: int, qpi: int, ap: Dfa, api: Dfa, dep,
              orders: OrderSource, stats: Stats | None = None) -> list:
    """One cell update: the maximal sleep sets making ((qp,_,S),qpi) inactive.

    `table` maps (qp, qpi) -> antichain list.  This is the reference
    meet-over-orders/join-over-successors computation; the engine uses it for
    linear orders and a collapsed equivalent for partition orders.
    """
    k = len(ap.alphabet)
    full = (1 << k) - 1
    if qp in ap.finals and qpi not in api.finals:
        return [full]
    dmasks = _dep_masks(dep, k)
    rowp, rowpi = ap.delta[qp], api.delta[qpi]
    children = [table.get((rowp[a], rowpi[a]), []) for a in range(k)]
    return _meet_over_orders(children, dmasks, orders.relations(k), full, stats)


def _meet_over_orders(children, dmasks, relations, full: int, stats) -> list:
    acc = [full]
    k = len(children)
    for r in relations:
        join: list = []
        for a in range(k):
            guard = r[a] & ~dmasks[a]
            elem_or = dmasks[a]
            abit = 1 << a
            for s in children[a]:
                if guard & ~s == 0:
                    ac_insert(join, (s | elem_or) & ~abit)
        if stats:
            stats.joins += 1
        acc = ac_meet(acc, join)
        if stats:
            stats.meets += 1
        if not acc:
            return []
    return acc


def _partition_survivors(children, dmasks, full: int, stats,
                         cap: int = 50000) -> list:
    """Collapsed meet over all partition orders.

    T is inactive iff some pool pair (a, S) with T <= (S|D(a))\\{a} also has
    Sigma minus the candidate letters of T inside S|D(a); maximal survivors
    are intersections of pool elements, found by lattice descent.
    """
    pool = []
    for a, kids in enumerate(children):
        abit = 1 << a
        da = dmasks[a]
        for s in kids:
            pool.append((a, s, (s | da) & ~abit))
    if not pool:
        return []
    start: list = []
    for _, _, e in pool:
        ac_insert(start, e)
    result: list = []
    visited = set()
    stack = list(start)
    while stack:
        t = stack.pop()
        if t in visited:
            continue
        visited.add(t)
        if len(visited) > cap:
            raise ResourceLimit("partition survivor search exceeded cap")
        if ac_covers(result, t):
            continue
        letters = 0
        cand = []
        for a, s, e in pool:
            if t & ~e == 0:
                cand.append((a, s))
                letters |= 1 << a
        need = full & ~letters
        if any(need & ~(s | dmasks[a]) == 0 for a, s in cand):
            ac_insert(result, t)
            if stats:
                stats.joins += 1
            continue
        for _, _, e in pool:
            if t & ~e:
                t2 = t & e
                if t2 not in visited:
                    stack.append(t2)
    return result


# ------------------------------------------------------------------ engine

@dataclass
class CheckResult:
    covered: bool
    forest: "CexForest | None"
    table: dict
    stats: Stats


class CheckEngine:
    def __init__(self, ap: Dfa, api: Dfa, dep, orders: OrderSource,
                 max_cells: int = 2000000):
        self.ap = ap
        self.api = reindex(api, ap.alphabet)
        self.k = len(ap.alphabet)
        self.full = (1 << self.k) - 1
        self.dmasks = _dep_masks(dep, self.k)
        self.orders = orders
        self.partition = orders.kind == "partition"
        self.relations = None if self.partition else orders.relations(self.k)
        self.max_cells = max_cells
        self.cells: dict = {}
        self.archive: dict = {}
        self.rdeps: dict = {}
        self.stats = Stats()
        self._births = 0
        self._queue: deque = deque()
        self._queued: set = set()

    def _materialize(self, cell):
        if cell not in self.cells:
            if len(self.cells) >= self.max_cells:
                raise ResourceLimit("antichain fixpoint exceeded cell cap")
            self.cells[cell] = []
            self.archive[cell] = []
            self.rdeps[cell] = set()
            self.stats.cells += 1
            self._enqueue(cell)

    def _enqueue(self, cell):
        if cell not in self._queued:
            self._queued.add(cell)
            self._queue.append(cell)

    def _fmax(self, cell) -> list:
        qp, qpi = cell
        self.stats.fmax_calls += 1
        if qp in self.ap.finals and qpi not in self.api.finals:
            return [self.full]
        rowp, rowpi = self.ap.delta[qp], self.api.delta[qpi]
        children = []
        for a in range(self.k):
            child = (rowp[a], rowpi[a])
            self._materialize(child)
            self.rdeps[child].add(cell)
            children.append(self.cells[child])
        if self.partition:
            return _partition_survivors(children, self.dmasks, self.full,
                                        self.stats)
        return _meet_over_orders(children, self.dmasks, self.relations,
                                 self.full, self.stats)

    def run(self) -> bool:
        """Compute the fixpoint; True iff the initial state stays active."""
        init = (self.ap.initial, self.api.initial)
        self._materialize(init)
        while self._queue:
            cell = self._queue.popleft()
            self._queued.discard(cell)
            new = self._fmax(cell)
            old = self.cells[cell]
            if _antichain_eq(old, new):
                continue
            for m in old:
                assert ac_covers(new, m), "fixpoint regressed"
            fresh = [m for m in new if not any(m == o for o in old)]
            arch = self.archive[cell]
            for m in fresh:
                self._births += 1
                arch.append((m, self._births))
            self.cells[cell] = new
            self.stats.peak_width = max(self.stats.peak_width, len(new))
            for dep_cell in self.rdeps.get(cell, ()):
                self._enqueue(dep_cell)
        self.stats.births = self._births
        return not self.cells[init]

    # ---- witness reconstruction

    def rank(self, cell, s: int):
        arch = self.archive.get(cell)
        if not arch:
            return None
        best = None
        for m, birth in arch:
            if s & ~m == 0 and (best is None or birth < best):
                best = birth
        return best


def check(ap: Dfa, api: Dfa, dep, orders: OrderSource,
          max_cells: int = 2000000, thin: bool = False) -> CheckResult:
    """Does some reduction of L(ap) lie inside L(api)?

    Covered (covered=True) iff the intersection LTA's initial state is
    active, i.e. the fixpoint antichain at the initial cell is empty.
    thin selects the thinned counterexample forest (bounded strategies).
    """
    engine = CheckEngine(ap, api, dep, orders, max_cells)
    covered = engine.run()
    forest = None if covered else CexForest(engine, thin=thin)
    table = {cell: tuple(v) for cell, v in engine.cells.items() if v}
    return CheckResult(covered, forest, table, engine.stats)


# -------------------------------------------------------- witnesses / tree

class CexForest:
    """Counterexample tree of the inactivity proof, unfolded on demand.

    Nodes are (q_P, q_Pi, sleep mask); children follow per-order witness
    letters whose successor has strictly smaller rank (the derivation order),
    which bounds the tree depth.  Shared sleep sets reuse the subsuming
    maximal element's witnesses.
    """

    def __init__(self, engine: CheckEngine, thin: bool = False):
        self.e = engine
        # thin forests follow only the no-order witness edges: sound leaves,
        # but no per-order adequacy (fine for the bounded strategies)
        self.thin = thin
        self._children: dict = {}
        self._rank_cache: dict = {}
        self.root = (engine.ap.initial, engine.api.initial, 0)

    def is_leaf(self, node) -> bool:
        qp, qpi, _ = node
        return qp in self.e.ap.finals and qpi not in self.e.api.finals

    def _rank(self, cell, s: int):
        key = (cell, s)
        hit = self._rank_cache.get(key)
        if hit is None:
            hit = self.e.rank(cell, s)
            self._rank_cache[key] = hit
        return hit

    def children(self, node):
        hit = self._children.get(node)
        if hit is not None:
            return hit
        qp, qpi, s = node
        assert not self.is_leaf(node)
        cell = (qp, qpi)
        r0 = self._rank(cell, s)
        assert r0 is not None, "children requested for an active state"
        rowp, rowpi = self.e.ap.delta[qp], self.e.api.delta[qpi]

        def child_of(a: int, sleep: int):
            return (rowp[a], rowpi[a], sleep)

        def valid(a: int, sleep: int) -> bool:
            rr = self._rank((rowp[a], rowpi[a]), sleep)
            return rr is not None and rr < r0

        k, dmasks = self.e.k, self.e.dmasks
        out = set()
        if self.e.partition:
            valid_a = [a for a in range(k)
                       if not s >> a & 1 and valid(a, s & ~dmasks[a])]
            for a in valid_a:
                out.add((a, child_of(a, s & ~dmasks[a])))
            if self.thin and valid_a:
                result = sorted(out)
                self._children[node] = result
                return result
            rest = [a for a in range(k) if a not in valid_a]
            # partitions whose second component misses every valid_a letter
            for sub in _subsets(rest):
                found = False
                for b in range(k):
                    if sub >> b & 1 or s >> b & 1:
                        continue
                    sleep = (s | sub) & ~dmasks[b]
                    if valid(b, sleep):
                        out.add((b, child_of(b, sleep)))
                        found = True
                        break
                assert found, "no witness letter for a partition order"
                if self.thin and out:
                    break
        else:
            for r in self.e.relations:
                found = False
                for a in range(k):
                    if s >> a & 1:
                        continue
                    sleep = (s | r[a]) & ~dmasks[a]
                    if valid(a, sleep):
                        out.add((a, child_of(a, sleep)))
                        found = True
                        break
                assert found, "no witness letter for a linear order"
        result = sorted(out)
        self._children[node] = result
        return result


def _subsets(letters: list):
    n = len(letters)
    if n > 14:
        raise ResourceLimit("too many partition subsets in witness search")
    for bits in range(1 << n):
        mask = 0
        for i in range(n):
            if bits >> i & 1:
                mask |= 1 << letters[i]
        yield mask


# -------------------------------------------------------------- strategies

@dataclass(frozen=True)
class Strategy:
    kind: str          # 'naive' | 'pe' | 'bpe'
    mode: str = "rr"   # for bpe: 'rr' | 'l' | 'm'
    n: int = 1

    @staticmethod
    def parse(text: str) -> "Strategy":
        text = text.lower()
        if text in ("naive", "pe"):
            return Strategy(text)
        if text == "bpe-rr":
            return Strategy("bpe", "rr")
        for mode in ("l", "m"):
            if text.startswith(f"bpe-{mode}"):
                arg = text[len(f"bpe-{mode}"):] or "1"
                return Strategy("bpe", mode, int(arg))
        raise ValueError(f"unknown strategy {text!r}")

    def __str__(self):
        if self.kind != "bpe":
            return self.kind
        return f"bpe-{self.mode}" + ("" if self.mode == "rr" else str(self.n))


def leaf_count(forest, cap: int = 10 ** 9) -> dict:
    """Number of leaves below every reachable node (counts capped)."""
    counts: dict = {}
    stack = [(forest.root, False)]
    while stack:
        node, post = stack.pop()
        if post:
            total = sum(counts[c] for _, c in forest.children(node))
            counts[node] = min(total, cap)
            continue
        if node in counts:
            continue
        if forest.is_leaf(node):
            counts[node] = 1
            continue
        stack.append((node, True))
        for _, child in forest.children(node):
            if child not in counts:
                stack.append((child, False))
    return counts


def _kth_leaf(forest, counts, index: int) -> tuple:
    node = forest.root
    path = []
    while not forest.is_leaf(node):
        for a, child in forest.children(node):
            c = counts[child]
            if index < c:
                path.append(a)
                node = child
                break
            index -= c
        else:
            raise IndexError("leaf index out of range")
    return tuple(path)


def all_leaf_strings(forest, cap: int = 200000) -> list:
    """Every root-to-leaf string in branch (DFS) order, deduplicated."""
    out = []
    seen = set()
    stack = [(forest.root, ())]
    while stack:
        node, path = stack.pop()
        if forest.is_leaf(node):
            if path not in seen:
                seen.add(path)
                out.append(path)
            continue
        for a, child in reversed(forest.children(node)):
            stack.append((child, path + (a,)))
        if len(stack) > cap:
            raise ResourceLimit("counterexample tree too large")
    return out


def leftmost_leaves(forest, n: int) -> list:
    out = []
    seen = set()
    stack = [(forest.root, ())]
    while stack and len(out) < n:
        node, path = stack.pop()
        if forest.is_leaf(node):
            if path not in seen:
                seen.add(path)
                out.append(path)
            continue
        for a, child in reversed(forest.children(node)):
            stack.append((child, path + (a,)))
    return out


def middlemost_leaves(forest, n: int) -> list:
    counts = leaf_count(forest)
    total = counts[forest.root]
    center = (total + 1) // 2  # 1-based ceil(k/2)
    lo = max(0, center - 1 - (n - 1) // 2)
    hi = min(total, lo + n)
    lo = max(0, hi - n)
    out = []
    seen = set()
    for i in range(lo, hi):
        w = _kth_leaf(forest, counts, i)
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def rr_leaf(forest, alphabet) -> tuple:
    """Greedy lockstep descent: prefer the thread the rotation expects."""
    threads = sorted({st.thread for st in alphabet})
    node = forest.root
    path = []
    depth = 0
    while not forest.is_leaf(node):
        kids = forest.children(node)
        pick = None
        for off in range(len(threads)):
            want = threads[(depth + off) % len(threads)]
            for a, child in kids:
                if alphabet[a].thread == want:
                    pick = (a, child)
                    break
            if pick:
                break
        if pick is None:
            pick = kids[0]
        path.append(pick[0])
        node = pick[1]
        depth += 1
    return tuple(path)


def extract_counterexamples(forest, alphabet, strategy: Strategy,
                            cap: int = 200000) -> list:
    """Leaf strings chosen by the strategy, as tuples of letter indices."""
    if strategy.kind == "pe":
        return all_leaf_strings(forest, cap)
    if strategy.kind != "bpe":
        raise ValueError(f"strategy {strategy} is not tree-based")
    if strategy.mode == "rr":
        return [rr_leaf(forest, alphabet)]
    if strategy.mode == "l":
        return leftmost_leaves(forest, strategy.n)
    return middlemost_leaves(forest, strategy.n)
