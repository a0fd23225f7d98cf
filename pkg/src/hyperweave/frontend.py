"""Input language: parsing, lowering to statement DFAs, dependence.

Programs are compositions of assignments and assumes; while/if lower to
assume-guarded edges, parallel composition lowers to a shuffle product of the
branch DFAs.  Every statement in the final automaton is a Stmt carrying its
thread/region, read and write sets, and a list of primitive operations (one
for plain statements, several for fused atomic blocks).
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

from . import exprs
from .automata import Dfa, Nfa, determinize, eliminate_epsilon, minimize, shuffle


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line = line
        self.col = col


# --------------------------------------------------------------------- AST

@dataclass
class Assign:
    var: str
    expr: tuple
    line: int = 0


@dataclass
class Assume:
    cond: tuple
    line: int = 0


@dataclass
class Seq:
    items: list


@dataclass
class Par:
    branches: list


@dataclass
class While:
    cond: tuple
    body: Seq


@dataclass
class If:
    cond: tuple
    then: Seq
    els: Seq | None


@dataclass
class Ast:
    variables: list
    body: Seq


# ------------------------------------------------------------------ lexing

_SYMBOLS = [":=", "||", "!=", "<=", ">=", "≠", "≤", "≥", "¬",
            ";", ",", "(", ")", "{", "}", "+", "-", "*", "=", "<", ">", "!"]
_KEYWORDS = {"var", "assume", "while", "if", "else", "block", "copy", "as", "sharing"}


def tokenize(text: str):
    tokens = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if text.startswith("//", i) or c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append((sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            if c.isdigit():
                j = i
                while j < n and text[j].isdigit():
                    j += 1
                tokens.append((("num", int(text[i:j])), line, col))
                col += j - i
                i = j
            elif c.isalpha() or c == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                word = text[i:j]
                tokens.append((word, line, col) if word in _KEYWORDS
                              else ((("ident", word), line, col)))
                col += j - i
                i = j
            else:
                raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(("eof", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.variables: list[str] = []
        self.blocks: dict[str, Seq] = {}

    def peek(self):
        return self.tokens[self.pos][0]

    def loc(self):
        _, line, col = self.tokens[self.pos]
        return line, col

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok[0]

    def expect(self, sym):
        tok = self.next()
        if tok != sym:
            raise ParseError(f"expected {sym!r}, got {tok!r}", *self.tokens[self.pos - 1][1:])

    def ident(self) -> str:
        tok = self.next()
        if not (isinstance(tok, tuple) and tok[0] == "ident"):
            raise ParseError(f"expected identifier, got {tok!r}", *self.tokens[self.pos - 1][1:])
        return tok[1]

    def number(self) -> int:
        tok = self.next()
        if not (isinstance(tok, tuple) and tok[0] == "num"):
            raise ParseError(f"expected number, got {tok!r}", *self.tokens[self.pos - 1][1:])
        return tok[1]

    # ---- expressions

    def int_expr(self):
        e = self.int_term()
        while self.peek() in ("+", "-"):
            op = self.next()
            e = ("add" if op == "+" else "sub", e, self.int_term())
        return e

    def int_term(self):
        e = self.int_factor()
        while self.peek() == "*":
            self.next()
            e = ("mul", e, self.int_factor())
        return e

    def int_factor(self):
        tok = self.peek()
        if tok == "-":
            self.next()
            return ("neg", self.int_factor())
        if tok == "(":
            self.next()
            e = self.int_expr()
            self.expect(")")
            return e
        if isinstance(tok, tuple) and tok[0] == "num":
            self.next()
            return ("num", tok[1])
        if isinstance(tok, tuple) and tok[0] == "ident":
            self.next()
            return ("var", tok[1])
        raise ParseError(f"expected expression, got {tok!r}", *self.loc())

    _CMP = {"=": "=", "!=": "!=", "≠": "!=", "<": "<", "<=": "<=", "≤": "<=",
            ">": ">", ">=": ">=", "≥": ">="}

    def bool_expr(self):
        tok = self.peek()
        if tok in ("!", "¬"):
            self.next()
            self.expect("(")
            inner = self.bool_expr()
            self.expect(")")
            return ("not", inner)
        lhs = self.int_expr()
        op = self.next()
        if op not in self._CMP:
            raise ParseError(f"expected comparison, got {op!r}", *self.tokens[self.pos - 1][1:])
        rhs = self.int_expr()
        return ("cmp", self._CMP[op], lhs, rhs)

    # ---- statements

    def brace_block(self) -> Seq:
        self.expect("{")
        items = []
        while self.peek() != "}":
            items.append(self.statement())
        self.expect("}")
        return Seq(items)

    def statement(self):
        tok = self.peek()
        line, col = self.loc()
        if tok == "assume":
            self.next()
            self.expect("(")
            cond = self.bool_expr()
            self.expect(")")
            self.expect(";")
            return Assume(cond, line)
        if tok == "while":
            self.next()
            self.expect("(")
            cond = self.bool_expr()
            self.expect(")")
            return While(cond, self.brace_block())
        if tok == "if":
            self.next()
            self.expect("(")
            cond = self.bool_expr()
            self.expect(")")
            then = self.brace_block()
            els = None
            if self.peek() == "else":
                self.next()
                els = self.brace_block()
            return If(cond, then, els)
        if tok == "copy":
            return self.copy_directive()
        if tok == "{":
            first = self.brace_block()
            if self.peek() != "||":
                return first
            branches = [first]
            while self.peek() == "||":
                self.next()
                branches.append(self.brace_block())
            return Par(branches)
        if isinstance(tok, tuple) and tok[0] == "ident":
            name = self.ident()
            self.expect(":=")
            expr = self.int_expr()
            self.expect(";")
            return Assign(name, expr, line)
        raise ParseError(f"expected statement, got {tok!r}", line, col)

    def copy_directive(self):
        line, col = self.loc()
        self.expect("copy")
        k = self.number()
        name = self.ident()
        if name not in self.blocks:
            raise ParseError(f"unknown block {name!r}", line, col)
        self.expect("as")
        suffixes = [self.suffix()]
        while self.peek() == ",":
            self.next()
            suffixes.append(self.suffix())
        shared: set[str] = set()
        if self.peek() == "sharing":
            self.next()
            shared.add(self.ident())
            while self.peek() == ",":
                self.next()
                shared.add(self.ident())
        self.expect(";")
        if len(suffixes) != k:
            raise ParseError(f"copy {k} needs {k} suffixes, got {len(suffixes)}", line, col)
        branches = []
        for suf in suffixes:
            renames: dict[str, str] = {}
            branch = _rename_seq(self.blocks[name], suf, shared, renames)
            for old, new in renames.items():
                if new not in self.variables:
                    self.variables.append(new)
            branches.append(branch)
        return Par(branches)

    def suffix(self) -> str:
        tok = self.next()
        if isinstance(tok, tuple) and tok[0] in ("ident", "num"):
            return str(tok[1])
        raise ParseError(f"expected suffix, got {tok!r}", *self.tokens[self.pos - 1][1:])

    def program(self) -> Ast:
        while self.peek() == "var":
            self.next()
            self.variables.append(self.ident())
            while self.peek() == ",":
                self.next()
                self.variables.append(self.ident())
            self.expect(";")
        items = []
        while self.peek() != "eof":
            if self.peek() == "block":
                self.next()
                name = self.ident()
                self.blocks[name] = self.brace_block()
            else:
                items.append(self.statement())
        return Ast(self.variables, Seq(items))


def _rename_expr(e, suf: str, shared: set, renames: dict):
    if e[0] == "var":
        v = e[1]
        if v in shared:
            return e
        renames[v] = v + suf
        return ("var", v + suf)
    if e[0] == "num":
        return e
    if e[0] in ("neg", "not"):
        return (e[0], _rename_expr(e[1], suf, shared, renames))
    if e[0] == "cmp":
        return ("cmp", e[1], _rename_expr(e[2], suf, shared, renames),
                _rename_expr(e[3], suf, shared, renames))
    return (e[0], _rename_expr(e[1], suf, shared, renames),
            _rename_expr(e[2], suf, shared, renames))


def _rename_seq(node, suf: str, shared: set, renames: dict):
    if isinstance(node, Seq):
        return Seq([_rename_seq(i, suf, shared, renames) for i in node.items])
    if isinstance(node, Par):
        return Par([_rename_seq(b, suf, shared, renames) for b in node.branches])
    if isinstance(node, While):
        return While(_rename_expr(node.cond, suf, shared, renames),
                     _rename_seq(node.body, suf, shared, renames))
    if isinstance(node, If):
        els = _rename_seq(node.els, suf, shared, renames) if node.els else None
        return If(_rename_expr(node.cond, suf, shared, renames),
                  _rename_seq(node.then, suf, shared, renames), els)
    if isinstance(node, Assign):
        renames[node.var] = node.var if node.var in shared else node.var + suf
        return Assign(renames[node.var],
                      _rename_expr(node.expr, suf, shared, renames), node.line)
    if isinstance(node, Assume):
        return Assume(_rename_expr(node.cond, suf, shared, renames), node.line)
    raise TypeError(node)


def _check_vars(node, declared: set, where=""):
    if isinstance(node, Seq):
        for i in node.items:
            _check_vars(i, declared)
    elif isinstance(node, Par):
        for b in node.branches:
            _check_vars(b, declared)
    elif isinstance(node, While):
        _expr_vars_ok(node.cond, declared)
        _check_vars(node.body, declared)
    elif isinstance(node, If):
        _expr_vars_ok(node.cond, declared)
        _check_vars(node.then, declared)
        if node.els:
            _check_vars(node.els, declared)
    elif isinstance(node, Assign):
        if node.var not in declared:
            raise ParseError(f"undeclared variable {node.var!r}", node.line)
        _expr_vars_ok(node.expr, declared, node.line)
    elif isinstance(node, Assume):
        _expr_vars_ok(node.cond, declared, node.line)


def _expr_vars_ok(e, declared: set, line: int = 0):
    if e[0] == "var":
        if e[1] not in declared:
            raise ParseError(f"undeclared variable {e[1]!r}", line)
    elif e[0] in ("neg", "not"):
        _expr_vars_ok(e[1], declared, line)
    elif e[0] == "cmp":
        _expr_vars_ok(e[2], declared, line)
        _expr_vars_ok(e[3], declared, line)
    elif e[0] in ("add", "sub", "mul"):
        _expr_vars_ok(e[1], declared, line)
        _expr_vars_ok(e[2], declared, line)


def parse_program(text: str) -> Ast:
    ast = _Parser(text).program()
    _check_vars(ast.body, set(ast.variables))
    return ast


# ------------------------------------------------------------------- Stmt

@dataclass(eq=False)
class Stmt:
    """One letter of the program alphabet (possibly a fused atomic block)."""

    id: int
    thread: int
    region: tuple
    ops: tuple        # ('assign', var, (coeffs, const)) | ('assume', formula)
    reads: frozenset
    writes: frozenset
    display: str

    @property
    def kind(self) -> str:
        if len(self.ops) > 1:
            return "block"
        return self.ops[0][0]

    def __repr__(self):
        return f"s{self.id}<{self.display}>"

    def __lt__(self, other):
        return self.id < other.id


def _fmt_raw_bool(e) -> str:
    if e[0] == "not":
        return f"!({_fmt_raw_bool(e[1])})"
    _, op, lhs, rhs = e
    return f"{exprs.fmt_int(lhs)} {op} {exprs.fmt_int(rhs)}"


def concurrent(a: Stmt, b: Stmt) -> bool:
    """True iff a and b sit in different branches of some Par node."""
    for x, y in zip(a.region, b.region):
        if x != y:
            return x[0] == y[0]
    return False


@dataclass
class DependenceRel:
    masks: tuple  # masks[stmt_id] = bitmask of dependent stmt ids

    def dependent(self, a: int, b: int) -> bool:
        return bool(self.masks[a] >> b & 1)

    def of(self, a: int) -> set:
        m = self.masks[a]
        return {i for i in range(len(self.masks)) if m >> i & 1}


def compute_dependence(dfa: Dfa) -> DependenceRel:
    """Reflexive symmetric dependence: read/write conflict, or not concurrent.

    Statements that are not concurrent (same thread, or sequentially ordered
    around/after a Par) must be dependent so that the program language stays
    closed under commuting independent statements.
    """
    stmts = dfa.alphabet
    n = len(stmts)
    masks = [0] * n
    for i in range(n):
        for j in range(i, n):
            a, b = stmts[i], stmts[j]
            dep = (i == j
                   or not concurrent(a, b)
                   or bool(a.writes & (b.reads | b.writes))
                   or bool(b.writes & (a.reads | a.writes)))
            if dep:
                masks[i] |= 1 << j
                masks[j] |= 1 << i
    return DependenceRel(tuple(masks))


# ---------------------------------------------------------------- lowering

class _Fragment:
    """Mutable NFA fragment over provisional Stmt objects."""

    def __init__(self):
        self.n = 0
        self.trans: dict = {}
        self.eps: dict = {}

    def state(self) -> int:
        self.n += 1
        return self.n - 1

    def edge(self, u: int, stmt: Stmt, v: int):
        self.trans.setdefault((u, stmt), set()).add(v)

    def eps_edge(self, u: int, v: int):
        self.eps.setdefault(u, set()).add(v)

    def embed_dfa(self, dfa: Dfa) -> tuple[int, set]:
        """Copy a DFA into this fragment; returns (initial, finals)."""
        base = self.n
        self.n += dfa.n
        for q, row in enumerate(dfa.delta):
            for i, t in enumerate(row):
                self.edge(base + q, dfa.alphabet[i], base + t)
        return base + dfa.initial, {base + q for q in dfa.finals}


class _Lowerer:
    def __init__(self, ast: Ast, atomic: bool):
        self.ast = ast
        self.atomic = atomic
        self.counter = itertools.count()
        self.threads: dict[tuple, int] = {}
        self.par_count = itertools.count()

    def thread_of(self, region: tuple) -> int:
        if region not in self.threads:
            self.threads[region] = len(self.threads)
        return self.threads[region]

    def stmt(self, region: tuple, ops, display: str) -> Stmt:
        reads, writes = set(), set()
        lowered = []
        for op in ops:
            if op[0] == "assign":
                var_, rhs = op[1], op[2]
                coeffs, const = exprs.linear(rhs)
                lowered.append(("assign", var_, (tuple(sorted(coeffs.items())), const)))
                reads |= set(coeffs)
                writes.add(var_)
            else:
                f = exprs.canon_raw(op[1])
                lowered.append(("assume", f))
                reads |= exprs.vars_of(f)
        return Stmt(next(self.counter), self.thread_of(region), region,
                    tuple(lowered), frozenset(reads), frozenset(writes), display)

    def compile(self, node, region: tuple, frag: _Fragment) -> tuple[int, set]:
        if isinstance(node, Seq):
            entry = frag.state()
            finals = {entry}
            for item in node.items:
                i2, f2 = self.compile(item, region, frag)
                for f in finals:
                    frag.eps_edge(f, i2)
                finals = f2
            return entry, finals
        if isinstance(node, Assign):
            u, v = frag.state(), frag.state()
            st = self.stmt(region, [("assign", node.var, node.expr)],
                           f"{node.var} := {exprs.fmt_int(node.expr)}")
            frag.edge(u, st, v)
            return u, {v}
        if isinstance(node, Assume):
            u, v = frag.state(), frag.state()
            st = self.stmt(region, [("assume", node.cond)],
                           f"assume({_fmt_raw_bool(node.cond)})")
            frag.edge(u, st, v)
            return u, {v}
        if isinstance(node, While):
            head = frag.state()
            exit_ = frag.state()
            enter = self.stmt(region, [("assume", node.cond)],
                              f"assume({_fmt_raw_bool(node.cond)})")
            leave = self.stmt(region, [("assume", ("not", node.cond))],
                              f"assume(!({_fmt_raw_bool(node.cond)}))")
            bi, bf = self.compile(node.body, region, frag)
            mid = frag.state()
            frag.edge(head, enter, mid)
            frag.eps_edge(mid, bi)
            for f in bf:
                frag.eps_edge(f, head)
            frag.edge(head, leave, exit_)
            return head, {exit_}
        if isinstance(node, If):
            entry = frag.state()
            then_g = self.stmt(region, [("assume", node.cond)],
                               f"assume({_fmt_raw_bool(node.cond)})")
            else_g = self.stmt(region, [("assume", ("not", node.cond))],
                               f"assume(!({_fmt_raw_bool(node.cond)}))")
            ti, tf = self.compile(node.then, region, frag)
            mid_t = frag.state()
            frag.edge(entry, then_g, mid_t)
            frag.eps_edge(mid_t, ti)
            finals = set(tf)
            mid_e = frag.state()
            frag.edge(entry, else_g, mid_e)
            if node.els is not None:
                ei, ef = self.compile(node.els, region, frag)
                frag.eps_edge(mid_e, ei)
                finals |= ef
            else:
                finals.add(mid_e)
            return entry, finals
        if isinstance(node, Par):
            par_id = next(self.par_count)
            branch_dfas = []
            for bi, branch in enumerate(node.branches):
                sub = _Fragment()
                init, fins = self.compile(branch, region + ((par_id, bi),), sub)
                dfa = self._to_dfa(sub, init, fins)
                if self.atomic:
                    dfa = collapse_dead(minimize(fuse_chains(dfa)))
                branch_dfas.append(dfa)
            prod = branch_dfas[0]
            for d in branch_dfas[1:]:
                prod = shuffle(prod, d)
            prod = collapse_dead(prod)
            return frag.embed_dfa(prod)
        raise TypeError(node)

    @staticmethod
    def _to_dfa(frag: _Fragment, init: int, fins: set) -> Dfa:
        stmts = sorted({s for (_, s) in frag.trans}, key=lambda s: s.id)
        nfa = eliminate_epsilon(frag.n, frag.trans, frag.eps, init, fins, tuple(stmts))
        return collapse_dead(minimize(determinize(nfa)))


def collapse_dead(dfa: Dfa) -> Dfa:
    """Merge every state that cannot reach a final state into one sink."""
    live = dfa.live_states()
    if dfa.initial not in live:
        # language is empty; keep a canonical 2-state automaton
        return Dfa(dfa.alphabet, [[1] * len(dfa.alphabet), [1] * len(dfa.alphabet)],
                   0, frozenset())
    order = [q for q in range(dfa.n) if q in live]
    remap = {q: i for i, q in enumerate(order)}
    sink = len(order)
    delta = []
    for q in order:
        delta.append([remap.get(t, sink) for t in dfa.delta[q]])
    has_dead = any(t == sink for row in delta for t in row)
    if has_dead:
        delta.append([sink] * len(dfa.alphabet))
    finals = frozenset(remap[q] for q in dfa.finals if q in remap)
    return Dfa(dfa.alphabet, delta, remap[dfa.initial], finals)


def fuse_chains(dfa: Dfa) -> Dfa:
    """Fuse straight-line same-region statement chains into atomic blocks.

    An intermediate state is fused away when it is live, non-final, not
    initial, has exactly one live in-edge and one live out-edge, both edges'
    statements occur nowhere else, and both belong to the same region.
    """
    live = dfa.live_states()
    edges: dict[int, list] = {}
    occur: dict[Stmt, int] = {}
    for q, row in enumerate(dfa.delta):
        if q not in live:
            continue
        for i, t in enumerate(row):
            if t in live:
                st = dfa.alphabet[i]
                edges.setdefault(q, []).append([st, t])
                occur[st] = occur.get(st, 0) + 1

    counter = itertools.count(max((s.id for s in dfa.alphabet), default=-1) + 1)

    def in_edges(v):
        return [(u, e) for u, es in edges.items() for e in es if e[1] == v]

    changed = True
    while changed:
        changed = False
        for u in list(edges):
            for e in edges.get(u, []):
                st1, v = e
                if v == dfa.initial or v in dfa.finals or v == u:
                    continue
                ins = in_edges(v)
                outs = edges.get(v, [])
                if len(ins) != 1 or len(outs) != 1:
                    continue
                st2, w = outs[0]
                if st1.region != st2.region:
                    continue
                if occur[st1] != 1 or occur[st2] != 1:
                    continue
                if w == v:
                    continue
                fused = Stmt(next(counter), st1.thread, st1.region,
                             st1.ops + st2.ops,
                             st1.reads | (st2.reads - st1.writes),
                             st1.writes | st2.writes,
                             f"{st1.display}; {st2.display}")
                e[0] = fused
                e[1] = w
                del edges[v]
                del occur[st1], occur[st2]
                occur[fused] = 1
                changed = True
                break
            if changed:
                break

    stmts = sorted(occur, key=lambda s: s.id)
    states = sorted(edges.keys() | {dfa.initial} | {q for q in dfa.finals if q in live})
    remap = {q: i for i, q in enumerate(states)}
    sink = len(states)
    delta = [[sink] * len(stmts) for _ in states]
    idx = {s: i for i, s in enumerate(stmts)}
    for u, es in edges.items():
        for st, v in es:
            delta[remap[u]][idx[st]] = remap[v]
    delta.append([sink] * len(stmts))
    finals = frozenset(remap[q] for q in dfa.finals if q in remap)
    return collapse_dead(Dfa(tuple(stmts), delta, remap[dfa.initial], finals))


def lower_to_dfa(ast: Ast, atomic: bool = False) -> Dfa:
    """Compile the program to a complete DFA over its statement alphabet."""
    lo = _Lowerer(ast, atomic)
    frag = _Fragment()
    init, fins = lo.compile(ast.body, (), frag)
    dfa = lo._to_dfa(frag, init, fins)
    if atomic:
        dfa = collapse_dead(minimize(fuse_chains(dfa)))
    # dense statement ids in creation order
    stmts = sorted(dfa.alphabet, key=lambda s: s.id)
    for i, s in enumerate(stmts):
        s.id = i
    perm = [dfa.alphabet.index(s) for s in stmts]
    delta = [[row[j] for j in perm] for row in dfa.delta]
    return Dfa(tuple(stmts), delta, dfa.initial, dfa.finals)


def atomic_blocks(dfa: Dfa, ast: Ast) -> Dfa:
    """Re-lower with per-thread basic-block fusion enabled."""
    return lower_to_dfa(ast, atomic=True)


def load_program(text: str, atomic: bool = False) -> tuple[Dfa, DependenceRel, Ast]:
    ast = parse_program(text)
    dfa = lower_to_dfa(ast, atomic=atomic)
    return dfa, compute_dependence(dfa), ast
