"""Graded-CTL model checking over flat Kripke structures.

Counting semantics: a state satisfies an ``E>k`` path formula when k+1
pairwise distinct evidence paths start there.  Counts saturate at k+1, so
the work per temporal operator is linear in the structure and independent
of the grade.

Two independent deciders live here: the production engine (cycle
classification + capped propagation) and a bounded-enumeration oracle used
to cross-check it in tests.
"""

import time
from dataclasses import dataclass, field

from .errors import OracleLimitError
from .formula import (And, Atom, ExistsG, ExistsU, ExistsX, ForallU, Not,
                      TrueF, is_normalized, normalize, subformulas_bottom_up)
from .kripke import KripkeStructure

# ---------------------------------------------------------------------------
# Strongly connected components (iterative Tarjan, deterministic by index)
# ---------------------------------------------------------------------------


def tarjan_scc(n, succ):
    """SCCs of the graph on 0..n-1 with adjacency `succ`.

    Returned in an order where every SCC precedes the SCCs that can reach
    it (i.e. each component's successors appear earlier in the list).
    """
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    sccs = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, ei = work[-1]
            if ei == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while ei < len(succ[v]):
                w = succ[v][ei]
                ei += 1
                if index[w] == -1:
                    work[-1] = (v, ei)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return sccs


# ---------------------------------------------------------------------------
# Counting analyses
# ---------------------------------------------------------------------------


@dataclass
class PathCountAnalysis:
    """Everything the counting pass learned about one path formula.

    counts[s] is the number of pairwise distinct evidences from s, capped at
    `cap`.  `saturated` states reach a cycle with a branching state inside
    the relevant subgraph (unboundedly many evidences); `on_cycle` states sit
    on a terminal out-degree-1 cycle (exactly one evidence).
    """

    cap: int
    core: list          # subgraph membership (bool per state)
    sub_succ: list      # adjacency inside the subgraph (empty lists outside)
    counts: list
    saturated: list
    on_cycle: list
    pump: list          # on a cycle and branching: evidence extraction can
                        # loop here arbitrarily often
    comp_id: list       # SCC id per state within the subgraph


def _classify_and_count(ks, core, sub_succ, cap, base):
    """Shared tail of the G/U analyses: SCC classification on the subgraph,
    then capped propagation in reverse topological order.

    base[s] is the count contributed by the state itself (a length-one
    evidence); it is dominated by any extension, never added to one."""
    n = ks.n_states
    sccs = tarjan_scc(n, sub_succ)
    counts = [0] * n
    saturated = [False] * n
    on_cycle = [False] * n
    pump = [False] * n
    comp_id = [0] * n
    reach_branch = {}
    for ci, comp in enumerate(sccs):
        for s in comp:
            comp_id[s] = ci
    for ci, comp in enumerate(sccs):
        cyclic = len(comp) > 1 or comp[0] in sub_succ[comp[0]]
        branching = False
        if cyclic:
            for s in comp:
                if len(sub_succ[s]) >= 2:
                    branching = True
                    pump[s] = True
        reaches = branching
        for s in comp:
            for t in sub_succ[s]:
                if comp_id[t] != ci and reach_branch[comp_id[t]]:
                    reaches = True
        reach_branch[ci] = reaches
        for s in comp:
            if not core[s]:
                continue
            if reaches:
                saturated[s] = True
                counts[s] = cap
            elif cyclic:
                on_cycle[s] = True
                counts[s] = 1
        if not reaches and not cyclic:
            s = comp[0]
            if core[s]:
                ext = 0
                for t in sub_succ[s]:
                    ext += counts[t]
                counts[s] = max(base[s], min(cap, ext))
    return counts, saturated, on_cycle, pump, comp_id


def globally_analysis(ks: KripkeStructure, sat1, grade: int) -> PathCountAnalysis:
    """Count distinct infinite all-sat1 paths from every state, capped at
    grade+1."""
    cap = grade + 1
    n = ks.n_states
    # Largest set of sat1 states where every member keeps a member successor.
    core = list(sat1)
    out = [0] * n
    rev = [[] for _ in range(n)]
    for s in range(n):
        if not core[s]:
            continue
        for t in ks.succ[s]:
            if core[t]:
                out[s] += 1
                rev[t].append(s)
    queue = [s for s in range(n) if core[s] and out[s] == 0]
    while queue:
        s = queue.pop()
        core[s] = False
        for p in rev[s]:
            if core[p]:
                out[p] -= 1
                if out[p] == 0:
                    queue.append(p)
    sub_succ = [[t for t in ks.succ[s] if core[t]] if core[s] else []
                for s in range(n)]
    # A state off every cycle contributes only through its successors: each
    # infinite path is pinned down by where it enters a terminal cycle, so
    # plain summation counts distinct paths.
    counts, saturated, on_cycle, pump, comp_id = _classify_and_count(
        ks, core, sub_succ, cap, [0] * n)
    return PathCountAnalysis(cap, core, sub_succ, counts, saturated, on_cycle,
                             pump, comp_id)


def until_analysis(ks: KripkeStructure, sat1, sat2, grade: int) -> PathCountAnalysis:
    """Count distinct finite sat1-until-sat2 evidences from every state,
    capped at grade+1.  A path that is a prefix of another is not distinct
    from it, so a sat2 state with live continuations gains nothing from the
    length-one evidence."""
    cap = grade + 1
    n = ks.n_states
    # Least set containing sat2 and closed under sat1-predecessors.
    core = [False] * n
    queue = [s for s in range(n) if sat2[s]]
    for s in queue:
        core[s] = True
    while queue:
        t = queue.pop()
        for s in ks.predecessors(t):
            if not core[s] and sat1[s]:
                core[s] = True
                queue.append(s)
    # Evidence edges leave only sat1 states.  On a terminal forced cycle all
    # evidences are prefixes of one another, so the count there is one.
    sub_succ = [[t for t in ks.succ[s] if core[t]] if core[s] and sat1[s] else []
                for s in range(n)]
    base = [1 if sat2[s] else 0 for s in range(n)]
    counts, saturated, on_cycle, pump, comp_id = _classify_and_count(
        ks, core, sub_succ, cap, base)
    return PathCountAnalysis(cap, core, sub_succ, counts, saturated, on_cycle,
                             pump, comp_id)


def count_next(ks: KripkeStructure, s: int, sat1, cap: int) -> int:
    """Number of successors of s satisfying sat1, capped."""
    c = 0
    for t in ks.succ[s]:
        if sat1[t]:
            c += 1
            if c >= cap:
                return cap
    return c


def count_globally(ks: KripkeStructure, sat1, grade: int) -> list:
    """Per-state count (capped at grade+1) of distinct infinite sat1
    paths."""
    return globally_analysis(ks, sat1, grade).counts


def count_until(ks: KripkeStructure, sat1, sat2, grade: int) -> list:
    """Per-state count (capped at grade+1) of distinct sat1-until-sat2
    evidences."""
    return until_analysis(ks, sat1, sat2, grade).counts


# ---------------------------------------------------------------------------
# The full checker
# ---------------------------------------------------------------------------


@dataclass
class SatTable:
    """Satisfaction table of all subformulas of one normalized formula."""

    ks: KripkeStructure
    root: object
    subformulas: list = field(default_factory=list)
    index: dict = field(default_factory=dict)
    sat: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    millis: dict = field(default_factory=dict)

    def row(self, f):
        return self.sat[self.index[normalize(f)]]

    def holds(self, f, s):
        return self.row(f)[s]

    def root_row(self):
        return self.sat[self.index[self.root]]

    def count_row(self, f):
        return self.counts[self.index[normalize(f)]]


def check_flat(ks: KripkeStructure, f) -> SatTable:
    """Label every state with every subformula of f (normalized first)."""
    root = f if is_normalized(f) else normalize(f)
    table = SatTable(ks=ks, root=root)
    table.subformulas = subformulas_bottom_up(root)
    table.index = {g: i for i, g in enumerate(table.subformulas)}
    n = ks.n_states
    for i, g in enumerate(table.subformulas):
        started = time.perf_counter()
        if isinstance(g, Atom):
            row = [g.name in ks.labels[s] for s in range(n)]
        elif isinstance(g, TrueF):
            row = [True] * n
        elif isinstance(g, Not):
            child = table.sat[table.index[g.child]]
            row = [not v for v in child]
        elif isinstance(g, And):
            left = table.sat[table.index[g.left]]
            right = table.sat[table.index[g.right]]
            row = [a and b for a, b in zip(left, right)]
        elif isinstance(g, ExistsX):
            child = table.sat[table.index[g.child]]
            cap = g.grade + 1
            cnt = [count_next(ks, s, child, cap) for s in range(n)]
            table.counts[i] = cnt
            row = [c >= cap for c in cnt]
        elif isinstance(g, ExistsG):
            child = table.sat[table.index[g.child]]
            cnt = count_globally(ks, child, g.grade)
            table.counts[i] = cnt
            row = [c >= g.grade + 1 for c in cnt]
        elif isinstance(g, ExistsU):
            left = table.sat[table.index[g.left]]
            right = table.sat[table.index[g.right]]
            cnt = count_until(ks, left, right, g.grade)
            table.counts[i] = cnt
            row = [c >= g.grade + 1 for c in cnt]
        elif isinstance(g, ForallU):
            # Every violating path falls in exactly one of two families:
            # forever (left and not right), or (left and not right) until
            # (neither).  The formula holds when the families together show
            # at most `grade` distinct violations.
            left = table.sat[table.index[g.left]]
            right = table.sat[table.index[g.right]]
            stay = [a and not b for a, b in zip(left, right)]
            exit_ = [not a and not b for a, b in zip(left, right)]
            c1 = count_globally(ks, stay, g.grade)
            c2 = count_until(ks, stay, exit_, g.grade)
            cap = g.grade + 1
            table.counts[i] = [min(cap, a + b) for a, b in zip(c1, c2)]
            row = [a + b <= g.grade for a, b in zip(c1, c2)]
        else:
            raise TypeError(f"unexpected node in normalized formula: {g!r}")
        table.sat.append(row)
        table.millis[i] = (time.perf_counter() - started) * 1000.0
    return table


# ---------------------------------------------------------------------------
# Bounded-enumeration oracle
#
# Counts evidences by unfolding the computation tree to a fixed depth and
# taking a maximum antichain, with no cycle analysis whatsoever.  The depth
# starts at (grade+2) * |S| and is doubled once; if the two answers differ
# the oracle refuses rather than guess.
# ---------------------------------------------------------------------------

ORACLE_MAX_STATES = 12
_ORACLE_MAX_DEPTH = 100_000


def oracle_count(ks: KripkeStructure, s: int, kind: str, grade: int,
                 sat1, sat2=None, depth=None) -> int:
    """Independent evidence count for one path form at one state.

    kind is 'X', 'G' or 'U'; sat1/sat2 are per-state child verdicts.
    """
    if ks.n_states > ORACLE_MAX_STATES:
        raise OracleLimitError(
            f"oracle limited to {ORACLE_MAX_STATES} states, got {ks.n_states}")
    cap = grade + 1
    if kind == "X":
        return count_next(ks, s, sat1, cap)
    if kind not in ("G", "U"):
        raise ValueError(f"unknown path form {kind!r}")
    base_depth = depth if depth is not None else (grade + 2) * ks.n_states
    base_depth = max(base_depth, ks.n_states + 1)
    if base_depth * 2 > _ORACLE_MAX_DEPTH:
        raise OracleLimitError(f"oracle depth {base_depth * 2} over the limit")
    first, second = _oracle_tree_count(ks, s, kind, cap, sat1, sat2, base_depth)
    if first != second:
        raise OracleLimitError(
            f"oracle did not stabilize at depth {base_depth} (got {first} "
            f"then {second})")
    return first


def _oracle_tree_count(ks, s, kind, cap, sat1, sat2, depth):
    """Capped count of pairwise distinct evidences of length <= d in the
    depth-d unfolding tree, reported at d = depth and d = 2 * depth.

    Paths with a common prefix shape form a tree; a maximum set of pairwise
    distinct evidences is a maximum antichain of it, which only depends on
    (state, remaining depth).  Computed level by level, no graph analysis.
    """
    n = ks.n_states
    if kind == "G":
        # Base: states that start a sat1 path longer than |S| (such a path
        # revisits a state, hence extends forever).
        ext = [1 if sat1[t] else 0 for t in range(n)]
        for _ in range(n):
            ext = [1 if sat1[t] and any(ext[u] for u in ks.succ[t]) else 0
                   for t in range(n)]
        level = list(ext)
    else:
        level = [1 if sat2[t] else 0 for t in range(n)]
    at_depth = None
    for d in range(2, 2 * depth + 1):
        nxt = [0] * n
        for t in range(n):
            if kind == "G":
                if sat1[t]:
                    nxt[t] = min(cap, sum(level[u] for u in ks.succ[t]))
            else:
                grow = 0
                if sat1[t]:
                    grow = min(cap, sum(level[u] for u in ks.succ[t]))
                nxt[t] = max(1 if sat2[t] else 0, grow)
        level = nxt
        if d == depth:
            at_depth = level[s]
    return at_depth if at_depth is not None else level[s], level[s]


def oracle_check(ks: KripkeStructure, f) -> list:
    """Per-state verdicts for f computed with oracle_count only."""
    root = normalize(f)
    n = ks.n_states
    rows = {}
    for g in subformulas_bottom_up(root):
        if isinstance(g, Atom):
            rows[g] = [g.name in ks.labels[s] for s in range(n)]
        elif isinstance(g, TrueF):
            rows[g] = [True] * n
        elif isinstance(g, Not):
            rows[g] = [not v for v in rows[g.child]]
        elif isinstance(g, And):
            rows[g] = [a and b for a, b in zip(rows[g.left], rows[g.right])]
        elif isinstance(g, ExistsX):
            cap = g.grade + 1
            rows[g] = [oracle_count(ks, s, "X", g.grade, rows[g.child]) >= cap
                       for s in range(n)]
        elif isinstance(g, ExistsG):
            cap = g.grade + 1
            rows[g] = [oracle_count(ks, s, "G", g.grade, rows[g.child]) >= cap
                       for s in range(n)]
        elif isinstance(g, ExistsU):
            cap = g.grade + 1
            rows[g] = [
                oracle_count(ks, s, "U", g.grade, rows[g.left], rows[g.right]) >= cap
                for s in range(n)]
        elif isinstance(g, ForallU):
            stay = [a and not b for a, b in zip(rows[g.left], rows[g.right])]
            exit_ = [not a and not b for a, b in zip(rows[g.left], rows[g.right])]
            verdict = []
            for s in range(n):
                c1 = oracle_count(ks, s, "G", g.grade, stay)
                c2 = oracle_count(ks, s, "U", g.grade, stay, exit_)
                verdict.append(c1 + c2 <= g.grade)
            rows[g] = verdict
        else:
            raise TypeError(f"unexpected node {g!r}")
    return rows[root]
