"""Hierarchical state machines with scope-dependent properties.

A model is an ordered list of machines; box vertices expand to strictly
lower machines.  Propositions on a box hold on every state nested inside it
(its scope).  A model whose boxes all carry empty labels is a plain
hierarchical machine (HSM); the general form is reduced to an HSM by
specializing each machine per inherited scope set.
"""

from dataclasses import dataclass, field

from .errors import CapacityError, ValidationError
from .kripke import KripkeStructure

DEFAULT_FLAT_BUDGET = 2**22


@dataclass
class Machine:
    name: str
    vertices: list
    initial: str
    outputs: list
    labels: dict                  # vertex -> frozenset of propositions
    expand: dict                  # vertex -> 0 (node) or 1-based machine index
    edges: list = field(default_factory=list)  # (src, exit-or-None, dst)

    def is_box(self, v):
        return self.expand.get(v, 0) > 0

    def label(self, v):
        return self.labels.get(v, frozenset())

    def plain_edges(self):
        return [(u, v) for u, z, v in self.edges if z is None]

    def box_edges(self):
        return [(u, z, v) for u, z, v in self.edges if z is not None]


@dataclass
class Shsm:
    machines: list                # bottom-up; machines[-1] is top-level

    @property
    def h(self):
        return len(self.machines)

    def machine(self, index):
        """1-based accessor matching the expansion mapping."""
        return self.machines[index - 1]

    @property
    def top(self):
        return self.machines[-1]

    def max_exits(self):
        return max((len(m.outputs) for m in self.machines), default=0)

    def all_propositions(self):
        props = set()
        for m in self.machines:
            for lab in m.labels.values():
                props |= lab
        return frozenset(props)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_shsm(model: Shsm, restricted: bool = False) -> list:
    """Itemized invariant report (empty list = valid).

    With `restricted`, additionally checks that labels of a box are disjoint
    from the labels of everything nested below it.  Also reports reachable
    flat sink states, since those would break the totality of the
    flattening.
    """
    problems = []
    if not model.machines:
        return ["model has no machines"]
    seen = {}
    for i, m in enumerate(model.machines, start=1):
        where = f"machine {m.name}"
        vset = set(m.vertices)
        if len(vset) != len(m.vertices):
            problems.append(f"{where}: duplicate vertex names")
        for v in m.vertices:
            if v in seen:
                problems.append(
                    f"{where}: vertex {v!r} already used in machine {seen[v]}")
            seen[v] = m.name
        if m.initial not in vset:
            problems.append(f"{where}: initial vertex {m.initial!r} undeclared")
        for z in m.outputs:
            if z not in vset:
                problems.append(f"{where}: output vertex {z!r} undeclared")
        for v in m.vertices:
            e = m.expand.get(v, 0)
            if e < 0 or e > model.h:
                problems.append(f"{where}: vertex {v!r} expands to missing machine {e}")
            elif e >= i:
                problems.append(
                    f"{where}: vertex {v!r} expands to machine {e}, "
                    f"which is not strictly lower than {i}")
            if e > 0 and (v == m.initial or v in m.outputs):
                problems.append(
                    f"{where}: {v!r} is an initial/output vertex and cannot be a box")
        for u, z, v in m.edges:
            if u not in vset or v not in vset:
                problems.append(f"{where}: edge ({u!r}, {v!r}) references undeclared vertices")
                continue
            e = m.expand.get(u, 0)
            if z is None:
                if e != 0:
                    problems.append(
                        f"{where}: plain edge from box {u!r} (needs an exit: {u}.z -> ...)")
            else:
                if e == 0:
                    problems.append(f"{where}: exit edge from non-box vertex {u!r}")
                elif 1 <= e <= model.h and z not in model.machine(e).outputs:
                    problems.append(
                        f"{where}: edge {u}.{z} uses {z!r}, not an output of machine "
                        f"{model.machine(e).name}")
    if problems:
        return problems

    if restricted:
        problems.extend(_restricted_label_problems(model))
    problems.extend(_flat_sink_problems(model))
    return problems


def _descendant_machines(model, start_index):
    """Machine indices reachable from `start_index` through expansion."""
    seen = set()
    stack = [start_index]
    while stack:
        j = stack.pop()
        if j in seen or j == 0:
            continue
        seen.add(j)
        m = model.machine(j)
        for v in m.vertices:
            stack.append(m.expand.get(v, 0))
    return seen


def _restricted_label_problems(model):
    problems = []
    for i, m in enumerate(model.machines, start=1):
        for u in m.vertices:
            lab = m.label(u)
            e = m.expand.get(u, 0)
            if e == 0 or not lab:
                continue
            for j in sorted(_descendant_machines(model, e)):
                mj = model.machine(j)
                for v in mj.vertices:
                    clash = lab & mj.label(v)
                    if clash:
                        problems.append(
                            f"restricted: ancestor {u!r} and descendant {v!r} "
                            f"share {sorted(clash)}")
    return problems


def _flat_sink_problems(model):
    """Reachable flat sink states, computed without building the flattening.

    A flat state ends at a node; it is a sink exactly when the node has no
    plain edge and the enclosing box (if any) has no exit edge through it.
    """
    h = model.h
    # Per machine: which outputs are reachable from the entry, where a box is
    # traversed through the exits its target can reach.
    reach_out = [set() for _ in range(h + 1)]
    reach_vertex = [set() for _ in range(h + 1)]
    for i in range(1, h + 1):
        m = model.machine(i)
        adj = {v: [] for v in m.vertices}
        for u, z, v in m.edges:
            if z is None:
                if not m.is_box(u):
                    adj[u].append(v)
            else:
                if z in reach_out[m.expand[u]]:
                    adj[u].append(v)
        seen = {m.initial}
        stack = [m.initial]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        reach_vertex[i] = seen
        reach_out[i] = {z for z in m.outputs if z in seen}

    enterable = {h}
    order = [h]
    while order:
        i = order.pop()
        m = model.machine(i)
        for v in m.vertices:
            e = m.expand.get(v, 0)
            if e > 0 and v in reach_vertex[i] and e not in enterable:
                enterable.add(e)
                order.append(e)

    problems = []
    for i in sorted(enterable):
        m = model.machine(i)
        has_plain = {u for u, z, v in m.edges if z is None}
        exit_covered = {}
        for u, z, v in m.edges:
            if z is not None:
                exit_covered.setdefault(u, set()).add(z)
        for v in sorted(reach_vertex[i]):
            if m.is_box(v):
                continue
            if v in has_plain:
                continue
            if i == h:
                problems.append(
                    f"flat sink: machine {m.name} vertex {v!r} has no outgoing edge")
        for v in sorted(v for v in reach_vertex[i] if m.is_box(v)):
            target = model.machine(m.expand[v])
            covered = exit_covered.get(v, set())
            inner_plain = {u for u, z, _ in target.edges if z is None}
            for u in sorted(reach_vertex[m.expand[v]]):
                if target.is_box(u) or u in inner_plain:
                    continue
                if u in target.outputs and u in covered:
                    continue
                problems.append(
                    f"flat sink: machine {target.name} vertex {u!r} has no "
                    f"continuation inside box {v!r} of machine {m.name}")
    return problems


def check_valid(model: Shsm, restricted: bool = False) -> None:
    problems = validate_shsm(model, restricted)
    if problems:
        raise ValidationError(problems)


def is_hsm(model: Shsm) -> bool:
    """True when no box carries a label."""
    for m in model.machines:
        for v in m.vertices:
            if m.is_box(v) and m.label(v):
                return False
    return True


def repair_top_exit_loops(model: Shsm) -> Shsm:
    """Add self-loops on output vertices of the top machine that would be
    flat sinks.  Returns a new model; never touches lower machines."""
    top = model.top
    has_out = {u for u, z, v in top.edges if z is None}
    new_edges = list(top.edges)
    for z in top.outputs:
        if z not in has_out:
            new_edges.append((z, None, z))
    repaired = Machine(top.name, list(top.vertices), top.initial,
                       list(top.outputs), dict(top.labels), dict(top.expand),
                       new_edges)
    return Shsm(model.machines[:-1] + [repaired])


# ---------------------------------------------------------------------------
# Flattening
# ---------------------------------------------------------------------------


def flat_size(model: Shsm) -> int:
    """Number of states of the flattening, computed without building it."""
    sizes = [0] * (model.h + 1)
    for i in range(1, model.h + 1):
        m = model.machine(i)
        total = 0
        for v in m.vertices:
            e = m.expand.get(v, 0)
            total += sizes[e] if e else 1
        sizes[i] = total
    return sizes[model.h]


def flatten(model: Shsm, budget: int = DEFAULT_FLAT_BUDGET,
            require_total: bool = True) -> KripkeStructure:
    """Expand the hierarchy into the equivalent flat Kripke structure.

    States are the complete well-formed vertex sequences, named by joining
    the sequence with dots; a state inherits the labels of every vertex in
    its sequence.
    """
    size = flat_size(model)
    if budget is not None and size > budget:
        raise CapacityError(
            f"flattening needs {size} states, over the budget of {budget}")

    # Per machine: list of (sequence, label) plus internal transitions, with
    # box vertices replaced by a copy of the target machine's flattening.
    cache = {}

    def build(i):
        if i in cache:
            return cache[i]
        m = model.machine(i)
        seqs = []
        labels = []
        edges = []
        start = {}   # vertex -> index of its entry state in seqs
        exits = {}   # (vertex, exit name) -> index of the exit state
        for v in m.vertices:
            e = m.expand.get(v, 0)
            if e == 0:
                start[v] = len(seqs)
                exits[(v, None)] = len(seqs)
                seqs.append((v,))
                labels.append(m.label(v))
            else:
                sub_seqs, sub_labels, sub_edges, sub_start, sub_exits = build(e)
                base = len(seqs)
                box_label = m.label(v)
                for seq, lab in zip(sub_seqs, sub_labels):
                    seqs.append((v,) + seq)
                    labels.append(lab | box_label)
                edges.extend((base + a, base + b) for a, b in sub_edges)
                start[v] = base + sub_start[model.machine(e).initial]
                for z in model.machine(e).outputs:
                    exits[(v, z)] = base + sub_exits[(z, None)]
        for u, z, v in m.edges:
            src = exits.get((u, z))
            if src is None:
                continue
            edges.append((src, start[v]))
        result = (seqs, labels, edges, start, exits)
        cache[i] = result
        return result

    seqs, labels, edges, start, _ = build(model.h)
    names = [".".join(seq) for seq in seqs]
    ks = KripkeStructure(names, start[model.top.initial], edges, labels)
    if require_total:
        sinks = [names[s] for s in range(ks.n_states) if not ks.succ[s]]
        if sinks:
            raise ValidationError(
                [f"flattening is not total; sink states: {', '.join(sinks)}"])
    return ks


# ---------------------------------------------------------------------------
# Reduction of scope labels to plain hierarchy
# ---------------------------------------------------------------------------


@dataclass
class ReducedHsm:
    model: Shsm
    index: dict     # (original 1-based machine index, frozenset scope) -> new index


def restrict_ap(model: Shsm, ap) -> Shsm:
    """Drop every proposition outside `ap` from all labels."""
    ap = frozenset(ap)
    machines = []
    for m in model.machines:
        labels = {v: m.label(v) & ap for v in m.vertices}
        machines.append(Machine(m.name, list(m.vertices), m.initial,
                                list(m.outputs), labels, dict(m.expand),
                                list(m.edges)))
    return Shsm(machines)


def _scope_suffix(scope):
    return "@" + "+".join(sorted(scope)) if scope else ""


def reduce_to_hsm(model: Shsm, ap) -> ReducedHsm:
    """Build an HSM whose flattening coincides with the input's.

    Each machine is copied once per inherited scope set actually reached
    from the top level; scope propositions move into the node labels of the
    copy, and box labels are erased.  Vertices of the copy for scope P are
    renamed ``v@p1+p2``.
    """
    ap = frozenset(ap)
    order = []      # materialized (index, scope) pairs in demand order
    demanded = {}

    def demand(i, scope):
        key = (i, scope)
        if key not in demanded:
            demanded[key] = None
            order.append(key)
            m = model.machine(i)
            for v in m.vertices:
                e = m.expand.get(v, 0)
                if e:
                    demand(e, scope | (m.label(v) & ap))
        return key

    demand(model.h, frozenset())
    order.sort(key=lambda key: (key[0], sorted(key[1])))
    new_index = {key: pos + 1 for pos, key in enumerate(order)}

    machines = []
    for i, scope in order:
        m = model.machine(i)
        sfx = _scope_suffix(scope)
        rename = {v: v + sfx for v in m.vertices}
        labels = {}
        expand = {}
        for v in m.vertices:
            e = m.expand.get(v, 0)
            if e:
                labels[rename[v]] = frozenset()
                expand[rename[v]] = new_index[(e, scope | (m.label(v) & ap))]
            else:
                labels[rename[v]] = m.label(v) | scope
                expand[rename[v]] = 0
        edges = []
        for u, z, v in m.edges:
            if z is None:
                edges.append((rename[u], None, rename[v]))
            else:
                inner_scope = scope | (m.label(u) & ap)
                edges.append((rename[u], z + _scope_suffix(inner_scope), rename[v]))
        machines.append(Machine(
            m.name + sfx, [rename[v] for v in m.vertices], rename[m.initial],
            [rename[z] for z in m.outputs], labels, expand, edges))
    return ReducedHsm(Shsm(machines), dict(new_index))
