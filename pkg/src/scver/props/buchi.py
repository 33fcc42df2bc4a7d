"""LTL to Buchi automata.

Tableau (node-splitting) construction over the negation normal form,
followed by counter degeneralisation of the generalised acceptance
condition and a language-preserving clean-up (pruning of states without
an accepting future, bisimulation merge, removal of subsumed edges).
"""

from dataclasses import dataclass, field
from itertools import count, product

import numpy as np

from .ltl import Atom, Const, Not, And, Or, Next, Until, Release, nnf, atoms as formula_atoms

INIT = "init"


@dataclass
class BuchiAutomaton:
    """States are ``0 .. n-1``; a transition ``(label, dst)`` is taken on
    reading a letter that satisfies every literal ``(atom index, polarity)``
    in ``label``."""
    atoms: list
    n_states: int
    initial: frozenset
    transitions: dict
    accepting: frozenset
    formula: object = None

    def edges(self):
        for src in range(self.n_states):
            for label, dst in self.transitions.get(src, ()):
                yield src, label, dst

    def label_holds(self, label, truth):
        return all(truth[a] == pol for a, pol in label)

    def truth_vector(self, obs):
        return tuple(a.holds(obs) for a in self.atoms)

    def step(self, states, truth):
        out = set()
        for q in states:
            for label, dst in self.transitions.get(q, ()):
                if self.label_holds(label, truth):
                    out.add(dst)
        return out

    def accepts_lasso(self, prefix, loop):
        """Membership of ``prefix . loop^omega`` by accepting-cycle search."""
        word = [self.truth_vector(o) for o in list(prefix) + list(loop)]
        return self.accepts_truths(word, len(prefix))

    def accepts_truths(self, word, loop_start):
        n = len(word)

        def succ(i):
            return i + 1 if i + 1 < n else loop_start

        graph = {}
        stack = [(q, 0) for q in sorted(self.initial)]
        seen = set(stack)
        while stack:
            node = stack.pop()
            q, i = node
            outs = [(d, succ(i)) for d in sorted(self.step((q,), word[i]))]
            graph[node] = outs
            for m in outs:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        for node in seen:
            if node[0] in self.accepting and _on_cycle(graph, node):
                return True
        return False

    def membership_table(self, alphabet, max_len):
        """Acceptance of every lasso ``prefix . loop^omega`` over ``alphabet``
        with ``len(prefix) + len(loop) <= max_len``.

        Returns a dict keyed by ``(prefix, loop)`` tuples of letter indices.
        Relations are boolean matrices; a loop is accepted from state ``q``
        iff, in the graph of whole-loop steps, ``q`` reaches an edge that
        passes an accepting state and lies on a cycle.
        """
        n = self.n_states
        letters = [self.truth_vector(o) for o in alphabet]
        if n == 0:
            return {(w[:j], w[j:]): False for total in range(1, max_len + 1)
                    for w in product(range(len(letters)), repeat=total) for j in range(total)}
        step = np.zeros((len(letters), n, n), dtype=bool)
        for a, tv in enumerate(letters):
            for q in range(n):
                for d in self.step((q,), tv):
                    step[a, q, d] = True
        acc = np.zeros(n, dtype=bool)
        acc[list(self.accepting)] = True
        step_acc = step & acc[None, :, None]

        def mul(x, y):
            return np.matmul(x.astype(np.uint8), y.astype(np.uint8)) > 0

        good = {}  # loop length -> (words, accepted-from matrix)
        for m in range(1, max_len + 1):
            words = list(product(range(len(letters)), repeat=m))
            rel = step[[w[-1] for w in words]]
            rel_acc = step_acc[[w[-1] for w in words]]
            for k in range(m - 2, -1, -1):
                first = step[[w[k] for w in words]]
                first_acc = step_acc[[w[k] for w in words]]
                rel_acc = mul(first_acc, rel) | mul(first, rel_acc)
                rel = mul(first, rel)
            closure = rel | np.eye(n, dtype=bool)[None]
            for _ in range(max(1, n).bit_length()):
                closure = mul(closure, closure)
            # u lies on an accepting cycle if rel_acc[u, v] and v reaches u
            on_cycle = np.any(rel_acc & np.swapaxes(closure, 1, 2), axis=2)
            good[m] = (words, np.any(closure & on_cycle[:, None, :], axis=2))
        init = np.zeros(n, dtype=bool)
        init[list(self.initial)] = True
        reach = {0: ([()], init[None, :])}
        for j in range(1, max_len):
            words, prev = reach[j - 1]
            nxt = np.any(prev[:, None, :, None] & step[None, :, :, :], axis=2)
            reach[j] = ([w + (a,) for w in words for a in range(len(letters))],
                        nxt.reshape(-1, n))
        table = {}
        for total in range(1, max_len + 1):
            for j in range(total):
                pre_words, pre = reach[j]
                loop_words, ok = good[total - j]
                hit = np.any(pre[:, None, :] & ok[None, :, :], axis=2)
                for pw, row in zip(pre_words, hit.tolist()):
                    for lw, v in zip(loop_words, row):
                        table[(pw, lw)] = v
        return table

    def describe(self):
        lines = [f"states: {self.n_states}, initial: {sorted(self.initial)}, "
                 f"accepting: {sorted(self.accepting)}"]
        for src, label, dst in self.edges():
            text = " && ".join(("" if pol else "!") + _atom_text(self.atoms[a]) for a, pol in label)
            lines.append(f"  {src} -[{text or 'true'}]-> {dst}")
        return "\n".join(lines)


def _atom_text(a):
    return a.name if a.op is None else f"{a.name} {a.op} {a.value}"


def _on_cycle(graph, start):
    stack = list(graph.get(start, ()))
    seen = set()
    while stack:
        m = stack.pop()
        if m == start:
            return True
        if m in seen:
            continue
        seen.add(m)
        stack.extend(graph.get(m, ()))
    return False


# tableau

@dataclass
class _Node:
    name: int
    incoming: set
    new: list
    old: set = field(default_factory=set)
    next: set = field(default_factory=set)


def _is_literal(f):
    return isinstance(f, (Atom, Const)) or (isinstance(f, Not) and isinstance(f.arg, Atom))


def _negate_literal(f):
    if isinstance(f, Const):
        return Const(not f.value)
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def _tableau(f):
    names = count(1)
    done = []

    def add_new(node, formulas):
        for g in formulas:
            if g not in node.old and g not in node.new:
                node.new.append(g)

    def split(node, new1, next1, new2):
        n1 = _Node(next(names), set(node.incoming), list(node.new), set(node.old), set(node.next))
        add_new(n1, new1)
        n1.next |= next1
        n2 = _Node(next(names), set(node.incoming), list(node.new), set(node.old), set(node.next))
        add_new(n2, new2)
        work.append(n2)
        work.append(n1)

    work = [_Node(next(names), {INIT}, [f])]
    while work:
        node = work.pop()
        if not node.new:
            for other in done:
                if other.old == node.old and other.next == node.next:
                    other.incoming |= node.incoming
                    break
            else:
                done.append(node)
                work.append(_Node(next(names), {node.name}, list(node.next)))
            continue
        eta = node.new.pop()
        if eta in node.old:
            work.append(node)
            continue
        node.old.add(eta)
        if _is_literal(eta):
            if eta == Const(False) or _negate_literal(eta) in node.old:
                continue
            work.append(node)
        elif isinstance(eta, And):
            add_new(node, [eta.left, eta.right])
            work.append(node)
        elif isinstance(eta, Next):
            node.next.add(eta.arg)
            work.append(node)
        elif isinstance(eta, Or):
            split(node, [eta.left], set(), [eta.right])
        elif isinstance(eta, Until):
            split(node, [eta.left], {eta}, [eta.right])
        elif isinstance(eta, Release):
            split(node, [eta.right], {eta}, [eta.left, eta.right])
        else:
            raise TypeError(f"formula not in negation normal form: {eta!r}")
    return done


def _subformulas(f):
    out = []
    stack = [f]
    while stack:
        g = stack.pop()
        if g not in out:
            out.append(g)
        if isinstance(g, (Not, Next)):
            stack.append(g.arg)
        elif isinstance(g, (And, Or, Until, Release)):
            stack.extend((g.left, g.right))
    return out


def to_buchi(f):
    """Buchi automaton accepting exactly the words satisfying ``f``."""
    g = nnf(f)
    atom_list = formula_atoms(g)
    atom_index = {a: k for k, a in enumerate(atom_list)}
    nodes = _tableau(g)
    untils = [h for h in _subformulas(g) if isinstance(h, Until)]

    def label(node):
        lits = set()
        for h in node.old:
            if isinstance(h, Atom):
                lits.add((atom_index[h], True))
            elif isinstance(h, Not) and isinstance(h.arg, Atom):
                lits.add((atom_index[h.arg], False))
        return tuple(sorted(lits))

    in_f = [{nd.name for nd in nodes if u not in nd.old or u.right in nd.old} for u in untils]
    k = len(untils)
    by_name = {nd.name: nd for nd in nodes}

    # degeneralised states: (tableau node or INIT, counter)
    start = (INIT, 0)
    index = {start: 0}
    order = [start]
    trans = {}
    todo = [start]
    while todo:
        q = todo.pop(0)
        name, i = q
        j = i
        if k and name != INIT and name in in_f[i]:
            j = (i + 1) % k
        outs = []
        for nd in sorted(nodes, key=lambda x: x.name):
            if name in nd.incoming:
                dst = (nd.name, j)
                if dst not in index:
                    index[dst] = len(order)
                    order.append(dst)
                    todo.append(dst)
                outs.append((label(nd), index[dst]))
        trans[index[q]] = outs
    if k:
        acc = {index[q] for q in order if q[0] != INIT and q[1] == 0 and q[0] in in_f[0]}
    else:
        acc = set(range(len(order)))
    aut = BuchiAutomaton(atom_list, len(order), frozenset({0}), trans, frozenset(acc), f)
    return simplify(aut)


# clean-up

def _prune(aut):
    """Keep states reachable from an initial state that can reach an accepting cycle."""
    succ = {q: {d for _, d in aut.transitions.get(q, ())} for q in range(aut.n_states)}
    reach = set(aut.initial)
    stack = list(aut.initial)
    while stack:
        q = stack.pop()
        for d in succ[q]:
            if d not in reach:
                reach.add(d)
                stack.append(d)
    graph = {q: [d for d in succ[q] if d in reach] for q in reach}
    good_acc = {q for q in reach & aut.accepting if _on_cycle(graph, q)}
    pred = {q: set() for q in reach}
    for q in reach:
        for d in graph[q]:
            pred[d].add(q)
    live = set(good_acc)
    stack = list(good_acc)
    while stack:
        q = stack.pop()
        for p in pred[q]:
            if p not in live:
                live.add(p)
                stack.append(p)
    return _restrict(aut, live)


def _restrict(aut, keep):
    keep_sorted = sorted(keep)
    remap = {q: k for k, q in enumerate(keep_sorted)}
    trans = {}
    for q in keep_sorted:
        outs = [(lab, remap[d]) for lab, d in aut.transitions.get(q, ()) if d in remap]
        trans[remap[q]] = outs
    return BuchiAutomaton(aut.atoms, len(keep_sorted),
                          frozenset(remap[q] for q in aut.initial if q in remap),
                          trans, frozenset(remap[q] for q in aut.accepting if q in remap),
                          aut.formula)


def _drop_subsumed(outs):
    """Remove edges whose label is implied by a weaker label to the same target."""
    uniq = sorted(set(outs))
    keep = []
    for lab, d in uniq:
        s = set(lab)
        if any(d2 == d and set(l2) < s for l2, d2 in uniq):
            continue
        keep.append((lab, d))
    return keep


def simplify(aut):
    aut = _prune(aut)
    trans = {q: _drop_subsumed(aut.transitions.get(q, ())) for q in range(aut.n_states)}
    # coarsest partition stable under (accepting, {(label, block of target)})
    block = {q: int(q in aut.accepting) for q in range(aut.n_states)}
    while True:
        sigs = {}
        for q in range(aut.n_states):
            sig = (block[q], tuple(sorted({(lab, block[d]) for lab, d in trans[q]})))
            sigs[q] = sig
        ids = {}
        new_block = {}
        for q in range(aut.n_states):
            new_block[q] = ids.setdefault(sigs[q], len(ids))
        if len(ids) == len(set(block.values())):
            block = new_block
            break
        block = new_block
    # renumber blocks in order of first state, keeping initial blocks first
    order = []
    for q in sorted(aut.initial) + list(range(aut.n_states)):
        if block[q] not in order:
            order.append(block[q])
    rank = {b: k for k, b in enumerate(order)}
    merged = {}
    for q in range(aut.n_states):
        src = rank[block[q]]
        merged.setdefault(src, set()).update((lab, rank[block[d]]) for lab, d in trans[q])
    trans = {q: _drop_subsumed(merged.get(q, ())) for q in range(len(order))}
    return BuchiAutomaton(aut.atoms, len(order),
                          frozenset(rank[block[q]] for q in aut.initial),
                          trans,
                          frozenset(rank[block[q]] for q in aut.accepting),
                          aut.formula)
