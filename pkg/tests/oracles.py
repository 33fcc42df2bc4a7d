"""Brute-force reference implementations used by the tests.

They share only the kernel transition function with the code under test:
no hashing order, no search strategy, no automata.
"""

from scver.errors import HorizonError
from scver.kernel import Kernel
from scver.props.lasso import eval_ltl_on_lasso


def reachable(design, env="MostGeneral", config=None):
    """All reachable states plus the first horizon status met (or None)."""
    kernel = Kernel(design, env, config)
    todo = list(kernel.initial_states())
    seen = set(todo)
    bound = None
    while todo:
        s = todo.pop()
        try:
            succ = kernel.successors(s)
        except HorizonError as exc:
            bound = bound or exc.status
            continue
        for _, t in succ:
            if t not in seen:
                seen.add(t)
                todo.append(t)
    return kernel, seen, bound


def safety_status(design, invariants=(), env="MostGeneral", config=None, deadlock=True):
    """Set of violation kinds present anywhere, or {"Pass"} / {bound}."""
    kernel, states, bound = reachable(design, env, config)
    props = [design.properties[n] for n in invariants]
    kinds = set()
    for s in states:
        if s.error is not None:
            kinds.add("AssertionViolation")
        elif any(not p.fn(s.vars, s.cur, s.inputs) for p in props):
            kinds.add("InvariantViolation")
        elif deadlock and kernel.is_deadlock(s):
            kinds.add("Deadlock")
    if kinds:
        return kinds
    return {bound or "Pass"}


def maximal_runs(kernel, limit=200_000):
    """Every run from an initial state to a terminal state (the state graph
    is acyclic), plus a flag telling whether some branch hit the horizon."""
    runs = []
    hit = [None]

    def walk(path):
        s = path[-1]
        if kernel.is_terminal(s):
            runs.append(list(path))
            if len(runs) > limit:
                raise RuntimeError("too many runs for the oracle")
            return
        try:
            succ = kernel.successors(s)
        except HorizonError as exc:
            hit[0] = hit[0] or exc.status
            return
        for _, t in succ:
            path.append(t)
            walk(path)
            path.pop()

    for s0 in kernel.initial_states():
        walk([s0])
    return runs, hit[0]


def ltl_status(design, formula, env="MostGeneral", config=None):
    kernel = Kernel(design, env, config)
    runs, bound = maximal_runs(kernel)
    for run in runs:
        obs = [kernel.obs_codes(s) for s in run]
        if not eval_ltl_on_lasso(formula, obs[:-1], obs[-1:]):
            return "LtlViolation"
    return bound or "Pass"


def shortest_depths(design, env="MostGeneral", config=None):
    """BFS depth of every reachable state."""
    kernel = Kernel(design, env, config)
    frontier = list(dict.fromkeys(kernel.initial_states()))
    depth = {s: 0 for s in frontier}
    while frontier:
        nxt = []
        for s in frontier:
            try:
                succ = kernel.successors(s)
            except HorizonError:
                continue
            for _, t in succ:
                if t not in depth:
                    depth[t] = depth[s] + 1
                    nxt.append(t)
        frontier = nxt
    return kernel, depth


# LTL formula and lasso generators

def generate_formulas(count, seed=7, atom_names=("p", "q"), max_temporal=3):
    """Deterministic pseudo-random formulas, pairwise distinct as text."""
    import random
    from scver.props import ltl

    rng = random.Random(seed)
    atoms = [ltl.Atom(a) for a in atom_names]

    def gen(depth):
        if depth == 0 or rng.random() < 0.25:
            return rng.choice(atoms + [ltl.Const(True)] if rng.random() < 0.1 else atoms)
        kind = rng.choice(["!", "X", "F", "G", "&&", "||", "->", "U", "R"])
        if kind == "!":
            return ltl.Not(gen(depth - 1))
        if kind in ("X", "F", "G"):
            return {"X": ltl.Next, "F": ltl.Finally, "G": ltl.Globally}[kind](gen(depth - 1))
        left, right = gen(depth - 1), gen(depth - 1)
        if kind == "->":
            return ltl.implies(left, right)
        return {"&&": ltl.And, "||": ltl.Or, "U": ltl.Until, "R": ltl.Release}[kind](left, right)

    out, seen = [], set()
    while len(out) < count:
        f = gen(4)
        text = ltl.to_text(f)
        if ltl.temporal_count(f) > max_temporal or text in seen:
            continue
        seen.add(text)
        out.append(f)
    return out


ALPHABET = [{"p": p, "q": q} for p in (0, 1) for q in (0, 1)]


def oracle_table(f, max_len, alphabet=ALPHABET):
    """eval_ltl_on_lasso semantics for every lasso, vectorised per shape."""
    from itertools import product

    import numpy as np
    from scver.props.lasso import evaluate_batch

    table = {}
    letters = range(len(alphabet))
    for total in range(1, max_len + 1):
        words = list(product(letters, repeat=total))
        idx = np.array(words)

        def truth(atom):
            col = np.array([atom.holds(o) for o in alphabet], dtype=bool)
            return col[idx]

        for j in range(total):
            res = evaluate_batch(f, truth, total, j, len(words))
            for w, r in zip(words, res):
                table[(w[:j], w[j:])] = bool(r)
    return table
