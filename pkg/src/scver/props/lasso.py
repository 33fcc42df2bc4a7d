"""Direct LTL semantics on ultimately periodic words (no automata).

Positions ``0 .. n-1`` of ``prefix + loop`` form a graph in which every
position has one successor and the last position loops back to the start
of the loop.  Temporal operators are evaluated as fixpoints over that
graph: least fixpoints for U, greatest for R.  Evaluation is vectorised
over a batch of words sharing the same shape.
"""

import numpy as np

from .ltl import Atom, Const, Not, And, Or, Next, Finally, Globally, Until, Release


def eval_ltl_on_lasso(f, prefix, loop):
    """Truth of ``f`` on ``prefix . loop^omega`` (observations as dicts)."""
    if not loop:
        raise ValueError("loop must be nonempty")
    word = list(prefix) + list(loop)

    def truth(atom):
        return np.array([[atom.holds(obs) for obs in word]], dtype=bool)

    return bool(evaluate_batch(f, truth, len(word), len(prefix), 1)[0])


def evaluate_batch(f, truth, n, loop_start, batch):
    """Evaluate ``f`` at position 0 for ``batch`` words of length ``n``.

    ``truth(atom)`` returns a bool array of shape (batch, n).
    """
    succ = np.array(list(range(1, n)) + [loop_start])
    cache = {}

    def val(g):
        key = id(g)
        if key in cache:
            return cache[key][1]
        out = _val(g)
        cache[key] = (g, out)
        return out

    def until(a, b):
        x = np.zeros_like(b)
        for _ in range(n + 1):
            y = b | (a & x[:, succ])
            if np.array_equal(x, y):
                break
            x = y
        return x

    def release(a, b):
        x = np.ones_like(b)
        for _ in range(n + 1):
            y = b & (a | x[:, succ])
            if np.array_equal(x, y):
                break
            x = y
        return x

    def _val(g):
        if isinstance(g, Atom):
            return truth(g)
        if isinstance(g, Const):
            return np.full((batch, n), g.value, dtype=bool)
        if isinstance(g, Not):
            return ~val(g.arg)
        if isinstance(g, And):
            return val(g.left) & val(g.right)
        if isinstance(g, Or):
            return val(g.left) | val(g.right)
        if isinstance(g, Next):
            return val(g.arg)[:, succ]
        if isinstance(g, Finally):
            b = val(g.arg)
            return until(np.ones_like(b), b)
        if isinstance(g, Globally):
            b = val(g.arg)
            return release(np.zeros_like(b), b)
        if isinstance(g, Until):
            return until(val(g.left), val(g.right))
        if isinstance(g, Release):
            return release(val(g.left), val(g.right))
        raise TypeError(f"not a formula: {g!r}")

    return val(f)[:, 0]
