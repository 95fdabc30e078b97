"""Slow reference implementations used only by the tests.

Everything here favors obviousness over speed: linear-domain float sums,
explicit enumeration, no sharing with the library's DP code paths.
"""

import math
from itertools import product


def cutset_count(t) -> int:
    """Number of antichain cutsets of the truncation (root edges combined)."""
    n = t.num_vertices
    c = [1] * n
    for v in range(n - 1, 0, -1):
        kids = t.children_of(v)
        if len(kids) == 0:
            c[v] = 1
        else:
            p = 1
            for k in kids:
                p *= c[k]
            c[v] = 1 + p
    total = 1
    for k in t.children_of(0):
        total *= c[k]
    return total


def _enum(t, v: int, d: int):
    # every antichain below the edge into v: cut that edge, or recurse
    yield ((v, d),)
    kids = t.children_of(v)
    if len(kids) > 0:
        for combo in product(*[list(_enum(t, k, d + 1)) for k in kids]):
            merged = []
            for part in combo:
                merged.extend(part)
            yield tuple(merged)


def enumerate_cutsets(t):
    """All antichain cutsets as tuples of (vertex, depth)."""
    roots = list(t.children_of(0))
    for combo in product(*[list(_enum(t, r, 1)) for r in roots]):
        merged = []
        for part in combo:
            merged.extend(part)
        yield tuple(merged)


def cutset_depth_histograms(t):
    """One (count at depth 1, ..., count at depth D) tuple per cutset."""
    D = t.depth
    out = []
    for cs in enumerate_cutsets(t):
        h = [0] * (D + 1)
        for _, d in cs:
            h[d] += 1
        out.append(tuple(h[1:]))
    return out


def brute_min_cutset(t, weight, hists=None) -> float:
    """Minimum linear-domain capacity over every antichain cutset.

    weight maps a depth to the linear w(d).  Use only on truncations whose
    cutset_count is small; hists lets callers reuse one enumeration across
    several weight kinds.
    """
    if hists is None:
        hists = cutset_depth_histograms(t)
    ws = [weight(d) for d in range(1, t.depth + 1)]
    best = math.inf
    for h in hists:
        cap = math.fsum(c * w for c, w in zip(h, ws) if c)
        if cap < best:
            best = cap
    return best
