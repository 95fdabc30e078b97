"""Concrete tree rules: the 1-3 tree, stretched variants, shift saturation,
the plane comb, and directed covers.

Every rule here is a finite presentation (a `TreeRule`) of an infinite
leafless tree; `tree_core.expand` materializes bounded truncations of them.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Dict, Iterable, List, NamedTuple, Optional, Tuple

from .errors import ResourceCapError, StabilizationError, UsageError, VerificationError
from .tree_core import (
    CombState,
    CoverState,
    StretchState,
    T13State,
    TreeRule,
    Truncation,
    UnionState,
    expand,
)


# ---------------------------------------------------------------------------
# integer roots (exact rational powers need them)


def iroot(y: int, k: int) -> int:
    """Largest t >= 0 with t**k <= y.  Exact for arbitrarily large ints."""
    if y < 0 or k < 1:
        raise ValueError("iroot needs y >= 0, k >= 1")
    if k == 1 or y < 2:
        return y
    # binary search seeded by bit length; float seeds overflow for huge y
    hi = 1 << (y.bit_length() // k + 1)
    lo = 0
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid ** k <= y:
            lo = mid
        else:
            hi = mid - 1
    return lo


# ---------------------------------------------------------------------------
# stretch functions


class StretchFunction:
    """Nondecreasing integer edge-length profile f(m) >= 1.

    value(m) is f(m) itself, prefix(n) = sum_{k<=n} f(k) is the depth of the
    level-n branch vertex in the stretched tree, and run_end(u) is the last
    argument sharing f(u)'s value (None when that run never ends).
    """

    def value(self, m: int) -> int:
        raise NotImplementedError

    def prefix(self, n: int) -> int:
        raise NotImplementedError

    def run_end(self, u: int) -> Optional[int]:
        raise NotImplementedError

    def inv_prefix(self, d: int) -> int:
        """Largest n >= 0 with prefix(n) <= d."""
        if d < 0:
            raise UsageError("inv_prefix needs d >= 0", d=d)
        lo, hi = 0, 1
        while self.prefix(hi) <= d:
            hi *= 2
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.prefix(mid) <= d:
                lo = mid
            else:
                hi = mid - 1
        return lo


class Identity(StretchFunction):
    """f(m) = m: the paper-standard quadratic stretching."""

    def value(self, m: int) -> int:
        return m

    def prefix(self, n: int) -> int:
        return n * (n + 1) // 2

    def run_end(self, u: int) -> Optional[int]:
        return u

    def __repr__(self) -> str:
        return "Identity()"

    def __str__(self) -> str:
        return "identity"

    def __eq__(self, other) -> bool:
        return type(other) is Identity

    def __hash__(self) -> int:
        return hash("stretch-identity")


class Unit(StretchFunction):
    """f(m) = 1: no stretching at all (the base tree itself)."""

    def value(self, m: int) -> int:
        return 1

    def prefix(self, n: int) -> int:
        return n

    def run_end(self, u: int) -> Optional[int]:
        return None

    def __repr__(self) -> str:
        return "Unit()"

    def __str__(self) -> str:
        return "unit"

    def __eq__(self, other) -> bool:
        return type(other) is Unit

    def __hash__(self) -> int:
        return hash("stretch-unit")


class PowerCeil(StretchFunction):
    """f(m) = ceil(m**s) for a positive rational s, evaluated exactly."""

    def __init__(self, s) -> None:
        if isinstance(s, float):
            raise UsageError(
                "PowerCeil exponent must be exact; pass a string or Fraction",
                got=repr(s),
            )
        s = Fraction(s)
        if s <= 0:
            raise UsageError("PowerCeil exponent must be positive", s=str(s))
        self.s = s
        self.p = s.numerator
        self.q = s.denominator
        self._pref: List[int] = [0]
        self._vals: List[int] = [0]

    def value(self, m: int) -> int:
        if m < 1:
            raise ValueError("stretch arguments start at 1")
        vals = self._vals
        if m < len(vals):
            return vals[m]
        if self.q == 1:
            v = m ** self.p
        else:
            # ceil(m^{p/q}) = floor((m^p - 1)^{1/q}) + 1
            v = iroot(m ** self.p - 1, self.q) + 1
        if m == len(vals):  # cache the dense prefix only
            vals.append(v)
        return v

    def run_end(self, u: int) -> Optional[int]:
        w = self.value(u)
        return iroot(w ** self.q, self.p)

    def prefix(self, n: int) -> int:
        if n < 0:
            raise ValueError("prefix needs n >= 0")
        pref = self._pref
        while len(pref) <= n:
            u = len(pref)
            w = self.value(u)
            end = self.run_end(u)
            stop = min(end, n) if end is not None else n
            acc = pref[-1]
            for _ in range(u, stop + 1):
                acc += w
                pref.append(acc)
        return pref[n]

    def __repr__(self) -> str:
        return f"PowerCeil({str(self.s)!r})"

    def __str__(self) -> str:
        return f"ceil(m^{self.s})"

    def __eq__(self, other) -> bool:
        return type(other) is PowerCeil and other.s == self.s

    def __hash__(self) -> int:
        return hash(("stretch-power-ceil", self.s))


def parse_stretch(text: str) -> StretchFunction:
    """Parse CLI/provenance spellings: 'identity', 'unit', '3', '1/3', ..."""
    text = text.strip()
    if text.startswith("ceil(m^") and text.endswith(")"):
        text = text[len("ceil(m^"):-1]  # round-trip of str(PowerCeil(...))
    if text in ("identity", "id"):
        return Identity()
    if text == "unit":
        return Unit()
    try:
        s = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError("unrecognized stretch function", got=text) from exc
    if s == 1:
        return Identity()
    return PowerCeil(s)


# ---------------------------------------------------------------------------
# the 1-3 tree


def _t13_children(s) -> tuple:
    n, r = s
    if n == 0:
        return ((0, T13State(1, 0)), (1, T13State(1, 1)))
    half = 1 << (n - 1)
    if r < half:
        return ((0, T13State(n + 1, r)),)
    base = half + 3 * (r - half)
    return (
        (0, T13State(n + 1, base)),
        (1, T13State(n + 1, base + 1)),
        (2, T13State(n + 1, base + 2)),
    )


def t13_rule() -> TreeRule:
    """The 1-3 tree: level n has 2^n vertices, the left half with one child
    and the right half with three."""
    return TreeRule(_t13_children, T13State(0, 0), 3, "t13")


def delta_of(s: T13State) -> int:
    """Deficit coordinate 2^level - rank; 1 marks the immortal spine."""
    return (1 << s.level) - s.rank


# ---------------------------------------------------------------------------
# stretched trees


def stretch_rule(base: TreeRule, f: StretchFunction) -> TreeRule:
    """Replace each order-m edge of `base` by a path of f(m) edges: the
    original digit first, then f(m) - 1 forced zeros."""
    if not isinstance(base.root, T13State) or base.alphabet_size != 3:
        raise UsageError("stretch_rule expects the 1-3 tree as base",
                         base=base.name or repr(base.root))
    base_children = base.children

    def children(s) -> tuple:
        if isinstance(s, StretchState):
            z, tgt = s
            if z == 1:
                return ((0, tgt),)
            return ((0, StretchState(z - 1, tgt)),)
        kids = []
        for d, child in base_children(s):
            length = f.value(child.level)
            if length == 1:
                kids.append((d, child))
            else:
                kids.append((d, StretchState(length - 1, child)))
        return tuple(kids)

    name = "t0" if isinstance(f, Identity) else f"t0[{f}]"
    return TreeRule(children, base.root, 3, name)


def t0_rule(f: Optional[StretchFunction] = None) -> TreeRule:
    """The stretched 1-3 tree; f defaults to the identity stretching."""
    return stretch_rule(t13_rule(), f if f is not None else Identity())


# ---------------------------------------------------------------------------
# the plane comb


_COMB_ORIGIN = CombState("origin")
_COMB_ARM = CombState("arm")
_COMB_TOOTH = CombState("tooth")

_COMB_KIDS = {
    "origin": ((0, _COMB_ARM), (1, _COMB_ARM), (2, _COMB_TOOTH), (3, _COMB_TOOTH)),
    "arm": ((0, _COMB_ARM), (1, _COMB_TOOTH), (2, _COMB_TOOTH)),
    "tooth": ((0, _COMB_TOOTH),),
}


def comb_rule() -> TreeRule:
    """Breadth-first spanning tree of the plane comb: two spine arms from the
    origin, two teeth per spine vertex, teeth never branch."""
    return TreeRule(lambda s: _COMB_KIDS[s.kind], _COMB_ORIGIN, 4, "comb")


# ---------------------------------------------------------------------------
# directed covers


class DirectedGraph(NamedTuple):
    """Finite digraph with a base vertex; adj[v] lists out-neighbors and the
    list position is the edge's digit."""

    n: int
    base: int
    adj: Tuple[Tuple[int, ...], ...]


def load_digraph(path: str) -> DirectedGraph:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError("cannot read digraph file", path=path, reason=str(exc))
    except json.JSONDecodeError as exc:
        raise UsageError("digraph file is not valid JSON", path=path, reason=str(exc))
    if not isinstance(raw, dict) or not {"n", "base", "adj"} <= set(raw):
        raise UsageError("digraph JSON needs keys n, base, adj", path=path)
    n, base, adj = raw["n"], raw["base"], raw["adj"]
    if not (isinstance(n, int) and isinstance(base, int) and isinstance(adj, list)):
        raise UsageError("digraph fields have wrong types", path=path)
    return _check_digraph(DirectedGraph(n, base, tuple(tuple(row) for row in adj)))


def _check_digraph(g: DirectedGraph) -> DirectedGraph:
    if g.n < 1 or len(g.adj) != g.n:
        raise UsageError("digraph adjacency must list exactly n rows", n=g.n,
                         rows=len(g.adj))
    if not 0 <= g.base < g.n:
        raise UsageError("digraph base vertex out of range", base=g.base, n=g.n)
    for v, row in enumerate(g.adj):
        if len(row) == 0:
            raise UsageError("directed cover needs out-degree >= 1 everywhere",
                             vertex=v)
        for w in row:
            if not (isinstance(w, int) and 0 <= w < g.n):
                raise UsageError("digraph edge target out of range",
                                 vertex=v, target=w, n=g.n)
    return g


def cover_rule(g: DirectedGraph) -> TreeRule:
    """Directed cover of g: tree of walks from the base vertex."""
    g = _check_digraph(g)
    kids_table = tuple(
        tuple((j, CoverState(w)) for j, w in enumerate(row)) for row in g.adj
    )
    width = max(len(row) for row in g.adj)
    return TreeRule(lambda s: kids_table[s.vertex], CoverState(g.base), width,
                    "cover")


def ray_rule() -> TreeRule:
    """Single infinite path; the degenerate cover of one self-loop."""
    return cover_rule(DirectedGraph(1, 0, ((0,),)))._replace(name="ray")


# ---------------------------------------------------------------------------
# shift saturation: three independent routes to the same tree


class SaturationParams(NamedTuple):
    """Knobs for the shift-saturated tree.

    D is the truncation depth.  M bounds the seed sweep (default
    prefix(D + 2) + D) and sweep is the per-round M increment (default D);
    both only matter to the explicit seed-union route.
    """

    D: int
    M: Optional[int] = None
    sweep: Optional[int] = None

    def resolved_m(self, f: StretchFunction) -> int:
        if self.M is not None:
            if self.M < 1:
                raise UsageError("M must be positive", M=self.M)
            return self.M
        return f.prefix(self.D + 2) + self.D

    def resolved_sweep(self) -> int:
        if self.sweep is not None:
            if self.sweep < 1:
                raise UsageError("sweep must be positive", sweep=self.sweep)
            return self.sweep
        return max(1, self.D)


T_TILDE_DEPTH_CAP = 96


def t_tilde_rule(f: StretchFunction, depth: int) -> TreeRule:
    """Lazy window-automaton rule for the shift saturation of the stretched
    tree.  Valid for truncations up to `depth` only: states encode how much
    window is left, so a deeper expansion needs a deeper rule."""
    from ._windows import WindowEngine

    eng = WindowEngine(f, depth)
    return TreeRule(eng.children, eng.root, 3, f"t-tilde[{f}]")


def t_tilde_truncation(
    f: StretchFunction,
    p: SaturationParams,
    *,
    max_vertices: Optional[int] = None,
    depth_cap: int = T_TILDE_DEPTH_CAP,
) -> Truncation:
    """Depth-p.D truncation of the shift-saturated stretched tree, computed
    by the alignment-complete window engine."""
    if p.D > depth_cap:
        raise ResourceCapError(
            "saturated-tree truncation beyond the depth cap",
            depth=p.D, cap=depth_cap,
        )
    rule = t_tilde_rule(f, p.D)
    prov = {
        "tree": "t-tilde",
        "f": str(f),
        "depth": p.D,
        "mode": "window-engine",
        "alignment_complete": True,
    }
    return expand(rule, p.D, max_vertices=max_vertices, provenance=prov)


# -- route 2: explicit seed union ------------------------------------------


def _capped_kids(s, f: StretchFunction, zcap: int) -> tuple:
    """Successors in the zeros-capped quotient of the stretched tree.

    Interior states with zeros_left == zcap stand for every deeper value, so
    they get a second digit-0 successor (themselves).  Not a TreeRule
    children function: digits repeat.
    """
    if isinstance(s, StretchState):
        z, tgt = s
        if z == 1:
            return ((0, tgt),)
        nxt = [(0, StretchState(z - 1, tgt))]
        if z == zcap:
            nxt.append((0, s))
        return tuple(nxt)
    kids = []
    for d, child in _t13_children(s):
        length = f.value(child.level)
        if length == 1:
            kids.append((d, child))
        else:
            kids.append((d, StretchState(min(length - 1, zcap), child)))
    return tuple(kids)


def _seed_edges(s, f: StretchFunction, zcap: int) -> tuple:
    """Successors with true-depth weights in the zeros-capped quotient.

    The capped interior state stands for the whole top of a long zero chain
    (its cheapest representative sits right below the branch vertex), so
    stepping off the cap costs the entire conflated stretch.
    """
    if isinstance(s, StretchState):
        z, tgt = s
        if z == 1:
            return ((tgt, 1),)
        w = f.value(tgt.level) - zcap if z == zcap else 1
        return ((StretchState(z - 1, tgt), w),)
    out = []
    for _d, child in _t13_children(s):
        length = f.value(child.level)
        if length == 1:
            out.append((child, 1))
        else:
            out.append((StretchState(min(length - 1, zcap), child), 1))
    return tuple(out)


def _collect_seed_states(f: StretchFunction, depth: int, m: int) -> Dict:
    """All zeros-capped vertex states whose nearest representative in the
    true tree sits within depth m (exact, via weighted search)."""
    import heapq

    zcap = depth + 1
    root = T13State(0, 0)
    dist = {root: 0}
    heap = [(0, 0, root)]
    tick = 1
    while heap:
        d, _, s = heapq.heappop(heap)
        if d > dist.get(s, m + 1):
            continue
        for c, w in _seed_edges(s, f, zcap):
            nd = d + w
            if nd <= m and nd < dist.get(c, m + 1):
                dist[c] = nd
                heapq.heappush(heap, (nd, tick, c))
                tick += 1
    return dist


def _emit_suffix_labels(seed, stretch_children, depth: int, labels: set) -> None:
    stack = [(seed, "")]
    while stack:
        s, lab = stack.pop()
        if len(lab) >= depth:
            continue
        for d, c in stretch_children(s):
            child_lab = lab + "012"[d]
            labels.add(child_lab)
            stack.append((c, child_lab))


def _truncation_from_labels(labels: Iterable[str], depth: int, provenance: dict) -> Truncation:
    from array import array

    by_level: List[List[str]] = [[] for _ in range(depth + 1)]
    by_level[0].append("")
    for lab in labels:
        if lab:
            by_level[len(lab)].append(lab)
    for level in by_level:
        level.sort()

    parent = array("q", [-1])
    digit = array("b", [-1])
    level_start = [0, 1]
    degs: List[int] = []
    prev_index = {"": 0}
    total = 1
    for n in range(1, depth + 1):
        level_labels = by_level[n]
        cur_index = {}
        counts = [0] * len(prev_index)
        for lab in level_labels:
            head = lab[:-1]
            if head not in prev_index:
                raise VerificationError("seed union is not prefix-closed",
                                        label=lab)
            p = prev_index[head]
            counts[p - level_start[n - 1]] += 1
            cur_index[lab] = total
            parent.append(p)
            digit.append(int(lab[-1]))
            total += 1
        # the true tree is leafless, so no interior vertex may dry up
        if 0 in counts:
            raise VerificationError("seed union produced a leaf",
                                    level=n - 1,
                                    vertex=level_start[n - 1] + counts.index(0))
        degs.extend(counts)
        level_start.append(total)
        prev_index = cur_index
    degs.extend([0] * len(prev_index))

    child_start = array("q", [1])
    acc = 1
    for c in degs:
        acc += c
        child_start.append(acc)
    return Truncation(depth, parent, digit, level_start, child_start,
                      dict(provenance))


def t_tilde_truncation_seeds(
    f: StretchFunction,
    p: SaturationParams,
    *,
    max_sweeps: int = 64,
) -> Truncation:
    """Shift saturation by brute seed union: expand the suffix tree of every
    (zeros-capped, deduplicated) vertex state within depth M, union the
    labels, and sweep M upward until a full sweep adds nothing.

    Exponentially slower than the window engine; kept as an independent
    oracle and only sane for small depths.
    """
    depth = p.D
    if depth < 0:
        raise UsageError("depth must be >= 0", depth=depth)
    stretch_children = t0_rule(f).children
    m = p.resolved_m(f)
    sweep = p.resolved_sweep()

    labels: set = set()
    expanded: set = set()
    sizes: List[int] = []

    def absorb(upto_m: int) -> None:
        for s in _collect_seed_states(f, depth, upto_m):
            if s not in expanded:
                expanded.add(s)
                _emit_suffix_labels(s, stretch_children, depth, labels)

    absorb(m)
    sizes.append(len(labels))
    for _ in range(max_sweeps):
        m += sweep
        absorb(m)
        sizes.append(len(labels))
        if sizes[-1] == sizes[-2]:
            prov = {
                "tree": "t-tilde",
                "f": str(f),
                "depth": depth,
                "mode": "seed-union",
                "certified_M": m,
                "sweeps": len(sizes) - 1,
            }
            return _truncation_from_labels(labels, depth, prov)
    raise StabilizationError(
        "seed union did not stabilize",
        last_sizes=sizes[-2:], M=m, sweeps=max_sweeps,
    )


# -- route 3: the same union as a TreeRule over UnionState ------------------


def _encode_member(s) -> tuple:
    if isinstance(s, StretchState):
        z, tgt = s
        return ("i", z, tgt.level, tgt.rank)
    return ("b", s.level, s.rank)


def _decode_member(m: tuple):
    if m[0] == "i":
        return StretchState(m[1], T13State(m[2], m[3]))
    return T13State(m[1], m[2])


def t_tilde_union_rule(f: StretchFunction, p: SaturationParams) -> TreeRule:
    """Shift saturation as a rule over canonical unions of seed states.

    The root member set is the full (capped) seed sweep, so this is only
    usable at small depths; it exists to cross-check the other two routes
    through the ordinary expand machinery.
    """
    zcap = p.D + 1
    seeds = sorted(_encode_member(s) for s in
                   _collect_seed_states(f, p.D, p.resolved_m(f)))
    root = UnionState(tuple(seeds))

    def children(u: UnionState) -> tuple:
        by_digit: Dict[int, set] = {}
        for m in u.members:
            for d, c in _capped_kids(_decode_member(m), f, zcap):
                by_digit.setdefault(d, set()).add(_encode_member(c))
        return tuple(
            (d, UnionState(tuple(sorted(by_digit[d]))))
            for d in sorted(by_digit)
        )

    return TreeRule(children, root, 3, "t-tilde-union")
