"""Window automaton for the shift-saturated stretched tree.

A depth-D truncation of the saturated tree is exactly the set of length-<=D
words readable downward from *some* vertex of the stretched tree.  Reading a
window left to right, this module tracks the set of surviving alignments in a
compressed state, so the saturated tree expands like any other rule tree.

State anatomy (per remaining-window length):

* virgin: only zeros seen so far; every alignment is still open.
* item (l, gap, d): alignments that will arrive at a branch vertex of level l
  after `gap` more forced zeros, whose surviving arrival deficits have
  minimum d.  Readability of a digit word is monotone in the deficit (the
  slot step d' = 3d - x preserves order against the doubling half threshold),
  so the minimal member realizes the item's whole language and items merge
  across histories that share it.  Items are kept right-half only.
  Moreover a word is readable iff d <= a min of per-slot thresholds
  floor((2^(l+m-1) + c)/3^m), and over a full digit-value cycle each slot
  contributes only two threshold values, so d is stored as the least value
  in its threshold-interval class: deficits collapse to O(slots) classes.
* full marker: an item whose minimal member realizes every digit word on its
  remaining slot offsets is equivalent to that offset tuple; markers merge
  across alignments and absorb smaller ones.
* ray: some alignment survives exactly on the all-zero continuation.

Members pushed into the left half continue as all-zero rays; any surviving
item or marker accepts the all-zero word, so the ray only needs recording
when an item dies outright.  All reductions preserve the union language, so
level counts, labels, and subtree structure are exact.
"""

from __future__ import annotations

from bisect import bisect_left
from typing import Dict, List, Optional, Tuple

from .constructions import StretchFunction

KIND_VIRGIN = "v"
KIND_NODE = "n"
KIND_RAY = "r"

_POW3: List[int] = [1]


def _pow3(n: int) -> int:
    while len(_POW3) <= n:
        _POW3.append(_POW3[-1] * 3)
    return _POW3[n]


def _is_full(l: int, d: int, k: int) -> bool:
    """Does the deficit-minimal member survive k slots of arbitrary digits?

    Worst case is the all-zero digit word (deficit triples per slot while the
    half threshold only doubles), binding at the last slot in the horizon.
    """
    return d * _pow3(k - 1) <= 1 << (l + k - 2)


class WindowEngine:
    """Alignment automaton for one stretch function and one window depth."""

    def __init__(self, f: StretchFunction, depth: int) -> None:
        if depth < 0:
            raise ValueError("depth must be >= 0")
        self.f = f
        self.depth = depth
        self.root = (KIND_VIRGIN, 0)
        self._fval: List[int] = [0]  # f(m) cache, index by m >= 1
        self._vcache: Dict[Tuple[int, int], Optional[tuple]] = {}
        self._ncache: Dict[Tuple[tuple, int], Optional[tuple]] = {}
        self._offcache: Dict[Tuple[int, int, int], Tuple[int, ...]] = {}
        self._candcache: Dict[Tuple[int, int], Tuple[int, ...]] = {}
        self._fullcache: Dict[Tuple[int, int], int] = {}

    # -- small caches -------------------------------------------------------

    def _val(self, m: int) -> int:
        fv = self._fval
        while len(fv) <= m:
            fv.append(self.f.value(len(fv)))
        return fv[m]

    def _offsets(self, l: int, gap: int, rem: int) -> Tuple[int, ...]:
        """Future slot offsets (0-based in the remaining stream), < rem."""
        key = (l, gap, rem)
        hit = self._offcache.get(key)
        if hit is not None:
            return hit
        offs = []
        o, lev = gap, l
        while o < rem:
            offs.append(o)
            lev += 1
            o += self._val(lev)
        out = tuple(offs)
        self._offcache[key] = out
        return out

    def _canonical_deficit(self, l: int, k: int, d: int) -> int:
        """Least deficit with the same readable-word set as d.

        A word whose last nonzero sits at slot j is readable iff
        d <= floor((2^(l+m-1) + c_m)/3^m) for every m < j, where c_m is the
        base-3 value of the digits read so far.  Each slot's floor takes
        exactly two values over a digit cycle, so those 2(k-1) thresholds cut
        the deficit range into language classes; d maps to its class bottom.
        """
        key = (l, k)
        cands = self._candcache.get(key)
        if cands is None:
            cs = set()
            for m in range(1, k):
                q = (1 << (l + m - 1)) // _pow3(m)
                cs.add(q)
                cs.add(q + 1)
            cands = tuple(sorted(cs))
            self._candcache[key] = cands
        lo = bisect_left(cands, d)
        # non-full items exceed the smallest threshold, so lo >= 1
        return cands[lo - 1] + 1

    # -- canonicalization ---------------------------------------------------

    def _normalize(self, rem: int, ray: bool, markers, items) -> Optional[tuple]:
        if rem <= 0:
            return (KIND_RAY, 0) if (ray or markers or items) else None

        marker_set = set()
        for m in markers:
            mm = tuple(o for o in m if o < rem)
            if mm:
                marker_set.add(mm)
            else:
                ray = True

        exact: Dict[tuple, Tuple[int, ...]] = {}
        for (l, gap, d) in items:
            offs = self._offsets(l, gap, rem)
            if not offs:
                ray = True  # alive but slotless: all-zero future only
                continue
            if _is_full(l, d, len(offs)):
                marker_set.add(offs)
                continue
            exact[(l, gap, self._canonical_deficit(l, len(offs), d))] = offs

        # keep subset-maximal markers only
        kept: List[tuple] = []
        kept_sets: List[set] = []
        for m in sorted(marker_set, key=lambda m: (-len(m), m)):
            ms = set(m)
            if not any(ms <= ks for ks in kept_sets):
                kept.append(m)
                kept_sets.append(ms)

        out_items = [it for it, offs in exact.items()
                     if not any(set(offs) <= ks for ks in kept_sets)]

        if kept or out_items:
            return (KIND_NODE, rem, tuple(sorted(kept)), tuple(sorted(out_items)))
        if ray:
            return (KIND_RAY, rem)
        return None

    # -- transitions --------------------------------------------------------

    def _node_step(self, state: tuple, x: int) -> Optional[tuple]:
        _, rem, markers, items = state
        ray = False
        new_markers = []
        for m in markers:
            if m[0] == 0:
                new_markers.append(tuple(o - 1 for o in m[1:]))
            elif x == 0:
                new_markers.append(tuple(o - 1 for o in m))
        new_items = []
        for (l, gap, d) in items:
            if gap > 0:
                if x == 0:
                    new_items.append((l, gap - 1, d))
                continue
            # at a branch vertex: any digit is an edge choice
            d2 = 3 * d - x
            if d2 <= 1 << l:
                new_items.append((l + 1, self._val(l + 1) - 1, d2))
            else:
                ray = True  # the minimal member itself turned left
        return self._normalize(rem - 1, ray, new_markers, new_items)

    def _full_horizon(self, zeros: int, rem_after: int) -> int:
        """Smallest u past which every alignment is provably safe to skip.

        An alignment deeper than the returned u survives the zeros walk and
        arrives saturated (deficit beneath every class floor for the whole
        window), so only its slot-offset pattern matters.  Condition: the
        slot steps it can take inside the window, bounded by crossings,
        satisfy 3^crossings < 2^(u-2); monotone in u because deeper
        alignments cross no more slots over the same window.
        """
        key = (zeros, rem_after)
        got = self._fullcache.get(key)
        if got is not None:
            return got
        prefix = self.f.prefix
        u = 2
        while True:
            d0 = prefix(u - 1) - zeros
            if d0 > 0 and prefix(u) > zeros:
                n = self.f.inv_prefix(d0)
                if prefix(n) < d0:
                    n += 1
                crossings = (u - 1 - n) + rem_after // self._val(u) + 1
                if _pow3(crossings).bit_length() <= u - 2:
                    self._fullcache[key] = u
                    return u
            u += 1

    def _virgin_nonzero(self, zeros: int, x: int) -> Optional[tuple]:
        """First nonzero after `zeros` zeros: enumerate every alignment."""
        rem_after = self.depth - zeros - 1
        ray = False
        items: List[tuple] = []
        markers: List[tuple] = []
        prefix = self.f.prefix

        if zeros == 0 and x == 1:
            # alignment starting at the tree root itself
            items.append((1, self._val(1) - 1, 1))

        u_full = self._full_horizon(zeros, rem_after)
        for u in range(2, u_full + 1):
            d0 = prefix(u - 1) - zeros
            if d0 <= 0:
                # d0 == 0 starts at the root: its zero prefix walks into the
                # left half and can never produce the nonzero
                continue
            n = self.f.inv_prefix(d0)
            if prefix(n) < d0:
                n += 1
            l, gap, d = n, prefix(n) - d0, 1
            dead = False
            left = zeros
            while left > 0:
                if gap > 0:
                    step = gap if gap < left else left
                    gap -= step
                    left -= step
                    continue
                d *= 3  # zero edge digit
                if d > 1 << l:
                    dead = True  # pre-nonzero deaths leave no ray behind
                    break
                l += 1
                gap = self._val(l) - 1
                left -= 1
            if dead:
                continue
            assert gap == 0 and l == u - 1
            d2 = 3 * d - x
            if d2 <= 1 << l:
                items.append((u, self._val(u) - 1, d2))
            else:
                ray = True

        # alignments deeper than u_full are full at creation, so only
        # their slot-offset patterns matter; walk the runs of f
        u = u_full + 1
        while rem_after > 0:
            w = self._val(u)
            if w - 1 >= rem_after:
                ray = True  # no slot fits the horizon: pure ray, forever on
                break
            k = rem_after // w
            end = self.f.run_end(u)
            if end is None:
                markers.append(tuple(w - 1 + i * w for i in range(k)))
                break
            if u <= end - k:
                markers.append(tuple(w - 1 + i * w for i in range(k)))
            for uu in range(max(u, end - k + 1), end + 1):
                markers.append(self._offsets(uu, w - 1, rem_after))
            u = end + 1
        if rem_after == 0:
            ray = True  # deep alignments always realize the bare nonzero

        return self._normalize(rem_after, ray, markers, items)

    # -- rule interface -----------------------------------------------------

    def children(self, state: tuple, use_cache: bool = True):
        kind = state[0]
        if kind == KIND_VIRGIN:
            zeros = state[1]
            kids = [(0, (KIND_VIRGIN, zeros + 1))]
            for x in (1, 2):
                key = (zeros, x)
                if key not in self._vcache:
                    self._vcache[key] = self._virgin_nonzero(zeros, x)
                nxt = self._vcache[key]
                if nxt is not None:
                    kids.append((x, nxt))
            return tuple(kids)
        if kind == KIND_RAY:
            return ((0, (KIND_RAY, state[1] - 1)),)
        if not use_cache:
            # level-synchronous sweeps visit each state once; caching the
            # step would only grow memory
            out = []
            for x in (0, 1, 2):
                nxt = self._node_step(state, x)
                if nxt is not None:
                    out.append((x, nxt))
            return tuple(out)
        kids = []
        for x in (0, 1, 2):
            key = (state, x)
            if key not in self._ncache:
                self._ncache[key] = self._node_step(state, x)
            nxt = self._ncache[key]
            if nxt is not None:
                kids.append((x, nxt))
        return tuple(kids)


def saturation_level_counts(f: StretchFunction, depth: int) -> List[int]:
    """|T~_n| for n = 0..depth by dynamic programming over engine states.

    Far cheaper than materializing the truncation when levels are large;
    exact because every state reduction preserves the union language.
    """
    eng = WindowEngine(f, depth)
    cur: Dict[tuple, int] = {eng.root: 1}
    counts = [1]
    for _ in range(depth):
        nxt: Dict[tuple, int] = {}
        for s, mult in cur.items():
            for _d, child in eng.children(s, use_cache=False):
                nxt[child] = nxt.get(child, 0) + mult
        counts.append(sum(nxt.values()))
        cur = nxt
    return counts


def saturation_state_levels(f: StretchFunction, depth: int):
    """Yield (engine, [state -> multiplicity] per level); shared by the
    deeper analyses that need states rather than raw counts."""
    eng = WindowEngine(f, depth)
    levels = [{eng.root: 1}]
    for _ in range(depth):
        nxt: Dict[tuple, int] = {}
        for s, mult in levels[-1].items():
            for _d, child in eng.children(s, use_cache=False):
                nxt[child] = nxt.get(child, 0) + mult
        levels.append(nxt)
    return eng, levels
