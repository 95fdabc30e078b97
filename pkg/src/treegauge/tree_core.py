"""Rule-defined infinite trees and their finite truncations.

A tree is presented by a TreeRule: a pure successor function from a node
state to its ordered (digit, state) children.  expand() materializes the
first D levels into a flat arena (parent/digit arrays plus level and
child-span indices) from which labels, level counts and exports are
derived views.
"""

from __future__ import annotations

import json
import os
from array import array
from typing import Any, Callable, NamedTuple, Optional, Union

from .errors import ResourceCapError, UsageError, VerificationError

Digit = int          # value in [0, b)
Label = str          # digit characters; "" names the root


class T13State(NamedTuple):
    """Vertex of the 1-3 tree: level n and sibling rank r, 0 <= r < 2**n."""

    level: int
    rank: int


class StretchState(NamedTuple):
    """Interior of a subdivided edge: zeros still owed before reaching target."""

    zeros_left: int
    target: T13State


class CombState(NamedTuple):
    """Vertex class of the Z^2 comb quotient."""

    kind: str  # "origin" | "arm" | "tooth"


class CoverState(NamedTuple):
    """Vertex id inside a finite digraph whose directed cover we grow."""

    vertex: int


class UnionState(NamedTuple):
    """Canonically ordered union of member states (shift saturation)."""

    members: tuple


NodeState = Union[T13State, StretchState, CombState, CoverState, UnionState, tuple]


class TreeRule(NamedTuple):
    """Finite presentation of an infinite leafless tree.

    children must be deterministic, return a nonempty list of
    (digit, state) pairs with strictly increasing digits, and be total on
    every state reachable from root.  name tags the construction so
    downstream dispatch (deep DP engines, CLI provenance) can recognize it.
    """

    children: Callable[[NodeState], tuple]
    root: NodeState
    alphabet_size: int
    name: str = ""


DEFAULT_MAX_VERTICES = 200_000_000


def _vertex_cap(explicit: Optional[int]) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get("TREEGAUGE_MAX_VERTICES")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError("TREEGAUGE_MAX_VERTICES is not an integer", value=env)
    return DEFAULT_MAX_VERTICES


class Truncation:
    """Depth-D truncation of a rule tree, stored as a flat BFS arena.

    Vertex 0 is the root.  Vertices are numbered in BFS order with
    siblings in increasing digit order, so each level and each vertex's
    children occupy contiguous index ranges.
    """

    __slots__ = ("depth", "parent", "digit", "level_start", "child_start", "provenance")

    def __init__(self, depth, parent, digit, level_start, child_start, provenance):
        self.depth = depth
        self.parent = parent            # array('q'); parent[0] == -1
        self.digit = digit              # array('b'); digit[0] == -1
        self.level_start = level_start  # level n spans [level_start[n], level_start[n+1])
        self.child_start = child_start  # children of v span [child_start[v], child_start[v+1])
        self.provenance = provenance

    @property
    def num_vertices(self) -> int:
        return len(self.parent)

    def children_of(self, v: int) -> range:
        return range(self.child_start[v], self.child_start[v + 1])

    def __repr__(self) -> str:
        return "Truncation(depth=%d, vertices=%d, provenance=%r)" % (
            self.depth, self.num_vertices, self.provenance)


def expand(rule: TreeRule, depth: int, *,
           max_vertices: Optional[int] = None,
           provenance: Optional[dict] = None) -> Truncation:
    """Materialize levels 0..depth of the rule tree in canonical BFS order."""
    if depth < 0:
        raise UsageError("depth must be >= 0", depth=depth)
    cap = _vertex_cap(max_vertices)
    if cap < 1:
        raise ResourceCapError("vertex cap exhausted before the root",
                               level_reached=0, cap=cap)

    children = rule.children
    parent = array("q", [-1])
    digit = array("b", [-1])
    degs = array("i")
    level_start = [0]
    cur = [rule.root]

    for n in range(depth):
        level_start.append(len(parent))
        nxt: list = []
        push_state = nxt.append
        push_parent = parent.append
        push_digit = digit.append
        v = level_start[n]
        for state in cur:
            kids = children(state)
            if not kids:
                raise VerificationError("rule emitted no children (trees are leafless)",
                                        level=n, state=repr(state))
            degs.append(len(kids))
            prev = -1
            for d, s in kids:
                if d <= prev:
                    raise VerificationError("child digits must be strictly increasing",
                                            level=n, state=repr(state))
                prev = d
                push_parent(v)
                push_digit(d)
                push_state(s)
            v += 1
            if len(parent) > cap:
                raise ResourceCapError(
                    "vertex cap exceeded while expanding level %d" % (n + 1),
                    level_reached=n + 1, cap=cap, vertices=len(parent))
        cur = nxt
    level_start.append(len(parent))

    total = len(parent)
    child_start = array("q", [1])
    acc = 1
    for dg in degs:
        acc += dg
        child_start.append(acc)
    while len(child_start) < total + 1:
        child_start.append(acc)

    return Truncation(depth, parent, digit, level_start, child_start,
                      dict(provenance or {}))


def level_counts(t: Truncation) -> list:
    """|T_n| for n = 0..depth (vertex counts per level)."""
    ls = t.level_start
    return [ls[n + 1] - ls[n] for n in range(t.depth + 1)]


def ball_counts(t: Truncation) -> list:
    """|B(n)| for n = 0..depth (vertices within distance n of the root)."""
    out = []
    acc = 0
    for c in level_counts(t):
        acc += c
        out.append(acc)
    return out


def depth_of(t: Truncation, v: int) -> int:
    """Depth of vertex v, found by binary search on the level spans."""
    ls = t.level_start
    lo, hi = 0, t.depth
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if ls[mid] <= v:
            lo = mid
        else:
            hi = mid - 1
    return lo

def label_of(t: Truncation, v: int) -> Label:
    if not 0 <= v < t.num_vertices:
        raise UsageError("vertex index out of range", vertex=v,
                         num_vertices=t.num_vertices)
    rev = []
    parent, digit = t.parent, t.digit
    while v > 0:
        rev.append(digit[v])
        v = parent[v]
    return "".join("%d" % d for d in reversed(rev))


def vertex_of(t: Truncation, label: Label) -> Optional[int]:
    """Index of the vertex named by label, or None if the tree lacks it."""
    if len(label) > t.depth:
        return None
    v = 0
    cs, digit = t.child_start, t.digit
    for ch in label:
        if not ch.isdigit():
            raise UsageError("label must consist of digit characters", label=label)
        d = int(ch)
        nxt = -1
        for c in range(cs[v], cs[v + 1]):
            if digit[c] == d:
                nxt = c
                break
        if nxt < 0:
            return None
        v = nxt
    return v


def _export_dot(t: Truncation) -> str:
    lines = ["digraph truncation {"]
    labels = [""] * t.num_vertices
    lines.append('  "%s";' % labels[0])
    for v in range(1, t.num_vertices):
        lab = labels[t.parent[v]] + "%d" % t.digit[v]
        labels[v] = lab
        lines.append('  "%s";' % lab)
    for v in range(1, t.num_vertices):
        lines.append('  "%s" -> "%s";' % (labels[t.parent[v]], labels[v]))
    lines.append("}")
    return "\n".join(lines) + "\n"


def _export_jsonl(t: Truncation) -> str:
    labels = [""] * t.num_vertices
    rows = []
    ls = t.level_start
    n = 0
    for v in range(t.num_vertices):
        if v > 0:
            labels[v] = labels[t.parent[v]] + "%d" % t.digit[v]
        while ls[n + 1] <= v:
            n += 1
        rows.append(json.dumps({"depth": n, "label": labels[v]}, sort_keys=True))
    return "\n".join(rows) + "\n"


def _export_csv_levels(t: Truncation) -> str:
    rows = ["n,level_count,ball_count"]
    acc = 0
    for n, c in enumerate(level_counts(t)):
        acc += c
        rows.append("%d,%d,%d" % (n, c, acc))
    return "\n".join(rows) + "\n"


_EXPORTERS = {
    "dot": _export_dot,
    "jsonl": _export_jsonl,
    "csv-levels": _export_csv_levels,
}


def export(t: Truncation, format: str) -> bytes:
    """Serialize a truncation; formats: dot, jsonl, csv-levels.  UTF-8, LF."""
    try:
        fn = _EXPORTERS[format]
    except KeyError:
        raise UsageError("unknown export format", format=format,
                         supported=sorted(_EXPORTERS))
    return fn(t).encode("utf-8")
