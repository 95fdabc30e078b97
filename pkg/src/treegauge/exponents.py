"""Edge-weight families, truncated min-cuts, level sums, growth profiles,
and a bisection estimator for critical branching exponents.

Every capacity in this module lives in the log domain.  The stretched
weight exp(-d^lam) underflows a float once d^lam passes ~745, and the
deep schedules go far beyond that, so sums are log-sum-exp throughout
and every returned "value" is ln(capacity).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .constructions import Identity, StretchFunction, Unit, parse_stretch
from .errors import ResourceCapError, UsageError, VerificationError
from .tree_core import TreeRule, Truncation, ball_counts, label_of

_FAMILIES = ("exponential", "polynomial", "stretched")


class WeightKind(NamedTuple):
    """Edge-weight family w(d) tagged by name, with its parameter lam."""

    family: str
    lam: float


def Exponential(lam: float) -> WeightKind:
    """w(d) = lam^-d.  Needs lam >= 1 so the weights are nonincreasing."""
    if not lam >= 1.0:
        raise UsageError("exponential weights need lam >= 1", lam=lam)
    return WeightKind("exponential", float(lam))


def Polynomial(lam: float) -> WeightKind:
    """w(d) = d^-lam for lam > 0."""
    if not lam > 0.0:
        raise UsageError("polynomial weights need lam > 0", lam=lam)
    return WeightKind("polynomial", float(lam))


def Stretched(lam: float) -> WeightKind:
    """w(d) = exp(-d^lam) for lam > 0."""
    if not lam > 0.0:
        raise UsageError("stretched weights need lam > 0", lam=lam)
    return WeightKind("stretched", float(lam))


def edge_weight(kind: WeightKind, d: int) -> float:
    """ln w(d) for a single edge at depth d >= 1."""
    if d < 1:
        raise UsageError("edge depths start at 1", depth=d)
    if kind.family == "exponential":
        return -d * math.log(kind.lam)
    if kind.family == "polynomial":
        return -kind.lam * math.log(d)
    if kind.family == "stretched":
        return -float(d) ** kind.lam
    raise UsageError("unknown weight family", family=kind.family)


def _lse(vals) -> float:
    vals = list(vals)
    if not vals:
        return -math.inf
    m = max(vals)
    if m == -math.inf:
        return m
    return m + math.log(sum(math.exp(v - m) for v in vals))


# ---------------------------------------------------------------------------
# min-cut over a materialized truncation


class Cutset(NamedTuple):
    """A set of (head label, depth) edges together with its ln-capacity."""

    edges: frozenset
    kind: WeightKind
    capacity: float


def mincut(t: Truncation, kind: WeightKind) -> Tuple[float, Cutset]:
    """Cheapest edge set separating the root from the depth-D boundary.

    Backward DP over the arena: the edge into v either gets cut (cost
    w(depth)) or delegates to all of v's child edges; vertices that are
    childless because the truncation stopped force the cut.  Ties prefer
    cutting the current edge, which keeps witnesses shallow and small.
    Returns the ln-value and an explicit witness cutset realizing it.
    """
    if t.depth < 1:
        raise UsageError("mincut needs a truncation of depth >= 1", depth=t.depth)
    ls, cs = t.level_start, t.child_start
    D = t.depth
    # cost[n] holds ln cost for every edge into level n; cut[n] marks where
    # the minimum chose "cut here"
    cost: List[np.ndarray] = [None] * (D + 1)  # type: ignore[list-item]
    cut: List[np.ndarray] = [None] * (D + 1)  # type: ignore[list-item]
    wD = edge_weight(kind, D)
    cost[D] = np.full(ls[D + 1] - ls[D], wD)
    cut[D] = np.ones(ls[D + 1] - ls[D], dtype=bool)
    for n in range(D - 1, 0, -1):
        w = edge_weight(kind, n)
        a, b = ls[n], ls[n + 1]
        idx = np.asarray(cs[a:b], dtype=np.int64) - ls[n + 1]
        sub = np.logaddexp.reduceat(cost[n + 1], idx)
        here = w <= sub
        cost[n] = np.where(here, w, sub)
        cut[n] = here
    value = float(np.logaddexp.reduce(cost[1]))

    edges = []
    stack = [(v, 1) for v in t.children_of(0)]
    while stack:
        v, n = stack.pop()
        if cut[n][v - ls[n]]:
            edges.append((label_of(t, v), n))
        else:
            stack.extend((c, n + 1) for c in t.children_of(v))
    capacity = _lse(edge_weight(kind, d) for _, d in edges)
    return value, Cutset(frozenset(edges), kind, capacity)


def level_sum(t: Truncation, kind: WeightKind, n: int) -> float:
    """ln of |T_n| * w(n): the capacity of the full level-n cut."""
    if not 1 <= n <= t.depth:
        raise UsageError("level sums need 1 <= n <= depth", n=n, depth=t.depth)
    count = t.level_start[n + 1] - t.level_start[n]
    return math.log(count) + edge_weight(kind, n)


def level_sum_from_count(count: int, kind: WeightKind, n: int) -> float:
    """Same as level_sum, for level counts obtained without an arena."""
    if count < 1:
        raise UsageError("level count must be positive", count=count)
    return math.log(count) + edge_weight(kind, n)


# ---------------------------------------------------------------------------
# deep min-cuts without an arena

_DEF_MAX_STATES = 250_000


def _state_mincut(children: Callable, root, kind: WeightKind, depth: int,
                  *, max_states: int) -> float:
    """Min-cut value by DP over deduplicated states, one pool per level.

    The edge-cost recursion only depends on (state, depth), so trees whose
    per-level state pools stay small (covers, the comb, saturation windows)
    admit depths far past anything an arena could hold.
    """
    levels: List[tuple] = [(root,)]
    for n in range(depth):
        pool = dict.fromkeys(c for s in levels[-1] for c in children(s))
        if len(pool) > max_states:
            raise ResourceCapError("state pool exceeded the cap",
                                   level=n + 1, states=len(pool),
                                   max_states=max_states)
        levels.append(tuple(pool))
    cost: Dict = {s: edge_weight(kind, depth) for s in levels[depth]}
    for n in range(depth - 1, 0, -1):
        w = edge_weight(kind, n)
        nxt = {}
        for s in levels[n]:
            sub = _lse(cost[c] for c in children(s))
            nxt[s] = w if w <= sub else sub
        cost = nxt
    return _lse(cost[c] for c in children(root))


def _pow3(k: int, _cache={0: 1}) -> int:
    v = _cache.get(k)
    if v is None:
        v = 3 ** k
        _cache[k] = v
    return v


def _stretch_mincut(f: StretchFunction, kind: WeightKind, depth: int,
                    *, max_states: int = 2_000_000) -> float:
    """Min-cut of the f-stretched 1-3 tree by DP on deficit classes.

    A branch vertex at level m with deficit delta turns left (and is then
    a bare ray to the boundary) iff delta > 2^(m-1); otherwise its three
    children carry deficits 3*delta - j.  Which descendants-within-horizon
    turn left is decided by comparisons delta > (2^(m+k-1) + c) / 3^k, and
    as c sweeps the digit values those floors take exactly two values per
    k, so deficits collapse into O(horizon) classes per level.  The DP
    runs bottom-up over class representatives; chains between branch
    levels are never cut above their deepest edge because weights are
    nonincreasing.
    """
    wD = edge_weight(kind, depth)
    nm = max(1, f.inv_prefix(depth))
    while f.prefix(nm) < depth:
        nm += 1
    while nm > 1 and f.prefix(nm - 1) >= depth:
        nm -= 1
    # every level stores at least a few classes, so bail before touching
    # any of the wide integers the thresholds need
    if 3 * (nm - 1) > max_states:
        raise ResourceCapError("deficit-class table would exceed the cap",
                               branch_levels=nm, max_states=max_states)
    est = sum(2 * min(nm - m, 2 * m + 2) + 3 for m in range(1, nm))
    if est > max_states:
        raise ResourceCapError("deficit-class table would exceed the cap",
                               branch_levels=nm, states=est,
                               max_states=max_states)
    # table[m] = (class bottoms, ln costs); levels >= nm cost wD outright
    table: Optional[Tuple[list, list]] = None

    def look(tab: Optional[Tuple[list, list]], delta: int) -> float:
        if tab is None:
            return wD
        bots, vals = tab
        return vals[bisect_right(bots, delta) - 1]

    for m in range(nm - 1, 0, -1):
        half = 1 << (m - 1)
        ths = {half + 1}
        for k in range(1, nm - m):
            q = (1 << (m + k - 1)) // _pow3(k)
            ths.add(q + 1)
            ths.add(q + 2)
            if q == 0:  # stays zero for every larger k
                break
        bots = [1] + sorted(ths)
        wcut = edge_weight(kind, f.prefix(m))
        vals = []
        for b in bots:
            if b > half:
                vals.append(wD)
            else:
                sub = _lse(look(table, 3 * b - j) for j in (0, 1, 2))
                vals.append(min(wcut, sub))
        table = (bots, vals)
    # root children: the left arm enters level 1 with deficit 2, the spine
    # with deficit 1
    return _lse((look(table, 2), look(table, 1)))


def mincut_deep(rule: TreeRule, kind: WeightKind, depth: int,
                *, max_states: int = _DEF_MAX_STATES) -> float:
    """Min-cut value at depths where materializing the tree is hopeless.

    Dispatches on the rule's name: rays are closed-form, the 1-3 tree and
    its stretches use the deficit-class DP, everything else runs the
    generic per-level state DP (and trips the state cap if the rule's
    pools genuinely grow).
    """
    if depth < 1:
        raise UsageError("mincut_deep needs depth >= 1", depth=depth)
    name = rule.name or ""
    if name == "ray":
        return edge_weight(kind, depth)
    if name == "t13":
        return _stretch_mincut(Unit(), kind, depth)
    if name == "t0":
        return _stretch_mincut(Identity(), kind, depth)
    if name.startswith("t0[") and name.endswith("]"):
        return _stretch_mincut(parse_stretch(name[3:-1]), kind, depth)
    kids = rule.children
    return _state_mincut(lambda s: [c for _, c in kids(s)], rule.root,
                         kind, depth, max_states=max_states)


# ---------------------------------------------------------------------------
# bisection estimator

_DEF_SCHEDULE = {
    "exponential": (8, 16, 32, 64),
    "polynomial": (250, 500, 1000, 2000),
    "stretched": (250, 500, 1000, 2000),
}


class EstimateReport(NamedTuple):
    lambda_star: float
    bracket: Tuple[float, float]
    schedule: Tuple[int, ...]
    diagnostics: Tuple[dict, ...]  # one entry per probed lam, sorted
    provenance: dict

    def to_json_dict(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "bracket": list(self.bracket),
            "schedule": list(self.schedule),
            "diagnostics": [dict(d, values=[list(p) for p in d["values"]])
                            for d in self.diagnostics],
            "provenance": dict(self.provenance),
        }


def estimate_branching(rule: TreeRule, family: str,
                       schedule: Optional[Sequence[int]] = None, *,
                       theta: float = 1e-3, rho: float = 0.7,
                       tol: float = 0.05,
                       max_states: int = _DEF_MAX_STATES) -> EstimateReport:
    """Bisect for the largest lam whose min-cut trace does not decay.

    DECAYING(lam) holds when the final-depth value drops under theta or
    the final/mid trace ratio drops under rho.  Both thresholds are
    heuristics standing in for an infinite-depth infimum, so the report
    keeps every raw trace for callers that want to judge differently.
    """
    if family not in _FAMILIES:
        raise UsageError("unknown weight family", family=family)
    if not 0.0 < theta < 1.0 or not 0.0 < rho < 1.0:
        raise UsageError("theta and rho must sit in (0, 1)", theta=theta, rho=rho)
    sched = tuple(schedule) if schedule is not None else _DEF_SCHEDULE[family]
    if not sched or any(d < 1 for d in sched) or \
            any(a >= b for a, b in zip(sched, sched[1:])):
        raise UsageError("schedule must be increasing positive depths",
                         schedule=list(sched))
    mk = {"exponential": Exponential, "polynomial": Polynomial,
          "stretched": Stretched}[family]
    probes: List[Tuple[float, bool]] = []
    diag: List[dict] = []

    def decaying(lam: float) -> bool:
        kind = mk(lam)
        vals = [mincut_deep(rule, kind, d, max_states=max_states) for d in sched]
        mid = vals[len(vals) // 2]
        dec = vals[-1] <= math.log(theta) or vals[-1] - mid <= math.log(rho)
        probes.append((lam, dec))
        diag.append({"lam": lam, "values": list(zip(sched, vals)),
                     "final_ratio": math.exp(min(vals[-1] - mid, 700.0)),
                     "decaying": dec})
        return dec

    if family == "exponential":
        lo, hi = 1.0, rule.alphabet_size + 1.0
    elif family == "polynomial":
        lo, hi = 0.01, 8.0
    else:
        lo, hi = 0.01, 1.5

    if not decaying(hi):
        star, bracket = hi, (hi, hi)
    elif decaying(lo):
        # even the lowest probe decays; the sup sits at (or below) the
        # family's floor
        star = lo if family == "exponential" else 0.0
        bracket = (star, lo)
    else:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if decaying(mid):
                hi = mid
            else:
                lo = mid
        star, bracket = lo, (lo, hi)

    probes.sort()
    worst_good = max((l for l, d in probes if not d), default=None)
    best_bad = min((l for l, d in probes if d), default=None)
    if worst_good is not None and best_bad is not None and best_bad < worst_good:
        raise VerificationError("decay verdicts are not monotone in lam",
                                rule=rule.name, family=family,
                                probes=[[l, d] for l, d in probes])
    diag.sort(key=lambda d: d["lam"])
    return EstimateReport(star, bracket, sched, tuple(diag),
                          {"rule": rule.name, "family": family})


# ---------------------------------------------------------------------------
# growth profiles


class GrowthProfile(NamedTuple):
    points: Tuple[Tuple[int, float], ...]  # (n, lnln|B(n)| / ln n)
    slope: float
    window: Tuple[int, int]


def growth_profile_from_counts(counts: Sequence[int],
                               window: Optional[Tuple[int, int]] = None
                               ) -> GrowthProfile:
    """Intermediate-growth diagnostics from per-level vertex counts.

    counts[n] is |T_n|; balls are their running sums.  Reports the ratio
    lnln|B(n)| / ln n pointwise and a least-squares slope of lnln|B(n)|
    against ln n over the window (default [D/3, D]).
    """
    D = len(counts) - 1
    if D < 8:
        raise UsageError("growth profiles need depth >= 8", depth=D)
    balls = []
    acc = 0
    for c in counts:
        acc += c
        balls.append(acc)
    lo, hi = window if window is not None else (max(2, D // 3), D)
    if lo < 2 or hi > D or lo > hi:
        raise UsageError("window must sit inside [2, depth]",
                         window=[lo, hi], depth=D)
    xs, ys, pts = [], [], []
    for n in range(lo, hi + 1):
        if balls[n] < 3:
            raise UsageError("|B(n)| < 3 on the window; lnln is meaningless",
                             n=n, ball=balls[n])
        x, y = math.log(n), math.log(math.log(balls[n]))
        xs.append(x)
        ys.append(y)
        pts.append((n, y / x))
    slope = float(np.polyfit(xs, ys, 1)[0]) if len(xs) > 1 else math.nan
    return GrowthProfile(tuple(pts), slope, (lo, hi))


def growth_profile(t: Truncation,
                   window: Optional[Tuple[int, int]] = None) -> GrowthProfile:
    """growth_profile_from_counts on a materialized truncation."""
    balls = ball_counts(t)
    counts = [balls[0]] + [balls[n] - balls[n - 1] for n in range(1, len(balls))]
    return growth_profile_from_counts(counts, window)
