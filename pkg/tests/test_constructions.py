"""Tree families: the 1-3 tree law, stretched labels, comb geometry, covers,
stretch-function arithmetic, and the explicit saturation routes."""

import json
import random
from fractions import Fraction

import pytest

from treegauge.errors import ResourceCapError, StabilizationError, UsageError
from treegauge.constructions import (
    DirectedGraph,
    Identity,
    PowerCeil,
    SaturationParams,
    Unit,
    comb_rule,
    cover_rule,
    delta_of,
    iroot,
    load_digraph,
    parse_stretch,
    ray_rule,
    stretch_rule,
    t13_rule,
    t0_rule,
    t_tilde_truncation,
    t_tilde_truncation_seeds,
    t_tilde_union_rule,
)
from treegauge.tree_core import (
    T13State,
    expand,
    label_of,
    level_counts,
    vertex_of,
)


# every depth<=6 label of the identity-stretched tree, worked out by hand
# from the rule: digit first, then n-1 forced zeros into level n
GOLDEN_T0_DEPTH6 = [
    "",
    "0", "1",
    "00", "10", "11", "12",
    "000", "100", "110", "120",
    "0000", "1000", "1100", "1101", "1102", "1200", "1201", "1202",
    "00000", "10000", "11000", "11010", "11020", "12000", "12010", "12020",
    "000000", "100000", "110000", "110100", "110200",
    "120000", "120100", "120200",
]


# === the 1-3 tree ===


def test_t13_levels_double():
    t = expand(t13_rule(), 14)
    assert level_counts(t) == [1 << n for n in range(15)]


def test_t13_degree_split():
    # left half of a level has one child each, right half three
    t = expand(t13_rule(), 10)
    for n in range(1, 10):
        lo = t.level_start[n]
        half = 1 << (n - 1)
        for i in range(1 << n):
            deg = len(t.children_of(lo + i))
            assert deg == (1 if i < half else 3)


def test_t13_delta_coordinates():
    # delta = 2^n - rank: left child keeps delta + 2^n, right children 3d - j
    rng = random.Random(0)
    rule = t13_rule()
    for _ in range(200):
        n = rng.randint(1, 40)
        r = rng.randrange(1 << n)
        s = T13State(n, r)
        d = delta_of(s)
        kids = rule.children(s)
        if d > 1 << (n - 1):
            assert [delta_of(c) for _, c in kids] == [d + (1 << n)]
        else:
            assert [delta_of(c) for _, c in kids] == [3 * d - j for j in (0, 1, 2)]


def test_t13_spine_is_rightmost():
    t = expand(t13_rule(), 12)
    v = 0
    for _ in range(12):
        v = max(t.children_of(v))
    assert label_of(t, v) == "1" + "2" * 11
    assert delta_of(T13State(12, (1 << 12) - 1)) == 1


# === stretched trees ===


def test_t0_golden_labels_depth6():
    t = expand(t0_rule(), 6)
    labels = sorted((label_of(t, v) for v in range(t.num_vertices)),
                    key=lambda w: (len(w), w))
    assert labels == GOLDEN_T0_DEPTH6


@pytest.mark.parametrize("s", ["1", "3", "1/3", "3/5"])
def test_t0_level_counts_match_closed_form(s):
    f = parse_stretch(s)
    depth = 12
    t = expand(stretch_rule(t13_rule(), f), depth)
    lc = level_counts(t)
    assert lc[0] == 1
    for d in range(1, depth + 1):
        # depth d sits inside the stretched edges into level inv_prefix(d-1)+1
        assert lc[d] == 1 << (f.inv_prefix(d - 1) + 1)


def test_t0_branch_vertices_at_triangular_depths():
    t = expand(t0_rule(), 15)
    assert vertex_of(t, "120000") is not None      # level-3 branch at depth 6
    assert vertex_of(t, "1200001") is not None     # edge digit comes first
    assert vertex_of(t, "12000011") is None        # then zeros are forced
    assert vertex_of(t, "1200001000") is not None  # level-4 branch at p(4)=10
    assert vertex_of(t, "12000010002") is not None


def test_stretch_rule_wants_t13_base():
    with pytest.raises(UsageError):
        stretch_rule(comb_rule(), Identity())


def test_unit_stretch_is_identity_on_tree():
    a = expand(t13_rule(), 8)
    b = expand(stretch_rule(t13_rule(), Unit()), 8)
    assert level_counts(a) == level_counts(b)
    assert a.digit == b.digit


# === stretch-function arithmetic ===


def test_iroot_exact():
    rng = random.Random(1)
    for _ in range(300):
        k = rng.randint(1, 9)
        t = rng.randint(0, 10 ** rng.randint(1, 30))
        y = t ** k + rng.randint(0, max(1, t))
        r = iroot(y, k)
        assert r ** k <= y < (r + 1) ** k


@pytest.mark.parametrize("s", ["1/3", "3/5", "1/2", "2", "3", "5/2"])
def test_power_ceil_value_exact(s):
    f = PowerCeil(s)
    p, q = Fraction(s).numerator, Fraction(s).denominator
    for m in range(1, 400):
        w = f.value(m)
        # w = ceil(m^{p/q}) exactly
        assert (w - 1) ** q < m ** p <= w ** q


@pytest.mark.parametrize("s", ["1/3", "3/5", "3", "2"])
def test_prefix_and_runs(s):
    f = PowerCeil(s)
    acc = 0
    for n in range(1, 300):
        acc += f.value(n)
        assert f.prefix(n) == acc
    for u in (1, 2, 7, 40, 255):
        e = f.run_end(u)
        assert f.value(e) == f.value(u)
        assert f.value(e + 1) > f.value(u)
    for d in (0, 1, 5, 17, 99, 1234):
        n = f.inv_prefix(d)
        assert f.prefix(n) <= d < f.prefix(n + 1)


def test_identity_prefix_closed_form():
    f = Identity()
    for n in (0, 1, 5, 100, 10 ** 6):
        assert f.prefix(n) == n * (n + 1) // 2
    assert f.inv_prefix(20) == 5
    assert Unit().prefix(10 ** 9) == 10 ** 9
    assert Unit().run_end(3) is None


def test_parse_stretch():
    assert parse_stretch("identity") == Identity()
    assert parse_stretch("1") == Identity()
    assert parse_stretch("unit") == Unit()
    assert parse_stretch("0.5") == PowerCeil("1/2")
    assert parse_stretch("3") == PowerCeil(3)
    with pytest.raises(UsageError):
        parse_stretch("fast")
    with pytest.raises(UsageError):
        PowerCeil(0.5)          # floats are inexact, refuse them
    with pytest.raises(UsageError):
        PowerCeil("-1/2")


# === the plane comb ===


def comb_sphere_sizes(depth: int) -> list:
    """BFS spheres of the comb subgraph of Z^2 (spine y=0, teeth vertical)."""
    from collections import deque

    def nbrs(p):
        x, y = p
        if y == 0:
            return [(x - 1, 0), (x + 1, 0), (x, 1), (x, -1)]
        step = 1 if y > 0 else -1
        return [(x, y - step), (x, y + step)]

    seen = {(0, 0)}
    frontier = deque([(0, 0)])
    sizes = [1]
    for _ in range(depth):
        nxt = deque()
        for p in frontier:
            for q in nbrs(p):
                if q not in seen:
                    seen.add(q)
                    nxt.append(q)
        sizes.append(len(nxt))
        frontier = nxt
    return sizes


def test_comb_matches_grid_bfs():
    depth = 30
    t = expand(comb_rule(), depth)
    assert level_counts(t) == comb_sphere_sizes(depth)


def test_comb_levels_are_4n():
    t = expand(comb_rule(), 25)
    assert level_counts(t) == [1] + [4 * n for n in range(1, 26)]


# === directed covers ===


def test_cover_two_vertex_growth():
    # a -> {a, b}, b -> {b}: level n has n+1 walks
    g = DirectedGraph(2, 0, ((0, 1), (1,)))
    t = expand(cover_rule(g), 20)
    assert level_counts(t) == [n + 1 for n in range(21)]


def test_cover_double_loop_growth():
    g = DirectedGraph(1, 0, ((0, 0),))
    t = expand(cover_rule(g), 12)
    assert level_counts(t) == [1 << n for n in range(13)]


def test_ray_rule():
    t = expand(ray_rule(), 50)
    assert level_counts(t) == [1] * 51
    assert ray_rule().name == "ray"


def test_cover_validation():
    with pytest.raises(UsageError):
        cover_rule(DirectedGraph(2, 0, ((1,), ())))      # sink vertex
    with pytest.raises(UsageError):
        cover_rule(DirectedGraph(2, 5, ((1,), (0,))))    # base out of range
    with pytest.raises(UsageError):
        cover_rule(DirectedGraph(2, 0, ((2,), (0,))))    # target out of range


def test_load_digraph(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"n": 2, "base": 0, "adj": [[0, 1], [1]]}))
    g = load_digraph(str(path))
    assert g == DirectedGraph(2, 0, ((0, 1), (1,)))
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2, "adj": [[0], [1]]}')
    with pytest.raises(UsageError):
        load_digraph(str(bad))
    with pytest.raises(UsageError):
        load_digraph(str(tmp_path / "absent.json"))


# === saturation: explicit routes ===


def tree_labels(t) -> set:
    return {label_of(t, v) for v in range(t.num_vertices)}


def test_seed_union_contains_t0_and_shifts():
    ts = t_tilde_truncation_seeds(Identity(), SaturationParams(6))
    labels = tree_labels(ts)
    assert set(GOLDEN_T0_DEPTH6) <= labels
    # closed under one shift (restricted to the depth window)
    for w in labels:
        if w:
            assert w[1:] in labels
    assert ts.provenance["mode"] == "seed-union"
    assert ts.provenance["sweeps"] >= 1


def test_seed_union_levels_depth6():
    ts = t_tilde_truncation_seeds(Identity(), SaturationParams(6))
    assert level_counts(ts) == [1, 3, 7, 13, 23, 33, 49]


def test_union_rule_agrees_with_seed_union():
    p = SaturationParams(6)
    a = t_tilde_truncation_seeds(Identity(), p)
    b = expand(t_tilde_union_rule(Identity(), p), 6)
    assert level_counts(a) == level_counts(b)
    assert tree_labels(a) == tree_labels(b)


def test_seed_union_stabilization_error():
    with pytest.raises(StabilizationError):
        t_tilde_truncation_seeds(Identity(), SaturationParams(8, M=1, sweep=1),
                                 max_sweeps=2)


def test_saturation_param_defaults():
    p = SaturationParams(10)
    assert p.resolved_m(Identity()) == 78 + 10
    assert p.resolved_sweep() == 10
    with pytest.raises(UsageError):
        SaturationParams(4, M=0).resolved_m(Identity())


def test_t_tilde_depth_cap():
    with pytest.raises(ResourceCapError):
        t_tilde_truncation(Identity(), SaturationParams(97))
