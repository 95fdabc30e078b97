"""Arena mechanics: BFS layout invariants, label round-trips, caps, exports."""

import json
import random

import pytest

from treegauge.errors import ResourceCapError, UsageError, VerificationError
from treegauge.tree_core import (
    T13State,
    TreeRule,
    ball_counts,
    depth_of,
    expand,
    export,
    label_of,
    level_counts,
    vertex_of,
)
from treegauge.constructions import t13_rule


# === helpers ===


def random_rule(seed: int, width: int = 4) -> TreeRule:
    """Deterministic pseudo-random leafless rule on integer states."""
    rng = random.Random(seed)
    table = {}

    def children(s: int) -> tuple:
        if s not in table:
            k = rng.randint(1, width)
            digits = sorted(rng.sample(range(width), k))
            table[s] = tuple((d, rng.randrange(10 ** 6)) for d in digits)
        return table[s]

    return TreeRule(children, 0, width, "random-%d" % seed)


# === layout invariants ===


@pytest.mark.parametrize("seed", range(8))
def test_bfs_layout_invariants(seed):
    t = expand(random_rule(seed), 7)
    n = t.num_vertices
    assert t.parent[0] == -1 and t.digit[0] == -1
    assert t.level_start[0] == 0 and t.level_start[-1] == n
    assert len(t.child_start) == n + 1

    for v in range(1, n):
        p = t.parent[v]
        assert 0 <= p < v
        assert v in t.children_of(p)
        assert depth_of(t, v) == depth_of(t, p) + 1

    # children contiguous, digits strictly increasing within a parent
    for v in range(n):
        kids = list(t.children_of(v))
        digs = [t.digit[c] for c in kids]
        assert digs == sorted(set(digs))
        if depth_of(t, v) < t.depth:
            assert kids, "interior vertex with no children"
        else:
            assert not kids


@pytest.mark.parametrize("seed", range(4))
def test_label_roundtrip(seed):
    t = expand(random_rule(seed), 6)
    for v in range(t.num_vertices):
        lab = label_of(t, v)
        assert len(lab) == depth_of(t, v)
        assert vertex_of(t, lab) == v


def test_vertex_of_missing_and_bad():
    t = expand(t13_rule(), 4)
    assert vertex_of(t, "2") is None  # root has digits 0,1 only
    assert vertex_of(t, "00") is not None
    with pytest.raises(UsageError):
        vertex_of(t, "0x")


def test_ball_counts_are_cumulative():
    t = expand(random_rule(3), 6)
    lc = level_counts(t)
    bc = ball_counts(t)
    acc = 0
    for n, c in enumerate(lc):
        acc += c
        assert bc[n] == acc


def test_expand_is_deterministic():
    a = expand(random_rule(11), 6)
    b = expand(random_rule(11), 6)
    assert a.parent == b.parent
    assert a.digit == b.digit
    assert a.level_start == b.level_start


# === rule validation ===


def test_leafless_is_enforced():
    dead_end = TreeRule(lambda s: () if s else ((0, 1),), 0, 2, "leafy")
    with pytest.raises(VerificationError):
        expand(dead_end, 3)


def test_digit_order_is_enforced():
    bad = TreeRule(lambda s: ((1, 0), (0, 0)), 0, 2, "unsorted")
    with pytest.raises(VerificationError):
        expand(bad, 2)


def test_negative_depth_rejected():
    with pytest.raises(UsageError):
        expand(t13_rule(), -1)


def test_vertex_cap():
    with pytest.raises(ResourceCapError) as ei:
        expand(t13_rule(), 30, max_vertices=1000)
    assert "level_reached" in ei.value.payload


# === exports ===


def test_csv_export_t13():
    t = expand(t13_rule(), 4)
    text = export(t, "csv-levels").decode()
    lines = text.strip().split("\n")
    assert lines[0] == "n,level_count,ball_count"
    assert lines[1] == "0,1,1"
    assert lines[-1] == "4,16,31"


def test_jsonl_export_is_labeled_bfs():
    t = expand(t13_rule(), 3)
    rows = [json.loads(line) for line in export(t, "jsonl").decode().splitlines()]
    assert rows[0] == {"depth": 0, "label": ""}
    assert [r["label"] for r in rows if r["depth"] == 1] == ["0", "1"]
    assert len(rows) == t.num_vertices


def test_dot_export_mentions_edges():
    t = expand(t13_rule(), 2)
    text = export(t, "dot").decode()
    assert text.startswith("digraph")
    assert '"1" -> "12";' in text


def test_export_bytes_stable():
    t = expand(t13_rule(), 5)
    for fmt in ("csv-levels", "jsonl", "dot"):
        assert export(t, fmt) == export(t, fmt)


def test_export_unknown_format():
    t = expand(t13_rule(), 1)
    with pytest.raises(UsageError):
        export(t, "parquet")
