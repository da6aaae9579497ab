import random
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from cliquecolor import Config, DerandMode, RoundLedger, build_instance, color, trim_palettes, verify_coloring
from cliquecolor.bucket import (
    BucketAddress,
    BucketAssignment,
    assign,
    bad_oracle,
    bad_reasons,
    bucket_width,
    descend_iteration,
    finalize,
    level_of,
    plus_sets,
    rank_key,
    reduced_instances,
    run,
)
from cliquecolor.derand import all_totals
from cliquecolor.errors import NoFeasibleChild, ResidualConflict
from cliquecolor.runhash import make_run_hash

from conftest import instances
from oracles import fraction_mean, recount_bucket, ref_bucket_width, ref_level


def regular(n, d, seed, palette=16):
    g = nx.random_regular_graph(d, n, seed=seed)
    return build_instance(g.edges(), [range(palette)] * n)


class TestFormulas:
    @pytest.mark.parametrize("i,b", [(0, 0), (4, 1), (8, 1), (24, 6), (34, 17)])
    def test_width(self, i, b):
        assert bucket_width(i) == b == ref_bucket_width(i)

    @pytest.mark.parametrize("d,level", [(0, 0), (1, 0), (2, 0), (3, 4), (16, 14)])
    def test_level(self, d, level):
        assert level_of(d) == level == ref_level(d)

    @given(st.integers(0, 5000))
    def test_level_reference(self, d):
        assert level_of(d) == ref_level(d)

    def test_widths_monotone(self):
        w = [bucket_width(i) for i in range(80)]
        assert all(a <= b for a, b in zip(w, w[1:]))
        # steps stay single bits until 0.07 * 1.1^i exceeds one
        assert all(b - a <= 1 for a, b in zip(w[:28], w[1:29]))


class TestAddress:
    def test_width_enforced(self):
        with pytest.raises(ValueError):
            BucketAddress(4, "")

    def test_same_bits_different_levels_distinct(self):
        assert BucketAddress(0, "") != BucketAddress(1, "")

    def test_children(self):
        assert BucketAddress(3, "").children() == [BucketAddress(4, "0"), BucketAddress(4, "1")]
        assert BucketAddress(4, "1").children() == [BucketAddress(5, "1")]

    @given(st.integers(0, 40), st.text("01", min_size=40, max_size=40))
    def test_prefix_transitive(self, level, color_string):
        addr = BucketAddress(level, color_string[: bucket_width(level)])
        assert addr.contains_color(color_string)
        for child in addr.children():
            if child.contains_color(color_string):
                assert addr.is_ancestor_of(child) and addr.contains_color(color_string)


class TestAssign:
    def test_low_degrees_share_root(self):
        inst = build_instance([(0, 1), (1, 2), (3, 4)], [[0, 1], [0, 1, 2], [0, 1], [3, 4], [3, 4]])
        asg = assign(inst, make_run_hash(5, 4, 2, 8), 999)
        assert set(asg.node_bucket.values()) == {BucketAddress(0, "")}

    def test_color_length_delta16(self):
        g = nx.random_regular_graph(16, 40, seed=1)
        inst = build_instance(g.edges(), [range(17)] * 40)
        asg = assign(inst, make_run_hash(40, 16, 2, 17), 12345)
        assert asg.lmax == 14 and asg.color_length == 17
        assert all(len(s) == 17 for s in asg.color_string.values())

    def test_strings_are_hash_prefixes(self):
        inst = regular(12, 3, 0)
        rh = make_run_hash(12, 15, 2, 8)
        asg = assign(inst, rh, 777)
        for v, a in asg.node_bucket.items():
            assert a.level == level_of(3) and asg.node_full_hash[v].startswith(a.bits)
            assert a.bits == rh.family.eval_bits(777, v, bucket_width(a.level))


def manual(inst, buckets, strings, lmax=0):
    return BucketAssignment({v: BucketAddress(*buckets[v]) for v in buckets}, strings, lmax)


class TestBad:
    def test_root_never_crowded(self):
        inst = regular(10, 3, 2)
        asg = manual(inst, {v: (0, "") for v in range(10)}, {c: "0000" for c in range(16)})
        assert all(4 not in r for r in bad_reasons(inst, asg, 10).values())

    def test_empty_string_not_bad_by_degree(self):
        # d = 16 at an empty bucket string: d+_h = d+ < d+ + 16^0.9/8 = d+ + 1.5157
        g = nx.random_regular_graph(16, 30, seed=3)
        inst = build_instance(g.edges(), [range(40)] * 30)
        strings = {c: format(c % 16, "04b") for c in range(40)}
        asg = manual(inst, {v: (0, "") for v in range(30)}, strings)
        assert all(1 not in r for r in bad_reasons(inst, asg, 30).values())

    def test_duplicate_deep_strings(self):
        inst = build_instance([], [[0, 1]])
        asg = manual(inst, {0: (0, "")}, {0: "0110", 1: "0110"})
        assert 3 in bad_reasons(inst, asg, 1)[0]
        asg = manual(inst, {0: (0, "")}, {0: "0110", 1: "0111"})
        assert 3 not in bad_reasons(inst, asg, 1)[0]

    def test_oracle_batch_matches_scalar(self):
        r = random.Random(5)
        for trial in range(6):
            inst = trim_palettes(regular(2 * r.randint(6, 12), 3, trial))
            rh = make_run_hash(inst.n, 15, 2, 8)
            oracle = bad_oracle(inst, rh, inst.n)
            seeds = [r.randrange(rh.family.size) for _ in range(40)]
            batch = oracle.batch_totals(np.array(seeds))
            for s, b in zip(seeds, batch):
                assert sum(oracle.item_costs(rh.family.seed(s))) == b


class TestReduced:
    def test_sibling_edge_dropped(self):
        inst = build_instance([(0, 1)], [[0, 1], [0, 1]])
        plus = plus_sets(inst)
        asg = manual(inst, {0: (4, "0"), 1: (4, "1")}, {0: "0000", 1: "1000"})
        red = reduced_instances(plus, {0, 1}, asg)
        assert all(not e for _, e in red.values())

    def test_equal_degree_owned_once(self):
        inst = build_instance([(0, 1)], [[0, 1], [0, 1]])
        plus = plus_sets(inst)
        asg = manual(inst, {0: (0, ""), 1: (0, "")}, {0: "0000", 1: "1000"})
        red = reduced_instances(plus, {0, 1}, asg)
        edges = [e for _, es in red.values() for e in es]
        # rank (-d, id): node 0 ranks first, so the edge is counted at node 1
        assert edges == [(1, 0)]

    @given(instances(max_n=9), st.integers(0, 2**18 - 1))
    def test_partition(self, inst, seed):
        assume(inst.max_degree() <= 3)
        rh = make_run_hash(inst.n, max(c for v in inst.nodes for c in inst.palettes[v]), 2, 8)
        plus = plus_sets(inst)
        asg = assign(inst, rh, seed)
        good = set(inst.nodes)
        red = reduced_instances(plus, good, asg)
        nodes = [v for ns, _ in red.values() for v in ns]
        edges = [tuple(sorted(e)) for _, es in red.values() for e in es]
        assert sorted(nodes) == sorted(good)
        assert len(edges) == len(set(edges)) <= inst.edge_count()


class TestDescend:
    def test_degenerate_width(self):
        inst = build_instance([], [[0]])
        asg = manual(inst, {0: (0, "")}, {0: "1010"})
        out = descend_iteration(inst, plus_sets(inst), {0}, asg)
        assert out.node_bucket[0] == BucketAddress(1, "")

    def test_pigeonhole_child(self):
        # v=0 (degree 1) below w=1 (degree 2); colors 0 -> "0..." and 1 -> "1..."
        inst = build_instance([(0, 1), (1, 2)], [[0, 1], [0, 1, 2], [1, 2]])
        strings = {0: "0000", 1: "1000", 2: "1100"}
        asg = manual(inst, {0: (3, ""), 1: (4, "0"), 2: (3, "")}, strings)
        plus = plus_sets(inst)
        assert plus[0] == {1}
        out = descend_iteration(inst, plus, {0, 1}, asg)
        assert out.node_bucket[0] == BucketAddress(4, "1")

    def test_no_feasible_child(self):
        # v is left with one color (d+ = p = 1), which only a broken invariant allows
        inst = build_instance([(0, 1), (1, 2)], [[0, 1], [0, 1, 2], [1, 2]]).with_palettes({0: (1,)})
        strings = {0: "0000", 1: "1000", 2: "1100"}
        asg = manual(inst, {0: (3, ""), 1: (4, "1"), 2: (3, "")}, strings)
        with pytest.raises(NoFeasibleChild):
            descend_iteration(inst, plus_sets(inst), {0, 1}, asg)

    def test_recount_matches(self):
        events = []
        inst = regular(64, 5, 4, palette=24)
        color(inst, Config(C=4, kappa=0.5), observer=lambda e, p: events.append(p) if e == "bucket_iteration" else None)
        assert events
        for ev in events:
            g, plus, good, asg = ev["inst"], ev["plus"], ev["good"], ev["assignment"]
            rank = {v: rank_key(g, v) for v in g.nodes}
            raw = {v: (a.level, a.bits) for v, a in asg.node_bucket.items()}
            counts = recount_bucket(g.palettes, rank, g.adjacency, good, raw, asg.color_string)
            for v, (dp, p) in counts.items():
                assert dp < p


class TestFinalize:
    def test_empty(self):
        inst = build_instance([], [[0]])
        assert finalize(inst, plus_sets(inst), set(), manual(inst, {0: (0, "")}, {0: "0000"})) == {}

    def test_residual_conflict(self):
        inst = build_instance([], [[0, 1]])
        asg = manual(inst, {0: (0, "")}, {0: "0000", 1: "1000"})
        with pytest.raises(ResidualConflict):
            finalize(inst, plus_sets(inst), {0}, asg)


class TestRun:
    def test_empty(self):
        out = run(build_instance([], []), 1, make_run_hash(1, 0, 2, 8), DerandMode.parse("exact"))
        assert out.coloring == {} and out.gbad_edges == 0

    def test_all_bad_greedy_path(self):
        # four nodes in one root bucket with n=1: condition (4) marks all bad
        inst = build_instance([(0, 1), (2, 3)], [[0, 1]] * 4)
        out = run(inst, 1, make_run_hash(4, 1, 2, 8), DerandMode.parse("sample:2"))
        assert out.bad == {0, 1, 2, 3}
        assert verify_coloring(inst, out.coloring).ok

    @pytest.mark.parametrize("n,seed", [(16, 0), (20, 1), (32, 2)])
    def test_exact_contract(self, n, seed):
        inst = regular(n, 3, seed)
        rh = make_run_hash(n, 15, 2, 8)
        led = RoundLedger(n)
        out = run(inst, n, rh, DerandMode.parse("exact"), led)
        totals = all_totals(rh.family, bad_oracle(trim_palettes(inst), rh, n))
        achieved = int(totals[out.seed.value])
        assert Fraction(achieved) <= fraction_mean(totals.tolist())
        assert achieved == sum(inst.degree(v) for v in out.bad)
        assert 2 * out.gbad_edges <= achieved
        assert verify_coloring(inst, out.coloring).ok
        assert len(out.iterations) == 21 and out.invariants_ok
        final = out.final
        for v in out.good:
            assert final.node_bucket[v].level == out.initial.node_bucket[v].level + 20
