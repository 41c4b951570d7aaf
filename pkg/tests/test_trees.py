import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opbar.errors import BoundsError, ValidationError
from opbar.trees import (
    BUD,
    GENERALIZED,
    INTERNAL_EDGE,
    LEAF,
    ROOT,
    ROOT_EDGE,
    STANDARD,
    Tree,
    covers,
    down_set,
    enumerate_trees,
    graft,
    leq,
    make_tree,
    parse_tree,
    relabel,
    single_edge_tree,
    standard_tree_count,
    ungraft,
    ungraft_partition,
    w_cell_complex,
)

# Counts frozen from the recurrence oracle f({x}) = 1,
# f(S) = sum over partitions of S into >= 2 blocks of prod f(block).
STANDARD_COUNTS = {1: 1, 2: 1, 3: 4, 4: 26, 5: 236, 6: 2752, 7: 39208}


def t(serial):
    return parse_tree(serial)


class TestEnumeration:
    @pytest.mark.parametrize("n,count", [(1, 1), (2, 1), (3, 4), (4, 26), (5, 236)])
    def test_standard_counts(self, n, count):
        trees = enumerate_trees(n, STANDARD)
        assert len(trees) == count
        assert len(trees) == standard_tree_count(n)

    def test_standard_counts_against_oracle_up_to_seven(self):
        for n, count in STANDARD_COUNTS.items():
            assert standard_tree_count(n) == count
        assert len(enumerate_trees(6, STANDARD, max_labels=8)) == 2752
        assert len(enumerate_trees(7, STANDARD, max_labels=8)) == 39208

    def test_generalized_two(self):
        assert len(enumerate_trees(2, GENERALIZED)) == 3

    def test_root_three(self):
        assert len(enumerate_trees(3, ROOT)) == 8

    def test_sorted_and_unique(self):
        for species in (STANDARD, GENERALIZED, ROOT, LEAF):
            trees = enumerate_trees(3, species)
            serials = [x.serialize() for x in trees]
            assert serials == sorted(serials)
            assert len(set(serials)) == len(serials)

    def test_species_are_nested(self):
        gen = set(enumerate_trees(3, GENERALIZED))
        root = set(enumerate_trees(3, ROOT))
        leaf = set(enumerate_trees(3, LEAF))
        std = set(enumerate_trees(3, STANDARD))
        assert std == root & leaf
        assert root | leaf <= gen

    def test_bounds(self):
        with pytest.raises(BoundsError):
            enumerate_trees(0, STANDARD)
        with pytest.raises(BoundsError):
            enumerate_trees(9, STANDARD)


class TestCanonicalForm:
    def test_canonicalization_idempotent(self):
        for tree in enumerate_trees(4, GENERALIZED, max_labels=4):
            assert make_tree(tree.root_children) == tree

    def test_children_sorted_by_min_label(self):
        tree = make_tree(parse_tree("(([3],([1],[2])))").root_children)
        assert tree.serialize() == "((([1],[2]),[3]))"

    def test_serialization_round_trip(self):
        for tree in enumerate_trees(4, GENERALIZED, max_labels=4):
            assert parse_tree(tree.serialize()) == tree

    def test_vertex_needs_two_children(self):
        with pytest.raises(ValidationError):
            Tree((("V", (("L", (1,)),)),))

    def test_species_property(self):
        assert t("(([1],[2]))").species == STANDARD
        assert t("([1,2])").species == ROOT
        assert t("([1],[2])").species == LEAF
        assert t("([1,2],[3])").species == GENERALIZED


class TestCovers:
    def test_one_vertex_tree_has_root_and_bud_cover(self):
        tree = t("(([1],[2]))")
        result = covers(tree)
        kinds = sorted(move.kind for _u, move in result)
        assert kinds == sorted([ROOT_EDGE, BUD])
        collapsed = {u.serialize() for u, _ in result}
        assert collapsed == {"([1],[2])", "([1,2])"}

    def test_binary_standard_tree_has_three_covers(self):
        tree = t("((([1],[2]),[3]))")
        result = covers(tree)
        assert len(result) == 3
        kinds = sorted(move.kind for _u, move in result)
        assert kinds == sorted([INTERNAL_EDGE, ROOT_EDGE, BUD])

    def test_zero_vertex_tree_has_no_covers(self):
        assert covers(t("([1],[2],[3])")) == []
        assert covers(t("([1,2,3])")) == []

    def test_covers_drop_exactly_one_vertex(self):
        for tree in enumerate_trees(4, GENERALIZED, max_labels=4):
            for u, _move in covers(tree):
                assert u.n_vertices == tree.n_vertices - 1
                assert u.labels == tree.labels


class TestPosetOrder:
    def test_reflexive(self):
        tree = t("(([1],[2]))")
        assert leq(tree, tree)

    def test_star_below_binary(self):
        star = t("(([1],[2],[3]))")
        for binary in enumerate_trees(3, STANDARD):
            if binary.n_vertices == 2:
                assert leq(star, binary)

    def test_distinct_binary_trees_incomparable(self):
        binaries = [x for x in enumerate_trees(3, STANDARD) if x.n_vertices == 2]
        assert len(binaries) == 3
        for a, b in itertools.permutations(binaries, 2):
            assert not leq(a, b)

    def test_covers_subset_of_down_set(self):
        for tree in enumerate_trees(3, GENERALIZED):
            for u, _move in covers(tree):
                assert leq(u, tree)

    def test_antisymmetry_on_arity_three(self):
        trees = enumerate_trees(3, GENERALIZED)
        for a in trees:
            for b in trees:
                if leq(a, b) and leq(b, a):
                    assert a == b


class TestGrafting:
    def test_figure_shape_graft(self):
        # Grafting a one-vertex tree on {1,2} onto the a-leaf of a
        # one-vertex tree on {a,3} yields the binary tree ((1,2),3).
        outer = make_tree((("V", (("L", (0,)), ("L", (3,)))),))
        inner = t("(([1],[2]))")
        grafted = graft(outer, 0, inner)
        assert grafted == t("((([1],[2]),[3]))")

    def test_unit_laws(self):
        tree = t("((([1],[2]),[3]))")
        assert graft(tree, 3, single_edge_tree((7,))) == \
            t("((([1],[2]),[7]))")
        assert graft(single_edge_tree((9,)), 9, tree) == tree

    def test_round_trip(self):
        outer = make_tree((("V", (("L", (0,)), ("L", (3,)))),))
        inner = t("(([1],[2]))")
        grafted = graft(outer, 0, inner)
        back = ungraft(grafted, (0, 3), (1, 2), 0)
        assert back == (outer, inner)

    def test_ungraft_absent(self):
        star = t("(([1],[2],[3]))")
        assert ungraft(star, (0, 3), (1, 2), 0) is None

    def test_ungraft_single_edge(self):
        v = single_edge_tree((5,))
        res = ungraft(v, (0,), (5,), 0)
        assert res == (single_edge_tree((0,)), single_edge_tree((5,)))

    def test_graft_requires_single_root_edge(self):
        with pytest.raises(ValidationError, match="single root edge"):
            graft(single_edge_tree((1,)), 1, t("([2],[3])"))

    def test_graft_requires_lone_label(self):
        with pytest.raises(ValidationError, match="only the grafting label"):
            graft(t("([1,2])"), 1, single_edge_tree((3,)))

    def test_all_ungrafts_invert_graft(self):
        for tree in enumerate_trees(4, GENERALIZED, max_labels=4):
            for b_size in (1, 2, 3):
                for b_side in itertools.combinations((1, 2, 3, 4), b_size):
                    a = min(b_side)
                    a_side = tuple(sorted(set((1, 2, 3, 4)) - set(b_side))) + (a,)
                    res = ungraft(tree, a_side, b_side, a)
                    if res is not None:
                        back = graft(res[0], a, res[1])
                        assert back == tree


class TestUngraftPartition:
    def test_trivial_partition(self):
        tree = t("((([1],[2]),[3]))")
        res = ungraft_partition(tree, [(1, 2, 3)])
        assert res == (single_edge_tree((1,)), [tree])

    def test_singleton_partition(self):
        tree = t("(([1],[2]))")
        res = ungraft_partition(tree, [(1,), (2,)])
        assert res is not None
        skeleton, parts = res
        assert skeleton == tree
        assert parts == [single_edge_tree((1,)), single_edge_tree((2,))]

    def test_two_block_decomposition(self):
        tree = t("((([1],[2]),[3]))")
        res = ungraft_partition(tree, [(1, 2), (3,)])
        assert res is not None
        skeleton, parts = res
        assert skeleton == t("(([1],[2]))")
        assert parts[0] == t("(([1],[2]))")
        assert parts[1] == single_edge_tree((3,))

    def test_not_of_type(self):
        star = t("(([1],[2],[3]))")
        assert ungraft_partition(star, [(1, 2), (3,)]) is None


class TestRelabel:
    def test_identity(self):
        tree = t("((([1],[2]),[3]))")
        out, sign = relabel(tree, {1: 1, 2: 2, 3: 3})
        assert out == tree and sign == 1

    def test_inverse_composes_to_identity(self):
        sigma = {1: 2, 2: 3, 3: 1}
        inv = {v: k for k, v in sigma.items()}
        for tree in enumerate_trees(3, GENERALIZED):
            mid, s1 = relabel(tree, sigma)
            back, s2 = relabel(mid, inv)
            assert back == tree
            assert s1 * s2 == 1

    def test_sibling_vertex_swap_flips_sign(self):
        # Two vertex siblings under the root swap under (1 3)(2 4).
        tree = t("(([1],[2]),([3],[4]))")
        out, sign = relabel(tree, {1: 3, 2: 4, 3: 1, 4: 2})
        assert out == tree
        assert sign == -1

    def test_two_vertex_chains_never_flip(self):
        # At three labels every vertex order is a chain, so signs are +1.
        for tree in enumerate_trees(3, GENERALIZED):
            for perm in itertools.permutations((1, 2, 3)):
                sigma = dict(zip((1, 2, 3), perm))
                _out, sign = relabel(tree, sigma)
                assert sign == 1

    @settings(max_examples=40, deadline=None)
    @given(st.permutations([1, 2, 3, 4]), st.permutations([1, 2, 3, 4]),
           st.integers(min_value=0, max_value=114))
    def test_sign_is_multiplicative(self, p1, p2, index):
        trees = enumerate_trees(4, GENERALIZED, max_labels=4)
        tree = trees[index % len(trees)]
        s1 = dict(zip((1, 2, 3, 4), p1))
        s2 = dict(zip((1, 2, 3, 4), p2))
        mid, sign1 = relabel(tree, s1)
        out, sign2 = relabel(mid, s2)
        combined = {k: s2[s1[k]] for k in s1}
        out2, sign12 = relabel(tree, combined)
        assert out == out2
        assert sign12 == sign1 * sign2


class TestWeightingComplex:
    def test_zero_vertex_tree(self):
        c = w_cell_complex(t("([1,2])"))
        assert c.rank(0) == 1
        assert c.homology().groups == {0: (1, ())}

    def test_disc_contractibility_arity_four(self):
        for tree in enumerate_trees(4, GENERALIZED, max_labels=4):
            c = w_cell_complex(tree)
            assert c.homology().groups == {0: (1, ())}, tree.serialize()

    def test_top_cell_is_single(self):
        tree = t("((([1],[2]),[3]))")
        c = w_cell_complex(tree)
        assert c.rank(tree.n_vertices) == 1

    def test_bound(self):
        with pytest.raises(BoundsError):
            w_cell_complex(t("(([1],[2]))"), max_vertices=0)
