import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opbar.errors import ValidationError
from opbar.exactla import (
    INT,
    RAT,
    ChainComplex,
    ChainMap,
    ExactMatrix,
    GradedFreeModule,
    HomologySummary,
    alternating_trace,
    homology,
    induced_map_on_homology,
    kernel_basis,
    koszul_sign,
    matrix_rank,
    smith_normal_form,
    solve_in_span,
    tensor,
    tensor_list,
)


def mat(rows, ring=INT):
    entries = {}
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            if v:
                entries[(i, j)] = v
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    return ExactMatrix(nrows, ncols, entries, ring=ring)


class TestSmithNormalForm:
    def test_zero_matrix(self):
        assert smith_normal_form(ExactMatrix.zero(3, 4)) == []

    def test_identity(self):
        assert smith_normal_form(ExactMatrix.identity(4)) == [1, 1, 1, 1]

    def test_frozen_example(self):
        # d1 = gcd of entries = 2, d1*d2 = |det| = 8.
        assert smith_normal_form(mat([[2, 4], [6, 8]])) == [2, 4]

    def test_divisibility_chain(self):
        factors = smith_normal_form(mat([[2, 0, 0], [0, 3, 0], [0, 0, 4]]))
        assert factors == [1, 2, 12]
        for a, b in zip(factors, factors[1:]):
            assert b % a == 0

    def test_rank_deficient(self):
        assert smith_normal_form(mat([[1, 2], [2, 4]])) == [1]

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_invariance_under_unimodular_ops(self, seed):
        rng = random.Random(seed)
        n, m = rng.randint(1, 4), rng.randint(1, 4)
        rows = [[rng.randint(-4, 4) for _ in range(m)] for _ in range(n)]
        base = smith_normal_form(mat(rows))
        for _ in range(6):
            kind = rng.random()
            if kind < 0.4 and n > 1:
                i, j = rng.sample(range(n), 2)
                c = rng.randint(-3, 3)
                for col in range(m):
                    rows[i][col] += c * rows[j][col]
            elif kind < 0.8 and m > 1:
                i, j = rng.sample(range(m), 2)
                c = rng.randint(-3, 3)
                for r in rows:
                    r[i] += c * r[j]
            else:
                i = rng.randrange(n)
                rows[i] = [-v for v in rows[i]]
        assert smith_normal_form(mat(rows)) == base


class TestMatrixBasics:
    def test_mul_and_transpose(self):
        a = mat([[1, 2], [0, 1]])
        b = mat([[1, 0], [3, 1]])
        assert (a * b) == mat([[7, 2], [3, 1]])
        assert a.transpose() == mat([[1, 0], [2, 1]])

    def test_rank_rational(self):
        m = mat([[Fraction(1, 2), 1], [1, 2]], ring=RAT)
        assert matrix_rank(m) == 1

    def test_kernel_and_solve(self):
        m = mat([[1, 1, 0], [0, 0, 1]])
        ker = kernel_basis(m)
        assert len(ker) == 1
        assert ker[0] == {0: Fraction(1), 1: Fraction(-1)}
        coeffs = solve_in_span([{0: 1, 1: 1}, {1: 1}], {0: 2, 1: 3})
        assert coeffs == {0: Fraction(2), 1: Fraction(1)}
        assert solve_in_span([{0: 1}], {1: 1}) is None


def three_term(matrix_entries):
    """0 -> Z -> Z -> 0 style complex with C_1 -> C_0 given by a matrix."""
    m = matrix_entries
    module = GradedFreeModule({0: [f"a{i}" for i in range(m.nrows)],
                               1: [f"b{j}" for j in range(m.ncols)]})
    return ChainComplex(module, {1: m})


class TestHomology:
    def test_identity_acyclic(self):
        c = three_term(ExactMatrix.identity(1))
        assert homology(c).groups == {}

    def test_single_generator(self):
        module = GradedFreeModule({0: ["x"]})
        c = ChainComplex(module, {})
        assert homology(c).groups == {0: (1, ())}

    def test_times_two_torsion(self):
        c = three_term(ExactMatrix(1, 1, {(0, 0): 2}))
        assert homology(c).groups == {0: (0, (2,))}

    def test_rational_sees_only_free_part(self):
        c = three_term(ExactMatrix(1, 1, {(0, 0): 2}))
        assert homology(c, ring=RAT).groups == {}

    def test_d_squared_checked(self):
        module = GradedFreeModule({0: ["a"], 1: ["b"], 2: ["c"]})
        with pytest.raises(ValidationError):
            ChainComplex(module, {1: ExactMatrix(1, 1, {(0, 0): 1}),
                                  2: ExactMatrix(1, 1, {(0, 0): 1})})

    def test_euler_characteristic_matches(self):
        c = three_term(mat([[0, 0], [0, 3]]))
        summary = homology(c)
        chi = c.rank(0) - c.rank(1)
        assert summary.euler_characteristic() == chi


class TestTensor:
    def test_unit_complex(self):
        unit = ChainComplex(GradedFreeModule({0: ["e"]}), {})
        c = three_term(ExactMatrix(1, 1, {(0, 0): 2}))
        t = tensor(c, unit)
        assert homology(t).groups == homology(c).groups

    def test_degree_shift(self):
        line = ChainComplex(GradedFreeModule({1: ["s"]}), {})
        t = tensor(line, line)
        assert t.rank(2) == 1
        assert homology(t).groups == {2: (1, ())}

    def test_koszul_sign_gives_d_squared_zero(self):
        # An acyclic two-term complex in odd degrees exercises the sign.
        c = ChainComplex(GradedFreeModule({1: ["x"], 2: ["y"]}),
                         {2: ExactMatrix(1, 1, {(0, 0): 1})})
        t = tensor_list([c, c, c])
        assert homology(t).groups == {}

    def test_kunneth_ranks(self):
        circle = ChainComplex(
            GradedFreeModule({0: ["v"], 1: ["e"]}),
            {1: ExactMatrix.zero(1, 1)})
        t = tensor(circle, circle)
        assert homology(t).groups == {0: (1, ()), 1: (2, ()), 2: (1, ())}


class TestInducedMap:
    def test_identity_map(self):
        circle = ChainComplex(
            GradedFreeModule({0: ["v"], 1: ["e"]}),
            {1: ExactMatrix.zero(1, 1)}, ring=RAT)
        f = ChainMap(circle, circle, {0: ExactMatrix.identity(1, ring=RAT),
                                      1: ExactMatrix.identity(1, ring=RAT)})
        assert induced_map_on_homology(f, 1) == ExactMatrix.identity(1, ring=RAT)

    def test_functoriality(self):
        module = GradedFreeModule({0: ["a", "b"]})
        c = ChainComplex(module, {}, ring=RAT)
        f = ChainMap(c, c, {0: mat([[0, 1], [1, 0]], ring=RAT)})
        g = ChainMap(c, c, {0: mat([[1, 1], [0, 1]], ring=RAT)})
        hf = induced_map_on_homology(f, 0)
        hg = induced_map_on_homology(g, 0)
        hgf = induced_map_on_homology(g.compose(f), 0)
        assert hg * hf == hgf

    def test_chain_homotopic_maps_agree(self):
        # C: 0 -> Q -> Q^2 -> 0 with d(b) = a0 - a1; f = id, g = f + dh + hd.
        d = mat([[1], [-1]], ring=RAT)
        module = GradedFreeModule({0: ["a0", "a1"], 1: ["b"]})
        c = ChainComplex(module, {1: d}, ring=RAT)
        ident = {0: ExactMatrix.identity(2, ring=RAT),
                 1: ExactMatrix.identity(1, ring=RAT)}
        f = ChainMap(c, c, ident)
        h0 = mat([[2, 2]], ring=RAT)  # C_0 -> C_1
        g0 = ident[0] + d * h0
        g1 = ident[1] + h0 * d
        g = ChainMap(c, c, {0: g0, 1: g1})
        assert induced_map_on_homology(f, 0) == induced_map_on_homology(g, 0)

    def test_non_chain_map_rejected(self):
        c = three_term(ExactMatrix(1, 1, {(0, 0): 1}))
        with pytest.raises(ValidationError, match="degree"):
            ChainMap(c, c, {0: ExactMatrix.identity(1),
                            1: ExactMatrix(1, 1, {(0, 0): 2})})


class TestAlternatingTrace:
    def test_identity_gives_euler_characteristic(self):
        circle = ChainComplex(
            GradedFreeModule({0: ["v"], 1: ["e"]}),
            {1: ExactMatrix.zero(1, 1)})
        auto = {0: ExactMatrix.identity(1), 1: ExactMatrix.identity(1)}
        assert alternating_trace(circle, auto) == 0

    def test_transposition_on_zero_differential(self):
        module = GradedFreeModule({1: ["x", "y"]})
        c = ChainComplex(module, {})
        flip = mat([[0, 1], [1, 0]])
        assert alternating_trace(c, {1: flip}) == 0

    def test_acyclic_augmented_complex_vanishes(self):
        c = three_term(ExactMatrix.identity(2))
        g = {0: mat([[0, 1], [1, 0]]), 1: mat([[0, 1], [1, 0]])}
        assert alternating_trace(c, g) == 0

    def test_non_equivariant_rejected(self):
        c = three_term(ExactMatrix.identity(2))
        g = {0: ExactMatrix.identity(2), 1: mat([[0, 1], [1, 0]])}
        with pytest.raises(ValidationError):
            alternating_trace(c, g)


class TestKoszulSign:
    def test_even_factors_never_sign(self):
        assert koszul_sign((2, 4), (1, 0)) == 1

    def test_two_odd_factors_cross(self):
        assert koszul_sign((1, 1), (1, 0)) == -1

    def test_identity_perm(self):
        assert koszul_sign((1, 1, 1), (0, 1, 2)) == 1


class TestSummary:
    def test_equality_and_negation(self):
        s = HomologySummary(INT, {2: (3, (2, 4))})
        assert s.degree_negated().groups == {-2: (3, (2, 4))}
        assert s == HomologySummary(INT, {2: (3, (2, 4)), 5: (0, ())})

    def test_rat_with_torsion_rejected(self):
        with pytest.raises(ValidationError):
            HomologySummary(RAT, {0: (1, (2,))})

    def test_export(self):
        s = HomologySummary(INT, {1: (2, (3,))})
        assert s.export_text() == "homology ring Z\ndegree 1: free 2 torsion 3"
