import itertools

import pytest

from opbar.errors import BoundsError, ParseError, ValidationError
from opbar.exactla import INT, ExactMatrix, GradedFreeModule
from opbar.opalg import (
    LEFT_COMODULE,
    LEFT_MODULE,
    RIGHT_MODULE,
    Cooperad,
    Operad,
    SymSeq,
    builtin,
    builtin_sphere_comodule,
    builtin_sphere_module,
    compose_product,
    compose_product_symseq,
    constant_comodule,
    dual,
    dumps,
    loads,
    load_operad,
    save,
    unit_module,
    unit_symseq,
)


@pytest.fixture(scope="module")
def com4():
    return builtin("com", 4)


@pytest.fixture(scope="module")
def ass3():
    return builtin("ass", 3)


class TestBuiltins:
    def test_com_validates(self, com4):
        assert com4.rank(3) == 1
        assert com4.component(2).degrees() == [0]

    def test_ass_ranks(self, ass3):
        assert [ass3.rank(n) for n in (1, 2, 3)] == [1, 2, 6]

    def test_ass_composition_matches_substitution_oracle(self, ass3):
        # Independent oracle: substitute the inner word into letter a of
        # the outer word, acting on positions rather than digits.
        def substitute(outer, a, inner):
            result = []
            for x in outer:
                if x == a:
                    result.extend(y + a - 1 for y in inner)
                elif x < a:
                    result.append(x)
                else:
                    result.append(x + len(inner) - 1)
            return tuple(result)

        words2 = [(1, 2), (2, 1)]
        labels2 = ["12", "21"]
        labels3 = [lab for _d, lab in ass3.component(3).basis()]
        for (i, w), (j, u) in itertools.product(
                enumerate(words2), enumerate(words2)):
            for a in (1, 2):
                col = ass3.comp(2, a, 2).column(i * 2 + j)
                expected = "".join(str(x) for x in substitute(w, a, u))
                assert col == {labels3.index(expected): 1}

    def test_ass_example_one_shot(self, ass3):
        # (21) o_1 (21) substitutes at the slot of input 1: word 3 2 1.
        labels2 = [lab for _d, lab in ass3.component(2).basis()]
        labels3 = [lab for _d, lab in ass3.component(3).basis()]
        i = labels2.index("21")
        col = ass3.comp(2, 1, 2).column(i * 2 + i)
        assert col == {labels3.index("321"): 1}

    def test_unit_symseq(self):
        unit = unit_symseq()
        assert unit.rank(1) == 1
        assert unit.rank(2) == 0

    def test_sphere_comodule_validates(self):
        sphere = builtin_sphere_comodule(2, 3)
        assert sphere.rank(3) == 1
        assert sphere.component(2).degrees() == [2]

    def test_sphere_comodule_odd_degree_validates(self):
        builtin_sphere_comodule(1, 3)

    def test_sphere_module_validates(self):
        builtin_sphere_module(2, 3)

    def test_unit_modules_validate(self, com4):
        unit_module(com4, LEFT_MODULE)
        unit_module(com4, RIGHT_MODULE)

    def test_builtin_bounds(self):
        with pytest.raises(ValidationError):
            builtin("com", 9)
        with pytest.raises(ValidationError):
            builtin("nosuch", 3)


class TestValidationCatchesCorruption:
    def test_broken_associativity_rejected(self, com4):
        comp = dict(com4.comp_maps)
        comp[(2, 1, 2)] = ExactMatrix(1, 1, {(0, 0): -1})
        with pytest.raises(ValidationError, match="axiom"):
            Operad(com4.symseq, comp, name="broken")

    def test_broken_action_rejected(self):
        comps = {1: GradedFreeModule({0: ("e",)}),
                 2: GradedFreeModule({0: ("a", "b")})}
        bad = ExactMatrix(2, 2, {(0, 0): 1, (0, 1): 1, (1, 1): 1})
        with pytest.raises(ValidationError, match="Coxeter"):
            SymSeq(INT, comps, {2: (bad,)})


class TestComposeProduct:
    def test_unit_laws(self, com4):
        unit = unit_symseq()
        for arity in (1, 2, 3):
            left = compose_product(unit, com4.symseq, arity)
            right = compose_product(com4.symseq, unit, arity)
            want = com4.component(arity)
            assert [left.rank(d) for d in want.degrees()] == \
                [want.rank(d) for d in want.degrees()]
            assert left.total_rank() == right.total_rank() == want.total_rank()

    def test_com_com_arity_three(self, com4):
        prod = compose_product(com4.symseq, com4.symseq, 3)
        assert prod.total_rank() == 5
        assert prod.degrees() == [0]

    def test_rank_identity_against_partition_enumerator(self, ass3):
        # Independent brute-force partition count oracle.
        from opbar.combinat import set_partitions
        import math
        n = 3
        expected = 0
        for blocks in set_partitions(range(1, n + 1)):
            term = math.factorial(len(blocks))
            for b in blocks:
                term *= math.factorial(len(b))
            expected += term
        prod = compose_product(ass3.symseq, ass3.symseq, n)
        assert prod.total_rank() == expected

    def test_symseq_actions_satisfy_coxeter(self, ass3):
        # SymSeq construction re-checks the Coxeter relations.
        compose_product_symseq(ass3.symseq, ass3.symseq, 3)

    def test_bounds(self, com4):
        with pytest.raises(BoundsError):
            compose_product(com4.symseq, com4.symseq, 5)


class TestDual:
    def test_involution(self, ass3):
        dd = dual(dual(ass3))
        assert dd.symseq == ass3.symseq
        assert dd.comp_maps == ass3.comp_maps

    def test_dual_com_is_cocommutative_cooperad(self, com4):
        q = dual(com4)
        assert isinstance(q, Cooperad)
        assert all(q.rank(n) == 1 for n in range(1, 5))
        assert q.component(3).degrees() == [0]

    def test_dual_ass_ranks(self, ass3):
        q = dual(ass3)
        assert [q.rank(n) for n in (1, 2, 3)] == [1, 2, 6]
        assert q.component(3).degrees() == [0]

    def test_dual_flips_module_side(self):
        sphere = builtin_sphere_comodule(2, 3)
        m = dual(sphere)
        assert m.side == LEFT_MODULE
        assert m.component(2).degrees() == [-2]


class TestConstantComodule:
    def test_sphere_like_coalgebra(self):
        x = GradedFreeModule({2: ("x",)})
        delta = ExactMatrix.zero(1, 1)
        c = constant_comodule(x, delta, 3)
        assert c.rank(2) == 1

    def test_nontrivial_coalgebra_validates(self):
        # k[e]/e^2 with primitive-free reduced coproduct on the top class:
        # X spanned by a (deg 2), t (deg 4); Delta(t) = a (x) a.
        x = GradedFreeModule({2: ("a",), 4: ("t",)})
        delta = ExactMatrix(4, 2, {(0, 1): 1})
        c = constant_comodule(x, delta, 3)
        assert c.rank(1) == 2

    def test_non_cocommutative_rejected(self):
        # Delta(t) = x (x) y alone is not graded cocommutative.
        x = GradedFreeModule({1: ("x", "y"), 2: ("t",)})
        delta = ExactMatrix(9, 3, {(1, 2): 1})
        with pytest.raises(ValidationError, match="cocommutative|coassociative"):
            constant_comodule(x, delta, 3)


class TestIO:
    def test_round_trip_com(self, com4, tmp_path):
        path = tmp_path / "com.opb"
        save(com4, path)
        loaded = load_operad(path)
        assert loaded == com4

    def test_round_trip_ass(self, ass3, tmp_path):
        path = tmp_path / "ass.opb"
        save(ass3, path)
        assert load_operad(path) == ass3

    def test_round_trip_cooperad_and_module(self, tmp_path):
        sphere = builtin_sphere_comodule(2, 3)
        text = dumps(sphere)
        loaded = loads(text)
        assert loaded[-1] == sphere

    def test_corrupted_composition_rejected(self, com4):
        text = dumps(com4)
        lines = text.splitlines()
        # Flip the sign of one composition entry: breaks associativity.
        for i, line in enumerate(lines):
            if line.startswith("begin map comp 2 1 2"):
                lines[i + 1] = "0 0 -1"
                break
        with pytest.raises(ValidationError, match="axiom"):
            loads("\n".join(lines))

    def test_parse_error_has_location(self):
        with pytest.raises(ParseError, match="line 1"):
            loads("not a structure file")

    def test_missing_end_reported(self, com4):
        text = dumps(com4)
        broken = text.replace("endstructure", "", 1)
        with pytest.raises(ParseError):
            loads(broken[:broken.rindex("end")])


class TestFullComposition:
    def test_com_full_composition_is_rank_one(self, com4):
        mat = com4.full_composition((2, 2))
        assert mat.nrows == 1 and mat.ncols == 1
        assert mat.entry(0, 0) == 1

    def test_ass_full_composition_agrees_with_partials(self, ass3):
        # gamma(p; q1, q2) == (p o_2 q2) o_1 q1 for 1+1 -> 2 insertion.
        full = ass3.full_composition((1, 2))
        step1 = ass3.comp(2, 1, 1)
        for i in range(2):
            for j in range(2):
                via_full = full.column(i * 2 + j)
                mid = step1.column(i * 1 + 0)
                out = {}
                for w, c in mid.items():
                    for r, v in ass3.comp(2, 2, 2).column(w * 2 + j).items():
                        out[r] = out.get(r, 0) + c * v
                assert via_full == out
