import math

import pytest

from opbar.errors import BoundsError
from opbar.exactla import homology
from opbar.partition import (
    character_is_class_function,
    character_on_homology,
    compare_with_bar,
    flag_count_oracle,
    partition_character,
    partition_complex,
)


class TestComplex:
    def test_n_one_special_case(self):
        c = partition_complex(1)
        assert homology(c).groups == {0: (1, ())}

    def test_n_two_single_flag(self):
        c = partition_complex(2)
        assert c.rank(1) == 1
        assert not c.diffs
        assert homology(c).groups == {1: (1, ())}

    def test_n_three_ranks(self):
        c = partition_complex(3)
        assert c.rank(0) == 0
        assert c.rank(1) == 1
        assert c.rank(2) == 3
        assert homology(c).groups == {2: (2, ())}

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_concentration_and_rank(self, n):
        c = partition_complex(n)
        assert homology(c).groups == {n - 1: (math.factorial(n - 1), ())}

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_top_flag_count_matches_chain_counter(self, n):
        c = partition_complex(n)
        assert c.rank(n - 1) == flag_count_oracle(n)

    def test_bounds(self):
        with pytest.raises(BoundsError):
            partition_complex(0)
        with pytest.raises(BoundsError):
            partition_complex(9)


class TestCharacter:
    def test_n_two_trivial_representation(self):
        chi = partition_character(2)
        assert chi == {(1, 1): 1, (2,): 1}

    def test_n_three(self):
        chi = partition_character(3)
        assert chi == {(1, 1, 1): 2, (2, 1): 0, (3,): -1}

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_class_function_and_dimension(self, n):
        assert character_is_class_function(n)
        chi = partition_character(n)
        assert chi[tuple([1] * n)] == math.factorial(n - 1)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_two_computation_paths_agree(self, n):
        assert partition_character(n) == character_on_homology(n)


class TestCompareWithBar:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_triple_agreement(self, n):
        report = compare_with_bar(n, cache={})
        assert report["match"], report
