"""Partition poset complexes and their symmetric-group characters.

The complex of a set {1..n} has one generator per strict flag of
partitions from the discrete to the indiscrete one; chains missing an
endpoint are identified with the basepoint.  The differential is the
standard alternating sum of inner deletions, independent of the
orientation convention used by the tree complexes: agreement of the
homologies is the cross-certification.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

from .combinat import all_permutations, cycle_type, set_partitions
from .errors import BoundsError, ValidationError
from .exactla import (
    ChainComplex,
    ExactMatrix,
    GradedFreeModule,
    alternating_trace,
    homology,
)

MAX_PARTITION_SIZE = 8


def discrete_partition(n):
    return tuple((i,) for i in range(1, n + 1))


def indiscrete_partition(n):
    return (tuple(range(1, n + 1)),)


def strictly_refines(lam, mu):
    """lam < mu in refinement order (lam strictly finer)."""
    if lam == mu:
        return False
    for block in lam:
        bset = set(block)
        if not any(bset <= set(c) for c in mu):
            return False
    return True


@lru_cache(maxsize=None)
def _flags(n):
    """Strict flags from the discrete to the indiscrete partition."""
    if n == 1:
        return (((indiscrete_partition(1)),),)
    partitions = list(set_partitions(range(1, n + 1)))
    coarser = {lam: [mu for mu in partitions if strictly_refines(lam, mu)]
               for lam in partitions}
    bottom = discrete_partition(n)
    top = indiscrete_partition(n)
    flags = []

    def extend(chain):
        if chain[-1] == top:
            flags.append(tuple(chain))
            return
        for mu in coarser[chain[-1]]:
            chain.append(mu)
            extend(chain)
            chain.pop()

    extend([bottom])
    return tuple(flags)


def flag_count_oracle(n):
    """Maximal-flag count by dynamic programming on the lattice.

    Counts chains from the discrete to the indiscrete partition through
    covers only, independently of the flag enumeration.
    """
    partitions = list(set_partitions(range(1, n + 1)))

    def is_cover(lam, mu):
        return strictly_refines(lam, mu) and len(lam) == len(mu) + 1

    counts = {discrete_partition(n): 1}
    for lam in sorted(partitions, key=len, reverse=True):
        if lam not in counts:
            counts[lam] = sum(counts[fine] for fine in partitions
                              if len(fine) == len(lam) + 1
                              and is_cover(fine, lam))
    return counts[indiscrete_partition(n)]


@lru_cache(maxsize=None)
def partition_complex(n):
    """Normalized chains of the partition flag complex over Z."""
    if not 1 <= n <= MAX_PARTITION_SIZE:
        raise BoundsError(f"partition complex needs 1 <= n <= "
                          f"{MAX_PARTITION_SIZE}")
    if n == 1:
        module = GradedFreeModule({0: ("(1)",)})
        return ChainComplex(module, {})
    flags = _flags(n)
    by_degree = {}
    index = {}
    for flag in flags:
        k = len(flag) - 1
        bucket = by_degree.setdefault(k, [])
        index[flag] = (k, len(bucket))
        bucket.append(flag)
    module = GradedFreeModule(
        {k: tuple(_flag_label(f) for f in v) for k, v in by_degree.items()})
    entries = {}
    for flag in flags:
        k, j = index[flag]
        for i_del in range(1, k):
            sub = flag[:i_del] + flag[i_del + 1:]
            _k2, i = index[sub]
            key = (k, i, j)
            entries[key] = entries.get(key, 0) + (-1) ** i_del
    diffs = {}
    for (k, i, j), v in entries.items():
        if v != 0:
            diffs.setdefault(k, {})[(i, j)] = v
    mats = {k: ExactMatrix(module.rank(k - 1), module.rank(k), e)
            for k, e in diffs.items()}
    return ChainComplex(module, mats)


def _flag_label(flag):
    return " < ".join("|".join("".join(str(x) for x in b) for b in mu)
                      for mu in flag)


def flag_action(n, sigma):
    """Permutation matrices of a label permutation on the flag basis."""
    complex_ = partition_complex(n)
    if n == 1:
        return {0: ExactMatrix.identity(1)}
    smap = {i + 1: sigma[i] for i in range(n)}
    index = {}
    by_degree = {}
    for flag in _flags(n):
        k = len(flag) - 1
        bucket = by_degree.setdefault(k, [])
        index[flag] = (k, len(bucket))
        bucket.append(flag)
    mats = {}
    for flag, (k, j) in index.items():
        moved = tuple(
            tuple(sorted((tuple(sorted(smap[x] for x in b)) for b in mu),
                         key=lambda b: b[0]))
            for mu in flag)
        _k2, i = index[moved]
        mats.setdefault(k, {})[(i, j)] = 1
    return {k: ExactMatrix(complex_.rank(k), complex_.rank(k),
                           mats.get(k, {}))
            for k in complex_.degrees()}


def partition_character(n):
    """Character of the top homology as a map cycle type -> integer.

    Computed by Lefschetz traces on the chain level; requires the
    homology to be concentrated in degree n-1 and refuses otherwise.
    """
    complex_ = partition_complex(n)
    summary = homology(complex_)
    top = n - 1 if n > 1 else 0
    if not summary.is_concentrated_in(top):
        raise ValidationError(
            f"homology of the partition complex at n={n} is not "
            f"concentrated in degree {top}; character undefined")
    values = {}
    for sigma in all_permutations(n):
        ct = cycle_type(sigma)
        if ct in values:
            continue
        auto = flag_action(n, sigma)
        values[ct] = (-1) ** top * alternating_trace(complex_, auto)
    return values


def character_is_class_function(n):
    """Every permutation of a cycle type gives the same trace."""
    complex_ = partition_complex(n)
    top = n - 1 if n > 1 else 0
    seen = {}
    for sigma in all_permutations(n):
        ct = cycle_type(sigma)
        val = (-1) ** top * alternating_trace(complex_, flag_action(n, sigma))
        if ct in seen and seen[ct] != val:
            return False
        seen[ct] = val
    return True


def character_on_homology(n):
    """Character recomputed from the rational homology action matrices."""
    from .exactla import (RAT, express_in_homology,
                          homology_representatives)
    complex_ = partition_complex(n)
    top = n - 1 if n > 1 else 0
    reps, bnd = homology_representatives(complex_, top)
    values = {}
    for sigma in all_permutations(n):
        ct = cycle_type(sigma)
        if ct in values:
            continue
        auto = flag_action(n, sigma)
        trace = 0
        for j, z in enumerate(reps):
            img = auto[top].apply(z)
            coords = express_in_homology(complex_, top, img,
                                         reps=reps, boundaries=bnd)
            trace += coords[j]
        values[ct] = trace
    return values


def compare_with_bar(n, cache=None):
    """Triple-oracle agreement for the one-dimensional operad.

    Returns a dict with the three homology summaries (partition flags,
    tree bar construction, normalized simplicial bar) and a match flag.
    """
    from .barcobar import reduced_bar, simplicial_bar_complex
    from .opalg import LEFT_MODULE, RIGHT_MODULE, builtin, unit_module
    if not 1 <= n <= 5:
        raise BoundsError("compare_with_bar is a desk-scale check (n <= 5)")
    part = homology(partition_complex(n))
    op = builtin("com", max(n, 1))
    bar = reduced_bar(op, n, cache).homology()
    simp = homology(simplicial_bar_complex(
        unit_module(op, RIGHT_MODULE), op, unit_module(op, LEFT_MODULE), n))
    return {
        "partition": part,
        "bar": bar,
        "simplicial": simp,
        "match": part == bar == simp,
    }
