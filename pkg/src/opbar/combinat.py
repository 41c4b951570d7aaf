"""Small combinatorial helpers: set partitions and permutation words."""

from __future__ import annotations

from functools import lru_cache


def set_partitions(items):
    """All partitions of a sequence into nonempty blocks, canonicalized.

    Blocks are sorted tuples; the partition lists blocks by least element.
    """
    items = sorted(items)
    if not items:
        return
    first, rest = items[0], items[1:]
    if not rest:
        yield ((first,),)
        return
    for part in set_partitions(rest):
        for i, block in enumerate(part):
            merged = tuple(sorted(block + (first,)))
            yield _canon_partition(part[:i] + (merged,) + part[i + 1:])
        yield _canon_partition(((first,),) + part)


def _canon_partition(blocks):
    return tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0]))


def partitions_into_at_least_two(items):
    for part in set_partitions(items):
        if len(part) >= 2:
            yield part


def perm_compose(sigma, tau):
    """(sigma o tau)(i) = sigma(tau(i)); permutations as 1-based image tuples."""
    return tuple(sigma[tau[i] - 1] for i in range(len(tau)))

def perm_inverse(sigma):
    inv = [0] * len(sigma)
    for i, v in enumerate(sigma):
        inv[v - 1] = i + 1
    return tuple(inv)


def perm_identity(n):
    return tuple(range(1, n + 1))


def adjacent_word(sigma):
    """Write sigma as a product of adjacent transpositions s_i = (i, i+1).

    Returns indices (i_1, ..., i_k), 1-based, with
    sigma = s_{i_1} o s_{i_2} o ... o s_{i_k}.
    """
    n = len(sigma)
    word = []
    current = list(sigma)
    # Bubble the current permutation back to the identity; each swap on the
    # left of `current` is an adjacent factor of sigma read in order.
    while True:
        for i in range(n - 1):
            if current[i] > current[i + 1]:
                current[i], current[i + 1] = current[i + 1], current[i]
                word.append(i + 1)
                break
        else:
            break
    word.reverse()
    return tuple(word)


@lru_cache(maxsize=None)
def all_permutations(n):
    import itertools
    return tuple(itertools.permutations(range(1, n + 1)))


def cycle_type(sigma):
    """Sorted (descending) cycle lengths of a permutation."""
    n = len(sigma)
    seen = [False] * n
    out = []
    for i in range(n):
        if seen[i]:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = sigma[j] - 1
            length += 1
        out.append(length)
    return tuple(sorted(out, reverse=True))
