"""Symmetric sequences, operads, cooperads and one-sided (co)modules.

All structures are arity-indexed graded free modules with explicit sparse
matrices: symmetric actions are stored for the adjacent transpositions,
partial compositions P(m) (x) P(n) -> P(m+n-1) for canonical index sets,
left-module actions per set partition, right-module actions as partials.
General instances are derived through the symmetric action.  Every axiom
(Coxeter relations, associativity, equivariance, units, pentagons) is an
executable matrix identity checked on construction.

Tensor bases are ordered row-major over the factors' (degree, index)
global orders.  All structure maps preserve degree, so tensor products of
maps are plain Kronecker products; Koszul signs enter only through
explicit factor reorderings.
"""

from __future__ import annotations

import itertools
import urllib.parse
from fractions import Fraction

from .combinat import (
    adjacent_word,
    perm_identity,
    perm_inverse,
    set_partitions,
)
from .errors import BoundsError, ParseError, ValidationError
from .exactla import (
    INT,
    RAT,
    ExactMatrix,
    GradedFreeModule,
    flatten_index,
    koszul_sign,
)

LEFT_MODULE = "left_module"
RIGHT_MODULE = "right_module"
LEFT_COMODULE = "left_comodule"
RIGHT_COMODULE = "right_comodule"
SIDES = (LEFT_MODULE, RIGHT_MODULE, LEFT_COMODULE, RIGHT_COMODULE)

DEFAULT_MAX_ARITY = 6
MAX_BUILTIN_ARITY = 8


# ---------------------------------------------------------------------------
# permutation plumbing


def outer_insertion_perm(sigma, a, n):
    """Permutation of {1..m+n-1} induced by sigma in Sigma_m on A u_a B."""
    m = len(sigma)
    size = m + n - 1

    def pos(slot, x):
        return x if x < slot else x + n - 1

    rho = [0] * size
    sa = sigma[a - 1]
    for x in range(1, m + 1):
        if x == a:
            continue
        rho[pos(a, x) - 1] = pos(sa, sigma[x - 1])
    for j in range(1, n + 1):
        rho[a - 1 + j - 1] = sa - 1 + j
    return tuple(rho)


def inner_insertion_perm(m, a, tau):
    """Permutation of {1..m+n-1} induced by tau in Sigma_n on the block."""
    n = len(tau)
    rho = list(range(1, m + n))
    for j in range(1, n + 1):
        rho[a - 1 + j - 1] = a - 1 + tau[j - 1]
    return tuple(rho)


def block_sort_perm(keys):
    """tau with tau[i] = sorted position of keys[i] (0-based); keys distinct."""
    ranks = {k: r for r, k in enumerate(sorted(keys))}
    return tuple(ranks[k] for k in keys)


# ---------------------------------------------------------------------------
# symmetric sequences


class SymSeq:
    """Arity-indexed graded free modules with symmetric-group actions."""

    def __init__(self, ring, components, actions, check=True, max_arity=None):
        self.ring = ring
        self.components = {int(n): c for n, c in components.items()}
        if max_arity is None:
            max_arity = max(self.components) if self.components else 0
        self.max_arity = max_arity
        self.actions = {int(n): tuple(mats) for n, mats in actions.items()
                        if mats}
        self._action_cache = {}
        if check:
            self._validate()

    def component(self, n):
        c = self.components.get(n)
        if c is None:
            c = GradedFreeModule({})
        return c

    def rank(self, n):
        return self.component(n).total_rank()

    def degree_of(self, n, idx):
        return self.component(n).degree_of(idx)

    def generator_action(self, n, i):
        """Matrix of the adjacent transposition s_i on arity n."""
        mats = self.actions.get(n, ())
        if not 1 <= i <= n - 1 or i > len(mats):
            raise ValidationError(f"no action generator s_{i} at arity {n}")
        return mats[i - 1]

    def action(self, n, sigma):
        """Matrix of an arbitrary permutation, composed from generators."""
        sigma = tuple(sigma)
        key = (n, sigma)
        cached = self._action_cache.get(key)
        if cached is not None:
            return cached
        if len(sigma) != n:
            raise ValidationError(f"permutation length {len(sigma)} != arity {n}")
        mat = ExactMatrix.identity(self.rank(n), ring=self.ring)
        if self.rank(n):
            for i in adjacent_word(sigma):
                mat = mat * self.generator_action(n, i)
        self._action_cache[key] = mat
        return mat

    def _validate(self):
        for n, c in self.components.items():
            r = c.total_rank()
            mats = self.actions.get(n, ())
            if r == 0 and not mats:
                continue
            if n >= 2 and len(mats) != n - 1:
                raise ValidationError(
                    f"arity {n} needs {n - 1} transposition matrices")
            for i, m in enumerate(mats, start=1):
                if m.nrows != r or m.ncols != r:
                    raise ValidationError(f"action s_{i} at arity {n} misshapen")
                for (row, col), _v in m.entries():
                    if c.degree_of(row) != c.degree_of(col):
                        raise ValidationError(
                            f"action s_{i} at arity {n} does not preserve degree")
            ident = ExactMatrix.identity(r, ring=self.ring)
            for i, m in enumerate(mats, start=1):
                if m * m != ident:
                    raise ValidationError(f"Coxeter s_{i}^2 = 1 fails at arity {n}")
            for i in range(1, len(mats)):
                prod = mats[i - 1] * mats[i]
                if prod * prod * prod != ident:
                    raise ValidationError(
                        f"Coxeter braid relation fails at arity {n}, s_{i}")
            for i in range(1, len(mats) + 1):
                for j in range(i + 2, len(mats) + 1):
                    a, b = mats[i - 1], mats[j - 1]
                    if a * b != b * a:
                        raise ValidationError(
                            f"Coxeter commutation fails at arity {n} ({i},{j})")

    def dual_symseq(self):
        comps = {n: c.negated() for n, c in self.components.items()}
        acts = {n: tuple(m.transpose() for m in mats)
                for n, mats in self.actions.items()}
        return SymSeq(self.ring, comps, acts, check=False)

    def __eq__(self, other):
        if not isinstance(other, SymSeq):
            return NotImplemented
        return (self.ring == other.ring and self.components == other.components
                and self.actions == other.actions)


# ---------------------------------------------------------------------------
# elementwise identity checking


def _tensor_sizes(parts):
    return [p.total_rank() for p in parts]


def _columns(sizes):
    return itertools.product(*(range(s) for s in sizes))


def _maps_equal(sizes, f, g):
    """Compare two (multi-index -> sparse dict) linear maps columnwise."""
    for multi in _columns(sizes):
        lhs = f(multi)
        rhs = g(multi)
        if {k: v for k, v in lhs.items() if v != 0} != \
                {k: v for k, v in rhs.items() if v != 0}:
            return multi
    return None


def _scaled(d, c):
    return {k: c * v for k, v in d.items()}


def _acc(target, d, c=1):
    for k, v in d.items():
        w = target.get(k, 0) + c * v
        if w == 0:
            target.pop(k, None)
        else:
            target[k] = w


def validate_operad_data(ss, comp, what="operad"):
    """Associativity, symmetry, unit and equivariance for partial maps.

    comp: (m, a, n) -> ExactMatrix from P(m) (x) P(n) to P(m+n-1).
    Used directly for operads and on transposed data for cooperads.
    """
    max_arity = ss.max_arity
    if ss.rank(1) != 1 or ss.component(1).degrees() != [0]:
        raise ValidationError(f"{what} is not reduced: arity 1 is not the unit")

    def rk(n):
        return ss.rank(n)

    # Units: composing with the arity-1 generator is the identity.
    for n in range(1, max_arity + 1):
        if rk(n) == 0:
            continue
        left = comp(1, 1, n)
        for j in range(rk(n)):
            if left.column(j) != {j: 1}:
                raise ValidationError(f"{what} axiom (3) fails at arity {n}")
        for a in range(1, n + 1):
            right = comp(n, a, 1)
            for i in range(rk(n)):
                if right.column(i) != {i: 1}:
                    raise ValidationError(
                        f"{what} axiom (4) fails at arity {n}, slot {a}")

    # Axiom (1): nested insertion associativity.
    for m in range(1, max_arity + 1):
        for n in range(1, max_arity + 1):
            for p in range(1, max_arity + 1):
                if m + n + p - 2 > max_arity or 1 in (m, n, p):
                    continue
                if rk(m) * rk(n) * rk(p) == 0:
                    continue
                for a in range(1, m + 1):
                    for b in range(1, n + 1):
                        c1 = comp(m, a, n)
                        c2 = comp(m + n - 1, a + b - 1, p)
                        d1 = comp(n, b, p)
                        d2 = comp(m, a, n + p - 1)

                        def lhs(multi, c1=c1, c2=c2, n=n, p=p):
                            xi, yi, zi = multi
                            out = {}
                            for w, cc in c1.column(xi * rk(n) + yi).items():
                                _acc(out, c2.column(w * rk(p) + zi), cc)
                            return out

                        def rhs(multi, d1=d1, d2=d2, n=n, p=p):
                            xi, yi, zi = multi
                            out = {}
                            for w, cc in d1.column(yi * rk(p) + zi).items():
                                _acc(out, d2.column(xi * rk(n + p - 1) + w), cc)
                            return out

                        bad = _maps_equal([rk(m), rk(n), rk(p)], lhs, rhs)
                        if bad is not None:
                            raise ValidationError(
                                f"{what} axiom (1) fails at "
                                f"(m,n,p)=({m},{n},{p}), a={a}, b={b}")

    # Axiom (2): disjoint insertions commute up to the Koszul swap.
    for m in range(2, max_arity + 1):
        for n in range(2, max_arity + 1):
            for p in range(2, max_arity + 1):
                if m + n + p - 2 > max_arity:
                    continue
                if rk(m) * rk(n) * rk(p) == 0:
                    continue
                for a in range(1, m + 1):
                    for a2 in range(a + 1, m + 1):
                        c1 = comp(m, a, n)
                        c2 = comp(m + n - 1, a2 + n - 1, p)
                        d1 = comp(m, a2, p)
                        d2 = comp(m + p - 1, a, n)

                        def lhs(multi, c1=c1, c2=c2):
                            xi, yi, zi = multi
                            out = {}
                            for w, cc in c1.column(xi * rk(n) + yi).items():
                                _acc(out, c2.column(w * rk(p) + zi), cc)
                            return out

                        def rhs(multi, d1=d1, d2=d2, n=n, p=p, m=m):
                            xi, yi, zi = multi
                            sgn = 1
                            dy = ss.degree_of(n, yi)
                            dz = ss.degree_of(p, zi)
                            if dy % 2 and dz % 2:
                                sgn = -1
                            out = {}
                            for w, cc in d1.column(xi * rk(p) + zi).items():
                                _acc(out, d2.column(w * rk(n) + yi), sgn * cc)
                            return out

                        bad = _maps_equal([rk(m), rk(n), rk(p)], lhs, rhs)
                        if bad is not None:
                            raise ValidationError(
                                f"{what} axiom (2) fails at "
                                f"(m,n,p)=({m},{n},{p}), a={a}, a'={a2}")

    # Equivariance under the stored generators.
    for m in range(1, max_arity + 1):
        for n in range(1, max_arity + 1):
            if m + n - 1 > max_arity or rk(m) * rk(n) == 0:
                continue
            for a in range(1, m + 1):
                base = comp(m, a, n)
                for i in range(1, m):
                    sigma = list(perm_identity(m))
                    sigma[i - 1], sigma[i] = sigma[i], sigma[i - 1]
                    sigma = tuple(sigma)
                    rho = outer_insertion_perm(sigma, a, n)
                    lhs_m = ss.action(m + n - 1, rho) * base
                    act = ss.generator_action(m, i)
                    rhs_m = comp(m, sigma[a - 1], n) * act.kron(
                        ExactMatrix.identity(rk(n), ring=ss.ring))
                    if lhs_m != rhs_m:
                        raise ValidationError(
                            f"{what} outer equivariance fails at "
                            f"(m,a,n)=({m},{a},{n}), s_{i}")
                for j in range(1, n):
                    tau = list(perm_identity(n))
                    tau[j - 1], tau[j] = tau[j], tau[j - 1]
                    tau = tuple(tau)
                    rho = inner_insertion_perm(m, a, tau)
                    lhs_m = ss.action(m + n - 1, rho) * base
                    rhs_m = base * ExactMatrix.identity(rk(m), ring=ss.ring).kron(
                        ss.generator_action(n, j))
                    if lhs_m != rhs_m:
                        raise ValidationError(
                            f"{what} inner equivariance fails at "
                            f"(m,a,n)=({m},{a},{n}), s_{j}")


class Operad:
    """Reduced operad: SymSeq plus partial composition matrices."""

    def __init__(self, symseq, comp, name="operad", check=True):
        self.symseq = symseq
        self.name = name
        self.ring = symseq.ring
        self.max_arity = symseq.max_arity
        self.comp_maps = {tuple(k): v for k, v in comp.items()}
        self._full_cache = {}
        if check:
            validate_operad_data(symseq, self.comp, what=f"operad {name}")

    @property
    def reduced(self):
        return True

    def component(self, n):
        return self.symseq.component(n)

    def rank(self, n):
        return self.symseq.rank(n)

    def action(self, n, sigma):
        return self.symseq.action(n, sigma)

    def comp(self, m, a, n):
        mat = self.comp_maps.get((m, a, n))
        if mat is None:
            raise ValidationError(f"no composition matrix for ({m},{a},{n})")
        expected = (self.rank(m + n - 1), self.rank(m) * self.rank(n))
        if (mat.nrows, mat.ncols) != expected:
            raise ValidationError(f"composition ({m},{a},{n}) misshapen")
        return mat

    def full_composition(self, inner_arities):
        """Matrix of P(s) (x) P(n_1) (x) ... (x) P(n_s) -> P(sum n_i).

        Derived by composing partials left to right; consumed factors are
        always adjacent, so no Koszul signs arise.
        """
        key = tuple(inner_arities)
        cached = self._full_cache.get(key)
        if cached is not None:
            return cached
        s = len(key)
        sizes = [self.rank(s)] + [self.rank(n) for n in key]
        target = self.rank(sum(key))
        entries = {}
        for multi in _columns(sizes):
            vec = {multi[0]: 1}
            pos = 1
            arity = s
            for step, n_i in enumerate(key):
                mat = self.comp(arity, pos, n_i)
                nxt = {}
                for x, c in vec.items():
                    _acc(nxt, mat.column(x * self.rank(n_i) + multi[1 + step]), c)
                vec = nxt
                arity = arity + n_i - 1
                pos += n_i
            col = flatten_index(sizes, multi)
            for row, v in vec.items():
                entries[(row, col)] = v
        mat = ExactMatrix(target, _prod(sizes), entries, ring=self.ring)
        self._full_cache[key] = mat
        return mat

    def __eq__(self, other):
        if not isinstance(other, Operad):
            return NotImplemented
        return self.symseq == other.symseq and self.comp_maps == other.comp_maps


def _prod(xs):
    out = 1
    for x in xs:
        out *= x
    return out


class Cooperad:
    """Reduced cooperad: SymSeq plus partial cocomposition matrices.

    Validated through the observation that the transposed data on the
    dual symmetric sequence is an operad.
    """

    def __init__(self, symseq, cocomp, name="cooperad", check=True):
        self.symseq = symseq
        self.name = name
        self.ring = symseq.ring
        self.max_arity = symseq.max_arity
        self.cocomp_maps = {tuple(k): v for k, v in cocomp.items()}
        if check:
            dual_ss = symseq.dual_symseq()
            validate_operad_data(
                dual_ss,
                lambda m, a, n: self.cocomp(m, a, n).transpose(),
                what=f"cooperad {name}")

    @property
    def reduced(self):
        return True

    def component(self, n):
        return self.symseq.component(n)

    def rank(self, n):
        return self.symseq.rank(n)

    def action(self, n, sigma):
        return self.symseq.action(n, sigma)

    def cocomp(self, m, a, n):
        mat = self.cocomp_maps.get((m, a, n))
        if mat is None:
            raise ValidationError(f"no cocomposition matrix for ({m},{a},{n})")
        expected = (self.rank(m) * self.rank(n), self.rank(m + n - 1))
        if (mat.nrows, mat.ncols) != expected:
            raise ValidationError(f"cocomposition ({m},{a},{n}) misshapen")
        return mat

    def __eq__(self, other):
        if not isinstance(other, Cooperad):
            return NotImplemented
        return self.symseq == other.symseq and self.cocomp_maps == other.cocomp_maps


# ---------------------------------------------------------------------------
# one-sided modules and comodules


def canonical_partition(blocks):
    return tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0]))


def _partition_of(n):
    return tuple(range(1, n + 1))


class SidedModule:
    """One-sided module or comodule with explicit structure matrices.

    Left-sided structure maps are stored per canonical set partition of
    {1..n}; right-sided ones as partials keyed (m, a, n).  Missing keys
    are zero maps.
    """

    def __init__(self, side, symseq, over, maps, name="module", check=True):
        if side not in SIDES:
            raise ValidationError(f"unknown side {side!r}")
        self.side = side
        self.symseq = symseq
        self.over = over
        self.name = name
        self.ring = symseq.ring
        self.max_arity = min(symseq.max_arity, over.max_arity)
        self.maps = dict(maps)
        self._full_cache = {}
        if check:
            self._validate()

    def component(self, n):
        return self.symseq.component(n)

    def rank(self, n):
        return self.symseq.rank(n)

    def action(self, n, sigma):
        return self.symseq.action(n, sigma)

    # -- raw accessors (zero when absent) --

    def right_partial(self, m, a, n):
        """M(m) (x) P(n) -> M(m+n-1) for right modules."""
        shape = (self.rank(m + n - 1), self.rank(m) * self.over.rank(n))
        return self._get((m, a, n), shape)

    def right_copartial(self, m, a, n):
        """M(m+n-1) -> M(m) (x) Q(n) for right comodules."""
        shape = (self.rank(m) * self.over.rank(n), self.rank(m + n - 1))
        return self._get((m, a, n), shape)

    def left_action(self, blocks):
        """P(r) (x) M(B_1) (x) ... (x) M(B_r) -> M(n) for left modules."""
        blocks = canonical_partition(blocks)
        n = sum(len(b) for b in blocks)
        cols = self.over.rank(len(blocks)) * _prod(
            self.rank(len(b)) for b in blocks)
        return self._get(blocks, (self.rank(n), cols))

    def left_coaction(self, blocks):
        """M(n) -> Q(r) (x) M(B_1) (x) ... (x) M(B_r) for left comodules."""
        blocks = canonical_partition(blocks)
        n = sum(len(b) for b in blocks)
        rows = self.over.rank(len(blocks)) * _prod(
            self.rank(len(b)) for b in blocks)
        return self._get(blocks, (rows, self.rank(n)))

    def _get(self, key, shape):
        mat = self.maps.get(key)
        if mat is None:
            return ExactMatrix.zero(*shape, ring=self.ring)
        if (mat.nrows, mat.ncols) != shape:
            raise ValidationError(f"structure map {key} misshapen: "
                                  f"{(mat.nrows, mat.ncols)} != {shape}")
        return mat

    def right_full_action(self, inner_arities):
        """M(r) (x) P(n_1) (x) ... (x) P(n_r) -> M(sum n_i), via partials."""
        key = ("rfull", tuple(inner_arities))
        cached = self._full_cache.get(key)
        if cached is not None:
            return cached
        arities = tuple(inner_arities)
        r = len(arities)
        sizes = [self.rank(r)] + [self.over.rank(n) for n in arities]
        entries = {}
        for multi in _columns(sizes):
            vec = {multi[0]: 1}
            pos = 1
            arity = r
            for step, n_i in enumerate(arities):
                mat = self.right_partial(arity, pos, n_i)
                nxt = {}
                for x, c in vec.items():
                    _acc(nxt, mat.column(x * self.over.rank(n_i) + multi[1 + step]), c)
                vec = nxt
                arity = arity + n_i - 1
                pos += n_i
            col = flatten_index(sizes, multi)
            for row, v in vec.items():
                entries[(row, col)] = v
        mat = ExactMatrix(self.rank(sum(arities)), _prod(sizes), entries,
                          ring=self.ring)
        self._full_cache[key] = mat
        return mat

    # -- validation --

    def _validate(self):
        if self.side == LEFT_MODULE:
            _validate_left_module(self, transposed=False)
        elif self.side == LEFT_COMODULE:
            _validate_left_module(self, transposed=True)
        elif self.side == RIGHT_MODULE:
            _validate_right_module(self, transposed=False)
        else:
            _validate_right_module(self, transposed=True)

    def __eq__(self, other):
        if not isinstance(other, SidedModule):
            return NotImplemented
        return (self.side == other.side and self.symseq == other.symseq
                and self.maps == other.maps)


def _validate_left_module(mod, transposed):
    """Unit, pentagon and equivariance for a left (co)module.

    For comodules the checks run on transposed matrices over the dual
    sequences, where they are literally the module identities.
    """
    over = mod.over
    ring = mod.ring
    label = f"{mod.side} {mod.name}"

    if transposed:
        def act_blocks(blocks):
            return mod.left_coaction(blocks).transpose()

        def p_comp(s, inner):
            # Dual full cocomposition: transpose of iterated cocompositions.
            return _full_cocomposition(over, inner).transpose()

        def m_action(n, sigma):
            return mod.action(n, perm_inverse(sigma)).transpose()

        def p_action(n, sigma):
            return over.action(n, perm_inverse(sigma)).transpose()

        def m_degree(n, i):
            return -mod.symseq.degree_of(n, i)

        def p_degree(n, i):
            return -over.symseq.degree_of(n, i)
    else:
        def act_blocks(blocks):
            return mod.left_action(blocks)

        def p_comp(s, inner):
            return over.full_composition(inner)

        def m_action(n, sigma):
            return mod.action(n, sigma)

        def p_action(n, sigma):
            return over.action(n, sigma)

        def m_degree(n, i):
            return mod.symseq.degree_of(n, i)

        def p_degree(n, i):
            return over.symseq.degree_of(n, i)

    # Unit: the trivial partition acts as the identity.
    for n in range(1, mod.max_arity + 1):
        if mod.rank(n) == 0:
            continue
        mat = act_blocks((_partition_of(n),))
        ident = ExactMatrix.identity(mod.rank(n), ring=ring)
        if mat != ident:
            raise ValidationError(f"{label}: unit action is not the identity "
                                  f"at arity {n}")

    # Pentagon: acting after composing equals acting twice.
    for n in range(1, mod.max_arity + 1):
        if mod.rank(n) == 0:
            continue
        for lam in set_partitions(range(1, n + 1)):
            r = len(lam)
            if over.rank(r) == 0:
                continue
            for grouping in set_partitions(range(r)):
                groups = sorted(grouping, key=lambda g: lam[g[0]][0])
                _check_left_pentagon(
                    mod, over, lam, groups, label,
                    act_blocks, p_comp, p_action, m_degree, p_degree)

    # Equivariance under adjacent transpositions of the labels.
    for n in range(2, mod.max_arity + 1):
        if mod.rank(n) == 0:
            continue
        for lam in set_partitions(range(1, n + 1)):
            base = act_blocks(lam)
            if base.is_zero():
                pass
            for i in range(1, n):
                sigma = list(perm_identity(n))
                sigma[i - 1], sigma[i] = sigma[i], sigma[i - 1]
                sigma = tuple(sigma)
                _check_left_equivariance(
                    mod, over, lam, sigma, label,
                    act_blocks, m_action, p_action, m_degree, p_degree)


def _check_left_pentagon(mod, over, lam, groups, label,
                         act_blocks, p_comp, p_action, m_degree, p_degree):
    """One instance of the left-module associativity identity.

    lam partitions {1..n} into blocks B_1..B_r (least-element order);
    groups partitions the block indices {0..r-1} into s groups (sorted by
    the least label of their first block), defining the coarsening mu.
    Domain factors: (p in P(s); q_1..q_s; m_1..m_r).
    """
    r = len(lam)
    s = len(groups)
    inner = tuple(len(g) for g in groups)
    mu_blocks = canonical_partition(
        tuple(tuple(x for bi in g for x in lam[bi]) for g in groups))
    p_sizes = [over.rank(s)] + [over.rank(k) for k in inner]
    m_sizes = [mod.rank(len(b)) for b in lam]
    sizes = p_sizes + m_sizes
    if _prod(sizes) == 0:
        return
    # Grouped order of lambda-blocks vs global least-element order.
    grouped = [bi for g in groups for bi in g]
    rho = block_sort_perm([lam[bi][0] for bi in grouped])
    gamma = p_comp(s, inner)
    act_lam = act_blocks(lam)
    act_rho = p_action(r, _perm_from_zero(rho))

    def path_a(multi):
        qpart, mpart = multi[:1 + s], multi[1 + s:]
        vec = {}
        for w, c in gamma.column(flatten_index(p_sizes, qpart)).items():
            _acc(vec, act_rho.column(w), c)
        out = {}
        for w, c in vec.items():
            col2 = flatten_index([over.rank(r)] + m_sizes, (w,) + tuple(mpart))
            _acc(out, act_lam.column(col2), c)
        return out

    # Path B: each q_i acts on its group of m's, then p acts via mu.
    act_mu = act_blocks(mu_blocks)
    group_parts = []
    for g in groups:
        union = [x for bi in g for x in lam[bi]]
        sub_blocks = canonical_partition(
            tuple(_relabel_block(lam[bi], union) for bi in g))
        group_parts.append((tuple(g), sub_blocks))
    musizes = [over.rank(s)] + [mod.rank(sum(len(lam[bi]) for bi in g))
                                for g, _sb in group_parts]

    def path_b(multi):
        pp = multi[0]
        qs = multi[1:1 + s]
        ms = multi[1 + s:]
        degs = tuple([p_degree(inner[i], qs[i]) for i in range(s)]
                     + [m_degree(len(lam[bi]), ms[bi]) for bi in range(r)])
        # Interleave each q_i directly in front of its m-group.
        seq = []
        for i, (g, _sb) in enumerate(group_parts):
            seq.append(("q", i))
            seq.extend(("m", bi) for bi in g)
        src = [("q", i) for i in range(s)] + [("m", bi) for bi in range(r)]
        perm = tuple(seq.index(x) for x in src)
        sgn = koszul_sign(degs, perm)
        group_vecs = []
        for i, (g, sub_blocks) in enumerate(group_parts):
            act_g = act_blocks(sub_blocks)
            csizes = [over.rank(inner[i])] + [mod.rank(len(lam[bi])) for bi in g]
            cmulti = (qs[i],) + tuple(ms[bi] for bi in g)
            group_vecs.append(act_g.column(flatten_index(csizes, cmulti)))
        out = {}
        for combo in itertools.product(*(v.items() for v in group_vecs)):
            c = sgn
            idxs = []
            for w, cc in combo:
                c *= cc
                idxs.append(w)
            col2 = flatten_index(musizes, (pp,) + tuple(idxs))
            _acc(out, act_mu.column(col2), c)
        return out

    bad = _maps_equal(sizes, path_a, path_b)
    if bad is not None:
        raise ValidationError(
            f"{label}: pentagon fails for partition {lam} grouped {groups} "
            f"at column {bad}")


def _perm_from_zero(perm):
    return tuple(p + 1 for p in perm)


def _relabel_block(block, universe):
    ordered = sorted(universe)
    pos = {x: i + 1 for i, x in enumerate(ordered)}
    return tuple(pos[x] for x in block)


def _check_left_equivariance(mod, over, lam, sigma, label,
                             act_blocks, m_action, p_action,
                             m_degree, p_degree):
    n = sum(len(b) for b in lam)
    r = len(lam)
    sigma_map = {i + 1: sigma[i] for i in range(n)}
    new_blocks_raw = [tuple(sorted(sigma_map[x] for x in b)) for b in lam]
    order = block_sort_perm([b[0] for b in new_blocks_raw])
    new_blocks = canonical_partition(new_blocks_raw)
    act_new = act_blocks(new_blocks)
    base = act_blocks(lam)
    rho = _perm_from_zero(order)
    act_rho = p_action(r, rho)
    within = []
    for bi, b in enumerate(lam):
        imgs = [sigma_map[x] for x in b]
        tau = block_sort_perm(imgs)
        within.append(m_action(len(b), _perm_from_zero(tau)))
    m_sizes = [mod.rank(len(b)) for b in lam]
    sizes = [over.rank(r)] + m_sizes

    def lhs(multi):
        # sigma . (action) = action(permuted inputs)
        col = flatten_index(sizes, multi)
        out = {}
        for wrow, c in base.column(col).items():
            _acc(out, m_action(n, sigma).column(wrow), c)
        return out

    def rhs(multi):
        pp, ms = multi[0], multi[1:]
        degs = [m_degree(len(lam[bi]), ms[bi]) for bi in range(r)]
        sgn = koszul_sign(tuple(degs), order)
        vecs = [within[bi].column(ms[bi]) for bi in range(r)]
        pvec = act_rho.column(pp)
        out = {}
        for pw, pc in pvec.items():
            for combo in itertools.product(*(v.items() for v in vecs)):
                c = pc * sgn
                idxs = [0] * r
                for bi, (w, cc) in enumerate(combo):
                    c *= cc
                    idxs[order[bi]] = w
                col2 = flatten_index(
                    [over.rank(r)] + [mod.rank(len(new_blocks[j]))
                                      for j in range(r)],
                    (pw,) + tuple(idxs))
                _acc(out, act_new.column(col2), c)
        return out

    bad = _maps_equal(sizes, lhs, rhs)
    if bad is not None:
        raise ValidationError(
            f"{label}: equivariance fails for partition {lam}, "
            f"transposition at {sigma}, column {bad}")


def _validate_right_module(mod, transposed):
    """Right-module axioms via the operad checker on combined data.

    A right module is the same shape of data as an operad with two
    colours; the mixed identities are checked directly.
    """
    over = mod.over
    label = f"{mod.side} {mod.name}"

    if transposed:
        def partial(m, a, n):
            return mod.right_copartial(m, a, n).transpose()

        def p_comp(m, a, n):
            return over.cocomp(m, a, n).transpose()

        def m_degree(n, i):
            return -mod.symseq.degree_of(n, i)

        def p_degree(n, i):
            return -over.symseq.degree_of(n, i)

        def m_action(n, sigma):
            return mod.action(n, perm_inverse(sigma)).transpose()

        def p_action(n, sigma):
            return over.action(n, perm_inverse(sigma)).transpose()
    else:
        def partial(m, a, n):
            return mod.right_partial(m, a, n)

        def p_comp(m, a, n):
            return over.comp(m, a, n)

        def m_degree(n, i):
            return mod.symseq.degree_of(n, i)

        def p_degree(n, i):
            return over.symseq.degree_of(n, i)

        def m_action(n, sigma):
            return mod.action(n, sigma)

        def p_action(n, sigma):
            return over.action(n, sigma)

    max_arity = mod.max_arity

    def rk_m(n):
        return mod.rank(n)

    def rk_p(n):
        return over.rank(n)

    # Unit.
    for m in range(1, max_arity + 1):
        if rk_m(m) == 0:
            continue
        for a in range(1, m + 1):
            mat = partial(m, a, 1)
            for i in range(rk_m(m)):
                if mat.column(i) != {i: 1}:
                    raise ValidationError(f"{label}: unit fails at ({m},{a})")

    # (x .a y) .{a+b-1} z == x .a (y o_b z)
    for m in range(1, max_arity + 1):
        for n in range(2, max_arity + 1):
            for p in range(2, max_arity + 1):
                if m + n + p - 2 > max_arity or rk_m(m) * rk_p(n) * rk_p(p) == 0:
                    continue
                for a in range(1, m + 1):
                    for b in range(1, n + 1):
                        c1 = partial(m, a, n)
                        c2 = partial(m + n - 1, a + b - 1, p)
                        d1 = p_comp(n, b, p)
                        d2 = partial(m, a, n + p - 1)

                        def lhs(multi):
                            xi, yi, zi = multi
                            out = {}
                            for w, cc in c1.column(xi * rk_p(n) + yi).items():
                                _acc(out, c2.column(w * rk_p(p) + zi), cc)
                            return out

                        def rhs(multi):
                            xi, yi, zi = multi
                            out = {}
                            for w, cc in d1.column(yi * rk_p(p) + zi).items():
                                _acc(out, d2.column(xi * rk_p(n + p - 1) + w), cc)
                            return out

                        bad = _maps_equal([rk_m(m), rk_p(n), rk_p(p)], lhs, rhs)
                        if bad is not None:
                            raise ValidationError(
                                f"{label}: mixed associativity fails at "
                                f"({m},{n},{p}), a={a}, b={b}")

    # Disjoint slots commute with the Koszul swap.
    for m in range(2, max_arity + 1):
        for n in range(2, max_arity + 1):
            for p in range(2, max_arity + 1):
                if m + n + p - 2 > max_arity or rk_m(m) * rk_p(n) * rk_p(p) == 0:
                    continue
                for a in range(1, m + 1):
                    for a2 in range(a + 1, m + 1):
                        c1 = partial(m, a, n)
                        c2 = partial(m + n - 1, a2 + n - 1, p)
                        d1 = partial(m, a2, p)
                        d2 = partial(m + p - 1, a, n)

                        def lhs(multi):
                            xi, yi, zi = multi
                            out = {}
                            for w, cc in c1.column(xi * rk_p(n) + yi).items():
                                _acc(out, c2.column(w * rk_p(p) + zi), cc)
                            return out

                        def rhs(multi):
                            xi, yi, zi = multi
                            sgn = 1
                            if p_degree(n, yi) % 2 and p_degree(p, zi) % 2:
                                sgn = -1
                            out = {}
                            for w, cc in d1.column(xi * rk_p(p) + zi).items():
                                _acc(out, d2.column(w * rk_p(n) + yi), sgn * cc)
                            return out

                        bad = _maps_equal([rk_m(m), rk_p(n), rk_p(p)], lhs, rhs)
                        if bad is not None:
                            raise ValidationError(
                                f"{label}: slot commutation fails at "
                                f"({m},{n},{p}), a={a}, a'={a2}")

    # Equivariance.
    for m in range(1, max_arity + 1):
        for n in range(2, max_arity + 1):
            if m + n - 1 > max_arity or rk_m(m) * rk_p(n) == 0:
                continue
            for a in range(1, m + 1):
                base = partial(m, a, n)
                for i in range(1, m):
                    sigma = list(perm_identity(m))
                    sigma[i - 1], sigma[i] = sigma[i], sigma[i - 1]
                    sigma = tuple(sigma)
                    rho = outer_insertion_perm(sigma, a, n)
                    lhs_m = m_action(m + n - 1, rho) * base
                    rhs_m = partial(m, sigma[a - 1], n) * m_action(m, sigma).kron(
                        ExactMatrix.identity(rk_p(n), ring=mod.ring))
                    if lhs_m != rhs_m:
                        raise ValidationError(
                            f"{label}: outer equivariance fails at "
                            f"({m},{a},{n}), s_{i}")
                for j in range(1, n):
                    tau = list(perm_identity(n))
                    tau[j - 1], tau[j] = tau[j], tau[j - 1]
                    tau = tuple(tau)
                    rho = inner_insertion_perm(m, a, tau)
                    lhs_m = m_action(m + n - 1, rho) * base
                    rhs_m = base * ExactMatrix.identity(rk_m(m), ring=mod.ring).kron(
                        p_action(n, tau))
                    if lhs_m != rhs_m:
                        raise ValidationError(
                            f"{label}: inner equivariance fails at "
                            f"({m},{a},{n}), s_{j}")


def _full_cocomposition(cooperad, inner_arities):
    """Q(sum n_i) -> Q(s) (x) Q(n_1) (x) ... (x) Q(n_s), iterated partials."""
    arities = tuple(inner_arities)
    s = len(arities)
    sizes = [cooperad.rank(s)] + [cooperad.rank(n) for n in arities]
    total = sum(arities)
    entries = {}
    # Transpose of the operad derivation: build the dual full composition
    # from the transposed cocompositions and transpose back.
    dual_ss = cooperad.symseq.dual_symseq()
    helper = Operad(dual_ss,
                    {(m, a, n): cooperad.cocomp(m, a, n).transpose()
                     for (m, a, n) in cooperad.cocomp_maps},
                    name="_dual_helper", check=False)
    return helper.full_composition(arities).transpose()


# ---------------------------------------------------------------------------
# composition product of symmetric sequences


def compose_product(m_seq, n_seq, arity):
    """The arity component of the composition product as a graded module.

    Basis labels are (partition, outer label, inner labels) triples; the
    direct sum runs over unordered partitions of {1..arity}.
    """
    if arity > m_seq.max_arity or arity > n_seq.max_arity:
        raise BoundsError(f"arity {arity} exceeds a factor's max_arity")
    spaces = {}
    for blocks in sorted(set_partitions(range(1, arity + 1)),
                         key=lambda b: (len(b), b)):
        r = len(blocks)
        outer = m_seq.component(r)
        inners = [n_seq.component(len(b)) for b in blocks]
        for od, olab in outer.basis():
            for combo in itertools.product(*(inn.basis() for inn in inners)):
                deg = od + sum(d for d, _ in combo)
                lab = (blocks, olab, tuple(l for _, l in combo))
                spaces.setdefault(deg, []).append(lab)
    return GradedFreeModule({d: tuple(v) for d, v in spaces.items()})


def compose_product_symseq(m_seq, n_seq, max_arity):
    """Composition product with its symmetric actions, as a SymSeq.

    A permutation relabels the partition; the outer factor is acted on by
    the induced block permutation, each inner factor by its within-block
    permutation, and reordering the inner factors contributes Koszul signs.
    """
    ring = m_seq.ring
    components = {n: compose_product(m_seq, n_seq, n)
                  for n in range(1, max_arity + 1)}
    actions = {}
    for n in range(2, max_arity + 1):
        module = components[n]
        mats = []
        for i in range(1, n):
            sigma = {x: x for x in range(1, n + 1)}
            sigma[i], sigma[i + 1] = i + 1, i
            entries = {}
            for col, (deg, lab) in enumerate(module.basis()):
                blocks, olab, inner_labs = lab
                r = len(blocks)
                new_raw = [tuple(sorted(sigma[x] for x in b)) for b in blocks]
                order = block_sort_perm([b[0] for b in new_raw])
                new_blocks = canonical_partition(new_raw)
                outer_mod = m_seq.component(r)
                odeg = deg - sum(
                    _label_degree(n_seq.component(len(b)), inner_labs[j])
                    for j, b in enumerate(blocks))
                ovec = m_seq.action(r, _perm_from_zero(order)).column(
                    outer_mod.index(odeg, olab))
                inner_vecs = []
                inner_degs = []
                for j, b in enumerate(blocks):
                    comp_b = n_seq.component(len(b))
                    dj = _label_degree(comp_b, inner_labs[j])
                    inner_degs.append(dj)
                    tau = block_sort_perm([sigma[x] for x in b])
                    inner_vecs.append(
                        n_seq.action(len(b), _perm_from_zero(tau)).column(
                            comp_b.index(dj, inner_labs[j])))
                sgn = koszul_sign(tuple(inner_degs), order)
                for ow, oc in ovec.items():
                    onew_deg, onew_lab = m_seq.component(r).basis()[ow]
                    for combo in itertools.product(
                            *(v.items() for v in inner_vecs)):
                        c = oc * sgn
                        placed = [None] * r
                        for j, (w, cc) in enumerate(combo):
                            c *= cc
                            comp_b = n_seq.component(len(blocks[j]))
                            placed[order[j]] = comp_b.basis()[w][1]
                        new_lab = (new_blocks, onew_lab, tuple(placed))
                        tdeg = onew_deg + sum(
                            _label_degree(n_seq.component(len(new_blocks[k])),
                                          placed[k]) for k in range(r))
                        row = module.index(tdeg, new_lab)
                        key = (row, col)
                        entries[key] = entries.get(key, 0) + c
            size = module.total_rank()
            mats.append(ExactMatrix(size, size, entries, ring=ring))
        actions[n] = tuple(mats)
    return SymSeq(ring, components, actions)


def _label_degree(module, label):
    for d in module.degrees():
        if label in module.labels(d):
            return d
    raise ValidationError(f"label {label!r} not in module")


# ---------------------------------------------------------------------------
# duality


def dual(structure):
    """Linear dual: degrees negated, matrices transposed, variance flipped."""
    if isinstance(structure, SymSeq):
        return structure.dual_symseq()
    if isinstance(structure, Operad):
        return Cooperad(structure.symseq.dual_symseq(),
                        {k: m.transpose() for k, m in structure.comp_maps.items()},
                        name=f"dual({structure.name})", check=False)
    if isinstance(structure, Cooperad):
        return Operad(structure.symseq.dual_symseq(),
                      {k: m.transpose() for k, m in structure.cocomp_maps.items()},
                      name=f"dual({structure.name})", check=False)
    if isinstance(structure, SidedModule):
        flip = {LEFT_MODULE: LEFT_COMODULE, LEFT_COMODULE: LEFT_MODULE,
                RIGHT_MODULE: RIGHT_COMODULE, RIGHT_COMODULE: RIGHT_MODULE}
        return SidedModule(flip[structure.side],
                           structure.symseq.dual_symseq(),
                           dual(structure.over),
                           {k: m.transpose() for k, m in structure.maps.items()},
                           name=f"dual({structure.name})", check=False)
    raise ValidationError(f"cannot dualize {type(structure).__name__}")


# ---------------------------------------------------------------------------
# builtins


def _trivial_actions(ranks, ring):
    return {n: tuple(ExactMatrix.identity(r, ring=ring) for _ in range(n - 1))
            for n, r in ranks.items() if n >= 2}


def builtin(name, max_arity=DEFAULT_MAX_ARITY, ring=INT):
    """Built-in structures: the operads com and ass, the unit sequence."""
    if not 1 <= max_arity <= MAX_BUILTIN_ARITY:
        raise ValidationError(f"max_arity {max_arity} outside 1..{MAX_BUILTIN_ARITY}")
    if name == "com":
        comps = {n: GradedFreeModule({0: ("e",)}) for n in range(1, max_arity + 1)}
        ss = SymSeq(ring, comps, _trivial_actions({n: 1 for n in comps}, ring))
        comp = {}
        for m in range(1, max_arity + 1):
            for n in range(1, max_arity + 1):
                if m + n - 1 > max_arity:
                    continue
                for a in range(1, m + 1):
                    comp[(m, a, n)] = ExactMatrix(1, 1, {(0, 0): 1}, ring=ring)
        return Operad(ss, comp, name="com")
    if name == "ass":
        return _builtin_ass(max_arity, ring)
    if name == "unit":
        return unit_symseq(ring)
    raise ValidationError(f"unknown builtin {name!r}")


def _ass_words(n):
    return tuple("".join(str(x) for x in w)
                 for w in sorted(itertools.permutations(range(1, n + 1))))


def _builtin_ass(max_arity, ring):
    comps = {}
    actions = {}
    index = {}
    for n in range(1, max_arity + 1):
        words = _ass_words(n)
        comps[n] = GradedFreeModule({0: words})
        index[n] = {w: i for i, w in enumerate(words)}
        mats = []
        for i in range(1, n):
            entries = {}
            for j, w in enumerate(words):
                relabelled = "".join(
                    str(i + 1) if ch == str(i) else str(i) if ch == str(i + 1)
                    else ch for ch in w)
                entries[(index[n][relabelled], j)] = 1
            mats.append(ExactMatrix(len(words), len(words), entries, ring=ring))
        actions[n] = tuple(mats)
    ss = SymSeq(ring, comps, actions)

    comp = {}
    for m in range(1, max_arity + 1):
        for n in range(1, max_arity + 1):
            if m + n - 1 > max_arity:
                continue
            for a in range(1, m + 1):
                entries = {}
                words_m = _ass_words(m)
                words_n = _ass_words(n)
                for im, wm in enumerate(words_m):
                    for jn, wn in enumerate(words_n):
                        word = []
                        for ch in wm:
                            x = int(ch)
                            if x == a:
                                word.extend(int(c) + a - 1 for c in wn)
                            elif x < a:
                                word.append(x)
                            else:
                                word.append(x + n - 1)
                        out = "".join(str(x) for x in word)
                        entries[(index[m + n - 1][out],
                                 im * len(words_n) + jn)] = 1
                comp[(m, a, n)] = ExactMatrix(
                    len(_ass_words(m + n - 1)),
                    len(words_m) * len(words_n), entries, ring=ring)
    return Operad(ss, comp, name="ass")


def unit_symseq(ring=INT, max_arity=MAX_BUILTIN_ARITY):
    """The unit symmetric sequence: rank one in arity 1, degree 0."""
    return SymSeq(ring, {1: GradedFreeModule({0: ("e",)})}, {},
                  max_arity=max_arity)


def unit_module(over, side):
    """The unit sequence as a one-sided (co)module over a reduced structure."""
    ring = over.ring
    comps = {n: GradedFreeModule({0: ("e",)}) if n == 1 else GradedFreeModule({})
             for n in range(1, over.max_arity + 1)}
    ss = SymSeq(ring, comps, {})
    maps = {}
    one = ExactMatrix(1, 1, {(0, 0): 1}, ring=ring)
    if side in (RIGHT_MODULE, RIGHT_COMODULE):
        maps[(1, 1, 1)] = one
    else:
        maps[((1,),)] = one
    return SidedModule(side, ss, over, maps, name="unit")


def builtin_sphere_comodule(r, max_arity=DEFAULT_MAX_ARITY, ring=INT,
                            over=None):
    """Left comodule of a sphere: rank one in degree r at every arity.

    The reduced diagonal vanishes on homology, so all cocompositions are
    zero except the unary component.
    """
    if over is None:
        over = dual(builtin("com", max_arity, ring=ring))
    comps = {n: GradedFreeModule({r: ("x",)}) for n in range(1, max_arity + 1)}
    ss = SymSeq(ring, comps, _trivial_actions({n: 1 for n in comps}, ring))
    maps = {}
    for n in range(1, max_arity + 1):
        maps[(_partition_of(n),)] = ExactMatrix(1, 1, {(0, 0): 1}, ring=ring)
    return SidedModule(LEFT_COMODULE, ss, over, maps, name=f"sphere{r}")


def builtin_sphere_module(r, max_arity=DEFAULT_MAX_ARITY, ring=INT, over=None):
    """Left module counterpart of the sphere: only the unary action acts."""
    if over is None:
        over = builtin("com", max_arity, ring=ring)
    comps = {n: GradedFreeModule({r: ("x",)}) for n in range(1, max_arity + 1)}
    ss = SymSeq(ring, comps, _trivial_actions({n: 1 for n in comps}, ring))
    maps = {}
    for n in range(1, max_arity + 1):
        maps[(_partition_of(n),)] = ExactMatrix(1, 1, {(0, 0): 1}, ring=ring)
    return SidedModule(LEFT_MODULE, ss, over, maps, name=f"sphere{r}-module")


def constant_comodule(module, coproduct, max_arity=DEFAULT_MAX_ARITY,
                      ring=INT, name="coalgebra"):
    """Left comodule over the cocommutative cooperad built from a coalgebra.

    module: GradedFreeModule X; coproduct: matrix X -> X (x) X (reduced,
    degree 0).  Coassociativity and graded cocommutativity are checked;
    the partition components are the iterated reduced coproducts.
    """
    over = dual(builtin("com", max_arity, ring=ring))
    rank = module.total_rank()
    if coproduct.nrows != rank * rank or coproduct.ncols != rank:
        raise ValidationError("coproduct must map X to X (x) X")
    for j in range(rank):
        dj = module.degree_of(j)
        for row, _v in coproduct.column(j).items():
            i1, i2 = divmod(row, rank)
            if module.degree_of(i1) + module.degree_of(i2) != dj:
                raise ValidationError("coproduct must preserve degree")
    # Coassociativity: (Delta (x) 1) Delta = (1 (x) Delta) Delta.
    left = {}
    right = {}
    for j in range(rank):
        lout, rout = {}, {}
        for row, v in coproduct.column(j).items():
            i1, i2 = divmod(row, rank)
            for row2, w in coproduct.column(i1).items():
                _acc(lout, {row2 * rank + i2: v * w})
            for row2, w in coproduct.column(i2).items():
                _acc(rout, {i1 * rank * rank + row2: v * w})
        left[j], right[j] = lout, rout
    if left != right:
        raise ValidationError("coproduct is not coassociative")
    # Graded cocommutativity: tau Delta = Delta.
    for j in range(rank):
        flipped = {}
        for row, v in coproduct.column(j).items():
            i1, i2 = divmod(row, rank)
            sgn = -1 if (module.degree_of(i1) % 2 and module.degree_of(i2) % 2) else 1
            _acc(flipped, {i2 * rank + i1: sgn * v})
        if flipped != dict(coproduct.column(j)):
            raise ValidationError("coproduct is not graded cocommutative")

    comps = {n: module for n in range(1, max_arity + 1)}
    ss = SymSeq(ring, comps,
                _trivial_actions({n: rank for n in comps}, ring))
    # Iterated coproducts Delta^(r): X -> X^(x r).
    iterated = {1: ExactMatrix.identity(rank, ring=ring)}
    for r in range(2, max_arity + 1):
        prev = iterated[r - 1]
        entries = {}
        for j in range(rank):
            for row, v in coproduct.column(j).items():
                i1, i2 = divmod(row, rank)
                for row2, w in prev.column(i2).items():
                    entries_key = (i1 * rank ** (r - 1) + row2, j)
                    entries[entries_key] = entries.get(entries_key, 0) + v * w
        iterated[r] = ExactMatrix(rank ** r, rank, entries, ring=ring)
    maps = {}
    for n in range(1, max_arity + 1):
        for blocks in set_partitions(range(1, n + 1)):
            r = len(blocks)
            # Q(r) is rank one in degree zero; prepend its index 0.
            maps[blocks] = iterated[r]
    return SidedModule(LEFT_COMODULE, ss, over, maps, name=name)


# ---------------------------------------------------------------------------
# on-disk format


FORMAT_HEADER = "OPBAR-STRUCTURE 1"


def _q(label):
    return urllib.parse.quote(str(label), safe="")


def _format_value(v):
    return str(v)


def dumps(structure):
    """Serialize a structure (plus any base operad) to the text format."""
    chunks = [FORMAT_HEADER]
    if isinstance(structure, SidedModule):
        chunks.append(_dump_one(structure.over))
        chunks.append(_dump_one(structure))
    else:
        chunks.append(_dump_one(structure))
    return "\n".join(chunks) + "\n"


def _dump_one(structure):
    lines = []
    if isinstance(structure, Operad):
        kind = "operad"
    elif isinstance(structure, Cooperad):
        kind = "cooperad"
    elif isinstance(structure, SidedModule):
        kind = structure.side
    elif isinstance(structure, SymSeq):
        kind = "symseq"
    else:
        raise ValidationError(f"cannot serialize {type(structure).__name__}")
    name = getattr(structure, "name", "symseq")
    ss = structure if isinstance(structure, SymSeq) else structure.symseq
    lines.append(f"kind {kind}")
    lines.append(f"name {name}")
    lines.append(f"ring {ss.ring}")
    lines.append(f"max_arity {ss.max_arity}")
    if isinstance(structure, SidedModule):
        lines.append(f"over {structure.over.name}")
    for n in sorted(ss.components):
        c = ss.components[n]
        lines.append(f"begin component {n}")
        for d in c.degrees():
            labs = " ".join(_q(lab) for lab in c.labels(d))
            lines.append(f"degree {d} {labs}")
        lines.append("end")
    for n in sorted(ss.actions):
        for i, m in enumerate(ss.actions[n], start=1):
            lines.append(f"begin action {n} {i}")
            lines.extend(f"{r} {c} {_format_value(v)}"
                         for (r, c), v in sorted(m.entries()))
            lines.append("end")
    if isinstance(structure, Operad):
        items = [("comp", k, v) for k, v in sorted(structure.comp_maps.items())]
    elif isinstance(structure, Cooperad):
        items = [("cocomp", k, v) for k, v in sorted(structure.cocomp_maps.items())]
    elif isinstance(structure, SidedModule):
        items = [("smap", k, v) for k, v in sorted(structure.maps.items())]
    else:
        items = []
    for tag, key, m in items:
        key_str = _encode_key(key)
        lines.append(f"begin map {tag} {key_str}")
        lines.extend(f"{r} {c} {_format_value(v)}"
                     for (r, c), v in sorted(m.entries()))
        lines.append("end")
    lines.append("endstructure")
    return "\n".join(lines)


def _encode_key(key):
    if key and isinstance(key[0], tuple):
        return "|".join(".".join(str(x) for x in b) for b in key)
    return " ".join(str(x) for x in key)


def _decode_key(tag, text):
    if tag == "smap" and "|" in text or (tag == "smap" and "." in text):
        return tuple(tuple(int(x) for x in b.split(".")) for b in text.split("|"))
    parts = text.split()
    if tag == "smap" and len(parts) == 3:
        return tuple(int(x) for x in parts)
    if tag == "smap":
        return tuple(tuple(int(x) for x in b.split(".")) for b in text.split("|"))
    return tuple(int(x) for x in parts)


def save(structure, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(structure))


def loads(text):
    """Parse the text format; returns the structures in file order."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_HEADER:
        raise ParseError("line 1: missing format header")
    structures = []
    by_name = {}
    i = 1
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        structure, i = _parse_structure(lines, i, by_name)
        structures.append(structure)
        by_name[getattr(structure, "name", "symseq")] = structure
    if not structures:
        raise ParseError("no structures in file")
    return structures


def _parse_structure(lines, i, by_name):
    header = {}
    components = {}
    actions = {}
    maps = {}

    def err(msg, lineno):
        raise ParseError(f"line {lineno + 1}: {msg}")

    while i < len(lines):
        line = lines[i].strip()
        if not line:
            i += 1
            continue
        if line == "endstructure":
            i += 1
            break
        parts = line.split()
        if parts[0] in ("kind", "name", "ring", "over"):
            header[parts[0]] = parts[1] if len(parts) > 1 else ""
            i += 1
        elif parts[0] == "max_arity":
            header["max_arity"] = int(parts[1])
            i += 1
        elif parts[0] == "begin":
            section = parts[1]
            if section == "component":
                n = int(parts[2])
                spaces = {}
                i += 1
                while lines[i].strip() != "end":
                    toks = lines[i].split()
                    if toks[0] != "degree":
                        err("expected 'degree' line", i)
                    spaces[int(toks[1])] = tuple(
                        urllib.parse.unquote(t) for t in toks[2:])
                    i += 1
                components[n] = GradedFreeModule(spaces)
                i += 1
            elif section == "action":
                n, gen = int(parts[2]), int(parts[3])
                entries, i = _parse_entries(lines, i + 1, header.get("ring", INT))
                actions.setdefault(n, {})[gen] = entries
            elif section == "map":
                tag = parts[2]
                key = _decode_key(tag, " ".join(parts[3:]))
                entries, i = _parse_entries(lines, i + 1, header.get("ring", INT))
                maps[(tag, key)] = entries
            else:
                err(f"unknown section {section!r}", i)
        else:
            err(f"unrecognized line {line!r}", i)
    kind = header.get("kind")
    ring = header.get("ring", INT)
    if kind is None:
        raise ParseError("structure without kind")
    ranks = {n: c.total_rank() for n, c in components.items()}

    def act_tuple(n):
        got = actions.get(n, {})
        return tuple(
            ExactMatrix(ranks[n], ranks[n], got.get(g, {}), ring=ring)
            for g in range(1, n))

    ss = SymSeq(ring, components, {n: act_tuple(n) for n in components})
    name = header.get("name", kind)
    if kind == "symseq":
        ss.name = name
        return ss, i
    if kind == "operad":
        comp = {}
        for (tag, key), entries in maps.items():
            if tag != "comp":
                raise ParseError(f"unexpected map tag {tag!r} in operad")
            m, a, n = key
            comp[key] = ExactMatrix(ranks.get(m + n - 1, 0),
                                    ranks.get(m, 0) * ranks.get(n, 0),
                                    entries, ring=ring)
        return Operad(ss, comp, name=name), i
    if kind == "cooperad":
        cocomp = {}
        for (tag, key), entries in maps.items():
            if tag != "cocomp":
                raise ParseError(f"unexpected map tag {tag!r} in cooperad")
            m, a, n = key
            cocomp[key] = ExactMatrix(ranks.get(m, 0) * ranks.get(n, 0),
                                      ranks.get(m + n - 1, 0),
                                      entries, ring=ring)
        return Cooperad(ss, cocomp, name=name), i
    if kind in SIDES:
        over_name = header.get("over")
        over = by_name.get(over_name)
        if over is None:
            raise ParseError(f"module is over unknown structure {over_name!r}")
        smaps = {}
        for (tag, key), entries in maps.items():
            if tag != "smap":
                raise ParseError(f"unexpected map tag {tag!r} in module")
            shape = _module_map_shape(kind, key, ranks, over)
            smaps[key] = ExactMatrix(*shape, entries, ring=ring)
        return SidedModule(kind, ss, over, smaps, name=name), i
    raise ParseError(f"unknown kind {kind!r}")


def _module_map_shape(side, key, ranks, over):
    if side == RIGHT_MODULE:
        m, _a, n = key
        return (ranks.get(m + n - 1, 0), ranks.get(m, 0) * over.rank(n))
    if side == RIGHT_COMODULE:
        m, _a, n = key
        return (ranks.get(m, 0) * over.rank(n), ranks.get(m + n - 1, 0))
    blocks = key
    n = sum(len(b) for b in blocks)
    inner = over.rank(len(blocks)) * _prod(ranks.get(len(b), 0) for b in blocks)
    if side == LEFT_MODULE:
        return (ranks.get(n, 0), inner)
    return (inner, ranks.get(n, 0))


def _parse_entries(lines, i, ring):
    entries = {}
    while i < len(lines) and lines[i].strip() != "end":
        toks = lines[i].split()
        if len(toks) != 3:
            raise ParseError(f"line {i + 1}: expected 'row col value'")
        r, c = int(toks[0]), int(toks[1])
        v = Fraction(toks[2]) if ring == RAT else int(toks[2])
        entries[(r, c)] = v
        i += 1
    if i >= len(lines):
        raise ParseError(f"line {i}: unterminated section")
    return entries, i + 1


def load_structures(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def load_operad(path):
    for structure in load_structures(path):
        if isinstance(structure, Operad):
            return structure
    raise ParseError(f"no operad in {path}")


def load_symseq(path):
    for structure in load_structures(path):
        if isinstance(structure, SymSeq) and not isinstance(
                structure, (Operad, Cooperad)):
            return structure
        if isinstance(structure, (Operad, Cooperad)):
            return structure.symseq
    raise ParseError(f"no symmetric sequence in {path}")
