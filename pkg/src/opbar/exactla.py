"""Exact sparse linear algebra over Z and Q.

Matrices are sparse maps (row, col) -> value with arbitrary-precision
entries.  Chain complexes are graded free modules with labelled bases;
integral homology (free rank plus torsion invariant factors) is computed
by Smith normal form, rational homology by exact echelon reduction.
Induced maps on homology are offered over Q only, in deterministic
lowest-pivot cycle bases.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import gcd

from .errors import ValidationError

INT = "Z"
RAT = "Q"
RINGS = (INT, RAT)


class ExactMatrix:
    """Immutable sparse matrix with exact entries (int or Fraction)."""

    __slots__ = ("ring", "nrows", "ncols", "_rows", "_cols")

    def __init__(self, nrows, ncols, entries=None, ring=INT):
        if ring not in RINGS:
            raise ValidationError(f"unknown ring {ring!r}")
        self.ring = ring
        self.nrows = nrows
        self.ncols = ncols
        rows = {}
        if entries:
            for (i, j), v in entries.items():
                if v == 0:
                    continue
                if not (0 <= i < nrows and 0 <= j < ncols):
                    raise ValidationError(f"entry ({i},{j}) outside {nrows}x{ncols}")
                rows.setdefault(i, {})[j] = v
        self._rows = rows
        self._cols = None

    @classmethod
    def identity(cls, n, ring=INT):
        return cls(n, n, {(i, i): 1 for i in range(n)}, ring=ring)

    @classmethod
    def zero(cls, nrows, ncols, ring=INT):
        return cls(nrows, ncols, {}, ring=ring)

    def entries(self):
        for i, row in self._rows.items():
            for j, v in row.items():
                yield (i, j), v

    def entry(self, i, j):
        return self._rows.get(i, {}).get(j, 0)

    def row(self, i):
        return dict(self._rows.get(i, {}))

    def column(self, j):
        if self._cols is None:
            cols = {}
            for i, row in self._rows.items():
                for jj, v in row.items():
                    cols.setdefault(jj, {})[i] = v
            self._cols = cols
        return self._cols.get(j, {})

    def nnz(self):
        return sum(len(r) for r in self._rows.values())

    def is_zero(self):
        return not self._rows

    def transpose(self):
        return ExactMatrix(
            self.ncols, self.nrows,
            {(j, i): v for (i, j), v in self.entries()}, ring=self.ring)

    def __eq__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        return (self.nrows == other.nrows and self.ncols == other.ncols
                and self._rows == other._rows)

    def __hash__(self):
        return hash((self.nrows, self.ncols,
                     frozenset((i, j, v) for (i, j), v in self.entries())))

    def __repr__(self):
        return f"ExactMatrix({self.nrows}x{self.ncols}, nnz={self.nnz()}, ring={self.ring})"

    def __add__(self, other):
        self._check_shape(other, same=True)
        entries = {k: v for k, v in self.entries()}
        for k, v in other.entries():
            entries[k] = entries.get(k, 0) + v
        return ExactMatrix(self.nrows, self.ncols, entries, ring=self.ring)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return ExactMatrix(self.nrows, self.ncols,
                           {k: c * v for k, v in self.entries()}, ring=self.ring)

    def __mul__(self, other):
        if not isinstance(other, ExactMatrix):
            return NotImplemented
        if self.ncols != other.nrows:
            raise ValidationError(
                f"shape mismatch {self.nrows}x{self.ncols} * {other.nrows}x{other.ncols}")
        entries = {}
        for i, row in self._rows.items():
            acc = {}
            for k, a in row.items():
                orow = other._rows.get(k)
                if not orow:
                    continue
                for j, b in orow.items():
                    acc[j] = acc.get(j, 0) + a * b
            for j, v in acc.items():
                if v != 0:
                    entries[(i, j)] = v
        return ExactMatrix(self.nrows, other.ncols, entries, ring=self.ring)

    def apply(self, vec):
        """Matrix times sparse column vector (dict col -> value)."""
        out = {}
        for j, c in vec.items():
            for i, v in self.column(j).items():
                w = out.get(i, 0) + c * v
                if w == 0:
                    out.pop(i, None)
                else:
                    out[i] = w
        return out

    def kron(self, other):
        """Kronecker product, valid for degree-zero maps of graded modules."""
        entries = {}
        on, om = other.nrows, other.ncols
        for (i, j), v in self.entries():
            for (k, ll), w in other.entries():
                entries[(i * on + k, j * om + ll)] = v * w
        return ExactMatrix(self.nrows * on, self.ncols * om, entries, ring=self.ring)

    def trace(self):
        return sum(row.get(i, 0) for i, row in self._rows.items())

    def export_text(self):
        lines = [f"matrix {self.nrows} {self.ncols} {self.ring}"]
        for (i, j), v in sorted(self.entries()):
            lines.append(f"{i} {j} {v}")
        return "\n".join(lines)

    def _check_shape(self, other, same=False):
        if same and (self.nrows != other.nrows or self.ncols != other.ncols):
            raise ValidationError("shape mismatch")


# ---------------------------------------------------------------------------
# Smith normal form and integer rank


def _pick_pivot(rows, cols):
    """Entry with |v| minimal, tie-broken by least fill-in, then position."""
    best = None
    best_key = None
    for i, row in rows.items():
        ri = len(row)
        for j, v in row.items():
            key = (abs(v), (ri - 1) * (len(cols[j]) - 1), i, j)
            if best_key is None or key < best_key:
                best_key = key
                best = (i, j, v)
                if key[0] == 1 and key[1] == 0:
                    return best
    return best


def _snf_diagonal(mat):
    """Diagonalize by unimodular row/column operations; no divisibility yet."""
    rows = {i: dict(r) for i, r in mat._rows.items()}
    cols = {}
    for i, row in rows.items():
        for j in row:
            cols.setdefault(j, set()).add(i)
    diag = []

    def addmul_row(dst, src, q):
        # row[dst] += q * row[src]
        rdst = rows.setdefault(dst, {})
        for j, v in rows[src].items():
            w = rdst.get(j, 0) + q * v
            if w == 0:
                if j in rdst:
                    del rdst[j]
                    cols[j].discard(dst)
            else:
                if j not in rdst:
                    cols.setdefault(j, set()).add(dst)
                rdst[j] = w
        if not rdst:
            del rows[dst]

    def addmul_col(dst, src, q):
        for i in list(cols.get(src, ())):
            v = rows[i][src]
            ri = rows[i]
            w = ri.get(dst, 0) + q * v
            if w == 0:
                if dst in ri:
                    del ri[dst]
                    cols[dst].discard(i)
            else:
                if dst not in ri:
                    cols.setdefault(dst, set()).add(i)
                ri[dst] = w

    while rows:
        i, j, v = _pick_pivot(rows, cols)
        # Clean column j and row i; remainders shrink |pivot|, so this ends.
        while True:
            col_others = [r for r in cols[j] if r != i]
            for r in col_others:
                q = -(rows[r][j] // rows[i][j])
                addmul_row(r, i, q)
            if any(r in cols.get(j, ()) and r != i for r in col_others):
                i, j, v = _pick_pivot(rows, cols)
                continue
            row_others = [c for c in rows[i] if c != j]
            for c in row_others:
                q = -(rows[i][c] // rows[i][j])
                addmul_col(c, j, q)
            if all(c not in rows[i] or c == j for c in row_others):
                break
            i, j, v = _pick_pivot(rows, cols)
        diag.append(abs(rows[i][j]))
        del rows[i]
        cols[j].discard(i)
        for jj in list(cols):
            if not cols[jj]:
                del cols[jj]
    return diag


def smith_normal_form(mat):
    """Invariant factors d_1 | d_2 | ... of an integer matrix.

    The returned list has length rank(mat) and contains only positive
    integers (including any leading 1s).
    """
    if mat.ring != INT:
        raise ValidationError("smith_normal_form requires ring Z")
    diag = _snf_diagonal(mat)
    # diag(a, b) is equivalent to diag(gcd(a,b), lcm(a,b)); bubble until chained.
    changed = True
    while changed:
        changed = False
        for a in range(len(diag)):
            for b in range(a + 1, len(diag)):
                if diag[b] % diag[a] != 0:
                    g = gcd(diag[a], diag[b])
                    diag[a], diag[b] = g, diag[a] * diag[b] // g
                    changed = True
    return sorted(diag)


def matrix_rank(mat):
    """Exact rank (equal over Z and Q for integer matrices)."""
    if mat.is_zero():
        return 0
    if mat.ring == RAT:
        # Clear denominators row by row; rank is unchanged.
        rows = {}
        for (i, j), v in mat.entries():
            rows.setdefault(i, {})[j] = Fraction(v)
        entries = {}
        for i, row in rows.items():
            mult = 1
            for v in row.values():
                mult = mult * v.denominator // gcd(mult, v.denominator)
            for j, v in row.items():
                entries[(i, j)] = int(v * mult)
        mat = ExactMatrix(mat.nrows, mat.ncols, entries, ring=INT)
    return len(_snf_diagonal(mat))


# ---------------------------------------------------------------------------
# Echelon machinery over Q (sparse dict vectors)


def _vec_addmul(dst, src, c):
    for j, v in src.items():
        w = dst.get(j, 0) + c * v
        if w == 0:
            dst.pop(j, None)
        else:
            dst[j] = w


class _Echelon:
    """Growing echelon basis over Q with lowest-index pivots.

    Optionally tracks the expression of each inserted vector in terms of
    the original inputs (for solving / kernel computation).
    """

    def __init__(self, track=False):
        self.pivots = {}        # pivot index -> (vector, tracking)
        self.track = track
        self.count = 0

    def reduce(self, vec, tracking=None):
        vec = dict(vec)
        if self.track and tracking is None:
            tracking = {self.count: Fraction(1)}
        while vec:
            p = min(vec)
            hit = self.pivots.get(p)
            if hit is None:
                break
            c = -Fraction(vec[p])
            _vec_addmul(vec, hit[0], c)
            if self.track:
                _vec_addmul(tracking, hit[1], c)
        return vec, tracking

    def insert(self, vec, tracking=None):
        """Reduce and insert; returns None if vec was dependent, else pivot."""
        vec, tracking = self.reduce(vec, tracking)
        self.count += 1
        if not vec:
            return None, tracking
        p = min(vec)
        inv = Fraction(1, 1) / Fraction(vec[p])
        vec = {j: Fraction(v) * inv for j, v in vec.items()}
        if self.track:
            tracking = {j: v * inv for j, v in tracking.items()}
        self.pivots[p] = (vec, tracking)
        return p, tracking


def kernel_basis(mat):
    """Deterministic basis of the right kernel over Q (sparse dict vectors)."""
    ech = _Echelon(track=True)
    kernel = []
    for j in range(mat.ncols):
        col = {i: Fraction(v) for i, v in mat.column(j).items()}
        pivot, tracking = ech.insert(col, {j: Fraction(1)})
        if pivot is None:
            lead = Fraction(1) / tracking[min(tracking)]
            kernel.append({k: v * lead for k, v in tracking.items()})
    return kernel


def column_space_basis(mat):
    basis = []
    ech = _Echelon()
    for j in range(mat.ncols):
        col = {i: Fraction(v) for i, v in mat.column(j).items()}
        pivot, _ = ech.insert(col)
        if pivot is not None:
            basis.append({i: Fraction(v) for i, v in mat.column(j).items()})
    return basis


def solve_in_span(vectors, target):
    """Coefficients expressing target in span(vectors), or None.

    Deterministic; vectors and target are sparse dicts over Q.
    """
    ech = _Echelon(track=True)
    for k, v in enumerate(vectors):
        ech.insert({i: Fraction(x) for i, x in v.items()}, {k: Fraction(1)})
    red, tracking = ech.reduce({i: Fraction(x) for i, x in target.items()},
                               tracking={})
    if red:
        return None
    return {k: -c for k, c in tracking.items()}


# ---------------------------------------------------------------------------
# Graded modules, chain complexes, homology


class GradedFreeModule:
    """Finitely supported map degree -> ordered list of basis labels."""

    __slots__ = ("spaces", "_basis", "_index")

    def __init__(self, spaces):
        clean = {}
        for d, labels in spaces.items():
            labels = tuple(labels)
            if not labels:
                continue
            if len(set(labels)) != len(labels):
                raise ValidationError(f"duplicate basis labels in degree {d}")
            clean[int(d)] = labels
        self.spaces = clean
        self._basis = tuple((d, lab) for d in sorted(clean)
                            for lab in clean[d])
        self._index = {pair: i for i, pair in enumerate(self._basis)}

    def degrees(self):
        return sorted(self.spaces)

    def rank(self, d):
        return len(self.spaces.get(d, ()))

    def labels(self, d):
        return self.spaces.get(d, ())

    def total_rank(self):
        return len(self._basis)

    def basis(self):
        """Global ordered basis as (degree, label) pairs, degree-major."""
        return self._basis

    def index(self, degree, label):
        return self._index[(degree, label)]

    def degree_of(self, i):
        return self._basis[i][0]

    def negated(self):
        return GradedFreeModule({-d: labs for d, labs in self.spaces.items()})

    def shifted_labels(self, fn):
        return GradedFreeModule({d: tuple(fn(d, lab) for lab in labs)
                                 for d, labs in self.spaces.items()})

    def __eq__(self, other):
        if not isinstance(other, GradedFreeModule):
            return NotImplemented
        return self.spaces == other.spaces

    def __repr__(self):
        ranks = {d: len(v) for d, v in sorted(self.spaces.items())}
        return f"GradedFreeModule({ranks})"


class HomologySummary:
    """Per degree: free rank and torsion invariant factors (each > 1)."""

    __slots__ = ("ring", "groups")

    def __init__(self, ring, groups):
        self.ring = ring
        clean = {}
        for d, (rank, torsion) in groups.items():
            torsion = tuple(int(t) for t in torsion)
            if ring == RAT and torsion:
                raise ValidationError("torsion is empty over Q")
            for a, b in zip(torsion, torsion[1:]):
                if b % a != 0:
                    raise ValidationError("torsion factors must form a divisor chain")
            if rank or torsion:
                clean[int(d)] = (int(rank), torsion)
        self.groups = clean

    def free_rank(self, d):
        return self.groups.get(d, (0, ()))[0]

    def torsion(self, d):
        return self.groups.get(d, (0, ()))[1]

    def degrees(self):
        return sorted(self.groups)

    def euler_characteristic(self):
        return sum((-1) ** d * r for d, (r, _t) in self.groups.items())

    def degree_negated(self):
        return HomologySummary(self.ring,
                               {-d: g for d, g in self.groups.items()})

    def is_concentrated_in(self, degree):
        return all(d == degree for d in self.groups)

    def __eq__(self, other):
        if not isinstance(other, HomologySummary):
            return NotImplemented
        return self.ring == other.ring and self.groups == other.groups

    def __repr__(self):
        return f"HomologySummary({self.ring}, {self.groups})"

    def export_text(self):
        lines = [f"homology ring {self.ring}"]
        for d in self.degrees():
            r, tor = self.groups[d]
            tor_str = ",".join(str(t) for t in tor) if tor else "-"
            lines.append(f"degree {d}: free {r} torsion {tor_str}")
        return "\n".join(lines)


class ChainComplex:
    """Graded free module with differentials d_k : C_k -> C_{k-1}.

    d^2 = 0 and all matrix shapes are verified on construction.
    """

    def __init__(self, module, diffs, ring=INT, check=True):
        self.ring = ring
        self.module = module
        clean = {}
        for k, m in diffs.items():
            if m.nrows != module.rank(k - 1) or m.ncols != module.rank(k):
                raise ValidationError(
                    f"differential d_{k} has shape {m.nrows}x{m.ncols}, "
                    f"expected {module.rank(k-1)}x{module.rank(k)}")
            if not m.is_zero():
                clean[int(k)] = m
        self.diffs = clean
        if check:
            for k, m in clean.items():
                up = clean.get(k + 1)
                if up is not None and not (m * up).is_zero():
                    raise ValidationError(f"d_{k} o d_{k+1} != 0")

    def degrees(self):
        return self.module.degrees()

    def rank(self, k):
        return self.module.rank(k)

    def labels(self, k):
        return self.module.labels(k)

    def differential(self, k):
        d = self.diffs.get(k)
        if d is None:
            d = ExactMatrix.zero(self.rank(k - 1), self.rank(k), ring=self.ring)
        return d

    def homology(self, ring=None):
        return homology(self, ring=ring)

    def export_text(self):
        lines = [f"complex ring {self.ring}"]
        for d in self.degrees():
            labels = " ".join(str(lab) for lab in self.labels(d))
            lines.append(f"degree {d} rank {self.rank(d)}: {labels}")
        for k in sorted(self.diffs):
            lines.append(f"differential {k}")
            for (i, j), v in sorted(self.diffs[k].entries()):
                lines.append(f"{i} {j} {v}")
        return "\n".join(lines)


def homology(complex_, ring=None):
    """Homology summary of a chain complex.

    Over Z: free rank = nullity(d_k) - rank(d_{k+1}); torsion = invariant
    factors of d_{k+1} exceeding 1.  Over Q: ranks only.
    """
    ring = ring or complex_.ring
    groups = {}
    rank_cache = {}
    snf_cache = {}

    def rk(k):
        if k not in rank_cache:
            d = complex_.diffs.get(k)
            if d is None:
                rank_cache[k] = 0
            elif ring == INT:
                snf_cache[k] = smith_normal_form(d)
                rank_cache[k] = len(snf_cache[k])
            else:
                rank_cache[k] = matrix_rank(d)
        return rank_cache[k]

    for k in complex_.degrees():
        free = complex_.rank(k) - rk(k) - rk(k + 1)
        torsion = ()
        if ring == INT:
            torsion = tuple(t for t in snf_cache.get(k + 1, ()) if t > 1)
        groups[k] = (free, torsion)
    return HomologySummary(ring, groups)


def tensor_list(complexes):
    """Tensor product of chain complexes with Koszul-signed differential.

    Basis labels are k-tuples of factor labels; the ordering is row-major
    over the factors' (degree, index) global orders.
    """
    if not complexes:
        raise ValidationError("tensor_list needs at least one complex")
    ring = complexes[0].ring
    if any(c.ring != ring for c in complexes):
        raise ValidationError("tensor factors must share a ring")
    factor_bases = [c.module.basis() for c in complexes]
    # Global tuples in row-major order, then bucketed by total degree.
    spaces = {}
    index_of = {}
    for combo in itertools.product(*factor_bases):
        deg = sum(d for d, _ in combo)
        labs = tuple(lab for _, lab in combo)
        spaces.setdefault(deg, []).append(labs)
        index_of[labs] = (deg, len(spaces[deg]) - 1)
    module = GradedFreeModule({d: tuple(v) for d, v in spaces.items()})

    diffs_entries = {}
    for combo in itertools.product(*factor_bases):
        deg = sum(d for d, _ in combo)
        labs = tuple(lab for _, lab in combo)
        col = index_of[labs][1]
        sign = 1
        for pos, (fd, flab) in enumerate(combo):
            c = complexes[pos]
            dmat = c.diffs.get(fd)
            if dmat is not None:
                j = c.module.index(fd, flab) - _degree_offset(c.module, fd)
                for i, v in dmat.column(j).items():
                    tlab = c.module.labels(fd - 1)[i]
                    new = labs[:pos] + (tlab,) + labs[pos + 1:]
                    trow = index_of[new][1]
                    key = (deg, trow, col)
                    diffs_entries[key] = diffs_entries.get(key, 0) + sign * v
            sign *= (-1) ** fd
    diffs = {}
    for (deg, i, j), v in diffs_entries.items():
        if v != 0:
            diffs.setdefault(deg, {})[(i, j)] = v
    dmats = {deg: ExactMatrix(module.rank(deg - 1), module.rank(deg), e, ring=ring)
             for deg, e in diffs.items()}
    return ChainComplex(module, dmats, ring=ring)


def _degree_offset(module, degree):
    """Global index of the first basis element in the given degree."""
    off = 0
    for d in module.degrees():
        if d == degree:
            return off
        off += module.rank(d)
    return off


def tensor(c, d):
    """Binary tensor product; basis labels are ordered pairs."""
    return tensor_list([c, d])


class ChainMap:
    """Degree-0 map of chain complexes, verified to commute with d."""

    def __init__(self, source, target, mats, check=True):
        self.source = source
        self.target = target
        clean = {}
        for k, m in mats.items():
            if m.nrows != target.rank(k) or m.ncols != source.rank(k):
                raise ValidationError(
                    f"chain map component {k} has shape {m.nrows}x{m.ncols}, "
                    f"expected {target.rank(k)}x{source.rank(k)}")
            clean[int(k)] = m
        self.mats = clean
        if check:
            self.verify()

    def component(self, k):
        m = self.mats.get(k)
        if m is None:
            m = ExactMatrix.zero(self.target.rank(k), self.source.rank(k),
                                 ring=self.source.ring)
        return m

    def verify(self):
        degrees = set(self.source.degrees()) | set(self.mats)
        for k in sorted(degrees):
            lhs = self.target.differential(k) * self.component(k)
            rhs = self.component(k - 1) * self.source.differential(k)
            if lhs != rhs:
                raise ValidationError(f"not a chain map in degree {k}")

    def compose(self, other):
        """self o other."""
        if other.target is not self.source and other.target != self.source:
            raise ValidationError("chain maps not composable")
        degrees = set(other.mats) | set(self.mats)
        mats = {k: self.component(k) * other.component(k) for k in degrees}
        return ChainMap(other.source, self.target, mats, check=False)


def homology_representatives(complex_, degree):
    """(cycle representatives, boundary basis) over Q in a fixed degree.

    Representatives are deterministic: kernel vectors with lowest-index
    pivots, filtered to be independent modulo the boundary subspace.
    """
    cycles = kernel_basis(complex_.differential(degree))
    boundaries = column_space_basis(complex_.differential(degree + 1))
    ech = _Echelon()
    for b in boundaries:
        ech.insert(b)
    reps = []
    for z in cycles:
        red, _ = ech.reduce(z)
        if red:
            ech.insert(dict(z))
            reps.append(z)
    return reps, boundaries


def express_in_homology(complex_, degree, vec, reps=None, boundaries=None):
    """Coordinates of a cycle in the homology basis of the given degree."""
    if reps is None or boundaries is None:
        reps, boundaries = homology_representatives(complex_, degree)
    coords = solve_in_span(boundaries + reps, vec)
    if coords is None:
        raise ValidationError("vector is not a cycle in the given degree")
    nb = len(boundaries)
    out = [Fraction(0)] * len(reps)
    for k, c in coords.items():
        if k >= nb:
            out[k - nb] = c
    return out


def induced_map_on_homology(f, degree):
    """Matrix of H(f) in the deterministic homology bases, over Q."""
    if f.source.ring != RAT and f.source.ring != INT:
        raise ValidationError("induced maps require an exact ring")
    src_reps, _src_b = homology_representatives(f.source, degree)
    tgt_reps, tgt_b = homology_representatives(f.target, degree)
    entries = {}
    comp = f.component(degree)
    for j, z in enumerate(src_reps):
        img = comp.apply(z)
        coords = express_in_homology(f.target, degree, img,
                                     reps=tgt_reps, boundaries=tgt_b)
        for i, c in enumerate(coords):
            if c != 0:
                entries[(i, j)] = c
    return ExactMatrix(len(tgt_reps), len(src_reps), entries, ring=RAT)


def alternating_trace(complex_, automorphism):
    """Lefschetz number: sum of (-1)^k trace(g on degree k).

    The automorphism is a dict degree -> ExactMatrix; it must commute with
    the differential.
    """
    for k in complex_.degrees():
        g = automorphism.get(k)
        if g is None or g.nrows != complex_.rank(k) or g.ncols != complex_.rank(k):
            raise ValidationError(f"automorphism missing or misshapen in degree {k}")
    for k in sorted(complex_.diffs):
        d = complex_.diffs[k]
        lhs = automorphism[k - 1] * d if (k - 1) in automorphism else None
        if lhs is None:
            raise ValidationError(f"automorphism missing in degree {k-1}")
        if lhs != d * automorphism[k]:
            raise ValidationError(f"automorphism does not commute with d_{k}")
    return sum((-1) ** k * automorphism[k].trace() for k in complex_.degrees())


# ---------------------------------------------------------------------------
# Graded tensor bookkeeping shared by the operadic modules


def koszul_sign(degrees, perm):
    """Sign of the graded permutation sending slot i to slot perm[i].

    perm is a tuple with perm[i] = new position of factor i; the sign is
    the product of (-1)^{d_i d_j} over pairs that cross.
    """
    sign = 1
    n = len(degrees)
    for i in range(n):
        for j in range(i + 1, n):
            if perm[i] > perm[j] and degrees[i] % 2 and degrees[j] % 2:
                sign = -sign
    return sign


def perm_sign(perm):
    """Sign of a permutation given as a tuple of images (0-based)."""
    sign = 1
    n = len(perm)
    for i in range(n):
        for j in range(i + 1, n):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def flatten_index(sizes, multi):
    idx = 0
    for s, m in zip(sizes, multi):
        idx = idx * s + m
    return idx


def unflatten_index(sizes, idx):
    out = []
    for s in reversed(sizes):
        out.append(idx % s)
        idx //= s
    return tuple(reversed(out))
