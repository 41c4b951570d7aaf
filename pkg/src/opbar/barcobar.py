"""Algebraic bar and cobar complexes over decorated trees.

A basis element is a generalized labelled tree together with one basis
index per decoration slot: the root slot (right-module factor), one slot
per internal vertex in the canonical VertexOrder (operad factors), and
one slot per leaf in least-label order (left-module factors).  The tree
differential sums signed collapse moves: the orientation sign from the
trees module, the structure-map matrix entry, and the Koszul sign of the
graded slot reordering.  Cobar complexes run the same covers backwards
through cocomposition matrices, with tree degrees recorded negatively.

The normalized simplicial construction over strict partition chains is
built independently and serves as a sign-free homology oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import trees as tr
from .combinat import perm_inverse, set_partitions
from .errors import InternalConsistencyError, ValidationError
from .exactla import (
    INT,
    RAT,
    ChainComplex,
    ChainMap,
    ExactMatrix,
    GradedFreeModule,
    express_in_homology,
    flatten_index,
    homology,
    homology_representatives,
    koszul_sign,
    perm_sign,
    solve_in_span,
    tensor_list,
)
from .opalg import (
    LEFT_COMODULE,
    LEFT_MODULE,
    RIGHT_COMODULE,
    RIGHT_MODULE,
    Cooperad,
    Operad,
    SidedModule,
    SymSeq,
    block_sort_perm,
    canonical_partition,
    dual,
    builtin,
    unit_module,
)

BAR = "bar"
COBAR = "cobar"


@dataclass(frozen=True)
class BarBasisLabel:
    """Decorated tree: one basis index per slot, with its bigrading."""

    tree: tr.Tree
    decoration: tuple
    tree_degree: int
    internal_degree: int

    def __repr__(self):
        dec = ",".join(str(i) for i in self.decoration)
        return f"<{self.tree.serialize()}|{dec}|s={self.tree_degree},t={self.internal_degree}>"


def _slot_plan(tree, r_mod, p, l_mod):
    """Ordered slots of a tree: root, vertices (DFS), leaves (min label)."""
    slots = [("root", None, r_mod.component(len(tree.root_children)))]
    for path in tree.vertex_paths():
        arity = len(tree.node_at(path)[1])
        slots.append(("v", path, p.component(arity)))
    for _path, labels in tree.leaves():
        slots.append(("leaf", labels, l_mod.component(len(labels))))
    return slots


class BarComplex:
    """A bar or cobar chain complex with bigrading metadata."""

    def __init__(self, kind, arity, complex_, provenance, slot_cache,
                 r_coeff=None, op=None, l_coeff=None, index=None):
        self.kind = kind
        self.arity = arity
        self.complex = complex_
        self.provenance = provenance
        self._slots = slot_cache
        self.r_coeff = r_coeff
        self.op = op
        self.l_coeff = l_coeff
        if index is None:
            index = {}
            for d in complex_.degrees():
                for i, lab in enumerate(complex_.labels(d)):
                    index[lab] = (d, i)
        self._index = index

    @property
    def ring(self):
        return self.complex.ring

    def homology(self, ring=None):
        return self.complex.homology(ring=ring)

    def slots(self, tree):
        return self._slots[tree]

    def trees(self):
        return sorted(self._slots, key=tr.Tree.serialize)

    def index(self, label):
        return self._index[label]

    def split_by_internal_degree(self):
        """Sub-complexes per internal degree, graded by signed tree degree."""
        out = {}
        for d in self.complex.degrees():
            for i, lab in enumerate(self.complex.labels(d)):
                t = lab.internal_degree
                s_signed = d - t
                out.setdefault(t, {}).setdefault(s_signed, []).append((d, i, lab))
        complexes = {}
        for t, by_s in out.items():
            module = GradedFreeModule(
                {s: tuple(lab for _d, _i, lab in v) for s, v in by_s.items()})
            pos = {}
            for s, v in by_s.items():
                for new_i, (d, i, _lab) in enumerate(v):
                    pos[(d, i)] = (s, new_i)
            entries = {}
            for d in sorted(self.complex.diffs):
                for (i, j), val in self.complex.diffs[d].entries():
                    src = pos.get((d, j))
                    tgt = pos.get((d - 1, i))
                    if src is None or tgt is None:
                        continue
                    s, jj = src
                    s2, ii = tgt
                    if s2 != s - 1:
                        raise InternalConsistencyError(
                            "differential does not preserve internal degree")
                    entries.setdefault(s, {})[(ii, jj)] = val
            mats = {s: ExactMatrix(module.rank(s - 1), module.rank(s), e,
                                   ring=self.ring)
                    for s, e in entries.items()}
            complexes[t] = ChainComplex(module, mats, ring=self.ring)
        return complexes

    def export_text(self):
        lines = [f"barcomplex kind {self.kind} arity {self.arity} "
                 f"ring {self.ring}"]
        for d in self.complex.degrees():
            for lab in self.complex.labels(d):
                dec = ",".join(str(i) for i in lab.decoration)
                lines.append(
                    f"basis {d} {lab.tree.serialize()} [{dec}] "
                    f"s={lab.tree_degree} t={lab.internal_degree}")
        for k in sorted(self.complex.diffs):
            lines.append(f"differential {k}")
            for (i, j), v in sorted(self.complex.diffs[k].entries()):
                lines.append(f"{i} {j} {v}")
        return "\n".join(lines)


def _decoration_degrees(slots, decor):
    return tuple(slots[i][2].degree_of(decor[i]) for i in range(len(slots)))


def _merge_eval(slots_src, decor, plan, base_sign):
    """Evaluate a merge-style move on one decorated basis element.

    plan: per target slot, ("copy", src_pos) or ("unit",) or
    ("apply", (src positions), matrix, src position sizes).
    Yields (target decoration tuple, coefficient).
    """
    degrees = _decoration_degrees(slots_src, decor)
    seq = []
    for item in plan:
        if item[0] == "copy":
            seq.append(item[1])
        elif item[0] == "apply":
            seq.extend(item[1])
    perm = [0] * len(seq)
    for pos_in_seq, src_pos in enumerate(seq):
        perm[src_pos] = pos_in_seq
    sign = base_sign * koszul_sign(degrees, tuple(perm))
    if sign == 0:
        return
    factors = []
    for item in plan:
        if item[0] == "copy":
            factors.append(((decor[item[1]], 1),))
        elif item[0] == "unit":
            factors.append(((0, 1),))
        else:
            _tag, positions, matrix, sizes = item
            col = flatten_index(sizes, tuple(decor[p] for p in positions))
            column = matrix.column(col)
            if not column:
                return
            factors.append(tuple(column.items()))
    for combo in itertools.product(*factors):
        coeff = sign
        out = []
        for idx, c in combo:
            coeff *= c
            out.append(idx)
        yield tuple(out), coeff


def bar_complex(r_mod, p, l_mod, arity, ring=None):
    """Two-sided algebraic bar construction at one arity."""
    return _tree_complex(BAR, r_mod, p, l_mod, arity, ring=ring)


def cobar_complex(r_comod, q, l_comod, arity, ring=None):
    """Two-sided algebraic cobar construction at one arity."""
    return _tree_complex(COBAR, r_comod, q, l_comod, arity, ring=ring)


def _check_inputs(kind, r_mod, p, l_mod):
    if kind == BAR:
        if not isinstance(p, Operad):
            raise ValidationError("bar complexes are built over an operad")
        if r_mod.side != RIGHT_MODULE or l_mod.side != LEFT_MODULE:
            raise ValidationError("bar coefficients are a right and a left module")
    else:
        if not isinstance(p, Cooperad):
            raise ValidationError("cobar complexes are built over a cooperad")
        if r_mod.side != RIGHT_COMODULE:
            raise ValidationError("cobar right coefficient must be a right comodule")
        if l_mod.side != LEFT_COMODULE:
            raise ValidationError("cobar left coefficient must be a left comodule")
    if r_mod.ring != p.ring or l_mod.ring != p.ring:
        raise ValidationError("bar/cobar inputs must share a ring")


def _tree_complex(kind, r_mod, p, l_mod, arity, ring=None):
    _check_inputs(kind, r_mod, p, l_mod)
    ring = ring or p.ring
    if arity > p.max_arity:
        raise ValidationError(f"arity {arity} exceeds max_arity {p.max_arity}")
    slot_cache = {}
    basis_by_degree = {}
    index = {}
    for tree in tr.enumerate_trees(arity, tr.GENERALIZED):
        slots = _slot_plan(tree, r_mod, p, l_mod)
        if any(s[2].total_rank() == 0 for s in slots):
            continue
        slot_cache[tree] = slots
        sizes = [s[2].total_rank() for s in slots]
        s_deg = tree.n_vertices
        for decor in itertools.product(*(range(k) for k in sizes)):
            t_deg = sum(slots[i][2].degree_of(decor[i])
                        for i in range(len(slots)))
            label = BarBasisLabel(tree, decor, s_deg, t_deg)
            total = (s_deg if kind == BAR else -s_deg) + t_deg
            bucket = basis_by_degree.setdefault(total, [])
            index[label] = (total, len(bucket))
            bucket.append(label)
    module = GradedFreeModule(
        {d: tuple(v) for d, v in basis_by_degree.items()})

    entries = {}
    for tree in slot_cache:
        for move_kind, path in tr.collapse_moves(tree):
            res = tr.collapse(tree, move_kind, path)
            if res.tree not in slot_cache:
                # All decorations map into a zero slot module.
                continue
            contributions = _move_contributions(
                kind, tree, res, move_kind, path, r_mod, p, l_mod,
                slot_cache)
            for src_label, tgt_label, coeff in contributions:
                d_src, j = index[src_label]
                d_tgt, i = index[tgt_label]
                if d_tgt != d_src - 1:
                    raise InternalConsistencyError(
                        "differential does not lower total degree by one")
                key = (d_src, i, j)
                entries[key] = entries.get(key, 0) + coeff
    diffs = {}
    for (d, i, j), v in entries.items():
        if v != 0:
            diffs.setdefault(d, {})[(i, j)] = v
    mats = {d: ExactMatrix(module.rank(d - 1), module.rank(d), e, ring=ring)
            for d, e in diffs.items()}
    complex_ = ChainComplex(module, mats, ring=ring)
    provenance = (kind, getattr(r_mod, "name", "R"), getattr(p, "name", "P"),
                  getattr(l_mod, "name", "L"), arity)
    return BarComplex(kind, arity, complex_, provenance, slot_cache,
                      r_coeff=r_mod, op=p, l_coeff=l_mod, index=index)


def _move_slot_plan(kind, tree, res, move_kind, path, r_mod, p, l_mod,
                    slot_cache):
    """Merge-evaluator plan for one collapse move, uncollapsed to collapsed.

    In bar mode the apply matrix is the structure map followed by the
    child-reorder action at the merged slot; in cobar mode its role is
    played by the transpose of (cocomposition after the inverse reorder),
    which has the same shape and supplies the cocomposition coefficients.
    """
    slots_src = slot_cache[tree]
    slots_tgt = slot_cache[res.tree]
    src_pos = {(skind, skey): i
               for i, (skind, skey, _m) in enumerate(slots_src)}

    if move_kind == tr.BUD:
        node = tree.node_at(path)
        blocks = [c[1] for c in node[1]]
        union = tuple(sorted(x for b in blocks for x in b))
        rel = canonical_partition(
            [tuple(sorted(union.index(x) + 1 for x in b)) for b in blocks])
        if kind == BAR:
            matrix = l_mod.left_action(rel)
        else:
            matrix = l_mod.left_coaction(rel).transpose()
        consumed = [src_pos[("v", path)]] + [src_pos[("leaf", b)]
                                             for b in blocks]
        sizes = [p.component(len(blocks)).total_rank()] + [
            l_mod.component(len(b)).total_rank() for b in blocks]
        merged_key = ("leaf", union)
    else:
        node = tree.node_at(path)
        k_inner = len(node[1])
        c = res.insert_pos
        tau = res.child_perm
        tau_nontrivial = any(tau[i] != i for i in range(len(tau)))
        if move_kind == tr.ROOT_EDGE:
            m_out = len(tree.root_children)
            act_seq = r_mod
            consumed = [src_pos[("root", None)], src_pos[("v", path)]]
            sizes = [r_mod.component(m_out).total_rank(),
                     p.component(k_inner).total_rank()]
            merged_key = ("root", None)
            raw = (r_mod.right_partial(m_out, c, k_inner) if kind == BAR
                   else r_mod.right_copartial(m_out, c, k_inner))
        else:
            parent = path[:-1]
            m_out = len(tree.node_at(parent)[1])
            act_seq = p
            consumed = [src_pos[("v", parent)], src_pos[("v", path)]]
            sizes = [p.component(m_out).total_rank(),
                     p.component(k_inner).total_rank()]
            merged_key = ("v", res.vertex_map[parent])
            raw = (p.comp(m_out, c, k_inner) if kind == BAR
                   else p.cocomp(m_out, c, k_inner))
        merged_arity = m_out + k_inner - 1
        if kind == BAR:
            matrix = raw
            if tau_nontrivial:
                perm_1 = tuple(t + 1 for t in tau)
                matrix = act_seq.action(merged_arity, perm_1) * matrix
        else:
            # Re-express the merged decoration in spliced order, then split.
            matrix = raw
            if tau_nontrivial:
                inv = perm_inverse(tuple(t + 1 for t in tau))
                matrix = matrix * act_seq.action(merged_arity, inv)
            matrix = matrix.transpose()

    plan = []
    used = set()
    for tkind, tkey, _m in slots_tgt:
        if (tkind, tkey) == merged_key:
            plan.append(("apply", tuple(consumed), matrix, tuple(sizes)))
            used.update(consumed)
        elif tkind == "root":
            plan.append(("copy", src_pos[("root", None)]))
            used.add(src_pos[("root", None)])
        elif tkind == "v":
            old = next(op for op, np_ in res.vertex_map.items() if np_ == tkey)
            plan.append(("copy", src_pos[("v", old)]))
            used.add(src_pos[("v", old)])
        else:
            plan.append(("copy", src_pos[("leaf", tkey)]))
            used.add(src_pos[("leaf", tkey)])
    if used != set(range(len(slots_src))):
        raise InternalConsistencyError("collapse plan does not cover all slots")
    return plan


def _move_contributions(kind, tree, res, move_kind, path, r_mod, p, l_mod,
                        slot_cache):
    """(source label, target label, coefficient) triples of one move.

    For cobar complexes the differential runs from the collapsed tree to
    the uncollapsed one, so the roles of the labels swap while the
    coefficient pattern (orientation sign, Koszul reorder, matrix entry)
    is shared with the bar direction.
    """
    slots_src = slot_cache[tree]
    sizes_src = [s[2].total_rank() for s in slots_src]
    plan = _move_slot_plan(kind, tree, res, move_kind, path, r_mod, p, l_mod,
                           slot_cache)
    s_src = tree.n_vertices
    s_tgt = res.tree.n_vertices
    out = []
    for decor in itertools.product(*(range(k) for k in sizes_src)):
        t_deg = sum(slots_src[i][2].degree_of(decor[i])
                    for i in range(len(slots_src)))
        big = BarBasisLabel(tree, decor, s_src, t_deg)
        for tgt_dec, coeff in _merge_eval(slots_src, decor, plan,
                                          res.move.sign):
            small = BarBasisLabel(res.tree, tgt_dec, s_tgt, t_deg)
            if kind == BAR:
                out.append((big, small, coeff))
            else:
                out.append((small, big, coeff))
    return out


# ---------------------------------------------------------------------------
# normalized simplicial bar construction (the sign-free oracle)


@dataclass(frozen=True)
class SimplicialBarLabel:
    """Strict partition chain (finest first) with block-wise decorations."""

    chain: tuple
    decoration: tuple

    def __repr__(self):
        chain = " < ".join("|".join("".join(str(x) for x in b) for b in mu)
                           for mu in self.chain)
        return f"<{chain}|{','.join(str(i) for i in self.decoration)}>"


def _refines(lam, mu):
    for block in lam:
        bset = set(block)
        if not any(bset <= set(c) for c in mu):
            return False
    return True


def _strict_chains(n):
    partitions = list(set_partitions(range(1, n + 1)))
    coarser = {lam: [mu for mu in partitions
                     if mu != lam and _refines(lam, mu)]
               for lam in partitions}
    chains = []

    def extend(chain):
        chains.append(tuple(chain))
        for mu in coarser[chain[-1]]:
            chain.append(mu)
            extend(chain)
            chain.pop()

    for lam in partitions:
        extend([lam])
    return chains


def _chain_slots(chain, r_mod, p, l_mod):
    """Slots: right factor, P layers coarse to fine, left factors."""
    k = len(chain) - 1
    slots = [("R", None, r_mod.component(len(chain[k])))]
    for j in range(k, 0, -1):
        fine = chain[j - 1]
        for block in chain[j]:
            inner = sum(1 for c in fine if set(c) <= set(block))
            slots.append(("P", (j, block), p.component(inner)))
    for block in chain[0]:
        slots.append(("L", block, l_mod.component(len(block))))
    return slots


def _sub_blocks(fine, block):
    bset = set(block)
    return [c for c in fine if set(c) <= bset]


def simplicial_bar_complex(r_mod, p, l_mod, arity, ring=None):
    """Normalized chains of the simplicial two-sided bar construction.

    Degree-k basis: strict chains of k+1 partitions with decorations; the
    differential is the alternating sum of the partition deletions, via
    the augmentation (endpoint) and structure-map (inner) faces.
    """
    _check_inputs(BAR, r_mod, p, l_mod)
    ring = ring or p.ring
    slot_cache = {}
    basis_by_degree = {}
    index = {}
    for chain in _strict_chains(arity):
        slots = _chain_slots(chain, r_mod, p, l_mod)
        if any(s[2].total_rank() == 0 for s in slots):
            continue
        slot_cache[chain] = slots
        sizes = [s[2].total_rank() for s in slots]
        k = len(chain) - 1
        for decor in itertools.product(*(range(x) for x in sizes)):
            t_deg = sum(slots[i][2].degree_of(decor[i])
                        for i in range(len(slots)))
            label = SimplicialBarLabel(chain, decor)
            total = k + t_deg
            bucket = basis_by_degree.setdefault(total, [])
            index[label] = (total, len(bucket))
            bucket.append(label)
    module = GradedFreeModule({d: tuple(v) for d, v in basis_by_degree.items()})

    entries = {}
    for chain, slots in slot_cache.items():
        k = len(chain) - 1
        if k == 0:
            continue
        sizes = [s[2].total_rank() for s in slots]
        for i_face in range(k + 1):
            j_del = k - i_face
            tgt_chain = chain[:j_del] + chain[j_del + 1:]
            if tgt_chain not in slot_cache:
                continue
            plan = _face_plan(chain, j_del, slot_cache[chain],
                              slot_cache[tgt_chain], r_mod, p, l_mod)
            if plan is None:
                continue
            face_sign = (-1) ** i_face
            for decor in itertools.product(*(range(x) for x in sizes)):
                t_deg = sum(slots[s][2].degree_of(decor[s])
                            for s in range(len(slots)))
                src = SimplicialBarLabel(chain, decor)
                d_src, j = index[src]
                for tgt_dec, coeff in _merge_eval(slots, decor, plan,
                                                  face_sign):
                    tgt = SimplicialBarLabel(tgt_chain, tgt_dec)
                    d_tgt, i = index[tgt]
                    key = (d_src, i, j)
                    entries[key] = entries.get(key, 0) + coeff
    diffs = {}
    for (d, i, j), v in entries.items():
        if v != 0:
            diffs.setdefault(d, {})[(i, j)] = v
    mats = {d: ExactMatrix(module.rank(d - 1), module.rank(d), e, ring=ring)
            for d, e in diffs.items()}
    return ChainComplex(module, mats, ring=ring)


def _face_plan(chain, j_del, slots_src, slots_tgt, r_mod, p, l_mod):
    """Merge plan for deleting one partition from a strict chain."""
    k = len(chain) - 1
    src_pos = {(kind, key): i for i, (kind, key, _m) in enumerate(slots_src)}

    def p_slot(j, block):
        return src_pos[("P", (j, block))]

    plan = []
    for tkind, tkey, _m in slots_tgt:
        if tkind == "R":
            if j_del == k:
                # Right action absorbs the coarsest layer.
                r = len(chain[k])
                fine = chain[k - 1]
                inner = tuple(len(_sub_blocks(fine, b)) for b in chain[k])
                grouped = [c for b in chain[k] for c in _sub_blocks(fine, b)]
                rho = block_sort_perm([c[0] for c in grouped])
                matrix = r_mod.right_full_action(inner)
                if any(rho[x] != x for x in range(len(rho))):
                    matrix = r_mod.action(
                        len(fine), tuple(t + 1 for t in rho)) * matrix
                consumed = [src_pos[("R", None)]] + [
                    p_slot(k, b) for b in chain[k]]
                sizes = [r_mod.component(r).total_rank()] + [
                    slots_src[p_slot(k, b)][2].total_rank() for b in chain[k]]
                plan.append(("apply", tuple(consumed), matrix, tuple(sizes)))
            else:
                plan.append(("copy", src_pos[("R", None)]))
        elif tkind == "L":
            if j_del == 0:
                block = tkey
                fine = chain[0]
                subs = _sub_blocks(fine, block)
                ordered = tuple(sorted(block))
                rel = canonical_partition(
                    [tuple(sorted(ordered.index(x) + 1 for x in c))
                     for c in subs])
                matrix = l_mod.left_action(rel)
                consumed = [p_slot(1, block)] + [
                    src_pos[("L", c)] for c in subs]
                sizes = [slots_src[p_slot(1, block)][2].total_rank()] + [
                    l_mod.component(len(c)).total_rank() for c in subs]
                plan.append(("apply", tuple(consumed), matrix, tuple(sizes)))
            else:
                plan.append(("copy", src_pos[("L", tkey)]))
        else:
            jt, block = tkey
            j_old = jt if jt < j_del else jt + 1
            if j_old == j_del + 1 and j_del >= 1:
                # Merged layer: compose the block's operad factors.
                mid = chain[j_del]
                fine = chain[j_del - 1]
                subs = _sub_blocks(mid, block)
                inner = tuple(len(_sub_blocks(fine, c)) for c in subs)
                grouped = [cc for c in subs for cc in _sub_blocks(fine, c)]
                rho = block_sort_perm([cc[0] for cc in grouped])
                matrix = p.full_composition(inner)
                if any(rho[x] != x for x in range(len(rho))):
                    matrix = p.action(
                        sum(inner), tuple(t + 1 for t in rho)) * matrix
                consumed = [p_slot(j_del + 1, block)] + [
                    p_slot(j_del, c) for c in subs]
                sizes = [slots_src[p_slot(j_del + 1, block)][2].total_rank()] \
                    + [slots_src[p_slot(j_del, c)][2].total_rank()
                       for c in subs]
                plan.append(("apply", tuple(consumed), matrix, tuple(sizes)))
            else:
                plan.append(("copy", p_slot(j_old, block)))
    return plan


# ---------------------------------------------------------------------------
# the signed symmetric action on bar/cobar complexes


def symmetric_action(bc, sigma):
    """Matrices (per total degree) of a label permutation on the complex.

    sigma is a 1-based image tuple on {1..arity}.  The action relabels
    the underlying trees (orientation sign), re-identifies every slot
    through its child reordering, and reorders the graded slots (Koszul
    signs).
    """
    smap = {i + 1: sigma[i] for i in range(bc.arity)}
    inv = {v: k for k, v in smap.items()}
    r_mod, p, l_mod = bc.r_coeff, bc.op, bc.l_coeff
    entries = {}
    for tree in bc.trees():
        new_tree, tree_sign = tr.relabel(tree, smap)
        vmap = tr.relabel_vertex_map(tree, smap)
        slots_src = bc.slots(tree)
        slots_tgt = bc.slots(new_tree)
        src_pos = {(k, key): i for i, (k, key, _m) in enumerate(slots_src)}

        def subtree_min_keys(children):
            return [min(smap[x] for x in tr._node_labels(c)) for c in children]

        plan = []
        for tkind, tkey, _tmod in slots_tgt:
            if tkind == "root":
                tau = block_sort_perm(subtree_min_keys(tree.root_children))
                matrix = r_mod.action(len(tree.root_children),
                                      tuple(t + 1 for t in tau))
                plan.append(("apply", (src_pos[("root", None)],), matrix,
                             (matrix.ncols,)))
            elif tkind == "v":
                old = next(op for op, np_ in vmap.items() if np_ == tkey)
                node = tree.node_at(old)
                tau = block_sort_perm(subtree_min_keys(node[1]))
                matrix = p.action(len(node[1]), tuple(t + 1 for t in tau))
                plan.append(("apply", (src_pos[("v", old)],), matrix,
                             (matrix.ncols,)))
            else:
                old_labels = tuple(sorted(inv[x] for x in tkey))
                pi = block_sort_perm([smap[x] for x in old_labels])
                matrix = l_mod.action(len(tkey), tuple(t + 1 for t in pi))
                plan.append(("apply", (src_pos[("leaf", old_labels)],),
                             matrix, (matrix.ncols,)))
        sizes = [s[2].total_rank() for s in slots_src]
        for decor in itertools.product(*(range(x) for x in sizes)):
            t_deg = sum(slots_src[i][2].degree_of(decor[i])
                        for i in range(len(slots_src)))
            src = BarBasisLabel(tree, decor, tree.n_vertices, t_deg)
            d_src, j = bc.index(src)
            for tgt_dec, coeff in _merge_eval(slots_src, decor, plan,
                                              tree_sign):
                tgt = BarBasisLabel(new_tree, tgt_dec, new_tree.n_vertices,
                                    t_deg)
                _d, i = bc.index(tgt)
                key = (d_src, i, j)
                entries[key] = entries.get(key, 0) + coeff
    mats = {}
    for (d, i, j), v in entries.items():
        if v != 0:
            mats.setdefault(d, {})[(i, j)] = v
    out = {}
    for d in bc.complex.degrees():
        out[d] = ExactMatrix(bc.complex.rank(d), bc.complex.rank(d),
                             mats.get(d, {}), ring=bc.ring)
    return out


# ---------------------------------------------------------------------------
# cooperad / operad / module structure maps via (un)grafting


def one_sided_key(kind, r_mod, p, l_mod, arity):
    """Cache key for a complex, discriminated by input provenance."""
    return (kind, getattr(r_mod, "name", "R"), getattr(p, "name", "P"),
            getattr(l_mod, "name", "L"), arity)


def reduced_bar(p, arity, cache=None):
    """B(I,P,I) at one arity, with optional cross-call caching."""
    key = (BAR, "unit", getattr(p, "name", "P"), "unit", arity)
    if cache is not None and key in cache:
        return cache[key]
    bc = bar_complex(unit_module(p, RIGHT_MODULE), p,
                     unit_module(p, LEFT_MODULE), arity)
    if cache is not None:
        cache[key] = bc
    return bc


def reduced_cobar(q, arity, cache=None):
    """Omega(I,Q,I) at one arity, with optional cross-call caching."""
    key = (COBAR, "unit", getattr(q, "name", "Q"), "unit", arity)
    if cache is not None and key in cache:
        return cache[key]
    bc = cobar_complex(unit_module(q, RIGHT_COMODULE), q,
                       unit_module(q, LEFT_COMODULE), arity)
    if cache is not None:
        cache[key] = bc
    return bc


def _ungraft_terms(cplx_n, cplx_m, cplx_k, b_set):
    """(V label, (T label, U label), coefficient) for one leaf split.

    The slot label of the split is realized as min(b_set), so all
    relabellings are order-preserving and contribute no signs beyond the
    vertex-order permutation and the Koszul slot reordering.
    """
    n = cplx_n.arity
    b_sorted = tuple(sorted(b_set))
    marker = b_sorted[0]
    a_labels = tuple(sorted((set(range(1, n + 1)) - set(b_sorted)) | {marker}))
    rel_a = {x: i + 1 for i, x in enumerate(a_labels)}
    rel_b = {x: i + 1 for i, x in enumerate(b_sorted)}
    out = []
    for v_tree in cplx_n.trees():
        cut = tr.find_subtree_with_labels(v_tree, b_sorted)
        if cut is None:
            continue
        u_raw = tr.Tree((v_tree.node_at(cut),))
        t_raw = tr.make_tree(tr._replace_at_plain(
            v_tree.root_children, cut, ("L", (marker,))))
        t_tree, sgn_t = tr.relabel(t_raw, rel_a)
        u_tree, sgn_u = tr.relabel(u_raw, rel_b)
        if sgn_t != 1 or sgn_u != 1:
            raise InternalConsistencyError(
                "order-preserving relabelling produced a sign")
        if t_tree not in cplx_m._slots or u_tree not in cplx_k._slots:
            continue
        # Vertex split permutation: V order -> (T order, then U order).
        v_order = v_tree.vertex_paths()
        under = [path for path in v_order if path[:len(cut)] == cut]
        t_part = [path for path in v_order if path not in under]
        split_order = t_part + under
        perm = tuple(split_order.index(path) for path in v_order)
        base_sign = perm_sign(perm)

        slots_v = cplx_n.slots(v_tree)
        slots_t = cplx_m.slots(t_tree)
        slots_u = cplx_k.slots(u_tree)
        src_pos = {(kind, key): i
                   for i, (kind, key, _m) in enumerate(slots_v)}

        def v_vertex_pos(paths):
            return [src_pos[("v", path)] for path in paths]

        # Target slot sequence: T slots then U slots, matched back to V.
        plan = []
        for tkind, tkey, _m in slots_t:
            if tkind == "root":
                plan.append(("copy", src_pos[("root", None)]))
            elif tkind == "v":
                # T vertex paths are V paths outside the cut subtree.
                orig = t_part[_vertex_index(t_tree, tkey)]
                plan.append(("copy", src_pos[("v", orig)]))
            else:
                if tkey == (rel_a[marker],):
                    plan.append(("unit",))
                else:
                    orig_labels = tuple(sorted(
                        a_labels[x - 1] for x in tkey))
                    plan.append(("copy", src_pos[("leaf", orig_labels)]))
        for tkind, tkey, _m in slots_u:
            if tkind == "root":
                plan.append(("unit",))
            elif tkind == "v":
                orig = under[_vertex_index(u_tree, tkey)]
                plan.append(("copy", src_pos[("v", orig)]))
            else:
                orig_labels = tuple(sorted(b_sorted[x - 1] for x in tkey))
                plan.append(("copy", src_pos[("leaf", orig_labels)]))

        sizes = [s[2].total_rank() for s in slots_v]
        n_t_slots = len(slots_t)
        s_t, s_u = t_tree.n_vertices, u_tree.n_vertices
        for decor in itertools.product(*(range(x) for x in sizes)):
            t_deg_v = sum(slots_v[i][2].degree_of(decor[i])
                          for i in range(len(slots_v)))
            v_label = BarBasisLabel(v_tree, decor, v_tree.n_vertices, t_deg_v)
            for tgt_dec, coeff in _merge_eval(slots_v, decor, plan, base_sign):
                dec_t = tgt_dec[:n_t_slots]
                dec_u = tgt_dec[n_t_slots:]
                td_t = sum(slots_t[i][2].degree_of(dec_t[i])
                           for i in range(n_t_slots))
                td_u = t_deg_v - td_t
                lab_t = BarBasisLabel(t_tree, dec_t, s_t, td_t)
                lab_u = BarBasisLabel(u_tree, dec_u, s_u, td_u)
                out.append((v_label, (lab_t, lab_u), coeff))
    return out


def _vertex_index(tree, path):
    return tree.vertex_paths().index(path)


class _TensorIndex:
    def __init__(self, tensor_cplx):
        self.map = {}
        for d in tensor_cplx.degrees():
            for i, lab in enumerate(tensor_cplx.labels(d)):
                self.map[lab] = (d, i)

    def __call__(self, lab):
        return self.map[lab]


def bar_cocomposition(p, arity, a, a_side, b_side, cache=None):
    """Chain map B(P)(A u_a B) -> B(P)(A) (x) B(P)(B) by ungrafting.

    a_side and b_side partition {1..arity} with the slot marker a bound
    inside a_side; matrices are over the canonical complexes, with the
    marker realized as min(b_side).
    """
    _check_split(arity, a, a_side, b_side)
    k = len(tuple(b_side))
    m = arity - k + 1
    cplx_n = reduced_bar(p, arity, cache)
    cplx_m = reduced_bar(p, m, cache)
    cplx_k = reduced_bar(p, k, cache)
    tensor = tensor_list([cplx_m.complex, cplx_k.complex])
    tindex = _TensorIndex(tensor)
    entries = {}
    for v_label, (lab_t, lab_u), coeff in _ungraft_terms(
            cplx_n, cplx_m, cplx_k, b_side):
        d, j = cplx_n.index(v_label)
        d2, i = tindex((lab_t, lab_u))
        if d2 != d:
            raise InternalConsistencyError("cocomposition changes degree")
        entries.setdefault(d, {})[(i, j)] = coeff
    mats = {d: ExactMatrix(tensor.rank(d), cplx_n.complex.rank(d), e,
                           ring=p.ring)
            for d, e in entries.items()}
    for d in cplx_n.complex.degrees():
        mats.setdefault(d, ExactMatrix.zero(
            tensor.rank(d), cplx_n.complex.rank(d), ring=p.ring))
    return ChainMap(cplx_n.complex, tensor, mats)


def cobar_composition(q, arity, a, a_side, b_side, cache=None):
    """Chain map Omega(Q)(A) (x) Omega(Q)(B) -> Omega(Q)(A u_a B)."""
    _check_split(arity, a, a_side, b_side)
    k = len(tuple(b_side))
    m = arity - k + 1
    cplx_n = reduced_cobar(q, arity, cache)
    cplx_m = reduced_cobar(q, m, cache)
    cplx_k = reduced_cobar(q, k, cache)
    tensor = tensor_list([cplx_m.complex, cplx_k.complex])
    tindex = _TensorIndex(tensor)
    entries = {}
    for v_label, (lab_t, lab_u), coeff in _ungraft_terms(
            cplx_n, cplx_m, cplx_k, b_side):
        d, i = cplx_n.index(v_label)
        d2, j = tindex((lab_t, lab_u))
        if d2 != d:
            raise InternalConsistencyError("composition changes degree")
        entries.setdefault(d, {})[(i, j)] = coeff
    mats = {d: ExactMatrix(cplx_n.complex.rank(d), tensor.rank(d), e,
                           ring=q.ring)
            for d, e in entries.items()}
    for d in tensor.degrees():
        mats.setdefault(d, ExactMatrix.zero(
            cplx_n.complex.rank(d), tensor.rank(d), ring=q.ring))
    return ChainMap(tensor, cplx_n.complex, mats)


def _check_split(arity, a, a_side, b_side):
    a_rest = frozenset(a_side) - {a}
    b_set = frozenset(b_side)
    if a not in set(a_side):
        raise ValidationError("the slot label must belong to the A side")
    if not b_set or (a_rest & b_set) or \
            (a_rest | b_set) != frozenset(range(1, arity + 1)):
        raise ValidationError("A u_a B must equal {1..arity}")


def _partition_split_terms(one_sided, skeleton_cplxs, part_cplxs, blocks):
    """(V label, (skeleton label, part labels...), coefficient) triples.

    Decomposes each basis tree of the one-sided complex along the given
    partition, when it is of that type.
    """
    blocks = canonical_partition(blocks)
    r = len(blocks)
    skel_cplx = skeleton_cplxs
    out = []
    for v_tree in one_sided.trees():
        res = tr.ungraft_partition(v_tree, blocks)
        if res is None:
            continue
        t_raw, parts_raw = res
        rel_parts = []
        ok = True
        for j, u_raw in enumerate(parts_raw):
            rel = {x: i + 1 for i, x in enumerate(blocks[j])}
            u_tree, sgn = tr.relabel(u_raw, rel)
            if sgn != 1:
                raise InternalConsistencyError(
                    "order-preserving relabelling produced a sign")
            if u_tree not in part_cplxs[j]._slots:
                ok = False
                break
            rel_parts.append(u_tree)
        if not ok or t_raw not in skel_cplx._slots:
            continue
        t_tree = t_raw

        cuts = [tr.find_subtree_with_labels(v_tree, b) for b in blocks]
        v_order = v_tree.vertex_paths()
        under = [[path for path in v_order if path[:len(c)] == c]
                 for c in cuts]
        flat_under = [path for u in under for path in u]
        t_part = [path for path in v_order if path not in flat_under]
        split_order = t_part + flat_under
        perm = tuple(split_order.index(path) for path in v_order)
        base_sign = perm_sign(perm)

        slots_v = one_sided.slots(v_tree)
        src_pos = {(kind, key): i
                   for i, (kind, key, _m) in enumerate(slots_v)}
        slot_groups = [skel_cplx.slots(t_tree)] + [
            part_cplxs[j].slots(rel_parts[j]) for j in range(r)]

        plan = []
        group_sizes = []
        for g, slots_g in enumerate(slot_groups):
            group_sizes.append(len(slots_g))
            for tkind, tkey, _m in slots_g:
                if g == 0:
                    if tkind == "root":
                        plan.append(("copy", src_pos[("root", None)]))
                    elif tkind == "v":
                        orig = t_part[_vertex_index(t_tree, tkey)]
                        plan.append(("copy", src_pos[("v", orig)]))
                    else:
                        plan.append(("unit",))
                else:
                    j = g - 1
                    if tkind == "root":
                        plan.append(("unit",))
                    elif tkind == "v":
                        orig = under[j][_vertex_index(rel_parts[j], tkey)]
                        plan.append(("copy", src_pos[("v", orig)]))
                    else:
                        orig_labels = tuple(sorted(
                            blocks[j][x - 1] for x in tkey))
                        plan.append(("copy", src_pos[("leaf", orig_labels)]))

        sizes = [s[2].total_rank() for s in slots_v]
        s_parts = [t_tree.n_vertices] + [u.n_vertices for u in rel_parts]
        for decor in itertools.product(*(range(x) for x in sizes)):
            t_deg_v = sum(slots_v[i][2].degree_of(decor[i])
                          for i in range(len(slots_v)))
            v_label = BarBasisLabel(v_tree, decor, v_tree.n_vertices, t_deg_v)
            for tgt_dec, coeff in _merge_eval(slots_v, decor, plan, base_sign):
                labels = []
                offset = 0
                for g, slots_g in enumerate(slot_groups):
                    dec_g = tgt_dec[offset:offset + group_sizes[g]]
                    offset += group_sizes[g]
                    td = sum(slots_g[i][2].degree_of(dec_g[i])
                             for i in range(len(slots_g)))
                    tree_g = t_tree if g == 0 else rel_parts[g - 1]
                    labels.append(BarBasisLabel(tree_g, dec_g,
                                                s_parts[g], td))
                out.append((v_label, tuple(labels), coeff))
    return out


def module_structure_maps(bc, blocks, cache=None):
    """Ungrafting structure map of a one-sided bar or cobar complex.

    For a bar complex of a left module L this is the comodule map
    B(L)(A) -> B(P)(J) (x) B(L)(A_1) (x) ... (x) B(L)(A_r); for a cobar
    complex of a left comodule it is the module action running the other
    way.  The right coefficient must be the unit.
    """
    blocks = canonical_partition(blocks)
    if frozenset(x for b in blocks for x in b) != \
            frozenset(range(1, bc.arity + 1)):
        raise ValidationError("blocks must partition {1..arity}")
    if bc.r_coeff.rank(1) != 1 or any(
            bc.r_coeff.rank(n) for n in range(2, bc.arity + 1)):
        raise ValidationError("structure maps need a one-sided complex")
    r = len(blocks)
    p = bc.op
    if bc.kind == BAR:
        skel = reduced_bar(p, r, cache)
        parts = [_one_sided(bc, len(b), cache) for b in blocks]
    else:
        skel = reduced_cobar(p, r, cache)
        parts = [_one_sided(bc, len(b), cache) for b in blocks]
    factors = [skel.complex] + [pt.complex for pt in parts]
    tensor = tensor_list(factors)
    tindex = _TensorIndex(tensor)
    entries = {}
    for v_label, labels, coeff in _partition_split_terms(
            bc, skel, parts, blocks):
        dv, iv = bc.index(v_label)
        dt, it = tindex(labels)
        if dt != dv:
            raise InternalConsistencyError("structure map changes degree")
        if bc.kind == BAR:
            entries.setdefault(dv, {})[(it, iv)] = coeff
        else:
            entries.setdefault(dv, {})[(iv, it)] = coeff
    if bc.kind == BAR:
        mats = {d: ExactMatrix(tensor.rank(d), bc.complex.rank(d), e,
                               ring=bc.ring)
                for d, e in entries.items()}
        for d in bc.complex.degrees():
            mats.setdefault(d, ExactMatrix.zero(
                tensor.rank(d), bc.complex.rank(d), ring=bc.ring))
        return ChainMap(bc.complex, tensor, mats)
    mats = {d: ExactMatrix(bc.complex.rank(d), tensor.rank(d), e,
                           ring=bc.ring)
            for d, e in entries.items()}
    for d in tensor.degrees():
        mats.setdefault(d, ExactMatrix.zero(
            bc.complex.rank(d), tensor.rank(d), ring=bc.ring))
    return ChainMap(tensor, bc.complex, mats)


def _one_sided(bc, arity, cache=None):
    """The same one-sided construction at another arity."""
    key = one_sided_key(bc.kind, bc.r_coeff, bc.op, bc.l_coeff, arity)
    if cache is not None and key in cache:
        return cache[key]
    if bc.kind == BAR:
        out = bar_complex(bc.r_coeff, bc.op, bc.l_coeff, arity)
    else:
        out = cobar_complex(bc.r_coeff, bc.op, bc.l_coeff, arity)
    if cache is not None:
        cache[key] = out
    return out


# ---------------------------------------------------------------------------
# Koszulness, Koszul duals, derivatives of the identity


class KoszulReport:
    """Concentration flags, homology, and induced structure on homology.

    For operads: per-arity rational homology of the reduced bar complex,
    concentration in top tree degree, homology representatives, induced
    cocomposition matrices K(N) -> K(m) (x) K(k) for canonical splits,
    and the signed symmetric action on K.  For cooperads: the cobar-side
    analogues, with composition matrices running the other way.
    """

    def __init__(self, kind, name, max_arity):
        self.kind = kind
        self.name = name
        self.max_arity = max_arity
        self.ring = RAT
        self.concentrated = {}
        self.summaries = {}
        self.complexes = {}
        self.reps = {}
        self.modules = {}
        self.structure = {}
        self.actions = {}

    def dimension(self, arity):
        return len(self.reps.get(arity, []))

    def is_koszul(self):
        return all(self.concentrated.values())

    def k_module(self, arity):
        return self.modules[arity]

    def export_text(self):
        lines = [f"koszul kind {self.kind} name {self.name} "
                 f"max_arity {self.max_arity}"]
        for n in sorted(self.summaries):
            flag = "concentrated" if self.concentrated[n] else "spread"
            dims = {d: self.modules[n].rank(d)
                    for d in self.modules[n].degrees()}
            lines.append(f"arity {n}: {flag} dims {dims}")
        return "\n".join(lines)


def _top_signed_degree(kind, arity):
    top = max(arity - 1, 0)
    return top if kind == BAR else -top


def koszul(structure, max_arity=None, with_structure=True, cache=None):
    """Koszulness report for a reduced operad or cooperad, over Q."""
    if isinstance(structure, Operad):
        kind = BAR
    elif isinstance(structure, Cooperad):
        kind = COBAR
    else:
        raise ValidationError("koszul expects an operad or a cooperad")
    max_arity = max_arity or structure.max_arity
    if cache is None:
        cache = {}
    report = KoszulReport(kind, getattr(structure, "name", "?"), max_arity)
    build = reduced_bar if kind == BAR else reduced_cobar
    for n in range(1, max_arity + 1):
        bc = build(structure, n, cache)
        report.complexes[n] = bc
        report.summaries[n] = bc.homology(ring=RAT)
        top = _top_signed_degree(kind, n)
        concentrated = True
        for t, sub in bc.split_by_internal_degree().items():
            h = homology(sub, ring=RAT)
            for s in h.degrees():
                if s != top:
                    concentrated = False
        report.concentrated[n] = concentrated
        reps = []
        spaces = {}
        for d in bc.complex.degrees():
            level, _b = homology_representatives(bc.complex, d)
            for z in level:
                spaces.setdefault(d, []).append(f"h{n}.{d}.{len(reps)}")
                reps.append((d, z))
        report.reps[n] = reps
        report.modules[n] = GradedFreeModule(
            {d: tuple(v) for d, v in spaces.items()})
    if with_structure and report.is_koszul():
        _koszul_structure(structure, report, cache)
        _koszul_actions(report)
    return report


def _koszul_structure(structure, report, cache):
    """Induced (co)composition matrices on homology for canonical splits."""
    kind = report.kind
    for total in range(1, report.max_arity + 1):
        for k in range(1, total + 1):
            m = total - k + 1
            if m < 1:
                continue
            for a in range(1, m + 1):
                b_side = tuple(range(a, a + k))
                a_side = tuple(x for x in range(1, total + 1)
                               if x < a or x >= a + k) + (a,)
                key = (m, a, k)
                if kind == BAR:
                    cm = bar_cocomposition(structure, total, a,
                                           a_side, b_side, cache)
                    report.structure[key] = _induced_on_homology_pairs(
                        report, total, m, k, cm, direction="split")
                else:
                    cm = cobar_composition(structure, total, a,
                                           a_side, b_side, cache)
                    report.structure[key] = _induced_on_homology_pairs(
                        report, total, m, k, cm, direction="merge")


def _rep_vector_in_tensor(tensor_index, bc_a, bc_b, rep_a, rep_b):
    """Coordinates of u (x) v inside the binary tensor complex.

    The factors are taken in order, so no Koszul signs arise.
    """
    da, za = rep_a
    db, zb = rep_b
    out = {}
    for ia, ca in za.items():
        lab_a = bc_a.complex.labels(da)[ia]
        for ib, cb in zb.items():
            lab_b = bc_b.complex.labels(db)[ib]
            _d, idx = tensor_index((lab_a, lab_b))
            out[idx] = out.get(idx, 0) + ca * cb
    return da + db, out


def _induced_on_homology_pairs(report, total, m, k, chain_map, direction):
    """Express a chain map through homology in the Kunneth pair basis.

    direction "split": map from the total complex to the tensor; the
    result has rows indexed by pairs (row-major over K(m), K(k)) and
    columns by K(total).  direction "merge": the transposed layout, as
    for an operad composition.
    """
    bc_n = report.complexes[total]
    bc_m = report.complexes[m]
    bc_k = report.complexes[k]
    tensor_cplx = (chain_map.target if direction == "split"
                   else chain_map.source)
    tindex = _TensorIndex(tensor_cplx)
    reps_n = report.reps[total]
    reps_m = report.reps[m]
    reps_k = report.reps[k]
    dim_m, dim_k, dim_n = len(reps_m), len(reps_k), len(reps_n)
    pair_vecs = {}
    for im, rep_m in enumerate(reps_m):
        for ik, rep_k in enumerate(reps_k):
            deg, vec = _rep_vector_in_tensor(tindex, bc_m, bc_k,
                                             rep_m, rep_k)
            pair_vecs[(im, ik)] = (deg, vec)
    entries = {}
    if direction == "split":
        for jn, (dn, zn) in enumerate(reps_n):
            img = chain_map.component(dn).apply(zn)
            coords = _solve_pairs(tensor_cplx, pair_vecs, dn, img)
            for (im, ik), c in coords.items():
                entries[(im * dim_k + ik, jn)] = c
        shape = (dim_m * dim_k, dim_n)
    else:
        hr_cache = {}
        for (im, ik), (deg, vec) in sorted(pair_vecs.items()):
            img = chain_map.component(deg).apply(vec)
            if deg not in hr_cache:
                hr_cache[deg] = homology_representatives(bc_n.complex, deg)
            reps_d, bnd_d = hr_cache[deg]
            coords = express_in_homology(bc_n.complex, deg, img,
                                         reps=reps_d, boundaries=bnd_d)
            # Map level-d representative coordinates back to K(total) slots.
            slots = [j for j, (dj, _z) in enumerate(reps_n) if dj == deg]
            for pos, c in enumerate(coords):
                if c != 0:
                    entries[(slots[pos], im * dim_k + ik)] = c
        shape = (dim_n, dim_m * dim_k)
    return ExactMatrix(shape[0], shape[1],
                       {k2: v for k2, v in entries.items() if v != 0},
                       ring=RAT)


def _solve_pairs(tensor_cplx, pair_vecs, degree, vec):
    slots = [key for key, (d, _v) in sorted(pair_vecs.items()) if d == degree]
    basis = [ {i: Fraction(c) for i, c in pair_vecs[key][1].items()}
              for key in slots]
    boundary = tensor_cplx.differential(degree + 1)
    boundaries = []
    for j in range(boundary.ncols):
        col = boundary.column(j)
        if col:
            boundaries.append({i: Fraction(c) for i, c in col.items()})
    coords = solve_in_span(boundaries + basis,
                           {i: Fraction(c) for i, c in vec.items()})
    if coords is None:
        raise InternalConsistencyError(
            "homology image misses the Kunneth span")
    nb = len(boundaries)
    out = {}
    for pos, c in coords.items():
        if pos >= nb and c != 0:
            out[slots[pos - nb]] = c
    return out


def _koszul_actions(report):
    """Signed symmetric action on the homology representatives."""
    for n in range(2, report.max_arity + 1):
        bc = report.complexes[n]
        reps = report.reps[n]
        mats = []
        hr_cache = {}
        for i in range(1, n):
            sigma = list(range(1, n + 1))
            sigma[i - 1], sigma[i] = sigma[i], sigma[i - 1]
            act = symmetric_action(bc, tuple(sigma))
            entries = {}
            for j, (d, z) in enumerate(reps):
                img = act[d].apply(z)
                if d not in hr_cache:
                    hr_cache[d] = homology_representatives(bc.complex, d)
                reps_d, bnd_d = hr_cache[d]
                coords = express_in_homology(bc.complex, d, img,
                                             reps=reps_d, boundaries=bnd_d)
                slots = [jj for jj, (dj, _z) in enumerate(reps) if dj == d]
                for pos, c in enumerate(coords):
                    if c != 0:
                        entries[(slots[pos], j)] = c
            size = len(reps)
            mats.append(ExactMatrix(size, size, entries, ring=RAT))
        report.actions[n] = tuple(mats)


def cooperad_from_koszul(report):
    """The Koszul dual cooperad assembled from a bar-side report."""
    if report.kind != BAR or not report.is_koszul():
        raise ValidationError("need a concentrated bar-side report")
    return Cooperad(_koszul_symseq(report), dict(report.structure),
                    name=f"K({report.name})")


def operad_from_koszul(report):
    """The Koszul dual operad assembled from a cobar-side report."""
    if report.kind != COBAR or not report.is_koszul():
        raise ValidationError("need a concentrated cobar-side report")
    return Operad(_koszul_symseq(report), dict(report.structure),
                  name=f"K({report.name})")


def _koszul_symseq(report):
    comps = {n: report.modules[n] for n in range(1, report.max_arity + 1)}
    actions = {n: report.actions[n] for n in report.actions}
    return SymSeq(RAT, comps, actions)


def derivatives_homology(max_arity=5, cache=None):
    """Homology operad of the derivatives of the identity.

    Runs the cobar construction over the dual of the one-dimensional
    operad and asserts concentration in degree 1 - n.
    """
    q = dual(builtin("com", max_arity, ring=INT))
    report = koszul(q, max_arity, with_structure=True, cache=cache)
    for n in range(2, max_arity + 1):
        if not report.concentrated[n]:
            raise InternalConsistencyError(
                f"derivatives homology not concentrated at arity {n}")
        degs = report.modules[n].degrees()
        if degs != [1 - n]:
            raise InternalConsistencyError(
                f"derivatives homology at arity {n} in degrees {degs}")
    return report


def jacobi_relation(report):
    """Null-space relation among the cyclic translates of [[x,y],z].

    Returns (dimension, relation vector) where the relation spans the
    kernel of the 2x3 matrix whose columns are the translates of the
    self-composite of the binary generator under the 3-cycles.
    """
    comp = report.structure[(2, 1, 2)]
    if comp.ncols != 1 or comp.nrows != 2:
        raise InternalConsistencyError("unexpected K-structure shapes")
    x = {i: v for (i, _j), v in comp.entries()}
    acts = report.actions[3]
    s1, s2 = acts

    def act(mat, vec):
        return mat.apply(vec)

    cyc = s1 * s2   # (1 2)(2 3) = the 3-cycle sending 2->1, 3->2, 1->3
    translates = [x, act(cyc, x), act(cyc * cyc, x)]
    cols = {}
    for j, v in enumerate(translates):
        for i, c in v.items():
            cols[(i, j)] = c
    mat = ExactMatrix(2, 3, cols, ring=RAT)
    from .exactla import kernel_basis
    kernel = kernel_basis(mat)
    return len(kernel), kernel[0] if kernel else None


# ---------------------------------------------------------------------------
# the module of a coalgebra over the derivatives


class ModuleMXReport:
    """Per-arity homology of the one-sided cobar over the sphere cooperad,
    plus the induced homology-level module over the derivatives operad."""

    def __init__(self, name, max_arity):
        self.name = name
        self.max_arity = max_arity
        self.summaries = {}
        self.complexes = {}
        self.reps = {}
        self.modules = {}
        self.homology_module = None

    def export_text(self):
        lines = [f"module-mx name {self.name} max_arity {self.max_arity}"]
        for n in sorted(self.summaries):
            lines.append(f"arity {n}:")
            for row in self.summaries[n].export_text().splitlines()[1:]:
                lines.append("  " + row)
        return "\n".join(lines)


def module_MX_homology(x_module, coproduct, max_arity=4, ring=INT,
                       deriv_report=None, with_action=True, cache=None):
    """Homology of the cobar construction on a coalgebra comodule.

    The comodule is the constant symmetric sequence of the coalgebra;
    coassociativity and graded cocommutativity are checked on entry.
    When with_action is set, the induced left action of the derivatives
    homology operad is computed and validated (unit, pentagon,
    equivariance) by constructing the homology-level module.
    """
    from .opalg import constant_comodule
    comodule = constant_comodule(x_module, coproduct, max_arity, ring=ring,
                                 name="mx")
    q = comodule.over
    r_unit = unit_module(q, RIGHT_COMODULE)
    report = ModuleMXReport("mx", max_arity)
    if cache is None:
        cache = {}
    complexes = {}
    for n in range(1, max_arity + 1):
        cc = cobar_complex(r_unit, q, comodule, n)
        cache[one_sided_key(COBAR, r_unit, q, comodule, n)] = cc
        complexes[n] = cc
        report.complexes[n] = cc
        report.summaries[n] = cc.homology(ring=ring)
    if not with_action:
        return report
    if deriv_report is None:
        deriv_report = derivatives_homology(max_arity, cache=cache)
    k_op = operad_from_koszul(deriv_report)
    # Homology representatives and signed symmetric action of H(M).
    action_mats = {}
    h_modules = {}
    h_reps = {}
    for n in range(1, max_arity + 1):
        cc = complexes[n]
        reps = []
        spaces = {}
        for d in cc.complex.degrees():
            level, _b = homology_representatives(cc.complex, d)
            for z in level:
                spaces.setdefault(d, []).append(f"m{n}.{d}.{len(reps)}")
                reps.append((d, z))
        h_reps[n] = reps
        h_modules[n] = GradedFreeModule(
            {d: tuple(v) for d, v in spaces.items()})
        report.reps[n] = reps
        report.modules[n] = h_modules[n]
    h_actions = {}
    for n in range(2, max_arity + 1):
        cc = complexes[n]
        reps = h_reps[n]
        hr_cache = {}
        mats = []
        for i in range(1, n):
            sigma = list(range(1, n + 1))
            sigma[i - 1], sigma[i] = sigma[i], sigma[i - 1]
            act = symmetric_action(cc, tuple(sigma))
            entries = {}
            for j, (d, z) in enumerate(reps):
                img = act[d].apply(z)
                if d not in hr_cache:
                    hr_cache[d] = homology_representatives(cc.complex, d)
                reps_d, bnd_d = hr_cache[d]
                coords = express_in_homology(cc.complex, d, img,
                                             reps=reps_d, boundaries=bnd_d)
                slots = [jj for jj, (dj, _z) in enumerate(reps) if dj == d]
                for pos, c in enumerate(coords):
                    if c != 0:
                        entries[(slots[pos], j)] = c
            mats.append(ExactMatrix(len(reps), len(reps), entries, ring=RAT))
        h_actions[n] = tuple(mats)
    h_symseq = SymSeq(RAT, h_modules, h_actions)
    # Induced action per partition, expressed in the homology bases.
    maps = {}
    for n in range(1, max_arity + 1):
        cc = complexes[n]
        hr_cache = {}
        for blocks in set_partitions(range(1, n + 1)):
            r = len(blocks)
            cm = module_structure_maps(cc, blocks, cache=cache)
            tindex = _TensorIndex(cm.source)
            reps_k = deriv_report.reps[r]
            part_reps = [h_reps[len(b)] for b in blocks]
            entries = {}
            col_sizes = [len(reps_k)] + [len(pr) for pr in part_reps]
            for combo in itertools.product(
                    *(range(s) for s in col_sizes)):
                rep_list = [reps_k[combo[0]]] + [
                    part_reps[j][combo[j + 1]] for j in range(r)]
                deg = sum(d for d, _z in rep_list)
                vec = _multi_tensor_vector(cm.source, tindex,
                                           [deriv_report.complexes[r]]
                                           + [complexes[len(b)]
                                              for b in blocks],
                                           rep_list)
                img = cm.component(deg).apply(vec)
                if deg not in hr_cache:
                    hr_cache[deg] = homology_representatives(
                        cc.complex, deg)
                reps_d, bnd_d = hr_cache[deg]
                coords = express_in_homology(cc.complex, deg, img,
                                             reps=reps_d, boundaries=bnd_d)
                slots = [jj for jj, (dj, _z) in enumerate(h_reps[n])
                         if dj == deg]
                col = flatten_index(col_sizes, combo)
                for pos, c in enumerate(coords):
                    if c != 0:
                        entries[(slots[pos], col)] = c
            rows = len(h_reps[n])
            cols = 1
            for s in col_sizes:
                cols *= s
            maps[blocks] = ExactMatrix(rows, cols, entries, ring=RAT)
    report.homology_module = SidedModule(
        LEFT_MODULE, h_symseq, k_op, maps, name="H(mx)")
    return report


def _multi_tensor_vector(tensor_cplx, tindex, factor_cplxs, rep_list):
    """Coordinates of rep_1 (x) ... (x) rep_r inside a tensor complex.

    All representatives live in single degrees, so no Koszul signs arise
    in forming the product of their coordinate expansions: the tensor
    basis is indexed by ordered tuples and the coefficients multiply.
    """
    out = {}
    items = [[] for _ in rep_list]
    for pos, (d, z) in enumerate(rep_list):
        labels = factor_cplxs[pos].complex.labels(d)
        for i, c in z.items():
            items[pos].append((labels[i], c))
    for combo in itertools.product(*items):
        labs = tuple(lab for lab, _c in combo)
        coeff = 1
        for _lab, c in combo:
            coeff *= c
        d, idx = tindex(labs)
        out[idx] = out.get(idx, 0) + coeff
    return out
