"""Universal operations on coinvariants.

The insertion operad on vertex-labeled graphs, the Gerstenhaber pre-Lie
product for operads, the odd Lie bracket for odd cyclic structures, and
the BV operator for odd non-connected kinds, together with the explicit
invariant-coinvariant hom blocks.

Sign convention for odd brackets: the new edge is inserted *between* the
two operands' orientation blocks (omega_a ^ e ^ omega_b); this realizes
odd antisymmetry [a,b] = -(-1)^((|a|+1)(|b|+1)) [b,a] with |.| the edge
degree.  The BV operator prepends its new edge, matching the transform
differential; its derivation defect is (-1)^{|a|} times the bracket (the
classical seven-term normalization).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .exactla import BasedSpace
from .freeops import (Classifier, DecoratedGraph, FOp, Truncation, VModule,
                      _norm_edge, local_contraction_data, plain, rooted,
                      trivial_vmodule)
from .instances import InstanceKind, enumerate_one_comma


class UniversalError(ValueError):
    pass


class BoundExceeded(UniversalError):
    pass


class LabelMissing(UniversalError):
    pass


# ----------------------------------------------------------------------
# Insertion operad on vertex-labeled graphs (no tails)
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class InsertionGraphClass:
    """Graph without tails on vertices labeled 1..n: a multiset of
    unordered vertex pairs (loops allowed).  Labels are distinguishable,
    so the class datum is just the sorted edge multiset."""
    n: int
    edges: tuple   # sorted tuple of (i, j) with i <= j, 1-based labels

    def __post_init__(self):
        norm = tuple(sorted((min(e), max(e)) for e in self.edges))
        object.__setattr__(self, "edges", norm)
        for i, j in norm:
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise UniversalError("edge endpoint outside labels")


def insertion_compose(a: InsertionGraphClass, v: int,
                      b: InsertionGraphClass):
    """No-tail insertion: delete vertex v of `a` and reattach each of its
    edge ends to every vertex of `b`; returns {class: multiplicity}.
    Labels relabel operadically: a's labels above v shift by b.n - 1,
    b's labels shift by v - 1."""
    if not (1 <= v <= a.n):
        raise LabelMissing("no vertex labeled %d" % v)
    n = a.n + b.n - 1

    def relabel_a(i):
        return i if i < v else i + b.n - 1

    fixed = []
    dangling = []
    for i, j in a.edges:
        if i == v and j == v:
            dangling.extend([None, None])
            fixed.append(("loop2",))
        elif i == v or j == v:
            other = j if i == v else i
            fixed.append(("half", relabel_a(other)))
        else:
            fixed.append(("full", relabel_a(i), relabel_a(j)))
    b_edges = [(i + v - 1, j + v - 1) for i, j in b.edges]
    b_vertices = [i + v - 1 for i in range(1, b.n + 1)]

    # each dangling end ranges over b's vertices
    slots = []
    for item in fixed:
        if item[0] == "half":
            slots.append(1)
        elif item[0] == "loop2":
            slots.append(2)
        else:
            slots.append(0)
    out = {}
    choices = [b_vertices] * sum(slots)
    for assign in itertools.product(*choices):
        it = iter(assign)
        edges = list(b_edges)
        for item in fixed:
            if item[0] == "half":
                edges.append((item[1], next(it)))
            elif item[0] == "loop2":
                edges.append((next(it), next(it)))
            else:
                edges.append((item[1], item[2]))
        cls = InsertionGraphClass(n, tuple(edges))
        out[cls] = out.get(cls, 0) + 1
    return out


# ----------------------------------------------------------------------
# Coinvariant elements of an FOp
# ----------------------------------------------------------------------

class CoinvariantElement(dict):
    """{(type key, orbit label): Fraction} in the direct sum of
    automorphism coinvariants."""

    def add(self, other, scale=1):
        out = CoinvariantElement(self)
        for k, v in other.items():
            s = out.get(k, Fraction(0)) + v * scale
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return out

    def scale(self, c):
        c = Fraction(c)
        return CoinvariantElement({k: v * c for k, v in self.items()}
                                  if c else {})


def coinv_normalize(fop: FOp, t, label):
    """(orbit key, sign) of a label in O(t)_{Aut(t)}, or None if killed."""
    best = None
    best_sign = None
    killed = False
    for perm in t.aut_perms():
        l2, s2 = fop.act(t, perm, label)
        if best is None or l2 < best:
            best, best_sign = l2, s2
        elif l2 == best and s2 != best_sign:
            killed = True
    if killed:
        return None
    return (t.key(), best), best_sign


def coinv_class(fop, t, label, coeff=1):
    res = coinv_normalize(fop, t, label)
    if res is None:
        return CoinvariantElement()
    key, sign = res
    return CoinvariantElement({key: Fraction(coeff) * sign})


def _type_from_key(tkey):
    from .freeops import CorollaType
    return CorollaType.from_key(tkey)


def prelie(a: CoinvariantElement, b: CoinvariantElement, fop: FOp) \
        -> CoinvariantElement:
    """a o b = sum_i a o_i b through the operad structure maps, projected
    back to orbit-normal form."""
    out = CoinvariantElement()
    for (tk1, l1), c1 in a.items():
        t1 = _type_from_key(tk1)
        for (tk2, l2), c2 in b.items():
            t2 = _type_from_key(tk2)
            for p1 in t1.ports():
                if t1.port_direction(p1) != "in":
                    continue
                tgt, relabel = local_contraction_data(t1, t2, p1, "r")
                if not fop.supports(tgt):
                    raise BoundExceeded("product leaves the supported window")
                for lab, c3 in fop.apply_edge(t1, l1, t2, l2, p1, "r",
                                              relabel, tgt).items():
                    out = out.add(coinv_class(fop, tgt, lab), c1 * c2 * c3)
    return out


def prelie_associator(a, b, c, fop):
    return prelie(prelie(a, b, fop), c, fop).add(
        prelie(a, prelie(b, c, fop), fop), -1)


def commutator(a, b, fop):
    return prelie(a, b, fop).add(prelie(b, a, fop), -1)


def jacobiator(a, b, c, fop):
    out = commutator(commutator(a, b, fop), c, fop)
    out = out.add(commutator(commutator(b, c, fop), a, fop))
    out = out.add(commutator(commutator(c, a, fop), b, fop))
    return out


# ----------------------------------------------------------------------
# Odd graph algebra: oriented decorated graphs with unlabeled tails
# ----------------------------------------------------------------------

class OddGraphAlgebra:
    """Coinvariant classes of the free odd construction on the trivial
    module: oriented graphs with unlabeled tails.  Elements are
    {key: Fraction}; degrees are edge counts."""

    def __init__(self, connected_only=True, max_edges=4):
        self.connected_only = connected_only
        self.max_edges = max_edges
        self.module = _open_trivial()
        self.classifier = Classifier(self.module, pin_legs=False)
        self._reps = {}

    def register(self, dg: DecoratedGraph):
        res = self.classifier.classify(dg)
        if res is None:
            return {}
        key, sign, rep = res
        self._reps.setdefault(key, rep)
        return {key: sign}

    def rep(self, key):
        return self._reps[key]

    def degree(self, key):
        return len(self._reps[key].edges)

    def vertex_class(self, nports):
        ((key, _),) = self.register(single_vertex_plain(nports)).items()
        return Element({key: Fraction(1)}, self)

    def element(self, data):
        return Element(data, self)


def _open_trivial():
    from .hopf import _OpenTrivialModule
    return _OpenTrivialModule()


def single_vertex_plain(nports):
    t = plain(nports)
    return DecoratedGraph(((t, "u"),), (), ())


class Element(dict):
    """Graph-class combination bound to its algebra."""

    def __init__(self, data, alg: OddGraphAlgebra):
        super().__init__({k: Fraction(v) for k, v in data.items() if v})
        self.alg = alg

    def add(self, other, scale=1):
        out = dict(self)
        for k, v in other.items():
            s = out.get(k, Fraction(0)) + v * scale
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return Element(out, self.alg)

    def scale(self, c):
        return Element({k: v * Fraction(c) for k, v in self.items()}, self.alg)

    def is_zero(self):
        return not self

    def homogeneous_degree(self):
        degs = {self.alg.degree(k) for k in self}
        if len(degs) > 1:
            raise UniversalError("inhomogeneous element")
        return degs.pop() if degs else 0


def _free_ports(dg: DecoratedGraph):
    used = {p for e in dg.edges for p in e}
    return [(i, p) for i, (t, _) in enumerate(dg.slots)
            for p in t.ports() if (i, p) not in used]


def _glue_cross(alg, d1, d2, middle=True):
    """All single-edge gluings of two graphs; the new edge sits between
    the operands' orientation blocks (middle=True) or first."""
    out = {}
    off = len(d1.slots)
    d2s = _shift(d2, off)
    for (i1, p1) in _free_ports(d1):
        for (i2, p2) in [(i + off, p) for i, p in _free_ports(d2)]:
            e = _norm_edge(((i1, p1), (i2, p2)))
            if middle:
                ori = d1.oriented + (e,) + d2s.oriented
            else:
                ori = (e,) + d1.oriented + d2s.oriented
            dg = DecoratedGraph(d1.slots + d2s.slots,
                                d1.edges + d2s.edges + (e,), (), ori)
            if len(dg.edges) > alg.max_edges:
                raise BoundExceeded("gluing exceeds the edge bound")
            for k, s in alg.register(dg).items():
                out[k] = out.get(k, Fraction(0)) + s
                if not out[k]:
                    del out[k]
    return out


def _shift(dg: DecoratedGraph, off):
    sh = lambda e: ((e[0][0] + off, e[0][1]), (e[1][0] + off, e[1][1]))
    return DecoratedGraph(dg.slots, tuple(sh(e) for e in dg.edges),
                          tuple((tp, (i + off, p)) for tp, (i, p) in dg.legs),
                          tuple(sh(e) for e in dg.oriented))


def odd_lie(a: Element, b: Element) -> Element:
    """The odd Lie bracket: signed sum over all single-edge gluings."""
    alg = a.alg
    out = {}
    for k1, c1 in a.items():
        for k2, c2 in b.items():
            for k, s in _glue_cross(alg, alg.rep(k1), alg.rep(k2)).items():
                v = out.get(k, Fraction(0)) + c1 * c2 * s
                if v:
                    out[k] = v
                else:
                    out.pop(k, None)
    return Element(out, alg)


def odd_antisymmetry_defect(a: Element, b: Element) -> Element:
    da, db = a.homogeneous_degree(), b.homogeneous_degree()
    sign = -(-1) ** ((da + 1) * (db + 1))
    return odd_lie(a, b).add(odd_lie(b, a), -sign)


def odd_jacobi_defect(a: Element, b: Element, c: Element) -> Element:
    da, db, dc = (x.homogeneous_degree() for x in (a, b, c))
    t1 = odd_lie(odd_lie(a, b), c).scale((-1) ** ((da + 1) * (dc + 1)))
    t2 = odd_lie(odd_lie(b, c), a).scale((-1) ** ((db + 1) * (da + 1)))
    t3 = odd_lie(odd_lie(c, a), b).scale((-1) ** ((dc + 1) * (db + 1)))
    return t1.add(t2).add(t3)


def symmetric_product(a: Element, b: Element) -> Element:
    """Disjoint union (the nc product); orientations concatenate."""
    alg = a.alg
    out = {}
    for k1, c1 in a.items():
        for k2, c2 in b.items():
            d1, d2 = alg.rep(k1), alg.rep(k2)
            d2s = _shift(d2, len(d1.slots))
            dg = DecoratedGraph(d1.slots + d2s.slots, d1.edges + d2s.edges,
                                (), d1.oriented + d2s.oriented)
            for k, s in alg.register(dg).items():
                v = out.get(k, Fraction(0)) + c1 * c2 * s
                if v:
                    out[k] = v
                else:
                    out.pop(k, None)
    return Element(out, alg)


def bv_delta(a: Element) -> Element:
    """Self-gluings (loop insertions), the new edge first in the
    orientation; squares to zero."""
    alg = a.alg
    out = {}
    for k1, c1 in a.items():
        dg = alg.rep(k1)
        ports = _free_ports(dg)
        for idx1 in range(len(ports)):
            for idx2 in range(idx1 + 1, len(ports)):
                e = _norm_edge((ports[idx1], ports[idx2]))
                d2 = DecoratedGraph(dg.slots, dg.edges + (e,), (),
                                    (e,) + dg.oriented)
                if len(d2.edges) > alg.max_edges:
                    raise BoundExceeded("gluing exceeds the edge bound")
                for k, s in alg.register(d2).items():
                    v = out.get(k, Fraction(0)) + c1 * s
                    if v:
                        out[k] = v
                    else:
                        out.pop(k, None)
    return Element(out, alg)


def bv_defect(a: Element, b: Element) -> Element:
    """Delta(ab) - Delta(a)b - (-1)^{|a|} a Delta(b); equals
    (-1)^{|a|} [a, b]."""
    da = a.homogeneous_degree()
    out = bv_delta(symmetric_product(a, b))
    out = out.add(symmetric_product(bv_delta(a), b), -1)
    out = out.add(symmetric_product(a, bv_delta(b)), -((-1) ** da))
    return out


# ----------------------------------------------------------------------
# Invariant-coinvariant hom blocks
# ----------------------------------------------------------------------

def hom_fv(source_types, target_types, kind: InstanceKind, max_edges=3):
    """Explicit class lists per (j, k) block of the universal hom spaces.

    For one target the block basis is the slot-ordered one-comma class
    list; for several targets the source slots are distributed over the
    targets in every way, with per-part one-comma classes."""
    if len(target_types) == 1:
        tgt = target_types[0].make_corolla("t")
        classes = enumerate_one_comma(
            kind, [t.make_corolla("c") for t in source_types], tgt,
            max_edges=max_edges)
        return [c.key for c in classes]
    n = len(source_types)
    out = []
    for assignment in itertools.product(range(len(target_types)), repeat=n):
        parts = []
        ok = True
        for kdx in range(len(target_types)):
            idxs = [i for i in range(n) if assignment[i] == kdx]
            sub = [source_types[i] for i in idxs]
            tgt = target_types[kdx].make_corolla("t")
            classes = enumerate_one_comma(
                kind, [t.make_corolla("c") for t in sub], tgt,
                max_edges=max_edges)
            if not classes:
                ok = False
                break
            parts.append(tuple(c.key for c in classes))
        if ok:
            for combo in itertools.product(*parts):
                out.append((assignment, combo))
    return sorted(set(out))
