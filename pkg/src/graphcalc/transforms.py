"""Bar and cobar constructions and the Feynman transform.

Conventions (fixed here, documented; the verified statements are
convention-independent):

* bar(o) for an even op o: basis = decorated ghost graphs with an
  orientation of all edges, homological degree = edge count, differential
  contracts one edge through o's structure maps with the sign that moves
  the edge to the front of the orientation.
* cobar(p) for an odd co-op p (module + even-coassociative splitting
  maps; the odd twist is the orientation line): basis = oriented
  decorated graphs, degree = -edge count, differential splits one vertex
  and prepends the new edge to the orientation.
* omega_bar(o) is the bar-cobar composite built directly: basis =
  decorated graphs with an oriented-edge subset, degree = number of
  oriented edges, d = sum over oriented edges of (unorient - contract);
  its degree-0 part is the free construction and the counit evaluates
  through o.
* The Feynman transform is the linear dual (labels marked with ^,
  grading negated, differentials transposed).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .exactla import BasedSpace, ChainComplex, SparseMap, cone, is_chain_map
from .freeops import (Classifier, CorollaType, DecoratedGraph, FOp,
                      FreeOpsError, Truncation, VModule, _norm_edge,
                      _profiles, _shapes_for_profile, contract_edge, dg_key,
                      evaluate_dg, single_vertex)
from .instances import InstanceKind


class TransformError(FreeOpsError):
    pass


class NotGraded(TransformError):
    pass


class NotQuadratic(TransformError):
    pass


class DSquareNonzero(TransformError):
    pass


class OddCoFOp:
    """Odd co-op input for the cobar construction: a V-module together
    with even-coassociative splitting maps.

    `co_edge(t, label)` yields (t1, l1, t2, l2, p1, p2, leg_assignment,
    coeff) tuples: the label splits into a two-vertex shape joined along
    p1/p2 whose remaining ports cover the target ports via
    leg_assignment: target port -> (slot, port).  `co_loop` mirrors it
    with one vertex.
    """

    def __init__(self, module: VModule, co_edge=None, co_loop=None, name=""):
        self.module = module
        self._co_edge = co_edge
        self._co_loop = co_loop
        self.name = name

    def types(self):
        return self.module.types()

    def space(self, t):
        return self.module.space(t)

    def co_edge(self, t, label):
        return self._co_edge(t, label) if self._co_edge else []

    def co_loop(self, t, label):
        return self._co_loop(t, label) if self._co_loop else []


def zero_co_op(module: VModule, name="zero"):
    return OddCoFOp(module, name=name)


@dataclass
class Stratum:
    degree: int
    space: BasedSpace
    reps: dict


class TransformResult:
    """Quasi-free chain data per corolla type."""

    def __init__(self, flavor, kind, bound, source, classifier):
        self.flavor = flavor
        self.kind = kind
        self.bound = bound
        self.source = source
        self.classifier = classifier
        self._complexes = {}
        self._reps = {}

    def complex(self, t: CorollaType) -> ChainComplex:
        if t not in self._complexes:
            self._complexes[t] = self._build(t)
        return self._complexes[t]

    def dims(self, t):
        cx = self.complex(t)
        return {k: cx.space(k).dim for k in cx.degrees()}

    def rep(self, key) -> DecoratedGraph:
        return self._reps[key]

    def check_d_squared(self, t):
        self.complex(t).verify_d_squared()
        return True


def _enumerate_decorated(module, kind, target_t, bound, classifier,
                         oriented="all"):
    """All decorated-graph classes at the target type; {key: rep}.

    oriented: 'all' (every edge oriented), 'none', or 'subsets' (one class
    per oriented-edge subset)."""
    out = {}
    for combo in _profiles(module, kind, target_t, bound):
        for shape in _shapes_for_profile(kind, combo, target_t):
            label_sets = [module.space(t).labels for t, _ in shape.slots]
            for labels in itertools.product(*label_sets):
                slots = tuple((shape.slots[i][0], labels[i])
                              for i in range(len(labels)))
                if oriented == "subsets":
                    pools = []
                    for r in range(len(shape.edges) + 1):
                        pools.extend(itertools.combinations(shape.edges, r))
                    variants = [tuple(sorted(sub)) for sub in pools]
                else:
                    variants = [shape.edges if oriented == "all" else ()]
                for ori in variants:
                    dg = DecoratedGraph(slots, shape.edges, shape.legs, ori)
                    res = classifier.classify(dg)
                    if res is not None:
                        out.setdefault(res[0], res[2])
    return out


def _move_front_sign(oriented, e):
    return Fraction(-1) ** oriented.index(e)


class BarResult(TransformResult):
    def __init__(self, op: FOp, kind, bound):
        if not kind.graded:
            raise NotGraded("kind %s admits no edge grading" % kind.name)
        module = op.as_vmodule()
        super().__init__("bar", kind, bound, op,
                         Classifier(module, pin_legs=True))
        self.module = module

    def _build(self, t):
        classes = _enumerate_decorated(self.module, self.kind, t, self.bound,
                                       self.classifier, oriented="all")
        self._reps.update(classes)
        by_deg = {}
        for key, rep in classes.items():
            by_deg.setdefault(len(rep.edges), []).append(key)
        spaces = {k: BasedSpace(sorted(v)) for k, v in by_deg.items()}
        if not spaces:
            spaces = {0: BasedSpace(())}
        diffs = {}
        for k in sorted(spaces):
            if k - 1 not in spaces:
                if k > 0 and spaces[k].dim:
                    spaces[k - 1] = BasedSpace(())
        for k in sorted(spaces):
            if k == 0 or k not in spaces or (k - 1) not in spaces:
                continue
            d = SparseMap(spaces[k], spaces.get(k - 1, BasedSpace(())))
            for key in spaces[k].labels:
                for lab, coeff in self._d_edge(key).items():
                    d.set_entry(lab, key, coeff)
            diffs[k] = d
        try:
            return ChainComplex(spaces, diffs)
        except Exception as exc:
            raise DSquareNonzero(str(exc))

    def _d_edge(self, key):
        rep = self.rep(key)
        out = {}
        for e in rep.oriented:
            sign = _move_front_sign(rep.oriented, e)
            stripped = DecoratedGraph(rep.slots, rep.edges, rep.legs,
                                      tuple(x for x in rep.oriented if x != e))
            for d2, c2 in contract_edge(stripped, e, self.source):
                res = self.classifier.classify(d2)
                if res is None:
                    continue
                k2, s2, r2 = res
                self._reps.setdefault(k2, r2)
                v = out.get(k2, Fraction(0)) + sign * c2 * s2
                if v:
                    out[k2] = v
                else:
                    out.pop(k2, None)
        return out


def bar(op: FOp, kind: InstanceKind, bound: Truncation) -> BarResult:
    return BarResult(op, kind, bound)


class CobarResult(TransformResult):
    """Cobar of an odd co-op: oriented decorated graphs, expansion
    differential; graded by minus the edge count (homological)."""

    def __init__(self, co: OddCoFOp, kind, bound):
        if not kind.graded:
            raise NotGraded("kind %s admits no edge grading" % kind.name)
        super().__init__("cobar", kind, bound, co,
                         Classifier(co.module, pin_legs=True))
        self.module = co.module

    def _build(self, t):
        classes = _enumerate_decorated(self.module, self.kind, t, self.bound,
                                       self.classifier, oriented="all")
        self._reps.update(classes)
        by_deg = {}
        for key, rep in classes.items():
            by_deg.setdefault(-len(rep.edges), []).append(key)
        spaces = {k: BasedSpace(sorted(v)) for k, v in by_deg.items()}
        if not spaces:
            spaces = {0: BasedSpace(())}
        diffs = {}
        for k in sorted(spaces):
            if (k - 1) not in spaces:
                continue
            d = SparseMap(spaces[k], spaces[k - 1])
            for key in spaces[k].labels:
                for lab, coeff in self._d_split(key).items():
                    d.set_entry(lab, key, coeff)
            diffs[k] = d
        try:
            return ChainComplex(spaces, diffs)
        except Exception as exc:
            raise DSquareNonzero(str(exc))

    def _d_split(self, key):
        rep = self.rep(key)
        out = {}
        for i, (t, l) in enumerate(rep.slots):
            for (t1, l1, t2, l2, p1, p2, leg_assign, coeff) in \
                    self.source.co_edge(t, l):
                dg2 = _expand_slot(rep, i, ((t1, l1), (t2, l2)),
                                   (p1, p2), leg_assign)
                if dg2 is None or len(dg2.edges) > self.bound.max_edges:
                    continue
                res = self.classifier.classify(dg2)
                if res is None:
                    continue
                k2, s2, r2 = res
                self._reps.setdefault(k2, r2)
                v = out.get(k2, Fraction(0)) + coeff * s2
                if v:
                    out[k2] = v
                else:
                    out.pop(k2, None)
        return out


def _expand_slot(dg: DecoratedGraph, i, new_slots, join_ports, leg_assign):
    """Replace slot i by two slots joined along join_ports; the old ports
    of slot i are covered via leg_assign: old port -> (0|1, port).  The
    new edge is prepended to the orientation."""
    off = len(dg.slots) - 1

    def mp(end):
        s, p = end
        if s < i:
            return (s, p)
        if s > i:
            return (s + 1, p)
        which, np = leg_assign[p]
        return (i + which, np)

    slots = dg.slots[:i] + new_slots + dg.slots[i + 1:]
    new_edge = _norm_edge(((i, join_ports[0]), (i + 1, join_ports[1])))
    edges = tuple(_norm_edge((mp(a), mp(b))) for a, b in dg.edges)
    legs = tuple((tp, mp(end)) for tp, end in dg.legs)
    oriented = (new_edge,) + tuple(_norm_edge((mp(a), mp(b)))
                                   for a, b in dg.oriented)
    return DecoratedGraph(slots, edges + (new_edge,), legs, oriented)


def cobar(co, kind: InstanceKind, bound: Truncation):
    """Cobar of an odd co-op; a BarResult input delegates to the direct
    bar-cobar composite of its source."""
    if isinstance(co, BarResult):
        return omega_bar(co.source, kind, bound)
    return CobarResult(co, kind, bound)


class OmegaBarResult(TransformResult):
    """The bar-cobar composite: decorated graphs with an oriented-edge
    subset; degree = #oriented edges; d = sum (unorient - contract)."""

    def __init__(self, op: FOp, kind, bound):
        if not kind.graded:
            raise NotGraded("kind %s admits no edge grading" % kind.name)
        module = op.as_vmodule()
        super().__init__("omegabar", kind, bound, op,
                         Classifier(module, pin_legs=True))
        self.module = module

    def _build(self, t):
        classes = _enumerate_decorated(self.module, self.kind, t, self.bound,
                                       self.classifier, oriented="subsets")
        self._reps.update(classes)
        by_deg = {}
        for key, rep in classes.items():
            by_deg.setdefault(len(rep.oriented), []).append(key)
        spaces = {k: BasedSpace(sorted(v)) for k, v in by_deg.items()}
        diffs = {}
        for k in sorted(spaces):
            if k == 0 or (k - 1) not in spaces:
                continue
            d = SparseMap(spaces[k], spaces[k - 1])
            for key in spaces[k].labels:
                for lab, coeff in self._d_total(key).items():
                    d.set_entry(lab, key, coeff)
            diffs[k] = d
        try:
            return ChainComplex(spaces, diffs)
        except Exception as exc:
            raise DSquareNonzero(str(exc))

    def _d_total(self, key):
        rep = self.rep(key)
        out = {}

        def add(k2, v):
            s = out.get(k2, Fraction(0)) + v
            if s:
                out[k2] = s
            else:
                out.pop(k2, None)

        for e in rep.oriented:
            sign = _move_front_sign(rep.oriented, e)
            rest = tuple(x for x in rep.oriented if x != e)
            # unorient the edge
            un = DecoratedGraph(rep.slots, rep.edges, rep.legs, rest)
            res = self.classifier.classify(un)
            if res is not None:
                self._reps.setdefault(res[0], res[2])
                add(res[0], sign * res[1])
            # contract the edge through the op
            stripped = DecoratedGraph(rep.slots, rep.edges, rep.legs, rest)
            for d2, c2 in contract_edge(stripped, e, self.source):
                res = self.classifier.classify(d2)
                if res is None:
                    continue
                k2, s2, r2 = res
                self._reps.setdefault(k2, r2)
                add(k2, -sign * c2 * s2)
        return out

    def counit(self, t):
        """SparseMap from the degree-0 stratum to the op's value."""
        cx = self.complex(t)
        src = cx.space(0)
        tgt = self.source.space(t)
        m = SparseMap(src, tgt)
        for key in src.labels:
            for lab, coeff in evaluate_dg(self.rep(key), self.source,
                                          t).items():
                m.set_entry(lab, key, coeff)
        return m


def omega_bar(op: FOp, kind: InstanceKind, bound: Truncation) -> OmegaBarResult:
    return OmegaBarResult(op, kind, bound)


class DualResult(TransformResult):
    """Linear dual of a transform: ^-marked labels, negated grading,
    transposed differentials."""

    def __init__(self, inner: TransformResult):
        super().__init__("ft", inner.kind, inner.bound, inner,
                         inner.classifier)
        self.inner = inner

    def _build(self, t):
        cx = self.inner.complex(t)
        spaces = {-k: BasedSpace([l + "^" for l in cx.space(k).labels])
                  for k in cx.degrees()}
        diffs = {}
        for k in cx.degrees():
            if (k + 1) not in cx.spaces:
                continue
            dk1 = cx.differential(k + 1)   # C_{k+1} -> C_k
            # dual: D_{-k} -> D_{-k-1}
            d = SparseMap(spaces[-k], spaces[-k - 1])
            for c, col in dk1.cols.items():
                for r, v in col.items():
                    d.set_entry(c + "^", r + "^", v)
            if spaces[-k].dim and spaces[-k - 1].dim:
                diffs[-k] = d
        return ChainComplex(spaces, diffs)

    def rep(self, key):
        return self.inner.rep(key.rstrip("^"))


def feynman_transform(x, kind: InstanceKind, bound: Truncation) -> DualResult:
    """Dual of bar (even input) or of cobar (odd co-op input)."""
    if isinstance(x, FOp):
        return DualResult(bar(x, kind, bound))
    if isinstance(x, (OddCoFOp, BarResult)):
        return DualResult(cobar(x, kind, bound))
    raise TransformError("feynman_transform needs an FOp or an odd co-op")


@dataclass
class QuasiIsoReport:
    acyclic: bool
    cone_homology: dict
    left_homology: dict
    right_dim: int
    chain_map_ok: bool


def quasi_iso_check(op: FOp, kind: InstanceKind, bound: Truncation,
                    t: CorollaType) -> QuasiIsoReport:
    """Mapping cone of the bar-cobar counit at one corolla type."""
    if not kind.quadratic:
        raise NotQuadratic("kind %s is not quadratic" % kind.name)
    ob = omega_bar(op, kind, bound)
    cx = ob.complex(t)
    eps = ob.counit(t)
    target = ChainComplex({0: op.space(t)}, {})
    f_maps = {0: eps}
    ok = is_chain_map(f_maps, cx, target)
    cn = cone(f_maps, cx, target)
    hom = cn.homology_dims()
    return QuasiIsoReport(all(v == 0 for v in hom.values()), hom,
                          cx.homology_dims(), op.space(t).dim, ok)
