"""The edge-graded bialgebra on classes of one-comma morphisms.

Elements are rational combinations of symmetric products (multisets) of
connected decorated ghost-graph classes with unlabeled tails; the unit is
the empty product.  The coproduct sums over decompositions: choose a
subset of the ghost edges, contract it first (its connected pieces form
the left leg), the quotient class is the right leg.  Grading by total
edge count is preserved; the connected graded structure provides the
antipode by recursion.

The classical rooted-tree Hopf algebra (the leaf-gluing flavor, where
decompositions are admissible cuts) is provided separately as
`RootedTreeAlgebra` for cross-checks against the standard antipode.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .freeops import (Classifier, DecoratedGraph, VModule, _norm_edge,
                      _profiles, _shapes_for_profile, Truncation, plain,
                      rooted, trivial_vmodule, kind_regime_type)
from .instances import InstanceKind


class HopfError(ValueError):
    pass


class NotCompositionFinite(HopfError):
    pass


class NotConnectedGraded(HopfError):
    pass


def _multiset(items):
    return tuple(sorted(items))


class HopfElement(dict):
    """{multiset of class keys: Fraction}; the unit is {(): 1}."""

    def __init__(self, data=None):
        super().__init__()
        for k, v in (data or {}).items():
            v = Fraction(v)
            if v:
                self[tuple(k)] = v

    @classmethod
    def unit(cls):
        return cls({(): Fraction(1)})

    @classmethod
    def of(cls, *keys):
        return cls({_multiset(keys): Fraction(1)})

    def add(self, other, scale=1):
        out = HopfElement(self)
        for k, v in other.items():
            s = out.get(k, Fraction(0)) + v * scale
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return out

    def scale(self, c):
        c = Fraction(c)
        return HopfElement({k: v * c for k, v in self.items()} if c else {})

    def product(self, other):
        out = HopfElement()
        for k1, v1 in self.items():
            for k2, v2 in other.items():
                key = _multiset(k1 + k2)
                s = out.get(key, Fraction(0)) + v1 * v2
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        return out


class Tensor(dict):
    """{(multiset, multiset): Fraction} for coproduct values."""

    def add_term(self, left, right, coeff):
        key = (tuple(left), tuple(right))
        s = self.get(key, Fraction(0)) + coeff
        if s:
            self[key] = s
        else:
            self.pop(key, None)

    def add(self, other, scale=1):
        out = Tensor(self)
        for k, v in other.items():
            s = out.get(k, Fraction(0)) + v * scale
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return out

    def product(self, other):
        out = Tensor()
        for (l1, r1), v1 in self.items():
            for (l2, r2), v2 in other.items():
                out.add_term(_multiset(l1 + l2), _multiset(r1 + r2), v1 * v2)
        return out


class _OpenTrivialModule(VModule):
    """Trivial one-dimensional module supporting every corolla type
    (quotient vertices outgrow the generator flag bound)."""

    def __init__(self):
        super().__init__({})

    def space(self, t):
        if t not in self.spaces:
            from .exactla import BasedSpace
            self.spaces[t] = BasedSpace(["u"])
        return self.spaces[t]

    def supports(self, t):
        return True


class ClassAlgebra:
    """Graph-kind realization: classes are connected decorated ghost
    graphs with unlabeled tails; Delta enumerates ghost-edge subsets."""

    def __init__(self, kind: InstanceKind, max_flags=3, genus_bound=1):
        self.kind = kind
        self.max_flags = max_flags
        self.genus_bound = genus_bound
        self.gen_types = self._default_types()
        self.module = _OpenTrivialModule()
        self.classifier = Classifier(self.module, pin_legs=False)
        self._reps = {}
        self._antipode_memo = {}

    def _default_types(self):
        types = []
        for n in range(0, self.max_flags + 1):
            if self.kind.genus_labeled:
                from .freeops import genus_type
                for g in range(self.genus_bound + 1):
                    types.append(genus_type(g, n))
            elif self.kind.rooted:
                if n >= 1:
                    types.append(rooted(n - 1))
            else:
                types.append(plain(n))
        return types

    def key_of(self, dg: DecoratedGraph):
        """Class key of a connected decorated graph (tails unlabeled)."""
        stripped = DecoratedGraph(dg.slots, dg.edges, (), dg.oriented)
        res = self.classifier.classify(stripped)
        if res is None:
            return None
        key, _, rep = res
        self._reps.setdefault(key, rep)
        return key

    def rep(self, key):
        return self._reps[key]

    def degree(self, key):
        return len(self._reps[key].edges)

    def classes_up_to(self, max_edges):
        """All connected classes with <= max_edges edges, >= 1 edge."""
        out = set()
        for edges in range(1, max_edges + 1):
            for k in range(1, edges + 2):
                for combo in itertools.combinations_with_replacement(
                        self.gen_types, k):
                    total = sum(len(t.ports()) for t in combo)
                    tails = total - 2 * edges
                    if tails < 0:
                        continue
                    for key, rep in self._connected_pairings(
                            combo, edges, tails).items():
                        self._reps.setdefault(key, rep)
                        if self.degree(key) >= 1:
                            out.add(key)
        return sorted(out)

    def _connected_pairings(self, combo, edges, tails):
        """Connected admitted pairing classes (tails stay unlabeled)."""
        from .freeops import genus_type, pairing_shape_classes
        if self.kind.genus_labeled:
            targets = [genus_type(g, tails) for g in range(self.genus_bound + 1)]
        elif self.kind.rooted:
            targets = [rooted(tails - 1)] if tails >= 1 else []
        else:
            targets = [plain(tails)]
        found = {}
        for tt in targets:
            for key, rep in pairing_shape_classes(
                    self.kind, combo, edges, tt, self.classifier).items():
                if self._connected(rep):
                    found.setdefault(key, rep)
        return found

    @staticmethod
    def _connected(dg: DecoratedGraph):
        n = len(dg.slots)
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for (i, _), (j, _) in dg.edges:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
        return len({find(i) for i in range(n)}) <= 1

    # -- coproduct -------------------------------------------------------

    def _quotient_class(self, dg: DecoratedGraph, subset):
        """Contract the subset: (left leg multiset, right leg class)."""
        # left leg: connected components of the subgraph on `subset`
        n = len(dg.slots)
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for (i, _), (j, _) in subset:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
        comp_of = {i: find(i) for i in range(n)}
        comps = {}
        for i in range(n):
            comps.setdefault(comp_of[i], []).append(i)
        left_keys = []
        for root, members in sorted(comps.items()):
            medges = [e for e in subset
                      if comp_of[e[0][0]] == root]
            if not medges:
                continue  # untouched vertex: an identity piece, the unit
            idx = {v: k for k, v in enumerate(members)}
            piece = DecoratedGraph(
                tuple(dg.slots[v] for v in members),
                tuple(((idx[a[0]], a[1]), (idx[b[0]], b[1])) for a, b in medges),
                ())
            key = self.key_of(piece)
            if key is None:
                return None
            left_keys.append(key)
        # right leg: quotient graph: one vertex per component, remaining edges
        rest = [e for e in dg.edges if e not in set(subset)]
        roots = sorted(comps)
        ridx = {r: k for k, r in enumerate(roots)}
        # merged vertex types: collect remaining ports per component
        new_ports = {r: [] for r in roots}
        used = {p for e in subset for p in e}
        for i in range(n):
            t = dg.slots[i][0]
            for p in t.ports():
                if (i, p) not in used:
                    new_ports[comp_of[i]].append((i, p))
        from .freeops import genus_type
        slots = []
        port_rename = {}
        for r in roots:
            ports = new_ports[r]
            members = comps[r]
            if self.kind.genus_labeled:
                g = sum(dg.slots[i][0].genus for i in members)
                # add first Betti number of the contracted piece
                medges = [e for e in subset if comp_of[e[0][0]] == r]
                b1 = len(medges) - (len(members) - 1)
                t2 = genus_type(g + b1, len(ports))
            elif self.kind.rooted:
                outs = [ip for ip in ports
                        if dg.slots[ip[0]][0].port_direction(ip[1]) == "out"]
                if len(outs) != 1:
                    return None
                t2 = rooted(len(ports) - 1)
            else:
                t2 = plain(len(ports))
            label = self.module.space(t2).labels[0]
            slots.append((t2, label))
            tps = list(t2.ports())
            if self.kind.rooted:
                ordered = [ip for ip in ports
                           if dg.slots[ip[0]][0].port_direction(ip[1]) == "out"]
                ordered += [ip for ip in ports if ip not in ordered]
            else:
                ordered = ports
            for tp, ip in zip(tps, ordered):
                port_rename[ip] = (ridx[r], tp)
        q_edges = tuple(_norm_edge((port_rename[a], port_rename[b]))
                        for a, b in rest)
        quotient = DecoratedGraph(tuple(slots), q_edges, ())
        qkey = self.key_of(quotient)
        if qkey is None:
            return None
        return _multiset(left_keys), qkey

    def coproduct_class(self, key) -> Tensor:
        """Delta on one class: sum over ghost-edge subsets."""
        dg = self.rep(key)
        out = Tensor()
        edges = dg.edges
        for r in range(len(edges) + 1):
            for subset in itertools.combinations(edges, r):
                res = self._quotient_class(dg, subset)
                if res is None:
                    continue
                left, qkey = res
                right = (qkey,) if self.degree(qkey) >= 1 else ()
                out.add_term(left, right, Fraction(1))
        return out

    def coproduct(self, x: HopfElement) -> Tensor:
        out = Tensor()
        for mset, coeff in x.items():
            term = Tensor({((), ()): Fraction(1)})
            for key in mset:
                term = term.product(self.coproduct_class(key))
            out = out.add(term, coeff)
        return out

    def counit(self, x: HopfElement) -> Fraction:
        return x.get((), Fraction(0))

    def degree_of_multiset(self, mset):
        return sum(self.degree(k) for k in mset)

    # -- antipode ---------------------------------------------------------

    def antipode_class(self, key, _memo=None) -> HopfElement:
        memo = _memo if _memo is not None else self._antipode_memo
        if key in memo:
            return memo[key]
        # S(x) = -x - sum S(x') x'' over the reduced coproduct
        delta = self.coproduct_class(key)
        out = HopfElement.of(key).scale(-1)
        for (left, right), coeff in delta.items():
            if (left, right) in (((key,), ()), ((), (key,))):
                continue
            s_left = HopfElement.unit()
            for k in left:
                s_left = s_left.product(self.antipode(HopfElement.of(k), memo))
            term = s_left.product(HopfElement({tuple(right): Fraction(1)}))
            out = out.add(term, -coeff)
        memo[key] = out
        return out

    def antipode(self, x: HopfElement, _memo=None) -> HopfElement:
        memo = _memo if _memo is not None else self._antipode_memo
        out = HopfElement()
        for mset, coeff in x.items():
            term = HopfElement.unit()
            for key in mset:
                term = term.product(self.antipode_class(key, memo))
            out = out.add(term, coeff)
        return out

    def convolution_check(self, x: HopfElement):
        """m(S (x) id) Delta = u eps and the mirror identity."""
        delta = self.coproduct(x)
        left = HopfElement()
        right = HopfElement()
        for (l, r), coeff in delta.items():
            sl = self.antipode(HopfElement({tuple(l): Fraction(1)}))
            left = left.add(sl.product(HopfElement({tuple(r): Fraction(1)})),
                            coeff)
            sr = self.antipode(HopfElement({tuple(r): Fraction(1)}))
            right = right.add(
                HopfElement({tuple(l): Fraction(1)}).product(sr), coeff)
        expected = HopfElement.unit().scale(self.counit(x))
        return left == expected and right == expected


@dataclass
class BialgebraReport:
    passed: bool = True
    checks: int = 0
    failures: list = field(default_factory=list)

    def fail(self, witness):
        self.passed = False
        self.failures.append(witness)


def check_bialgebra(alg: ClassAlgebra, max_edges, coproduct_override=None) \
        -> BialgebraReport:
    """Coassociativity, product compatibility, grading preservation and
    both antipode convolution identities on all classes at the bound."""
    rep = BialgebraReport()
    copro = coproduct_override or alg.coproduct
    classes = alg.classes_up_to(max_edges)
    for key in classes:
        rep.checks += 1
        x = HopfElement.of(key)
        delta = copro(x)
        # grading preserved
        deg = alg.degree(key)
        for (l, r), _ in delta.items():
            if alg.degree_of_multiset(l) + alg.degree_of_multiset(r) != deg:
                rep.fail(("grading broken", key))
                break
        # counit axiom
        left_c = HopfElement()
        right_c = HopfElement()
        for (l, r), coeff in delta.items():
            if not l:
                left_c = left_c.add(HopfElement({tuple(r): Fraction(1)}), coeff)
            if not r:
                right_c = right_c.add(HopfElement({tuple(l): Fraction(1)}), coeff)
        if left_c != x or right_c != x:
            rep.fail(("counit axiom broken", key))
        # coassociativity: (Delta x id) Delta = (id x Delta) Delta
        lhs = {}
        rhs = {}
        for (l, r), coeff in delta.items():
            dl = copro(HopfElement({tuple(l): Fraction(1)}))
            for (a, b), c2 in dl.items():
                k3 = (a, b, tuple(r))
                lhs[k3] = lhs.get(k3, Fraction(0)) + coeff * c2
            dr = copro(HopfElement({tuple(r): Fraction(1)}))
            for (b, c), c2 in dr.items():
                k3 = (tuple(l), b, c)
                rhs[k3] = rhs.get(k3, Fraction(0)) + coeff * c2
        lhs = {k: v for k, v in lhs.items() if v}
        rhs = {k: v for k, v in rhs.items() if v}
        if lhs != rhs:
            rep.fail(("coassociativity broken", key))
        # antipode identities
        if not alg.convolution_check(x):
            rep.fail(("antipode identity broken", key))
    # product compatibility on pairs
    for k1 in classes[:6]:
        for k2 in classes[:6]:
            rep.checks += 1
            a, b = HopfElement.of(k1), HopfElement.of(k2)
            lhs = copro(a.product(b))
            rhs = copro(a).product(copro(b))
            if lhs != rhs:
                rep.fail(("product compatibility broken", k1, k2))
    return rep


# ----------------------------------------------------------------------
# Classical rooted trees (the leaf-gluing flavor): admissible cuts
# ----------------------------------------------------------------------

class RootedTree:
    """Canonical rooted tree: nested sorted tuples."""

    @staticmethod
    def node(children=()):
        return tuple(sorted(children))

    @staticmethod
    def vertices(t):
        return 1 + sum(RootedTree.vertices(c) for c in t)

    @staticmethod
    def edges(t):
        return RootedTree.vertices(t) - 1


class RootedTreeAlgebra:
    """The Connes-Kreimer rooted-tree Hopf algebra: Delta by admissible
    cuts, grading by vertex count, unit = the empty forest."""

    def coproduct_tree(self, t) -> Tensor:
        """Delta(t) = sum over admissible cuts P^c (x) R^c, including the
        full and empty cuts t (x) 1 and 1 (x) t."""
        out = Tensor()
        # recursive form: Delta(t) = t (x) 1 + (id (x) B+)(prod Delta(c))
        out.add_term((t,), (), Fraction(1))
        prod = Tensor({((), ()): Fraction(1)})
        for child in t:
            prod = prod.product(self.coproduct_tree(child))
        for (l, r), coeff in prod.items():
            out.add_term(l, (RootedTree.node(r),), coeff)
        return out

    def coproduct(self, x: HopfElement) -> Tensor:
        out = Tensor()
        for mset, coeff in x.items():
            term = Tensor({((), ()): Fraction(1)})
            for t in mset:
                term = term.product(self.coproduct_tree(t))
            out = out.add(term, coeff)
        return out

    def antipode_tree(self, t, _memo=None) -> HopfElement:
        memo = _memo if _memo is not None else {}
        if t in memo:
            return memo[t]
        out = HopfElement({(t,): Fraction(-1)})
        for (l, r), coeff in self.coproduct_tree(t).items():
            if (l, r) in (((t,), ()), ((), (t,))):
                continue
            s_left = HopfElement.unit()
            for c in l:
                s_left = s_left.product(self.antipode_tree(c, memo))
            out = out.add(s_left.product(HopfElement({r: Fraction(1)})), -coeff)
        memo[t] = out
        return out

    def antipode(self, x: HopfElement) -> HopfElement:
        memo = {}
        out = HopfElement()
        for mset, coeff in x.items():
            term = HopfElement.unit()
            for t in mset:
                term = term.product(self.antipode_tree(t, memo))
            out = out.add(term, coeff)
        return out

    def takeuchi_antipode(self, x: HopfElement) -> HopfElement:
        """Independent antipode: S = sum_{k>=0} (-1)^k m^{(k-1)} pi^{(x)k}
        Delta^{(k-1)} with pi = id - u eps (Takeuchi's formula).  The sum
        stops at the vertex grading, no recursion involved."""
        max_k = max((sum(RootedTree.vertices(t) for t in mset)
                     for mset in x), default=0)
        total = HopfElement.unit().scale(x.get((), Fraction(0)))  # k = 0
        chains = {(mset,): coeff for mset, coeff in x.items()}
        for k in range(1, max_k + 1):
            contrib = HopfElement()
            for legs, coeff in chains.items():
                if any(not leg for leg in legs):
                    continue  # pi kills a unit leg
                term = HopfElement.unit()
                for leg in legs:
                    term = term.product(HopfElement({tuple(leg): Fraction(1)}))
                contrib = contrib.add(term, coeff)
            total = total.add(contrib, Fraction(-1) ** k)
            nxt = {}
            for legs, coeff in chains.items():
                for (l, r), c2 in self.coproduct(
                        HopfElement({tuple(legs[-1]): Fraction(1)})).items():
                    key = legs[:-1] + (l, r)
                    s = nxt.get(key, Fraction(0)) + coeff * c2
                    if s:
                        nxt[key] = s
                    else:
                        nxt.pop(key, None)
            chains = nxt
        return total

    def all_trees(self, max_vertices):
        """All rooted trees with up to max_vertices vertices."""
        by_n = {1: [RootedTree.node()]}
        for n in range(2, max_vertices + 1):
            acc = set()
            # a tree with n vertices: root + forest with n-1 vertices
            for forest in self._forests(n - 1, by_n):
                acc.add(RootedTree.node(forest))
            by_n[n] = sorted(acc)
        out = []
        for n in range(1, max_vertices + 1):
            out.extend(by_n[n])
        return out

    def _forests(self, total, by_n):
        """Multisets of trees with `total` vertices altogether."""
        if total == 0:
            yield ()
            return
        for first_size in range(1, total + 1):
            for first in by_n[first_size]:
                for rest in self._forests(total - first_size, by_n):
                    cand = tuple(sorted((first,) + rest))
                    yield cand

    def all_trees_dedup(self, max_vertices):
        return sorted(set(self.all_trees(max_vertices)))
