"""Finite truncated V-modules, decorated-graph bases and free constructions.

A corolla type fixes a regime-dependent shape (plain arity, rooted arity,
(genus, arity), in/out profile) with canonical port names and an
automorphism group.  A V-module assigns a based space with a signed
permutation action to each supported type.  Free values are spanned by
decorated graphs: port graphs whose vertices carry module labels, whose
legs are pinned to the target type's ports, and which may carry an
orientation of a subset of their edges.  `classify` computes the canonical
representative together with the exact sign (orientation reorder signs,
label action signs, Koszul parity of odd-degree vertices), returning None
for orientation-killed classes.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

from .exactla import BasedSpace, SparseMap
from .graphs import Graph, canonical_form, corolla, disjoint_union
from .instances import (InstanceKind, enumerate_morphisms, kind_by_name)
from .morphisms import GraphMorphism


class FreeOpsError(ValueError):
    pass


class UnsupportedType(FreeOpsError):
    pass


class GenusBoundExceeded(FreeOpsError):
    pass


# ----------------------------------------------------------------------
# Corolla types
# ----------------------------------------------------------------------

_PORTS_CACHE = {}
_AUT_CACHE = {}


@dataclass(frozen=True)
class CorollaType:
    """Regime-dependent corolla shape with canonical port names."""
    regime: str   # plain | rooted | genus | directed
    data: tuple

    def ports(self):
        cached = _PORTS_CACHE.get(self)
        if cached is not None:
            return cached
        if self.regime == "plain":
            out = tuple("x%d" % i for i in range(self.data[0]))
        elif self.regime == "rooted":
            out = ("r",) + tuple("i%d" % i for i in range(self.data[0]))
        elif self.regime == "genus":
            out = tuple("x%d" % i for i in range(self.data[1]))
        elif self.regime == "directed":
            nin, nout = self.data
            out = tuple("o%d" % i for i in range(nout)) + \
                tuple("i%d" % i for i in range(nin))
        else:
            raise FreeOpsError("unknown regime %r" % self.regime)
        _PORTS_CACHE[self] = out
        return out

    def port_direction(self, p):
        if self.regime == "rooted":
            return "out" if p == "r" else "in"
        if self.regime == "directed":
            return "out" if p.startswith("o") else "in"
        return None

    @property
    def genus(self):
        return self.data[0] if self.regime == "genus" else 0

    def make_corolla(self, vertex="c", prefix=""):
        flags = [prefix + p for p in self.ports()]
        direction = None
        if self.regime in ("rooted", "directed"):
            direction = {prefix + p: self.port_direction(p) for p in self.ports()}
        genus = self.genus
        return corolla(vertex, flags, direction=direction, genus=genus)

    def aut_perms(self):
        """All automorphisms as dicts port -> port."""
        cached = _AUT_CACHE.get(self)
        if cached is not None:
            return cached
        out = self._aut_perms()
        _AUT_CACHE[self] = out
        return out

    def _aut_perms(self):
        ps = self.ports()
        if self.regime in ("plain", "genus"):
            return [dict(zip(ps, q)) for q in itertools.permutations(ps)]
        if self.regime == "rooted":
            ins = ps[1:]
            return [{**{"r": "r"}, **dict(zip(ins, q))}
                    for q in itertools.permutations(ins)]
        if self.regime == "directed":
            outs = [p for p in ps if p.startswith("o")]
            ins = [p for p in ps if p.startswith("i")]
            out = []
            for qo in itertools.permutations(outs):
                for qi in itertools.permutations(ins):
                    d = dict(zip(outs, qo))
                    d.update(dict(zip(ins, qi)))
                    out.append(d)
            return out
        raise FreeOpsError("unknown regime")

    def key(self):
        return "%s:%s" % (self.regime, ",".join(map(str, self.data)))

    @classmethod
    def from_key(cls, s):
        regime, _, rest = s.partition(":")
        data = tuple(int(x) for x in rest.split(",") if x != "")
        return cls(regime, data)

    def __str__(self):
        return self.key()


def plain(n):
    return CorollaType("plain", (n,))


def rooted(n):
    return CorollaType("rooted", (n,))


def genus_type(g, n):
    return CorollaType("genus", (g, n))


def directed_type(nin, nout):
    return CorollaType("directed", (nin, nout))


def type_of_corolla(kind: InstanceKind, g: Graph) -> CorollaType:
    v = g.vertices[0]
    flags = g.flags_at(v)
    if kind.genus_labeled:
        return genus_type(g.genus_of(v), len(flags))
    if kind.rooted:
        return rooted(len(flags) - 1)
    if kind.directed:
        nin = sum(1 for f in flags if g.direction.get(f) == "in")
        return directed_type(nin, len(flags) - nin)
    return plain(len(flags))


def kind_regime_type(kind: InstanceKind, nports, genus=0, nin=None):
    """The corolla type of the kind's regime with the given port count."""
    if kind.genus_labeled:
        return genus_type(genus, nports)
    if kind.rooted:
        return rooted(nports - 1)
    if kind.directed:
        return directed_type(nin, nports - nin)
    return plain(nports)


# ----------------------------------------------------------------------
# V-modules
# ----------------------------------------------------------------------

class VModule:
    """Assignment of based spaces with signed permutation actions.

    `act(t, perm, label) -> (label', sign)` where perm is a port dict;
    `degree` is the internal degree used for Koszul bookkeeping.
    """

    def __init__(self, spaces, act=None, degrees=None):
        self.spaces = dict(spaces)
        self._act = act
        self._degrees = degrees or {}
        self._orbit_cache = {}

    def types(self):
        return sorted(self.spaces, key=lambda t: t.key())

    def space(self, t) -> BasedSpace:
        if t not in self.spaces:
            raise UnsupportedType("type %s unsupported" % t)
        return self.spaces[t]

    def supports(self, t):
        return t in self.spaces

    def act(self, t, perm, label):
        if self._act is None:
            return label, Fraction(1)
        return self._act(t, perm, label)

    def degree(self, t, label):
        return self._degrees.get((t, label), 0)

    def orbit_key(self, t, label):
        """Minimal label in the Aut(t)-orbit (sign ignored); cached."""
        ck = (t, label)
        if ck not in self._orbit_cache:
            best = label
            for perm in t.aut_perms():
                l2, _ = self.act(t, perm, label)
                if l2 < best:
                    best = l2
            self._orbit_cache[ck] = best
        return self._orbit_cache[ck]


def trivial_vmodule(types, label="u"):
    return VModule({t: BasedSpace([label]) for t in types})


def regular_rooted_vmodule(arities):
    """Regular representation at every rooted arity: basis = orders of the
    input ports, with the automorphism action permuting ports."""
    spaces = {}
    for n in arities:
        t = rooted(n)
        labels = ["w:" + ",".join(p) for p in
                  itertools.permutations(["i%d" % i for i in range(n)])]
        spaces[t] = BasedSpace(labels)

    def act(t, perm, label):
        order = label[2:].split(",") if label[2:] else []
        new = [perm.get(p, p) for p in order]
        return "w:" + ",".join(new), Fraction(1)

    return VModule(spaces, act)


def validate_vmodule(mod: VModule):
    """Exhaustive group-law check of every action table."""
    for t in mod.types():
        perms = t.aut_perms()
        for label in mod.space(t).labels:
            for p1 in perms:
                for p2 in perms:
                    comp = {k: p2[p1[k]] for k in p1}
                    la, sa = mod.act(t, p1, label)
                    lb, sb = mod.act(t, p2, la)
                    lc, sc = mod.act(t, comp, label)
                    if (lb, sa * sb) != (lc, sc):
                        raise FreeOpsError(
                            "action not a group law at %s/%s" % (t, label))
    return True


def vmodule_to_json(mod: VModule) -> str:
    """File schema: per type key, labels and action as explicit tables."""
    data = {}
    for t in mod.types():
        entry = {"labels": list(mod.space(t).labels), "action": {}}
        for perm in t.aut_perms():
            pk = ";".join("%s>%s" % (k, perm[k]) for k in sorted(perm))
            entry["action"][pk] = {
                l: [mod.act(t, perm, l)[0], str(mod.act(t, perm, l)[1])]
                for l in mod.space(t).labels}
        degs = {l: mod.degree(t, l) for l in mod.space(t).labels
                if mod.degree(t, l)}
        if degs:
            entry["degrees"] = degs
        data[t.key()] = entry
    return json.dumps(data, sort_keys=True, indent=1)


def vmodule_from_json(text: str) -> VModule:
    data = json.loads(text)
    spaces = {}
    tables = {}
    degrees = {}
    for tk, entry in data.items():
        t = CorollaType.from_key(tk)
        spaces[t] = BasedSpace(entry["labels"])
        for pk, table in entry.get("action", {}).items():
            perm = {}
            for item in pk.split(";"):
                if item:
                    a, _, b = item.partition(">")
                    perm[a] = b
            key = (t, tuple(sorted(perm.items())))
            tables[key] = {l: (v[0], Fraction(v[1])) for l, v in table.items()}
        for l, d in entry.get("degrees", {}).items():
            degrees[(t, l)] = int(d)

    def act(t, perm, label):
        key = (t, tuple(sorted(perm.items())))
        if key in tables:
            return tables[key][label]
        return label, Fraction(1)

    return VModule(spaces, act, degrees)


@dataclass(frozen=True)
class Truncation:
    max_edges: int = 3
    max_vertices: int = 6
    max_genus: int = 1


# ----------------------------------------------------------------------
# Decorated port graphs
# ----------------------------------------------------------------------

def _norm_edge(e):
    a, b = e
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class DecoratedGraph:
    """Port graph: slots carry (type, label); edges join (slot, port)
    endpoints; legs pin free ports to the target type's ports; `oriented`
    lists a subset of edges with an order."""
    slots: tuple          # tuple of (CorollaType, label)
    edges: tuple          # tuple of ((i, p), (j, q)) normalized
    legs: tuple           # tuple of (target_port, (i, p))
    oriented: tuple = ()  # ordered tuple of normalized edges

    def __post_init__(self):
        object.__setattr__(self, "edges",
                           tuple(sorted(_norm_edge(e) for e in self.edges)))
        object.__setattr__(self, "oriented",
                           tuple(_norm_edge(e) for e in self.oriented))
        object.__setattr__(self, "legs", tuple(sorted(self.legs)))

    def leg_map(self):
        return dict(self.legs)

    def free_ports(self):
        used = set()
        for a, b in self.edges:
            used.add(a)
            used.add(b)
        out = []
        for i, (t, _) in enumerate(self.slots):
            for p in t.ports():
                if (i, p) not in used:
                    out.append((i, p))
        return out


def single_vertex(t: CorollaType, label) -> DecoratedGraph:
    return DecoratedGraph(((t, label),), (),
                          tuple((p, (0, p)) for p in t.ports()))


def _dg_to_graph(dg: DecoratedGraph, module: VModule, pin_legs=True):
    """Concrete Graph plus color maps for canonicalization."""
    vertices = ["s%d" % i for i in range(len(dg.slots))]
    flags, boundary, direction, genus = [], {}, {}, {}
    for i, (t, _) in enumerate(dg.slots):
        for p in t.ports():
            f = "s%d|%s" % (i, p)
            flags.append(f)
            boundary[f] = "s%d" % i
            d = t.port_direction(p)
            if d:
                direction[f] = d
        if t.regime == "genus" and t.genus:
            genus["s%d" % i] = t.genus
    involution = {f: f for f in flags}
    for (i, p), (j, q) in dg.edges:
        a, b = "s%d|%s" % (i, p), "s%d|%s" % (j, q)
        involution[a], involution[b] = b, a
    g = Graph(vertices, flags, involution, boundary,
              direction or None, genus or None)
    vertex_colors = {"s%d" % i: module.orbit_key(t, l)
                     for i, (t, l) in enumerate(dg.slots)}
    flag_colors = {}
    if pin_legs:
        for tp, (i, p) in dg.legs:
            flag_colors["s%d|%s" % (i, p)] = "leg:%s" % tp
    oset = set(dg.oriented)
    for e in dg.edges:
        if e in oset:
            (i, p), (j, q) = e
            flag_colors["s%d|%s" % (i, p)] = "ored"
            flag_colors["s%d|%s" % (j, q)] = "ored"
    return g, vertex_colors, flag_colors


def _perm_parity(seq):
    """Parity sign of a permutation given as a sequence of distinct ints."""
    sign = 1
    seen = [False] * len(seq)
    pos = {v: i for i, v in enumerate(sorted(seq))}
    perm = [pos[v] for v in seq]
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, ln = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            ln += 1
        if ln % 2 == 0:
            sign = -sign
    return sign


class Classifier:
    """Canonical forms with exact signs for decorated graphs over a module."""

    def __init__(self, module: VModule, pin_legs=True):
        self.module = module
        self.pin_legs = pin_legs
        self._cache = {}

    def classify(self, dg: DecoratedGraph):
        """(key, sign, representative) of the class of dg, or None if the
        class vanishes (some automorphism acts by -1)."""
        ck = (dg, self.pin_legs)
        if ck in self._cache:
            hit = self._cache[ck]
            return hit
        res = self._classify(dg)
        self._cache[ck] = res
        return res

    def _slot_ports_of_canon(self, canon, cf):
        """Port assignment on the canonical graph: per vertex, out flags
        first then the rest, in canonical flag order, mapped to the type's
        canonical ports (determined below by each candidate's slot types,
        which agree on permutation-equivalent types)."""
        order = {}
        for v in canon.vertices:
            fs = sorted(canon.flags_at(v),
                        key=lambda f: (0 if canon.direction.get(f) == "out" else 1,
                                       len(f), f))
            order[v] = fs
        return order

    def _classify(self, dg: DecoratedGraph):
        module = self.module
        g, vcol, fcol = _dg_to_graph(dg, module, self.pin_legs)
        cf = canonical_form(g, vertex_colors=vcol, flag_colors=fcol)
        canon = cf.graph
        flag_order = self._slot_ports_of_canon(canon, cf)

        # candidates: base relabeling composed with every automorphism of
        # the colored canonical graph
        base_v, base_f = cf.vertex_map, cf.flag_map
        candidates = []
        for vperm, fperm in cf.automorphisms:
            vm = {v: base_v[vperm[v]] for v in vperm}
            fm = {f: base_f[fperm[f]] for f in fperm}
            candidates.append((vm, fm))

        n = len(dg.slots)
        canon_vertex_index = {v: i for i, v in enumerate(canon.vertices)}
        results = []
        for vm, fm in candidates:
            sigma = [None] * n      # old slot -> new slot
            port_maps = [None] * n  # old slot: port -> new port
            new_types = [None] * n
            new_labels = [None] * n
            sign = Fraction(1)
            ok = True
            for i, (t, l) in enumerate(dg.slots):
                j = canon_vertex_index[vm["s%d" % i]]
                sigma[i] = j
                tports = t.ports()
                new_flag_order = flag_order[canon.vertices[j]]
                # new port names: position in the canonical flag order
                # mapped to the type's ports in canonical port order
                pm = {}
                for p in tports:
                    f_new = fm["s%d|%s" % (i, p)]
                    pos = new_flag_order.index(f_new)
                    pm[p] = tports_sorted(t)[pos]
                port_maps[i] = pm
                l2, s2 = module.act(t, pm, l)
                sign *= s2
                new_types[j] = t
                new_labels[j] = l2
            # Koszul parity of the slot permutation on odd-degree slots
            odd_positions = [sigma[i] for i in range(n)
                             if module.degree(dg.slots[i][0], dg.slots[i][1]) % 2]
            if odd_positions:
                sign *= _perm_parity(odd_positions)
            # transport edges/legs/orientation
            new_edges = []
            for (i, p), (j, q) in dg.edges:
                new_edges.append(_norm_edge(((sigma[i], port_maps[i][p]),
                                             (sigma[j], port_maps[j][q]))))
            new_legs = tuple(sorted(
                (tp, (sigma[i], port_maps[i][p])) for tp, (i, p) in dg.legs))
            new_or = [_norm_edge(((sigma[i], port_maps[i][p]),
                                  (sigma[j], port_maps[j][q])))
                      for (i, p), (j, q) in dg.oriented]
            canon_or = tuple(sorted(new_or))
            if new_or:
                sign *= _reorder_sign_seq(tuple(new_or), canon_or)
            rep = DecoratedGraph(tuple((new_types[k], new_labels[k])
                                       for k in range(n)),
                                 tuple(sorted(new_edges)), new_legs, canon_or)
            results.append((rep, sign))

        best = min(results, key=lambda rs: _dg_sort_key(rs[0]))
        best_rep = best[0]
        signs = {s for rep, s in results if rep == best_rep}
        if len(signs) > 1:
            return None
        key = dg_key(best_rep)
        return key, best[1], best_rep


_TPORTS_CACHE = {}


def tports_sorted(t: CorollaType):
    """Type ports with out ports first (matches the canonical flag order)."""
    cached = _TPORTS_CACHE.get(t)
    if cached is not None:
        return cached
    ps = t.ports()
    outs = [p for p in ps if t.port_direction(p) == "out"]
    rest = [p for p in ps if t.port_direction(p) != "out"]
    out = tuple(outs + rest)
    _TPORTS_CACHE[t] = out
    return out


def _reorder_sign_seq(a, b):
    pos = {e: i for i, e in enumerate(b)}
    perm = [pos[e] for e in a]
    return _perm_parity([p for p in perm])


def _dg_sort_key(dg: DecoratedGraph):
    return (tuple((t.key(), str(l)) for t, l in dg.slots),
            dg.edges, dg.legs, dg.oriented)


def dg_key(dg: DecoratedGraph) -> str:
    slot_s = ";".join("%s=%s" % (t.key(), l) for t, l in dg.slots)
    edge_s = ",".join("(%d.%s-%d.%s)" % (a[0], a[1], b[0], b[1])
                      for a, b in dg.edges)
    leg_s = ",".join("%s>%d.%s" % (tp, i, p) for tp, (i, p) in dg.legs)
    or_s = ",".join("(%d.%s-%d.%s)" % (a[0], a[1], b[0], b[1])
                    for a, b in dg.oriented)
    return "dg{%s|%s|%s|%s}" % (slot_s, edge_s, leg_s, or_s)


# ----------------------------------------------------------------------
# Grafting and contraction on decorated graphs
# ----------------------------------------------------------------------

def shift_slots(dg: DecoratedGraph, offset):
    sh = lambda e: ((e[0][0] + offset, e[0][1]), (e[1][0] + offset, e[1][1]))
    return DecoratedGraph(dg.slots,
                          tuple(sh(e) for e in dg.edges),
                          tuple((tp, (i + offset, p)) for tp, (i, p) in dg.legs),
                          tuple(sh(e) for e in dg.oriented))


def graft(d1: DecoratedGraph, d2: DecoratedGraph, pairs, leg_relabel,
          orient_new=False):
    """Join legs of d1 and d2 along `pairs` [(port1, port2), ...] (target
    ports of d1/d2 respectively), relabel the remaining legs via
    `leg_relabel`: (which, port) -> new target port.  New edges go first in
    the orientation when `orient_new`."""
    off = len(d1.slots)
    d2s = shift_slots(d2, off)
    legs1, legs2 = d1.leg_map(), d2s.leg_map()
    new_edges = []
    used1, used2 = set(), set()
    for p1, p2 in pairs:
        new_edges.append(_norm_edge((legs1[p1], legs2[p2])))
        used1.add(p1)
        used2.add(p2)
    legs = []
    for tp, port in d1.legs:
        if tp not in used1:
            legs.append((leg_relabel[(0, tp)], port))
    for tp, port in d2s.legs:
        if tp not in used2:
            legs.append((leg_relabel[(1, tp)], port))
    oriented = tuple(new_edges) + d1.oriented + d2s.oriented if orient_new \
        else d1.oriented + d2s.oriented
    return DecoratedGraph(d1.slots + d2s.slots,
                          d1.edges + d2s.edges + tuple(new_edges),
                          tuple(legs), oriented)


def self_graft(d: DecoratedGraph, p1, p2, leg_relabel, orient_new=False):
    """Join two legs of d into one new edge (loop-type structure map)."""
    legs = d.leg_map()
    new_edge = _norm_edge((legs[p1], legs[p2]))
    out_legs = [(leg_relabel[tp], port) for tp, port in d.legs
                if tp not in (p1, p2)]
    oriented = ((new_edge,) + d.oriented) if orient_new else d.oriented
    return DecoratedGraph(d.slots, d.edges + (new_edge,),
                          tuple(out_legs), oriented)


def merge_graphs(d1: DecoratedGraph, d2: DecoratedGraph, leg_relabel):
    off = len(d1.slots)
    d2s = shift_slots(d2, off)
    legs = [(leg_relabel[(0, tp)], port) for tp, port in d1.legs]
    legs += [(leg_relabel[(1, tp)], port) for tp, port in d2s.legs]
    return DecoratedGraph(d1.slots + d2s.slots, d1.edges + d2s.edges,
                          tuple(legs), d1.oriented + d2s.oriented)


# ----------------------------------------------------------------------
# FOps: functors given by generator structure maps
# ----------------------------------------------------------------------

_LOCAL_CACHE = {}


def local_contraction_data(t1, t2, p1, p2):
    """Merged corolla type and port relabel for contracting an edge
    joining port p1 of t1 with p2 of t2 (slot tags 0/1)."""
    ck = ("e", t1, t2, p1, p2)
    hit = _LOCAL_CACHE.get(ck)
    if hit is not None:
        return hit
    rem = [(0, p) for p in tports_sorted(t1) if p != p1]
    rem += [(1, p) for p in tports_sorted(t2) if p != p2]
    outs = [(s, p) for s, p in rem
            if (t1 if s == 0 else t2).port_direction(p) == "out"]
    ins = [(s, p) for s, p in rem
           if (t1 if s == 0 else t2).port_direction(p) == "in"]
    undirected = [(s, p) for s, p in rem
                  if (t1 if s == 0 else t2).port_direction(p) is None]
    if t1.regime == "genus":
        tgt = genus_type(t1.genus + t2.genus, len(undirected))
    elif t1.regime == "rooted":
        if len(outs) != 1:
            raise FreeOpsError("rooted contraction must keep one root")
        tgt = rooted(len(ins))
    elif t1.regime == "directed":
        tgt = directed_type(len(ins), len(outs))
    else:
        tgt = plain(len(undirected))
    ordered = outs + ins + undirected
    relabel = dict(zip(ordered, tports_sorted(tgt)))
    _LOCAL_CACHE[ck] = (tgt, relabel)
    return tgt, relabel


def local_loop_data(t, p1, p2):
    ck = ("l", t, p1, p2)
    hit = _LOCAL_CACHE.get(ck)
    if hit is not None:
        return hit
    rem = [p for p in tports_sorted(t) if p not in (p1, p2)]
    outs = [p for p in rem if t.port_direction(p) == "out"]
    ins = [p for p in rem if t.port_direction(p) == "in"]
    undirected = [p for p in rem if t.port_direction(p) is None]
    if t.regime == "genus":
        tgt = genus_type(t.genus + 1, len(undirected))
    elif t.regime == "rooted":
        raise FreeOpsError("rooted types admit no loops")
    elif t.regime == "directed":
        tgt = directed_type(len(ins), len(outs))
    else:
        tgt = plain(len(undirected))
    relabel = dict(zip(outs + ins + undirected, tports_sorted(tgt)))
    _LOCAL_CACHE[ck] = (tgt, relabel)
    return tgt, relabel


def local_merge_data(t1, t2):
    ck = ("m", t1, t2)
    hit = _LOCAL_CACHE.get(ck)
    if hit is not None:
        return hit
    rem = [(0, p) for p in tports_sorted(t1)] + \
        [(1, p) for p in tports_sorted(t2)]
    outs = [(s, p) for s, p in rem
            if (t1 if s == 0 else t2).port_direction(p) == "out"]
    ins = [(s, p) for s, p in rem
           if (t1 if s == 0 else t2).port_direction(p) == "in"]
    undirected = [(s, p) for s, p in rem
                  if (t1 if s == 0 else t2).port_direction(p) is None]
    if t1.regime == "genus":
        tgt = genus_type(t1.genus + t2.genus, len(undirected))
    elif t1.regime == "directed":
        tgt = directed_type(len(ins), len(outs))
    elif t1.regime == "plain":
        tgt = plain(len(undirected))
    else:
        raise FreeOpsError("mergers unsupported for regime %r" % t1.regime)
    relabel = dict(zip(outs + ins + undirected, tports_sorted(tgt)))
    _LOCAL_CACHE[ck] = (tgt, relabel)
    return tgt, relabel


class FOp:
    """Base interface: value spaces, automorphism action and the three
    simple structure maps.  Structure maps return {label: Fraction}."""

    kind = None

    def types(self):
        raise NotImplementedError

    def space(self, t) -> BasedSpace:
        raise NotImplementedError

    def supports(self, t):
        try:
            self.space(t)
            return True
        except (UnsupportedType, KeyError):
            return False

    def act(self, t, perm, label):
        return label, Fraction(1)

    def degree(self, t, label):
        return 0

    def internal_diff(self, t, label):
        return {}

    def apply_edge(self, t1, l1, t2, l2, p1, p2, relabel, target_t):
        raise NotImplementedError

    def apply_loop(self, t, l, p1, p2, relabel, target_t):
        raise NotImplementedError

    def apply_merge(self, t1, l1, t2, l2, relabel, target_t):
        raise NotImplementedError

    def as_vmodule(self) -> VModule:
        spaces = {t: self.space(t) for t in self.types()}
        degrees = {(t, l): self.degree(t, l)
                   for t in self.types() for l in self.space(t).labels
                   if self.degree(t, l)}
        return VModule(spaces, act=self.act, degrees=degrees)


class TableFOp(FOp):
    """FOp given by explicit callables (commutative, associative, ...)."""

    def __init__(self, kind, spaces, edge_fn, loop_fn=None, merge_fn=None,
                 act_fn=None, name=""):
        self.kind = kind
        self._spaces = dict(spaces)
        self._edge = edge_fn
        self._loop = loop_fn
        self._merge = merge_fn
        self._act = act_fn
        self.name = name

    def types(self):
        return sorted(self._spaces, key=lambda t: t.key())

    def space(self, t):
        if t not in self._spaces:
            raise UnsupportedType(str(t))
        return self._spaces[t]

    def act(self, t, perm, label):
        if self._act is None:
            return label, Fraction(1)
        return self._act(t, perm, label)

    def apply_edge(self, t1, l1, t2, l2, p1, p2, relabel, target_t):
        self.space(target_t)   # truncation window must be closed
        return self._edge(t1, l1, t2, l2, p1, p2, relabel, target_t)

    def apply_loop(self, t, l, p1, p2, relabel, target_t):
        if self._loop is None:
            raise FreeOpsError("no loop structure maps")
        self.space(target_t)
        return self._loop(t, l, p1, p2, relabel, target_t)

    def apply_merge(self, t1, l1, t2, l2, relabel, target_t):
        if self._merge is None:
            raise FreeOpsError("no merger structure maps")
        self.space(target_t)
        return self._merge(t1, l1, t2, l2, relabel, target_t)


def commutative_op(kind, types, name="com"):
    """One-dimensional value at every type; every structure map is 1."""
    spaces = {t: BasedSpace(["u"]) for t in types}

    def edge(t1, l1, t2, l2, p1, p2, relabel, target_t):
        return {"u": Fraction(1)}

    def loop(t, l, p1, p2, relabel, target_t):
        return {"u": Fraction(1)}

    def merge(t1, l1, t2, l2, relabel, target_t):
        return {"u": Fraction(1)}

    return TableFOp(kind, spaces, edge, loop, merge, name=name)


def associative_op(arities, kind=None, name="assoc"):
    """The associative operad: value at rooted arity n is spanned by the
    linear orders of the inputs; grafting substitutes the inner order."""
    from .instances import OPERAD
    kind = kind or OPERAD
    spaces = {}
    for n in arities:
        t = rooted(n)
        labels = ["w:" + ",".join(p) for p in
                  itertools.permutations(["i%d" % i for i in range(n)])]
        spaces[t] = BasedSpace(labels)

    def act(t, perm, label):
        order = label[2:].split(",") if label[2:] else []
        return "w:" + ",".join(perm.get(p, p) for p in order), Fraction(1)

    def edge(t1, l1, t2, l2, p1, p2, relabel, target_t):
        o1 = l1[2:].split(",") if l1[2:] else []
        o2 = l2[2:].split(",") if l2[2:] else []
        # the root side is substituted into the input side
        if t1.port_direction(p1) == "in":
            host, guest, pos, host_slot, guest_slot = o1, o2, p1, 0, 1
        else:
            host, guest, pos, host_slot, guest_slot = o2, o1, p2, 1, 0
        word = []
        for p in host:
            if p == pos:
                word.extend((guest_slot, q) for q in guest)
            else:
                word.append((host_slot, p))
        return {"w:" + ",".join(relabel[(s, p)] for s, p in word): Fraction(1)}

    return TableFOp(kind, spaces, edge, act_fn=act, name=name)


def terminal_modular_op(max_genus, max_arity, kind=None, name="modterm"):
    from .instances import MODULAR
    kind = kind or MODULAR
    types = [genus_type(g, n) for g in range(max_genus + 1)
             for n in range(max_arity + 1)]
    return commutative_op(kind, types, name=name)


# ----------------------------------------------------------------------
# Contraction / evaluation of decorated graphs through an FOp
# ----------------------------------------------------------------------

def _rewire(dg: DecoratedGraph, slot_map, port_maps, new_slots):
    """Rebuild dg after slots were merged: slot_map[i] -> new index,
    port_maps[i]: old port -> new port (only for affected slots)."""
    def mp(end):
        i, p = end
        j = slot_map[i]
        pm = port_maps.get(i)
        return (j, pm[p] if pm else p)

    return DecoratedGraph(tuple(new_slots),
                          tuple(_norm_edge((mp(a), mp(b))) for a, b in dg.edges),
                          tuple((tp, mp(end)) for tp, end in dg.legs),
                          tuple(_norm_edge((mp(a), mp(b))) for a, b in dg.oriented))


def contract_edge(dg: DecoratedGraph, edge, fop: FOp):
    """Contract one (unoriented) edge of dg through the FOp's structure
    maps; returns [(new_dg, coeff)].  The edge must not be in dg.oriented."""
    edge = _norm_edge(edge)
    (i, p), (j, q) = edge
    rest_edges = tuple(e for e in dg.edges if e != edge)
    base = DecoratedGraph(dg.slots, rest_edges, dg.legs, dg.oriented)
    out = []
    if i == j:
        t, l = dg.slots[i]
        tgt_t, relabel = local_loop_data(t, p, q)
        terms = fop.apply_loop(t, l, p, q, relabel, tgt_t)
        slot_map = {k: k for k in range(len(dg.slots))}
        port_maps = {i: relabel}
        for lab, coeff in terms.items():
            slots = list(base.slots)
            slots[i] = (tgt_t, lab)
            out.append((_rewire(base, slot_map, port_maps, slots), coeff))
        return out
    if i > j:
        (i, p), (j, q) = (j, q), (i, p)
    t1, l1 = dg.slots[i]
    t2, l2 = dg.slots[j]
    tgt_t, relabel = local_contraction_data(t1, t2, p, q)
    terms = fop.apply_edge(t1, l1, t2, l2, p, q, relabel, tgt_t)
    slot_map = {}
    for k in range(len(dg.slots)):
        if k < j:
            slot_map[k] = k
        elif k == j:
            slot_map[k] = i
        else:
            slot_map[k] = k - 1
    pm_i = {pp: relabel[(0, pp)] for pp in t1.ports() if pp != p}
    pm_j = {pp: relabel[(1, pp)] for pp in t2.ports() if pp != q}
    port_maps = {i: pm_i, j: pm_j}
    new_slots_base = [dg.slots[k] for k in range(len(dg.slots)) if k != j]
    for lab, coeff in terms.items():
        slots = list(new_slots_base)
        slots[i] = (tgt_t, lab)
        out.append((_rewire(base, slot_map, port_maps, slots), coeff))
    return out


def merge_slots(dg: DecoratedGraph, i, j, fop: FOp):
    """Merge two slots (no connecting edge) through the merger maps."""
    if i > j:
        i, j = j, i
    t1, l1 = dg.slots[i]
    t2, l2 = dg.slots[j]
    tgt_t, relabel = local_merge_data(t1, t2)
    terms = fop.apply_merge(t1, l1, t2, l2, relabel, tgt_t)
    slot_map = {}
    for k in range(len(dg.slots)):
        slot_map[k] = k if k < j else (i if k == j else k - 1)
    port_maps = {i: {pp: relabel[(0, pp)] for pp in t1.ports()},
                 j: {pp: relabel[(1, pp)] for pp in t2.ports()}}
    new_slots_base = [dg.slots[k] for k in range(len(dg.slots)) if k != j]
    out = []
    for lab, coeff in terms.items():
        slots = list(new_slots_base)
        slots[i] = (tgt_t, lab)
        out.append((_rewire(dg, slot_map, port_maps, slots), coeff))
    return out


def evaluate_dg(dg: DecoratedGraph, fop: FOp, target_t: CorollaType):
    """Full evaluation of a decorated graph: contract every edge, merge
    the remaining slots, align ports with the target type.  Returns
    {label: Fraction} in fop.space(target_t).  Orientation must be empty
    (signs are the caller's business)."""
    if dg.oriented:
        raise FreeOpsError("evaluate_dg expects an unoriented graph")
    frontier = [(dg, Fraction(1))]
    # contract all edges
    while True:
        nxt = []
        progressed = False
        for d, c in frontier:
            if d.edges:
                progressed = True
                for d2, c2 in contract_edge(d, d.edges[0], fop):
                    nxt.append((d2, c * c2))
            else:
                nxt.append((d, c))
        frontier = nxt
        if not progressed:
            break
    # merge remaining slots
    while True:
        nxt = []
        progressed = False
        for d, c in frontier:
            if len(d.slots) > 1:
                progressed = True
                for d2, c2 in merge_slots(d, 0, 1, fop):
                    nxt.append((d2, c * c2))
            else:
                nxt.append((d, c))
        frontier = nxt
        if not progressed:
            break
    out = {}
    for d, c in frontier:
        t, l = d.slots[0]
        perm = {port: tp for tp, (_, port) in d.legs}
        l2, s = fop.act(t, perm, l)
        out[l2] = out.get(l2, Fraction(0)) + c * s
        if not out[l2]:
            del out[l2]
    return out


# ----------------------------------------------------------------------
# The free construction
# ----------------------------------------------------------------------

def _profiles(module: VModule, kind, target_t: CorollaType, bound: Truncation):
    """Multisets of module types whose ports can map onto the target with
    0..max_edges ghost edges."""
    types = [t for t in module.types()]
    tgt_ports = len(target_t.ports())
    out = []
    for k in range(1, bound.max_vertices + 1):
        for combo in itertools.combinations_with_replacement(types, k):
            total = sum(len(t.ports()) for t in combo)
            extra = total - tgt_ports
            if extra < 0 or extra % 2:
                continue
            edges = extra // 2
            if edges > bound.max_edges:
                continue
            # connectivity forces the edge count against the slot count
            if kind.component in ("tree", "level-tree") and edges != k - 1:
                continue
            if kind.component in ("connected", "connected-acyclic") and \
                    edges < k - 1:
                continue
            if kind.genus_labeled:
                if sum(t.genus for t in combo) > target_t.genus:
                    continue
            if kind.directed:
                tin = sum(t.data[0] if t.regime == "directed" else t.data[0]
                          for t in combo)
                # rooted: data[0] inputs; directed: data[0] inputs
                tgt_in = target_t.data[0]
                if tin - tgt_in != edges:
                    continue
            out.append(combo)
    return out


_SHAPE_CACHE = {}


def _port_dir(combo, end):
    i, p = end
    return combo[i].port_direction(p)


def _pairings(ports, combo, count):
    """All sets of `count` disjoint port pairs (in-out matched when
    directed), as sorted tuples of normalized edges."""
    if count == 0:
        yield ()
        return
    if len(ports) < 2:
        return
    first = ports[0]
    rest = ports[1:]
    # pair the first port
    for k, other in enumerate(rest):
        d1, d2 = _port_dir(combo, first), _port_dir(combo, other)
        if (d1 is None) != (d2 is None) or (d1 is not None and d1 == d2):
            continue
        for sub in _pairings(rest[:k] + rest[k + 1:], combo, count - 1):
            yield (_norm_edge((first, other)),) + sub
    # leave the first port free
    for sub in _pairings(rest, combo, count):
        yield sub


def _shape_admitted(kind, combo, edges, target_t):
    """One-comma admission on the port graph."""
    n = len(combo)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (i, _), (j, _) in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    b0 = len({find(i) for i in range(n)})
    b1 = len(edges) - (n - b0)
    cond = kind.component
    if cond in ("tree", "level-tree"):
        if b0 > 1 or b1 > 0:
            return False
    elif cond == "connected" and b0 > 1:
        return False
    elif cond in ("acyclic", "connected-acyclic"):
        if cond == "connected-acyclic" and b0 > 1:
            return False
        succ = {}
        for a, b in edges:
            u, w = (a, b) if _port_dir(combo, a) == "out" else (b, a)
            if u[0] == w[0]:
                return False
            succ.setdefault(u[0], []).append(w[0])
        state = [0] * n

        def dfs(u):
            state[u] = 1
            for w in succ.get(u, ()):
                if state[w] == 1 or (state[w] == 0 and dfs(w)):
                    return True
            state[u] = 2
            return False

        if any(state[v] == 0 and dfs(v) for v in range(n)):
            return False
    if kind.genus_labeled:
        if sum(t.genus for t in combo) + b1 != target_t.genus:
            return False
    return True


def pairing_shape_classes(kind, combo, n_edges, target_t,
                          classifier: Classifier):
    """Admitted pairing classes with unlabeled tails: {key: representative}.

    The classifier must have pin_legs=False; slots carry whatever labels
    the classifier's module provides at the first basis position."""
    combo = tuple(combo)
    all_ports = [(i, p) for i, t in enumerate(combo) for p in t.ports()]
    slots = tuple((t, classifier.module.space(t).labels[0]) for t in combo)
    out = {}
    for pairing in _pairings(all_ports, combo, n_edges):
        if not _shape_admitted(kind, combo, pairing, target_t):
            continue
        dg = DecoratedGraph(slots, pairing, ())
        res = classifier.classify(dg)
        if res is None:
            continue
        key, _, rep = res
        out.setdefault(key, rep)
    return out


def _shapes_for_profile(kind, combo, target_t: CorollaType):
    """Admitted ghost shape classes from a typed profile to the target
    corolla, as DecoratedGraphs with placeholder labels, deduplicated up
    to isomorphism (type-only vertex decorations, legs pinned)."""
    ck = (kind.name, tuple(combo), target_t)
    hit = _SHAPE_CACHE.get(ck)
    if hit is not None:
        return hit
    combo = tuple(combo)
    all_ports = [(i, p) for i, t in enumerate(combo) for p in t.ports()]
    tgt_ports = target_t.ports()
    n_edges = (len(all_ports) - len(tgt_ports)) // 2
    placeholder = VModule({t: BasedSpace([t.key()]) for t in set(combo)})
    cl_free = Classifier(placeholder, pin_legs=False)
    cl_pin = Classifier(placeholder, pin_legs=True)
    slots = tuple((t, t.key()) for t in combo)

    pairing_reps = {}
    for pairing in _pairings(all_ports, combo, n_edges):
        if not _shape_admitted(kind, combo, pairing, target_t):
            continue
        dg = DecoratedGraph(slots, pairing, ())
        res = cl_free.classify(dg)
        if res is None:
            continue
        key, _, rep = res
        pairing_reps.setdefault(key, rep)

    seen = {}
    for rep in pairing_reps.values():
        used = {p for e in rep.edges for p in e}
        free_ports = [ip for ip in
                      ((i, p) for i, (t, _) in enumerate(rep.slots)
                       for p in t.ports())
                      if ip not in used]
        # direction-respecting bijections free ports -> target ports
        tgt_by_dir = {}
        for tp in tgt_ports:
            tgt_by_dir.setdefault(target_t.port_direction(tp), []).append(tp)
        free_by_dir = {}
        for ip in free_ports:
            free_by_dir.setdefault(rep.slots[ip[0]][0].port_direction(ip[1]),
                                   []).append(ip)
        if {d: len(v) for d, v in tgt_by_dir.items()} != \
                {d: len(v) for d, v in free_by_dir.items()}:
            continue
        dirs = sorted(tgt_by_dir, key=lambda d: (d is None, d))
        pools = [itertools.permutations(free_by_dir[d]) for d in dirs]
        for combo_perm in itertools.product(*pools):
            legs = []
            for d, perm in zip(dirs, combo_perm):
                legs.extend(zip(tgt_by_dir[d], perm))
            dg = DecoratedGraph(rep.slots, rep.edges, tuple(legs))
            res = cl_pin.classify(dg)
            if res is None:
                continue
            key, _, rep2 = res
            if key not in seen:
                seen[key] = DecoratedGraph(
                    tuple((t, None) for t, _ in rep2.slots),
                    rep2.edges, rep2.legs)
    shapes = [seen[k] for k in sorted(seen)]
    _SHAPE_CACHE[ck] = shapes
    return shapes


class FreeFOp(FOp):
    """Free functor value: decorated-graph classes with grafting maps."""

    def __init__(self, module: VModule, kind, bound: Truncation, odd=False):
        self.module = module
        self.kind = kind
        self.bound = bound
        self.odd = odd
        self.classifier = Classifier(module, pin_legs=True)
        self._bases = {}
        self._reps = {}

    def rep(self, key) -> DecoratedGraph:
        return self._reps[key]

    def register(self, dg: DecoratedGraph):
        """Classify and remember; {key: sign} (empty when the class dies
        or falls out of the truncation window: the free value here is the
        quotient by classes beyond the edge bound)."""
        if len(dg.edges) > self.bound.max_edges:
            return {}
        res = self.classifier.classify(dg)
        if res is None:
            return {}
        key, sign, rep = res
        self._reps.setdefault(key, rep)
        return {key: sign}

    def basis(self, target_t: CorollaType):
        if target_t in self._bases:
            return self._bases[target_t]
        keys = set()
        for combo in _profiles(self.module, self.kind, target_t, self.bound):
            for shape in _shapes_for_profile(self.kind, combo, target_t):
                label_sets = [self.module.space(t).labels
                              for t, _ in shape.slots]
                for labels in itertools.product(*label_sets):
                    dg = DecoratedGraph(
                        tuple((shape.slots[i][0], labels[i])
                              for i in range(len(labels))),
                        shape.edges, shape.legs,
                        shape.edges if self.odd else ())
                    keys.update(self.register(dg))
        out = sorted(keys)
        self._bases[target_t] = out
        return out

    def types(self):
        return sorted(self._bases, key=lambda t: t.key())

    def space(self, t):
        return BasedSpace(self.basis(t))

    def degree(self, t, label):
        return len(self._reps[label].edges) if self.odd else 0

    def act(self, t, perm, label):
        dg = self._reps[label]
        new_legs = tuple((perm.get(tp, tp), end) for tp, end in dg.legs)
        res = self.register(DecoratedGraph(dg.slots, dg.edges, new_legs,
                                           dg.oriented))
        if not res:
            return label, Fraction(0)
        ((k, s),) = res.items()
        return k, s

    def apply_edge(self, t1, l1, t2, l2, p1, p2, relabel, target_t):
        d1, d2 = self._reps[l1], self._reps[l2]
        glued = graft(d1, d2, [(p1, p2)],
                      {(0, tp): relabel[(0, tp)] for tp in t1.ports() if tp != p1}
                      | {(1, tp): relabel[(1, tp)] for tp in t2.ports() if tp != p2},
                      orient_new=self.odd)
        return self.register(glued)

    def apply_loop(self, t, l, p1, p2, relabel, target_t):
        d = self._reps[l]
        glued = self_graft(d, p1, p2, dict(relabel), orient_new=self.odd)
        return self.register(glued)

    def apply_merge(self, t1, l1, t2, l2, relabel, target_t):
        d1, d2 = self._reps[l1], self._reps[l2]
        glued = merge_graphs(d1, d2, dict(relabel))
        return self.register(glued)

    def unit(self, t, module_label):
        """eta: module -> free, the single-vertex class."""
        return self.register(single_vertex(t, module_label))


def free(module: VModule, kind, bound: Truncation, odd=False) -> FreeFOp:
    return FreeFOp(module, kind, bound, odd=odd)


def structure_map(fop: FOp, gen_shape: DecoratedGraph, source_types,
                  target_t: CorollaType) -> SparseMap:
    """The SparseMap of one generator class on tensor bases.

    `gen_shape` is a one-edge (or edgeless merger) shape whose slots give
    the source types in order; the tensor basis labels are
    'l1(x)l2(x)...'.
    """
    label_sets = [fop.space(t).labels for t in source_types]
    src = BasedSpace(["(x)".join(ls) for ls in itertools.product(*label_sets)])
    tgt = BasedSpace(fop.space(target_t).labels)
    m = SparseMap(src, tgt)
    for ls in itertools.product(*label_sets):
        dg = DecoratedGraph(tuple(zip(source_types, ls)), gen_shape.edges,
                            gen_shape.legs, gen_shape.oriented)
        col = "(x)".join(ls)
        for lab, coeff in evaluate_dg(
                DecoratedGraph(dg.slots, dg.edges, dg.legs, ()), fop,
                target_t).items():
            m.set_entry(lab, col, coeff)
    return m


# ----------------------------------------------------------------------
# Monad multiplication and validation
# ----------------------------------------------------------------------

def flatten_nested(outer: DecoratedGraph, inner_of) -> DecoratedGraph:
    """mu: insert each slot's decoration graph into the slot.

    `inner_of(slot_index)` returns the inner DecoratedGraph whose legs are
    pinned to the slot type's ports.  Orientations concatenate: outer
    edges keep their order after all inner orientations (outer last)."""
    all_slots = []
    offsets = []
    inner_leg = {}   # (outer slot, port) -> (global slot, port)
    edges = []
    oriented = []
    for i in range(len(outer.slots)):
        inner = inner_of(i)
        off = len(all_slots)
        offsets.append(off)
        all_slots.extend(inner.slots)
        for (a, b) in inner.edges:
            edges.append(((a[0] + off, a[1]), (b[0] + off, b[1])))
        for (a, b) in inner.oriented:
            oriented.append(((a[0] + off, a[1]), (b[0] + off, b[1])))
        for tp, (k, p) in inner.legs:
            inner_leg[(i, tp)] = (k + off, p)
    for (i, p), (j, q) in outer.edges:
        edges.append(_norm_edge((inner_leg[(i, p)], inner_leg[(j, q)])))
    for (i, p), (j, q) in outer.oriented:
        oriented.append(_norm_edge((inner_leg[(i, p)], inner_leg[(j, q)])))
    legs = tuple((tp, inner_leg[(i, p)]) for tp, (i, p) in outer.legs)
    return DecoratedGraph(tuple(all_slots), tuple(edges), legs,
                          tuple(oriented))


def monad_mu(outer_free: FreeFOp, inner_free: FreeFOp, key) -> dict:
    """mu: T(T Phi) -> T(Phi) on a basis class of the outer free functor
    (whose module labels are inner classes); {inner key: sign}."""
    dg = outer_free.rep(key)
    flat = flatten_nested(dg, lambda i: inner_free.rep(dg.slots[i][1]))
    return inner_free.register(flat)


@dataclass
class FOpReport:
    passed: bool = True
    checks: int = 0
    failures: list = None

    def __post_init__(self):
        if self.failures is None:
            self.failures = []

    def fail(self, witness):
        self.passed = False
        self.failures.append(witness)


def validate_fop(fop: FOp, kind, bound: Truncation, target_types=None) -> FOpReport:
    """Functoriality + equivariance at the truncation.

    (a) on every two-edge decorated shape over the FOp's labels, the two
    contraction orders evaluate equally; (b) evaluation intertwines the
    target automorphism action; (c) merger interchanges agree where
    mergers exist.
    """
    rep = FOpReport()
    module = fop.as_vmodule()
    tts = target_types or fop.types()
    for target_t in tts:
        for combo in _profiles(module, kind, target_t,
                               Truncation(2, 3, bound.max_genus)):
            for shape in _shapes_for_profile(kind, combo, target_t):
                if len(shape.edges) != 2:
                    continue
                label_sets = [module.space(t).labels for t, _ in shape.slots]
                for labels in itertools.product(*label_sets):
                    dg = DecoratedGraph(
                        tuple((shape.slots[i][0], labels[i])
                              for i in range(len(labels))),
                        shape.edges, shape.legs, ())
                    rep.checks += 1
                    e1, e2 = dg.edges
                    r1, r2 = {}, {}
                    for d2, c2 in contract_edge(dg, e1, fop):
                        for lab, c3 in evaluate_dg(d2, fop, target_t).items():
                            r1[lab] = r1.get(lab, 0) + c2 * c3
                    for d2, c2 in contract_edge(dg, e2, fop):
                        for lab, c3 in evaluate_dg(d2, fop, target_t).items():
                            r2[lab] = r2.get(lab, 0) + c2 * c3
                    r1 = {k: v for k, v in r1.items() if v}
                    r2 = {k: v for k, v in r2.items() if v}
                    if r1 != r2:
                        rep.fail(("contraction order disagreement",
                                  dg_key(dg), r1, r2))
                    # equivariance under a target transposition
                    ports = target_t.ports()
                    perms = target_t.aut_perms()
                    if len(perms) > 1:
                        perm = perms[1]
                        moved = DecoratedGraph(
                            dg.slots, dg.edges,
                            tuple((perm.get(tp, tp), end) for tp, end in dg.legs),
                            ())
                        lhs = evaluate_dg(moved, fop, target_t)
                        rhs = {}
                        for lab, c in evaluate_dg(dg, fop, target_t).items():
                            l2, s = fop.act(target_t, perm, lab)
                            rhs[l2] = rhs.get(l2, 0) + c * s
                        rhs = {k: v for k, v in rhs.items() if v}
                        lhs = {k: v for k, v in lhs.items() if v}
                        if lhs != rhs:
                            rep.fail(("equivariance failure", dg_key(dg)))
    return rep


# ----------------------------------------------------------------------
# Push-forward along cyclic -> modular (truncated modular envelope)
# ----------------------------------------------------------------------

class ModularEnvelope:
    """Truncated modular envelope of a cyclic FOp.

    Value at (g, n): decorated connected genus-g graphs over the cyclic
    carrier, modulo isomorphism and modulo contracting any non-loop edge
    through the cyclic structure maps (the comma-category identification).
    The value is presented as a quotient: basis classes + relation matrix.
    """

    def __init__(self, cyc_fop: FOp, genus_bound, bound: Truncation):
        from .instances import MODULAR
        self.fop = cyc_fop
        self.genus_bound = genus_bound
        self.bound = bound
        self.kind = MODULAR
        # carrier of the cyclic op re-typed as genus-0 modular corollas
        spaces = {}
        self._plain_of = {}
        for t in cyc_fop.types():
            if t.regime != "plain":
                raise FreeOpsError("cyclic push-forward needs plain types")
            gt = genus_type(0, t.data[0])
            spaces[gt] = cyc_fop.space(t)
            self._plain_of[gt] = t

        def act(gt, perm, label):
            return cyc_fop.act(self._plain_of[gt], perm, label)

        self.module = VModule(spaces, act=act)
        self.classifier = Classifier(self.module, pin_legs=True)
        self._cache = {}

    def _contract_via_cyclic(self, dg: DecoratedGraph, edge):
        """Contract a non-loop edge using the cyclic structure maps, with
        the genus-typed slots translated to plain ones and back."""
        (i, p), (j, q) = _norm_edge(edge)
        gt1, l1 = dg.slots[i]
        gt2, l2 = dg.slots[j]
        t1, t2 = self._plain_of[gt1], self._plain_of[gt2]
        tgt_plain, relabel = local_contraction_data(t1, t2, p, q)
        terms = self.fop.apply_edge(t1, l1, t2, l2, p, q, relabel, tgt_plain)
        tgt_genus = genus_type(0, tgt_plain.data[0])
        rest = tuple(e for e in dg.edges if e != _norm_edge(edge))
        base = DecoratedGraph(dg.slots, rest, dg.legs, ())
        slot_map = {k: (k if k < j else (i if k == j else k - 1))
                    for k in range(len(dg.slots))}
        port_maps = {i: {pp: relabel[(0, pp)] for pp in t1.ports() if pp != p},
                     j: {pp: relabel[(1, pp)] for pp in t2.ports() if pp != q}}
        new_slots_base = [dg.slots[k] for k in range(len(dg.slots)) if k != j]
        out = []
        for lab, coeff in terms.items():
            slots = list(new_slots_base)
            slots[i] = (tgt_genus, lab)
            out.append((_rewire(base, slot_map, port_maps, slots), coeff))
        return out

    def value(self, g, n):
        """(basis keys, reps, quotient dimension, reduce function)."""
        ck = (g, n)
        if ck in self._cache:
            return self._cache[ck]
        if g > self.genus_bound:
            raise GenusBoundExceeded("genus %d beyond bound" % g)
        target_t = genus_type(g, n)
        keys = set()
        reps = {}
        for combo in _profiles(self.module, self.kind, target_t, self.bound):
            for shape in _shapes_for_profile(self.kind, combo, target_t):
                label_sets = [self.module.space(t).labels for t, _ in shape.slots]
                for labels in itertools.product(*label_sets):
                    dg = DecoratedGraph(
                        tuple((shape.slots[i][0], labels[i])
                              for i in range(len(labels))),
                        shape.edges, shape.legs, ())
                    res = self.classifier.classify(dg)
                    if res:
                        keys.add(res[0])
                        reps.setdefault(res[0], res[2])
        keys = sorted(keys)
        space = BasedSpace(keys)
        # relations: x - contract_e(x) for every non-loop edge
        rel_cols = {}
        cnt = 0
        for key in keys:
            dg = reps[key]
            for e in dg.edges:
                if e[0][0] == e[1][0]:
                    continue  # loop: not a cyclic morphism
                vec = {key: Fraction(1)}
                for d2, c2 in self._contract_via_cyclic(dg, e):
                    res = self.classifier.classify(d2)
                    if res is None:
                        continue
                    k2, s2, r2 = res
                    reps.setdefault(k2, r2)
                    if k2 not in space.index:
                        # contraction may leave the enumerated window only
                        # if bounds are inconsistent; treat as failure
                        raise FreeOpsError("contraction left the basis window")
                    vec[k2] = vec.get(k2, Fraction(0)) - c2 * s2
                rel_cols["rel%d" % cnt] = {k: v for k, v in vec.items() if v}
                cnt += 1
        rel_src = BasedSpace(sorted(rel_cols))
        rel = SparseMap(rel_src, space,
                        {c: rel_cols[c] for c in rel_cols})
        from .exactla import rank as _rank
        qdim = space.dim - _rank(rel)
        result = {"basis": keys, "reps": reps, "dim": qdim,
                  "relations": rel, "space": space}
        self._cache[ck] = result
        return result

    def normal_form_count(self, g, n):
        """Independent count: classes with every non-loop edge contracted
        (single-vertex graphs with g loops)."""
        target_t = genus_type(g, n)
        plain_t = plain(n + 2 * g)
        if not self.fop.supports(plain_t):
            return None
        keys = set()
        for label in self.fop.space(plain_t).labels:
            ports = plain_t.ports()
            gt = genus_type(0, n + 2 * g)
            # choose g disjoint port pairs to close into loops
            for pairs in _port_pairings(ports, g):
                used = {p for pr in pairs for p in pr}
                free_ports = [p for p in ports if p not in used]
                legs = tuple((tp, (0, pp))
                             for tp, pp in zip(target_t.ports(), free_ports))
                dg = DecoratedGraph(((gt, label),),
                                    tuple(((0, a), (0, b)) for a, b in pairs),
                                    legs, ())
                res = self.classifier.classify(dg)
                if res:
                    keys.add(res[0])
        return len(keys)


def _port_pairings(ports, g):
    """All ways to choose g disjoint unordered port pairs."""
    if g == 0:
        yield ()
        return
    ports = list(ports)
    if len(ports) < 2 * g:
        return
    first = ports[0]
    # pairings using the first port
    for k in range(1, len(ports)):
        pair = (first, ports[k])
        rest = ports[1:k] + ports[k + 1:]
        for sub in _port_pairings(rest, g - 1):
            yield (pair,) + sub
    # pairings skipping the first port
    for sub in _port_pairings(ports[1:], g):
        yield sub


def pushforward_cyc_to_mod(cyc_fop: FOp, genus_bound, bound: Truncation):
    return ModularEnvelope(cyc_fop, genus_bound, bound)
