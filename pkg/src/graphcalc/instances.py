"""Instance kinds: predicates carving operad-like wide subcategories out of
the ambient aggregate category, with finite-fragment axiom checking and
bounded morphism enumeration.

A kind fixes the corolla decoration regime (plain / directed / rooted /
genus-labeled / flagless) together with a condition on every per-target-
vertex ghost component (tree, connected, no oriented cycle, genus
additivity).  Kinds are predicates on morphisms of the one ambient
category, not separate category objects.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .graphs import Graph, corolla, disjoint_union, euler_genus
from .morphisms import (GraphMorphism, MorphismError, compose, decompose,
                        ghost_components, ghost_graph, make_generator,
                        morphism_canonical_key, recompose, validate)


class DecorationRegimeMismatch(MorphismError):
    pass


@dataclass(frozen=True)
class InstanceKind:
    """Decoration regime + ghost-graph condition defining one instance."""
    name: str
    directed: bool = False
    rooted: bool = False            # exactly one out flag per corolla
    genus_labeled: bool = False     # genus additivity enforced per component
    zero_flags: bool = False        # trivial-V kinds
    component: str = "any"          # any|connected|tree|acyclic|connected-acyclic|level-tree
    phi_v: str = "surjective"       # surjective|injective|any
    quadratic: bool = False
    graded: bool = True

    def __str__(self):
        return self.name


GG = InstanceKind("gg")
GG_CONNECTED = InstanceKind("ggconnected", component="connected", quadratic=True)
OPERAD = InstanceKind("operad", directed=True, rooted=True, component="tree",
                      quadratic=True)
MAY_LEVEL_OPERAD = InstanceKind("maylevel", directed=True, rooted=True,
                                component="level-tree", graded=False)
CYCLIC = InstanceKind("cyclic", component="tree", quadratic=True)
MODULAR = InstanceKind("modular", genus_labeled=True, component="connected",
                       quadratic=True)
NC_MODULAR = InstanceKind("ncmodular", genus_labeled=True)
DIOPERAD = InstanceKind("dioperad", directed=True, component="tree",
                        quadratic=True)
PROP = InstanceKind("prop", directed=True, component="acyclic")
WHEELED_PROP = InstanceKind("wheeledprop", directed=True)
PROPERAD = InstanceKind("properad", directed=True,
                        component="connected-acyclic", quadratic=True)
WHEELED_PROPERAD = InstanceKind("wheeledproperad", directed=True,
                                component="connected", quadratic=True)
SURJECTIONS = InstanceKind("surjections", zero_flags=True, graded=False)
FINSET = InstanceKind("finset", zero_flags=True, phi_v="any", graded=False)
FI = InstanceKind("fi", zero_flags=True, phi_v="injective", graded=False)

KINDS = {k.name: k for k in (
    GG, GG_CONNECTED, OPERAD, MAY_LEVEL_OPERAD, CYCLIC, MODULAR, NC_MODULAR,
    DIOPERAD, PROP, WHEELED_PROP, PROPERAD, WHEELED_PROPERAD, SURJECTIONS,
    FINSET, FI)}


def kind_by_name(name: str) -> InstanceKind:
    if name not in KINDS:
        raise KeyError("unknown kind %r (have: %s)" % (name, ",".join(sorted(KINDS))))
    return KINDS[name]


# ----------------------------------------------------------------------
# Regime and component conditions
# ----------------------------------------------------------------------

def check_regime(kind: InstanceKind, g: Graph):
    """Raise DecorationRegimeMismatch unless g's corollas fit the regime."""
    if kind.directed:
        if len(g.flags) and not g.direction:
            raise DecorationRegimeMismatch("%s requires directed flags" % kind.name)
        if kind.rooted:
            for v in g.vertices:
                outs = [f for f in g.flags_at(v) if g.direction.get(f) == "out"]
                if len(outs) != 1:
                    raise DecorationRegimeMismatch(
                        "%s requires exactly one out flag per corolla" % kind.name)
    else:
        if g.direction:
            raise DecorationRegimeMismatch("%s is undirected" % kind.name)
    if not kind.genus_labeled and g.genus:
        raise DecorationRegimeMismatch("%s has no genus labels" % kind.name)
    if kind.zero_flags and g.flags:
        raise DecorationRegimeMismatch("%s uses flagless corollas" % kind.name)


def _directed_component_dag(sub: Graph):
    """Arcs of one ghost component: tail vertex of the 'out' flag -> 'in' side."""
    arcs = []
    for a, b in sub.edges():
        if sub.direction.get(a) == "out":
            arcs.append((sub.boundary[a], sub.boundary[b]))
        else:
            arcs.append((sub.boundary[b], sub.boundary[a]))
    return arcs


def _has_oriented_cycle(sub: Graph):
    arcs = _directed_component_dag(sub)
    succ = {}
    for u, w in arcs:
        if u == w:
            return True
        succ.setdefault(u, []).append(w)
    state = {v: 0 for v in sub.vertices}

    def dfs(u):
        state[u] = 1
        for w in succ.get(u, ()):
            if state[w] == 1 or (state[w] == 0 and dfs(w)):
                return True
        state[u] = 2
        return False

    return any(state[v] == 0 and dfs(v) for v in sub.vertices)


def _is_tree(sub: Graph):
    return len(sub.components()) == 1 and \
        len(sub.edges()) == len(sub.vertices) - 1


def _is_level_tree(sub: Graph):
    if not _is_tree(sub):
        return False
    # root: vertex whose out flag is a tail
    roots = [v for v in sub.vertices
             if any(sub.direction.get(f) == "out" and sub.involution[f] == f
                    for f in sub.flags_at(v))]
    if len(roots) != 1:
        return False
    depth = {roots[0]: 0}
    frontier = [roots[0]]
    adj = {}
    for a, b in sub.edges():
        adj.setdefault(sub.boundary[a], []).append(sub.boundary[b])
        adj.setdefault(sub.boundary[b], []).append(sub.boundary[a])
    while frontier:
        nxt = []
        for u in frontier:
            for w in adj.get(u, ()):
                if w not in depth:
                    depth[w] = depth[u] + 1
                    nxt.append(w)
        frontier = nxt
    in_tail_depths = {depth[sub.boundary[f]] for f in sub.flags
                      if sub.involution[f] == f and sub.direction.get(f) == "in"}
    return len(in_tail_depths) <= 1


def _component_ok(kind: InstanceKind, sub: Graph, target_vertex_genus: int):
    cond = kind.component
    if cond == "tree" and not _is_tree(sub):
        return False
    if cond == "connected" and len(sub.components()) > 1:
        return False
    if cond == "acyclic" and _has_oriented_cycle(sub):
        return False
    if cond == "connected-acyclic" and \
            (len(sub.components()) > 1 or _has_oriented_cycle(sub)):
        return False
    if cond == "level-tree" and not _is_level_tree(sub):
        return False
    if kind.genus_labeled:
        # genus additivity: sum of vertex labels + b1 must match the target
        _, _, b1, _ = euler_genus(sub)
        if sum(sub.genus.values()) + b1 != target_vertex_genus:
            return False
    return True


def admits(kind: InstanceKind, m: GraphMorphism) -> bool:
    """True iff every per-target-vertex ghost component satisfies the kind."""
    check_regime(kind, m.source)
    check_regime(kind, m.target)
    if kind.phi_v == "injective":
        vals = list(m.phi_v.values())
        if len(set(vals)) != len(vals):
            return False
    elif kind.phi_v == "surjective":
        if set(m.phi_v.values()) != set(m.target.vertices):
            return False
    for w, sub in ghost_components(m):
        if not _component_ok(kind, sub, m.target.genus_of(w)):
            return False
    return True


def validate_for_kind(kind: InstanceKind, m: GraphMorphism):
    validate(m, require_surjective=(kind.phi_v == "surjective"))
    return m


# ----------------------------------------------------------------------
# Bounded enumeration
# ----------------------------------------------------------------------

def _perfect_pairings(flags, direction, color):
    """All fixed-point-free involutions on `flags`, pairing in with out
    when directed and equal colors when colored."""
    flags = list(flags)
    if not flags:
        yield {}
        return
    if len(flags) % 2:
        return
    f = flags[0]
    rest = flags[1:]
    for i, g in enumerate(rest):
        if direction and direction.get(f) == direction.get(g):
            continue
        if color.get(f) != color.get(g):
            continue
        for sub in _perfect_pairings(rest[:i] + rest[i + 1:], direction, color):
            sub[f] = g
            sub[g] = f
            yield sub


def _surjections(src, tgt):
    for assign in itertools.product(tgt, repeat=len(src)):
        if set(assign) == set(tgt):
            yield dict(zip(src, assign))


def _all_maps(src, tgt):
    for assign in itertools.product(tgt, repeat=len(src)):
        yield dict(zip(src, assign))


def _injections(src, tgt):
    for assign in itertools.permutations(tgt, len(src)):
        yield dict(zip(src, assign))


def enumerate_morphisms(kind: InstanceKind, X: Graph, Y: Graph,
                        admitted_only=True):
    """All (admitted) morphisms X -> Y; exhaustive, deterministic order."""
    check_regime(kind, X)
    check_regime(kind, Y)
    out = []
    if kind.phi_v == "injective":
        vmaps = _injections(X.vertices, Y.vertices)
    elif kind.phi_v == "any":
        vmaps = _all_maps(X.vertices, Y.vertices)
    else:
        vmaps = _surjections(X.vertices, Y.vertices)
    ydir, ycol = Y.direction, Y.color
    for phi_v in vmaps:
        # candidates per target flag: source flags over the right vertex
        cands = {}
        ok = True
        for f2 in Y.flags:
            w = Y.boundary[f2]
            cs = [f1 for f1 in X.flags
                  if phi_v[X.boundary[f1]] == w
                  and X.direction.get(f1) == ydir.get(f2)
                  and X.color.get(f1) == ycol.get(f2)]
            if not cs:
                ok = False
                break
            cands[f2] = cs
        if not ok and Y.flags:
            continue
        yflags = sorted(Y.flags, key=lambda f: len(cands[f]))

        def assign(i, used, phi_f):
            if i == len(yflags):
                leftover = [f for f in X.flags if f not in used]
                by_fibre = {}
                for f in leftover:
                    by_fibre.setdefault(phi_v[X.boundary[f]], []).append(f)
                fibre_pairings = []
                for w in sorted(by_fibre):
                    ps = list(_perfect_pairings(by_fibre[w], X.direction, X.color))
                    if not ps:
                        return
                    fibre_pairings.append(ps)
                for combo in itertools.product(*fibre_pairings):
                    i_ghost = {}
                    for d in combo:
                        i_ghost.update(d)
                    m = GraphMorphism(X, Y, dict(phi_f), dict(phi_v), i_ghost)
                    try:
                        validate_for_kind(kind, m)
                    except MorphismError:
                        continue
                    if not admitted_only or admits(kind, m):
                        out.append(m)
                return
            f2 = yflags[i]
            for f1 in cands[f2]:
                if f1 in used:
                    continue
                used.add(f1)
                phi_f[f2] = f1
                assign(i + 1, used, phi_f)
                used.discard(f1)
                del phi_f[f2]

        assign(0, set(), {})
    out.sort(key=lambda m: m._norm())
    return out


@dataclass
class OneCommaClass:
    key: str
    representative: GraphMorphism
    automorphisms: list

    @property
    def aut_order(self):
        return len(self.automorphisms)


def enumerate_one_comma(kind: InstanceKind, source_corollas, target_corolla,
                        max_edges=None):
    """Iso classes of admitted morphisms from an ordered list of corollas
    to one corolla, with at most `max_edges` ghost edges.

    Classes are taken up to per-corolla source automorphisms and target
    automorphisms; source slots stay ordered.  For tree-type kinds the
    edge count is forced, so `max_edges` is ignored there.  Deterministic,
    sorted output; every class carries the automorphism group of its
    slot-colored ghost graph.
    """
    X = None
    slot_of = {}
    for i, c in enumerate(source_corollas):
        c2 = c.relabel({c.vertices[0]: "s%d" % i},
                       {f: "s%d_%s" % (i, f) for f in c.flags})
        slot_of[c2.vertices[0]] = "slot%d" % i
        X = c2 if X is None else disjoint_union(X, c2)
    if X is None:
        from .graphs import empty_graph
        X = empty_graph()
    Y = target_corolla
    classes = {}
    for m in enumerate_morphisms(kind, X, Y):
        if max_edges is not None and kind.component not in ("tree", "level-tree"):
            if len(m.ghost_edges()) > max_edges:
                continue
        key = morphism_canonical_key(m, extra_vertex_colors=slot_of)
        if key not in classes:
            from .graphs import canonical_form
            cf = canonical_form(ghost_graph(m), vertex_colors=slot_of)
            classes[key] = OneCommaClass(key, m, cf.automorphisms)
    return [classes[k] for k in sorted(classes)]


# ----------------------------------------------------------------------
# Closure and axiom reports
# ----------------------------------------------------------------------

@dataclass
class Report:
    passed: bool = True
    checks: int = 0
    failures: list = field(default_factory=list)

    def fail(self, witness):
        self.passed = False
        self.failures.append(witness)

    def note(self, n=1):
        self.checks += n


def check_closure(kind: InstanceKind, pairs) -> Report:
    """Verify composites of admitted composable pairs stay admitted."""
    rep = Report()
    for f, g in pairs:
        rep.note()
        if not (admits(kind, f) and admits(kind, g)):
            rep.fail(("factor not admitted", f, g))
            continue
        c = compose(f, g)
        if not admits(kind, c):
            rep.fail(("composite not admitted", f, g))
    return rep


def _skeleton_corollas(kind: InstanceKind, max_flags, genus_bound=1):
    """Representative corolla shapes for the kind's regime."""
    out = []
    if kind.zero_flags:
        return [corolla("c", [])]
    for n in range(0, max_flags + 1):
        flags = ["f%d" % i for i in range(n)]
        if kind.directed:
            if kind.rooted:
                if n == 0:
                    continue
                direction = {flags[0]: "out"}
                direction.update({f: "in" for f in flags[1:]})
                out.append(corolla("c", flags, direction=direction))
            else:
                for nout in range(0, n + 1):
                    direction = {f: ("out" if i < nout else "in")
                                 for i, f in enumerate(flags)}
                    out.append(corolla("c", flags, direction=direction))
        elif kind.genus_labeled:
            for g in range(0, genus_bound + 1):
                out.append(corolla("c", flags, genus=g))
        else:
            out.append(corolla("c", flags))
    return out


def skeleton_objects(kind: InstanceKind, max_corollas, max_flags,
                     genus_bound=1):
    """Aggregates of up to max_corollas skeleton corollas (with repeats)."""
    base = _skeleton_corollas(kind, max_flags, genus_bound)
    objs = []
    for k in range(1, max_corollas + 1):
        for combo in itertools.combinations_with_replacement(range(len(base)), k):
            agg = None
            for slot, idx in enumerate(combo):
                c = base[idx]
                c2 = c.relabel({"c": "v%d" % slot},
                               {f: "v%d_%s" % (slot, f) for f in c.flags})
                agg = c2 if agg is None else disjoint_union(agg, c2)
            objs.append(agg)
    return objs


def check_axioms(kind: InstanceKind, max_corollas=3, max_flags=3,
                 genus_bound=1, admits_fn=None,
                 composition_samples=200, seed=0) -> Report:
    """Finite-fragment axiom check.

    On all admitted morphisms of the skeleton fragment: isomorphisms
    decompose into corolla isomorphisms plus a component permutation,
    every morphism decomposes with admitted pieces that recompose to it,
    the predicate is isomorphism-invariant, and composites of admitted
    morphisms stay admitted (closure sampled up to `composition_samples`
    per object pair).  `admits_fn` overrides the predicate (used to plant
    negatives).
    """
    import random as _random
    rng = _random.Random(seed)
    adm = admits_fn or (lambda m: admits(kind, m))
    rep = Report()
    objs = skeleton_objects(kind, max_corollas, max_flags, genus_bound)
    all_mors = {}
    for X in objs:
        for Y in objs:
            ms = [m for m in enumerate_morphisms(kind, X, Y, admitted_only=False)
                  if adm(m)]
            if ms:
                all_mors[(X._norm_key(), Y._norm_key())] = ms

    for ms in all_mors.values():
        for m in ms:
            rep.note()
            # hereditary: decompose, pieces admitted, recompose identity
            pieces = decompose(m)
            back = recompose(pieces, m.source.vertices)
            if back != m:
                rep.fail(("decompose/recompose mismatch", m))
                continue
            for _, p in pieces:
                try:
                    if not adm(p):
                        rep.fail(("piece not admitted", m))
                        break
                except MorphismError:
                    rep.fail(("piece regime mismatch", m))
                    break
            # isomorphism condition
            if m.is_isomorphism():
                for _, p in pieces:
                    if not p.is_isomorphism() or len(p.source.vertices) != 1:
                        rep.fail(("iso does not decompose into corolla isos", m))
            # iso invariance of the predicate: conjugate source by full
            # relabelings (vertex and flag names permuted), several tries
            for trial in range(4):
                perm_v = list(m.source.vertices)
                perm_f = list(m.source.flags)
                if trial == 0:
                    perm_v.reverse()
                    perm_f.reverse()
                else:
                    rng.shuffle(perm_v)
                    rng.shuffle(perm_f)
                vmap = dict(zip(m.source.vertices, perm_v))
                fmap = dict(zip(m.source.flags, perm_f))
                src2 = Graph(tuple(vmap[v] for v in m.source.vertices),
                             tuple(fmap[f] for f in m.source.flags),
                             {fmap[f]: fmap[g]
                              for f, g in m.source.involution.items()},
                             {fmap[f]: vmap[m.source.boundary[f]]
                              for f in m.source.flags},
                             {fmap[f]: d for f, d in m.source.direction.items()},
                             {vmap[v]: g for v, g in m.source.genus.items()},
                             None,
                             {fmap[f]: c for f, c in m.source.color.items()})
                m2 = GraphMorphism(src2, m.target,
                                   {t: fmap[f] for t, f in m.phi_f.items()},
                                   {vmap[v]: m.phi_v[v]
                                    for v in m.source.vertices},
                                   {fmap[f]: fmap[g]
                                    for f, g in m.i_ghost.items()})
                try:
                    validate_for_kind(kind, m2)
                    if adm(m2) != adm(m):
                        rep.fail(("predicate not iso-invariant", m))
                        break
                except MorphismError:
                    rep.fail(("conjugate fails validation", m))
                    break

    # closure under composition on sampled composable pairs
    pair_budget = composition_samples
    keys = sorted(all_mors)
    composable = [(k1, k2) for k1 in keys for k2 in keys if k1[1] == k2[0]]
    for k1, k2 in composable:
        if pair_budget <= 0:
            break
        for f in all_mors[k1]:
            if pair_budget <= 0:
                break
            for g in all_mors[k2]:
                if f.target != g.source:
                    continue
                pair_budget -= 1
                rep.note()
                c = compose(f, g)
                if not adm(c):
                    rep.fail(("composite leaves the kind", f, g))
                if pair_budget <= 0:
                    break
    return rep
