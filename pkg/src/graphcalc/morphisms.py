"""Morphisms between aggregates of corollas.

A morphism X -> Y is a triple (phi_f, phi_v, i_ghost): an injection
phi_f: flags(Y) -> flags(X), a surjection phi_v: vertices(X) -> vertices(Y)
and a fixed-point-free involution i_ghost on the source flags outside the
image of phi_f, whose orbits are the ghost edges.  Composition, ghost
graphs, hereditary decomposition, degree/weight, the four simple generator
types and minimal-word factorization live here.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .graphs import (Graph, GraphError, canonical_form, disjoint_union,
                     euler_genus, parse as parse_graph, serialize as
                     serialize_graph, _token_key)


class MorphismError(ValueError):
    pass


class NotInjective(MorphismError):
    pass


class NotSurjective(MorphismError):
    pass


class InvolutionHasFixedPoint(MorphismError):
    pass


class EdgeIncompatible(MorphismError):
    pass


class BoundaryIncompatible(MorphismError):
    pass


class GhostEdgeSplitsVertexImage(MorphismError):
    pass


class DirectionViolation(MorphismError):
    pass


class SourceTargetMismatch(MorphismError):
    pass


class FlagNotFound(MorphismError):
    pass


class SameVertexForEdgeContraction(MorphismError):
    pass


class DistinctVertexForLoop(MorphismError):
    pass


class OrderNotTotal(MorphismError):
    pass


class GraphMorphism:
    """The triple (phi_f, phi_v, i_ghost) between two aggregates."""

    __slots__ = ("source", "target", "phi_f", "phi_v", "i_ghost", "_key")

    def __init__(self, source: Graph, target: Graph, phi_f, phi_v, i_ghost):
        self.source = source
        self.target = target
        self.phi_f = dict(phi_f)     # target flag -> source flag
        self.phi_v = dict(phi_v)     # source vertex -> target vertex
        self.i_ghost = dict(i_ghost)  # involution on non-image source flags
        self._key = None

    def _norm(self):
        if self._key is None:
            self._key = (self.source._norm_key(), self.target._norm_key(),
                         tuple(sorted(self.phi_f.items())),
                         tuple(sorted(self.phi_v.items())),
                         tuple(sorted(self.i_ghost.items())))
        return self._key

    def __eq__(self, other):
        return isinstance(other, GraphMorphism) and self._norm() == other._norm()

    def __hash__(self):
        return hash(self._norm())

    def __repr__(self):
        return "GraphMorphism(%s)" % serialize(self)

    def ghost_edges(self):
        """Sorted tuple of ghost edges as sorted source-flag pairs."""
        out = []
        for f, g in self.i_ghost.items():
            if _token_key(f) < _token_key(g):
                out.append((f, g))
        out.sort(key=lambda e: (_token_key(e[0]), _token_key(e[1])))
        return tuple(out)

    def is_isomorphism(self):
        return (not self.i_ghost
                and len(set(self.phi_v.values())) == len(self.target.vertices)
                and len(self.phi_v) == len(self.target.vertices))

    def is_identity(self):
        return (self.source == self.target
                and all(k == v for k, v in self.phi_f.items())
                and all(k == v for k, v in self.phi_v.items())
                and not self.i_ghost)


def identity(x: Graph) -> GraphMorphism:
    return GraphMorphism(x, x, {f: f for f in x.flags},
                         {v: v for v in x.vertices}, {})


def validate(m: GraphMorphism, require_surjective=True):
    """Full structural validation; raises a specific MorphismError."""
    src, tgt = m.source, m.target
    if not src.is_aggregate() or not tgt.is_aggregate():
        raise MorphismError("source and target must be aggregates")
    if set(m.phi_f) != set(tgt.flags):
        raise MorphismError("phi_f must be defined on exactly the target flags")
    vals = list(m.phi_f.values())
    if len(set(vals)) != len(vals):
        raise NotInjective("phi_f is not injective")
    if not set(vals) <= set(src.flags):
        raise MorphismError("phi_f image outside source flags")
    if set(m.phi_v) != set(src.vertices):
        raise MorphismError("phi_v must be defined on exactly the source vertices")
    if not set(m.phi_v.values()) <= set(tgt.vertices):
        raise MorphismError("phi_v image outside target vertices")
    if require_surjective and set(m.phi_v.values()) != set(tgt.vertices):
        raise NotSurjective("phi_v is not surjective")
    complement = set(src.flags) - set(vals)
    if set(m.i_ghost) != complement:
        raise MorphismError("i_ghost domain must be the complement of im(phi_f)")
    for f, g in m.i_ghost.items():
        if f == g:
            raise InvolutionHasFixedPoint("i_ghost fixes %r" % f)
        if g not in complement or m.i_ghost.get(g) != f:
            raise MorphismError("i_ghost is not an involution on the complement")
    # edge compatibility (source/target are aggregates: no edges to check,
    # but keep the check for safety against decorated misuse)
    for a, b in tgt.edges():
        fa, fb = m.phi_f[a], m.phi_f[b]
        if src.involution[fa] != fb:
            raise EdgeIncompatible("target edge (%s,%s) not sent to an edge" % (a, b))
    # boundary compatibility on the image
    for f2, f1 in m.phi_f.items():
        if m.phi_v[src.boundary[f1]] != tgt.boundary[f2]:
            raise BoundaryIncompatible("phi_v(boundary(%s)) != boundary(%s)" % (f1, f2))
    # ghost edges stay over one target vertex
    for f, g in m.i_ghost.items():
        if m.phi_v[src.boundary[f]] != m.phi_v[src.boundary[g]]:
            raise GhostEdgeSplitsVertexImage(
                "ghost edge (%s,%s) maps to two target vertices" % (f, g))
    # directed compatibility
    if src.direction or tgt.direction:
        if not (src.direction and tgt.direction):
            raise DirectionViolation("both sides must be directed")
        for f2, f1 in m.phi_f.items():
            if src.direction[f1] != tgt.direction[f2]:
                raise DirectionViolation("phi_f flips direction at %r" % f2)
        for f, g in m.i_ghost.items():
            if src.direction[f] == src.direction[g]:
                raise DirectionViolation(
                    "ghost edge (%s,%s) pairs two %r flags" % (f, g, src.direction[f]))
    # colors
    if src.color or tgt.color:
        for f2, f1 in m.phi_f.items():
            if src.color.get(f1) != tgt.color.get(f2):
                raise MorphismError("phi_f changes color at %r" % f2)
        for f, g in m.i_ghost.items():
            if src.color.get(f) != src.color.get(g):
                raise MorphismError("ghost edge (%s,%s) mixes colors" % (f, g))
    return m


def compose(f: GraphMorphism, g: GraphMorphism) -> GraphMorphism:
    """g after f; requires target(f) == source(g) as labeled aggregates."""
    if f.target != g.source:
        raise SourceTargetMismatch("target of f is not the source of g")
    phi_f = {y: f.phi_f[g.phi_f[y]] for y in g.phi_f}
    phi_v = {x: g.phi_v[f.phi_v[x]] for x in f.phi_v}
    i = dict(f.i_ghost)
    for a, b in g.i_ghost.items():
        i[f.phi_f[a]] = f.phi_f[b]
    return GraphMorphism(f.source, g.target, phi_f, phi_v, i)


def compose_chain(word):
    """Compose a list left-to-right: word[0] first."""
    if not word:
        raise MorphismError("empty word")
    m = word[0]
    for step in word[1:]:
        m = compose(m, step)
    return m


def ghost_graph(m: GraphMorphism) -> Graph:
    """Graph on the source whose edges are the i_ghost orbits."""
    src = m.source
    involution = {f: f for f in src.flags}
    involution.update(m.i_ghost)
    return Graph(src.vertices, src.flags, involution, src.boundary,
                 src.direction, src.genus, src.cyclic, src.color)


def ghost_components(m: GraphMorphism):
    """Per-target-vertex ghost graphs, in target vertex order."""
    gg = ghost_graph(m)
    out = []
    for w in m.target.vertices:
        vs = [v for v in m.source.vertices if m.phi_v[v] == w]
        fs = [f for f in m.source.flags if m.source.boundary[f] in set(vs)]
        fset = set(fs)
        sub = Graph(vs, fs,
                    {f: (gg.involution[f] if gg.involution[f] in fset else f)
                     for f in fs},
                    {f: gg.boundary[f] for f in fs},
                    {f: d for f, d in gg.direction.items() if f in fset},
                    {v: g for v, g in gg.genus.items() if v in set(vs)},
                    None,
                    {f: c for f, c in gg.color.items() if f in fset})
        out.append((w, sub))
    return out


def decompose(m: GraphMorphism):
    """Split m into per-target-vertex morphisms phi_w: X_w -> *_w."""
    out = []
    for w in m.target.vertices:
        vs = [v for v in m.source.vertices if m.phi_v[v] == w]
        vset = set(vs)
        fs = [f for f in m.source.flags if m.source.boundary[f] in vset]
        fset = set(fs)
        sub_source = Graph(vs, fs,
                           {f: f for f in fs},
                           {f: m.source.boundary[f] for f in fs},
                           {f: d for f, d in m.source.direction.items() if f in fset},
                           {v: g for v, g in m.source.genus.items() if v in vset},
                           {v: c for v, c in m.source.cyclic.items() if v in vset},
                           {f: c for f, c in m.source.color.items() if f in fset})
        wflags = m.target.flags_at(w)
        sub_target = Graph([w], wflags,
                           {f: f for f in wflags},
                           {f: w for f in wflags},
                           {f: d for f, d in m.target.direction.items() if f in wflags},
                           {w: m.target.genus_of(w)} if m.target.genus_of(w) else None,
                           {w: m.target.cyclic[w]} if w in m.target.cyclic else None,
                           {f: c for f, c in m.target.color.items() if f in wflags})
        phi_f = {y: m.phi_f[y] for y in wflags}
        phi_v = {v: w for v in vs}
        i = {f: g for f, g in m.i_ghost.items() if f in fset}
        out.append((w, GraphMorphism(sub_source, sub_target, phi_f, phi_v, i)))
    return out


def recompose(pieces, source_vertex_order=None) -> GraphMorphism:
    """Disjoint union of per-vertex morphisms (inverse of decompose).

    `source_vertex_order`, when given, fixes the order of the assembled
    source so that recompose(decompose(m), m.source.vertices) == m.
    """
    src = None
    tgt = None
    phi_f, phi_v, i = {}, {}, {}
    for _, piece in pieces:
        src = piece.source if src is None else disjoint_union(src, piece.source)
        tgt = piece.target if tgt is None else disjoint_union(tgt, piece.target)
        phi_f.update(piece.phi_f)
        phi_v.update(piece.phi_v)
        i.update(piece.i_ghost)
    if src is None:
        from .graphs import empty_graph
        src = tgt = empty_graph()
    if source_vertex_order is not None:
        if sorted(source_vertex_order) != sorted(src.vertices):
            raise MorphismError("source_vertex_order is not a permutation")
        src = Graph(tuple(source_vertex_order), src.flags, src.involution,
                    src.boundary, src.direction, src.genus, src.cyclic, src.color)
    return GraphMorphism(src, tgt, phi_f, phi_v, i)


@dataclass(frozen=True)
class DegreeWeight:
    degree: int
    weight: int


def _deg_wt(g: Graph):
    return len(g.flags), len(g.flags) + len(g.vertices)


def degree_weight(m: GraphMorphism) -> DegreeWeight:
    """deg(phi)=(deg X - deg Y)/2, wt(phi)=wt X - wt Y; deg = #ghost edges."""
    dx, wx = _deg_wt(m.source)
    dy, wy = _deg_wt(m.target)
    if (dx - dy) % 2:
        raise MorphismError("flag count parity violation")
    return DegreeWeight((dx - dy) // 2, wx - wy)


# ----------------------------------------------------------------------
# Simple generators
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeContraction:
    s: str
    t: str


@dataclass(frozen=True)
class LoopContraction:
    s: str
    t: str


@dataclass(frozen=True)
class Merger:
    v: str
    w: str


@dataclass(frozen=True)
class Isomorphism:
    vmap: tuple   # tuple of (old, new) pairs
    fmap: tuple


def _merge_vertices(ambient: Graph, v, w, drop_flags=(), genus_bump=0,
                    track_genus=False):
    """Target aggregate with v,w merged (onto the earlier of the two)."""
    keep_first = ambient.vertices.index(v) < ambient.vertices.index(w)
    mv, dropped = (v, w) if keep_first else (w, v)
    vertices = tuple(x for x in ambient.vertices if x != dropped)
    drop = set(drop_flags)
    flags = tuple(f for f in ambient.flags if f not in drop)
    boundary = {}
    for f in flags:
        b = ambient.boundary[f]
        boundary[f] = mv if b in (v, w) else b
    genus = dict(ambient.genus)
    if track_genus:
        newg = ambient.genus_of(v) + ambient.genus_of(w) + genus_bump
        genus.pop(v, None)
        genus.pop(w, None)
        if newg:
            genus[mv] = newg
    return Graph(vertices, flags,
                 {f: f for f in flags}, boundary,
                 {f: d for f, d in ambient.direction.items() if f not in drop},
                 genus, None,
                 {f: c for f, c in ambient.color.items() if f not in drop}), mv


def _shrink_vertex(ambient: Graph, v, drop_flags, genus_bump=0, track_genus=False):
    drop = set(drop_flags)
    flags = tuple(f for f in ambient.flags if f not in drop)
    genus = dict(ambient.genus)
    if track_genus and genus_bump:
        genus[v] = ambient.genus_of(v) + genus_bump
    return Graph(ambient.vertices, flags,
                 {f: f for f in flags},
                 {f: ambient.boundary[f] for f in flags},
                 {f: d for f, d in ambient.direction.items() if f not in drop},
                 genus, None,
                 {f: c for f, c in ambient.color.items() if f not in drop})


def make_generator(kind, ambient: Graph, track_genus=None) -> GraphMorphism:
    """The simple morphism of the given kind out of `ambient`.

    Untouched corollas are carried by the identity.  With `track_genus`
    the target's genus labels are the contraction-additive ones (loop
    contractions add one); default is to track iff `ambient` carries any
    genus label.
    """
    if track_genus is None:
        track_genus = bool(ambient.genus)
    if isinstance(kind, (EdgeContraction, LoopContraction)):
        s, t = kind.s, kind.t
        for f in (s, t):
            if f not in ambient.boundary:
                raise FlagNotFound("no flag %r in ambient" % f)
        v, w = ambient.boundary[s], ambient.boundary[t]
        if isinstance(kind, EdgeContraction):
            if v == w:
                raise SameVertexForEdgeContraction(
                    "flags %r,%r share a vertex; use LoopContraction" % (s, t))
            target, _ = _merge_vertices(ambient, v, w, drop_flags=(s, t),
                                        track_genus=track_genus)
        else:
            if v != w:
                raise DistinctVertexForLoop(
                    "flags %r,%r are on distinct vertices" % (s, t))
            target = _shrink_vertex(ambient, v, (s, t), genus_bump=1,
                                    track_genus=track_genus)
        phi_f = {f: f for f in target.flags}
        survived = set(target.vertices)
        phi_v = {}
        for x in ambient.vertices:
            if x in (v, w):
                phi_v[x] = v if v in survived else w
            else:
                phi_v[x] = x
        return validate(GraphMorphism(ambient, target, phi_f, phi_v,
                                      {s: t, t: s}))
    if isinstance(kind, Merger):
        v, w = kind.v, kind.w
        if v not in ambient.vertices or w not in ambient.vertices or v == w:
            raise MorphismError("merger needs two distinct ambient vertices")
        target, mv = _merge_vertices(ambient, v, w, track_genus=track_genus)
        phi_f = {f: f for f in target.flags}
        phi_v = {x: (mv if x in (v, w) else x) for x in ambient.vertices}
        return validate(GraphMorphism(ambient, target, phi_f, phi_v, {}))
    if isinstance(kind, Isomorphism):
        vmap = dict(kind.vmap)
        fmap = dict(kind.fmap)
        target = ambient.relabel(vmap, fmap)
        phi_f = {fmap.get(f, f): f for f in ambient.flags}
        phi_v = {v: vmap.get(v, v) for v in ambient.vertices}
        return validate(GraphMorphism(ambient, target, phi_f, phi_v, {}))
    raise MorphismError("unknown generator kind %r" % (kind,))


def iso_between(source: Graph, target: Graph, vmap, fmap) -> GraphMorphism:
    """Isomorphism morphism given explicit structure-preserving maps."""
    m = GraphMorphism(source, target,
                      {fmap[f]: f for f in source.flags},
                      {v: vmap[v] for v in source.vertices}, {})
    return validate(m)


# ----------------------------------------------------------------------
# Factorization into simple generators
# ----------------------------------------------------------------------

def minimal_word_length(m: GraphMorphism) -> int:
    """|phi| = sum over target vertices of |E(ghost_v)| + |pi0(ghost_v)| - 1;
    1 for isomorphisms."""
    if m.is_isomorphism():
        return 1
    total = 0
    for _, sub in ghost_components(m):
        total += len(sub.edges()) + len(sub.components()) - 1
    return total


def default_edge_order(m: GraphMorphism):
    """Spanning-tree edges of every ghost component first, then the rest."""
    gg = ghost_graph(m)
    edges = list(m.ghost_edges())
    parent = {v: v for v in gg.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree, rest = [], []
    for a, b in edges:
        ra, rb = find(gg.boundary[a]), find(gg.boundary[b])
        if ra != rb:
            parent[ra] = rb
            tree.append((a, b))
        else:
            rest.append((a, b))
    return tree + rest


def factorize(m: GraphMorphism, edge_order=None, merger_order=None,
              track_genus=None):
    """Word of simple generators composing exactly to m.

    All ghost-edge contractions come first (in `edge_order`; an edge whose
    endpoints were already identified becomes a loop contraction), then
    mergers collapse the remaining components of every fibre, then one
    trailing isomorphism when needed.  The number of non-isomorphism
    factors is the minimal word length.
    """
    if track_genus is None:
        track_genus = bool(m.source.genus or m.target.genus)
    if m.is_isomorphism():
        return [m]
    edges = m.ghost_edges()
    if edge_order is None:
        edge_order = default_edge_order(m)
    else:
        edge_order = [tuple(sorted(e, key=_token_key)) for e in edge_order]
        if sorted(edge_order) != sorted(edges):
            raise OrderNotTotal("edge_order is not a total order on the ghost edges")

    word = []
    cur = m.source
    phi_v = dict(m.phi_v)      # current vertices -> final target vertices
    remaining = set(map(tuple, edge_order))

    for a, b in edge_order:
        v, w = cur.boundary[a], cur.boundary[b]
        gen = LoopContraction(a, b) if v == w else EdgeContraction(a, b)
        step = make_generator(gen, cur, track_genus=track_genus)
        word.append(step)
        new_phi_v = {}
        for x in cur.vertices:
            new_phi_v[step.phi_v[x]] = phi_v[x]
        cur = step.target
        phi_v = new_phi_v
        remaining.discard((a, b))

    # mergers per target vertex, in target order
    order_key = {}
    if merger_order:
        order_key = {v: i for i, v in enumerate(merger_order)}
    for wtgt in m.target.vertices:
        fibre = [v for v in cur.vertices if phi_v[v] == wtgt]
        fibre.sort(key=lambda v: (order_key.get(v, len(order_key)), cur.vertices.index(v)))
        while len(fibre) > 1:
            a, b = fibre[0], fibre[1]
            step = make_generator(Merger(a, b), cur, track_genus=track_genus)
            word.append(step)
            merged = step.phi_v[a]
            new_phi_v = {step.phi_v[x]: phi_v[x] for x in cur.vertices}
            cur = step.target
            phi_v = new_phi_v
            fibre = [merged] + fibre[2:]

    # trailing isomorphism
    partial = compose_chain(word)
    tail_phi_f = {}
    inv_partial_f = {v: k for k, v in partial.phi_f.items()}
    for y in m.target.flags:
        tail_phi_f[y] = inv_partial_f[m.phi_f[y]]
    tail = GraphMorphism(cur, m.target, tail_phi_f, phi_v, {})
    validate(tail)
    if not tail.is_identity():
        word.append(tail)
    return word


# ----------------------------------------------------------------------
# Text format
# ----------------------------------------------------------------------

def serialize(m: GraphMorphism) -> str:
    parts = [
        "src:%s" % serialize_graph(m.source),
        "tgt:%s" % serialize_graph(m.target),
        "fF:{%s}" % ",".join("%s:%s" % (k, m.phi_f[k])
                             for k in sorted(m.phi_f, key=_token_key)),
        "fV:{%s}" % ",".join("%s:%s" % (k, m.phi_v[k])
                             for k in sorted(m.phi_v, key=_token_key)),
        "ig:[%s]" % ",".join("(%s,%s)" % e for e in m.ghost_edges()),
    ]
    return "mor{%s}" % ";".join(parts)


def parse(text: str) -> GraphMorphism:
    text = text.strip()
    if not (text.startswith("mor{") and text.endswith("}")):
        raise MorphismError("not a morphism literal")
    body = text[4:-1]
    # split on ';' at depth 0
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch in "[{(":
            depth += 1
        elif ch in "]})":
            depth -= 1
        if ch == ";" and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur))
    sections = {}
    for part in parts:
        key, _, val = part.partition(":")
        sections[key] = val
    src = parse_graph(sections["src"])
    tgt = parse_graph(sections["tgt"])

    def parse_map(s):
        out = {}
        for item in s.strip("{}").split(","):
            if item:
                k, _, v = item.partition(":")
                out[k] = v
        return out

    phi_f = parse_map(sections["fF"])
    phi_v = parse_map(sections["fV"])
    i = {}
    body = sections["ig"].strip("[]")
    if body:
        for pair in body.split("),("):
            a, b = pair.strip("()").split(",")
            i[a] = b
            i[b] = a
    return validate(GraphMorphism(src, tgt, phi_f, phi_v, i))


def morphism_canonical_key(m: GraphMorphism, extra_vertex_colors=None) -> str:
    """Iso class key for a one-comma morphism (target a single corolla).

    Two such morphisms get equal keys iff they differ by a source
    isomorphism and a target isomorphism.  An automorphism of the target
    corolla may rewire the kept tails arbitrarily within their
    direction/color class, so the iso class is exactly the iso class of
    the decorated ghost graph; the target's own genus label is appended.
    `extra_vertex_colors` (slot indices, decoration labels) refine the
    source quotient.
    """
    if len(m.target.vertices) != 1:
        raise MorphismError("iso-class keys are defined for one-comma morphisms")
    gg = ghost_graph(m)
    cf = canonical_form(gg, vertex_colors=dict(extra_vertex_colors or {}))
    w = m.target.vertices[0]
    return serialize_graph(cf.graph) + "|tg:%d" % m.target.genus_of(w)
