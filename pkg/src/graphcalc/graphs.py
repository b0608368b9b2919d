"""Abstract graphs built from flags, an involution and a boundary map.

A graph is a quadruple (vertices, flags, involution, boundary) with optional
decorations: per-flag direction (in/out), per-vertex genus label, per-vertex
cyclic order of incident flags, per-flag color tag.  Orbits of order two of
the involution are edges, fixed points are tails.  Corollas (one vertex, no
edges) and aggregates (ordered disjoint unions of corollas) are the objects
the morphism calculus is built on; the vertex tuple order *is* the component
order of an aggregate.

All values are immutable by convention; every operation returns new graphs.
"""

from __future__ import annotations

import itertools
import re
from typing import Iterable, Mapping, Optional, Sequence


class GraphError(ValueError):
    pass


class NonInvolutive(GraphError):
    pass


class DanglingBoundary(GraphError):
    pass


class DirectionClash(GraphError):
    pass


class HasTails(GraphError):
    pass


class NotABijection(GraphError):
    pass


class DecorationMismatch(GraphError):
    pass


_TOKEN_RE = re.compile(r"^[A-Za-z0-9_^.+\-!*|=]+$")

# Candidate explosion guard for canonical-form search.
_CANON_LIMIT = 4_000_000


def _check_token(tok):
    if not isinstance(tok, str) or not _TOKEN_RE.match(tok):
        raise GraphError("invalid id token: %r" % (tok,))


def _token_key(tok: str):
    # natural order for canonical names: f2 < f10
    return (len(tok), tok)


class Graph:
    """Immutable abstract graph.

    `vertices` is an ordered tuple (the component order of an aggregate),
    `involution` and `boundary` are total maps on `flags`.  Decorations are
    stored sparsely: `genus` only lists nonzero labels, `direction`/`color`/
    `cyclic` are empty when absent.
    """

    __slots__ = ("vertices", "flags", "involution", "boundary",
                 "direction", "genus", "cyclic", "color", "_key")

    def __init__(self, vertices, flags, involution, boundary,
                 direction=None, genus=None, cyclic=None, color=None):
        self.vertices = tuple(vertices)
        self.flags = tuple(flags)
        self.involution = dict(involution)
        self.boundary = dict(boundary)
        self.direction = dict(direction or {})
        self.genus = {v: g for v, g in (genus or {}).items() if g != 0}
        self.cyclic = {v: tuple(c) for v, c in (cyclic or {}).items()}
        self.color = dict(color or {})
        self._key = None

    # -- validation ----------------------------------------------------

    def validate(self):
        vset, fset = set(self.vertices), set(self.flags)
        if len(vset) != len(self.vertices) or len(fset) != len(self.flags):
            raise GraphError("duplicate vertex or flag ids")
        for v in self.vertices:
            _check_token(v)
        for f in self.flags:
            _check_token(f)
        if set(self.involution) != fset or set(self.boundary) != fset:
            raise GraphError("involution/boundary must be total on flags")
        for f in self.flags:
            g = self.involution[f]
            if g not in fset:
                raise NonInvolutive("involution leaves flag set at %r" % f)
            if self.involution[g] != f:
                raise NonInvolutive("involution not self-inverse at %r" % f)
        for f in self.flags:
            if self.boundary[f] not in vset:
                raise DanglingBoundary("flag %r attached to unknown vertex" % f)
        for f, d in self.direction.items():
            if f not in fset or d not in ("in", "out"):
                raise DirectionClash("bad direction entry %r:%r" % (f, d))
        if self.direction:
            if set(self.direction) != fset:
                raise DirectionClash("direction must be total when present")
            for a, b in self.edges():
                if self.direction[a] == self.direction[b]:
                    raise DirectionClash("edge (%s,%s) has two %r flags"
                                         % (a, b, self.direction[a]))
        for v, g in self.genus.items():
            if v not in vset or not isinstance(g, int) or g < 0:
                raise GraphError("bad genus label %r:%r" % (v, g))
        for v, cyc in self.cyclic.items():
            if v not in vset or sorted(cyc) != sorted(self.flags_at(v)):
                raise DecorationMismatch(
                    "cyclic order at %r is not a cycle of its flags" % v)
        for f, c in self.color.items():
            if f not in fset:
                raise GraphError("color on unknown flag %r" % f)
            _check_token(c)
        return self

    # -- basic derived data --------------------------------------------

    def edges(self):
        """Sorted tuple of edges, each a sorted flag pair."""
        out = []
        for f in self.flags:
            g = self.involution[f]
            if g != f and _token_key(f) < _token_key(g):
                out.append((f, g))
        out.sort(key=lambda e: (_token_key(e[0]), _token_key(e[1])))
        return tuple(out)

    def tails(self):
        return tuple(f for f in self.flags if self.involution[f] == f)

    def flags_at(self, v):
        return tuple(f for f in self.flags if self.boundary[f] == v)

    def genus_of(self, v):
        return self.genus.get(v, 0)

    def is_corolla(self):
        return len(self.vertices) == 1 and not self.edges()

    def is_aggregate(self):
        return not self.edges()

    def components(self):
        """Partition of vertices into connected components (sorted tuples)."""
        parent = {v: v for v in self.vertices}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.edges():
            ra, rb = find(self.boundary[a]), find(self.boundary[b])
            if ra != rb:
                parent[ra] = rb
        comps = {}
        for v in self.vertices:
            comps.setdefault(find(v), []).append(v)
        return tuple(tuple(c) for c in comps.values())

    def _norm_key(self):
        if self._key is None:
            self._key = (self.vertices, tuple(sorted(self.flags)),
                         tuple(sorted(self.involution.items())),
                         tuple(sorted(self.boundary.items())),
                         tuple(sorted(self.direction.items())),
                         tuple(sorted(self.genus.items())),
                         tuple(sorted(self.cyclic.items())),
                         tuple(sorted(self.color.items())))
        return self._key

    def __eq__(self, other):
        return isinstance(other, Graph) and self._norm_key() == other._norm_key()

    def __hash__(self):
        return hash(self._norm_key())

    def __repr__(self):
        return "Graph(%s)" % serialize(self)

    # -- structural edits (pure) ----------------------------------------

    def relabel(self, vmap=None, fmap=None):
        vmap = vmap or {}
        fmap = fmap or {}
        mv = lambda v: vmap.get(v, v)
        mf = lambda f: fmap.get(f, f)
        return Graph(
            [mv(v) for v in self.vertices],
            [mf(f) for f in self.flags],
            {mf(f): mf(g) for f, g in self.involution.items()},
            {mf(f): mv(v) for f, v in self.boundary.items()},
            {mf(f): d for f, d in self.direction.items()},
            {mv(v): g for v, g in self.genus.items()},
            {mv(v): tuple(mf(f) for f in c) for v, c in self.cyclic.items()},
            {mf(f): c for f, c in self.color.items()},
        ).validate()


def build_graph(vertices, flags, involution, boundary,
                direction=None, genus=None, cyclic=None, color=None):
    """Validated Graph constructor; rejects invalid involutions and maps."""
    fset = set(flags)
    inv = dict(involution)
    for f in flags:
        inv.setdefault(f, f)
    bnd = dict(boundary)
    if set(bnd) - fset:
        raise GraphError("boundary defined on unknown flags")
    missing = fset - set(bnd)
    if missing:
        raise DanglingBoundary("boundary missing on flags %s" % sorted(missing))
    return Graph(vertices, flags, inv, bnd, direction, genus, cyclic, color).validate()


def empty_graph():
    """The empty graph, the monoidal unit."""
    return Graph((), (), {}, {})


def corolla(v, flag_names, direction=None, genus=0, cyclic=None, color=None):
    g = {v: genus} if genus else None
    cyc = {v: tuple(cyclic)} if cyclic else None
    return build_graph([v], list(flag_names), {}, {f: v for f in flag_names},
                       direction=direction, genus=g, cyclic=cyc, color=color)


def disjoint_union(a: Graph, b: Graph) -> Graph:
    """Ordered disjoint union; ids must already be disjoint."""
    if set(a.vertices) & set(b.vertices) or set(a.flags) & set(b.flags):
        raise GraphError("disjoint_union requires disjoint id sets")
    return Graph(a.vertices + b.vertices, a.flags + b.flags,
                 {**a.involution, **b.involution},
                 {**a.boundary, **b.boundary},
                 {**a.direction, **b.direction},
                 {**a.genus, **b.genus},
                 {**a.cyclic, **b.cyclic},
                 {**a.color, **b.color})


def euler_genus(g: Graph):
    """(chi, b0, b1, total_gamma): chi=|V|-|E|=b0-b1, gamma=1-chi+sum gamma(v).

    For connected graphs the total gamma equals sum gamma(v) + b1.
    """
    chi = len(g.vertices) - len(g.edges())
    b0 = len(g.components())
    b1 = b0 - chi
    total = 1 - chi + sum(g.genus.values())
    return chi, b0, b1, total


# ----------------------------------------------------------------------
# Canonical form
# ----------------------------------------------------------------------

class CanonicalForm:
    """Canonical relabeling of a graph plus its automorphism group.

    `graph` has vertices v0,v1,... and flags f0,f1,... such that two graphs
    are isomorphic (respecting all decorations and the extra colors passed
    in) iff their canonical graphs are equal.  `automorphisms` are pairs of
    (vertex permutation, flag permutation) on the *original* ids.
    """

    __slots__ = ("graph", "vertex_map", "flag_map", "automorphisms")

    def __init__(self, graph, vertex_map, flag_map, automorphisms):
        self.graph = graph
        self.vertex_map = vertex_map
        self.flag_map = flag_map
        self.automorphisms = automorphisms

    @property
    def order(self):
        return len(self.automorphisms)


def _refine(g: Graph, vertex_colors, flag_colors):
    """Stable (vertex class, flag class) partition under iterated refinement."""
    fc = {}
    for f in g.flags:
        p = g.involution[f]
        fc[f] = (p != f, g.direction.get(f, ""), g.color.get(f, ""),
                 str(flag_colors.get(f, "")))
    vc = {}
    for v in g.vertices:
        vc[v] = (g.genus_of(v), str(vertex_colors.get(v, "")),
                 len(g.flags_at(v)), len(g.cyclic.get(v, ())) > 0)

    def dense(d):
        keys = sorted(set(d.values()), key=repr)
        idx = {k: i for i, k in enumerate(keys)}
        return {x: idx[k] for x, k in d.items()}

    fc, vc = dense(fc), dense(vc)
    flags_at = {v: g.flags_at(v) for v in g.vertices}
    while True:
        nfc = {}
        for f in g.flags:
            p = g.involution[f]
            nfc[f] = (fc[f], vc[g.boundary[f]],
                      fc[p] if p != f else -1,
                      vc[g.boundary[p]] if p != f else -1)
        nvc = {}
        for v in g.vertices:
            local = tuple(sorted(nfc[f] for f in flags_at[v]))
            cyc = g.cyclic.get(v)
            if cyc:
                # rotation-minimal sequence of flag classes around v
                seq = [nfc[f] for f in cyc]
                rots = [tuple(seq[i:] + seq[:i]) for i in range(len(seq))]
                local = (local, min(rots) if rots else ())
            nvc[v] = (vc[v], local)
        nfc, nvc = dense(nfc), dense(nvc)
        if len(set(nfc.values())) == len(set(fc.values())) and \
           len(set(nvc.values())) == len(set(vc.values())):
            return nvc, nfc
        fc, vc = nfc, nvc


def _candidate_tuple(g, vorder, forder):
    """Comparable structure tuple of the relabeling given by the orders."""
    vpos = {v: i for i, v in enumerate(vorder)}
    fpos = {f: i for i, f in enumerate(forder)}
    inv = tuple(fpos[g.involution[f]] for f in forder)
    bnd = tuple(vpos[g.boundary[f]] for f in forder)
    dirs = tuple(g.direction.get(f, "") for f in forder) if g.direction else ()
    gen = tuple(g.genus_of(v) for v in vorder) if g.genus else ()
    cols = tuple(g.color.get(f, "") for f in forder) if g.color else ()
    cyc = ()
    if g.cyclic:
        rows = []
        for v in vorder:
            c = g.cyclic.get(v)
            if c is None:
                rows.append(())
            else:
                seq = [fpos[f] for f in c]
                rows.append(min(tuple(seq[i:] + seq[:i]) for i in range(len(seq)))
                            if seq else ())
        cyc = tuple(rows)
    return (inv, bnd, dirs, gen, cols, cyc)


def canonical_form(g: Graph, vertex_colors=None, flag_colors=None) -> CanonicalForm:
    """Deterministic canonical relabeling and automorphism group.

    Extra `vertex_colors` / `flag_colors` pin decorations that must be
    respected (e.g. basis labels on vertices, target labels on tails);
    isomorphisms are required to preserve them.
    """
    vertex_colors = vertex_colors or {}
    flag_colors = flag_colors or {}
    vc, fc = _refine(g, vertex_colors, flag_colors)

    vcells = {}
    for v in g.vertices:
        vcells.setdefault(vc[v], []).append(v)
    for cell in vcells.values():
        cell.sort(key=_token_key)

    count = 1
    for cell in vcells.values():
        for k in range(2, len(cell) + 1):
            count *= k
    flags_by_v = {v: sorted(g.flags_at(v), key=lambda f: (fc[f], _token_key(f)))
                  for v in g.vertices}
    for v in g.vertices:
        groups = itertools.groupby(flags_by_v[v], key=lambda f: fc[f])
        for _, grp in groups:
            n = len(list(grp))
            for k in range(2, n + 1):
                count *= k
    if count > _CANON_LIMIT:
        raise GraphError("canonical form search too large (%d candidates)" % count)

    cell_keys = sorted(vcells)
    best = None
    best_candidates = []

    def vertex_orders():
        perms = [itertools.permutations(vcells[k]) for k in cell_keys]
        for combo in itertools.product(*perms):
            yield [v for block in combo for v in block]

    for vorder in vertex_orders():
        # flag order: per vertex in vorder, grouped by flag class
        per_vertex_choices = []
        for v in vorder:
            fs = flags_by_v[v]
            groups = [list(grp) for _, grp in itertools.groupby(fs, key=lambda f: fc[f])]
            per_vertex_choices.append([itertools.permutations(grp) for grp in groups])
        flat_choices = [p for chs in per_vertex_choices for p in chs]
        for combo in itertools.product(*flat_choices):
            forder = [f for block in combo for f in block]
            cand = _candidate_tuple(g, vorder, forder)
            if best is None or cand < best:
                best = cand
                best_candidates = [(list(vorder), forder)]
            elif cand == best:
                best_candidates.append((list(vorder), forder))

    vorder0, forder0 = best_candidates[0]
    vmap = {v: "v%d" % i for i, v in enumerate(vorder0)}
    fmap = {f: "f%d" % i for i, f in enumerate(forder0)}
    relabeled = g.relabel(vmap, fmap)
    canon = Graph(["v%d" % i for i in range(len(vorder0))],
                  ["f%d" % i for i in range(len(forder0))],
                  relabeled.involution, relabeled.boundary,
                  relabeled.direction, relabeled.genus,
                  relabeled.cyclic, relabeled.color)

    autos = []
    for vorder, forder in best_candidates:
        vperm = {vorder[i]: vorder0[i] for i in range(len(vorder))}
        fperm = {forder[i]: forder0[i] for i in range(len(forder))}
        autos.append((vperm, fperm))
    return CanonicalForm(canon, vmap, fmap, autos)


def canonical_key(g: Graph, vertex_colors=None, flag_colors=None) -> str:
    return serialize(canonical_form(g, vertex_colors, flag_colors).graph)


# ----------------------------------------------------------------------
# Insertion / foliage
# ----------------------------------------------------------------------

def insert(g: Graph, v, h: Graph, matching: Mapping) -> Graph:
    """Insert `h` into vertex `v` of `g`.

    `matching` is a bijection from the flags of `g` at `v` onto the tails
    of `h`; `v` is deleted, each flag of `v` is fused with its matched tail
    (the tail inherits the outer flag's partner), directions and colors
    must agree on fused pairs.
    """
    if v not in g.vertices:
        raise GraphError("no vertex %r" % v)
    fv = set(g.flags_at(v))
    th = set(h.tails())
    m = dict(matching)
    if set(m) != fv or set(m.values()) != th or len(m) != len(set(m.values())):
        raise NotABijection("matching must biject flags at %r onto tails of h" % v)
    if (set(g.vertices) - {v}) & set(h.vertices) or (set(g.flags) - fv) & set(h.flags):
        raise GraphError("insert requires disjoint ids")
    for f, t in m.items():
        dg, dh = g.direction.get(f), h.direction.get(t)
        if (dg is None) != (dh is None) or (dg is not None and dg != dh):
            raise DecorationMismatch("direction mismatch fusing %r with %r" % (f, t))
        if g.color.get(f) != h.color.get(t):
            raise DecorationMismatch("color mismatch fusing %r with %r" % (f, t))

    pos = g.vertices.index(v)
    vertices = g.vertices[:pos] + h.vertices + g.vertices[pos + 1:]
    flags = tuple(f for f in g.flags if f not in fv) + h.flags
    involution = {}
    for f in g.flags:
        if f in fv:
            continue
        p = g.involution[f]
        involution[f] = m[p] if p in fv else p
    for f in h.flags:
        p = h.involution[f]
        involution[f] = p
    # outer partners of fused tails
    for f, t in m.items():
        p = g.involution[f]
        if p in fv:
            involution[t] = m[p]    # edge inside F_v becomes edge in h
        elif p == f:
            involution[t] = t       # outer tail stays a tail
        else:
            involution[t] = p
    boundary = {f: g.boundary[f] for f in g.flags if f not in fv}
    boundary.update(h.boundary)
    direction = {f: d for f, d in g.direction.items() if f not in fv}
    direction.update(h.direction)
    genus = {w: gg for w, gg in g.genus.items() if w != v}
    genus.update(h.genus)
    cyclic = {w: c for w, c in g.cyclic.items() if w != v}
    cyclic.update(h.cyclic)
    color = {f: c for f, c in g.color.items() if f not in fv}
    color.update(h.color)
    return Graph(vertices, flags, involution, boundary,
                 direction, genus, cyclic, color).validate()


def truncate_tails(g: Graph) -> Graph:
    """Remove all tails (the operator trun)."""
    keep = [f for f in g.flags if g.involution[f] != f]
    ks = set(keep)
    return Graph(g.vertices, keep,
                 {f: g.involution[f] for f in keep},
                 {f: g.boundary[f] for f in keep},
                 {f: d for f, d in g.direction.items() if f in ks},
                 g.genus,
                 {v: tuple(f for f in c if f in ks) for v, c in g.cyclic.items()},
                 {f: c for f, c in g.color.items() if f in ks})


def foliage(g: Graph, n: int):
    """All non-isomorphic graphs obtained by attaching exactly n standard tails.

    The coefficient of t^n in the leaf series; `g` must have no tails.
    Cyclic orders are not extended, so `g` must be free of them.
    """
    if g.tails():
        raise HasTails("foliage requires a graph without tails")
    if g.cyclic:
        raise DecorationMismatch("foliage does not extend cyclic orders")
    if not g.vertices and n > 0:
        return []
    new = ["t%d" % i for i in range(n)]
    seen = {}
    for assign in itertools.product(g.vertices, repeat=n) if n else [()]:
        flags = g.flags + tuple(new)
        involution = dict(g.involution)
        boundary = dict(g.boundary)
        for t, v in zip(new, assign):
            involution[t] = t
            boundary[t] = v
        cand = Graph(g.vertices, flags, involution, boundary,
                     g.direction or None, g.genus, None, g.color or None)
        key = canonical_key(cand)
        if key not in seen:
            seen[key] = cand
    return [seen[k] for k in sorted(seen)]


# ----------------------------------------------------------------------
# Text format
# ----------------------------------------------------------------------

def serialize(g: Graph) -> str:
    """Canonical text form, whitespace-free, keys sorted.

    graph{v:[v0,v1];f:[f0@v0,f1@v0,f2@v1];e:[(f1,f2)];dir:{f1:out,f2:in};g:{v0:1}}
    Flags not listed in `e` are tails.  The vertex list preserves component
    order; flags and all map keys are sorted.
    """
    parts = []
    parts.append("v:[%s]" % ",".join(g.vertices))
    fs = sorted(g.flags, key=_token_key)
    parts.append("f:[%s]" % ",".join("%s@%s" % (f, g.boundary[f]) for f in fs))
    parts.append("e:[%s]" % ",".join("(%s,%s)" % e for e in g.edges()))
    if g.direction:
        parts.append("dir:{%s}" % ",".join(
            "%s:%s" % (f, g.direction[f]) for f in fs))
    if g.genus:
        parts.append("g:{%s}" % ",".join(
            "%s:%d" % (v, g.genus[v]) for v in sorted(g.genus, key=_token_key)))
    if g.cyclic:
        parts.append("cyc:{%s}" % ",".join(
            "%s:(%s)" % (v, ",".join(g.cyclic[v]))
            for v in sorted(g.cyclic, key=_token_key)))
    if g.color:
        parts.append("col:{%s}" % ",".join(
            "%s:%s" % (f, g.color[f]) for f in sorted(g.color, key=_token_key)))
    return "graph{%s}" % ";".join(parts)


def _split_list(body):
    if not body:
        return []
    out, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return out


def parse(text: str) -> Graph:
    """Inverse of serialize()."""
    m = re.match(r"^graph\{(.*)\}$", text.strip())
    if not m:
        raise GraphError("not a graph literal: %r" % text[:40])
    sections = {}
    body = m.group(1)
    # split on ';' at depth 0 of [] {} ()
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
    for part in parts:
        key, _, val = part.partition(":")
        sections[key] = val
    if "v" not in sections or "f" not in sections:
        raise GraphError("graph literal missing v or f section")
    vertices = _split_list(sections["v"].strip("[]"))
    vertices = [v for v in vertices if v]
    boundary = {}
    flags = []
    for item in _split_list(sections["f"].strip("[]")):
        if not item:
            continue
        f, _, v = item.partition("@")
        flags.append(f)
        boundary[f] = v
    involution = {f: f for f in flags}
    for pair in _split_list(sections.get("e", "[]").strip("[]")):
        if not pair:
            continue
        a, b = pair.strip("()").split(",")
        involution[a] = b
        involution[b] = a
    direction = {}
    for item in _split_list(sections.get("dir", "{}").strip("{}")):
        if item:
            f, _, d = item.partition(":")
            direction[f] = d
    genus = {}
    for item in _split_list(sections.get("g", "{}").strip("{}")):
        if item:
            v, _, n = item.partition(":")
            genus[v] = int(n)
    cyclic = {}
    for item in _split_list(sections.get("cyc", "{}").strip("{}")):
        if item:
            v, _, seq = item.partition(":")
            cyclic[v] = tuple(x for x in seq.strip("()").split(",") if x)
    color = {}
    for item in _split_list(sections.get("col", "{}").strip("{}")):
        if item:
            f, _, c = item.partition(":")
            color[f] = c
    return build_graph(vertices, flags, involution, boundary,
                       direction or None, genus or None,
                       cyclic or None, color or None)
