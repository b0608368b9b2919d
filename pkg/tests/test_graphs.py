import itertools
import random

import pytest

from graphcalc.graphs import (
    DanglingBoundary, DecorationMismatch, DirectionClash, GraphError, HasTails,
    NonInvolutive, NotABijection, build_graph, canonical_form, canonical_key,
    corolla, disjoint_union, empty_graph, euler_genus, foliage, insert, parse,
    serialize, truncate_tails,
)


def star(n, name="v", prefix="a"):
    return corolla(name, ["%s%d" % (prefix, i) for i in range(n)])


def small_loop():
    return build_graph(["v"], ["a", "b"], {"a": "b", "b": "a"}, {"a": "v", "b": "v"})


def one_edge():
    return build_graph(["v", "w"], ["a", "b"], {"a": "b", "b": "a"},
                       {"a": "v", "b": "w"})


def test_build_lone_vertex():
    g = build_graph(["v"], [], {}, {})
    assert g.edges() == () and g.tails() == ()


def test_build_small_loop():
    g = small_loop()
    assert len(g.edges()) == 1 and g.tails() == ()


def test_build_minimal_edge():
    g = one_edge()
    assert len(g.edges()) == 1 and g.tails() == ()


def test_build_rejects_non_involutive():
    with pytest.raises(NonInvolutive):
        build_graph(["v"], ["a", "b", "c"],
                    {"a": "b", "b": "c", "c": "a"},
                    {"a": "v", "b": "v", "c": "v"})


def test_build_rejects_dangling_boundary():
    with pytest.raises((DanglingBoundary, GraphError)):
        build_graph(["v"], ["a"], {}, {"a": "w"})


def test_build_rejects_direction_clash():
    with pytest.raises(DirectionClash):
        build_graph(["v", "w"], ["a", "b"], {"a": "b", "b": "a"},
                    {"a": "v", "b": "w"}, direction={"a": "in", "b": "in"})


def test_involution_squares_to_identity():
    g = one_edge()
    for f in g.flags:
        assert g.involution[g.involution[f]] == f


def test_edges_tails_partition():
    g = build_graph(["v"], ["a", "b", "c"], {"a": "b", "b": "a"},
                    {f: "v" for f in "abc"})
    flat = {f for e in g.edges() for f in e} | set(g.tails())
    assert flat == set(g.flags)


def test_euler_single_edge():
    assert euler_genus(one_edge()) == (1, 1, 0, 0)


def test_euler_small_loop():
    # gamma(G) = sum gamma(v) + b1 for connected graphs
    assert euler_genus(small_loop()) == (0, 1, 1, 1)


def test_euler_two_lone_vertices():
    g = build_graph(["v", "w"], [], {}, {})
    chi, b0, b1, gamma = euler_genus(g)
    assert (chi, b0, b1) == (2, 2, 0)


def test_euler_relation_random():
    rng = random.Random(7)
    for _ in range(40):
        nv = rng.randint(1, 5)
        vs = ["v%d" % i for i in range(nv)]
        flags, involution, boundary = [], {}, {}
        for i in range(rng.randint(0, 6)):
            a, b = "x%d" % i, "y%d" % i
            flags += [a, b]
            involution[a], involution[b] = b, a
            boundary[a], boundary[b] = rng.choice(vs), rng.choice(vs)
        g = build_graph(vs, flags, involution, boundary)
        chi, b0, b1, _ = euler_genus(g)
        assert chi == len(g.vertices) - len(g.edges()) == b0 - b1


# -- canonical form ---------------------------------------------------

def random_relabel(g, rng):
    vs = list(g.vertices)
    fs = list(g.flags)
    rv = ["V%d" % i for i in range(len(vs))]
    rf = ["F%d" % i for i in range(len(fs))]
    rng.shuffle(rv)
    rng.shuffle(rf)
    return g.relabel(dict(zip(vs, rv)), dict(zip(fs, rf)))


def test_canonical_iso_invariance():
    rng = random.Random(3)
    samples = [one_edge(), small_loop(), star(3),
               build_graph(["v", "w"], ["a", "b", "c", "d"],
                           {"a": "b", "b": "a", "c": "d", "d": "c"},
                           {"a": "v", "b": "w", "c": "v", "d": "w"})]
    for g in samples:
        key = canonical_key(g)
        for _ in range(5):
            assert canonical_key(random_relabel(g, rng)) == key


def test_canonical_idempotent():
    g = star(3)
    c1 = canonical_form(g).graph
    c2 = canonical_form(c1).graph
    assert c1 == c2


def test_three_star_automorphisms_brute_force():
    # oracle: count flag bijections of the 3-star onto itself
    g = star(3)
    flags = list(g.flags)
    expected = sum(1 for p in itertools.permutations(flags))  # all 3! work
    assert expected == 6
    assert canonical_form(g).order == 6


def test_directed_two_flag_corolla_trivial_automorphisms():
    g = corolla("v", ["a", "b"], direction={"a": "in", "b": "out"})
    # oracle: only the identity respects directions
    count = 0
    for p in itertools.permutations(["a", "b"]):
        m = dict(zip(["a", "b"], p))
        if all(g.direction[f] == g.direction[m[f]] for f in "ab"):
            count += 1
    assert count == 1
    assert canonical_form(g).order == 1


def test_automorphisms_form_group():
    g = build_graph(["v", "w"], ["a", "b", "c", "d"],
                    {"a": "b", "b": "a", "c": "d", "d": "c"},
                    {"a": "v", "b": "w", "c": "v", "d": "w"})
    cf = canonical_form(g)
    autos = {tuple(sorted(fp.items())) for _, fp in cf.automorphisms}
    # closure under composition and inverse
    for _, f1 in cf.automorphisms:
        inv = {b: a for a, b in f1.items()}
        assert tuple(sorted(inv.items())) in autos
        for _, f2 in cf.automorphisms:
            comp = {x: f2[f1[x]] for x in f1}
            assert tuple(sorted(comp.items())) in autos


def test_canonical_respects_pinned_flag_colors():
    g = star(2)
    plain = canonical_form(g)
    pinned = canonical_form(g, flag_colors={"a0": "L0", "a1": "L1"})
    assert plain.order == 2 and pinned.order == 1


def test_genus_distinguishes():
    a = corolla("v", ["a"], genus=1)
    b = corolla("v", ["a"])
    assert canonical_key(a) != canonical_key(b)


# -- insertion ---------------------------------------------------------

def test_insert_identity_star():
    g = star(3, name="v", prefix="a")
    h = star(3, name="w", prefix="t")
    res = insert(g, "v", h, {"a0": "t0", "a1": "t1", "a2": "t2"})
    assert canonical_key(res) == canonical_key(star(3))


def test_insert_two_vertex_graph_into_three_star():
    g = star(3, name="v", prefix="a")
    h = build_graph(["p", "q"], ["x", "y", "t0", "t1", "t2"],
                    {"x": "y", "y": "x"},
                    {"x": "p", "y": "q", "t0": "p", "t1": "p", "t2": "q"})
    res = insert(g, "v", h, {"a0": "t0", "a1": "t1", "a2": "t2"})
    assert len(res.vertices) == 2
    assert len(res.edges()) == 1
    assert len(res.tails()) == 3


def test_insert_rejects_non_bijection():
    g = star(2, name="v", prefix="a")
    h = star(3, name="w", prefix="t")
    with pytest.raises(NotABijection):
        insert(g, "v", h, {"a0": "t0", "a1": "t1"})


def test_insert_commutes_on_distinct_vertices():
    rng = random.Random(11)
    for _ in range(10):
        g = build_graph(["u", "w"], ["a", "b", "c", "d"],
                        {"a": "b", "b": "a"},
                        {"a": "u", "b": "w", "c": "u", "d": "w"})
        h1 = star(2, name="p1", prefix="s")
        h2 = star(2, name="p2", prefix="r")
        m1 = dict(zip(["a", "c"], rng.sample(["s0", "s1"], 2)))
        m2 = dict(zip(["b", "d"], rng.sample(["r0", "r1"], 2)))
        r1 = insert(insert(g, "u", h1, m1), "w", h2, m2)
        r2 = insert(insert(g, "w", h2, m2), "u", h1, m1)
        assert r1 == r2


# -- truncation / foliage ----------------------------------------------

def test_truncate_star():
    g = star(4)
    t = truncate_tails(g)
    assert t.flags == () and t.vertices == g.vertices


def test_foliage_lone_vertex_two_tails():
    g = build_graph(["v"], [], {}, {})
    out = foliage(g, 2)
    assert len(out) == 1
    assert canonical_key(out[0]) == canonical_key(star(2))


def test_foliage_then_truncate_round_trip():
    g = truncate_tails(one_edge())  # actually has no tails already
    for n in range(3):
        for h in foliage(g, n):
            assert canonical_key(truncate_tails(h)) == canonical_key(g)


def test_foliage_requires_no_tails():
    with pytest.raises(HasTails):
        foliage(star(2), 1)


def test_foliage_counts_on_edge_graph():
    g = one_edge()
    # 1 tail on either endpoint of a symmetric edge: 1 class
    assert len(foliage(g, 1)) == 1
    # 2 tails: both on one vertex, or split: 2 classes
    assert len(foliage(g, 2)) == 2


# -- serialization -----------------------------------------------------

def test_serialize_example_shape():
    g = build_graph(["v0", "v1"], ["f0", "f1", "f2"],
                    {"f1": "f2", "f2": "f1"},
                    {"f0": "v0", "f1": "v0", "f2": "v1"},
                    direction={"f0": "in", "f1": "out", "f2": "in"},
                    genus={"v0": 1})
    text = serialize(g)
    assert text == ("graph{v:[v0,v1];f:[f0@v0,f1@v0,f2@v1];e:[(f1,f2)];"
                    "dir:{f0:in,f1:out,f2:in};g:{v0:1}}")
    assert parse(text) == g


def test_parse_round_trip_random():
    rng = random.Random(5)
    for _ in range(25):
        nv = rng.randint(1, 4)
        vs = ["v%d" % i for i in range(nv)]
        flags, involution, boundary = [], {}, {}
        for i in range(rng.randint(0, 3)):
            a, b = "e%da" % i, "e%db" % i
            flags += [a, b]
            involution[a], involution[b] = b, a
            boundary[a], boundary[b] = rng.choice(vs), rng.choice(vs)
        for i in range(rng.randint(0, 3)):
            t = "t%d" % i
            flags.append(t)
            boundary[t] = rng.choice(vs)
        g = build_graph(vs, flags, involution, boundary)
        assert parse(serialize(g)) == g


def test_empty_graph_serializes():
    g = empty_graph()
    assert parse(serialize(g)) == g


def test_disjoint_union_keeps_order():
    a, b = star(1, name="u", prefix="x"), star(2, name="w", prefix="y")
    u = disjoint_union(a, b)
    assert u.vertices == ("u", "w")
    v = disjoint_union(b, a)
    assert v.vertices == ("w", "u")
    assert canonical_key(u) == canonical_key(v)
