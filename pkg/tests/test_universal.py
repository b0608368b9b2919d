import random
from fractions import Fraction

import pytest

from graphcalc.freeops import (
    Truncation, associative_op, free, plain, rooted, trivial_vmodule,
)
from graphcalc.instances import CYCLIC, OPERAD
from graphcalc.universal import (
    BoundExceeded, CoinvariantElement, Element, InsertionGraphClass,
    LabelMissing, OddGraphAlgebra, bv_defect, bv_delta, coinv_class, commutator,
    hom_fv, insertion_compose, jacobiator, odd_antisymmetry_defect,
    odd_jacobi_defect, odd_lie, prelie, prelie_associator, symmetric_product,
)


# -- insertion operad ---------------------------------------------------

def test_insert_vertex_into_vertex():
    a = InsertionGraphClass(1, ())
    b = InsertionGraphClass(1, ())
    assert insertion_compose(a, 1, b) == {InsertionGraphClass(1, ()): 1}


def test_insert_identity_side():
    g = InsertionGraphClass(2, ((1, 2),))
    dot = InsertionGraphClass(1, ())
    # inserting a single vertex leaves the graph unchanged
    assert insertion_compose(g, 1, dot) == {g: 1}
    assert insertion_compose(g, 2, dot) == {g: 1}


def test_insert_edge_into_edge_boundary_sum():
    g = InsertionGraphClass(2, ((1, 2),))
    out = insertion_compose(g, 1, g)
    # vertex 1 blows up into an edge graph; the dangling end of the old
    # edge attaches to either new vertex: 2 outcomes (brute-force oracle)
    assert sum(out.values()) == 2
    assert all(cls.n == 3 for cls in out)


def test_insert_missing_label():
    g = InsertionGraphClass(2, ((1, 2),))
    with pytest.raises(LabelMissing):
        insertion_compose(g, 5, g)


def test_insertion_distinct_labels_commute():
    rng = random.Random(0)
    for _ in range(10):
        a = InsertionGraphClass(3, ((1, 2), (2, 3)))
        b = InsertionGraphClass(2, ((1, 2),))
        c = InsertionGraphClass(1, ())
        # insert b at 1 and c at 3 in either order; labels shift
        r1 = {}
        for cls, m in insertion_compose(a, 1, b).items():
            for cls2, m2 in insertion_compose(cls, cls.n, c).items():
                r1[cls2] = r1.get(cls2, 0) + m * m2
        r2 = {}
        for cls, m in insertion_compose(a, 3, c).items():
            for cls2, m2 in insertion_compose(cls2 if False else cls, 1, b).items():
                r2[cls2] = r2.get(cls2, 0) + m * m2
        assert r1 == r2


# -- pre-Lie -------------------------------------------------------------

def rooted_tree_dot(fop):
    return coinv_class(fop, rooted(2), fop.space(rooted(2)).labels[0])


def test_prelie_free_operad_single_insertion():
    mod = trivial_vmodule([rooted(2)])
    f = free(mod, OPERAD, Truncation(3, 4))
    for t in (rooted(2), rooted(3)):
        f.basis(t)
    dot = coinv_class(f, rooted(2), f.basis(rooted(2))[0])
    prod = prelie(dot, dot, f)
    # the unique 2-vertex class appears (coefficient = number of inputs = 2)
    assert len(prod) == 1
    ((key, coeff),) = prod.items()
    assert coeff == 2


def random_coinv(fop, rng, arities):
    out = CoinvariantElement()
    for n in arities:
        t = rooted(n)
        labels = fop.space(t).labels
        lab = labels[rng.randrange(len(labels))]
        out = out.add(coinv_class(fop, t, lab),
                      Fraction(rng.randint(-3, 3), rng.randint(1, 3)))
    return out


def test_prelie_associator_symmetry_associative():
    As = associative_op([1, 2, 3, 4])
    rng = random.Random(7)
    for _ in range(30):
        a = random_coinv(As, rng, [2])
        b = random_coinv(As, rng, [rng.choice((1, 2))])
        c = random_coinv(As, rng, [1])
        lhs = prelie_associator(a, b, c, As)
        rhs = prelie_associator(a, c, b, As)
        assert lhs == rhs


def test_commutator_jacobi_associative():
    As = associative_op([1, 2, 3, 4])
    rng = random.Random(8)
    for _ in range(20):
        a = random_coinv(As, rng, [rng.choice((1, 2))])
        b = random_coinv(As, rng, [1])
        c = random_coinv(As, rng, [1])
        assert jacobiator(a, b, c, As) == CoinvariantElement()


def test_prelie_bound_exceeded():
    As = associative_op([1, 2])
    a = coinv_class(As, rooted(2), As.space(rooted(2)).labels[0])
    with pytest.raises(BoundExceeded):
        prelie(a, a, As)


# -- odd Lie -------------------------------------------------------------

def test_odd_bracket_of_vertices():
    alg = OddGraphAlgebra(max_edges=3)
    a = alg.vertex_class(2)
    b = alg.vertex_class(2)
    br = odd_lie(a, b)
    # single-edge class with coefficient counting the pairings (2*2 ports)
    assert len(br) == 1
    assert list(br.values())[0] == 4


def test_odd_antisymmetry_samples():
    alg = OddGraphAlgebra(max_edges=4)
    rng = random.Random(3)
    v2 = alg.vertex_class(2)
    v3 = alg.vertex_class(3)
    e1 = odd_lie(v2, v3)   # degree 1 elements
    e2 = odd_lie(v3, v3)
    for a, b in [(v2, v3), (e1, v2), (e1, e2), (e2, v3), (e1, e1)]:
        assert odd_antisymmetry_defect(a, b).is_zero()


def test_odd_jacobi_samples():
    alg = OddGraphAlgebra(max_edges=4)
    v2 = alg.vertex_class(2)
    v3 = alg.vertex_class(3)
    e1 = odd_lie(v2, v2)
    for a, b, c in [(v2, v2, v2), (v2, v3, v2), (v3, v3, v2), (e1, v2, v2)]:
        assert odd_jacobi_defect(a, b, c).is_zero()


# -- BV ------------------------------------------------------------------

def test_bv_no_ports_zero():
    alg = OddGraphAlgebra(connected_only=False, max_edges=3)
    a = alg.vertex_class(0)
    assert bv_delta(a).is_zero()


def test_bv_squares_to_zero():
    alg = OddGraphAlgebra(connected_only=False, max_edges=6)
    for nports in (2, 3, 4):
        a = alg.vertex_class(nports)
        assert bv_delta(bv_delta(a)).is_zero()
    # and on a product
    p = symmetric_product(alg.vertex_class(2), alg.vertex_class(3))
    assert bv_delta(bv_delta(p)).is_zero()


def test_bv_defect_equals_bracket():
    alg = OddGraphAlgebra(connected_only=False, max_edges=6)
    v2 = alg.vertex_class(2)
    v3 = alg.vertex_class(3)
    for a, b in [(v2, v3), (v3, v3), (v2, v2)]:
        lhs = bv_defect(a, b)
        rhs = odd_lie(a, b).scale((-1) ** a.homogeneous_degree())
        assert lhs == rhs
    # odd-degree first argument
    e1 = odd_lie(v2, v3)
    lhs = bv_defect(e1, v2)
    rhs = odd_lie(e1, v2).scale((-1) ** e1.homogeneous_degree())
    assert lhs == rhs


# -- hom blocks ----------------------------------------------------------

def test_hom_fv_identity_block():
    classes = hom_fv([rooted(2)], [rooted(2)], OPERAD)
    assert len(classes) == 1


def test_hom_fv_operad_2_2_to_3():
    classes = hom_fv([rooted(2), rooted(2)], [rooted(3)], OPERAD)
    # slot-ordered: either slot can be the root; circ_i indices wash out
    assert len(classes) == 2


def test_hom_fv_cyclic_cross_check():
    from graphcalc.instances import enumerate_one_comma
    srcs = [plain(3), plain(3)]
    classes = hom_fv(srcs, [plain(4)], CYCLIC)
    oracle = enumerate_one_comma(CYCLIC, [t.make_corolla("c") for t in srcs],
                                 plain(4).make_corolla("t"))
    assert len(classes) == len(oracle)
    assert classes == [c.key for c in oracle]


def test_hom_fv_two_targets():
    blocks = hom_fv([rooted(2), rooted(2)], [rooted(2), rooted(2)], OPERAD)
    # each slot must go to one target identically: one assignment each way
    assert len(blocks) == 2
