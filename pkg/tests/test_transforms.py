from fractions import Fraction

import pytest

from graphcalc.exactla import BasedSpace, rank
from graphcalc.freeops import (
    Truncation, VModule, associative_op, commutative_op, genus_type, plain,
    rooted, terminal_modular_op, trivial_vmodule,
)
from graphcalc.instances import CYCLIC, MODULAR, NC_MODULAR, OPERAD, SURJECTIONS
from graphcalc.transforms import (
    NotGraded, NotQuadratic, OddCoFOp, bar, cobar, feynman_transform,
    omega_bar, quasi_iso_check, zero_co_op,
)


def com_operad(n):
    # reduced: arities >= 2 (the truncation dropping 0/1-ary corollas)
    return commutative_op(OPERAD, [rooted(k) for k in range(2, n + 1)])


def com_cyclic(nflags):
    # reduced cyclic commutative: corollas with >= 3 flags
    return commutative_op(CYCLIC, [plain(k) for k in range(3, nflags + 1)])


def factorial(n):
    out = 1
    for k in range(2, n + 1):
        out *= k
    return out


# -- bar ------------------------------------------------------------------

def test_bar_single_edge_tree_contracts_to_generator():
    com = com_operad(3)
    b = bar(com, OPERAD, Truncation(3, 4))
    cx = b.complex(rooted(3))
    # one-edge trees (two binary vertices) in degree 1, corolla in degree 0
    assert cx.space(1).dim == 3
    d1 = cx.differential(1)
    for key in cx.space(1).labels:
        col = d1.cols.get(key, {})
        assert len(col) == 1 and list(col.values())[0] in (1, -1)


def test_bar_d_squared_commutative_arity4():
    com = com_operad(4)
    b = bar(com, OPERAD, Truncation(4, 5))
    for n in (2, 3, 4):
        assert b.check_d_squared(rooted(n))


def test_bar_d_squared_associative_arity4():
    As = associative_op([2, 3, 4])
    b = bar(As, OPERAD, Truncation(4, 5))
    for n in (2, 3, 4):
        assert b.check_d_squared(rooted(n))


def test_bar_d_squared_commutative_cyclic():
    com = com_cyclic(9)
    b = bar(com, CYCLIC, Truncation(4, 5))
    for n in (4, 5):
        assert b.check_d_squared(plain(n))


def test_bar_d_squared_modular():
    # arity window wide enough that contraction stays supported
    tm = terminal_modular_op(1, 8)
    b = bar(tm, MODULAR, Truncation(3, 4))
    assert b.check_d_squared(genus_type(1, 2))


def test_bar_zero_structure_maps():
    # zero module -> zero transform
    mod = trivial_vmodule([])
    com = commutative_op(OPERAD, [])
    b = bar(com, OPERAD, Truncation(2, 3))
    cx = b.complex(rooted(2))
    assert all(cx.space(k).dim == 0 for k in cx.degrees())


def test_bar_rejects_ungraded_kind():
    com = commutative_op(SURJECTIONS, [])
    with pytest.raises(NotGraded):
        bar(com, SURJECTIONS, Truncation(2, 3))


# -- cobar ----------------------------------------------------------------

def test_cobar_one_binary_class_dims():
    # free even construction on one binary class: 2-edge trees at arity 3
    mod = trivial_vmodule([rooted(2)])
    p = zero_co_op(mod)
    c = cobar(p, OPERAD, Truncation(3, 4))
    cx = c.complex(rooted(3))
    # 3 one-edge trees in degree -1; nothing in degree 0 (no arity-3 label)
    assert cx.space(-1).dim == 3
    assert cx.space(0).dim == 0


def test_cobar_zero_module():
    p = zero_co_op(trivial_vmodule([]))
    c = cobar(p, OPERAD, Truncation(2, 3))
    cx = c.complex(rooted(2))
    assert all(cx.space(k).dim == 0 for k in cx.degrees())


def co_commutative(max_arity):
    """Odd co-commutative co-op: 1-dim at every rooted arity, splitting
    into every two-vertex shape with coefficient 1."""
    import itertools
    mod = trivial_vmodule([rooted(n) for n in range(2, max_arity + 1)])

    def co_edge(t, label):
        out = []
        n = t.data[0]
        ins = ["i%d" % i for i in range(n)]
        # split into rooted(a) root part + rooted(b) grafted part, a+b-1=n
        for b in range(2, n - 1):
            a = n - b + 1
            for subset in itertools.combinations(range(n), b):
                # grafted slot takes inputs `subset`; root slot the rest
                t1, t2 = rooted(a), rooted(b)
                leg_assign = {"r": (0, "r")}
                rest = [i for i in range(n) if i not in subset]
                # root slot input ports: i0.. i{a-1}; last one joins
                for pos, i in enumerate(rest):
                    leg_assign["i%d" % i] = (0, "i%d" % pos)
                for pos, i in enumerate(subset):
                    leg_assign["i%d" % i] = (1, "i%d" % pos)
                out.append((t1, label, t2, label,
                            "i%d" % (a - 1), "r", leg_assign, Fraction(1)))
        return out

    return OddCoFOp(mod, co_edge=co_edge, name="cocom")


def test_cobar_co_commutative_d_squared():
    p = co_commutative(4)
    c = cobar(p, OPERAD, Truncation(3, 4))
    for n in (2, 3, 4):
        assert c.check_d_squared(rooted(n))


def test_cobar_of_bar_delegates_to_composite():
    com = com_operad(3)
    b = bar(com, OPERAD, Truncation(3, 4))
    c = cobar(b, OPERAD, Truncation(3, 4))
    assert c.flavor == "omegabar"


# -- omega_bar and the resolution ------------------------------------------

def test_omega_bar_d_squared():
    com = com_operad(4)
    ob = omega_bar(com, OPERAD, Truncation(3, 4))
    for n in (2, 3):
        assert ob.check_d_squared(rooted(n))


def test_omega_bar_counit_is_chain_map_and_h0():
    As = associative_op([2, 3])
    ob = omega_bar(As, OPERAD, Truncation(2, 3))
    for n, dim in ((2, 2), (3, 6)):
        rep = quasi_iso_check(As, OPERAD, Truncation(2, 3), rooted(n))
        assert rep.chain_map_ok
        assert rep.acyclic, rep.cone_homology
        # H0(Omega B) = As(n): dim n!
        assert rep.left_homology[0] == dim == factorial(n)


def test_omega_bar_commutative_h0():
    com = com_operad(3)
    rep = quasi_iso_check(com, OPERAD, Truncation(2, 3), rooted(3))
    assert rep.acyclic and rep.left_homology[0] == 1
    assert all(v == 0 for k, v in rep.left_homology.items() if k != 0)


def test_quasi_iso_rejects_non_quadratic():
    tm = commutative_op(NC_MODULAR, [genus_type(0, 2)])
    with pytest.raises(NotQuadratic):
        quasi_iso_check(tm, NC_MODULAR, Truncation(2, 3), genus_type(0, 2))


# -- Feynman transform -------------------------------------------------------

def test_ft_dual_dims_mirror_bar():
    com = com_operad(4)
    b = bar(com, OPERAD, Truncation(3, 4))
    ft = feynman_transform(com, OPERAD, Truncation(3, 4))
    for n in (2, 3, 4):
        bd = b.dims(rooted(n))
        fd = ft.dims(rooted(n))
        assert fd == {-k: v for k, v in bd.items()}


def test_ft_d_squared():
    As = associative_op([2, 3, 4])
    ft = feynman_transform(As, OPERAD, Truncation(3, 4))
    for n in (2, 3, 4):
        assert ft.check_d_squared(rooted(n))


def test_ft_differential_is_transpose():
    com = com_operad(3)
    b = bar(com, OPERAD, Truncation(2, 3))
    ft = feynman_transform(com, OPERAD, Truncation(2, 3))
    n = 3
    cb = b.complex(rooted(n))
    cf = ft.complex(rooted(n))
    d1 = cb.differential(1)
    dft = cf.differential(0)   # FT_0 -> FT_{-1}
    for c, col in d1.cols.items():
        for r, v in col.items():
            assert dft.entry(c + "^", r + "^") == v
