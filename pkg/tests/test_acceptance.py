"""Acceptance suite: one criterion per test, exact arithmetic throughout,
one pass/fail line each (visible with -rA / -s)."""

import itertools
import random
import subprocess
import sys
from fractions import Fraction

import pytest

from graphcalc.exactla import SparseMap
from graphcalc.freeops import (
    Truncation, associative_op, commutative_op, free, genus_type, plain,
    rooted, terminal_modular_op, trivial_vmodule,
)
from graphcalc.graphs import Graph, build_graph, corolla, disjoint_union
from graphcalc.instances import (
    CYCLIC, DIOPERAD, GG, GG_CONNECTED, MODULAR, OPERAD, PROP, PROPERAD,
    SURJECTIONS, check_axioms, enumerate_morphisms, kind_by_name,
    skeleton_objects, admits, DecorationRegimeMismatch,
)
from graphcalc.morphisms import (
    GraphMorphism, compose, compose_chain, decompose, degree_weight,
    factorize, ghost_components, minimal_word_length, recompose, validate,
)
from graphcalc.signs import quadratic_sign_check

CRITERION_KINDS = (GG, GG_CONNECTED, OPERAD, CYCLIC, MODULAR, DIOPERAD,
                   PROP, PROPERAD, SURJECTIONS)

_ENUM_CACHE = {}


def _report(num, name, passed, detail=""):
    line = "CRITERION %d (%s): %s" % (num, name, "PASS" if passed else "FAIL")
    if detail:
        line += "  [%s]" % detail
    print(line, flush=True)


def kind_morphisms(kind):
    """All admitted morphisms between skeleton objects at the bound."""
    if kind.name in _ENUM_CACHE:
        return _ENUM_CACHE[kind.name]
    objs = skeleton_objects(kind, 3, 3)
    homs = {}
    for X in objs:
        for Y in objs:
            if len(Y.flags) > len(X.flags) or len(Y.vertices) > len(X.vertices):
                continue
            ms = enumerate_morphisms(kind, X, Y)
            if ms:
                homs[(X._norm_key(), Y._norm_key())] = ms
    _ENUM_CACHE[kind.name] = homs
    return homs


def test_criterion_1_morphism_calculus():
    failures = 0
    total = 0
    pair_checks = 0
    triple_checks = 0
    rng = random.Random(11)
    for kind in CRITERION_KINDS:
        homs = kind_morphisms(kind)
        # per-morphism: degree = ghost edges, decompose round trip
        for ms in homs.values():
            for m in ms:
                total += 1
                dw = degree_weight(m)
                if dw.degree != len(m.ghost_edges()):
                    failures += 1
                back = recompose(decompose(m), m.source.vertices)
                if back != m:
                    failures += 1
        # additivity on composable pairs; associativity on triples
        keys = sorted(homs)
        composable = [(k1, k2) for k1 in keys for k2 in keys
                      if k1[1] == k2[0]]
        pairs = []
        for k1, k2 in composable:
            for f in homs[k1]:
                for g in homs[k2]:
                    if f.target == g.source:
                        pairs.append((f, g))
            if len(pairs) > 4000:
                break
        if len(pairs) > 3000:
            pairs = rng.sample(pairs, 3000)
        for f, g in pairs:
            pair_checks += 1
            c = compose(f, g)
            dwf, dwg, dwc = (degree_weight(x) for x in (f, g, c))
            if dwc.degree != dwf.degree + dwg.degree or \
                    dwc.weight != dwf.weight + dwg.weight:
                failures += 1
            if len(c.ghost_edges()) != len(f.ghost_edges()) + \
                    len(g.ghost_edges()):
                failures += 1
        # triples: extend sampled pairs by one more composable factor
        triples = []
        for f, g in pairs:
            k3s = [k2 for k2 in keys if k2[0] == g.target._norm_key()]
            for k3 in k3s[:2]:
                for h in homs[k3][:3]:
                    if g.target == h.source:
                        triples.append((f, g, h))
            if len(triples) >= 1500:
                break
        for f, g, h in triples:
            triple_checks += 1
            if compose(compose(f, g), h) != compose(f, compose(g, h)):
                failures += 1
    passed = failures == 0 and total > 0
    _report(1, "morphism calculus", passed,
            "%d morphisms, %d pairs, %d triples, %d failures"
            % (total, pair_checks, triple_checks, failures))
    assert passed


def random_gg_morphism(rng, max_corollas=5, max_flags=4, max_edges=6):
    nv = rng.randint(1, max_corollas)
    agg = None
    for i in range(nv):
        c = corolla("v%d" % i, ["v%d_f%d" % (i, j)
                                for j in range(rng.randint(0, max_flags))])
        agg = c if agg is None else disjoint_union(agg, c)
    flags = list(agg.flags)
    rng.shuffle(flags)
    n_edges = rng.randint(0, min(max_edges, len(flags) // 2))
    i_ghost = {}
    for k in range(n_edges):
        a, b = flags[2 * k], flags[2 * k + 1]
        i_ghost[a] = b
        i_ghost[b] = a
    # components of the ghost graph
    parent = {v: v for v in agg.vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in i_ghost.items():
        ra, rb = find(agg.boundary[a]), find(agg.boundary[b])
        if ra != rb:
            parent[ra] = rb
    comps = sorted({find(v) for v in agg.vertices})
    n_blocks = rng.randint(1, len(comps))
    block_of = {}
    # surjective assignment of components onto blocks
    order = comps[:]
    rng.shuffle(order)
    for idx, c in enumerate(order):
        block_of[c] = idx % n_blocks
    tgt = None
    phi_f = {}
    phi_v = {}
    for b in range(n_blocks):
        vs = [v for v in agg.vertices if block_of[find(v)] == b]
        kept = [f for f in agg.flags
                if agg.boundary[f] in set(vs) and f not in i_ghost]
        tflags = ["t%d_%s" % (b, f) for f in kept]
        c = corolla("t%d" % b, tflags)
        tgt = c if tgt is None else disjoint_union(tgt, c)
        for f, tf in zip(kept, tflags):
            phi_f[tf] = f
        for v in vs:
            phi_v[v] = "t%d" % b
    if tgt is None:
        tgt = corolla("t0", [])
        phi_v = {v: "t0" for v in agg.vertices}
    return validate(GraphMorphism(agg, tgt, phi_f, phi_v, i_ghost))


def test_criterion_2_factorization():
    rng = random.Random(23)
    failures = 0
    n = 0
    while n < 220:
        m = random_gg_morphism(rng)
        if m.is_isomorphism():
            continue
        n += 1
        expected = sum(len(sub.edges()) + len(sub.components()) - 1
                       for _, sub in ghost_components(m))
        word = factorize(m)
        length = sum(1 for s in word if not s.is_isomorphism())
        if length != expected or compose_chain(word) != m:
            failures += 1
    passed = failures == 0 and n >= 200
    _report(2, "factorization", passed, "%d morphisms, %d failures"
            % (n, failures))
    assert passed


def test_criterion_3_axiom_checker():
    failures = []
    for kind in CRITERION_KINDS:
        rep = check_axioms(kind, max_corollas=3, max_flags=3,
                           genus_bound=1, composition_samples=150)
        if not rep.passed:
            failures.append((kind.name, rep.failures[:1]))

    def broken(m):
        try:
            ok = admits(CYCLIC, m)
        except DecorationRegimeMismatch:
            return False
        return ok and "v0_f0" not in m.i_ghost

    planted = check_axioms(CYCLIC, max_corollas=2, max_flags=2,
                           admits_fn=broken, composition_samples=40)
    planted_ok = (not planted.passed) and bool(planted.failures)
    passed = not failures and planted_ok
    _report(3, "axiom checker", passed,
            "%d kinds clean, planted negative %s"
            % (len(CRITERION_KINDS) - len(failures),
               "caught" if planted_ok else "MISSED"))
    assert passed


def test_criterion_4_sign_consistency_and_d_squared():
    from graphcalc.transforms import bar, feynman_transform, omega_bar
    failures = 0
    checked = 0
    for kind in CRITERION_KINDS:
        homs = kind_morphisms(kind)
        for ms in homs.values():
            for m in ms:
                if len(m.ghost_edges()) != 2:
                    continue
                checked += 1
                rep = quadratic_sign_check(m)
                if not rep.passed or rep.signed_sum != 0:
                    failures += 1
    sign_ok = failures == 0 and checked > 0

    dsq_ok = True
    com5 = commutative_op(OPERAD, [rooted(n) for n in range(2, 6)])
    as5 = associative_op([2, 3, 4, 5])
    bound_o = Truncation(4, 5)
    for op in (com5, as5):
        b = bar(op, OPERAD, bound_o)
        ob = omega_bar(op, OPERAD, Truncation(3, 4))
        ft = feynman_transform(op, OPERAD, bound_o)
        for n in (2, 3, 4, 5):
            try:
                b.check_d_squared(rooted(n))
                ft.check_d_squared(rooted(n))
            except Exception:
                dsq_ok = False
        for n in (2, 3):
            try:
                ob.check_d_squared(rooted(n))
            except Exception:
                dsq_ok = False
    # commutative cyclic, arity <= 4 (corollas with up to 5 flags)
    comc = commutative_op(CYCLIC, [plain(n) for n in range(3, 10)])
    bc = bar(comc, CYCLIC, Truncation(4, 5))
    obc = omega_bar(comc, CYCLIC, Truncation(3, 4))
    for n in (4, 5):
        try:
            bc.check_d_squared(plain(n))
        except Exception:
            dsq_ok = False
    try:
        obc.check_d_squared(plain(4))
    except Exception:
        dsq_ok = False
    # one genus <= 1 modular example, <= 3 edges
    tm = terminal_modular_op(1, 8)
    bm = bar(tm, MODULAR, Truncation(3, 4))
    ftm = feynman_transform(tm, MODULAR, Truncation(3, 4))
    for t in (genus_type(1, 2), genus_type(0, 4)):
        try:
            bm.check_d_squared(t)
            ftm.check_d_squared(t)
        except Exception:
            dsq_ok = False
    passed = sign_ok and dsq_ok
    _report(4, "sign consistency + d^2=0", passed,
            "%d degree-2 morphisms, signs %s, d^2 %s"
            % (checked, "ok" if sign_ok else "FAIL",
               "ok" if dsq_ok else "FAIL"))
    assert passed


def factorial(n):
    out = 1
    for k in range(2, n + 1):
        out *= k
    return out


def test_criterion_5_bar_cobar_resolution():
    from graphcalc.transforms import quasi_iso_check
    com = commutative_op(OPERAD, [rooted(n) for n in range(2, 5)])
    ass = associative_op([2, 3, 4])
    bound = Truncation(3, 4)
    ok = True
    details = []
    for name, op, h0 in (("com", com, lambda n: 1),
                         ("assoc", ass, factorial)):
        for n in (2, 3, 4):
            rep = quasi_iso_check(op, OPERAD, bound, rooted(n))
            acyclic = rep.acyclic and rep.chain_map_ok
            dim_ok = rep.left_homology.get(0) == h0(n)
            higher_ok = all(v == 0 for k, v in rep.left_homology.items()
                            if k != 0)
            if not (acyclic and dim_ok and higher_ok):
                ok = False
            details.append("%s(%d):cone%s,H0=%d" %
                           (name, n, "0" if acyclic else "!",
                            rep.left_homology.get(0, -1)))
    _report(5, "bar-cobar resolution", ok, " ".join(details))
    assert ok


def test_criterion_6_hopf_suite():
    from graphcalc.hopf import (ClassAlgebra, HopfElement, RootedTree,
                                RootedTreeAlgebra, check_bialgebra)
    ok = True
    details = []
    # operad kind, <= 4 edges (corollas capped at 3 flags, see ledger)
    alg_op = ClassAlgebra(OPERAD, max_flags=3)
    rep_op = check_bialgebra(alg_op, 4)
    ok = ok and rep_op.passed
    details.append("operad:%d classes%s" % (rep_op.checks,
                                            "" if rep_op.passed else "!"))
    # ggconnected, <= 3 edges
    alg_gc = ClassAlgebra(GG_CONNECTED, max_flags=3)
    rep_gc = check_bialgebra(alg_gc, 3)
    ok = ok and rep_gc.passed
    details.append("ggconn:%d classes%s" % (rep_gc.checks,
                                            "" if rep_gc.passed else "!"))
    # rooted-tree antipodes match the independent Takeuchi oracle, <=4 edges
    tree_alg = RootedTreeAlgebra()
    mism = 0
    count = 0
    for t in tree_alg.all_trees_dedup(5):
        count += 1
        if tree_alg.antipode_tree(t) != \
                tree_alg.takeuchi_antipode(HopfElement.of(t)):
            mism += 1
    ok = ok and mism == 0
    details.append("trees:%d antipodes,%d mismatches" % (count, mism))
    _report(6, "hopf suite", ok, " ".join(details))
    assert ok


def test_criterion_7_universal_operations():
    from graphcalc.universal import (
        CoinvariantElement, OddGraphAlgebra, bv_defect, bv_delta, coinv_class,
        jacobiator, odd_antisymmetry_defect, odd_jacobi_defect, odd_lie,
        prelie_associator, symmetric_product,
    )
    As = associative_op([1, 2, 3, 4])
    rng = random.Random(77)
    fails = 0
    n_triples = 0

    def rnd(arities):
        out = CoinvariantElement()
        for n in arities:
            t = rooted(n)
            labels = As.space(t).labels
            out = out.add(
                coinv_class(As, t, labels[rng.randrange(len(labels))]),
                Fraction(rng.randint(-3, 3), rng.randint(1, 3)))
        return out

    while n_triples < 110:
        a = rnd([2])
        b = rnd([rng.choice((1, 2))])
        c = rnd([1])
        n_triples += 1
        if prelie_associator(a, b, c, As) != prelie_associator(a, c, b, As):
            fails += 1
        if jacobiator(a, b, c, As) != CoinvariantElement():
            fails += 1

    # odd commutative cyclic: antisymmetry and Jacobi
    alg = OddGraphAlgebra(max_edges=4)
    v2, v3 = alg.vertex_class(2), alg.vertex_class(3)
    e1 = odd_lie(v2, v3)
    e2 = odd_lie(v3, v3)
    for a, b in [(v2, v3), (e1, v2), (e1, e2), (e2, v3)]:
        if not odd_antisymmetry_defect(a, b).is_zero():
            fails += 1
    for a, b, c in [(v2, v2, v2), (v2, v3, v3), (e1, v2, v2)]:
        if not odd_jacobi_defect(a, b, c).is_zero():
            fails += 1

    # BV: Delta^2 = 0 at <= 3 edges and the derivation defect identity
    nc = OddGraphAlgebra(connected_only=False, max_edges=6)
    for n in (2, 3, 4):
        x = nc.vertex_class(n)
        if not bv_delta(bv_delta(x)).is_zero():
            fails += 1
    w2, w3 = nc.vertex_class(2), nc.vertex_class(3)
    for a, b in [(w2, w3), (w3, w3), (odd_lie(w2, w3), w2)]:
        lhs = bv_defect(a, b)
        rhs = odd_lie(a, b).scale((-1) ** a.homogeneous_degree())
        if lhs != rhs:
            fails += 1
    passed = fails == 0
    _report(7, "universal operations", passed,
            "%d pre-Lie triples, %d failures" % (n_triples, fails))
    assert passed


def test_criterion_8_master_equation():
    from graphcalc.mastereq import (
        ConvolutionElement, FTSide, _add_map, equivariant_basis,
        generator_values, mc_from_morphism, me_residual, morphism_from_mc,
        solve_truncated_me,
    )
    bound = Truncation(max_edges=2, max_vertices=3)
    fails = 0
    detail = []
    for kname in ("operad", "cyclic"):
        kind = kind_by_name(kname)
        if kind.rooted:
            p = free(trivial_vmodule([rooted(1), rooted(2)]), kind, bound,
                     odd=True)
            types = [rooted(n) for n in (1, 2, 3, 4)]
            o = associative_op([1, 2, 3, 4])
        else:
            p = free(trivial_vmodule([plain(2), plain(3)]), kind, bound,
                     odd=True)
            types = [plain(n) for n in (2, 3, 4, 5)]
            o = commutative_op(kind, [plain(n) for n in (2, 3, 4, 5)])
        for t in types:
            p.basis(t)
        ftside = FTSide(p, kind, bound)
        rng = random.Random(101 if kind.rooted else 202)
        solved = 0
        negatives = 0
        attempts = 0
        bumps = {t: equivariant_basis(p, o, t) for t in types}
        while (solved < 50 or negatives < 50) and attempts < 600:
            attempts += 1
            alpha = solve_truncated_me(p, o, kind, bound, types, rng)
            if alpha is None:
                continue
            rep = me_residual(alpha, p, o, kind, bound)
            if not rep.zero:
                continue
            if solved < 50:
                solved += 1
                corr = morphism_from_mc(alpha, p, o, kind, bound, types,
                                        ftside)
                if not (corr.commutes and corr.residual_zero):
                    fails += 1
                # round trip through the generator values
                vals = generator_values(alpha, p, types)
                back = mc_from_morphism(vals, p, o, types)
                if any(back[t] != alpha[t] for t in types):
                    fails += 1
            if negatives < 50:
                bad = alpha.copy()
                t0 = types[0]
                basis0 = bumps[t0]
                bump = basis0[1 % len(basis0)]
                _add_map(bad[t0], bump, Fraction(1))
                rep2 = me_residual(bad, p, o, kind, bound)
                if rep2.zero:
                    continue  # unlucky bump direction; try another sample
                negatives += 1
                corr2 = morphism_from_mc(bad, p, o, kind, bound, types,
                                         ftside)
                if corr2.commutes:
                    fails += 1
        if solved < 50 or negatives < 50:
            fails += 1
        detail.append("%s:%d solutions,%d negatives" %
                      (kname, solved, negatives))
    passed = fails == 0
    _report(8, "master equation", passed,
            "%s, %d failures" % (" ".join(detail), fails))
    assert passed


CLI_BATTERY = [
    ["graph", "canon", "--input",
     "graph{v:[u,w];f:[a0@u,a1@u,b0@w,b1@w];e:[(a0,b0)]}"],
    ["graph", "euler", "--input",
     "graph{v:[v0];f:[f0@v0,f1@v0];e:[(f0,f1)]}"],
    ["instances", "check", "--kind", "cyclic", "--max-corollas", "2",
     "--max-flags", "2"],
    ["freeops", "build", "--kind", "operad", "--vmod", "trivial:rooted:2",
     "--types", "rooted:3", "--max-edges", "3", "--max-vertices", "4"],
    ["transform", "bar", "--kind", "operad", "--op", "assoc", "--arity", "3",
     "--max-edges", "3", "--check-dsq"],
    ["hopf", "list", "--kind", "operad", "--max-edges", "2",
     "--max-flags", "3"],
    ["universal", "oddlie"],
    ["mastereq", "check", "--kind", "operad", "--arity", "2",
     "--samples", "2", "--seed", "5"],
]


def test_criterion_9_cli_determinism():
    ok = True
    for args in CLI_BATTERY:
        runs = []
        for extra in ([], [], ["--threads", "1"], ["--threads", "4"]):
            argv = [sys.executable, "-m", "graphcalc.cli"] + args
            if extra and args[0] in ("instances", "transform", "hopf"):
                argv += extra
            proc = subprocess.run(argv, capture_output=True)
            runs.append((proc.returncode, proc.stdout))
        if not (runs[0] == runs[1] and runs[2] == runs[3]
                and runs[0][1] == runs[2][1]):
            ok = False
        if runs[0][0] != 0:
            ok = False
    _report(9, "CLI determinism", ok, "%d invocations" % len(CLI_BATTERY))
    assert ok
