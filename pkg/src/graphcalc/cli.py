"""Command-line surface.

Every run is reproducible: identical inputs produce byte-identical
output, randomized suites take --seed, fan-out is reassembled in input
order (--threads never changes output).  All numbers are exact fraction
text.  Reports end with a machine-parseable `RESULT: PASS|FAIL` line.
Exit codes: 0 pass, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import random
import sys
from fractions import Fraction

from . import graphs as G
from . import morphisms as M
from .exactla import SparseMap
from .freeops import (CorollaType, Truncation, associative_op,
                      commutative_op, free, genus_type, plain, rooted,
                      terminal_modular_op, trivial_vmodule, vmodule_from_json)
from .instances import (check_axioms, enumerate_one_comma, kind_by_name)
from .parallel import ordered_parallel_map


class InputError(Exception):
    pass


def _read(path_or_literal, prefix):
    if path_or_literal.startswith(prefix + "{"):
        return path_or_literal
    try:
        with open(path_or_literal, "r", encoding="utf-8") as fh:
            return fh.read().strip()
    except OSError as exc:
        raise InputError("cannot read %s: %s" % (path_or_literal, exc))


def _parse_types(spec):
    """'rooted:2,rooted:3' or 'plain:3;plain:4' -> [CorollaType]."""
    out = []
    for part in spec.replace(";", ",").split(","):
        part = part.strip()
        if not part:
            continue
        # allow rooted:2 and genus:1.2 (genus g.n)
        regime, _, rest = part.partition(":")
        if regime == "genus":
            g, _, n = rest.partition(".")
            out.append(genus_type(int(g), int(n)))
        elif regime == "rooted":
            out.append(rooted(int(rest)))
        elif regime == "plain":
            out.append(plain(int(rest)))
        else:
            raise InputError("unknown corolla type %r" % part)
    if not out:
        raise InputError("empty type list")
    return out


def _load_module(spec):
    if spec.startswith("trivial:"):
        return trivial_vmodule(_parse_types(spec[len("trivial:"):]))
    text = _read(spec, "\0")
    return vmodule_from_json(text)


def _builtin_op(name, kind, arity, genus, max_edges):
    if name == "com":
        if kind.rooted:
            return commutative_op(kind, [rooted(n) for n in range(2, arity + 1)])
        if kind.genus_labeled:
            return terminal_modular_op(genus, arity + 2 * max_edges, kind=kind)
        return commutative_op(kind, [plain(n) for n in range(3, arity + 2
                                                             + 2 * max_edges)])
    if name == "assoc":
        return associative_op(list(range(2, arity + 1)), kind=kind)
    raise InputError("unknown builtin op %r (com|assoc)" % name)


def _emit(lines, passed):
    for line in lines:
        print(line)
    print("RESULT: %s" % ("PASS" if passed else "FAIL"))
    return 0 if passed else 1


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------

def cmd_graph(args):
    g = G.parse(_read(args.input, "graph"))
    if args.action == "canon":
        cf = G.canonical_form(g)
        lines = [G.serialize(cf.graph), "automorphisms: %d" % cf.order]
        return _emit(lines, True)
    if args.action == "euler":
        chi, b0, b1, gamma = G.euler_genus(g)
        return _emit(["chi: %d" % chi, "b0: %d" % b0, "b1: %d" % b1,
                      "gamma: %d" % gamma], True)
    if args.action == "foliage":
        out = G.foliage(g, args.tails)
        return _emit([G.serialize(G.canonical_form(h).graph) for h in out],
                     True)
    if args.action == "truncate":
        return _emit([G.serialize(G.truncate_tails(g))], True)
    raise InputError("unknown graph action")


def cmd_mor(args):
    if args.action == "compose":
        f = M.parse(_read(args.f, "mor"))
        g = M.parse(_read(args.g, "mor"))
        return _emit([M.serialize(M.compose(f, g))], True)
    m = M.parse(_read(args.input, "mor"))
    if args.action == "validate":
        M.validate(m)
        return _emit(["valid"], True)
    if args.action == "degree":
        dw = M.degree_weight(m)
        return _emit(["degree: %d" % dw.degree, "weight: %d" % dw.weight,
                      "ghost-edges: %d" % len(m.ghost_edges())], True)
    if args.action == "factorize":
        word = M.factorize(m)
        lines = [M.serialize(step) for step in word]
        lines.append("length: %d" %
                     sum(1 for s in word if not s.is_isomorphism()))
        back = M.compose_chain(word)
        return _emit(lines, back == m)
    raise InputError("unknown mor action")


def cmd_instances(args):
    kind = kind_by_name(args.kind)
    rep = check_axioms(kind, max_corollas=args.max_corollas,
                       max_flags=args.max_flags, seed=args.seed)
    lines = ["kind: %s" % kind.name, "checks: %d" % rep.checks,
             "failures: %d" % len(rep.failures)]
    for w in rep.failures[:5]:
        lines.append("witness: %s" % (w[0],))
    return _emit(lines, rep.passed)


def cmd_freeops(args):
    kind = kind_by_name(args.kind)
    module = _load_module(args.vmod)
    bound = Truncation(max_edges=args.max_edges,
                       max_vertices=args.max_vertices)
    f = free(module, kind, bound, odd=args.odd)
    lines = []
    for t in _parse_types(args.types):
        basis = f.basis(t)
        lines.append("%s: dim %d" % (t.key(), len(basis)))
        if args.list_basis:
            lines.extend("  " + k for k in basis)
    return _emit(lines, True)


def cmd_transform(args):
    from .transforms import bar, feynman_transform, omega_bar, quasi_iso_check
    kind = kind_by_name(args.kind)
    bound = Truncation(max_edges=args.max_edges, max_vertices=args.max_vertices,
                       max_genus=args.genus)
    op = _builtin_op(args.op, kind, args.arity, args.genus, args.max_edges)
    if kind.genus_labeled:
        t = genus_type(args.genus, args.arity)
    elif kind.rooted:
        t = rooted(args.arity)
    else:
        t = plain(args.arity + 1)
    if args.which == "bar":
        res = bar(op, kind, bound)
    elif args.which == "cobar":
        res = omega_bar(op, kind, bound)
    else:
        res = feynman_transform(op, kind, bound)
    dims = res.dims(t)
    lines = ["%s of %s at %s" % (args.which, args.op, t.key())]
    for k in sorted(dims):
        lines.append("degree %d: dim %d" % (k, dims[k]))
    passed = True
    if args.check_dsq:
        try:
            res.check_d_squared(t)
            lines.append("d^2=0: PASS")
        except Exception as exc:
            lines.append("d^2=0: FAIL (%s)" % exc)
            passed = False
    if args.check_qiso:
        rep = quasi_iso_check(op, kind, bound, t)
        lines.append("cone homology: %s" %
                     ",".join("%d:%d" % (k, v)
                              for k, v in sorted(rep.cone_homology.items())))
        lines.append("counit quasi-iso: %s" %
                     ("PASS" if rep.acyclic and rep.chain_map_ok else "FAIL"))
        passed = passed and rep.acyclic and rep.chain_map_ok
    return _emit(lines, passed)


def cmd_hopf(args):
    from .hopf import ClassAlgebra, HopfElement, check_bialgebra
    kind = kind_by_name(args.kind)
    alg = ClassAlgebra(kind, max_flags=args.max_flags)
    if args.action == "check":
        rep = check_bialgebra(alg, args.max_edges)
        lines = ["kind: %s" % kind.name, "classes checked: %d" % rep.checks,
                 "failures: %d" % len(rep.failures)]
        return _emit(lines, rep.passed)
    classes = alg.classes_up_to(args.max_edges)
    if args.action == "list":
        return _emit(["%d: %s" % (i, k) for i, k in enumerate(classes)], True)
    try:
        key = classes[int(args.input)]
    except (ValueError, IndexError):
        if args.input in classes:
            key = args.input
        else:
            raise InputError("unknown class %r" % args.input)
    if args.action == "coproduct":
        delta = alg.coproduct_class(key)
        lines = ["%s (x) %s : %s" % ("*".join(l) or "1", "*".join(r) or "1",
                                     c)
                 for (l, r), c in sorted(delta.items())]
        return _emit(lines, True)
    if args.action == "antipode":
        s = alg.antipode_class(key)
        lines = ["%s : %s" % ("*".join(mset) or "1", c)
                 for mset, c in sorted(s.items())]
        ok = alg.convolution_check(HopfElement.of(key))
        lines.append("convolution identity: %s" % ("PASS" if ok else "FAIL"))
        return _emit(lines, ok)
    raise InputError("unknown hopf action")


def cmd_universal(args):
    rng = random.Random(args.seed)
    if args.action == "prelie":
        As = associative_op([1, 2, 3, 4])
        from .universal import (CoinvariantElement, coinv_class, jacobiator,
                                prelie_associator)
        failures = 0
        for _ in range(args.samples):
            def rnd(arities):
                out = CoinvariantElement()
                for n in arities:
                    t = rooted(n)
                    labels = As.space(t).labels
                    out = out.add(
                        coinv_class(As, t, labels[rng.randrange(len(labels))]),
                        Fraction(rng.randint(-3, 3), rng.randint(1, 3)))
                return out
            a, b, c = rnd([2]), rnd([rng.choice((1, 2))]), rnd([1])
            if prelie_associator(a, b, c, As) != prelie_associator(a, c, b, As):
                failures += 1
            if jacobiator(a, b, c, As) != CoinvariantElement():
                failures += 1
        return _emit(["samples: %d" % args.samples,
                      "failures: %d" % failures], failures == 0)
    if args.action == "oddlie":
        from .universal import (OddGraphAlgebra, odd_antisymmetry_defect,
                                odd_jacobi_defect, odd_lie)
        alg = OddGraphAlgebra(max_edges=4)
        v2, v3 = alg.vertex_class(2), alg.vertex_class(3)
        e1 = odd_lie(v2, v3)
        pairs = [(v2, v3), (e1, v2), (e1, e1)]
        triples = [(v2, v2, v2), (v2, v3, v2), (e1, v2, v2)]
        bad = sum(1 for a, b in pairs
                  if not odd_antisymmetry_defect(a, b).is_zero())
        bad += sum(1 for a, b, c in triples
                   if not odd_jacobi_defect(a, b, c).is_zero())
        return _emit(["antisymmetry pairs: %d" % len(pairs),
                      "jacobi triples: %d" % len(triples),
                      "failures: %d" % bad], bad == 0)
    if args.action == "bv":
        from .universal import (OddGraphAlgebra, bv_defect, bv_delta, odd_lie,
                                symmetric_product)
        alg = OddGraphAlgebra(connected_only=False, max_edges=6)
        bad = 0
        for n in (2, 3, 4):
            if not bv_delta(bv_delta(alg.vertex_class(n))).is_zero():
                bad += 1
        v2, v3 = alg.vertex_class(2), alg.vertex_class(3)
        lhs = bv_defect(v2, v3)
        rhs = odd_lie(v2, v3).scale((-1) ** v2.homogeneous_degree())
        if lhs != rhs:
            bad += 1
        return _emit(["delta-squared checks: 3", "defect checks: 1",
                      "failures: %d" % bad], bad == 0)
    if args.action == "homfv":
        from .universal import hom_fv
        kind = kind_by_name(args.kind)
        srcs = _parse_types(args.sources)
        tgts = _parse_types(args.target)
        classes = hom_fv(srcs, tgts, kind, max_edges=args.max_edges)
        return _emit(["%d classes" % len(classes)] +
                     ["%s" % (c,) for c in classes], True)
    raise InputError("unknown universal action")


def cmd_mastereq(args):
    from .instances import CYCLIC, OPERAD
    from .mastereq import (ConvolutionElement, FTSide, me_residual,
                           morphism_from_mc, solve_truncated_me)
    rng = random.Random(args.seed)
    kind = kind_by_name(args.kind)
    bound = Truncation(max_edges=args.max_edges, max_vertices=3)
    if kind.rooted:
        p = free(trivial_vmodule([rooted(1), rooted(2)]), kind, bound,
                 odd=True)
        types = [rooted(n) for n in range(1, args.arity + 1)]
        o = associative_op(list(range(1, args.arity + 1)))
    else:
        p = free(trivial_vmodule([plain(2), plain(3)]), kind, bound, odd=True)
        types = [plain(n) for n in range(2, args.arity + 2)]
        o = commutative_op(kind, [plain(n) for n in range(2, args.arity + 2)])
    for t in types:
        p.basis(t)
    ftside = FTSide(p, kind, bound)
    solved = 0
    fail = 0
    attempts = 0
    while solved < args.samples and attempts < args.samples * 8:
        attempts += 1
        alpha = solve_truncated_me(p, o, kind, bound, types, rng)
        if alpha is None:
            continue
        rep = me_residual(alpha, p, o, kind, bound)
        if not rep.zero:
            continue
        solved += 1
        corr = morphism_from_mc(alpha, p, o, kind, bound, types, ftside)
        if not (corr.commutes and corr.residual_zero):
            fail += 1
    lines = ["kind: %s" % kind.name, "solutions verified: %d" % solved,
             "correspondence failures: %d" % fail]
    return _emit(lines, solved >= args.samples and fail == 0)


def build_parser():
    ap = argparse.ArgumentParser(prog="graphcalc")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("graph", help="canonical forms and invariants")
    g.add_argument("action", choices=["canon", "euler", "foliage", "truncate"])
    g.add_argument("--input", required=True,
                   help="graph literal or file path")
    g.add_argument("--tails", type=int, default=1)
    g.set_defaults(fn=cmd_graph)

    m = sub.add_parser("mor", help="morphism calculus")
    m.add_argument("action",
                   choices=["compose", "validate", "degree", "factorize"])
    m.add_argument("--input", help="morphism literal or file")
    m.add_argument("--f", help="first morphism (compose)")
    m.add_argument("--g", help="second morphism (compose)")
    m.set_defaults(fn=cmd_mor)

    i = sub.add_parser("instances", help="axiom checking")
    isub = i.add_subparsers(dest="action", required=True)
    ic = isub.add_parser("check")
    ic.add_argument("--kind", required=True)
    ic.add_argument("--max-corollas", type=int, default=3)
    ic.add_argument("--max-flags", type=int, default=3)
    ic.add_argument("--seed", type=int, default=0)
    ic.add_argument("--threads", type=int, default=1)
    ic.set_defaults(fn=cmd_instances)

    fo = sub.add_parser("freeops", help="free constructions")
    fosub = fo.add_subparsers(dest="action", required=True)
    fb = fosub.add_parser("build")
    fb.add_argument("--kind", required=True)
    fb.add_argument("--vmod", required=True,
                    help="JSON file or trivial:<types>")
    fb.add_argument("--types", required=True,
                    help="target corolla types, e.g. rooted:3")
    fb.add_argument("--max-edges", type=int, default=3)
    fb.add_argument("--max-vertices", type=int, default=4)
    fb.add_argument("--odd", action="store_true")
    fb.add_argument("--list-basis", action="store_true")
    fb.set_defaults(fn=cmd_freeops)

    tr = sub.add_parser("transform", help="bar/cobar/Feynman transform")
    tr.add_argument("which", choices=["bar", "cobar", "ft"])
    tr.add_argument("--kind", required=True)
    tr.add_argument("--op", default="com", help="com|assoc")
    tr.add_argument("--arity", type=int, required=True)
    tr.add_argument("--genus", type=int, default=0)
    tr.add_argument("--max-edges", type=int, default=3)
    tr.add_argument("--max-vertices", type=int, default=5)
    tr.add_argument("--check-dsq", action="store_true")
    tr.add_argument("--check-qiso", action="store_true")
    tr.add_argument("--threads", type=int, default=1)
    tr.set_defaults(fn=cmd_transform)

    hp = sub.add_parser("hopf", help="edge-graded bialgebra")
    hp.add_argument("action",
                    choices=["check", "list", "coproduct", "antipode"])
    hp.add_argument("--kind", required=True)
    hp.add_argument("--max-edges", type=int, default=2)
    hp.add_argument("--max-flags", type=int, default=3)
    hp.add_argument("--input", help="class index or key")
    hp.add_argument("--threads", type=int, default=1)
    hp.set_defaults(fn=cmd_hopf)

    un = sub.add_parser("universal", help="universal operations")
    un.add_argument("action", choices=["prelie", "oddlie", "bv", "homfv"])
    un.add_argument("--kind", default="operad")
    un.add_argument("--samples", type=int, default=25)
    un.add_argument("--seed", type=int, default=0)
    un.add_argument("--sources", default="rooted:2,rooted:2")
    un.add_argument("--target", default="rooted:3")
    un.add_argument("--max-edges", type=int, default=2)
    un.set_defaults(fn=cmd_universal)

    me = sub.add_parser("mastereq", help="master equation correspondence")
    mesub = me.add_subparsers(dest="action", required=True)
    mc = mesub.add_parser("check")
    mc.add_argument("--kind", default="operad")
    mc.add_argument("--max-edges", type=int, default=2)
    mc.add_argument("--arity", type=int, default=3)
    mc.add_argument("--samples", type=int, default=5)
    mc.add_argument("--seed", type=int, default=0)
    mc.set_defaults(fn=cmd_mastereq)

    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, G.GraphError, M.MorphismError, KeyError,
            ValueError, OSError) as exc:
        print("input error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
