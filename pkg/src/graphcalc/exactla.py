"""Exact rational sparse linear algebra and chain-complex homology.

Based spaces are ordered label tuples; maps are column-sparse with
Fraction entries, composed by label.  Elimination is plain Gaussian
elimination over Fraction: exact at every step, no floating point
anywhere.
"""

from __future__ import annotations

from fractions import Fraction


class LinAlgError(ValueError):
    pass


class NotAComplex(LinAlgError):
    pass


class BasedSpace:
    """Finite ordered basis of opaque string labels."""

    __slots__ = ("labels", "index")

    def __init__(self, labels):
        self.labels = tuple(labels)
        self.index = {l: i for i, l in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise LinAlgError("duplicate basis labels")

    @property
    def dim(self):
        return len(self.labels)

    def __eq__(self, other):
        return isinstance(other, BasedSpace) and self.labels == other.labels

    def __hash__(self):
        return hash(self.labels)

    def __repr__(self):
        return "BasedSpace(dim=%d)" % self.dim


def vec_add(a, b):
    out = dict(a)
    for k, v in b.items():
        s = out.get(k, 0) + v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def vec_scale(a, c):
    c = Fraction(c)
    if not c:
        return {}
    return {k: v * c for k, v in a.items()}


class SparseMap:
    """Linear map between based spaces; column-sparse rational entries."""

    __slots__ = ("source", "target", "cols")

    def __init__(self, source: BasedSpace, target: BasedSpace, cols=None):
        self.source = source
        self.target = target
        self.cols = {}
        for c, col in (cols or {}).items():
            if c not in source.index:
                raise LinAlgError("unknown source label %r" % (c,))
            clean = {}
            for r, v in col.items():
                if r not in target.index:
                    raise LinAlgError("unknown target label %r" % (r,))
                v = Fraction(v)
                if v:
                    clean[r] = v
            if clean:
                self.cols[c] = clean

    @classmethod
    def zero(cls, source, target):
        return cls(source, target)

    @classmethod
    def identity(cls, space):
        return cls(space, space, {l: {l: Fraction(1)} for l in space.labels})

    def entry(self, row, col):
        return self.cols.get(col, {}).get(row, Fraction(0))

    def set_entry(self, row, col, value):
        if col not in self.source.index:
            raise LinAlgError("unknown source label %r" % (col,))
        if row not in self.target.index:
            raise LinAlgError("unknown target label %r" % (row,))
        value = Fraction(value)
        col_d = self.cols.setdefault(col, {})
        if value:
            col_d[row] = value
        else:
            col_d.pop(row, None)
            if not col_d:
                self.cols.pop(col, None)

    def apply(self, vec):
        """Apply to {source label: coefficient}."""
        out = {}
        for c, coef in vec.items():
            if not coef:
                continue
            for r, v in self.cols.get(c, {}).items():
                s = out.get(r, 0) + coef * v
                if s:
                    out[r] = s
                else:
                    out.pop(r, None)
        return out

    def compose(self, other: "SparseMap") -> "SparseMap":
        """self after other."""
        if other.target != self.source:
            raise LinAlgError("composition shape mismatch")
        out = SparseMap(other.source, self.target)
        for c, col in other.cols.items():
            out.cols[c] = self.apply(col)
            if not out.cols[c]:
                del out.cols[c]
        return out

    def add(self, other: "SparseMap") -> "SparseMap":
        if other.source != self.source or other.target != self.target:
            raise LinAlgError("addition shape mismatch")
        out = SparseMap(self.source, self.target)
        for c in set(self.cols) | set(other.cols):
            col = vec_add(self.cols.get(c, {}), other.cols.get(c, {}))
            if col:
                out.cols[c] = col
        return out

    def scale(self, c) -> "SparseMap":
        out = SparseMap(self.source, self.target)
        for col, d in self.cols.items():
            out.cols[col] = vec_scale(d, c)
        return out

    def transpose(self, dual_source=None, dual_target=None) -> "SparseMap":
        src = dual_source or self.target
        tgt = dual_target or self.source
        out = SparseMap(src, tgt)
        for c, col in self.cols.items():
            cc = tgt.labels[self.source.index[c]]
            for r, v in col.items():
                rr = src.labels[self.target.index[r]]
                out.set_entry(cc, rr, v)
        return out

    def is_zero(self):
        return not self.cols

    def rows_dense(self):
        """List of row dicts {col index: value} indexed by source order."""
        rows = {}
        for c, col in self.cols.items():
            ci = self.source.index[c]
            for r, v in col.items():
                rows.setdefault(self.target.index[r], {})[ci] = v
        return rows

    def __eq__(self, other):
        return (isinstance(other, SparseMap) and self.source == other.source
                and self.target == other.target and self.cols == other.cols)

    def __repr__(self):
        return "SparseMap(%d->%d, %d nonzero cols)" % (
            self.source.dim, self.target.dim, len(self.cols))


def _echelon(rows, width):
    """Row echelon form of a list of sparse row dicts; returns (pivots, rows).

    Destructive on the supplied list.  Exact over Fraction.
    """
    pivots = []
    rows = [dict(r) for r in rows if r]
    for col in range(width):
        piv = None
        for i in range(len(pivots), len(rows)):
            if rows[i].get(col):
                piv = i
                break
        if piv is None:
            continue
        rows[len(pivots)], rows[piv] = rows[piv], rows[len(pivots)]
        pr = rows[len(pivots)]
        pval = pr[col]
        for i in range(len(rows)):
            if i == len(pivots):
                continue
            v = rows[i].get(col)
            if v:
                factor = v / pval
                for c2, v2 in pr.items():
                    s = rows[i].get(c2, 0) - factor * v2
                    if s:
                        rows[i][c2] = s
                    else:
                        rows[i].pop(c2, None)
        pivots.append(col)
        rows = [r for r in rows if r]
        if len(pivots) == len(rows):
            pass
    return pivots, rows


def rank(m: SparseMap) -> int:
    rows = list(m.rows_dense().values())
    pivots, _ = _echelon(rows, m.source.dim)
    return len(pivots)


def kernel_basis(m: SparseMap):
    """Basis of ker(m) as label-coefficient dicts."""
    rows = list(m.rows_dense().values())
    pivots, ech = _echelon(rows, m.source.dim)
    pivot_set = set(pivots)
    free = [j for j in range(m.source.dim) if j not in pivot_set]
    # normalize echelon rows: leading 1
    norm = []
    for r in ech[:len(pivots)]:
        lead = min(r)
        norm.append({c: v / r[lead] for c, v in r.items()})
    basis = []
    for j in free:
        vec = {j: Fraction(1)}
        for r in norm:
            lead = min(r)
            coeff = r.get(j)
            if coeff:
                vec[lead] = -coeff
        basis.append({m.source.labels[c]: v for c, v in vec.items()})
    return basis


def image_basis(m: SparseMap):
    """Basis of im(m) as label-coefficient dicts on the target."""
    # column echelon = row echelon of the transpose
    cols = []
    for c, col in m.cols.items():
        cols.append({m.target.index[r]: v for r, v in col.items()})
    pivots, ech = _echelon(cols, m.target.dim)
    return [{m.target.labels[c]: v for c, v in row.items()}
            for row in ech[:len(pivots)]]


def solve(m: SparseMap, target_vec):
    """One solution x of m(x) = b, or None; b is {target label: coeff}."""
    width = m.source.dim
    rows_by_target = m.rows_dense()
    aug = []
    for ti in range(m.target.dim):
        row = dict(rows_by_target.get(ti, {}))
        b = target_vec.get(m.target.labels[ti], 0)
        if b:
            row[width] = Fraction(b)
        if row:
            aug.append(row)
    pivots, ech = _echelon(aug, width + 1)
    if width in pivots:
        return None  # inconsistent
    sol = {}
    for r in ech[:len(pivots)]:
        lead = min(r)
        val = r.get(width, Fraction(0))
        rest = sum(v * sol.get(c, Fraction(0))
                   for c, v in r.items() if c != lead and c != width)
        sol[lead] = (val - rest) / r[lead]
    out = {}
    for c, v in sol.items():
        if v:
            out[m.source.labels[c]] = v
    return out


class ChainComplex:
    """Integer-graded based spaces with differentials d_k: C_k -> C_{k-1}."""

    def __init__(self, spaces, differentials, check=True):
        self.spaces = dict(spaces)
        self.differentials = dict(differentials)
        for k, d in self.differentials.items():
            if d.source != self.spaces.get(k):
                raise NotAComplex("d_%d source mismatch" % k)
            if d.target != self.spaces.get(k - 1):
                raise NotAComplex("d_%d target mismatch" % k)
        if check:
            self.verify_d_squared()

    def space(self, k):
        return self.spaces.get(k, BasedSpace(()))

    def differential(self, k):
        if k in self.differentials:
            return self.differentials[k]
        return SparseMap.zero(self.space(k), self.space(k - 1))

    def degrees(self):
        return sorted(self.spaces)

    def verify_d_squared(self):
        for k in self.degrees():
            if k in self.differentials and (k + 1) in self.differentials:
                comp = self.differentials[k].compose(self.differentials[k + 1])
                if not comp.is_zero():
                    raise NotAComplex("d_%d . d_%d != 0" % (k, k + 1))

    def homology_dims(self):
        """{degree: dim H_k} with dim H_k = dim ker d_k - rank d_{k+1}."""
        out = {}
        for k in self.degrees():
            dk = self.differential(k)
            ker = self.space(k).dim - rank(dk)
            out[k] = ker - rank(self.differential(k + 1))
        return out


def cone(f_maps, a: ChainComplex, b: ChainComplex) -> ChainComplex:
    """Mapping cone of a chain map f: A -> B.

    Cone_k = A_{k-1} (+) B_k with d(a, b) = (-d_A a, f(a) + d_B b);
    `f_maps` is {degree k: SparseMap A_k -> B_k}.  Labels are prefixed.
    """
    degrees = set()
    for k in a.degrees():
        degrees.add(k + 1)
    degrees.update(b.degrees())
    spaces = {}
    for k in sorted(degrees):
        labels = ["A|" + l for l in a.space(k - 1).labels]
        labels += ["B|" + l for l in b.space(k).labels]
        spaces[k] = BasedSpace(labels)
    diffs = {}
    for k in sorted(degrees):
        if k - 1 not in spaces and k not in spaces:
            continue
        src = spaces.get(k, BasedSpace(()))
        tgt = spaces.get(k - 1, BasedSpace(()))
        d = SparseMap(src, tgt)
        da = a.differential(k - 1)
        for c, col in da.cols.items():
            for r, v in col.items():
                d.set_entry("A|" + r, "A|" + c, -v)
        fk = f_maps.get(k - 1)
        if fk is not None:
            for c, col in fk.cols.items():
                for r, v in col.items():
                    d.set_entry("B|" + r, "A|" + c, v)
        db = b.differential(k)
        for c, col in db.cols.items():
            for r, v in col.items():
                d.set_entry("B|" + r, "B|" + c, v)
        if d.cols:
            diffs[k] = d
        elif src.dim and tgt.dim:
            diffs[k] = d
    return ChainComplex(spaces, diffs)


def is_chain_map(f_maps, a: ChainComplex, b: ChainComplex) -> bool:
    for k in a.degrees():
        fk = f_maps.get(k)
        fk1 = f_maps.get(k - 1)
        da = a.differential(k)
        db = b.differential(k)
        left = db.compose(fk) if fk is not None else None
        right = fk1.compose(da) if fk1 is not None else None
        lz = left is None or left.is_zero()
        rz = right is None or right.is_zero()
        if lz and rz:
            continue
        if left is None or right is None:
            return False
        if left.add(right.scale(-1)).cols:
            return False
    return True
