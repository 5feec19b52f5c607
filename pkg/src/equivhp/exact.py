"""Exact rational linear algebra.

Matrices are sparse with an int64 numerator and a common positive integer
denominator.  Every arithmetic step checks a worst-case magnitude bound and
raises :class:`ExactnessError` instead of letting int64 arithmetic wrap.

Elimination works on Python integers (fraction-free, rows kept primitive),
so ranks, kernels and quotient bases are exact regardless of entry size.
"""

import heapq
import math
from fractions import Fraction
from functools import reduce

import numpy as np
import scipy.sparse as sp

_LIMIT = 2 ** 62


class ExactnessError(ArithmeticError):
    """An int64 fast path would have overflowed."""


def frac(x):
    """Parse an int, Fraction, numpy integer or "p/q" string into a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        if not x.is_integer():
            raise ValueError(f"refusing inexact float {x!r}; use 'p/q' strings")
        return Fraction(int(x))
    raise TypeError(f"cannot read {x!r} as a rational")


def frac_str(x):
    x = frac(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _lcm(a, b):
    return a * b // math.gcd(a, b)


def _maxabs(m):
    if m.nnz == 0:
        return 0
    return int(np.abs(m.data).max())


class QMat:
    """Sparse rational matrix ``num / den``."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=1, trusted=False):
        if trusted:
            # fresh canonical CSR produced by a scipy kernel that drops zeros
            self.num = num
            self.den = int(den)
            self._normalize()
            return
        if not sp.issparse(num):
            num = sp.csr_matrix(np.asarray(num, dtype=np.int64))
        num = sp.csr_matrix(num, dtype=np.int64, copy=True)
        num.sum_duplicates()
        num.eliminate_zeros()
        den = int(den)
        if den <= 0:
            raise ValueError("denominator must be positive")
        self.num = num
        self.den = den
        self._normalize()

    def _normalize(self):
        if self.den == 1:
            return
        if self.num.nnz == 0:
            self.den = 1
            return
        g = math.gcd(int(np.gcd.reduce(np.abs(self.num.data))), self.den)
        if g > 1:
            self.num = self.num.copy()
            self.num.data //= g
            self.den //= g

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, m, n):
        return cls(sp.csr_matrix((m, n), dtype=np.int64))

    @classmethod
    def identity(cls, n):
        return cls(sp.identity(n, dtype=np.int64, format="csr"))

    @classmethod
    def from_entries(cls, shape, rows, cols, values):
        vals = [frac(v) for v in values]
        den = reduce(_lcm, (v.denominator for v in vals), 1)
        data = [v.numerator * (den // v.denominator) for v in vals]
        if data and max(abs(d) for d in data) >= _LIMIT:
            raise ExactnessError("entry too large for the int64 fast path")
        num = sp.coo_matrix(
            (np.array(data, dtype=np.int64), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
            shape=shape,
        )
        return cls(num.tocsr(), den)

    @classmethod
    def from_int_arrays(cls, shape, rows, cols, data, den=1):
        """Fast constructor from integer numpy arrays (no Fraction parsing)."""
        data = np.asarray(data, dtype=np.int64)
        num = sp.coo_matrix((data, (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))), shape=shape)
        return cls(num.tocsr(), den)

    @classmethod
    def from_dense(cls, rows, shape=None):
        rows = [list(r) for r in rows]
        if shape is None:
            shape = (len(rows), len(rows[0]) if rows else 0)
        ri, ci, vs = [], [], []
        for i, r in enumerate(rows):
            for j, v in enumerate(r):
                v = frac(v)
                if v:
                    ri.append(i)
                    ci.append(j)
                    vs.append(v)
        return cls.from_entries(shape, ri, ci, vs)

    @classmethod
    def from_columns(cls, nrows, columns):
        ri, ci, vs = [], [], []
        for j, col in enumerate(columns):
            for i, v in col.items():
                if v:
                    ri.append(i)
                    ci.append(j)
                    vs.append(v)
        return cls.from_entries((nrows, len(columns)), ri, ci, vs)

    @classmethod
    def permutation(cls, targets, nrows=None):
        """Column j is the unit vector e_{targets[j]}; negative targets give zero columns."""
        targets = np.asarray(targets, dtype=np.int64)
        n = len(targets)
        keep = targets >= 0
        cols = np.arange(n, dtype=np.int64)[keep]
        rows = targets[keep]
        m = n if nrows is None else nrows
        num = sp.csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(m, n))
        return cls(num)

    # basic properties ----------------------------------------------------
    @property
    def shape(self):
        return self.num.shape

    @property
    def nnz(self):
        return self.num.nnz

    def is_zero(self):
        return self.num.nnz == 0

    def __eq__(self, other):
        if not isinstance(other, QMat):
            return NotImplemented
        if self.shape != other.shape or self.den != other.den:
            return False
        return (self.num != other.num).nnz == 0

    def __hash__(self):
        return None

    def __repr__(self):
        return f"QMat(shape={self.shape}, nnz={self.nnz}, den={self.den})"

    def entry(self, i, j):
        return Fraction(int(self.num[i, j]), self.den)

    def to_fractions(self):
        """Dense numpy object array of Fractions (small matrices only)."""
        out = np.empty(self.shape, dtype=object)
        out[...] = Fraction(0)
        coo = self.num.tocoo()
        for i, j, v in zip(coo.row, coo.col, coo.data):
            out[i, j] = Fraction(int(v), self.den)
        return out

    def to_lists(self):
        return [[frac_str(x) for x in row] for row in self.to_fractions()]

    def columns(self):
        """List of column dicts ``{row: Fraction}``."""
        csc = self.num.tocsc()
        out = []
        for j in range(csc.shape[1]):
            lo, hi = csc.indptr[j], csc.indptr[j + 1]
            out.append({int(i): Fraction(int(v), self.den) for i, v in zip(csc.indices[lo:hi], csc.data[lo:hi])})
        return out

    def int_columns(self):
        """Columns of the numerator as integer dicts (same span as the matrix)."""
        csc = self.num.tocsc()
        ind, dat, ptr = csc.indices.tolist(), csc.data.tolist(), csc.indptr.tolist()
        return [dict(zip(ind[ptr[j]:ptr[j + 1]], dat[ptr[j]:ptr[j + 1]])) for j in range(csc.shape[1])]

    def int_rows(self):
        csr = self.num
        ind, dat, ptr = csr.indices.tolist(), csr.data.tolist(), csr.indptr.tolist()
        return [dict(zip(ind[ptr[i]:ptr[i + 1]], dat[ptr[i]:ptr[i + 1]])) for i in range(csr.shape[0])]

    # arithmetic ----------------------------------------------------------
    @property
    def T(self):
        return QMat(self.num.T.tocsr(), self.den)

    def __neg__(self):
        return QMat(-self.num, self.den)

    def _scaled_pair(self, other):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        den = _lcm(self.den, other.den)
        fa, fb = den // self.den, den // other.den
        if _maxabs(self.num) * fa + _maxabs(other.num) * fb >= _LIMIT:
            raise ExactnessError("sum would overflow int64")
        a = self.num * fa if fa != 1 else self.num
        b = other.num * fb if fb != 1 else other.num
        return a, b, den

    def __add__(self, other):
        a, b, den = self._scaled_pair(other)
        return QMat(a + b, den, trusted=True)

    def __sub__(self, other):
        a, b, den = self._scaled_pair(other)
        return QMat(a - b, den, trusted=True)

    def scale(self, c):
        c = frac(c)
        if c == 0:
            return QMat.zeros(*self.shape)
        if _maxabs(self.num) * abs(c.numerator) >= _LIMIT:
            raise ExactnessError("scaling would overflow int64")
        return QMat(self.num * c.numerator, self.den * c.denominator)

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        a, b = self.num, other.num
        if a.nnz and b.nnz:
            row_nnz = int(np.diff(a.indptr).max())
            col_nnz = int(np.bincount(b.indices, minlength=1).max()) if b.nnz else 0
            if _maxabs(a) * _maxabs(b) * max(1, min(row_nnz, col_nnz)) >= _LIMIT:
                raise ExactnessError("product would overflow int64")
        return QMat((a @ b).tocsr(), self.den * other.den, trusted=True)

    def power(self, k):
        out = QMat.identity(self.shape[0])
        for _ in range(k):
            out = self @ out
        return out

    def __getitem__(self, key):
        rows, cols = key
        return QMat(self.num[rows][:, cols], self.den)

    def select_rows(self, idx):
        if isinstance(idx, range) and idx.step == 1:
            return QMat(self.num[idx.start:idx.stop], self.den)
        return QMat(self.num[np.asarray(idx, dtype=np.int64)], self.den)

    def select_cols(self, idx):
        if isinstance(idx, range) and idx.step == 1:
            return QMat(self.num.tocsc()[:, idx.start:idx.stop].tocsr(), self.den)
        return QMat(self.num.tocsc()[:, np.asarray(idx, dtype=np.int64)].tocsr(), self.den)


def _common(mats):
    den = reduce(_lcm, (m.den for m in mats), 1)
    out = []
    for m in mats:
        f = den // m.den
        if f != 1:
            if _maxabs(m.num) * f >= _LIMIT:
                raise ExactnessError("common denominator would overflow int64")
            out.append(m.num * f)
        else:
            out.append(m.num)
    return out, den


def kron(*mats):
    out = mats[0]
    for m in mats[1:]:
        if _maxabs(out.num) * _maxabs(m.num) >= _LIMIT:
            raise ExactnessError("Kronecker product would overflow int64")
        out = QMat(sp.kron(out.num, m.num, format="csr"), out.den * m.den)
    return out


def block(rows):
    """Block matrix from a nested list; ``None`` entries are zero blocks."""
    flat = [m for r in rows for m in r if m is not None]
    nums, den = _common(flat)
    it = iter(nums)
    grid = [[next(it) if m is not None else None for m in r] for r in rows]
    return QMat(sp.bmat(grid, format="csr", dtype=np.int64), den)


def hstack(mats):
    nums, den = _common(mats)
    return QMat(sp.hstack(nums, format="csr"), den)


def vstack(mats):
    nums, den = _common(mats)
    return QMat(sp.vstack(nums, format="csr"), den)


def block_diag(mats):
    if not mats:
        return QMat.zeros(0, 0)
    nums, den = _common(mats)
    return QMat(sp.block_diag(nums, format="csr", dtype=np.int64), den)


def total(mats, shape):
    out = QMat.zeros(*shape)
    for m in mats:
        out = out + m
    return out


# ---------------------------------------------------------------------------
# elimination


def _primitive(v):
    g = 0
    for x in v.values():
        g = math.gcd(g, x)
        if g == 1:
            return v
    if g > 1:
        return {i: x // g for i, x in v.items()}
    return v


def integerize(v):
    """Scale a dict of rationals to a primitive integer dict with the same span."""
    den = 1
    for x in v.values():
        if isinstance(x, Fraction):
            den = _lcm(den, x.denominator)
    out = {}
    for i, x in v.items():
        x = Fraction(x) * den
        if x:
            out[int(i)] = int(x)
    return _primitive(out)


class Echelon:
    """Incremental semi-echelon basis of a span of integer vectors.

    Row k is zero at the pivots of rows inserted before it.  Reducing a vector
    therefore eliminates pivots in insertion order and never reintroduces one.
    """

    def __init__(self):
        self.rows = []
        self.where = {}

    def __len__(self):
        return len(self.rows)

    def reduce(self, v):
        v = dict(v)
        where = self.where
        heap = [where[c] for c in v if c in where]
        heapq.heapify(heap)
        rows = self.rows
        while heap:
            k = heapq.heappop(heap)
            p, row = rows[k]
            c = v.get(p)
            if not c:
                continue
            rp = row[p]
            g = math.gcd(rp, c)
            a, b = rp // g, c // g
            if a < 0:
                a, b = -a, -b
            if a != 1:
                for i in v:
                    v[i] *= a
            for i, x in row.items():
                y = v.get(i, 0) - b * x
                if y:
                    if i not in v:
                        j = where.get(i)
                        if j is not None:
                            heapq.heappush(heap, j)
                    v[i] = y
                else:
                    v.pop(i, None)
        return _primitive(v) if v else v

    def add(self, v):
        r = self.reduce(v)
        if not r:
            return False
        p = min(r)
        self.where[p] = len(self.rows)
        self.rows.append((p, r))
        return True

    def reduced_rows(self):
        """Fully reduced rows as ``{pivot: {col: Fraction}}`` with unit pivots."""
        rows = [(p, dict(r)) for p, r in self.rows]
        where = self.where
        for k in range(len(rows) - 1, -1, -1):
            p, v = rows[k]
            for c in [c for c in v if c != p and c in where and where[c] > k]:
                x = v.get(c)
                if not x:
                    continue
                q, row = rows[where[c]]
                rq = row[q]
                g = math.gcd(rq, x)
                a, b = rq // g, x // g
                if a < 0:
                    a, b = -a, -b
                if a != 1:
                    for i in v:
                        v[i] *= a
                for i, y in row.items():
                    z = v.get(i, 0) - b * y
                    if z:
                        v[i] = z
                    else:
                        v.pop(i, None)
            rows[k] = (p, _primitive(v))
        out = {}
        for p, v in rows:
            lead = v[p]
            out[p] = {i: Fraction(x, lead) for i, x in v.items()}
        return out


class Quotient:
    """The quotient ``Q^n / span(gens)`` with a canonical coordinate choice.

    Short generators are presolved: one-term generators kill a coordinate,
    two-term generators identify coordinates up to a ratio (union-find).
    The remaining generators are rewritten in class representatives and
    eliminated.  Surviving coordinates are the quotient basis.
    """

    def __init__(self, n, gens):
        self.n = n
        parent = list(range(n))
        ratio = [Fraction(1)] * n
        dead = [False] * n

        def find(i):
            path = []
            while parent[i] != i:
                path.append(i)
                i = parent[i]
            root = i
            acc = Fraction(1)
            for j in reversed(path):
                acc = acc * ratio[j]
                ratio[j] = acc
                parent[j] = root
            return root

        long_gens = []
        for g in gens:
            g = {i: x for i, x in g.items() if x}
            if len(g) == 1:
                (i, _), = g.items()
                dead[find(i)] = True
            elif len(g) == 2:
                (i, ci), (j, cj) = g.items()
                ri, rj = find(i), find(j)
                qi = Fraction(ci) * (ratio[i] if i != ri else 1)
                qj = Fraction(cj) * (ratio[j] if j != rj else 1)
                if ri == rj:
                    if qi + qj:
                        dead[ri] = True
                elif dead[ri]:
                    dead[rj] = True
                elif dead[rj]:
                    dead[ri] = True
                else:
                    if rj < ri:
                        ri, rj, qi, qj = rj, ri, qj, qi
                    # qi [ri] + qj [rj] = 0  =>  [rj] = -(qi/qj) [ri]
                    parent[rj] = ri
                    ratio[rj] = -qi / qj
            elif g:
                long_gens.append(g)

        rep = [None] * n
        for i in range(n):
            r = find(i)
            rep[i] = None if dead[r] else (r, ratio[i] if i != r else Fraction(1))
        self._rep = rep

        ech = Echelon()
        for g in long_gens:
            v = {}
            for i, x in g.items():
                t = rep[i]
                if t is None:
                    continue
                r, q = t
                v[r] = v.get(r, 0) + q * x
            v = integerize(v)
            if v:
                ech.add(v)
        self._reduced = ech.reduced_rows()
        roots = sorted({t[0] for t in rep if t is not None})
        self.free = [r for r in roots if r not in self._reduced]
        self.position = {f: k for k, f in enumerate(self.free)}
        self.dim = len(self.free)
        self.rank = n - self.dim

    def image_of_unit(self, i):
        """Coordinates (dict over quotient positions) of the class of e_i."""
        t = self._rep[i]
        if t is None:
            return {}
        r, q = t
        if r in self.position:
            return {self.position[r]: q}
        row = self._reduced[r]
        return {self.position[f]: -q * x for f, x in row.items() if f != r}

    def projection(self):
        cols = [self.image_of_unit(i) for i in range(self.n)]
        return QMat.from_columns(self.dim, cols)

    def lift(self):
        return QMat.from_entries((self.n, self.dim), self.free, list(range(self.dim)), [1] * self.dim)

    def project(self, v):
        out = {}
        for i, x in v.items():
            for k, y in self.image_of_unit(i).items():
                out[k] = out.get(k, 0) + x * y
        return {k: y for k, y in out.items() if y}


def rank(vectors):
    ech = Echelon()
    for v in vectors:
        v = integerize(v)
        if v:
            ech.add(v)
    return len(ech)


def matrix_rank(m):
    return rank(m.int_columns()) if m.shape[1] <= m.shape[0] else rank(m.int_rows())


def nullspace(m):
    """Kernel basis of a QMat as an (ncols x k) QMat with identity on free coordinates."""
    q = Quotient(m.shape[1], m.int_rows())
    return q.projection().T


def span_basis(n, vectors):
    """Reduced echelon basis of a span: returns (pivots, basis) with basis[pivots, :] = I."""
    ech = Echelon()
    for v in vectors:
        v = integerize(v)
        if v:
            ech.add(v)
    red = ech.reduced_rows()
    pivots = sorted(red)
    cols = [red[p] for p in pivots]
    return pivots, QMat.from_columns(n, cols)


def independent_subset(vectors):
    """Indices of a maximal independent subset, chosen greedily in order."""
    ech = Echelon()
    keep = []
    for k, v in enumerate(vectors):
        v = integerize(v)
        if v and ech.add(v):
            keep.append(k)
    return keep


def inverse(m):
    """Exact inverse of a square QMat (raises ValueError if singular)."""
    n = m.shape[0]
    a = m.to_fractions().tolist()
    inv = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            raise ValueError("matrix is singular")
        a[c], a[piv] = a[piv], a[c]
        inv[c], inv[piv] = inv[piv], inv[c]
        p = a[c][c]
        a[c] = [x / p for x in a[c]]
        inv[c] = [x / p for x in inv[c]]
        for r in range(n):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
                inv[r] = [x - f * y for x, y in zip(inv[r], inv[c])]
    return QMat.from_dense(inv, (n, n))


def trace(m):
    return Fraction(int(m.num.diagonal().sum()), m.den)
