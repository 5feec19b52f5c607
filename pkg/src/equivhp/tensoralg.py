"""Fedosov products, truncated tensor algebras, curvature and quasifree certificates."""

from fractions import Fraction

import numpy as np

from .exact import QMat, block, block_diag, hstack, kron, matrix_rank, span_basis, vstack
from .forms import FiberForms
from .galgebras import GAlgebra, _solve
from .gmodules import GModule


class InsufficientLevel(ValueError):
    """The curvature is not nilpotent enough for the requested level."""


class NotHomomorphism(ValueError):
    def __init__(self, message, witness):
        super().__init__(f"{message}: {witness}")
        self.witness = witness


# fiberwise linear maps -----------------------------------------------------------------


class FiberMap:
    """A grade-preserving linear map between G-algebras, one matrix per unit."""

    def __init__(self, source, target, maps):
        self.source, self.target = source, target
        self.groupoid = source.groupoid
        self.maps = dict(maps)
        for x in self.groupoid.units:
            want = (target.dim(x), source.dim(x))
            if self.maps[x].shape != want:
                raise ValueError(f"map at {x} has shape {self.maps[x].shape}, expected {want}")

    def __getitem__(self, x):
        return self.maps[x]

    def compose(self, other):
        """self after other."""
        return FiberMap(other.source, self.target, {x: self.maps[x] @ other.maps[x] for x in self.groupoid.units})

    def scale(self, c):
        return FiberMap(self.source, self.target, {x: m.scale(c) for x, m in self.maps.items()})

    def is_equivariant(self):
        G = self.groupoid
        return all(self.target.rho(a) @ self.maps[G.src(a)] == self.maps[G.tgt(a)] @ self.source.rho(a) for a in G.arrows)

    def multiplicativity_witness(self):
        """First (unit, i, j) with f(e_i e_j) != f(e_i) f(e_j), or None."""
        for x in self.groupoid.units:
            f = self.maps[x]
            gap = f @ self.source.mul[x] - self.target.mul[x] @ kron(f, f)
            if not gap.is_zero():
                col = int(gap.num.tocoo().col[0])
                return (x, *divmod(col, self.source.dim(x)))
        return None

    def plus(self, x):
        """The unital extension A+ -> B+."""
        return block_diag([QMat.identity(1), self.maps[x]])

    def on_forms(self, x, n):
        """Omega^n(A_x) -> Omega^n(B_x), <a0> da1 .. dan -> <f a0> df a1 .. df an."""
        if n == 0:
            return self.maps[x]
        return kron(self.plus(x), *([self.maps[x]] * n))


def identity_map(A):
    return FiberMap(A, A, {x: QMat.identity(A.dim(x)) for x in A.groupoid.units})


def _basis(m):
    return span_basis(m.shape[0], m.columns())[1]


# truncated tensor algebras -------------------------------------------------------------------


class TruncatedTA:
    """T A / (J A)^n: even forms of degree < 2n with the Fedosov product.

    Level 1 is A itself.  ``algebra`` is the result as a G-algebra whose
    fiber over x lists Omega^0, Omega^2, ..., Omega^{2n-2} of A_x in order.
    """

    def __init__(self, A, n):
        if n < 1:
            raise ValueError("level must be at least 1")
        self.base, self.level = A, n
        G = self.groupoid = A.groupoid
        self.degrees = [2 * k for k in range(n)]
        self.forms = {x: FiberForms(A.mul[x], A.dim(x)) for x in G.units}
        self.sizes = {x: [self.forms[x].dim(p) for p in self.degrees] for x in G.units}
        self.offsets = {x: np.concatenate([[0], np.cumsum(self.sizes[x])]).tolist() for x in G.units}
        fibers = {
            x: [f"w{p}:{i}" for p, s in zip(self.degrees, self.sizes[x]) for i in range(s)] for x in G.units
        }
        rho = {}
        for a in G.arrows:
            parts = [A.rho(a) if p == 0 else kron(block_diag([QMat.identity(1), A.rho(a)]), *([A.rho(a)] * p)) for p in self.degrees]
            rho[a] = block_diag(parts)
        mul = {x: self._structure(x) for x in G.units}
        self.algebra = GAlgebra(GModule(G, fibers, rho), mul, name=f"T{A.name}/J^{n}")

    def dim(self, x):
        return self.offsets[x][-1]

    def _structure(self, x):
        F, n = self.forms[x], self.level
        sizes, off = self.sizes[x], self.offsets[x]
        DT = off[-1]
        rows, cols, vals = [], [], []

        def place(X, i, j, k, sign):
            coo = X.num.tocoo()
            u, v = np.divmod(coo.col, sizes[j])
            rows.extend((coo.row + off[k]).tolist())
            cols.extend(((u + off[i]) * DT + v + off[j]).tolist())
            vals.extend(Fraction(sign * int(c), X.den) for c in coo.data)

        for i in range(n):
            for j in range(n - i):
                place(F.product(2 * i, 2 * j), i, j, i + j, 1)
                if i + j + 1 < n:
                    dd = F.product(2 * i + 1, 2 * j + 1) @ kron(F.d(2 * i), F.d(2 * j))
                    place(dd, i, j, i + j + 1, -1)
        return QMat.from_entries((DT, DT * DT), rows, cols, vals)

    def component(self, x, k):
        """Index range of Omega^{2k} inside the fiber over x."""
        return range(self.offsets[x][k], self.offsets[x][k + 1])

    def tau(self):
        A = self.base
        return FiberMap(self.algebra, A, {x: QMat.identity(self.dim(x)).select_rows(self.component(x, 0)) for x in self.groupoid.units})

    def sigma(self):
        A = self.base
        return FiberMap(A, self.algebra, {x: QMat.identity(self.dim(x)).select_cols(self.component(x, 0)) for x in self.groupoid.units})

    def generated_by_sigma(self):
        """True when sigma(A) generates the truncated algebra (uniqueness of extensions)."""
        T = self.algebra
        for x in self.groupoid.units:
            span = _basis(self.sigma()[x])
            while True:
                grown = _basis(hstack([span, T.mul[x] @ kron(span, span)]))
                if grown.shape[1] == span.shape[1]:
                    break
                span = grown
            if span.shape[1] != self.dim(x):
                return False
        return True


def truncated_tensor_algebra(A, n):
    return TruncatedTA(A, n)


def fedosov_mul(TA, x, u, v):
    """Fedosov product of two coordinate columns in the fiber over x."""
    return TA.algebra.product(x, u, v)


def fedosov_is_associative(TA):
    return TA.algebra.associativity_holds()


# curvature and lonilcur extension ------------------------------------------------------------------


def curvature(l):
    """omega_l(a, b) = l(ab) - l(a) l(b), as {unit: D_B x D_A^2 matrix}."""
    if not l.is_equivariant():
        raise ValueError("map is not equivariant")
    return {x: l[x] @ l.source.mul[x] - l.target.mul[x] @ kron(l[x], l[x]) for x in l.groupoid.units}


def _ideal(B, x, gens):
    """Two-sided ideal generated by the columns of gens in the fiber over x."""
    D = B.dim(x)
    I = QMat.identity(D)
    span = _basis(gens)
    while True:
        if span.shape[1] == 0:
            return span
        parts = [span]
        for k in range(D):
            ek = I.select_cols([k])
            parts.append(B.left(x, ek) @ span)
            parts.append(B.right(x, ek) @ span)
        grown = _basis(hstack(parts))
        if grown.shape[1] == span.shape[1]:
            return span
        span = grown


def nilpotency_order(B, x, gens):
    """Smallest k with I^k = 0 for the ideal I generated by gens; None if not nilpotent."""
    ideal = _ideal(B, x, gens)
    power, k = ideal, 1
    while power.shape[1] > 0:
        nxt = _basis(B.mul[x] @ kron(power, ideal))
        if nxt.shape[1] == power.shape[1]:
            return None
        power, k = nxt, k + 1
    return k


def curvature_nilpotency(l):
    """Per unit nilpotency order of the ideal generated by the curvature values."""
    omega = curvature(l)
    return {x: nilpotency_order(l.target, x, omega[x]) for x in l.groupoid.units}


def lonilcur_extend(l, n):
    """The algebra map [[l]]: T A/(J A)^n -> B with [[l]] sigma = l."""
    omega = curvature(l)
    A, B = l.source, l.target
    TA = TruncatedTA(A, n)
    maps = {}
    for x in l.groupoid.units:
        FB = FiberForms(B.mul[x], B.dim(x))
        DB = B.dim(x)
        parts = [l[x]]
        chain = QMat.identity(DB)
        for k in range(1, n):
            if k > 1:
                chain = B.mul[x] @ kron(chain, QMat.identity(DB))
            body = chain @ kron(*([omega[x]] * k)) if k > 1 else omega[x]
            parts.append(FB.head_mul @ kron(l.plus(x), body))
        maps[x] = hstack(parts)
    ext = FiberMap(TA.algebra, B, maps)
    witness = ext.multiplicativity_witness()
    if witness is not None:
        orders = curvature_nilpotency(l)
        raise InsufficientLevel(f"curvature nilpotency {orders} exceeds level {n}; first failing pair {witness}")
    return ext


# quasifree certificates -------------------------------------------------------------------------


class ConnectionCertificate:
    """phi: A -> Omega^2(A) per unit with phi(xy) = phi(x) y + x phi(y) - dx dy.

    ``feasible`` is False when the linear system has no solution; ``method``
    records how phi was found ("separable", "solve" or "given").
    """

    def __init__(self, algebra, phi, method, feasible=True, detail=None):
        self.algebra = algebra
        self.phi = phi
        self.method = method
        self.feasible = feasible
        self.detail = detail or {}
        self._forms = {}

    def __bool__(self):
        return self.feasible

    def forms(self, x):
        if x not in self._forms:
            A = self.algebra
            self._forms[x] = FiberForms(A.mul[x], A.dim(x))
        return self._forms[x]

    def cocycle_gap(self, x):
        """phi M - (phi (x) 1) - (1 (x) phi) + d d, which vanishes for a certificate."""
        F, Phi = self.forms(x), self.phi[x]
        D = self.algebra.dim(x)
        I = QMat.identity(D)
        lhs = Phi @ self.algebra.mul[x]
        rhs = F.right_action(2) @ kron(Phi, I) + F.product(0, 2) @ kron(I, Phi)
        dd = F.product(1, 1) @ kron(F.d(0), F.d(0))
        return lhs - rhs + dd

    def verify(self):
        if not self.feasible:
            return False
        G = self.algebra.groupoid
        if not all(self.cocycle_gap(x).is_zero() for x in G.units):
            return False
        return self.is_equivariant()

    def is_equivariant(self):
        A, G = self.algebra, self.algebra.groupoid
        for a in G.arrows:
            r = A.rho(a)
            r2 = kron(block_diag([QMat.identity(1), r]), r, r)
            if r2 @ self.phi[G.src(a)] != self.phi[G.tgt(a)] @ r:
                return False
        return True

    def nabla(self, x, n):
        """Omega^n -> Omega^{n+1}: <a0> da1 .. dan -> a0 phi(a1) da2 .. dan (zero on Omega^0)."""
        F, D = self.forms(x), self.algebra.dim(x)
        if n == 0:
            return QMat.zeros(F.dim(1), D)
        Phi = self.phi[x]
        I = QMat.identity(D)
        cols = [Phi] + [F.product(0, 2) @ kron(I.select_cols([k]), Phi) for k in range(D)]
        first = hstack(cols)
        return first if n == 1 else kron(first, QMat.identity(D ** (n - 1)))

    def connection_identities_hold(self, x):
        """nabla(x w) = x nabla(w) and nabla(w x) = nabla(w) x - w dx on Omega^1."""
        F, D = self.forms(x), self.algebra.dim(x)
        N = self.nabla(x, 1)
        I, I1 = QMat.identity(D), QMat.identity(F.dim(1))
        left = N @ F.product(0, 1) == F.product(0, 2) @ kron(I, N)
        right = N @ F.right_action(1) == F.right_action(2) @ kron(N, I) - F.product(1, 1) @ kron(I1, F.d(0))
        return left and right

    def to_json(self):
        from .exact import frac_str

        return {
            "algebra": self.algebra.name,
            "method": self.method,
            "feasible": self.feasible,
            "phi": {x: [[frac_str(v) for v in row] for row in m.to_fractions()] for x, m in self.phi.items()} if self.feasible else None,
        }


def trivial_algebra_phi(A):
    """The explicit connection 2 f df df - <1> df df of the trivial algebra."""
    phi = {}
    for x in A.groupoid.units:
        if A.dim(x) != 1:
            raise ValueError("expects the trivial algebra (one-dimensional fibers)")
        phi[x] = QMat.from_dense([[-1], [2]])
    return ConnectionCertificate(A, phi, "given")


def _orbit_reps(G):
    from .groupoid import orbits

    return orbits(G)


def separability_element(A, x, stabilizer):
    """An invariant p in A_x (x) A_x with m(p) = 1 and a p = p a, or None."""
    D = A.dim(x)
    if D == 0:
        return QMat.zeros(0, 1)
    u = A.unit_vector(x)
    if u is None:
        return None
    I = QMat.identity(D)
    eqs, rhs = [A.mul[x]], [u]
    for k in range(D):
        ek = I.select_cols([k])
        eqs.append(kron(A.left(x, ek), I) - kron(I, A.right(x, ek)))
        rhs.append(QMat.zeros(D * D, 1))
    for h in stabilizer:
        r = A.rho(h)
        eqs.append(kron(r, r) - QMat.identity(D * D))
        rhs.append(QMat.zeros(D * D, 1))
    return _solve(vstack(eqs), vstack(rhs))


def _separable_phi(A, x, p):
    """phi(y) = sum u_i dv_i dy - (<1> - e) de dy for p = sum u_i (x) v_i and unit e."""
    D = A.dim(x)
    if D == 0:
        return QMat.zeros(0, 0)
    u = A.unit_vector(x)
    w = vstack([-u, p + kron(u, u)])
    return kron(w, QMat.identity(D))


def _transport_phi(A, a, phi):
    r = A.rho(a)
    rinv = A.rho(A.groupoid.inv(a))
    return kron(block_diag([QMat.identity(1), r]), r, r) @ phi @ rinv


def _spread(A, rep_phi):
    """Extend phi from orbit representatives along the orbits."""
    G = A.groupoid
    out = {}
    for orbit in _orbit_reps(G):
        for y in orbit.units:
            a = G.hom(y, orbit.rep)[0]
            out[y] = _transport_phi(A, a, rep_phi[orbit.rep])
    return out


def _separability_elements(A):
    factors = getattr(A, "factors", None)
    G = A.groupoid
    out = {}
    if factors is not None:
        left, right = (_separability_elements(f) for f in factors)
        if left is None or right is None:
            return None
        from .galgebras import _perm_pairs

        for orbit in _orbit_reps(G):
            x = orbit.rep
            da, db = factors[0].dim(x), factors[1].dim(x)
            out[x] = _perm_pairs(da, db).T @ kron(left[x], right[x])
        return out
    for orbit in _orbit_reps(G):
        p = separability_element(A, orbit.rep, orbit.isotropy)
        if p is None:
            return None
        out[orbit.rep] = p
    return out


def _solve_phi(A, x, stabilizer):
    """Direct linear solve for phi at x; returns (phi or None, detail)."""
    D = A.dim(x)
    F = FiberForms(A.mul[x], D)
    R = F.dim(2)
    if D == 0:
        return QMat.zeros(0, 0), {"unknowns": 0}
    I = QMat.identity(D)
    IR = QMat.identity(R)
    R2, L2 = F.right_action(2), F.product(0, 2)
    M = A.mul[x]
    rows = []
    for a in range(D):
        for b in range(D):
            grid = []
            col_ab = a * D + b
            for c in range(D):
                coeff = M.entry(c, col_ab)
                blk = IR.scale(coeff) if coeff else QMat.zeros(R, R)
                if c == a:
                    blk = blk - R2 @ kron(IR, I.select_cols([b]))
                if c == b:
                    blk = blk - L2 @ kron(I.select_cols([a]), IR)
                grid.append(blk)
            rows.append(grid)
    E = block(rows)
    dd = (F.product(1, 1) @ kron(F.d(0), F.d(0)))
    rhs = vstack([-dd.select_cols([a * D + b]) for a in range(D) for b in range(D)])
    eqs, rhss = [E], [rhs]
    for h in stabilizer:
        r = A.rho(h)
        rf = kron(block_diag([QMat.identity(1), r]), r, r)
        eqs.append(kron(I, rf) - kron(r.T, IR))
        rhss.append(QMat.zeros(R * D, 1))
    E, rhs = vstack(eqs), vstack(rhss)
    detail = {"unknowns": R * D, "equations": E.shape[0]}
    sol = _solve(E, rhs)
    if sol is None:
        detail["rank"] = matrix_rank(E)
        detail["augmented_rank"] = matrix_rank(hstack([E, rhs]))
        return None, detail
    cols = []
    for c in range(D):
        cols.append(sol.select_rows(range(c * R, (c + 1) * R)))
    return hstack(cols), detail


def quasifree_certificate(A, method="auto"):
    """Find phi by the separability formula or by a direct linear solve.

    Returns a ConnectionCertificate; ``feasible`` is False (with the two ranks
    of the inconsistent system in ``detail``) when no equivariant phi exists.
    """
    G = A.groupoid
    if method in ("auto", "separable"):
        ps = _separability_elements(A)
        if ps is not None:
            rep_phi = {x: _separable_phi(A, x, p) for x, p in ps.items()}
            return ConnectionCertificate(A, _spread(A, rep_phi), "separable")
        if method == "separable":
            return ConnectionCertificate(A, None, "separable", feasible=False, detail={"reason": "no separability element"})
    rep_phi, detail = {}, {}
    for orbit in _orbit_reps(G):
        phi, info = _solve_phi(A, orbit.rep, orbit.isotropy)
        detail[orbit.rep] = info
        if phi is None:
            return ConnectionCertificate(A, None, "solve", feasible=False, detail=detail)
        rep_phi[orbit.rep] = phi
    return ConnectionCertificate(A, _spread(A, rep_phi), "solve", detail=detail)


def splitting_homomorphism(cert):
    """a -> a + phi(a): an algebra map A -> T A / (J A)^2 splitting tau."""
    if not cert.feasible:
        raise ValueError("no certificate")
    A = cert.algebra
    TA = TruncatedTA(A, 2)
    return FiberMap(A, TA.algebra, {x: vstack([QMat.identity(A.dim(x)), cert.phi[x]]) for x in A.groupoid.units}), TA
