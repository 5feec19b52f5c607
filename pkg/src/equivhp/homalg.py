"""Paracomplexes, Hom complexes over A(G) and their exact homology."""

from fractions import Fraction

import numpy as np

from .exact import QMat, Quotient, block, block_diag, hstack, kron, matrix_rank, nullspace, span_basis, trace
from .forms import FormModule
from .gmodules import commutant
from .groupoid import adjoint_orbits, centralizer, conjugator, loop_space

DEFAULT_GUARD = 2_000_000


class GuardExceeded(RuntimeError):
    """A construction would materialise a space larger than the dimension guard."""


class NotQuasifree(ValueError):
    """No connection certificate exists; use hp_level instead."""


class ParaBlock:
    """Fiber data of a paracomplex over one loop: boundary, twist and parities."""

    def __init__(self, boundary, twist, parity, labels=None):
        self.boundary = boundary
        self.twist = twist
        self.parity = np.asarray(parity, dtype=np.int64)
        self.labels = labels

    @property
    def dim(self):
        return len(self.parity)

    def indices(self, p):
        return np.flatnonzero(self.parity == p).tolist()

    def check(self):
        n = self.dim
        if not is_homogeneous_odd(self.boundary, self.parity):
            return False
        return self.boundary @ self.boundary == QMat.identity(n) - self.twist


def is_homogeneous_odd(m, parity):
    coo = m.num.tocoo()
    return bool(np.all(parity[coo.row] != parity[coo.col])) if coo.nnz else True


class Paracomplex:
    """A Z/2-graded AYD module with boundary d, twist T and d^2 = 1 - T.

    ``blocks[key]`` holds the fiber data, ``block_of[loop]`` picks the key and
    ``transport(a, loop)`` returns the fiber map to the loop ``a loop a^-1``.
    """

    def __init__(self, G, blocks, block_of, transport, name=""):
        self.groupoid = G
        self.grades = loop_space(G)[0]
        self.blocks = blocks
        self.block_of = block_of
        self._transport = transport
        self.name = name

    def __repr__(self):
        return f"Paracomplex({self.name}, even={self.even_dim}, odd={self.odd_dim})"

    def fiber(self, loop):
        return self.blocks[self.block_of[loop]]

    def fiber_dim(self, loop):
        return self.fiber(loop).dim

    def anchor(self, loop):
        return self.groupoid.src(loop)

    def move(self, a, loop):
        return loop_space(self.groupoid)[1][(a, loop)]

    def transport(self, a, loop):
        return self._transport(a, loop)

    @property
    def even_dim(self):
        return sum(len(self.fiber(b).indices(0)) for b in self.grades)

    @property
    def odd_dim(self):
        return sum(len(self.fiber(b).indices(1)) for b in self.grades)

    def total(self, which):
        pick = {"boundary": lambda f: f.boundary, "twist": lambda f: f.twist}[which]
        return block_diag([pick(self.fiber(b)) for b in self.grades])

    def parity(self):
        return np.concatenate([self.fiber(b).parity for b in self.grades]) if self.grades else np.zeros(0, np.int64)

    def check(self):
        """d^2 = 1 - T on every fiber and d, T commute with the arrow actions."""
        if not all(blk.check() for blk in self.blocks.values()):
            return False
        _, action = loop_space(self.groupoid)
        for (a, b), c in action.items():
            t = self.transport(a, b)
            if self.fiber(c).boundary @ t != t @ self.fiber(b).boundary:
                return False
            if self.fiber(c).twist @ t != t @ self.fiber(b).twist:
                return False
        return True


def trivial_paracomplex(G):
    """O_G[0]: one even dimension over every loop, zero boundary, trivial twist."""
    blk = ParaBlock(QMat.zeros(1, 1), QMat.identity(1), [0], ["1"])
    loops = loop_space(G)[0]
    return Paracomplex(G, {"one": blk}, {b: "one" for b in loops}, lambda a, b: QMat.identity(1), "O_G[0]")


# Hodge tower ----------------------------------------------------------------------------


def _check_guard(F, n, guard):
    top = max(F.block(b).dim(n + 1) for b in F.loops) if F.loops else 0
    if top > guard:
        raise GuardExceeded(f"degree {n + 1} forms have dimension {top} > guard {guard}")


def hodge_level(F, n, guard=DEFAULT_GUARD):
    """theta^n: Omega^0 .. Omega^{n-1} and Omega^n / b Omega^{n+1}, boundary B + b."""
    if n < 1:
        raise ValueError("level must be at least 1")
    if F.cap < n + 2:
        raise ValueError(f"level {n} needs a form module with cap at least {n + 2} (cap is {F.cap})")
    _check_guard(F, n, guard)
    G = F.groupoid
    blocks, quotients, keys = {}, {}, {}
    for loop, blk, members in F.distinct_blocks():
        key = loop
        q = Quotient(blk.dim(n), blk.b(n + 1).int_columns())
        quotients[key] = q
        P, L = q.projection(), q.lift()
        sizes = [blk.dim(j) for j in range(n)] + [q.dim]
        grid = [[None] * (n + 1) for _ in range(n + 1)]
        for j in range(1, n + 1):
            bj = blk.b(j) if j < n else blk.b(n) @ L
            grid[j - 1][j] = bj
        for j in range(n):
            Bj = blk.B(j)
            grid[j + 1][j] = P @ Bj if j + 1 == n else Bj
        for j in range(n + 1):
            for i in range(n + 1):
                if grid[i][j] is None:
                    grid[i][j] = QMat.zeros(sizes[i], sizes[j])
        boundary = block(grid)
        twist = block_diag([blk.T(j) for j in range(n)] + [P @ blk.T(n) @ L])
        parity = np.concatenate([np.full(s, j % 2, dtype=np.int64) for j, s in enumerate(sizes)])
        blocks[key] = ParaBlock(boundary, twist, parity)
        blocks[key].sizes = sizes
        for b in members:
            keys[b] = key

    def transport(a, loop):
        src, dst = keys[loop], keys[loop_space(G)[1][(a, loop)]]
        parts = [F.transport(j, a) for j in range(n)]
        parts.append(quotients[dst].projection() @ F.transport(n, a) @ quotients[src].lift())
        return block_diag(parts)

    out = Paracomplex(G, blocks, keys, _cached_transport(transport), f"theta^{n}")
    out.level = n
    out.forms = F
    out.quotients = quotients
    return out


def _cached_transport(fn):
    cache = {}

    def wrapped(a, loop):
        if (a, loop) not in cache:
            cache[(a, loop)] = fn(a, loop)
        return cache[(a, loop)]

    return wrapped


def x_complex(A, guard=DEFAULT_GUARD, forms=None):
    """X_G(A) = Omega^0 (even) and Omega^1 / b Omega^2 (odd)."""
    F = forms if forms is not None else FormModule(A, cap=3)
    return hodge_level(F, 1, guard)


def tower_projection(P_high, P_low):
    """The chain map theta^m -> theta^n (m >= n) on every fiber, as {loop: matrix}."""
    m, n = P_high.level, P_low.level
    if m < n:
        raise ValueError("tower maps go down in level")
    out = {}
    for loop in P_high.grades:
        sh, sl = P_high.fiber(loop).sizes, P_low.fiber(loop).sizes
        grid = [[QMat.zeros(sl[i], sh[j]) for j in range(m + 1)] for i in range(n + 1)]
        for i in range(n):
            grid[i][i] = QMat.identity(sl[i])
        q = P_low.quotients[P_low.block_of[loop]]
        grid[n][n] = QMat.identity(sl[n]) if m == n else q.projection()
        out[loop] = block(grid)
    return out


def is_chain_map(P, Q, maps):
    """Fiberwise check that maps commute with the boundaries."""
    return all(Q.fiber(b).boundary @ maps[b] == maps[b] @ P.fiber(b).boundary for b in P.grades)


# Hom complexes -----------------------------------------------------------------------------


class HomComplex:
    """Hom_{A(G)}(P, Q) solved on one loop per adjoint orbit.

    ``pieces[rep]`` lists (parity, matrix on the fiber at rep) and
    ``differential[rep]`` is the matrix of the Hom differential in that basis.
    """

    def __init__(self, P, Q):
        if P.groupoid != Q.groupoid:
            raise ValueError("paracomplexes over different groupoids")
        self.source, self.target = P, Q
        self.groupoid = G = P.groupoid
        self.pieces, self.pivots, self.differential = {}, {}, {}
        for orbit in adjoint_orbits(G):
            rep = orbit[0]
            H = centralizer(G, rep)
            fp, fq = P.fiber(rep), Q.fiber(rep)
            Ms = [P.transport(h, rep) for h in H]
            Ns = [Q.transport(h, rep) for h in H]
            basis, pivots = [], []
            for par in (0, 1):
                for p_src in (0, 1):
                    si, ti = fp.indices(p_src), fq.indices((p_src + par) % 2)
                    if not si or not ti:
                        continue
                    sub_M = [m.select_rows(si).select_cols(si) for m in Ms]
                    sub_N = [m.select_rows(ti).select_cols(ti) for m in Ns]
                    sols, piv = commutant(sub_M, sub_N, with_pivots=True)
                    for X, (i, j) in zip(sols, piv):
                        basis.append((par, _embed(X, ti, si, fq.dim, fp.dim)))
                        pivots.append((ti[i], si[j]))
            self.pieces[rep] = basis
            self.pivots[rep] = pivots
            self.differential[rep] = self._differential_matrix(rep, basis, pivots)

    def _apply(self, rep, par, phi):
        fp, fq = self.source.fiber(rep), self.target.fiber(rep)
        return phi @ fp.boundary - (fq.boundary @ phi).scale(-1 if par else 1)

    def _differential_matrix(self, rep, basis, pivots):
        # an element of the span is determined by its entries at the pivots
        k = len(basis)
        rows, cols, vals = [], [], []
        for c, (par, m) in enumerate(basis):
            image = self._apply(rep, par, m)
            for r, (i, j) in enumerate(pivots):
                v = image.entry(i, j)
                if v:
                    rows.append(r)
                    cols.append(c)
                    vals.append(v)
        return QMat.from_entries((k, k), rows, cols, vals)

    def parity_dims(self):
        even = sum(1 for basis in self.pieces.values() for par, _ in basis if par == 0)
        odd = sum(1 for basis in self.pieces.values() for par, _ in basis if par == 1)
        return even, odd

    def square_vanishes(self):
        return all((Dm @ Dm).is_zero() for Dm in self.differential.values())

    def total_basis(self):
        """Each basis element extended along its orbit to a total-space map."""
        P, Q, G = self.source, self.target, self.groupoid
        offp, offq = _offsets(P), _offsets(Q)
        out = []
        for orbit in adjoint_orbits(G):
            rep = orbit[0]
            for par, X in self.pieces[rep]:
                ri, ci, vs = [], [], []
                for loop in orbit:
                    a = conjugator(G, rep, loop)
                    Xl = Q.transport(a, rep) @ X @ P.transport(G.inv(a), loop)
                    coo = Xl.num.tocoo()
                    for i, j, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
                        ri.append(offq[loop] + i)
                        ci.append(offp[loop] + j)
                        vs.append(Fraction(v, Xl.den))
                out.append((par, QMat.from_entries((offq[None], offp[None]), ri, ci, vs)))
        return out

    def total_square_vanishes(self):
        """D^2 = 0 for every basis element, computed on the total spaces."""
        P, Q = self.source, self.target
        for par, phi in self.total_basis():
            once = hom_differential(P, Q, phi, par)
            if not hom_differential(P, Q, once, 1 - par).is_zero():
                return False
        return True

    def coordinates(self, rep, par, phi):
        """Coordinates of an equivariant fiber map at rep in the carrier basis, or None."""
        basis = self.pieces[rep]
        coords = [phi.entry(i, j) if p == par else Fraction(0) for (p, _), (i, j) in zip(basis, self.pivots[rep])]
        rebuilt = QMat.zeros(*phi.shape)
        for c, (_, m) in zip(coords, basis):
            if c:
                rebuilt = rebuilt + m.scale(c)
        return coords if rebuilt == phi else None

    def is_boundary(self, rep, par, phi):
        """True when the cycle phi (parity par, fiber map at rep) is a boundary."""
        coords = self.coordinates(rep, par, phi)
        if coords is None:
            raise ValueError("map is not in the Hom carrier")
        Dm = self.differential[rep]
        v = QMat.from_columns(len(coords), [{k: c for k, c in enumerate(coords) if c}])
        if not (Dm @ v).is_zero():
            raise ValueError("map is not a cycle")
        src = [k for k, (p, _) in enumerate(self.pieces[rep]) if p != par]
        if not src:
            return v.is_zero()
        D_src = Dm.select_cols(src)
        return matrix_rank(D_src) == matrix_rank(hstack([D_src, v]))

    def homology(self):
        even = odd = 0
        for rep, basis in self.pieces.items():
            Dm = self.differential[rep]
            par = np.array([p for p, _ in basis], dtype=np.int64)
            for p in (0, 1):
                own = np.flatnonzero(par == p).tolist()
                if not own:
                    continue
                other = np.flatnonzero(par != p).tolist()
                h = len(own) - matrix_rank(Dm.select_cols(own))
                if other:
                    h -= matrix_rank(Dm.select_cols(other))
                if p == 0:
                    even += h
                else:
                    odd += h
        return even, odd


def _offsets(P):
    off, acc = {}, 0
    for b in P.grades:
        off[b] = acc
        acc += P.fiber_dim(b)
    off[None] = acc
    return off


def _embed(X, rows, cols, nrows, ncols):
    coo = X.num.tocoo()
    r = np.asarray(rows, dtype=np.int64)[coo.row]
    c = np.asarray(cols, dtype=np.int64)[coo.col]
    return QMat.from_int_arrays((nrows, ncols), r, c, coo.data, X.den)


def hom_paracomplex(P, Q):
    return HomComplex(P, Q)


def homology(H):
    even, odd = H.homology()
    return {"even": even, "odd": odd}


def hom_differential(P, Q, phi, parity):
    """Total-space Hom differential phi d_P - (-1)^|phi| d_Q phi."""
    sign = -1 if parity else 1
    return phi @ P.total("boundary") - (Q.total("boundary") @ phi).scale(sign)


# character route ----------------------------------------------------------------------------------


def _trace_on_image(h, X):
    """Trace of h on the (h-invariant) column span of X."""
    if X.is_zero():
        return Fraction(0)
    piv, basis = span_basis(X.shape[0], X.columns())
    if not piv:
        return Fraction(0)
    img = (h @ basis).select_rows(piv)
    return trace(img)


def _order(T):
    n = T.shape[0]
    I = QMat.identity(n)
    P, k = T, 1
    while P != I:
        P = P @ T
        k += 1
        if k > 10_000:
            raise ValueError("twist has no finite order")
    return k


def homology_characters(P):
    """Characters of the T-invariant homology over each adjoint-orbit representative.

    Returns {rep: (group elements, {h: chi_even(h)}, {h: chi_odd(h)})}.  The
    part where T acts without fixed vectors is contractible in every Hom
    complex, so these characters determine all Hom homology ranks.
    """
    cache = getattr(P, "_char_cache", None)
    if cache is not None:
        return cache
    G = P.groupoid
    out = {}
    for orbit in adjoint_orbits(G):
        rep = orbit[0]
        H = centralizer(G, rep)
        f = P.fiber(rep)
        n = f.dim
        if n == 0:
            out[rep] = (H, {h: Fraction(0) for h in H}, {h: Fraction(0) for h in H})
            continue
        k = _order(f.twist)
        e, Tj = QMat.zeros(n, n), QMat.identity(n)
        for _ in range(k):
            e = e + Tj
            Tj = f.twist @ Tj
        e = e.scale(Fraction(1, k))
        De = f.boundary @ e
        idx = [f.indices(0), f.indices(1)]
        images = [De.select_cols(idx[p]) if idx[p] else QMat.zeros(n, 0) for p in (0, 1)]
        chars = [{}, {}]
        for h in H:
            rh = P.transport(h, rep)
            he = rh @ e
            for p in (0, 1):
                chars[p][h] = trace(he.select_rows(idx[p]).select_cols(idx[p])) if idx[p] else Fraction(0)
            # tr(h | H_p) = tr(h e | C_p) - tr(h | d e C_p) - tr(h | d e C_{1-p}); both images count once each
            lost = _trace_on_image(rh, images[0]) + _trace_on_image(rh, images[1])
            chars[0][h] -= lost
            chars[1][h] -= lost
        out[rep] = (H, chars[0], chars[1])
    P._char_cache = out
    return out


def _pairing(G, H, chi, psi):
    total = sum((chi[G.inv(h)] * psi[h] for h in H), Fraction(0))
    val = total / len(H)
    if val.denominator != 1:
        raise ArithmeticError("character pairing is not an integer")
    return int(val)


def hom_homology_ranks(P, Q):
    """(even, odd) homology ranks of Hom_{A(G)}(P, Q) via homology characters."""
    G = P.groupoid
    cp, cq = homology_characters(P), homology_characters(Q)
    even = odd = 0
    for rep in cp:
        H, p0, p1 = cp[rep]
        _, q0, q1 = cq[rep]
        even += _pairing(G, H, p0, q0) + _pairing(G, H, p1, q1)
        odd += _pairing(G, H, p0, q1) + _pairing(G, H, p1, q0)
    return even, odd


def hom_homology_direct(P, Q):
    H = HomComplex(P, Q)
    if not H.square_vanishes():
        raise ArithmeticError("Hom differential does not square to zero")
    return H.homology()


# HP reports ----------------------------------------------------------------------------------------


def hp_report(even, odd, level, reduction, stabilized=None):
    out = {"even": even, "odd": odd, "level": level, "reduction": reduction}
    if stabilized is not None:
        out["stabilized"] = stabilized
    return out


def hp_quasifree(A, B, certificates=None, guard=DEFAULT_GUARD, route="characters"):
    """Homology of Hom_{A(G)}(X_G(A), X_G(B)) for certified quasifree A and B."""
    from .tensoralg import quasifree_certificate

    certificates = certificates or {}
    for name, alg in (("source", A), ("target", B)):
        cert = certificates.get(name)
        if cert is None:
            cert = quasifree_certificate(alg)
        if cert is None or not cert.feasible:
            raise NotQuasifree(f"{name} algebra has no connection certificate")
    P, Q = x_complex(A, guard), x_complex(B, guard) if B is not A else None
    Q = Q if Q is not None else P
    even, odd = hom_homology_ranks(P, Q) if route == "characters" else hom_homology_direct(P, Q)
    return hp_report(even, odd, 1, "quasifree", True)


def hp_level(A, B, m=2, guard=DEFAULT_GUARD, route="characters"):
    """Homology of Hom(theta^j Omega(A), theta^j Omega(B)) for j = 1..m."""
    if m < 1:
        raise ValueError("level must be at least 1")
    FA = FormModule(A, cap=m + 2)
    FB = FA if B is A else FormModule(B, cap=m + 2)
    reports = []
    for j in range(1, m + 1):
        P = hodge_level(FA, j, guard)
        Q = P if B is A else hodge_level(FB, j, guard)
        even, odd = hom_homology_ranks(P, Q) if route == "characters" else hom_homology_direct(P, Q)
        reports.append(hp_report(even, odd, j, "level"))
    stable = len(reports) >= 2 and (reports[-1]["even"], reports[-1]["odd"]) == (reports[-2]["even"], reports[-2]["odd"])
    for r in reports:
        r["stabilized"] = stable
    return reports


def invariant_homology(P):
    """Ranks of H(Hom_{A(G)}(O_G[0], P)): the invariant part of the homology."""
    return hom_homology_ranks(trivial_paracomplex(P.groupoid), P)


def square_witness(P):
    """A non-equivariant phi with D^2(phi) = T phi - phi T != 0, or None.

    Scans matrix units on the fibers over loops whose twist is not the identity.
    """
    T = P.total("twist")
    n = T.shape[0]
    parity = P.parity()
    off = _offsets(P)
    for loop in P.grades:
        f = P.fiber(loop)
        if f.twist == QMat.identity(f.dim):
            continue
        o = off[loop]
        for i in range(f.dim):
            for j in range(f.dim):
                phi = QMat.from_entries((n, n), [o + i], [o + j], [1])
                rhs = T @ phi - phi @ T
                if rhs.is_zero():
                    continue
                par = int((parity[o + i] + parity[o + j]) % 2)
                lhs = hom_differential(P, P, hom_differential(P, P, phi, par), 1 - par)
                return {"loop": loop, "entry": (o + i, o + j), "parity": par, "phi": phi, "lhs": lhs, "rhs": rhs}
    return None


# maps induced by algebra homomorphisms --------------------------------------------------------------


def x_map(f, PA, PB):
    """Fiber matrices {loop: X(f)} of the chain map theta^n(A) -> theta^n(B) induced by f."""
    n = PA.level
    if PB.level != n:
        raise ValueError("levels differ")
    out = {}
    for loop in PA.grades:
        x = PA.groupoid.src(loop)
        qa = PA.quotients[PA.block_of[loop]]
        qb = PB.quotients[PB.block_of[loop]]
        parts = [f.on_forms(x, j) for j in range(n)]
        parts.append(qb.projection() @ f.on_forms(x, n) @ qa.lift())
        out[loop] = block_diag(parts)
    return out


# polynomial homotopies ------------------------------------------------------------------------------


def _pkron(p, q):
    out = {}
    for i, a in p.items():
        for j, b in q.items():
            k = i + j
            term = kron(a, b)
            out[k] = out[k] + term if k in out else term
    return out


def _pmul(p, q):
    out = {}
    for i, a in p.items():
        for j, b in q.items():
            k = i + j
            term = a @ b
            out[k] = out[k] + term if k in out else term
    return out


def _papply(m, p, right=None):
    return {k: (m @ v if right is None else m @ v @ right) for k, v in p.items()}


def _pderiv(p):
    return {k - 1: v.scale(k) for k, v in p.items() if k > 0}


def _pintegrate(p, shape):
    """Integral over [0, 1] of a polynomial matrix."""
    out = QMat.zeros(*shape)
    for k, v in p.items():
        out = out + v.scale(Fraction(1, k + 1))
    return out


def _peval(p, t, shape):
    out = QMat.zeros(*shape)
    for k, v in p.items():
        out = out + v.scale(Fraction(t) ** k)
    return out


class PolynomialHomotopy:
    """Phi_t = sum_k t^k C_k per unit, a family of maps A -> B."""

    def __init__(self, source, target, coeffs):
        self.source, self.target = source, target
        self.groupoid = source.groupoid
        self.coeffs = {x: {k: c for k, c in cs.items() if not c.is_zero()} for x, cs in coeffs.items()}

    def at(self, t):
        from .tensoralg import FiberMap

        G = self.groupoid
        return FiberMap(self.source, self.target, {x: _peval(self.coeffs[x], t, (self.target.dim(x), self.source.dim(x))) for x in G.units})

    def plus(self, x):
        cs = self.coeffs[x]
        out = {}
        for k, c in cs.items():
            out[k] = block_diag([QMat.identity(1) if k == 0 else QMat.zeros(1, 1), c])
        if 0 not in out:
            out[0] = block_diag([QMat.identity(1), QMat.zeros(*cs_shape(self, x))])
        return out

    def multiplicativity_witness(self):
        """(unit, i, j, degree) where Phi_t(e_i e_j) != Phi_t(e_i) Phi_t(e_j), or None."""
        A, B = self.source, self.target
        for x in self.groupoid.units:
            lhs = _papply(QMat.identity(B.dim(x)), self.coeffs[x], A.mul[x])
            rhs = _papply(B.mul[x], _pkron(self.coeffs[x], self.coeffs[x]))
            for k in sorted(set(lhs) | set(rhs)):
                zero = QMat.zeros(B.dim(x), A.dim(x) ** 2)
                gap = lhs.get(k, zero) - rhs.get(k, zero)
                if not gap.is_zero():
                    col = int(gap.num.tocoo().col[0])
                    return (x, *divmod(col, A.dim(x)), k)
        return None

    def is_equivariant(self):
        G, A, B = self.groupoid, self.source, self.target
        for a in G.arrows:
            s, t = G.src(a), G.tgt(a)
            degs = set(self.coeffs[s]) | set(self.coeffs[t])
            for k in degs:
                cs = self.coeffs[s].get(k, QMat.zeros(B.dim(s), A.dim(s)))
                ct = self.coeffs[t].get(k, QMat.zeros(B.dim(t), A.dim(t)))
                if B.rho(a) @ cs != ct @ A.rho(a):
                    return False
        return True


def cs_shape(H, x):
    return (H.target.dim(x), H.source.dim(x))


def _eta_blocks(H, x):
    """Fiber matrices of eta on Omega^1 (to B) and Omega^2 (to Omega^1(B)) over the unit x."""
    from .forms import FiberForms

    B = H.target
    FB = FiberForms(B.mul[x], B.dim(x))
    phi = H.coeffs[x]
    prime = _pderiv(phi)
    head = _papply(FB.head_mul, _pkron(H.plus(x), prime))
    DB, DA = B.dim(x), H.source.dim(x)
    e1 = _pintegrate(head, (DB, (DA + 1) * DA))
    lifted = _papply(FB.embed, head)
    e2 = _pintegrate(_pkron(lifted, phi), ((DB + 1) * DB, (DA + 1) * DA * DA))
    return e1, e2


def cartan_homotopy_check(H, certificate=None, guard=DEFAULT_GUARD):
    """Verify X(Phi_1) xi_2 - X(Phi_0) xi_2 = d eta + eta d and that [Phi_0] = [Phi_1].

    ``H`` is a PolynomialHomotopy of algebra maps.  With a connection
    certificate for the source, also builds nu: X(A) -> theta^2(A) and checks
    xi_2 nu = id, nu xi_2 = id - [nabla, B + b] and d(eta nu) + (eta nu) d =
    X(Phi_1) - X(Phi_0).  Independently of nu, the class equality is decided
    by a membership test in the Hom complex.
    """
    from .tensoralg import NotHomomorphism

    witness = H.multiplicativity_witness()
    if witness is not None:
        raise NotHomomorphism("Phi_t is not multiplicative", witness)
    if not H.is_equivariant():
        raise ValueError("Phi_t is not equivariant")
    A, B = H.source, H.target
    FA = FormModule(A, cap=4)
    theta2 = hodge_level(FA, 2, guard)
    XA = hodge_level(FA, 1, guard)
    XB = x_complex(B, guard)
    xi = tower_projection(theta2, XA)
    X0, X1 = x_map(H.at(0), XA, XB), x_map(H.at(1), XA, XB)
    report = {"homomorphism": True, "equivariant": True}
    identity_ok, eta = True, {}
    for loop in theta2.grades:
        x = theta2.groupoid.src(loop)
        t2, xb = theta2.fiber(loop), XB.fiber(loop)
        sizes = t2.sizes
        e1, e2 = _eta_blocks(H, x)
        qb = XB.quotients[XB.block_of[loop]]
        q2 = theta2.quotients[theta2.block_of[loop]]
        DB = B.dim(x)
        grid = [
            [QMat.zeros(DB, sizes[0]), e1, QMat.zeros(DB, sizes[2])],
            [QMat.zeros(qb.dim, sizes[0]), QMat.zeros(qb.dim, sizes[1]), qb.projection() @ e2 @ q2.lift()],
        ]
        E = block(grid)
        eta[loop] = E
        lhs = (X1[loop] - X0[loop]) @ xi[loop]
        rhs = xb.boundary @ E + E @ t2.boundary
        if lhs != rhs:
            identity_ok = False
    report["cartan_identity"] = identity_ok
    if certificate is not None and certificate.feasible:
        nu_ok, section_ok, via_nu = True, True, True
        for loop in theta2.grades:
            x = theta2.groupoid.src(loop)
            t2, xa = theta2.fiber(loop), XA.fiber(loop)
            sizes = t2.sizes
            q2 = theta2.quotients[theta2.block_of[loop]]
            q1 = XA.quotients[XA.block_of[loop]]
            nab = QMat.zeros(t2.dim, t2.dim)
            grid = [[QMat.zeros(sizes[i], sizes[j]) for j in range(3)] for i in range(3)]
            grid[2][1] = q2.projection() @ certificate.nabla(x, 1)
            nab = block(grid)
            comm = nab @ t2.boundary + t2.boundary @ nab
            N = QMat.identity(t2.dim) - comm
            S = block([
                [QMat.identity(sizes[0]), QMat.zeros(sizes[0], q1.dim)],
                [QMat.zeros(sizes[1], sizes[0]), q1.lift()],
                [QMat.zeros(sizes[2], sizes[0]), QMat.zeros(sizes[2], q1.dim)],
            ])
            nu = N @ S
            if xi[loop] @ nu != QMat.identity(xa.dim):
                nu_ok = False
            if nu @ xi[loop] != N:
                section_ok = False
            h = eta[loop] @ nu
            if XB.fiber(loop).boundary @ h + h @ xa.boundary != X1[loop] - X0[loop]:
                via_nu = False
        report.update({"xi_nu_identity": nu_ok, "nu_xi_formula": section_ok, "homotopy_via_nu": via_nu})
    hom = HomComplex(XA, XB)
    equal = True
    for rep in hom.pieces:
        if not hom.is_boundary(rep, 0, X1[rep] - X0[rep]):
            equal = False
    report["classes_equal"] = equal
    report["passed"] = all(v for v in report.values() if isinstance(v, bool))
    return report


def _t_basis(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


def _to_t_coords(mat, n):
    idx = _t_basis(n)
    for i in range(n):
        for j in range(i):
            if mat[i][j]:
                raise ValueError("not upper triangular")
    return [mat[i][j] for i, j in idx]


def _matpoly_mul(p, q, n):
    out = {}
    for i, a in p.items():
        for j, b in q.items():
            c = [[sum(a[r][k] * b[k][s] for k in range(n)) for s in range(n)] for r in range(n)]
            prev = out.get(i + j)
            out[i + j] = c if prev is None else [[prev[r][s] + c[r][s] for s in range(n)] for r in range(n)]
    return out


def conjugation_homotopy(G, images, N, n=3, name=None):
    """Phi_t(e_k) = (1 + tN) images[k] (1 + tN)^-1 from Q^m into T_n, trivial action.

    ``images`` are orthogonal idempotent upper-triangular matrices (lists of
    lists) and ``N`` is strictly upper triangular, so (1 + tN)^-1 is the
    finite sum of (-tN)^j.
    """
    from .galgebras import direct_product, trivial_algebra, upper_triangular

    m = len(images)
    A = trivial_algebra(G)
    for _ in range(m - 1):
        A = direct_product(A, trivial_algebra(G))
    B = upper_triangular(G, n)
    I = [[Fraction(int(r == s)) for s in range(n)] for r in range(n)]
    Nf = [[Fraction(v) for v in row] for row in N]
    left = {0: I, 1: Nf}
    right, power = {0: I}, I
    for j in range(1, n):
        power = _matpoly_mul({0: power}, {0: Nf}, n)[0]
        right[j] = [[(-1) ** j * v for v in row] for row in power]
    coeffs = {}
    for x in G.units:
        cols = {}
        for k, img in enumerate(images):
            img = [[Fraction(v) for v in row] for row in img]
            poly = _matpoly_mul(_matpoly_mul(left, {0: img}, n), right, n)
            for deg, mat in poly.items():
                cols.setdefault(deg, {})[k] = _to_t_coords(mat, n)
        D = len(_t_basis(n))
        coeffs[x] = {deg: QMat.from_columns(D, [{r: v for r, v in enumerate(c.get(k, [0] * D)) if v} for k in range(m)]) for deg, c in cols.items()}
    return PolynomialHomotopy(A, B, coeffs)


def corner_homotopy(G):
    """A = Q, B = T_2, Phi_t(a) = a E_11 + t a E_12."""
    from .galgebras import trivial_algebra, upper_triangular

    A, B = trivial_algebra(G), upper_triangular(G, 2)
    coeffs = {x: {0: QMat.from_dense([[1], [0], [0]]), 1: QMat.from_dense([[0], [1], [0]])} for x in G.units}
    return PolynomialHomotopy(A, B, coeffs)


def random_homotopy(G, seed, n=3):
    """Seeded conjugation homotopy from Q or Q + Q into T_n."""
    import random

    rng = random.Random(seed)
    m = rng.choice([1, 2])
    slots = list(range(n))
    rng.shuffle(slots)
    cut = rng.randint(1, n - m + 1) if m == 2 else rng.randint(1, n)
    groups = [slots[:cut]] if m == 1 else [slots[:cut], slots[cut:cut + rng.randint(1, n - cut)]]
    images = []
    for grp in groups:
        images.append([[int(r == s and r in grp) for s in range(n)] for r in range(n)])
    N = [[rng.randint(-3, 3) if s > r else 0 for s in range(n)] for r in range(n)]
    return conjugation_homotopy(G, images, N, n)


# split extensions ------------------------------------------------------------------------------------


def _invariant_vectors(P):
    """Basis of Hom(O_G[0], P) as total-space vectors with their parities."""
    H = HomComplex(trivial_paracomplex(P.groupoid), P)
    vecs, pars = [], []
    for par, phi in H.total_basis():
        vecs.append(phi @ QMat.from_columns(phi.shape[1], [{k: 1 for k in range(phi.shape[1])}]))
        pars.append(par)
    n = _offsets(P)[None]
    return (hstack(vecs) if vecs else QMat.zeros(n, 0)), pars


class _SubComplex:
    """A Z/2-graded complex given as column spans inside a total space."""

    def __init__(self, boundary, spans):
        self.boundary = boundary
        self.spans = spans  # parity -> basis matrix (columns)

    def cycles(self, p):
        W = self.spans[p]
        if W.shape[1] == 0:
            return W
        return W @ nullspace(self.boundary @ W)

    def boundaries(self, p):
        W = self.spans[1 - p]
        return self.boundary @ W

    def homology_dim(self, p):
        return self.cycles(p).shape[1] - matrix_rank(self.boundaries(p))


def _induced_rank(image_of_cycles, target_boundaries):
    if image_of_cycles.shape[1] == 0:
        return 0
    return matrix_rank(hstack([image_of_cycles, target_boundaries])) - matrix_rank(target_boundaries)


def _total_map(P, maps, Q):
    return block_diag([maps[b] for b in P.grades])


def split_extension(iota, pi, sigma, n=2, guard=DEFAULT_GUARD):
    """Decompose X(T E) = ker X(T pi) + X(T Q) at level n and test the six-term sequence.

    iota: K -> E and pi: E -> Q are algebra maps with pi iota = 0 and sigma a
    linear equivariant section of pi.
    """
    from .tensoralg import TruncatedTA, FiberMap

    G = pi.groupoid
    problems = []
    for name, f in (("iota", iota), ("pi", pi)):
        if f.multiplicativity_witness() is not None:
            problems.append(f"{name} is not multiplicative")
        if not f.is_equivariant():
            problems.append(f"{name} is not equivariant")
    if not sigma.is_equivariant():
        problems.append("sigma is not equivariant")
    for x in G.units:
        if not (pi[x] @ iota[x]).is_zero():
            problems.append(f"pi iota != 0 at {x}")
        if pi[x] @ sigma[x] != QMat.identity(pi.target.dim(x)):
            problems.append(f"sigma is not a section at {x}")
        if matrix_rank(iota[x]) != iota.source.dim(x) or matrix_rank(iota[x]) + pi.target.dim(x) != pi.source.dim(x):
            problems.append(f"sequence not exact at {x}")
    if problems:
        raise ValueError("non-admissible extension: " + "; ".join(problems))

    TE, TQ = TruncatedTA(pi.source, n), TruncatedTA(pi.target, n)
    Tpi = FiberMap(TE.algebra, TQ.algebra, {x: block_diag([pi.on_forms(x, p) for p in TE.degrees]) for x in G.units})
    XE, XQ = x_complex(TE.algebra, guard), x_complex(TQ.algebra, guard)
    fmap = x_map(Tpi, XE, XQ)
    report = {"level": n, "chain_map": is_chain_map(XE, XQ, fmap)}
    decomposition = True
    kernel_dims = {}
    for loop in XE.grades:
        m = fmap[loop]
        r = matrix_rank(m)
        k = m.shape[1] - r
        kernel_dims[loop] = k
        if r != m.shape[0] or k + XQ.fiber_dim(loop) != XE.fiber_dim(loop):
            decomposition = False
    report["decomposition"] = decomposition
    report["dims"] = {"total": XE.even_dim + XE.odd_dim, "kernel": sum(kernel_dims.values()), "quotient": XQ.even_dim + XQ.odd_dim}

    F = _total_map(XE, fmap, XQ)
    WE, parE = _invariant_vectors(XE)
    WQ, parQ = _invariant_vectors(XQ)
    spans_E = {p: WE.select_cols([k for k, q in enumerate(parE) if q == p]) for p in (0, 1)}
    spans_Q = {p: WQ.select_cols([k for k, q in enumerate(parQ) if q == p]) for p in (0, 1)}
    spans_K = {p: spans_E[p] @ nullspace(F @ spans_E[p]) if spans_E[p].shape[1] else spans_E[p] for p in (0, 1)}
    dE, dQ = XE.total("boundary"), XQ.total("boundary")
    CK, CE, CQ = _SubComplex(dE, spans_K), _SubComplex(dE, spans_E), _SubComplex(dQ, spans_Q)
    dims = {(name, p): C.homology_dim(p) for name, C in (("kernel", CK), ("total", CE), ("quotient", CQ)) for p in (0, 1)}
    inc = {p: _induced_rank(CK.cycles(p), CE.boundaries(p)) for p in (0, 1)}
    proj = {p: _induced_rank(F @ CE.cycles(p), CQ.boundaries(p)) for p in (0, 1)}
    conn = {}
    from .galgebras import _solve

    for p in (0, 1):
        Z = CQ.cycles(p)
        W = spans_E[p]
        images = []
        for col in range(Z.shape[1]):
            z = Z.select_cols([col])
            c = _solve(F @ W, z)
            if c is None:
                raise ArithmeticError("projection is not surjective on invariant chains")
            images.append(dE @ W @ c)
        img = hstack(images) if images else QMat.zeros(dE.shape[0], 0)
        conn[p] = _induced_rank(img, CK.boundaries(1 - p))
    nodes = []
    for p in (0, 1):
        nodes.append({"node": f"H{p}(kernel)", "dim": dims[("kernel", p)], "exact": dims[("kernel", p)] - inc[p] == conn[1 - p]})
        nodes.append({"node": f"H{p}(total)", "dim": dims[("total", p)], "exact": dims[("total", p)] - proj[p] == inc[p]})
        nodes.append({"node": f"H{p}(quotient)", "dim": dims[("quotient", p)], "exact": dims[("quotient", p)] - conn[p] == proj[p]})
    report["sequence"] = nodes
    report["exact"] = all(nd["exact"] for nd in nodes)
    report["passed"] = report["chain_map"] and decomposition and report["exact"]
    return report


def product_extension(A, B):
    """0 -> A -> A x B -> B -> 0 with the coordinate maps."""
    from .galgebras import direct_product
    from .tensoralg import FiberMap

    E = direct_product(A, B)
    G = A.groupoid
    iota, pi, sigma = {}, {}, {}
    for x in G.units:
        da, db = A.dim(x), B.dim(x)
        I = QMat.identity(da + db)
        iota[x] = I.select_cols(range(da)) if da else QMat.zeros(da + db, 0)
        pi[x] = I.select_rows(range(da, da + db)) if db else QMat.zeros(0, da + db)
        sigma[x] = pi[x].T
    return FiberMap(A, E, iota), FiberMap(E, B, pi), FiberMap(B, E, sigma)
