"""Twisted traces, the trace chain map, stability checks and equivariant averaging."""

import numpy as np

from .exact import QMat, block_diag, kron
from .forms import FormModule
from .galgebras import regular_pairing, smoothing_algebra, tensor_product
from .gmodules import trivial_module
from .groupoid import cutoff, loop_space
from .homalg import (
    DEFAULT_GUARD,
    _SubComplex,
    _induced_rank,
    _invariant_vectors,
    hodge_level,
    hom_homology_ranks,
    is_chain_map,
)
from .tensoralg import FiberMap, quasifree_certificate


class InadmissiblePairing(ValueError):
    def __init__(self, message, witness):
        super().__init__(f"{message}: {witness}")
        self.witness = witness


# averaging ------------------------------------------------------------------------------------


def equivariant_average(M, N, phi):
    """phi^G at grade g: sum over a in G^{anchor g} of c(s(a)) N(a) phi M(a^-1).

    M, N are graded representations over the same grades and ``phi`` maps
    grade g of M to grade g of N, given as {grade: matrix}.
    """
    G = M.groupoid
    c = cutoff(G)
    out = {}
    for g in M.grades:
        x = M.anchor(g)
        acc = QMat.zeros(N.fiber_dim(g), M.fiber_dim(g))
        for a in G.range_fiber(x):
            w = c(G.src(a))
            if not w:
                continue
            ainv = G.inv(a)
            h = M.move(ainv, g)
            acc = acc + (N.transport(a, h) @ phi[h] @ M.transport(ainv, g)).scale(w)
        out[g] = acc
    return out


def blocks_to_total(M, N, blocks):
    return block_diag([blocks[g] for g in M.grades]) if M.grades else QMat.zeros(0, 0)


def random_grade_map(M, N, seed):
    """A seeded grade-preserving map with small integer entries (usually not equivariant)."""
    rng = np.random.default_rng(seed)
    out = {}
    for g in M.grades:
        m, n = N.fiber_dim(g), M.fiber_dim(g)
        out[g] = QMat.from_dense(rng.integers(-3, 4, size=(m, n)).tolist(), (m, n))
    return out


# twisted traces ------------------------------------------------------------------------------


class TwistedTrace:
    """ttr_loop(e (x) f) = h(sigma f, e) with sigma = rho(loop^-1), on K(E) over each loop."""

    def __init__(self, h):
        self.pairing = h
        self.module = E = h.module
        self.groupoid = G = E.groupoid
        self.algebra = smoothing_algebra(E, h)
        self.rows = {}
        for b in loop_space(G)[0]:
            x = G.src(b)
            sigma = E.rho[G.inv(b)]
            self.rows[b] = _flatten_row(h.gram[x].T @ sigma)

    def __call__(self, loop):
        """Row vector on K(E) over the base of loop."""
        return self.rows[loop]

    def weight(self, loop, n):
        """K^(x)n -> Q: L1 ... Ln -> ttr(L1 ... Ln)."""
        K, x = self.algebra, self.groupoid.src(loop)
        chain = QMat.identity(K.dim(x))
        for _ in range(n - 1):
            chain = K.mul[x] @ kron(chain, QMat.identity(K.dim(x)))
        return self.rows[loop] @ chain

    def identity_holds(self, loop):
        """ttr(L0 L1) = ttr((loop^-1 . L1) L0) for all basis pairs."""
        K, G = self.algebra, self.groupoid
        x = G.src(loop)
        D = K.dim(x)
        sigma = K.rho(G.inv(loop))
        swap = QMat.permutation([j * D + i for i in range(D) for j in range(D)], D * D)
        lhs = self.rows[loop] @ K.mul[x]
        rhs = self.rows[loop] @ K.mul[x] @ kron(sigma, QMat.identity(D)) @ swap
        return lhs == rhs

    def matrix(self):
        """Total matrix O_G (x) K(E) -> O_G, block diagonal over loops."""
        return block_diag([self.rows[b] for b in loop_space(self.groupoid)[0]])


def _flatten_row(m):
    """Row vector with entry i * n + j equal to m[i, j]."""
    rows, cols = m.shape
    coo = m.num.tocoo()
    idx = coo.row * cols + coo.col
    return QMat.from_int_arrays((1, rows * cols), np.zeros(len(idx), dtype=np.int64), idx, coo.data, m.den)


def twisted_trace(h):
    return TwistedTrace(h)


# the trace chain map -----------------------------------------------------------------------------


def _separate(da, dk, n):
    """Permutation (A(x)K)^(x)n -> A^(x)n (x) K^(x)n on tensor indices."""
    size = (da * dk) ** n
    idx = np.arange(size, dtype=np.int64)
    a_part = np.zeros(size, dtype=np.int64)
    k_part = np.zeros(size, dtype=np.int64)
    rest = idx.copy()
    for pos in range(n):
        digit = rest % (da * dk)
        rest //= da * dk
        i, l = np.divmod(digit, dk)
        a_part += i * da ** pos
        k_part += l * dk ** pos
    return QMat.permutation(a_part * dk ** n + k_part, size)


class TraceMap:
    """tr: Omega_G(A (x) K(E)) -> Omega_G(A) on each loop and degree."""

    def __init__(self, A, ttr):
        self.A, self.ttr = A, ttr
        self.K = ttr.algebra
        self.AK = tensor_product(A, self.K)
        self._cache = {}

    def degree(self, loop, n):
        key = (loop, n)
        if key in self._cache:
            return self._cache[key]
        x = self.A.groupoid.src(loop)
        da, dk = self.A.dim(x), self.K.dim(x)
        if n == 0:
            out = kron(QMat.identity(da), self.ttr(loop))
        else:
            head = kron(QMat.identity(da ** n), self.ttr.weight(loop, n)) @ _separate(da, dk, n)
            body = kron(QMat.identity(da ** (n + 1)), self.ttr.weight(loop, n + 1)) @ _separate(da, dk, n + 1)
            out = block_diag([head, body])
        self._cache[key] = out
        return out


def embedding_vector(E, h, seed_vector=None):
    """An invariant u with h(u_x, u_x) != 0 at every unit, by averaging.

    The default seed is the indicator of the unit arrow when E is the regular
    module (giving u_x = sum over G^x of c(s(a)) delta_a) and the all-ones
    vector otherwise.
    """
    G = E.groupoid
    if seed_vector is None:
        seed_vector = {}
        for x in G.units:
            names = E.fibers[x]
            col = {names.index(x): 1} if x in names else {k: 1 for k in range(len(names))}
            seed_vector[x] = QMat.from_columns(len(names), [col])
    T = trivial_module(G)
    avg = equivariant_average(T, E, seed_vector)
    for x in G.units:
        if h(x, avg[x], avg[x]) == 0:
            raise InadmissiblePairing("averaged vector is isotropic", x)
    return avg


def iota_map(A, ttr, u=None):
    """iota(a) = a (x) p with p = u (x) u / h(u, u), an algebra map A -> A (x) K(E)."""
    h = ttr.pairing
    if u is None:
        u = embedding_vector(h.module, h)
    AK = tensor_product(A, ttr.algebra)
    maps = {}
    for x in A.groupoid.units:
        p = kron(u[x], u[x]).scale(1 / h(x, u[x], u[x]))
        maps[x] = kron(QMat.identity(A.dim(x)), p)
    return FiberMap(A, AK, maps), AK


def trace_chain_map(A, h=None, guard=DEFAULT_GUARD):
    """Build tr: X_G(A (x) K(E)) -> X_G(A) and check the chain-level identities."""
    G = A.groupoid
    h = h or regular_pairing(G)
    ttr = TwistedTrace(h)
    tr = TraceMap(A, ttr)
    iota, AK = iota_map(A, ttr)
    tr.AK = AK
    FA, FK = FormModule(A, cap=3), FormModule(AK, cap=3)
    XA, XK = hodge_level(FA, 1, guard), hodge_level(FK, 1, guard)
    checks = {"b": True, "d": True, "T": True, "left_inverse": True}
    maps, iota_x = {}, {}
    for loop in XA.grades:
        x = G.src(loop)
        ba, bk = FA.block(loop), FK.block(loop)
        t0, t1, t2 = (tr.degree(loop, n) for n in range(3))
        if t0 @ bk.b(1) != ba.b(1) @ t1 or t1 @ bk.b(2) != ba.b(2) @ t2:
            checks["b"] = False
        if t1 @ bk.d(0) != ba.d(0) @ t0:
            checks["d"] = False
        if any(tn @ bk.T(n) != ba.T(n) @ tn for n, tn in enumerate((t0, t1))):
            checks["T"] = False
        if t0 @ iota.on_forms(x, 0) != QMat.identity(A.dim(x)) or t1 @ iota.on_forms(x, 1) != QMat.identity(ba.dim(1)):
            checks["left_inverse"] = False
        qa = XA.quotients[XA.block_of[loop]]
        qk = XK.quotients[XK.block_of[loop]]
        maps[loop] = block_diag([t0, qa.projection() @ t1 @ qk.lift()])
        iota_x[loop] = block_diag([iota.on_forms(x, 0), qk.projection() @ iota.on_forms(x, 1) @ qa.lift()])
    checks["chain_map"] = is_chain_map(XK, XA, maps)
    checks["iota_chain_map"] = is_chain_map(XA, XK, iota_x)
    checks["tr_iota_identity"] = all(maps[b] @ iota_x[b] == QMat.identity(XA.fiber_dim(b)) for b in XA.grades)
    return {"checks": checks, "tr": maps, "iota": iota_x, "source": XK, "target": XA, "ttr": ttr}


def _iota_tr_on_invariant_homology(XK, tr, iota):
    """X(iota) tr induces the identity on H(Hom(O_G[0], X(A (x) K)))."""
    W, par = _invariant_vectors(XK)
    d = XK.total("boundary")
    spans = {p: W.select_cols([k for k, q in enumerate(par) if q == p]) for p in (0, 1)}
    C = _SubComplex(d, spans)
    comp = block_diag([iota[b] @ tr[b] for b in XK.grades])
    for p in (0, 1):
        Z = C.cycles(p)
        if Z.shape[1] == 0:
            continue
        if _induced_rank(comp @ Z - Z, C.boundaries(p)) != 0:
            return False
    return True


def stability_check(A, h=None, guard=DEFAULT_GUARD):
    """Twisted-trace identity, tr X(iota) = id, chain-map checks and rank equalities."""
    G = A.groupoid
    h = h or regular_pairing(G)
    if not h.equivariance_holds():
        raise InadmissiblePairing("pairing is not equivariant", None)
    data = trace_chain_map(A, h, guard)
    ttr = data["ttr"]
    report = {"twisted_trace": all(ttr.identity_holds(b) for b in loop_space(G)[0])}
    report.update(data["checks"])
    XA, XK = data["target"], data["source"]
    AK = tensor_product(A, ttr.algebra)
    certs = {"A": quasifree_certificate(A).feasible, "A(x)K": quasifree_certificate(AK).feasible}
    report["certified"] = all(certs.values())
    ranks = {
        "A,A": hom_homology_ranks(XA, XA),
        "AK,AK": hom_homology_ranks(XK, XK),
        "AK,A": hom_homology_ranks(XK, XA),
        "A,AK": hom_homology_ranks(XA, XK),
    }
    report["ranks"] = {k: list(v) for k, v in ranks.items()}
    report["ranks_equal"] = len(set(ranks.values())) == 1
    report["iota_tr_homology_identity"] = _iota_tr_on_invariant_homology(XK, data["tr"], data["iota"])
    report["passed"] = all(v for v in report.values() if isinstance(v, bool))
    return report
