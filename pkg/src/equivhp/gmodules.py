"""Convolution algebra, G-modules in functorial form, comodules, equivariant Homs."""

import random
from fractions import Fraction

from .exact import QMat, Quotient, block_diag, inverse, kron, nullspace, vstack
from .funcspace import FinFn
from .groupoid import orbits


def convolve(G, f, g):
    """(f*g)(a) = sum over b in G^{r(a)} of f(b) g(b^-1 a)."""
    out = {}
    for a in G.arrows:
        acc = Fraction(0)
        for b in G.range_fiber(G.tgt(a)):
            acc += f(b) * g(G.mul(G.inv(b), a))
        out[a] = acc
    return FinFn(G.arrows, out)


def delta(G, arrows):
    return FinFn.indicator(G.arrows, arrows)


class GradedRep:
    """Vector spaces indexed by a finite G-set of grades with transport maps.

    Subclasses provide ``grades``, ``anchor(g)``, ``move(a, g)``,
    ``fiber_dim(g)`` and ``transport(a, g)`` (a matrix from the fiber at g to
    the fiber at ``move(a, g)``, defined when ``s(a) = anchor(g)``).
    """

    groupoid = None
    grades = ()

    @property
    def offsets(self):
        off, acc = {}, 0
        for g in self.grades:
            off[g] = acc
            acc += self.fiber_dim(g)
        return off

    @property
    def total_dim(self):
        return sum(self.fiber_dim(g) for g in self.grades)

    def moves(self):
        G = self.groupoid
        for g in self.grades:
            for a in G.source_fiber(self.anchor(g)):
                yield a, g

    def grade_orbits(self):
        """Orbits of grades, each as (representative, members, stabilizer)."""
        G = self.groupoid
        seen, out = set(), []
        for g in self.grades:
            if g in seen:
                continue
            members = []
            for a in G.source_fiber(self.anchor(g)):
                h = self.move(a, g)
                if h not in members:
                    members.append(h)
            members.sort(key=self.grades.index)
            stab = tuple(a for a in G.source_fiber(self.anchor(g)) if self.move(a, g) == g)
            seen.update(members)
            out.append((g, tuple(members), stab))
        return out

    def carrier(self, a, g, target):
        G = self.groupoid
        for b in G.source_fiber(self.anchor(g)):
            if self.move(b, g) == target:
                return b
        raise KeyError((g, target))

    def check_functorial(self):
        """Unit arrows act as identities and transport composes; returns failures."""
        G = self.groupoid
        bad = []
        for a, g in self.moves():
            m = self.transport(a, g)
            if G.is_unit(a) and m != QMat.identity(self.fiber_dim(g)):
                bad.append(("unit", a, g))
            for b in G.source_fiber(G.tgt(a)):
                ab = G.mul(b, a)
                if self.transport(b, self.move(a, g)) @ m != self.transport(ab, g):
                    bad.append(("compose", b, a, g))
        return bad


class GModule(GradedRep):
    """Unit-graded module: fibers per unit and rho(a): fiber(s(a)) -> fiber(r(a))."""

    def __init__(self, G, fibers, rho):
        self.groupoid = G
        self.grades = G.units
        self.fibers = {x: list(fibers.get(x, [])) for x in G.units}
        self.rho = {}
        for a in G.arrows:
            if a in rho:
                m = rho[a] if isinstance(rho[a], QMat) else QMat.from_dense(rho[a], (len(self.fibers[G.tgt(a)]), len(self.fibers[G.src(a)])))
            elif G.is_unit(a):
                m = QMat.identity(len(self.fibers[a]))
            else:
                raise ValueError(f"missing action matrix for arrow {a}")
            want = (len(self.fibers[G.tgt(a)]), len(self.fibers[G.src(a)]))
            if m.shape != want:
                raise ValueError(f"action matrix of {a} has shape {m.shape}, expected {want}")
            self.rho[a] = m

    def __repr__(self):
        return f"GModule(dims={[self.fiber_dim(x) for x in self.grades]})"

    def anchor(self, x):
        return x

    def move(self, a, x):
        return self.groupoid.tgt(a)

    def fiber_dim(self, x):
        return len(self.fibers[x])

    def transport(self, a, x=None):
        return self.rho[a]

    def validate(self):
        bad = self.check_functorial()
        if bad:
            raise ValueError(f"not a G-module: first failure {bad[0]}")
        return self

    def action_matrix(self, f):
        """The D(G)-action of a function f on arrows, as a total-space matrix."""
        G = self.groupoid
        off, n = self.offsets, self.total_dim
        rows, cols, vals = [], [], []
        for a in G.arrows:
            c = f(a)
            if not c:
                continue
            for (i, j), v in _entries(self.rho[a]):
                rows.append(off[G.tgt(a)] + i)
                cols.append(off[G.src(a)] + j)
                vals.append(c * v)
        return QMat.from_entries((n, n), rows, cols, vals)

    def to_json(self):
        return {
            "fibers": {x: list(self.fibers[x]) for x in self.grades},
            "rho": {a: self.rho[a].to_lists() for a in self.groupoid.arrows if not self.groupoid.is_unit(a)},
        }


def _entries(m):
    coo = m.num.tocoo()
    return [((int(i), int(j)), Fraction(int(v), m.den)) for i, j, v in zip(coo.row, coo.col, coo.data)]


def trivial_module(G):
    return GModule(G, {x: [f"1_{x}"] for x in G.units}, {a: QMat.identity(1) for a in G.arrows})


def regular_module(G):
    """D(G) with left translation: fiber at x spanned by delta_c for c in G^x."""
    fibers = {x: list(G.range_fiber(x)) for x in G.units}
    rho = {}
    for a in G.arrows:
        src, tgt = fibers[G.src(a)], fibers[G.tgt(a)]
        pos = {c: k for k, c in enumerate(tgt)}
        rho[a] = QMat.permutation([pos[G.mul(a, c)] for c in src], len(tgt))
    return GModule(G, fibers, rho)


def direct_sum(M, N):
    G = M.groupoid
    fibers = {x: [f"{n}" for n in M.fibers[x]] + [f"{n}'" for n in N.fibers[x]] for x in G.units}
    return GModule(G, fibers, {a: block_diag([M.rho[a], N.rho[a]]) for a in G.arrows})


def tensor_diagonal(M, N):
    """Fibers M_x (x) N_x with rho_M (x) rho_N."""
    G = M.groupoid
    fibers = {x: [f"{m}*{n}" for m in M.fibers[x] for n in N.fibers[x]] for x in G.units}
    return GModule(G, fibers, {a: kron(M.rho[a], N.rho[a]) for a in G.arrows})


def change_basis(M, S):
    """rho'(a) = S_{r(a)} rho(a) S_{s(a)}^{-1} for invertible S per unit."""
    G = M.groupoid
    Sinv = {x: inverse(S[x]) if S[x].shape[0] else S[x] for x in G.units}
    rho = {a: S[G.tgt(a)] @ M.rho[a] @ Sinv[G.src(a)] for a in G.arrows}
    return GModule(G, M.fibers, rho)


def random_invertible(n, rng, steps=None):
    """Integer matrix with integer inverse, as a product of elementary moves."""
    m = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(steps or 2 * n):
        if n < 2:
            break
        i, j = rng.sample(range(n), 2)
        c = rng.choice([-2, -1, 1, 2])
        m[i] = [x + c * y for x, y in zip(m[i], m[j])]
    if n and rng.random() < 0.5:
        m[0] = [-x for x in m[0]]
    return QMat.from_dense(m, (n, n))


def random_module(G, seed):
    """A seeded random G-module: a sum of trivial/regular pieces in a random basis."""
    rng = random.Random(seed)
    pieces = []
    for _ in range(rng.randint(1, 3)):
        pieces.append(rng.choice([trivial_module, regular_module])(G))
    M = pieces[0]
    for P in pieces[1:]:
        M = direct_sum(M, P)
    S = {x: random_invertible(M.fiber_dim(x), rng) for x in G.units}
    return change_basis(M, S)


# equivariant homs -------------------------------------------------------------


def commutant(Ms, Ns, with_pivots=False):
    """Basis (as n x m QMats) of X with N_h X = X M_h for all paired matrices.

    With ``with_pivots`` also return, per basis element, the (row, col) entry
    where it is 1 and every other basis element vanishes.
    """
    if not Ms:
        raise ValueError("need at least one generator (use the identity)")
    n, m = Ns[0].shape[0], Ms[0].shape[0]
    if n == 0 or m == 0:
        return ([], []) if with_pivots else []
    In, Im = QMat.identity(n), QMat.identity(m)
    # column-major vec: vec(N X) = (I_m (x) N) vec X, vec(X M) = (M^T (x) I_n) vec X
    eqs = vstack([kron(Im, N) - kron(M.T, In) for M, N in zip(Ms, Ns)])
    q = Quotient(n * m, eqs.int_rows())
    ker = q.projection().T
    out = []
    for col in ker.columns():
        ri, ci, vs = [], [], []
        for k, v in col.items():
            ri.append(k % n)
            ci.append(k // n)
            vs.append(v)
        out.append(QMat.from_entries((n, m), ri, ci, vs))
    if with_pivots:
        return out, [(k % n, k // n) for k in q.free]
    return out


def _normalize_first(m):
    coo = m.num.tocoo()
    if not coo.nnz:
        return m
    order = sorted(zip(coo.row, coo.col, coo.data), key=lambda t: (t[1], t[0]))
    lead = Fraction(int(order[0][2]), m.den)
    return m.scale(1 / lead)


def equivariant_homs(M, N, normalize=True):
    """Basis of grade-preserving maps commuting with every transport.

    Solved on one representative grade per orbit (commutant of the
    stabilizer) and transported along the orbit.  Each basis element is a
    total-space matrix (N.total_dim x M.total_dim); with ``normalize`` its
    first nonzero entry in column-major order is 1.
    """
    G = M.groupoid
    if list(M.grades) != list(N.grades):
        raise ValueError("modules are graded by different sets")
    moff, noff = M.offsets, N.offsets
    out = []
    for rep, members, stab in M.grade_orbits():
        Ms = [M.transport(h, rep) for h in stab]
        Ns = [N.transport(h, rep) for h in stab]
        for X in commutant(Ms, Ns):
            blocks = []
            for g in members:
                a = M.carrier(None, rep, g)
                ainv = G.inv(a)
                Xg = N.transport(a, rep) @ X @ M.transport(ainv, g)
                blocks.append((g, Xg))
            ri, ci, vs = [], [], []
            for g, Xg in blocks:
                for (i, j), v in _entries(Xg):
                    ri.append(noff[g] + i)
                    ci.append(moff[g] + j)
                    vs.append(v)
            phi = QMat.from_entries((N.total_dim, M.total_dim), ri, ci, vs)
            out.append(_normalize_first(phi) if normalize else phi)
    return out


def is_equivariant(M, N, phi):
    """Check grade preservation and commutation with all transports."""
    moff, noff = M.offsets, N.offsets
    for g in M.grades:
        for h in M.grades:
            if g != h:
                blk = phi[noff[h]:noff[h] + N.fiber_dim(h), moff[g]:moff[g] + M.fiber_dim(g)]
                if not blk.is_zero():
                    return False
    for a, g in M.moves():
        h = M.move(a, g)
        Pg = phi[noff[g]:noff[g] + N.fiber_dim(g), moff[g]:moff[g] + M.fiber_dim(g)]
        Ph = phi[noff[h]:noff[h] + N.fiber_dim(h), moff[h]:moff[h] + M.fiber_dim(h)]
        if N.transport(a, g) @ Pg != Ph @ M.transport(a, g):
            return False
    return True


# comodules ------------------------------------------------------------------------


class ComoduleMap:
    """T: C(G) (x)_r M -> C(G) (x)_s M on the bases {delta_a (x) basis vector}."""

    def __init__(self, G, fibers, matrix):
        self.groupoid = G
        self.fibers = {x: list(fibers[x]) for x in G.units}
        self.r_basis = [(a, k) for a in G.arrows for k in range(len(self.fibers[G.tgt(a)]))]
        self.s_basis = [(a, k) for a in G.arrows for k in range(len(self.fibers[G.src(a)]))]
        if matrix.shape != (len(self.s_basis), len(self.r_basis)):
            raise ValueError("comodule matrix has the wrong shape")
        self.matrix = matrix

    def _ranges(self, basis):
        out, start = {}, 0
        for k, (a, _) in enumerate(basis):
            if a not in out:
                out[a] = [k, k]
            out[a][1] = k + 1
        return {a: tuple(v) for a, v in out.items()}

    def block(self, a):
        rs, ss = self._ranges(self.r_basis), self._ranges(self.s_basis)
        G = self.groupoid
        r0, r1 = rs.get(a, (0, 0))
        s0, s1 = ss.get(a, (0, 0))
        if r0 == r1 or s0 == s1:
            return QMat.zeros(len(self.fibers[G.src(a)]), len(self.fibers[G.tgt(a)]))
        return self.matrix[s0:s1, r0:r1]

    def is_function_linear(self):
        """C(G)-linearity on the first leg: the matrix is block diagonal in arrows."""
        coo = self.matrix.num.tocoo()
        return all(self.s_basis[i][0] == self.r_basis[j][0] for i, j in zip(coo.row, coo.col))

    def pullbacks(self):
        """d_0^*(T), d_1^*(T), d_2^*(T) on the fibre products over G^(2)."""
        G = self.groupoid
        pairs = [(a, b) for a in G.arrows for b in G.arrows if G.mul(a, b) is not None]
        dim = {x: len(self.fibers[x]) for x in G.units}
        vert = [lambda a, b: G.tgt(a), lambda a, b: G.src(a), lambda a, b: G.src(b)]

        def basis(i):
            out, off = {}, 0
            for p in pairs:
                out[p] = off
                off += dim[vert[i](*p)]
            return out, off

        bases = [basis(i) for i in range(3)]
        blocks = {a: self.block(a) for a in G.arrows}

        def assemble(src, dst, pick):
            (sb, sn), (db, dn) = bases[src], bases[dst]
            ri, ci, vs = [], [], []
            for p in pairs:
                for (i, j), v in _entries(blocks[pick(*p)]):
                    ri.append(db[p] + i)
                    ci.append(sb[p] + j)
                    vs.append(v)
            return QMat.from_entries((dn, sn), ri, ci, vs)

        d0 = assemble(1, 2, lambda a, b: b)
        d1 = assemble(0, 2, lambda a, b: G.mul(a, b))
        d2 = assemble(0, 1, lambda a, b: a)
        return d0, d1, d2

    def coaction_holds(self):
        d0, d1, d2 = self.pullbacks()
        return d0 @ d2 == d1


def module_to_comodule(M):
    """T_M(delta_a (x) m) = delta_a (x) rho(a^-1) m for m in the fiber at r(a)."""
    G = M.groupoid
    return ComoduleMap(G, M.fibers, block_diag([M.rho[G.inv(a)] for a in G.arrows]))


def comodule_to_module(C):
    """Recover the action mu = (lambda (x) id) T^-1 q: rho(a) = (block of T at a)^-1."""
    if not C.is_function_linear():
        raise ValueError("comodule map is not C(G)-linear in the first leg")
    if not C.coaction_holds():
        raise ValueError("comodule map fails the coaction identity")
    G = C.groupoid
    rho = {}
    for a in G.arrows:
        blk = C.block(a)
        if blk.shape[0] != blk.shape[1]:
            raise ValueError(f"block at {a} is not square")
        rho[a] = inverse(blk) if blk.shape[0] else blk
    return GModule(G, C.fibers, rho).validate()


def regular_translation_matrix(G):
    """Pullback along t(a, b) = (a, ab): C(G x_{r,r} G) -> C(G x_{s,r} G)."""
    M = regular_module(G)
    C_r = [(a, c) for a in G.arrows for c in M.fibers[G.tgt(a)]]
    C_s = [(a, c) for a in G.arrows for c in M.fibers[G.src(a)]]
    col = {p: k for k, p in enumerate(C_r)}
    # (T f)(a, b) = f(a, ab): row (a, b) picks column (a, ab)
    ri = list(range(len(C_s)))
    ci = [col[(a, G.mul(a, b))] for a, b in C_s]
    return QMat.from_entries((len(C_s), len(C_r)), ri, ci, [1] * len(ri))


def integration_equivariance_holds(G, U, f):
    """lambda(chi_U * f) = chi_U . lambda(f) for a bisection U."""
    from .funcspace import integrate

    lhs = integrate(G, convolve(G, delta(G, U), f))
    lam = integrate(G, f)
    rhs = {x: Fraction(0) for x in G.units}
    for a in U:
        rhs[G.tgt(a)] += lam(G.src(a))
    return lhs == FinFn(G.units, rhs)


def orbit_count(G):
    return len(orbits(G))
