"""G-algebras, pairings, smoothing algebras, crossed products and AYD modules."""

from fractions import Fraction

from .exact import QMat, block_diag, frac, kron
from .gmodules import GModule, GradedRep, _entries, regular_module, trivial_module
from .groupoid import loop_space, orbits, quotient_groupoid, restrict, validate_groupoid


def _perm_pairs(da, db):
    """Permutation taking index ((i,k),(j,l)) in (A(x)B)^(x)2 to ((i,j),(k,l)) in A^(x)2 (x) B^(x)2."""
    d = da * db
    targets = []
    for i in range(da):
        for k in range(db):
            for j in range(da):
                for l in range(db):
                    targets.append((i * da + j) * db * db + k * db + l)
    return QMat.permutation(targets, d * d)


class GAlgebra:
    """A G-module with a fiberwise bilinear product.

    ``mul[x]`` is a (D x D^2) matrix whose column ``i*D + j`` holds the
    coordinates of e_i e_j in the fiber over x.
    """

    def __init__(self, module, mul, name=None):
        self.module = module
        self.groupoid = module.groupoid
        self.mul = {}
        for x in self.groupoid.units:
            D = module.fiber_dim(x)
            m = mul.get(x)
            if m is None:
                m = QMat.zeros(D, D * D)
            elif not isinstance(m, QMat):
                m = structure_from_table(m, D)
            if m.shape != (D, D * D):
                raise ValueError(f"product at {x} has shape {m.shape}, expected {(D, D * D)}")
            self.mul[x] = m
        self.name = name

    def __repr__(self):
        return f"GAlgebra({self.name or '?'}, dims={[self.dim(x) for x in self.groupoid.units]})"

    def dim(self, x):
        return self.module.fiber_dim(x)

    def rho(self, a):
        return self.module.rho[a]

    def product(self, x, u, v):
        """Product of two coordinate vectors (QMat columns) in the fiber over x."""
        return self.mul[x] @ kron(u, v)

    def left(self, x, u):
        """Matrix of left multiplication by the column vector u."""
        D = self.dim(x)
        return self.mul[x] @ kron(u, QMat.identity(D))

    def right(self, x, u):
        D = self.dim(x)
        return self.mul[x] @ kron(QMat.identity(D), u)

    def associativity_holds(self):
        for x in self.groupoid.units:
            D = self.dim(x)
            M, I = self.mul[x], QMat.identity(D)
            if M @ kron(M, I) != M @ kron(I, M):
                return False
        return True

    def equivariance_holds(self):
        G = self.groupoid
        for a in G.arrows:
            r = self.rho(a)
            if r @ self.mul[G.src(a)] != self.mul[G.tgt(a)] @ kron(r, r):
                return False
        return True

    def validate(self):
        self.module.validate()
        if not self.associativity_holds():
            raise ValueError("product is not associative")
        if not self.equivariance_holds():
            raise ValueError("product is not equivariant")
        return self

    def unit_vector(self, x):
        """Coordinates of the fiber unit, or None when the fiber is not unital."""
        from .exact import vstack

        D = self.dim(x)
        if D == 0:
            return QMat.zeros(0, 1)
        I = QMat.identity(D)
        lhs, rhs = [], []
        for j in range(D):
            ej = I.select_cols([j])
            lhs += [self.right(x, ej), self.left(x, ej)]
            rhs += [ej, ej]
        return _solve(vstack(lhs), vstack(rhs))

    def to_json(self):
        out = self.module.to_json()
        out["mul"] = {x: table_from_structure(self.mul[x], self.dim(x)) for x in self.groupoid.units}
        return out


def _solve(A, b):
    """One solution of A u = b (b a single column) or None."""
    from .exact import hstack, nullspace

    n = A.shape[1]
    K = nullspace(hstack([A, -b]))
    for col in K.columns():
        t = col.get(n, 0)
        if t:
            return QMat.from_columns(n, [{i: v / t for i, v in col.items() if i != n}])
    return None


def structure_from_table(table, D):
    """Read mul[i][j] = coefficient list of e_i e_j into a (D x D^2) matrix."""
    cols = []
    if len(table) != D:
        raise ValueError("multiplication table has the wrong size")
    for i in range(D):
        for j in range(D):
            coeffs = table[i][j]
            if len(coeffs) != D:
                raise ValueError("multiplication table has the wrong size")
            cols.append({k: frac(c) for k, c in enumerate(coeffs)})
    return QMat.from_columns(D, cols)


def table_from_structure(M, D):
    from .exact import frac_str

    dense = M.to_fractions()
    return [[[frac_str(dense[k, i * D + j]) for k in range(D)] for j in range(D)] for i in range(D)]


# function algebras ------------------------------------------------------------------


class GSpace:
    """A finite left G-space: anchor map to units and an action table."""

    def __init__(self, G, points, anchor, action):
        self.groupoid = G
        self.points = tuple(str(p) for p in points)
        self.anchor = {str(p): str(u) for p, u in anchor.items()}
        self.action = {}
        for a, p, q in action:
            self.action[(str(a), str(p))] = str(q)
        self._check()

    def _check(self):
        G = self.groupoid
        for p in self.points:
            if self.anchor.get(p) not in G.unit_set:
                raise ValueError(f"point {p} is anchored at an unknown unit")
            self.action.setdefault((self.anchor[p], p), p)
        for a in G.arrows:
            for p in self.points:
                if self.anchor[p] != G.src(a):
                    continue
                q = self.action.get((a, p))
                if q is None:
                    raise ValueError(f"action of {a} on {p} is missing")
                if self.anchor[q] != G.tgt(a):
                    raise ValueError(f"action of {a} on {p} lands over the wrong unit")
        for a in G.arrows:
            if G.is_unit(a):
                for p in self.points:
                    if self.anchor[p] == a and self.action[(a, p)] != p:
                        raise ValueError(f"unit arrow {a} moves {p}")
            for b in G.source_fiber(G.tgt(a)):
                for p in self.points:
                    if self.anchor[p] == G.src(a):
                        if self.action[(b, self.action[(a, p)])] != self.action[(G.mul(b, a), p)]:
                            raise ValueError(f"action is not compatible with the product {b}.{a} at {p}")

    def over(self, x):
        return [p for p in self.points if self.anchor[p] == x]

    def act(self, a, p):
        return self.action[(a, p)]


def unit_space(G):
    return GSpace(G, G.units, {x: x for x in G.units}, [(a, G.src(a), G.tgt(a)) for a in G.arrows])


def adjoint_space(G):
    loops, action = loop_space(G)
    return GSpace(G, loops, {b: G.src(b) for b in loops}, [(a, b, c) for (a, b), c in action.items()])


def function_algebra(G, space, name=None):
    """C(X) with pointwise product; alpha moves delta_p to delta_{alpha.p}."""
    if isinstance(space, dict):
        space = GSpace(G, space["points"], space["anchor"], space["action"])
    fibers = {x: space.over(x) for x in G.units}
    rho = {}
    for a in G.arrows:
        src, tgt = fibers[G.src(a)], fibers[G.tgt(a)]
        pos = {p: k for k, p in enumerate(tgt)}
        rho[a] = QMat.permutation([pos[space.act(a, p)] for p in src], len(tgt))
    mul = {}
    for x in G.units:
        D = len(fibers[x])
        mul[x] = QMat.from_entries((D, D * D), list(range(D)), [i * D + i for i in range(D)], [1] * D)
    return GAlgebra(GModule(G, fibers, rho), mul, name=name or "C(X)")


def trivial_algebra(G):
    return function_algebra(G, unit_space(G), name="trivial")


def og_algebra(G):
    return function_algebra(G, adjoint_space(G), name="O_G")


def zero_algebra(G):
    return GAlgebra(GModule(G, {x: [] for x in G.units}, {a: QMat.zeros(0, 0) for a in G.arrows}), {}, name="0")


def unitarise(A):
    """A+ = C(G0) (+) A fiberwise, the adjoined unit listed first."""
    G = A.groupoid
    fibers = {x: ["1"] + list(A.module.fibers[x]) for x in G.units}
    rho = {a: block_diag([QMat.identity(1), A.rho(a)]) for a in G.arrows}
    mul = {}
    for x in G.units:
        D = A.dim(x)
        E = D + 1
        ri, ci, vs = [0], [0], [1]
        for i in range(1, E):
            ri += [i, i]
            ci += [0 * E + i, i * E + 0]
            vs += [1, 1]
        for (k, col), v in _entries(A.mul[x]):
            i, j = divmod(col, D)
            ri.append(k + 1)
            ci.append((i + 1) * E + (j + 1))
            vs.append(v)
        mul[x] = QMat.from_entries((E, E * E), ri, ci, vs)
    return GAlgebra(GModule(G, fibers, rho), mul, name=f"{A.name}+")


def tensor_product(A, B):
    """Fiberwise tensor product with the diagonal action."""
    from .gmodules import tensor_diagonal

    G = A.groupoid
    mod = tensor_diagonal(A.module, B.module)
    mul = {}
    for x in G.units:
        da, db = A.dim(x), B.dim(x)
        mul[x] = kron(A.mul[x], B.mul[x]) @ _perm_pairs(da, db)
    out = GAlgebra(mod, mul, name=f"{A.name}(x){B.name}")
    out.factors = (A, B)
    return out


def direct_product(A, B):
    from .gmodules import direct_sum

    G = A.groupoid
    mod = direct_sum(A.module, B.module)
    mul = {}
    for x in G.units:
        da, db = A.dim(x), B.dim(x)
        D = da + db
        ri, ci, vs = [], [], []
        for (k, col), v in _entries(A.mul[x]):
            i, j = divmod(col, da)
            ri.append(k)
            ci.append(i * D + j)
            vs.append(v)
        for (k, col), v in _entries(B.mul[x]):
            i, j = divmod(col, db)
            ri.append(da + k)
            ci.append((da + i) * D + da + j)
            vs.append(v)
        mul[x] = QMat.from_entries((D, D * D), ri, ci, vs)
    return GAlgebra(mod, mul, name=f"{A.name}x{B.name}")


def isotropy_algebra(G):
    """Group algebras of the isotropy groups, arrows acting by conjugation.

    For a group this is D(G) with the adjoint action.
    """
    fibers = {x: list(G.isotropy(x)) for x in G.units}
    pos = {x: {h: k for k, h in enumerate(fibers[x])} for x in G.units}
    rho = {}
    for a in G.arrows:
        src, tgt = G.src(a), G.tgt(a)
        rho[a] = QMat.permutation([pos[tgt][G.conj(a, h)] for h in fibers[src]], len(fibers[tgt]))
    mul = {}
    for x in G.units:
        D = len(fibers[x])
        ri, ci = [], []
        for i, g in enumerate(fibers[x]):
            for j, h in enumerate(fibers[x]):
                ri.append(pos[x][G.mul(g, h)])
                ci.append(i * D + j)
        mul[x] = QMat.from_entries((D, D * D), ri, ci, [1] * len(ri))
    return GAlgebra(GModule(G, fibers, rho), mul, name="D(iso)")


def fiber_algebra(G, table, name=None):
    """The same finite-dimensional algebra on every fiber, with trivial action."""
    D = len(table)
    M = structure_from_table(table, D)
    fibers = {x: [f"e{i}" for i in range(D)] for x in G.units}
    rho = {a: QMat.identity(D) for a in G.arrows}
    return GAlgebra(GModule(G, fibers, rho), {x: M for x in G.units}, name=name)


def dual_numbers(G):
    """Q[t]/(t^2) on each fiber, basis (1, t), trivial action."""
    return fiber_algebra(G, [[[1, 0], [0, 1]], [[0, 1], [0, 0]]], name="dual")


def matrix_units(n):
    """Multiplication table of M_n in the basis E_ij (index i*n + j)."""
    D = n * n
    table = [[[0] * D for _ in range(D)] for _ in range(D)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                table[i * n + j][j * n + k][i * n + k] = 1
    return table


def upper_triangular(G, n=2):
    """Upper-triangular n x n matrices; basis E_ij with i <= j."""
    idx = [(i, j) for i in range(n) for j in range(i, n)]
    pos = {p: k for k, p in enumerate(idx)}
    D = len(idx)
    table = [[[0] * D for _ in range(D)] for _ in range(D)]
    for (i, j) in idx:
        for (k, l) in idx:
            if j == k:
                table[pos[(i, j)]][pos[(k, l)]][pos[(i, l)]] = 1
    return fiber_algebra(G, table, name=f"T{n}")


# pairings and smoothing algebras --------------------------------------------------------


class Pairing:
    """A bilinear form per unit: h(e, f) = e^T gram[x] f on the fiber over x."""

    def __init__(self, module, gram):
        self.module = module
        self.gram = {x: gram[x] if isinstance(gram[x], QMat) else QMat.from_dense(gram[x]) for x in module.groupoid.units}

    def __call__(self, x, e, f):
        return (e.T @ self.gram[x] @ f).entry(0, 0) if e.shape[0] else Fraction(0)

    def equivariance_holds(self):
        G = self.module.groupoid
        return all(
            self.module.rho[a].T @ self.gram[G.tgt(a)] @ self.module.rho[a] == self.gram[G.src(a)] for a in G.arrows
        )


def regular_pairing(G):
    """lambda(f, g)(x) = sum over G^x of f g, on the regular module."""
    M = regular_module(G)
    return Pairing(M, {x: QMat.identity(M.fiber_dim(x)) for x in G.units})


def standard_pairing(M):
    return Pairing(M, {x: QMat.identity(M.fiber_dim(x)) for x in M.groupoid.units})


def smoothing_algebra(E, h=None, name=None):
    """K(E) = E (x) E with (e1 (x) f1)(e2 (x) f2) = h(f1, e2) e1 (x) f2."""
    from .gmodules import tensor_diagonal

    if h is None:
        h = standard_pairing(E)
    if not h.equivariance_holds():
        raise ValueError("pairing is not equivariant")
    G = E.groupoid
    mod = tensor_diagonal(E, E)
    mul = {}
    for x in G.units:
        n = E.fiber_dim(x)
        D = n * n
        H = h.gram[x]
        ri, ci, vs = [], [], []
        for (f1, e2), c in _entries(H):
            for e1 in range(n):
                for f2 in range(n):
                    ri.append(e1 * n + f2)
                    ci.append((e1 * n + f1) * D + e2 * n + f2)
                    vs.append(c)
        mul[x] = QMat.from_entries((D, D * D), ri, ci, vs)
    return GAlgebra(mod, mul, name=name or "K(E)")


def kg_algebra(G):
    return smoothing_algebra(regular_module(G), regular_pairing(G), name="K_G")


# crossed products ---------------------------------------------------------------------------


class CrossedProduct:
    """A x| G on the basis {e_i (x) delta_a : e_i a basis vector of A over r(a)}."""

    def __init__(self, A):
        self.algebra = A
        G = self.groupoid = A.groupoid
        self.basis = [(a, i) for a in G.arrows for i in range(A.dim(G.tgt(a)))]
        self.index = {b: k for k, b in enumerate(self.basis)}
        self._structure = None

    @property
    def dim(self):
        return len(self.basis)

    def multiply_basis(self, p, q):
        """(e_i (x) d_a)(e_j (x) d_b) = e_i (a.e_j) (x) d_{ab}; returns {index: coeff}."""
        (a, i), (b, j) = p, q
        G, A = self.groupoid, self.algebra
        ab = G.mul(a, b)
        if ab is None:
            return {}
        x = G.tgt(a)
        D = A.dim(x)
        moved = A.rho(a).select_cols([j])
        ei = QMat.from_entries((D, 1), [i], [0], [1])
        prod = A.product(x, ei, moved)
        return {self.index[(ab, k)]: v for (k, _), v in _entries(prod)}

    def structure(self):
        if self._structure is None:
            n = self.dim
            cols = []
            for p in self.basis:
                for q in self.basis:
                    cols.append(self.multiply_basis(p, q))
            self._structure = QMat.from_columns(n, cols)
        return self._structure

    def associativity_holds(self):
        M = self.structure()
        I = QMat.identity(self.dim)
        return M @ kron(M, I) == M @ kron(I, M)

    def i_A(self, x, i):
        return {self.index[(x, i)]: Fraction(1)}

    def i_G(self, a):
        """delta_a as a multiplier: the element 1 (x) delta_a when A is unital at r(a)."""
        A = self.algebra
        u = A.unit_vector(self.groupoid.tgt(a))
        if u is None:
            raise ValueError("A is not unital; delta_a acts only as a multiplier")
        return {self.index[(a, k)]: v for (k, _), v in _entries(u)}

    def orbit_of_basis(self):
        """Orbit representative of r(a) for each basis element (the C(G\\G0)-grading)."""
        reps = {}
        for o in orbits(self.groupoid):
            for u in o.units:
                reps[u] = o.rep
        return [reps[self.groupoid.tgt(a)] for a, _ in self.basis]

    def as_algebra(self):
        """A x| G as an algebra over the quotient groupoid (fibers = orbits)."""
        Q = quotient_groupoid(self.groupoid)
        grade = self.orbit_of_basis()
        fibers = {o: [k for k in range(self.dim) if grade[k] == o] for o in Q.units}
        M = self.structure()
        mul = {}
        for o in Q.units:
            idx = fibers[o]
            D = len(idx)
            cols = [i * self.dim + j for i in idx for j in idx]
            mul[o] = M.select_rows(idx).select_cols(cols)
        names = {o: [f"{self.basis[k][1]}|{self.basis[k][0]}" for k in fibers[o]] for o in Q.units}
        mod = GModule(Q, names, {o: QMat.identity(len(fibers[o])) for o in Q.units})
        return GAlgebra(mod, mul, name=f"{self.algebra.name}xG")

    def orbit_algebra(self, rep):
        """A_x x| G^x_x for the isotropy group at an orbit representative."""
        H = restrict(self.groupoid, [rep])
        A = self.algebra
        fibers = {rep: list(A.module.fibers[rep])}
        rho = {a: A.rho(a) for a in H.arrows}
        sub = GAlgebra(GModule(H, fibers, rho), {rep: A.mul[rep]}, name=A.name)
        return CrossedProduct(sub)


def crossed_product(A):
    return CrossedProduct(A)


class CovarianceError(ValueError):
    def __init__(self, message, witness):
        super().__init__(f"{message}: {witness}")
        self.witness = witness


def integrate_covariant(A, phi, pi):
    """psi(a (x) delta_a) = phi(a) pi(delta_a) for a covariant pair.

    ``phi[(x, i)]`` is the operator of the basis vector e_i over x and
    ``pi[a]`` the operator of delta_a.  Returns {basis element: matrix}.
    """
    G = A.groupoid
    for a in G.arrows:
        x, y = G.src(a), G.tgt(a)
        for i in range(A.dim(x)):
            moved = A.rho(a).select_cols([i])
            lhs = None
            for (k, _), v in _entries(moved):
                term = phi[(y, k)].scale(v)
                lhs = term if lhs is None else lhs + term
            if lhs is None:
                lhs = QMat.zeros(*pi[a].shape)
            if lhs @ pi[a] != pi[a] @ phi[(x, i)]:
                raise CovarianceError("pair is not covariant", (a, (x, i)))
    cp = CrossedProduct(A)
    return {b: phi[(G.tgt(b[0]), b[1])] @ pi[b[0]] for b in cp.basis}


def representation_is_multiplicative(cp, psi):
    """psi(p) psi(q) = psi(pq) on all basis pairs."""
    for p in cp.basis:
        for q in cp.basis:
            prod = cp.multiply_basis(p, q)
            lhs = psi[p] @ psi[q]
            rhs = QMat.zeros(*lhs.shape)
            for k, v in prod.items():
                rhs = rhs + psi[cp.basis[k]].scale(v)
            if lhs != rhs:
                return False
    return True


def regular_covariant_pair(G, x=None):
    """A = trivial algebra, V = regular fiber at x: phi by indicators of ranges, pi by translation."""
    from .gmodules import regular_module

    R = regular_module(G)
    A = trivial_algebra(G)
    n, off = R.total_dim, R.offsets
    phi = {}
    for y in G.units:
        d = R.fiber_dim(y)
        phi[(y, 0)] = QMat.from_entries((n, n), range(off[y], off[y] + d), range(off[y], off[y] + d), [1] * d)
    pi = {}
    for a in G.arrows:
        rows, cols, vals = [], [], []
        for (i, j), v in _entries(R.rho[a]):
            rows.append(off[G.tgt(a)] + i)
            cols.append(off[G.src(a)] + j)
            vals.append(v)
        pi[a] = QMat.from_entries((n, n), rows, cols, vals)
    return A, phi, pi


def unit_action_central(A):
    """Indicators of units act centrally: the product never mixes fibers, and each fiber is closed."""
    return all(m.shape[0] == A.dim(x) for x, m in A.mul.items())


# AYD modules ------------------------------------------------------------------------------------


class AYDModule(GradedRep):
    """Loop-graded module: fiber per loop, transport a: fiber(b) -> fiber(a b a^-1)."""

    def __init__(self, G, fibers, transport):
        self.groupoid = G
        self.grades = loop_space(G)[0]
        self.fibers = {b: list(fibers.get(b, [])) for b in self.grades}
        self._transport = transport

    def anchor(self, b):
        return self.groupoid.src(b)

    def move(self, a, b):
        return loop_space(self.groupoid)[1][(a, b)]

    def fiber_dim(self, b):
        return len(self.fibers[b])

    def transport(self, a, b):
        return self._transport(a, b)

    def twist(self, b):
        return self.transport(self.groupoid.inv(b), b)

    def validate(self):
        bad = self.check_functorial()
        if bad:
            raise ValueError(f"not an AYD module: first failure {bad[0]}")
        return self


def ayd_from_module(M):
    """O_G (x) M: the fiber over a loop b is M at the base of b; arrows act by rho_M."""
    G = M.groupoid
    loops = loop_space(G)[0]
    return AYDModule(G, {b: M.fibers[G.src(b)] for b in loops}, lambda a, b: M.rho[a])


def ayd_algebra(G):
    """A(G) = O_G (x) D(G), basis delta_(b, c) with c in G^{base b}."""
    return ayd_from_module(regular_module(G))


def ayd_canonical_T(N):
    """Block-diagonal twist: rho(b^-1) on the fiber over each loop b."""
    return block_diag([N.twist(b) for b in N.grades])


def trivial_ayd(G):
    """O_G[0] as an AYD module: one-dimensional fiber over every loop."""
    return ayd_from_module(trivial_module(G))
