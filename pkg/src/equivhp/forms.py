"""Equivariant differential forms and the operators d, b, kappa, B and T.

Forms live over loops.  Over a loop with base x and twist sigma = rho(loop^-1)
on the fiber algebra A_x of dimension D, degree n has the basis

    n = 0 :  e_i                                      (dimension D)
    n >= 1:  <a0> da1 ... dan,  a0 in {<1>, e_0..e_{D-1}}, ai in {e_0..}

indexed by ``a0 * D**n + (a1 ... an in base D)`` with ``a0 = 0`` meaning the
adjoined unit.  The first ``D**n`` indices therefore span the image of d.
Every operator is block diagonal over loops, so all work happens per loop.
"""

from fractions import Fraction

import numpy as np

from .exact import QMat, block_diag, kron, vstack
from .groupoid import loop_space


class FormBlockError(ValueError):
    pass


def _perm(targets, nrows):
    return QMat.permutation(np.asarray(targets, dtype=np.int64), nrows)


def plus_structure(M, D):
    """Structure matrix of A+ (unit first) from that of A."""
    E = D + 1
    ri, ci, vs = [0], [0], [1]
    for i in range(1, E):
        ri += [i, i]
        ci += [i, i * E]
        vs += [1, 1]
    coo = M.num.tocoo()
    for k, col, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
        i, j = divmod(col, D)
        ri.append(k + 1)
        ci.append((i + 1) * E + j + 1)
        vs.append(Fraction(v, M.den))
    return QMat.from_entries((E, E * E), ri, ci, vs)


class FiberForms:
    """Untwisted algebraic pieces of Omega(A) for one fiber algebra."""

    def __init__(self, M, D):
        self.M = M
        self.D = D
        self.Mplus = plus_structure(M, D)
        I = QMat.identity(D)
        self.embed = QMat.from_entries((D + 1, D), list(range(1, D + 1)), list(range(D)), [1] * D)
        self.restrict = self.embed.T
        # A+ (x) A -> A
        self.head_mul = self.restrict @ self.Mplus @ kron(QMat.identity(D + 1), self.embed)
        self._right = {}
        self._prod = {}
        del I

    def dim(self, n):
        return self.D if n == 0 else (self.D + 1) * self.D ** n

    def right_action(self, p):
        """Omega^p (x) A -> Omega^p, (w, a) -> w.a by the Leibniz rule."""
        if p in self._right:
            return self._right[p]
        D, M = self.D, self.M
        if p == 0:
            out = M
        else:
            out = kron(QMat.identity((D + 1) * D ** (p - 1)), M)
            for j in range(1, p):
                sign = (-1) ** (p - j)
                out = out + kron(QMat.identity((D + 1) * D ** (j - 1)), M, QMat.identity(D ** (p - j))).scale(sign)
            first = kron(self.embed @ self.head_mul, QMat.identity(D ** p))
            out = out + first.scale((-1) ** p)
        self._right[p] = out
        return out

    def right_plus(self, p):
        """Omega^p (x) A+ -> Omega^p (or A+ for p = 0): the adjoined unit acts as identity."""
        D = self.D
        R = self.right_action(p)
        dimp = self.dim(p)
        if p == 0:
            # A (x) A+ -> A+
            lead = QMat.from_entries((D + 1, D * (D + 1)), [i + 1 for i in range(D)], [i * (D + 1) for i in range(D)], [1] * D)
            rest = self.embed @ R
            cols = [i * (D + 1) + j + 1 for i in range(D) for j in range(D)]
            return lead + _scatter_cols(rest, cols, D * (D + 1))
        lead = QMat.from_entries((dimp, dimp * (D + 1)), list(range(dimp)), [i * (D + 1) for i in range(dimp)], [1] * dimp)
        cols = [i * (D + 1) + j + 1 for i in range(dimp) for j in range(D)]
        return lead + _scatter_cols(R, cols, dimp * (D + 1))

    def product(self, m, k):
        """Omega^m (x) Omega^k -> Omega^{m+k}; column index i * dim(k) + j."""
        key = (m, k)
        if key in self._prod:
            return self._prod[key]
        D = self.D
        if k == 0:
            out = self.right_action(m)
        elif m == 0:
            out = kron(self.right_plus(0), QMat.identity(D ** k))
        else:
            out = kron(self.right_plus(m), QMat.identity(D ** k))
        self._prod[key] = out
        return out

    def d(self, n):
        D = self.D
        cols = self.dim(n)
        if n == 0:
            return QMat.from_entries(((D + 1) * D, D), list(range(D)), list(range(D)), [1] * D)
        shift = D ** n
        return QMat.from_int_arrays(
            ((D + 1) * D ** (n + 1), cols), np.arange(cols - shift), np.arange(shift, cols), np.ones(cols - shift)
        )


def _scatter_cols(m, cols, ncols):
    """Place the columns of m at the given positions of a wider matrix."""
    P = QMat.from_entries((m.shape[1], ncols), list(range(m.shape[1])), cols, [1] * m.shape[1])
    return m @ P


class FormBlock:
    """Operators on Omega^0..Omega^cap over one loop."""

    def __init__(self, fiber, sigma, cap):
        if cap < 2:
            raise FormBlockError("cap must be at least 2")
        self.fiber = fiber
        self.D = fiber.D
        self.sigma = sigma
        self.cap = cap
        D = self.D
        self.sigma_plus = block_diag([QMat.identity(1), sigma])
        # s (x) a0 -> sigma(s) a0, from A (x) A+ to A
        self.twist_mul = fiber.restrict @ fiber.Mplus @ kron(fiber.embed @ sigma, QMat.identity(D + 1))
        self._cache = {}

    def dim(self, n):
        return self.fiber.dim(n)

    def _memo(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    # elementary operators ----------------------------------------------------
    def d(self, n):
        if n >= self.cap:
            raise FormBlockError(f"d out of degree {n} leaves the cap")
        return self._memo(("d", n), lambda: self.fiber.d(n))

    def apply_d(self, n, X):
        D = self.D
        rows = self.dim(n + 1)
        if n == 0:
            top = X
        else:
            top = X.select_rows(range(D ** n, self.dim(n)))
        pad = rows - top.shape[0]
        return vstack([top, QMat.zeros(pad, X.shape[1])]) if pad else top

    def T(self, n):
        def build():
            if n == 0:
                return self.sigma
            return kron(self.sigma_plus, *([self.sigma] * n))

        return self._memo(("T", n), build)

    def _b(self, n, head):
        f = self.fiber
        D, M = self.D, f.M
        k = head.shape[1]
        head_A = kron(head, QMat.identity(D))
        if n == 1:
            out = f.head_mul @ head_A
        else:
            out = kron(f.embed @ f.head_mul @ head_A, QMat.identity(D ** (n - 1)))
        for j in range(1, n):
            term = kron(head, QMat.identity(D ** (j - 1)), M, QMat.identity(D ** (n - j - 1)))
            out = out + term.scale((-1) ** j)
        idx = np.arange(k * D ** n, dtype=np.int64)
        h, rest = np.divmod(idx, D ** n)
        an, mid = rest % D, rest // D
        cyc = _perm(an * k * D ** (n - 1) + h * D ** (n - 1) + mid, k * D ** n)
        L = self.twist_mul @ kron(QMat.identity(D), head)
        if n > 1:
            L = kron(f.embed @ L, QMat.identity(D ** (n - 1)))
        return out + (L @ cyc).scale((-1) ** n)

    def b(self, n):
        """Twisted Hochschild boundary Omega^n -> Omega^{n-1} (full, n < cap)."""
        if n < 1:
            raise FormBlockError("b is defined from degree 1")
        if n >= self.cap:
            raise FormBlockError("full b at the top degree is not materialised; use b_one")
        return self._memo(("b", n), lambda: self._b(n, QMat.identity(self.D + 1)))

    def b_one(self, n):
        """b restricted to the span of the <1> da1...dan (the image of d)."""
        head = QMat.from_entries((self.D + 1, 1), [0], [0], [1])
        return self._memo(("b1", n), lambda: self._b(n, head))

    def kappa_apply(self, n, X):
        """kappa = 1 - bd - db on Omega^n applied to the columns of X."""
        D = self.D
        if X.is_zero():
            return X
        if n < self.cap:
            tail = X if n == 0 else X.select_rows(range(D ** n, self.dim(n)))
            out = X - self.b_one(n + 1) @ tail
            if n >= 1:
                out = out - self.apply_d(n - 1, self.b(n) @ X)
            return out
        # top degree: only on the image of d, where bd vanishes
        body = X.select_rows(range(D ** n, self.dim(n)))
        if not body.is_zero():
            raise FormBlockError("kappa at the top degree is only available on the image of d")
        one = X.select_rows(range(D ** n))
        return X - self.apply_d(n - 1, self.b_one(n) @ one)

    def kappa(self, n):
        if n >= self.cap:
            raise FormBlockError("full kappa at the top degree is not materialised")
        return self._memo(("k", n), lambda: self.kappa_apply(n, QMat.identity(self.dim(n))))

    def kappa_power(self, n, j):
        def build():
            if j == 0:
                return QMat.identity(self.dim(n))
            return self.kappa(n) @ self.kappa_power(n, j - 1)

        return self._memo(("kp", n, j), build)

    def kappa_d(self, n, j):
        """kappa^j d on Omega^n (into Omega^{n+1})."""

        def build():
            if j == 0:
                return self.d(n)
            return self.kappa_apply(n + 1, self.kappa_d(n, j - 1))

        return self._memo(("kd", n, j), build)

    def B(self, n):
        """Connes operator sum_{j=0}^{n} kappa^j d on Omega^n."""

        def build():
            out = self.kappa_d(n, 0)
            for j in range(1, n + 1):
                out = out + self.kappa_d(n, j)
            return out

        return self._memo(("B", n), build)

    def B_apply(self, n, X):
        Y = self.apply_d(n, X)
        out = Y
        for _ in range(n):
            Y = self.kappa_apply(n + 1, Y)
            out = out + Y
        return out

    # relations -----------------------------------------------------------------
    def relations(self, n):
        """Name -> (lhs, rhs) for the paramixed identities at degree n (n <= cap - 2)."""
        if n > self.cap - 2:
            raise FormBlockError(f"degree {n} needs cap >= {n + 2}")
        I = QMat.identity(self.dim(n))
        T = self.T(n)
        Kn = self.kappa(n)
        rel = {}
        rel["d^2=0"] = (self.apply_d(n + 1, self.d(n)), QMat.zeros(self.dim(n + 2), self.dim(n)))
        rel["kappa^{n+1} d = T d"] = (self.kappa_d(n, n + 1), self.T(n + 1) @ self.d(n))
        rel["kappa^n = T + b kappa^n d"] = (self.kappa_power(n, n), T + self.b(n + 1) @ self.kappa_d(n, n))
        if n >= 1:
            bn = self.b(n)
            rel["b kappa^n = b T"] = (bn @ self.kappa_power(n, n), bn @ T)
            rel["kappa^{n+1} = (1 - db) T"] = (self.kappa_power(n, n + 1), (I - self.apply_d(n - 1, bn)) @ T)
        else:
            rel["kappa^{n+1} = (1 - db) T"] = (self.kappa_power(n, 1), T)
        rel["(kappa^{n+1}-T)(kappa^n-T) = 0"] = (
            (self.kappa_power(n, n + 1) - T) @ (self.kappa_power(n, n) - T),
            QMat.zeros(*I.shape),
        )
        bB = self.b(n + 1) @ self.B(n)
        if n >= 1:
            bB = bB + self.B(n - 1) @ self.b(n)
        rel["Bb + bB = 1 - T"] = (bB, I - T)
        if n >= 1:
            rel["b^2 = 0"] = (self.b(n) @ self.b(n + 1), QMat.zeros(self.dim(n - 1), self.dim(n + 1)))
        rel["B^2 = 0"] = (self.B_apply(n + 1, self.B(n)), QMat.zeros(self.dim(n + 2), self.dim(n)))
        rel["kappa d = d kappa"] = (self.kappa_d(n, 1), self.d(n) @ Kn)
        rel["T d = d T"] = (self.T(n + 1) @ self.d(n), self.d(n) @ T)
        if n >= 1:
            rel["T b = b T"] = (self.T(n - 1) @ self.b(n), self.b(n) @ T)
        rel["T kappa = kappa T"] = (T @ Kn, Kn @ T)
        rel["T B = B T"] = (self.T(n + 1) @ self.B(n), self.B(n) @ T)
        return rel


def first_difference(lhs, rhs):
    """Column index of the first mismatch, or None when equal."""
    if lhs == rhs:
        return None
    diff = (lhs - rhs).num.tocsc()
    nz = np.flatnonzero(np.diff(diff.indptr))
    return int(nz[0]) if len(nz) else None


def basis_label(D, n, index):
    if n == 0:
        return f"e{index}"
    a0, rest = divmod(index, D ** n)
    digits = []
    for _ in range(n):
        rest, r = divmod(rest, D)
        digits.append(r)
    head = "<1>" if a0 == 0 else f"e{a0 - 1}"
    return head + "".join(f" de{d}" for d in reversed(digits))


class FormModule:
    """Omega_G(A) up to degree ``cap`` as blocks over the loops of G."""

    def __init__(self, A, cap=6):
        if cap < 2:
            raise FormBlockError("cap must be at least 2")
        self.algebra = A
        self.groupoid = G = A.groupoid
        self.cap = cap
        self.loops = loop_space(G)[0]
        self._fibers = {x: FiberForms(A.mul[x], A.dim(x)) for x in G.units}
        self._blocks = {}
        self._shared = {}
        for b in self.loops:
            x = G.src(b)
            sigma = A.rho(G.inv(b))
            key = (x, tuple(map(tuple, sigma.to_lists())))
            if key not in self._shared:
                self._shared[key] = FormBlock(self._fibers[x], sigma, cap)
            self._blocks[b] = self._shared[key]

    def block(self, loop):
        return self._blocks[loop]

    def fiber(self, x):
        return self._fibers[x]

    def base(self, loop):
        return self.groupoid.src(loop)

    def dim(self, n):
        return sum(self._blocks[b].dim(n) for b in self.loops)

    def distinct_blocks(self):
        """(representative loop, block, loops sharing it)."""
        seen = {}
        for b in self.loops:
            blk = self._blocks[b]
            seen.setdefault(id(blk), [b, blk, []])[2].append(b)
        return [tuple(v) for v in seen.values()]

    def transport(self, n, a):
        """Action of an arrow on degree-n forms: kron(rho+, rho, ..., rho)."""
        A = self.algebra
        r = A.rho(a)
        if n == 0:
            return r
        return kron(block_diag([QMat.identity(1), r]), *([r] * n))

    def operator(self, name, n):
        """Total (block-diagonal over loops) matrix of an operator at degree n."""
        getter = {
            "d": lambda blk: blk.d(n),
            "b": lambda blk: blk.b(n),
            "kappa": lambda blk: blk.kappa(n),
            "B": lambda blk: blk.B(n),
            "T": lambda blk: blk.T(n),
        }[name]
        return block_diag([getter(self._blocks[b]) for b in self.loops])


def build_forms(A, cap=6):
    return FormModule(A, cap)


def operator(F, name, n):
    return F.operator(name, n)


def paramixed_report(F, max_degree=None, check_transport=True):
    """Check the paramixed relations degree by degree up to cap - 2.

    Returns ``{"passed": bool, "relations": {name: bool}, "failure": witness or None}``.
    """
    top = F.cap - 2 if max_degree is None else min(max_degree, F.cap - 2)
    results, failure = {}, None
    for loop, blk, members in F.distinct_blocks():
        for n in range(top + 1):
            for name, (lhs, rhs) in blk.relations(n).items():
                col = first_difference(lhs, rhs)
                ok = col is None
                results[name] = results.get(name, True) and ok
                if not ok and failure is None:
                    failure = {
                        "relation": name,
                        "degree": n,
                        "loop": loop,
                        "basis": basis_label(blk.D, n, col),
                    }
    if check_transport:
        ok, witness = transport_compatible(F, min(top + 1, 3))
        results["operators commute with transport"] = ok
        if not ok and failure is None:
            failure = witness
    return {"passed": all(results.values()), "relations": results, "failure": failure}


def transport_compatible(F, top):
    """d and b intertwine the arrow actions between loop fibers up to degree ``top``."""
    G = F.groupoid
    _, action = loop_space(G)
    for (a, b), c in action.items():
        src, dst = F.block(b), F.block(c)
        for n in range(top):
            if F.transport(n + 1, a) @ src.d(n) != dst.d(n) @ F.transport(n, a):
                return False, {"relation": "d equivariance", "degree": n, "arrow": a, "loop": b}
            if n >= 1 and n < F.cap and F.transport(n - 1, a) @ src.b(n) != dst.b(n) @ F.transport(n, a):
                return False, {"relation": "b equivariance", "degree": n, "arrow": a, "loop": b}
    return True, None
