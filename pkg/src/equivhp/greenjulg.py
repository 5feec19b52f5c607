"""Orbit localisation, the averaging map kappa^G, the comparison map gamma^G and Green-Julg."""

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .exact import QMat, block, block_diag, inverse, matrix_rank, vstack
from .forms import FormModule
from .galgebras import CrossedProduct, ayd_algebra, trivial_algebra, trivial_ayd
from .gmodules import _entries, change_basis, direct_sum, is_equivariant, random_invertible, random_module
from .groupoid import loop_space, orbits, quotient_groupoid
from .homalg import DEFAULT_GUARD, hodge_level, hom_homology_ranks, invariant_homology, x_complex
from .tensoralg import quasifree_certificate


class UnknownOrbit(KeyError):
    pass


def orbit_rep(G, token):
    """Representative of the orbit containing the unit ``token``."""
    for o in orbits(G):
        if token in o.units:
            return o.rep
    raise UnknownOrbit(f"{token!r} is not a unit of the groupoid")


def _orbit_index(G):
    return {u: o.rep for o in orbits(G) for u in o.units}


# localisation -------------------------------------------------------------------------------


@dataclass
class OrbitLocalisation:
    """M / m_[x] M for a graded module: the fibers whose anchor lies in the orbit."""

    module: object
    orbit: str
    grades: tuple
    basis: list
    projection: QMat

    @property
    def dim(self):
        return len(self.basis)

    def localise_map(self, phi, target):
        """phi_[x] = P_N phi P_M^T (projections are coordinate selections)."""
        return target.projection @ phi @ self.projection.T


def localise(M, token):
    G = M.groupoid
    rep = orbit_rep(G, token)
    units = next(o.units for o in orbits(G) if o.rep == rep)
    off = M.offsets
    grades = tuple(g for g in M.grades if M.anchor(g) in units)
    basis = [(g, k) for g in grades for k in range(M.fiber_dim(g))]
    idx = [off[g] + k for g, k in basis]
    proj = QMat.identity(M.total_dim).select_rows(idx) if idx else QMat.zeros(0, M.total_dim)
    return OrbitLocalisation(M, rep, grades, basis, proj)


def _is_iso(m):
    return m.shape[0] == m.shape[1] and matrix_rank(m) == m.shape[0]


def orbit_linear(phi, M, N):
    """phi commutes with the orbit indicators: no block between different orbits."""
    G = M.groupoid
    where = _orbit_index(G)
    moff, noff = M.offsets, N.offsets
    for g in M.grades:
        for h in N.grades:
            if where[M.anchor(g)] == where[N.anchor(h)]:
                continue
            blk = phi[noff[h]:noff[h] + N.fiber_dim(h), moff[g]:moff[g] + M.fiber_dim(g)]
            if not blk.is_zero():
                return False
    return True


def local_to_global(phi, M, N):
    """Compare 'phi is an isomorphism' with 'every localisation of phi is one'."""
    G = M.groupoid
    per_orbit = {}
    for o in orbits(G):
        lm, ln = localise(M, o.rep), localise(N, o.rep)
        per_orbit[o.rep] = _is_iso(lm.localise_map(phi, ln))
    global_iso = _is_iso(phi)
    return {
        "orbit_linear": orbit_linear(phi, M, N),
        "isomorphism": global_iso,
        "orbits": per_orbit,
        "failed_orbits": [x for x, ok in per_orbit.items() if not ok],
        "agree": global_iso == all(per_orbit.values()),
    }


def random_short_exact_sequence(G, seed):
    """0 -> M' -> M -> M'' -> 0 with M = M' (+) M'' in a random equivariant basis."""
    rng = random.Random(seed)
    Mp, Mpp = random_module(G, rng.randrange(10 ** 6)), random_module(G, rng.randrange(10 ** 6))
    S = {x: random_invertible(Mp.fiber_dim(x) + Mpp.fiber_dim(x), rng) for x in G.units}
    M = change_basis(direct_sum(Mp, Mpp), S)
    f_blocks, g_blocks = [], []
    for x in G.units:
        p, q = Mp.fiber_dim(x), Mpp.fiber_dim(x)
        incl = vstack([QMat.identity(p), QMat.zeros(q, p)])
        proj = vstack([QMat.zeros(p, q), QMat.identity(q)]).T
        f_blocks.append(S[x] @ incl)
        g_blocks.append(proj @ inverse(S[x]))
    return Mp, M, Mpp, block_diag(f_blocks), block_diag(g_blocks)


def _exact_at_middle(f, g, dims):
    dp, dm, dpp = dims
    if (g @ f).shape[0] and (g @ f).shape[1] and not (g @ f).is_zero():
        return False
    rf = matrix_rank(f) if f.shape[0] and f.shape[1] else 0
    rg = matrix_rank(g) if g.shape[0] and g.shape[1] else 0
    return rf == dp and rg == dpp and dm == dp + dpp


def localisation_exactness(Mp, M, Mpp, f, g):
    """Exactness of the localised sequence at every orbit, plus the global sequence."""
    G = M.groupoid
    report = {"equivariant": is_equivariant(Mp, M, f) and is_equivariant(M, Mpp, g)}
    report["global"] = _exact_at_middle(f, g, (Mp.total_dim, M.total_dim, Mpp.total_dim))
    report["orbits"] = {}
    for o in orbits(G):
        lp, lm, lpp = localise(Mp, o.rep), localise(M, o.rep), localise(Mpp, o.rep)
        report["orbits"][o.rep] = _exact_at_middle(lp.localise_map(f, lm), lm.localise_map(g, lpp), (lp.dim, lm.dim, lpp.dim))
    report["passed"] = report["equivariant"] and report["global"] and all(report["orbits"].values())
    return report


# averaging on A(G) ---------------------------------------------------------------------------


def kappa_average(G, F):
    """The AYD morphism kappa^G(F): O_G -> A(G) as a (dim A(G)) x (#loops) matrix.

    The column of the loop b is the sum over c in G^{base b} of the left
    translate by c of the component of F over the loop c^-1 b c.
    """
    AG = ayd_algebra(G)
    loops, _ = loop_space(G)
    off = AG.offsets
    cols = []
    for b in loops:
        x = G.src(b)
        acc = QMat.zeros(AG.fiber_dim(b), 1)
        for c in G.range_fiber(x):
            b2 = G.conj(G.inv(c), b)
            part = F[off[b2]:off[b2] + AG.fiber_dim(b2), 0:1]
            acc = acc + AG.transport(c, b2) @ part
        cols.append(acc)
    rows, cs, vals = [], [], []
    for j, (b, col) in enumerate(zip(loops, cols)):
        for (i, _), v in _entries(col):
            rows.append(off[b] + i)
            cs.append(j)
            vals.append(v)
    return QMat.from_entries((AG.total_dim, len(loops)), rows, cs, vals)


def right_translation(G, u):
    """F -> F . delta_u on A(G): delta_(b, c) -> delta_(b, c u) when s(c) = r(u)."""
    AG = ayd_algebra(G)
    off = AG.offsets
    rows, cols = [], []
    for b in AG.grades:
        names = AG.fibers[b]
        pos = {c: k for k, c in enumerate(names)}
        for k, c in enumerate(names):
            cu = G.mul(c, u)
            if cu is not None and cu in pos:
                rows.append(off[b] + pos[cu])
                cols.append(off[b] + k)
    return QMat.from_entries((AG.total_dim, AG.total_dim), rows, cols, [1] * len(rows))


def orbit_indicator(G, M, rep):
    """Multiplication by the indicator of an orbit on a graded module."""
    where = _orbit_index(G)
    blocks = [QMat.identity(M.fiber_dim(g)) if where[M.anchor(g)] == rep else QMat.zeros(M.fiber_dim(g), M.fiber_dim(g)) for g in M.grades]
    return block_diag(blocks)


def kappa_report(G, F):
    """Equivariance, right D(G)-linearity and orbit-linearity of kappa^G at F."""
    AG, OG = ayd_algebra(G), trivial_ayd(G)
    K = kappa_average(G, F)
    report = {"equivariant": is_equivariant(OG, AG, K)}
    report["right_linear"] = all(kappa_average(G, right_translation(G, u) @ F) == right_translation(G, u) @ K for u in G.arrows)
    report["orbit_linear"] = all(
        kappa_average(G, orbit_indicator(G, AG, o.rep) @ F) == orbit_indicator(G, AG, o.rep) @ K for o in orbits(G)
    )
    report["passed"] = all(report.values())
    return report


# the comparison map gamma ---------------------------------------------------------------------


def _loop_offsets(F, n):
    off, acc = {}, 0
    for b in F.loops:
        off[b] = acc
        acc += F.block(b).dim(n)
    return off, acc


class GammaMap:
    """gamma: Omega^n(A x| G) over the orbit space -> Omega^n_G(A), and its average."""

    def __init__(self, A, cap=3):
        self.algebra = A
        G = self.groupoid = A.groupoid
        self.cp = CrossedProduct(A)
        self.cp_algebra = self.cp.as_algebra()
        self.source = FormModule(self.cp_algebra, cap=cap)
        self.target = FormModule(A, cap=cap)
        grade = self.cp.orbit_of_basis()
        self._fiber = {o: [k for k in range(self.cp.dim) if grade[k] == o] for o in self.source.loops}
        self._moves = {}
        self._raw, self._avg = {}, {}

    def _moved(self, path, i):
        """Entries of rho(path) e_i."""
        key = (path, i)
        if key not in self._moves:
            col = self.algebra.rho(path).select_cols([i])
            self._moves[key] = [(r, v) for (r, _), v in _entries(col)]
        return self._moves[key]

    def _chains(self, n, heads):
        """Composable arrow chains (head, a_1, ..., a_n) whose product is a loop."""
        G = self.groupoid
        out = []

        def extend(chain):
            if len(chain) == n + 1:
                arrows = [a for a in chain if a is not None]
                if not arrows:
                    return
                prod = G.compose(*arrows)
                if prod is not None and G.src(prod) == G.tgt(prod):
                    out.append(tuple(chain))
                return
            last = next((a for a in reversed(chain) if a is not None), None)
            for a in G.arrows:
                if last is None or G.src(last) == G.tgt(a):
                    extend(chain + [a])

        for h in heads:
            extend([h])
        return out

    def raw(self, n):
        """gamma on degree-n forms as a total matrix."""
        if n in self._raw:
            return self._raw[n]
        A, G, cp = self.algebra, self.groupoid, self.cp
        soff, sdim = _loop_offsets(self.source, n)
        toff, tdim = _loop_offsets(self.target, n)
        entries = {}
        where = _orbit_index(G)
        for o in self.source.loops:
            fiber = self._fiber[o]
            pos = {cp.basis[k]: t for t, k in enumerate(fiber)}
            Dq = len(fiber)
            heads = list(G.arrows) if n == 0 else [None] + list(G.arrows)
            for chain in self._chains(n, heads):
                head, digits = chain[0], chain[1:]
                arrows = [a for a in chain if a is not None]
                if where[G.tgt(arrows[0])] != o:
                    continue
                loop = G.compose(*arrows)
                x = G.src(loop)
                D = A.dim(x)
                # digit k is translated by head a_1 ... a_(k-1); a <1> head leaves the first digit alone
                prefix = G.unit_arrow(x) if head is None else head
                paths = []
                for a in digits:
                    paths.append(prefix)
                    prefix = G.mul(prefix, a)
                head_range = range(A.dim(G.tgt(head))) if head is not None else [None]
                digit_ranges = [range(A.dim(G.tgt(a))) for a in digits]
                for h in head_range:
                    if head is None:
                        src_head, tgt_head = 0, [(0, Fraction(1))]
                    else:
                        src_head = pos[(head, h)] + (1 if n else 0)
                        tgt_head = [(h + (1 if n else 0), Fraction(1))]
                    for idx in product(*digit_ranges):
                        col = src_head
                        for a, i in zip(digits, idx):
                            col = col * Dq + pos[(a, i)]
                        col += soff[o]
                        terms = tgt_head
                        for p, i in zip(paths, idx):
                            vec = self._moved(p, i)
                            terms = [(r * D + s, v * w) for r, v in terms for s, w in vec]
                        for r, v in terms:
                            key = (toff[loop] + r, col)
                            entries[key] = entries.get(key, 0) + v
        rows, cols, vals = [], [], []
        for (r, c), v in entries.items():
            if v:
                rows.append(r)
                cols.append(c)
                vals.append(v)
        self._raw[n] = QMat.from_entries((tdim, sdim), rows, cols, vals)
        return self._raw[n]

    def averaging(self, n):
        """omega_b -> sum over c in G^{base b} of c . omega_{c^-1 b c} on Omega^n_G(A)."""
        F, G = self.target, self.groupoid
        off, dim = _loop_offsets(F, n)
        rows = []
        for b in F.loops:
            row = []
            for b2 in F.loops:
                acc = QMat.zeros(F.block(b).dim(n), F.block(b2).dim(n))
                for c in G.range_fiber(G.src(b)):
                    if G.conj(G.inv(c), b) == b2:
                        acc = acc + F.transport(n, c)
                row.append(acc)
            rows.append(row)
        return block(rows) if rows else QMat.zeros(0, 0)

    def averaged(self, n):
        if n not in self._avg:
            self._avg[n] = self.averaging(n) @ self.raw(n)
        return self._avg[n]

    def identities(self, top=2):
        """Compatibility of raw and averaged gamma with b, d and B up to degree ``top``."""
        S, T = self.source, self.target
        out = {}
        for label, g in (("raw", self.raw), ("averaged", self.averaged)):
            out[label] = {
                "b": all(T.operator("b", n) @ g(n) == g(n - 1) @ S.operator("b", n) for n in range(1, top + 1)),
                "d": all(T.operator("d", n) @ g(n) == g(n + 1) @ S.operator("d", n) for n in range(top)),
                "B": all(T.operator("B", n) @ g(n) == g(n + 1) @ S.operator("B", n) for n in range(top)),
            }
        out["invariant_image"] = self._invariant_image(top)
        return out

    def _invariant_image(self, top):
        F, G = self.target, self.groupoid
        _, action = loop_space(G)
        for n in range(top + 1):
            off, _ = _loop_offsets(F, n)
            img = self.averaged(n)
            for (a, b), c in action.items():
                src = img[off[b]:off[b] + F.block(b).dim(n), :]
                dst = img[off[c]:off[c] + F.block(c).dim(n), :]
                if F.transport(n, a) @ src != dst:
                    return False
        return True


def gamma_map(A, n, averaged=True):
    g = GammaMap(A)
    return g.averaged(n) if averaged else g.raw(n)


# decompositions and Green-Julg ------------------------------------------------------------------


def _ranks(A, B, level, guard):
    if level is None:
        return hom_homology_ranks(x_complex(A, guard), x_complex(B, guard))
    FA, FB = FormModule(A, cap=level + 2), FormModule(B, cap=level + 2)
    return hom_homology_ranks(hodge_level(FA, level, guard), hodge_level(FB, level, guard))


def restrict_to_isotropy(A, x):
    """A_x as an algebra over the isotropy group at x."""
    return CrossedProduct(A).orbit_algebra(x).algebra


def discrete_decomposition(A, B, level=None, guard=DEFAULT_GUARD):
    """HP^G(A, B) against the sum over orbits of HP over the isotropy groups."""
    G = A.groupoid
    total = _ranks(A, B, level, guard)
    per = {o.rep: _ranks(restrict_to_isotropy(A, o.rep), restrict_to_isotropy(B, o.rep), level, guard) for o in orbits(G)}
    summed = tuple(sum(r[p] for r in per.values()) for p in (0, 1))
    return {
        "global": list(total),
        "orbits": {k: list(v) for k, v in per.items()},
        "sum": list(summed),
        "equal": tuple(total) == summed,
    }


def green_julg_verify(A, level=None, guard=DEFAULT_GUARD):
    """Both sides of Green-Julg globally and orbit by orbit, with quasifreeness certificates."""
    G = A.groupoid
    Q = quotient_groupoid(G)
    CA = CrossedProduct(A).as_algebra()
    certs = {}
    if level is None:
        for name, alg in (("A", A), ("trivial", trivial_algebra(G)), ("A x| G", CA)):
            certs[name] = quasifree_certificate(alg).feasible
    lhs = _ranks(trivial_algebra(G), A, level, guard)
    lhs_invariant = invariant_homology(x_complex(A, guard)) if level is None else None
    rhs = _ranks(trivial_algebra(Q), CA, level, guard)
    orbit_rows = {}
    for o in orbits(G):
        Ax = restrict_to_isotropy(A, o.rep)
        H = Ax.groupoid
        left = _ranks(trivial_algebra(H), Ax, level, guard)
        group_cp = CrossedProduct(Ax).as_algebra()
        right = _ranks(trivial_algebra(group_cp.groupoid), group_cp, level, guard)
        orbit_rows[o.rep] = {"lhs": list(left), "rhs": list(right), "equal": left == right}
    summed = tuple(sum(r["rhs"][p] for r in orbit_rows.values()) for p in (0, 1))
    report = {
        "lhs": list(lhs),
        "rhs": list(rhs),
        "equal": lhs == rhs,
        "orbits": orbit_rows,
        "orbit_sum": list(summed),
        "orbit_sum_equal": summed == tuple(rhs),
        "certificates": certs,
        "level": level,
    }
    if lhs_invariant is not None:
        report["lhs_invariant"] = list(lhs_invariant)
        report["invariant_equal"] = tuple(lhs_invariant) == tuple(lhs)
    report["passed"] = (
        report["equal"]
        and report["orbit_sum_equal"]
        and all(r["equal"] for r in orbit_rows.values())
        and all(certs.values())
        and report.get("invariant_equal", True)
    )
    return report
