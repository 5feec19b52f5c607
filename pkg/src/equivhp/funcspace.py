"""Exact function spaces on finite sets: pullback, integration, balanced tensors."""

from fractions import Fraction

from .exact import frac


class FinFn:
    """A rational-valued function on a finite ordered base set."""

    __slots__ = ("base", "values")

    def __init__(self, base, values=None):
        self.base = tuple(base)
        values = values or {}
        unknown = set(values) - set(self.base)
        if unknown:
            raise KeyError(f"points outside the base: {sorted(map(str, unknown))}")
        self.values = {p: frac(values.get(p, 0)) for p in self.base}

    @classmethod
    def indicator(cls, base, subset):
        subset = set(subset)
        return cls(base, {p: int(p in subset) for p in base})

    @classmethod
    def constant(cls, base, c):
        return cls(base, {p: c for p in base})

    def __call__(self, p):
        return self.values[p]

    def __eq__(self, other):
        return isinstance(other, FinFn) and self.base == other.base and self.values == other.values

    def __hash__(self):
        return hash((self.base, tuple(self.values.items())))

    def __repr__(self):
        shown = ", ".join(f"{p}: {v}" for p, v in self.values.items() if v)
        return f"FinFn({{{shown}}})"

    def _check(self, other):
        if self.base != other.base:
            raise ValueError("functions live on different bases")

    def __add__(self, other):
        self._check(other)
        return FinFn(self.base, {p: self.values[p] + other.values[p] for p in self.base})

    def __sub__(self, other):
        self._check(other)
        return FinFn(self.base, {p: self.values[p] - other.values[p] for p in self.base})

    def __mul__(self, other):
        if isinstance(other, FinFn):
            self._check(other)
            return FinFn(self.base, {p: self.values[p] * other.values[p] for p in self.base})
        c = frac(other)
        return FinFn(self.base, {p: c * v for p, v in self.values.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def support(self):
        return tuple(p for p in self.base if self.values[p])

    def vector(self):
        return [self.values[p] for p in self.base]

    def is_zero(self):
        return not any(self.values.values())


def pullback(phi, f, base):
    """(phi^* f)(x) = f(phi(x)); ``phi`` is a dict or a callable on ``base``."""
    get = phi.get if isinstance(phi, dict) else phi
    return FinFn(base, {x: f(get(x)) for x in base})


def integrate(G, f):
    """lambda(f)(x) = sum of f over the arrows with range x."""
    return FinFn(G.units, {x: sum((f(a) for a in G.range_fiber(x)), Fraction(0)) for x in G.units})


def fibre_product(X, Y, p, q):
    """X x_{p,q} Y as an ordered tuple of pairs."""
    return tuple((x, y) for x in X for y in Y if p[x] == q[y])


def balanced_tensor(f, g, p, q):
    """f (x) g over C(Z), realised on the fibre product: (x, y) -> f(x) g(y)."""
    base = fibre_product(f.base, g.base, p, q)
    return FinFn(base, {(x, y): f(x) * g(y) for x, y in base})


def balanced_tensor_dimension(X, Y, p, q):
    """Dimension of C(X) (x)_{C(Z)} C(Y) computed from the naive tensor product.

    The naive space C(X) (x) C(Y) has dimension |X||Y|; the balancing
    relations (h.f) (x) g = f (x) (h.g) for h in C(Z) span the kernel of the
    map to the fibre product.  Returns (quotient dimension, fibre product size).
    """
    from .exact import rank

    Z = sorted(set(p.values()) | set(q.values()), key=str)
    X, Y = list(X), list(Y)
    idx = {(x, y): k for k, (x, y) in enumerate((x, y) for x in X for y in Y)}
    rels = []
    for z in Z:
        for x in X:
            for y in Y:
                # chi_z acting on the left factor minus on the right factor, applied to delta_x (x) delta_y
                v = {}
                c = int(p[x] == z) - int(q[y] == z)
                if c:
                    v[idx[(x, y)]] = c
                rels.append(v)
    return len(idx) - rank(rels), len(fibre_product(X, Y, p, q))
