"""Finite groupoids: validation, bisections, loops, orbits and cut-off functions."""

from collections import namedtuple
from fractions import Fraction
from itertools import product


class GroupoidError(ValueError):
    """A groupoid axiom failed; ``arrows`` names the offending arrow ids."""

    def __init__(self, message, arrows=()):
        super().__init__(message + (f" (arrows: {', '.join(map(str, arrows))})" if arrows else ""))
        self.arrows = tuple(arrows)


Arrow = namedtuple("Arrow", "id src tgt")
Orbit = namedtuple("Orbit", "units rep isotropy")


def _tok(x):
    return str(x)


class FiniteGroupoid:
    """A validated finite groupoid.

    Use :func:`validate_groupoid` to build one from a raw description.  Unit
    arrows carry the same id as their unit.  Arrows are ordered by id.
    """

    def __init__(self, units, arrows, mul, inv):
        self.units = tuple(units)
        self.arrows = tuple(a.id for a in arrows)
        self._arrow = {a.id: a for a in arrows}
        self._mul = mul
        self._inv = inv
        self.index = {a: k for k, a in enumerate(self.arrows)}
        self.unit_set = frozenset(self.units)
        self._range_fiber = {x: tuple(a for a in self.arrows if self.tgt(a) == x) for x in self.units}
        self._source_fiber = {x: tuple(a for a in self.arrows if self.src(a) == x) for x in self.units}

    def __repr__(self):
        return f"FiniteGroupoid({len(self.units)} units, {len(self.arrows)} arrows)"

    def __eq__(self, other):
        return (
            isinstance(other, FiniteGroupoid)
            and self.units == other.units
            and self.arrows == other.arrows
            and self._mul == other._mul
        )

    def __hash__(self):
        return hash((self.units, self.arrows))

    def src(self, a):
        return self._arrow[a].src

    def tgt(self, a):
        return self._arrow[a].tgt

    s = src
    r = tgt

    def is_unit(self, a):
        return a in self.unit_set

    def unit_arrow(self, x):
        return x

    def mul(self, a, b):
        """Composite ``ab`` (apply b first); ``None`` when not composable."""
        return self._mul.get((a, b))

    def inv(self, a):
        return self._inv[a]

    def range_fiber(self, x):
        """G^x: arrows with range x."""
        return self._range_fiber[x]

    def source_fiber(self, x):
        return self._source_fiber[x]

    def hom(self, x, y):
        """Arrows from y to x."""
        return tuple(a for a in self._range_fiber[x] if self.src(a) == y)

    def isotropy(self, x):
        return self.hom(x, x)

    def compose(self, *arrows):
        out = arrows[0]
        for a in arrows[1:]:
            out = self.mul(out, a)
            if out is None:
                return None
        return out

    def conj(self, a, b):
        """The loop a b a^-1 (b a loop at s(a))."""
        return self.compose(a, b, self.inv(a))

    def to_json(self):
        non_unit = [a for a in self.arrows if not self.is_unit(a)]
        return {
            "units": list(self.units),
            "arrows": [{"id": a, "src": self.src(a), "tgt": self.tgt(a)} for a in non_unit],
            "mul": [[a, b, self.mul(a, b)] for a in non_unit for b in non_unit if self.mul(a, b) is not None],
            "inv": {a: self.inv(a) for a in non_unit},
        }

    # derived structure ------------------------------------------------
    @property
    def loops(self):
        return loop_space(self)[0]

    def orbits(self):
        return orbits(self)

    def orbit_of(self, x):
        for o in orbits(self):
            if x in o.units:
                return o
        raise KeyError(x)


def validate_groupoid(raw):
    """Check the groupoid axioms on a raw JSON-style description.

    ``raw = {"units": [...], "arrows": [{"id", "src", "tgt"}, ...],
    "mul": [[left, right, result], ...], "inv": {id: id}}`` with unit arrows
    implicit.  Returns a :class:`FiniteGroupoid` or raises
    :class:`GroupoidError` naming the first violated axiom.
    """
    if not isinstance(raw, dict) or "units" not in raw:
        raise GroupoidError("description must be an object with a 'units' list")
    units = [_tok(u) for u in raw["units"]]
    if len(set(units)) != len(units):
        raise GroupoidError("duplicate unit tokens")
    unit_set = set(units)
    arrows = {u: Arrow(u, u, u) for u in units}
    for k, a in enumerate(raw.get("arrows", [])):
        try:
            aid, src, tgt = _tok(a["id"]), _tok(a["src"]), _tok(a["tgt"])
        except (KeyError, TypeError):
            raise GroupoidError(f"arrow entry {k} needs 'id', 'src' and 'tgt'")
        if aid in arrows:
            raise GroupoidError("duplicate arrow id (unit arrows are implicit)", [aid])
        if src not in unit_set or tgt not in unit_set:
            raise GroupoidError("arrow endpoint is not a declared unit", [aid])
        arrows[aid] = Arrow(aid, src, tgt)

    mul = {}
    for a in arrows.values():
        mul[(a.tgt, a.id)] = a.id
        mul[(a.id, a.src)] = a.id
    for k, triple in enumerate(raw.get("mul", [])):
        if not isinstance(triple, (list, tuple)) or len(triple) != 3:
            raise GroupoidError(f"mul entry {k} must be a [left, right, result] triple")
        l, r, res = (_tok(t) for t in triple)
        for t in (l, r, res):
            if t not in arrows:
                raise GroupoidError(f"mul entry {k} mentions an unknown arrow", [t])
        if arrows[l].src != arrows[r].tgt:
            raise GroupoidError("non-composable pair has a product", [l, r])
        if arrows[res].tgt != arrows[l].tgt or arrows[res].src != arrows[r].src:
            raise GroupoidError("product has wrong source or range", [l, r, res])
        if (l, r) in mul and mul[(l, r)] != res:
            raise GroupoidError("conflicting products", [l, r])
        mul[(l, r)] = res

    ids = sorted(arrows)
    for a in ids:
        for b in ids:
            if arrows[a].src == arrows[b].tgt and (a, b) not in mul:
                raise GroupoidError("composable pair without a product", [a, b])

    inv = {}
    given = {_tok(k): _tok(v) for k, v in (raw.get("inv") or {}).items()}
    for a in ids:
        cands = [b for b in ids if mul.get((a, b)) == arrows[a].tgt and mul.get((b, a)) == arrows[a].src]
        if a in unit_set:
            cands = [a]
        if not cands:
            raise GroupoidError("missing inverse", [a])
        if a in given:
            if given[a] not in cands:
                raise GroupoidError("declared inverse is not two-sided", [a, given[a]])
            inv[a] = given[a]
        else:
            inv[a] = cands[0]

    for a, b, c in product(ids, repeat=3):
        if arrows[a].src == arrows[b].tgt and arrows[b].src == arrows[c].tgt:
            if mul[(mul[(a, b)], c)] != mul[(a, mul[(b, c)])]:
                raise GroupoidError("associativity failure", [a, b, c])

    return FiniteGroupoid(units, [arrows[a] for a in ids], mul, inv)


# bisections -------------------------------------------------------------


def bisection(G, arrows):
    """Validate a subset of arrows as a bisection and return it as a frozenset."""
    arrows = frozenset(_tok(a) for a in arrows)
    srcs = [G.src(a) for a in arrows]
    tgts = [G.tgt(a) for a in arrows]
    if len(set(srcs)) != len(srcs) or len(set(tgts)) != len(tgts):
        raise GroupoidError("not a bisection: source or range is not injective", sorted(arrows))
    return arrows


def is_bisection(G, arrows):
    try:
        bisection(G, arrows)
        return True
    except GroupoidError:
        return False


def bisection_product(G, U, V):
    """UV = {ab : a in U, b in V, s(a) = r(b)}."""
    return frozenset(G.mul(a, b) for a in U for b in V if G.src(a) == G.tgt(b))


def bisection_inverse(G, U):
    return frozenset(G.inv(a) for a in U)


def units_bisection(G):
    return frozenset(G.units)


# loops and orbits -----------------------------------------------------------


def loop_space(G):
    """Loops G_ad and the adjoint action table {(a, b): a b a^-1}."""
    cache = getattr(G, "_loop_cache", None)
    if cache is not None:
        return cache
    loops = tuple(a for a in G.arrows if G.src(a) == G.tgt(a))
    action = {}
    for a in G.arrows:
        for b in loops:
            if G.src(b) == G.src(a):
                action[(a, b)] = G.conj(a, b)
    G._loop_cache = (loops, action)
    return G._loop_cache


def anchor(G, loop):
    return G.tgt(loop)


def orbits(G):
    """Orbits of units with the isotropy group at the least unit of each orbit."""
    cache = getattr(G, "_orbit_cache", None)
    if cache is not None:
        return cache
    seen = set()
    out = []
    for x in sorted(G.units):
        if x in seen:
            continue
        members = sorted({G.src(a) for a in G.range_fiber(x)})
        seen.update(members)
        out.append(Orbit(tuple(members), x, G.isotropy(x)))
    G._orbit_cache = out
    return out


def adjoint_orbits(G):
    """Orbits of G acting on its loops by conjugation, each as a tuple of loops."""
    cache = getattr(G, "_adorbit_cache", None)
    if cache is not None:
        return cache
    loops, action = loop_space(G)
    seen = set()
    out = []
    for b in loops:
        if b in seen:
            continue
        orb = sorted({c for (a, bb), c in action.items() if bb == b}, key=G.index.get)
        seen.update(orb)
        out.append(tuple(orb))
    G._adorbit_cache = out
    return out


def centralizer(G, loop):
    """Isotropy arrows at the base of ``loop`` commuting with it."""
    x = G.src(loop)
    return tuple(h for h in G.isotropy(x) if G.conj(h, loop) == loop)


def conjugator(G, loop, target):
    """Some arrow a with a loop a^-1 = target."""
    for a in G.source_fiber(G.src(loop)):
        if G.conj(a, loop) == target:
            return a
    raise KeyError((loop, target))


# cut-off ---------------------------------------------------------------------


def cutoff(G):
    """c = d / lambda(d o s), with d the indicator of the orbit representatives."""
    from .funcspace import FinFn

    reps = {o.rep for o in orbits(G)}
    d = {x: Fraction(int(x in reps)) for x in G.units}
    ds_integral = {x: sum((d[G.src(a)] for a in G.range_fiber(x)), Fraction(0)) for x in G.units}
    return FinFn(G.units, {x: d[x] / ds_integral[x] for x in G.units})


def cutoff_identity_holds(G, c):
    return all(sum((c(G.src(a)) for a in G.range_fiber(x)), Fraction(0)) == 1 for x in G.units)


def quotient_groupoid(G):
    """The orbit space viewed as a groupoid with only unit arrows."""
    return validate_groupoid({"units": [o.rep for o in orbits(G)], "arrows": [], "mul": []})


def restrict(G, units):
    """Full subgroupoid on a G-invariant or arbitrary set of units."""
    units = [u for u in G.units if u in set(units)]
    keep = [a for a in G.arrows if G.src(a) in units and G.tgt(a) in units and not G.is_unit(a)]
    return validate_groupoid(
        {
            "units": units,
            "arrows": [{"id": a, "src": G.src(a), "tgt": G.tgt(a)} for a in keep],
            "mul": [[a, b, G.mul(a, b)] for a in keep for b in keep if G.mul(a, b) is not None],
        }
    )
