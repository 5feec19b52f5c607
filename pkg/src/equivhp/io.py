"""Reading groupoid, module and algebra descriptions from JSON files or the builtin corpus."""

import json
from pathlib import Path

from . import corpus
from .exact import QMat, frac
from .galgebras import GAlgebra
from .gmodules import GModule
from .groupoid import GroupoidError, validate_groupoid

BUILTIN = "builtin:"


class InputError(ValueError):
    """A file could not be read or does not describe a valid object."""


def load_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def kind_of(raw):
    """'groupoid', 'algebra' or 'module' from the keys of a description."""
    if not isinstance(raw, dict):
        return None
    if "units" in raw:
        return "groupoid"
    if "fibers" in raw:
        return "algebra" if "mul" in raw else "module"
    return None


def groupoid_from(ref):
    """A builtin name (``builtin:z2`` or plain ``z2``) or a path to a groupoid file."""
    name = ref[len(BUILTIN):] if ref.startswith(BUILTIN) else ref
    if name in corpus.GROUPOIDS and not Path(ref).exists():
        return corpus.groupoid(name)
    if ref.startswith(BUILTIN):
        raise InputError(f"unknown builtin groupoid {name!r}; choose from {sorted(corpus.GROUPOIDS)}")
    raw = load_json(ref)
    try:
        return validate_groupoid(raw)
    except GroupoidError as exc:
        raise InputError(f"{ref}: {exc}") from None


def _matrix(value, shape, where):
    try:
        rows = [[frac(v) for v in row] for row in value]
    except (TypeError, ValueError, ZeroDivisionError):
        raise InputError(f"{where}: entries must be rationals such as 1, -2 or \"3/4\"") from None
    if len(rows) != shape[0] or any(len(r) != shape[1] for r in rows):
        raise InputError(f"{where}: expected a {shape[0]} x {shape[1]} matrix")
    return QMat.from_dense(rows, shape)


def module_from_raw(raw, G, where="module"):
    fibers = raw.get("fibers")
    if not isinstance(fibers, dict):
        raise InputError(f"{where}: 'fibers' must map units to basis names")
    for x in fibers:
        if x not in G.units:
            raise InputError(f"{where}: fiber over unknown unit {x!r}")
    dims = {x: len(fibers.get(x, [])) for x in G.units}
    rho = {}
    for a, m in (raw.get("rho") or {}).items():
        if a not in G.arrows:
            raise InputError(f"{where}: action matrix for unknown arrow {a!r}")
        rho[a] = _matrix(m, (dims[G.tgt(a)], dims[G.src(a)]), f"{where}: rho[{a}]")
    try:
        return GModule(G, fibers, rho).validate()
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def algebra_from_raw(raw, G, where="algebra"):
    module = module_from_raw(raw, G, where)
    mul = {}
    for x, table in (raw.get("mul") or {}).items():
        if x not in G.units:
            raise InputError(f"{where}: product over unknown unit {x!r}")
        mul[x] = table
    try:
        A = GAlgebra(module, mul, name=raw.get("name", Path(where).stem))
        return A.validate()
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"{where}: {exc}") from None


def algebra_from(ref, G):
    """A builtin algebra name (trivial, K_G, O_G, dual, T2, zero) or an algebra file."""
    name = ref[len(BUILTIN):] if ref.startswith(BUILTIN) else ref
    if not Path(ref).exists():
        try:
            return corpus.algebra(name, G)
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from None
    return algebra_from_raw(load_json(ref), G, where=ref)


def describe(path, G=None):
    """Validate one file; returns a one-line verdict or raises InputError."""
    raw = load_json(path)
    kind = kind_of(raw)
    if kind == "groupoid":
        try:
            H = validate_groupoid(raw)
        except GroupoidError as exc:
            raise InputError(f"{path}: {exc}") from None
        n = len(H.orbits())
        return f"valid: {len(H.arrows)} arrows, {n} orbit{'s' if n != 1 else ''}"
    if kind is None:
        raise InputError(f"{path}: not a groupoid, module or algebra description")
    if G is None:
        raise InputError(f"{path}: a {kind} file needs --groupoid")
    if kind == "module":
        M = module_from_raw(raw, G, where=str(path))
        return f"valid module: fiber dimensions {[M.fiber_dim(x) for x in G.units]}"
    A = algebra_from_raw(raw, G, where=str(path))
    return f"valid algebra: fiber dimensions {[A.dim(x) for x in G.units]}"
