"""Built-in groupoids and algebras used by the tests, demos and the CLI."""

from .groupoid import validate_groupoid

GROUPOIDS = {
    "z2": {
        "units": ["e"],
        "arrows": [{"id": "g", "src": "e", "tgt": "e"}],
        "mul": [["g", "g", "e"]],
    },
    "pair2": {
        "units": ["1", "2"],
        "arrows": [{"id": "(1,2)", "src": "2", "tgt": "1"}, {"id": "(2,1)", "src": "1", "tgt": "2"}],
        "mul": [["(1,2)", "(2,1)", "1"], ["(2,1)", "(1,2)", "2"]],
    },
    "z2z3": {
        "units": ["x", "y"],
        "arrows": [
            {"id": "g", "src": "x", "tgt": "x"},
            {"id": "h", "src": "y", "tgt": "y"},
            {"id": "h2", "src": "y", "tgt": "y"},
        ],
        "mul": [["g", "g", "x"], ["h", "h", "h2"], ["h", "h2", "y"], ["h2", "h", "y"], ["h2", "h2", "h"]],
    },
    "flip": {
        "units": ["a", "b"],
        "arrows": [{"id": "ga", "src": "a", "tgt": "b"}, {"id": "gb", "src": "b", "tgt": "a"}],
        "mul": [["ga", "gb", "b"], ["gb", "ga", "a"]],
    },
    "trivial": {"units": ["pt"], "arrows": [], "mul": []},
    "z3": {
        "units": ["e"],
        "arrows": [{"id": "h", "src": "e", "tgt": "e"}, {"id": "h2", "src": "e", "tgt": "e"}],
        "mul": [["h", "h", "h2"], ["h", "h2", "e"], ["h2", "h", "e"], ["h2", "h2", "h"]],
    },
}

CORPUS = ("z2", "pair2", "z2z3", "flip")


def groupoid(name):
    try:
        return validate_groupoid(GROUPOIDS[name])
    except KeyError:
        raise KeyError(f"unknown builtin groupoid {name!r}; choose from {sorted(GROUPOIDS)}") from None


def algebra(name, G):
    """Builtin algebra by name: trivial, K_G, O_G, dual, T2, zero."""
    from . import galgebras as ga

    builders = {
        "trivial": ga.trivial_algebra,
        "K_G": ga.kg_algebra,
        "kg": ga.kg_algebra,
        "O_G": ga.og_algebra,
        "og": ga.og_algebra,
        "dual": ga.dual_numbers,
        "T2": lambda H: ga.upper_triangular(H, 2),
        "zero": ga.zero_algebra,
    }
    try:
        return builders[name](G)
    except KeyError:
        raise KeyError(f"unknown builtin algebra {name!r}; choose from {sorted(builders)}") from None
