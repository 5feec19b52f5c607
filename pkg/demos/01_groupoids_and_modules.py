"""Finite groupoids, their loops and cut-off functions, and modules seen as comodules.

Run with ``python3 demos/01_groupoids_and_modules.py``.
"""

from equivhp import corpus
from equivhp.exact import frac_str
from equivhp.gmodules import comodule_to_module, equivariant_homs, module_to_comodule, random_module, regular_module, trivial_module
from equivhp.groupoid import adjoint_orbits, cutoff, cutoff_identity_holds, loop_space, orbits

print("Each builtin groupoid, with its loops (arrows from a unit to itself) and orbits:\n")
for name in corpus.CORPUS:
    G = corpus.groupoid(name)
    loops, _ = loop_space(G)
    print(f"  {name:6s} arrows={len(G.arrows)}  loops={len(loops)}  unit orbits={len(orbits(G))}  adjoint orbits={len(adjoint_orbits(G))}")

print("\nA cut-off function c sums to one over the arrows ending at each unit.")
for name in ("z2", "pair2", "z2z3"):
    G = corpus.groupoid(name)
    c = cutoff(G)
    values = ", ".join(f"c({x})={frac_str(c(x))}" for x in G.units)
    print(f"  {name:6s} {values}   identity holds: {cutoff_identity_holds(G, c)}")

G = corpus.groupoid("z2")
print("\nOn Z/2 the regular module has a 2-dimensional commutant; the trivial one is 1-dimensional:")
print("  regular:", len(equivariant_homs(regular_module(G), regular_module(G))))
print("  trivial:", len(equivariant_homs(trivial_module(G), trivial_module(G))))

print("\nA module becomes a comodule map T(delta_a (x) m) = delta_a (x) a^-1 m and back again.")
M = random_module(corpus.groupoid("z2z3"), seed=2024)
C = module_to_comodule(M)
back = comodule_to_module(C)
print("  coaction identity:", C.coaction_holds())
print("  action recovered exactly:", all(back.rho[a] == M.rho[a] for a in M.groupoid.arrows))
