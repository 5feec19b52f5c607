"""Orbit decomposition and the Green-Julg comparison.

The comparison map into the equivariant forms intertwines b and B only after
averaging over the groupoid; with that in hand the ranks of both sides agree,
globally and orbit by orbit.
"""

from equivhp import corpus
from equivhp.greenjulg import GammaMap, discrete_decomposition, green_julg_verify

G = corpus.groupoid("z2")
ids = GammaMap(corpus.algebra("K_G", G)).identities(2)
print("K_G on Z/2, comparison map before averaging:", ids["raw"])
print("                          after averaging: ", ids["averaged"])

G = corpus.groupoid("z2z3")
A = corpus.algebra("trivial", G)
split = discrete_decomposition(A, A)
print(f"\nZ/2 + Z/3: global {split['global']} equals the orbit sum {split['sum']} from {split['orbits']}")

print("\nGreen-Julg, trivial and K_G coefficients:")
for name in corpus.CORPUS:
    H = corpus.groupoid(name)
    for alg in ("trivial", "K_G"):
        r = green_julg_verify(corpus.algebra(alg, H))
        print(f"  {name:6s} {alg:8s} invariant side {r['lhs']}  crossed product side {r['rhs']}  passed: {r['passed']}")
