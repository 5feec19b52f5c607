"""Ranks of equivariant periodic cyclic homology.

For quasifree algebras the X-complex already computes the answer, and for
the trivial algebra the even rank counts conjugacy classes of loops.  The
dual numbers have no connection, so only the Hodge tower is available and
it does not settle at level 2.
"""

from equivhp import corpus
from equivhp.galgebras import dual_numbers, trivial_algebra
from equivhp.groupoid import adjoint_orbits
from equivhp.homalg import hp_level, hp_quasifree, x_complex
from equivhp.tensoralg import quasifree_certificate

print("groupoid  X(trivial) even/odd   HP even/odd   adjoint orbits")
for name in corpus.CORPUS:
    G = corpus.groupoid(name)
    A = trivial_algebra(G)
    X = x_complex(A)
    hp = hp_quasifree(A, A)
    print(f"  {name:6s}  {X.even_dim}/{X.odd_dim}                  {hp['even']}/{hp['odd']}           {len(adjoint_orbits(G))}")

pt = corpus.groupoid("trivial")
dual = dual_numbers(pt)
cert = quasifree_certificate(dual)
info = cert.detail["pt"]
print(f"\nDual numbers: connection system has rank {info['rank']} but augmented rank {info['augmented_rank']}, so no connection exists.")
tower = hp_level(dual, trivial_algebra(pt), m=2)
print("Hodge tower ranks by level:", [(r["even"], r["odd"]) for r in tower], "stabilized:", tower[-1]["stabilized"])
