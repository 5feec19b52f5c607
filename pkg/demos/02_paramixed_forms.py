"""Equivariant differential forms and their paramixed structure.

The forms of an algebra A over each loop carry d, b, kappa, B and the twist T.
Because T is not the identity, B b + b B equals 1 - T rather than 0.
"""

from equivhp import QMat, corpus
from equivhp.forms import FormModule, paramixed_report

G = corpus.groupoid("z2")
A = corpus.algebra("K_G", G)
F = FormModule(A, cap=6)
print("K_G on Z/2: dimensions of the forms in degrees 0..4:", [F.dim(n) for n in range(5)])

T0 = F.operator("T", 0)
print("twist in degree 0 is the identity:", T0 == QMat.identity(F.dim(0)))
bd = F.operator("b", 1) @ F.operator("d", 0)
print("b d = 1 - T in degree 0:", bd == QMat.identity(F.dim(0)) - T0)

report = paramixed_report(F)
print("\nAll relations up to degree 4:")
for name, ok in report["relations"].items():
    print(f"  {'ok ' if ok else 'BAD'} {name}")
