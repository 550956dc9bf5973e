"""
The operator square behind the comparison with parabolic induction
===================================================================

With s = diag(t, 1) and the torus Levi of GL(2, F_3), compare T_G with
T_KP o xi, T_P with xi o T_KP, and the Satake image of T_G with T_M, for
every irreducible V.  Identities tied to coregularity are recorded for the
remaining V rather than asserted.
"""
from modsatake import finred, hecke

G = finred.build_gl(2, 3)
for d in finred.classify_all(G):
    ctx = hecke.SatakeContext(d, ())
    print(f"{d.label:<6} dim {d.dim}  coregular={ctx.coregular}")
    for c in hecke.verify_prop_xi(ctx):
        print(f"   {c.name:<28}{c.status}")

# T_G for the trivial representation: p + 1 cosets, and its Satake image
triv = hecke.SatakeContext(finred.special_rep(finred.classify_all(G), {1}), ())
TG = triv.op("T_G")
print("\ntrivial V: T_G has", len(TG.cells), "cosets")
print("S'(T_G) on M-double cosets:", hecke.satake_prime(TG, triv.M).double_coset_form())
