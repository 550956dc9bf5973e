"""
Irreducible mod p representations of GL(n, F_p) and their parameters
=====================================================================

Each irreducible is determined by the torus character on its line of
upper-unipotent invariants and the simple roots of the parabolic stabilising
that line.  The script lists them for small groups, together with regularity
and coregularity for each proper Levi.
"""
from modsatake import finred

for n, p in [(2, 3), (3, 2)]:
    G = finred.build_gl(n, p)
    cls = finred.classify_all(G)
    print(f"GL({n}, F_{p}): {len(cls)} irreducibles, {G.p_regular_class_count()} p-regular classes")
    for d in cls:
        cells = []
        for J in finred.all_subsets(n, proper=True):
            tag = "".join(["r" if finred.is_M_regular(d, J) else "-", "c" if finred.is_M_coregular(d, J) else "-"])
            cells.append(f"J={sorted(J)}:{tag}")
        print(f"  {d.label:<6} dim {d.dim:<3} psi {d.psi}  Delta_V {sorted(d.delta_V)}  " + "  ".join(cells))
    print()
