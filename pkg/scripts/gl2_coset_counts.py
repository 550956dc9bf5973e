"""
Counting cosets in the GL(2) spherical Hecke algebra
=====================================================

For diagonal t = diag(t^x, t^y) we count the b in F/o with n_b t in the
double coset K diag(t^n, 1) K, next to the same count for the union of the
Cartan cells (n-j, j).  At n = 1 the two agree; from n = 2 on they do not.
"""
from modsatake import hecke

for p in (2, 3):
    for power in (1, 2):
        rows, checks = hecke.gl2_remark_table(p, power)
        print(f"p={p}  s^{power}")
        print("   t        double coset   union")
        for r in rows:
            if r["double_coset"] or r["union"]:
                print(f"   {str(tuple(r['t'])):<9}{r['double_coset']:>8}{r['union']:>10}")
        for c in checks:
            print(f"   {c.name:<32}{c.status}")
        print()
