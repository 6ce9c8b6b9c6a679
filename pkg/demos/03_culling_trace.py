"""Iterative culling down to the relevant pair.

Each iteration re-estimates contributions on the surviving features and
drops the weakest fraction.  The printout shows the active set shrinking and
the contribution of the two XOR features growing as noise disappears.

Run: python demos/03_culling_trace.py
"""

from randsel import RandSelConfig, gen_xor, run

data = gen_xor(20, 2000, seed=3)
trace = run(data, RandSelConfig(r=500, s=200, z=0.125, sigma0=0.25, master_seed=3), threads=None)

for rec in trace.iterations:
    c = rec.table.contribution
    print(
        f"iter {rec.iteration:2d}  active {len(rec.active):2d}  dropped {list(rec.dropped)}"
        f"  c0={c[0]:.4f} c1={c[1]:.4f}  kernel evals {rec.kernel_evaluations}"
    )
print("final active set:", trace.final_active)
