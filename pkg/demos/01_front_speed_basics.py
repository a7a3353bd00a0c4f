"""Front speeds for flows where the answer is known.

Run:  python demos/01_front_speed_basics.py
"""
# %%
import math

from frontlab import flows, speed_lab
from frontlab.hj_solver import SolverParams

# %% [markdown]
# With no stirring the front moves at the laminar speed in every direction.

# %%
zero = flows.make_flow("zero")
for p in [(1.0, 0.0), (0.6, 0.8)]:
    est = speed_lab.estimate_speed(zero, p, A=5.0, params=SolverParams(n=128))
    print(f"zero flow  p={p}  sT={est.sT:.6f}")

# %% [markdown]
# A shear flow V = (sin 2 pi x2, 0) carries the front along its streamlines.
# Along the channel the fastest streamline wins, so sT = 1 + A; across it
# the flow does nothing and sT = 1.

# %%
shear = flows.make_flow("shear")
prm = SolverParams(n=128, cfl=0.9)
for A in [2.0, 4.0, 8.0]:
    est = speed_lab.estimate_speed(shear, (1.0, 0.0), A, params=prm)
    print(f"shear along  A={A:4g}  sT={est.sT:7.4f}  exact={1 + A:g}")
est = speed_lab.estimate_speed(shear, (0.0, 1.0), 10.0, params=prm)
print(f"shear across A=  10  sT={est.sT:7.4f}  exact=1")

# %% [markdown]
# sT(p) is positively homogeneous and subadditive in p, so its unit level set
# bounds a convex set.  A scan over directions shows the anisotropy.

# %%
scan = speed_lab.direction_scan(shear, 4.0, n_dirs=8, params=prm)
for ang, s in scan:
    print(f"  angle {math.degrees(ang):5.1f}  sT={s:.4f}")
print("subadditivity audit:", "passed" if scan.audit_passed else "failed",
      f"({scan.pairs_checked} pairs)")
