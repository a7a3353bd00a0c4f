"""How fast does a front cross a lattice of vortices?

Cells trap the front: it has to cross stagnation points, where the flow is
slow, and the speed grows only like A / log A instead of like A.  This demo
runs a short sweep on a coarse grid, fits the growth law and compares with
the one-dimensional travel-time integral that produces the log.

Run:  python demos/02_cellular_growth.py     (about two minutes)
"""
# %%
import math

from frontlab import asymptotics, flows, speed_lab
from frontlab.hj_solver import SolverParams

cell = flows.make_flow("cellular")
A_list = [4.0, 8.0, 16.0, 32.0]
recs = speed_lab.sweep_A(cell, (1.0, 0.0), A_list, params=SolverParams(n=128, cfl=0.9))
for r in recs:
    print(f"A={r.A:5g}  sT={r.sT:8.4f}  horizon={r.t_final:.3f}  converged={r.converged}")

# %% [markdown]
# Ratios against the candidate laws.  A/log A should give the flattest row;
# coarse grids overestimate sT at large A, so expect some drift.

# %%
for law in ("A_over_logA", "A_over_sqrtlogA", "linear"):
    t = asymptotics.ratio_table(recs, law)
    row = "  ".join(f"{v:.3f}" for _, v in t)
    print(f"{law:16s} {row}   spread={t.spread:.1%}  {t.trend}")

fit = asymptotics.fit_growth_law(recs)
print(f"fit: sT ~ {fit.c:.3f} A (log A)^-{fit.q:.3f}; best single law: {fit.selected}")

# %% [markdown]
# Where the log comes from: a particle pushed along a separatrix by the
# flow (speed ~ A sin) plus unit burning needs time I(A) ~ log A / A to
# cross a cell.

# %%
for A in (1e2, 1e4, 1e6):
    I = asymptotics.cellular_crossing_integral(A)
    print(f"A={A:8.0e}  I(A)={I:.3e}  I*A/log A={I * A / math.log(A):.4f}")
