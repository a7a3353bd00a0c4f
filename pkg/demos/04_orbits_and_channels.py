"""Open channels decide between linear and sublinear growth.

If some streamline wraps around the torus (a non-contractible periodic
orbit), the front rides it and sT grows linearly in A along that direction.
Otherwise all streamlines are trapped in bounded swirls and the growth is
at most A / log A.  Here the orbit classifier makes that call from a handful
of seeded trajectories.

Run:  python demos/04_orbits_and_channels.py
"""
# %%
from frontlab import flows, orbits

for name, kw in [("shear", {}), ("cellular", {}), ("cats_eye", {"delta": 0.5}), ("two_scale", {})]:
    f = flows.make_flow(name, **kw)
    pred = orbits.predict_dichotomy(f, n_seeds=12, rng_seed=0, t_max=5.0)
    p0 = "" if pred.p0 is None else f" along p0={tuple(round(float(v), 4) for v in pred.p0)}"
    print(f"{name:10s} {pred.case}{p0}")

# %% [markdown]
# A single orbit in detail.  The shear streamline through (0, 1/4) moves at
# unit speed and returns to itself shifted by the lattice vector (1, 0).

# %%
shear = flows.make_flow("shear")
rec = orbits.classify_orbit(orbits.integrate_orbit(shear, (0.0, 0.25), 3.0), shear)
c = rec.classification
print(c.kind, c.lattice_vector, f"period {c.period:.12f}", f"H drift {rec.h_drift:.1e}")

# %% [markdown]
# Cellular swirls never leave their cell: their diameter stays below the
# cell diagonal.

# %%
dmax, hist = orbits.swirl_diameter_stats(flows.make_flow("cellular"), n_seeds=20, rng_seed=1, t_max=5.0)
print(f"largest cellular swirl diameter {dmax:.4f} (cell diagonal 0.7071)")
