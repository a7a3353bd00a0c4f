"""Streamline integration and orbit classification.

Orbits ``xi' = V(xi)`` are integrated in the unwrapped plane (or space)
and classified by what they do modulo the period lattice:

* ``Closed``: returns to its start with zero lattice shift (a swirl),
* ``NonContractible``: returns shifted by a nonzero lattice vector (an
  open channel),
* ``AsymptoticToGamma``: creeps into the stagnation set,
* ``Ballistic``: 3D (or channel) orbit whose displacement grows linearly,
* ``Undetermined``: none of the above within the horizon.

Ensembles draw their starting points from a splitmix64 stream so that a
given seed reproduces the same ensemble on every platform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .errors import ArgumentError, SolverFailure, UnsupportedOperation
from .flows import FlowSpec, find_stagnation_points, point_velocity, stream, velocity

RETURN_TOL = 1e-6
MIN_PERIOD = 1e-3


# ---------------------------------------------------------------------------
# deterministic seeds

_MASK = (1 << 64) - 1


class SplitMix64:
    """The splitmix64 generator (64-bit state, Weyl increment)."""

    def __init__(self, seed: int = 0):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def points(self, n: int, dim: int) -> np.ndarray:
        return np.array([[self.random() for _ in range(dim)] for _ in range(n)])


def seed_points(n: int, dim: int, rng_seed: int = 0) -> np.ndarray:
    return SplitMix64(rng_seed).points(n, dim)


# ---------------------------------------------------------------------------
# records


@dataclass
class Classification:
    kind: str = "Undetermined"
    period: float | None = None
    diameter: float | None = None
    lattice_vector: tuple | None = None
    omega_limit_residual: float | None = None
    mean_velocity: np.ndarray | None = None


@dataclass
class OrbitRecord:
    x0: np.ndarray
    times: np.ndarray
    points: np.ndarray
    classification: Classification = field(default_factory=Classification)
    h_drift: float | None = None
    near_stagnation: bool = False
    t_max: float = 0.0
    dense: object = field(default=None, repr=False)

    @property
    def samples(self):
        return list(zip(self.times, self.points))

    def at(self, t):
        """Position at time(s) ``t`` from the dense interpolant."""
        if self.dense is None:
            return np.broadcast_to(self.points[0], np.shape(t) + self.points[0].shape)
        return self.dense(t).T if np.ndim(t) else self.dense(t)


@dataclass
class DichotomyPrediction:
    case: str
    p0: np.ndarray | None
    evidence: dict
    seed: int
    lattice_vector: tuple | None = None


# ---------------------------------------------------------------------------
# integration


def _steady(flow: FlowSpec):
    if flow.time_dependent:
        raise UnsupportedOperation("orbit tools need a steady flow")


def integrate_orbit(flow: FlowSpec, x0, t_max: float, tol: float = 1e-9,
                    n_samples: int | None = None) -> OrbitRecord:
    """Integrate ``xi' = V(xi)`` from ``x0`` on ``[0, t_max]``.

    Dormand-Prince 4(5) with relative tolerance ``tol`` (absolute
    ``tol * 1e-3``), dense output, and samples every ``t_max/1000`` or
    finer.  A failed step (step size underflow) truncates the orbit and
    sets ``near_stagnation``.
    """
    _steady(flow)
    if not t_max > 0:
        raise ArgumentError("t_max must be positive")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (flow.dim,):
        raise ArgumentError(f"x0 must have shape ({flow.dim},)")
    n_samples = n_samples or 1001
    v0 = velocity(flow, x0)
    if np.linalg.norm(v0) <= 1e-12 * max(1.0, flow.max_speed):
        ts = np.linspace(0.0, t_max, n_samples)
        rec = OrbitRecord(x0, ts, np.repeat(x0[None], n_samples, axis=0), t_max=t_max)
        rec.near_stagnation = True
        if flow.dim == 2:
            rec.h_drift = 0.0
        return rec

    vel = point_velocity(flow)

    def rhs(t, y):
        return vel(y)

    sol = solve_ivp(rhs, (0.0, t_max), x0, method="RK45", rtol=tol, atol=tol * 1e-3,
                    dense_output=True)
    t_end = float(sol.t[-1])
    ts = np.linspace(0.0, t_end, n_samples)
    pts = sol.sol(ts).T
    rec = OrbitRecord(x0, ts, pts, t_max=t_end, dense=sol.sol)
    rec.near_stagnation = sol.status != 0
    if flow.dim == 2:
        H0 = float(stream(flow, x0))
        rec.h_drift = float(np.max(np.abs(stream(flow, pts) - H0)))
    return rec


def _polish(rec, shift, v0, lo, hi, guess):
    """Crossing of the section through x0 normal to V(x0); smooth, so brentq is exact."""
    def g(t):
        return float(np.dot(rec.dense(t) - rec.x0 - shift, v0))

    try:
        return float(brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    except ValueError:
        return guess


def _lattice_gap(d):
    return d - np.round(d)


def _find_return(rec: OrbitRecord, flow: FlowSpec):
    """First time > MIN_PERIOD where the orbit is back at x0 modulo Z^n."""
    if rec.dense is None:
        return None
    ts = np.linspace(0.0, rec.t_max, max(4001, len(rec.times)))
    pts = rec.dense(ts).T
    gap = np.linalg.norm(_lattice_gap(pts - rec.x0), axis=1)
    v0 = velocity(flow, rec.x0)
    speed = float(np.linalg.norm(v0))
    dt = ts[1] - ts[0]
    # must first leave the start; then look for dips below a coarse threshold
    far = np.nonzero(gap > 10 * speed * dt + 1e-9)[0]
    if len(far) == 0:
        return None
    thr = 2 * speed * dt + 1e-6
    for k in range(far[0] + 1, len(ts) - 1):
        if gap[k] <= gap[k - 1] and gap[k] <= gap[k + 1] and gap[k] < max(thr, 5e-2):
            lo, hi = ts[k - 1], ts[k + 1]

            def f(t):
                return float(np.linalg.norm(_lattice_gap(rec.dense(t) - rec.x0)))

            r = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                options={"xatol": 1e-13 * max(1.0, hi)})
            if r.fun <= RETURN_TOL and r.x > MIN_PERIOD:
                shift = np.round(rec.dense(r.x) - rec.x0).astype(int)
                T = _polish(rec, shift, v0, lo, hi, float(r.x))
                gap_T = float(np.linalg.norm(rec.dense(T) - rec.x0 - shift))
                return T, tuple(int(v) for v in shift), gap_T
    return None


_STAG: dict = {}


def _stagnation_locations(flow: FlowSpec):
    key = (flow.name, flow.label())
    if key not in _STAG:
        _STAG[key] = find_stagnation_points(flow, 0.0, 16).locations()
    return _STAG[key]


def classify_orbit(record: OrbitRecord, flow: FlowSpec) -> OrbitRecord:
    """Fill ``record.classification`` (see module docstring for the classes)."""
    c = Classification()
    if record.dense is None:
        # the start is a stagnation point: it lies in Gamma already
        c.kind = "AsymptoticToGamma"
        c.omega_limit_residual = 0.0
        record.classification = c
        return record
    ret = _find_return(record, flow)
    if ret is not None:
        T, k, _ = ret
        c.period = T
        loop = record.dense(np.linspace(0.0, T, 401)).T
        if any(k):
            c.kind = "NonContractible"
            c.lattice_vector = k
        else:
            c.kind = "Closed"
            c.lattice_vector = tuple(0 for _ in k)
            c.diameter = _diameter(loop)
        record.classification = c
        return record

    pts = record.points
    ts = record.times
    speeds = np.linalg.norm(velocity(flow, pts), axis=1)
    half = ts >= 0.5 * ts[-1]
    tail = ts >= 0.9 * ts[-1]
    moved = float(np.max(np.linalg.norm(pts[tail] - pts[tail][-1], axis=1)))
    if moved < 1e-9 and speeds[tail].min() > 1e-3 * flow.K0:
        raise SolverFailure("orbit settled at a point where |V| is not small; "
                            "impossible for a divergence-free field",
                            {"x": pts[-1].tolist(), "speed": float(speeds[tail].min())})
    if flow.dim == 2 and flow.K0 > 0:
        k = int(np.argmin(np.where(half, speeds, np.inf)))
        if speeds[k] <= 1e-3 * flow.K0:
            stag = _stagnation_locations(flow)
            if len(stag):
                d = np.linalg.norm(_lattice_gap(stag - pts[k]), axis=1).min()
                if d <= 1e-2:
                    c.kind = "AsymptoticToGamma"
                    c.omega_limit_residual = float(d)
                    record.classification = c
                    return record
    bal = _ballistic(ts, pts, flow)
    if bal is not None:
        c.kind = "Ballistic"
        c.mean_velocity = bal
    record.classification = c
    return record


def _diameter(loop):
    d = loop[:, None, :] - loop[None, :, :]
    return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))


def _ballistic(ts, pts, flow):
    half = ts >= 0.5 * ts[-1]
    t = ts[half]
    r = np.linalg.norm(pts[half] - pts[0], axis=1)
    if len(t) < 3 or flow.max_speed == 0:
        return None
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, r, rcond=None)
    slope = coef[0]
    fit = A @ coef
    ss_res = float(np.sum((r - fit) ** 2))
    ss_tot = float(np.sum((r - r.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    if slope >= 0.05 * flow.max_speed and r2 >= 0.99:
        return (pts[-1] - pts[np.argmax(half)]) / (ts[-1] - t[0])
    return None


def verify_classification(record: OrbitRecord, flow: FlowSpec, tol: float = 1e-4) -> bool:
    """Re-integrate one more period and compare with the sampled loop."""
    c = record.classification
    if c.kind not in ("Closed", "NonContractible"):
        return True
    T = c.period
    loop = record.dense(np.linspace(0.0, T, 201)).T
    again = integrate_orbit(flow, record.dense(T), T, n_samples=201)
    shift = np.asarray(c.lattice_vector, dtype=float)
    # the second lap, translated back by the lattice vector, retraces the first
    return bool(np.max(np.linalg.norm(again.points - shift - loop, axis=1)) <= tol)


# ---------------------------------------------------------------------------
# ensembles


def _classified(flow, x0, t_max):
    return classify_orbit(integrate_orbit(flow, x0, t_max), flow)


def swirl_diameter_stats(flow: FlowSpec, n_seeds: int = 100, rng_seed: int = 0,
                         t_max: float = 10.0):
    """Largest closed-orbit diameter over a seeded ensemble.

    Returns ``(max_diameter, histogram)``; the histogram maps the decade
    ``floor(log10 d)`` to the number of closed orbits with diameter ``d``.
    ``max_diameter`` is 0 when no closed orbit is found.
    """
    _steady(flow)
    if flow.dim != 2:
        raise UnsupportedOperation("swirl statistics are for 2D flows")
    dmax = 0.0
    hist: dict = {}
    for x0 in seed_points(n_seeds, 2, rng_seed):
        rec = _classified(flow, x0, t_max)
        c = rec.classification
        if c.kind == "Closed":
            dmax = max(dmax, c.diameter)
            k = int(math.floor(math.log10(c.diameter))) if c.diameter > 0 else -99
            hist[k] = hist.get(k, 0) + 1
    return dmax, dict(sorted(hist.items()))


def _p0(k):
    v = np.asarray(k, dtype=float)
    v /= np.linalg.norm(v)
    nz = np.nonzero(np.abs(v) > 1e-12)[0]
    if v[nz[0]] < 0:
        v = -v
    return v


def detect_noncontractible(flow: FlowSpec, n_seeds: int = 100, rng_seed: int = 0,
                           t_max: float = 20.0):
    """First non-contractible orbit in a seeded ensemble.

    Returns ``(lattice_vector, p0)`` with ``p0`` the unit channel direction
    (sign fixed so its first nonzero component is positive), or None.
    """
    _steady(flow)
    if flow.dim != 2:
        raise UnsupportedOperation("channel detection is for 2D flows")
    for x0 in seed_points(n_seeds, 2, rng_seed):
        rec = _classified(flow, x0, t_max)
        if rec.classification.kind == "NonContractible":
            k = rec.classification.lattice_vector
            return k, _p0(k)
    return None


def predict_dichotomy(flow: FlowSpec, n_seeds: int = 100, rng_seed: int = 0,
                      t_max: float = 20.0) -> DichotomyPrediction:
    """Case 1 (open channel along ``p0``) if any seeded orbit is non-contractible.

    Evidence counts every classification over the ensemble; ``p0`` comes
    from the first non-contractible orbit in seed order.
    """
    _steady(flow)
    if flow.dim != 2:
        raise UnsupportedOperation("the dichotomy is stated for 2D flows")
    counts: dict = {}
    first = None
    for x0 in seed_points(n_seeds, 2, rng_seed):
        c = _classified(flow, x0, t_max).classification
        counts[c.kind] = counts.get(c.kind, 0) + 1
        if c.kind == "NonContractible" and first is None:
            first = c.lattice_vector
    if first is not None:
        return DichotomyPrediction("Case1", _p0(first), counts, rng_seed, first)
    return DichotomyPrediction("Case2", None, counts, rng_seed)


def ballistic_fraction(flow: FlowSpec, n_seeds: int = 100, rng_seed: int = 0,
                       t_max: float = 200.0, tol: float = 1e-9) -> float:
    """Fraction of seeded 3D orbits whose displacement grows linearly."""
    _steady(flow)
    if flow.dim != 3:
        raise ArgumentError("ballistic_fraction needs a 3D flow")
    hits = 0
    for x0 in seed_points(n_seeds, 3, rng_seed):
        rec = integrate_orbit(flow, x0, t_max, tol)
        if rec.dense is not None and _ballistic(rec.times, rec.points, flow) is not None:
            hits += 1
    return hits / n_seeds
