"""Minimal crossing times for controlled paths in a stirred medium.

Admissible paths obey ``|gamma' + A V(gamma)| <= 1``, i.e.
``gamma' = -A V + b`` with ``|b| <= 1``.  The minimal time ``u`` to reach
a target line solves the stationary HJB equation

    |Du| + A V.Du = 1,    u = 0 on the target,

which we discretize on a stripe (clamped along the stripe axis, periodic
across it) with a monotone upwind scheme and solve by fast sweeping.

Local solver
------------
At a node with neighbours ``a`` (along the axis) and ``c`` (across) in one
quadrant, a control moving at velocity ``g`` (componentwise >= 0 in that
quadrant's orientation) reaches the stencil after time ``h/(g1+g2)``
and lands at the convex combination of the neighbours, so

    u = min_g (h + g1 a + g2 c) / (g1 + g2),   g in disk(-A V, 1) within the quadrant.

The ratio is minimized exactly by Dinkelbach iteration with a closed-form
linear maximization over the disk-quadrant intersection.  This is the
Kushner-Dupuis upwind scheme for the control problem: monotone, consistent,
and its fixed point is unique because circulating forever costs infinite
time.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numba import njit

from .errors import ArgumentError, NonConvergence, StalledPath, UnsupportedOperation
from .flows import FlowSpec, velocity
from .grid import GridField

INF = 1e300
_BIG = 1e299


@njit(cache=True, inline="always")
def _lin_max(m1, m2, d1, d2, allow1, allow2):
    # maximize d.g over disk(m, 1) in the closed first quadrant, optionally
    # pinned to the axis g1 = 0 (allow1 False) or g2 = 0 (allow2 False)
    best = -INF
    b1 = 0.0
    b2 = 0.0
    if allow1 and allow2:
        nd = math.sqrt(d1 * d1 + d2 * d2)
        if nd > 0:
            q1 = m1 + d1 / nd
            q2 = m2 + d2 / nd
            if q1 >= 0 and q2 >= 0:
                return d1 * q1 + d2 * q2, q1, q2
    if abs(m1) <= 1.0 and allow2:
        s = math.sqrt(1.0 - m1 * m1)
        for g2 in (m2 - s, m2 + s):
            if g2 >= 0 and d2 * g2 > best:
                best = d2 * g2
                b1 = 0.0
                b2 = g2
        if m2 - s <= 0 <= m2 + s and 0.0 > best:
            best = 0.0
            b1 = 0.0
            b2 = 0.0
    if abs(m2) <= 1.0 and allow1:
        s = math.sqrt(1.0 - m2 * m2)
        for g1 in (m1 - s, m1 + s):
            if g1 >= 0 and d1 * g1 > best:
                best = d1 * g1
                b1 = g1
                b2 = 0.0
    return best, b1, b2


@njit(cache=True)
def _local(m1, m2, a, c, h):
    """Minimal quadrant value and the minimizing velocity ``(u, g1, g2)``."""
    fa = a < _BIG
    fc = c < _BIG
    if not fa and not fc:
        return INF, 0.0, 0.0
    val, g1, g2 = _lin_max(m1, m2, 1.0 if fa else 0.0, 1.0 if fc else 0.0, fa, fc)
    if val == -INF or g1 + g2 <= 0:
        return INF, 0.0, 0.0
    lam = (h + (g1 * a if fa else 0.0) + (g2 * c if fc else 0.0)) / (g1 + g2)
    b1 = g1
    b2 = g2
    for _ in range(30):
        d1 = lam - a if fa else 0.0
        d2 = lam - c if fc else 0.0
        val, g1, g2 = _lin_max(m1, m2, d1, d2, fa, fc)
        if g1 + g2 <= 0:
            break
        new = (h + (g1 * a if fa else 0.0) + (g2 * c if fc else 0.0)) / (g1 + g2)
        if new >= lam - 1e-15 * abs(lam):
            if new < lam:
                lam = new
                b1 = g1
                b2 = g2
            break
        lam = new
        b1 = g1
        b2 = g2
    return lam, b1, b2


@njit(cache=True)
def _sweep(u, W1, W2, h, di, dj, replace):
    """One Gauss-Seidel pass in the ordering (di, dj); row 0 is the target.

    With ``replace`` False values only decrease (first phase, from +inf);
    with ``replace`` True each node takes the local solution outright.
    Returns the largest change.
    """
    N1, N2 = u.shape
    res = 0.0
    i0 = 1 if di > 0 else N1 - 1
    i1 = N1 if di > 0 else 0
    j0 = 0 if dj > 0 else N2 - 1
    j1 = N2 if dj > 0 else -1
    for i in range(i0, i1, di):
        for j in range(j0, j1, dj):
            best = INF
            w1 = W1[i, j]
            w2 = W2[i, j]
            for s1 in (-1, 1):
                ii = i + s1
                a = u[ii, j] if ii < N1 else INF
                for s2 in (-1, 1):
                    jj = j + s2
                    if jj < 0:
                        jj = N2 - 1
                    elif jj >= N2:
                        jj = 0
                    v = _local(s1 * w1, s2 * w2, a, u[i, jj], h)[0]
                    if v < best:
                        best = v
            old = u[i, j]
            if replace:
                d = abs(best - old)
                u[i, j] = best
            elif best < old:
                d = old - best if old < _BIG else INF
                u[i, j] = best
            else:
                d = 0.0
            if d > res:
                res = d
    return res


@njit(cache=True)
def _policy(u, W1, W2, h, ia, jc, g1s, g2s):
    """Greedy quadrant and velocity at every non-target node (Jacobi, no update)."""
    N1, N2 = u.shape
    for i in range(1, N1):
        for j in range(N2):
            best = INF
            w1 = W1[i, j]
            w2 = W2[i, j]
            for s1 in (-1, 1):
                ii = i + s1
                a = u[ii, j] if ii < N1 else INF
                for s2 in (-1, 1):
                    jj = j + s2
                    if jj < 0:
                        jj = N2 - 1
                    elif jj >= N2:
                        jj = 0
                    v, g1, g2 = _local(s1 * w1, s2 * w2, a, u[i, jj], h)
                    if v < best:
                        best = v
                        ia[i, j] = min(ii, N1 - 1)
                        jc[i, j] = jj
                        g1s[i, j] = g1
                        g2s[i, j] = g2


_ORDERS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass
class MinTimeField:
    """Arrival-time field on a stripe.

    ``u.values[i, j]`` is the time at the point whose coordinate along
    ``axis`` is ``offset + side*i*h`` and whose transverse coordinate is
    ``j*h``; ``i = 0`` is the target line.
    """

    u: GridField
    target_spec: dict
    A: float
    iterations: int
    sweep_residual: float
    unreached_first_pass: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def axis(self) -> int:
        return self.target_spec["axis"]

    def to_stripe(self, x):
        """Physical points -> (along, across) stripe coordinates."""
        x = np.asarray(x, dtype=float)
        ax = self.axis - 1
        s = (x[..., ax] - self.target_spec["offset"]) * self.target_spec["side"]
        return np.stack([s, x[..., 1 - ax]], axis=-1)

    def value(self, x):
        return self.u.interpolate(self.to_stripe(x))

    def gradient(self, x):
        """Physical-space gradient of the bilinear interpolant."""
        g = self.u.gradient(self.to_stripe(x))
        ax = self.axis - 1
        out = np.empty_like(g)
        out[..., ax] = g[..., 0] * self.target_spec["side"]
        out[..., 1 - ax] = g[..., 1]
        return out

    def line_values(self, distance: float) -> np.ndarray:
        """Nodal values on the line at ``distance`` from the target."""
        i = int(round(distance / self.u.h))
        return self.u.values[i]


def _stripe_velocity(flow, A, axis, offset, side, N1, n):
    h = 1.0 / n
    s = offset + side * h * np.arange(N1)
    tr = h * np.arange(n)
    S, T = np.meshgrid(s, tr, indexing="ij")
    X = np.stack([S, T] if axis == 1 else [T, S], axis=-1)
    V = velocity(flow, X)
    W1 = np.ascontiguousarray(-A * side * V[..., axis - 1])
    W2 = np.ascontiguousarray(-A * V[..., 2 - axis])
    # far edge slides: drop the outward drift so edge nodes stay feasible
    W1[-1] = np.minimum(W1[-1], 0.0)
    return W1, W2


def _evaluate_policy(ia, jc, g1, g2, h):
    """Exact values of a fixed stencil policy (one sparse direct solve)."""
    N1, n = ia.shape
    idx = np.arange(N1 * n).reshape(N1, n)
    inner = idx[1:].ravel()
    jj = np.broadcast_to(np.arange(n), (N1 - 1, n)).ravel()
    ii = np.repeat(np.arange(1, N1), n)
    a_idx = ia[1:].ravel() * n + jj
    c_idx = ii * n + jc[1:].ravel()
    G1 = g1[1:].ravel()
    G2 = g2[1:].ravel()
    rows = np.concatenate([idx[0], inner, inner, inner])
    cols = np.concatenate([idx[0], inner, a_idx, c_idx])
    vals = np.concatenate([np.ones(n), G1 + G2, -G1, -G2])
    M = sp.csc_matrix((vals, (rows, cols)), shape=(N1 * n, N1 * n))
    rhs = np.full(N1 * n, h)
    rhs[:n] = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return spla.splu(M, permc_spec="COLAMD").solve(rhs).reshape(N1, n)


def _gs(u, W1, W2, h, replace):
    res = 0.0
    for di, dj in _ORDERS:
        res = max(res, _sweep(u, W1, W2, h, di, dj, replace))
    return res


def solve_mintime(flow: FlowSpec, A: float, axis: int = 1, target_offset: float = 0.0,
                  domain_width: float = 1.0, n: int = 256, *, side: int = 1, pad: float = 0.0,
                  max_sweeps: int = 500, tol: float = 1e-10, warm_sweeps: int = 10,
                  max_policy_steps: int = 60) -> MinTimeField:
    """Minimal time to reach the line ``{x_axis = target_offset}``.

    The stripe covers ``target_offset + side*[0, domain_width + pad]`` along
    ``axis`` with ``n`` nodes per unit length, periodic across.  Paths may
    not leave the stripe; on the far edge the outward part of the drift is
    removed, so paths slide along it instead of being infeasible.

    Iteration
    ---------
    1. Fast sweeping from ``u = inf`` off the target with decrease-only
       updates.  Nodes inside closed streamlines faster than the control
       can stay unreached, since each depends on the next node around the
       loop; they are filled with the largest reached value.
    2. ``warm_sweeps`` replacement sweeps, then policy iteration: freeze
       the greedy stencil and velocity at every node, solve the resulting
       linear system exactly, repeat.  Plain sweeping converges only
       geometrically here (information has to spiral out of every cell),
       while policy iteration needs a handful of solves.
    3. Replacement sweeps until the largest update is below
       ``tol * (1 + max u)``; this certifies the result independently of
       step 2, which only supplies a starting point.

    ``iterations`` counts sweeps plus policy solves; more than
    ``max_sweeps`` sweeps raises :class:`NonConvergence`.
    """
    if flow.dim != 2:
        raise UnsupportedOperation("min-time solver is two-dimensional")
    if flow.time_dependent:
        raise UnsupportedOperation("min-time solver needs a steady flow")
    if axis not in (1, 2) or side not in (1, -1):
        raise ArgumentError("axis must be 1 or 2 and side +-1")
    if not domain_width > 0 or n < 4 or A < 0:
        raise ArgumentError("need domain_width > 0, n >= 4, A >= 0")
    h = 1.0 / n
    N1 = int(round((domain_width + pad) * n)) + 1
    W1, W2 = _stripe_velocity(flow, A, axis, target_offset, side, N1, n)
    u = np.full((N1, n), INF)
    u[0] = 0.0
    sweeps = 0
    res = INF
    while sweeps < max_sweeps:
        res = _gs(u, W1, W2, h, False)
        sweeps += 1
        if res <= tol:
            break
    unreached = u >= _BIG
    n_unreached = int(unreached.sum())
    policy_steps = 0
    if n_unreached:
        u[unreached] = u[~unreached].max()
        for _ in range(warm_sweeps):
            res = _gs(u, W1, W2, h, True)
            sweeps += 1
        ia = np.zeros(u.shape, dtype=np.int64)
        jc = np.zeros(u.shape, dtype=np.int64)
        g1 = np.zeros(u.shape)
        g2 = np.zeros(u.shape)
        while policy_steps < max_policy_steps:
            _policy(u, W1, W2, h, ia, jc, g1, g2)
            try:
                v = _evaluate_policy(ia, jc, g1, g2, h)
            except RuntimeError:
                v = None
            if v is None or not np.all(np.isfinite(v)) or v.min() < -tol:
                # improper policy (closed loop without exit): sweep and retry
                res = _gs(u, W1, W2, h, True)
                sweeps += 1
                if sweeps >= max_sweeps:
                    break
                continue
            policy_steps += 1
            change = float(np.max(np.abs(v - u)))
            u = np.ascontiguousarray(v)
            u[0] = 0.0
            if change <= tol * (1.0 + u.max()):
                break
    while sweeps < max_sweeps:
        res = _gs(u, W1, W2, h, True)
        sweeps += 1
        if res <= tol * (1.0 + u.max()):
            break
    if not res <= tol * (1.0 + u.max()):
        raise NonConvergence(f"fast sweeping did not converge in {max_sweeps} sweeps", residual=res)
    grid = GridField(u, h, (0.0, 0.0), (False, True))
    spec = {"axis": axis, "offset": float(target_offset), "side": side,
            "width": float(domain_width), "pad": float(pad)}
    return MinTimeField(grid, spec, float(A), sweeps + policy_steps, float(res), n_unreached,
                        {"flow": flow.name, "n": n, "sweeps": sweeps, "policy_steps": policy_steps})


def stripe_crossing_time(flow: FlowSpec, A: float, direction=(1.0, 0.0), width: float = 1.0,
                         n: int = 256, **kw) -> float:
    """Time for the fastest admissible path to cross a stripe of ``width``.

    ``direction`` is the propagation direction of the front (one of
    ``+-e1, +-e2``); the stripe lies between the line through the origin
    and its translate by ``width * direction``.  By reversing time this
    is the min-time field with target at the origin line, evaluated on
    the far line.
    """
    field_ = crossing_field(flow, A, direction, width, n, **kw)
    return float(field_.line_values(width).min())


def crossing_field(flow, A, direction=(1.0, 0.0), width=1.0, n=256, **kw) -> MinTimeField:
    d = np.asarray(direction, dtype=float)
    hits = [(k, s) for k in (1, 2) for s in (1, -1) if np.allclose(d, s * np.eye(2)[k - 1], atol=1e-12)]
    if not hits:
        raise ArgumentError("direction must be one of +-e1, +-e2")
    axis, side = hits[0]
    return solve_mintime(flow, A, axis, 0.0, width, n, side=side, **kw)


@dataclass
class Path:
    """Polyline with time stamps."""

    points: np.ndarray
    times: np.ndarray

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def __len__(self):
        return len(self.times)


def backtrack_path(field_: MinTimeField, flow: FlowSpec, start, dt: float | None = None,
                   max_steps: int | None = None) -> Path:
    """Follow ``gamma' = -A V(gamma) - Du/|Du|`` from ``start`` to the target.

    ``Du`` is the gradient of the bilinear interpolant; steps are Heun
    (RK2) with ``dt = h / (2 (1 + A sup|V|))`` by default.  The final step
    is cut where the path meets the target line.
    """
    A = field_.A
    h = field_.u.h
    if dt is None:
        dt = h / (2.0 * (1.0 + A * flow.max_speed))
    x = np.asarray(start, dtype=float).copy()
    u0 = float(field_.value(x))
    if max_steps is None:
        max_steps = int(20 * (u0 + 1.0) / dt) + 1000

    def rhs(y):
        g = field_.gradient(y)
        ng = math.hypot(g[0], g[1])
        if ng < 1e-8:
            raise StalledPath("gradient vanishes along the path", stalled_at=y.copy())
        return -A * velocity(flow, y) - g / ng

    def dist(y):
        return float(field_.to_stripe(y)[0])

    pts = [x.copy()]
    ts = [0.0]
    t = 0.0
    for _ in range(max_steps):
        k1 = rhs(x)
        k2 = rhs(x + dt * k1)
        xn = x + 0.5 * dt * (k1 + k2)
        d0, d1 = dist(x), dist(xn)
        if d1 <= 0.0:
            f = d0 / (d0 - d1) if d0 > d1 else 1.0
            pts.append(x + f * (xn - x))
            ts.append(t + f * dt)
            return Path(np.array(pts), np.array(ts))
        x = xn
        t += dt
        pts.append(x.copy())
        ts.append(t)
    raise StalledPath("path did not reach the target", stalled_at=x.copy())


@dataclass
class CrossCellReport:
    T: float
    threshold_time: float
    min_speed: float
    threshold_speed: float
    corollary_satisfied: bool
    hypotheses_violated: bool = False


def crosscell_diagnostic(path: Path, flow: FlowSpec, A: float, prediction=None) -> CrossCellReport:
    """Check the two-alternative bound for a cell-crossing path.

    Either the path is slow (``T >= log A / A``) or it passes close to a
    stagnation point (``min |V| <= 3 (K0+1) (K0 log A / A)^(1/3)``).  The
    bound assumes no open channels; when ``prediction`` (a dichotomy
    prediction from :mod:`frontlab.orbits`) is Case 1 the report is
    flagged ``hypotheses_violated``.
    """
    if A < 3:
        raise ArgumentError("the diagnostic needs A >= 3")
    K0 = flow.K0
    thr_t = math.log(A) / A
    speeds = np.linalg.norm(velocity(flow, path.points), axis=-1)
    vmin = float(speeds.min())
    thr_v = 3.0 * (K0 + 1.0) * (K0 * math.log(A) / A) ** (1.0 / 3.0)
    ok = path.duration >= thr_t or vmin <= thr_v
    violated = prediction is not None and getattr(prediction, "case", None) == "Case1"
    return CrossCellReport(path.duration, thr_t, vmin, thr_v, bool(ok), bool(violated))
