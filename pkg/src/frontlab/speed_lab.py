"""Effective front speed from long-time corrector runs, and sweeps over it.

The front speed is read off the mean of the corrector: ``mean u(t)`` is
asymptotically ``-sT t + O(1)``, so ``sT`` is minus the least-squares
slope over the last quarter of the run.  Agreement (within 1%) with the
slope over the preceding quarter is the convergence test.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ArgumentError, FrontlabError
from .flows import FlowSpec
from .hj_solver import SolverParams, cfl_dt, evolve

# horizon policy used when params.t_final is None
MIN_TRAVEL = 4.0      # periods the front must cross before we trust the slope
T_CAP = 50.0
PERIODS_START = 4     # time-periodic flows: whole periods only


@dataclass(frozen=True)
class SpeedEstimate:
    sT: float
    p: tuple
    A: float
    n: int
    slope_window: tuple
    slope_residual: float
    converged: bool
    sl: float = 1.0
    t_final: float = 0.0
    slope_previous: float = float("nan")
    steps: int = 0
    underresolved: bool = False
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class SweepRecord:
    """One CSV row; ``error`` is set (and ``sT`` is NaN) for failed runs."""

    flow: str
    params: str
    p1: float
    p2: float
    sl: float
    A: float
    n: int
    cfl: float
    t_final: float
    sT: float
    slope_residual: float
    converged: bool
    wall_ms: float
    error: str = ""


def _fit(t, m):
    """Least-squares slope and RMS residual, fixed summation order."""
    tm = t.mean()
    mm = m.mean()
    dt = t - tm
    slope = float(np.dot(dt, m - mm) / np.dot(dt, dt))
    r = m - (mm + slope * dt)
    return slope, float(math.sqrt(np.dot(r, r) / len(r)))


def slope_windows(times, means, t_final):
    """``(slope_last, residual_last, slope_prev)`` over the last two quarters."""
    last = times >= 0.75 * t_final - 1e-12 * t_final
    prev = (times >= 0.5 * t_final - 1e-12 * t_final) & (times <= 0.75 * t_final + 1e-12 * t_final)
    if last.sum() < 2 or prev.sum() < 2:
        raise ArgumentError("too few history samples in the slope windows")
    s1, r1 = _fit(times[last], means[last])
    s0, _ = _fit(times[prev], means[prev])
    return s1, r1, s0


def time_period(flow: FlowSpec):
    """Temporal period of a time-periodic catalog flow, else None."""
    if flow.name == "unsteady_cellular" and flow.params["omega"] != 0:
        return 2 * math.pi / abs(flow.params["omega"])
    return None


def _estimate(state, flow, p, A, sl, params, t_final):
    times, means = state.history()
    s1, r1, s0 = slope_windows(times, means, t_final)
    sT = -s1
    conv = abs(s1 - s0) <= 0.01 * abs(s1)
    return SpeedEstimate(sT, tuple(p), float(A), params.n, (0.75 * t_final, t_final), r1,
                         bool(conv), float(sl), float(t_final), -s0, state.steps,
                         params.n < 4 * A, dict(state.diagnostics))


def estimate_speed(flow: FlowSpec, p, A: float, sl: float = 1.0,
                   params: SolverParams | None = None) -> SpeedEstimate:
    """Front speed ``sT(p, A)`` from the corrector's mean slope.

    With ``params.t_final`` set the run has exactly that horizon.
    Otherwise the horizon doubles until the two slope windows agree and
    the front has crossed at least ``MIN_TRAVEL`` periods (or ``T_CAP`` is
    hit); the run is continued, not restarted, at each doubling.
    Time-periodic flows start at four temporal periods so that both
    windows cover whole periods.
    """
    params = params or SolverParams()
    p = np.asarray(p, dtype=float)
    if p.shape != (2,) or abs(math.hypot(*p) - 1.0) > 1e-12:
        raise ArgumentError("p must be a unit 2-vector (|p| = 1 within 1e-12)")
    p = (float(p[0]), float(p[1]))
    if params.t_final is not None:
        state = evolve(flow, p, A, sl, params)
        return _estimate(state, flow, p, A, sl, params, params.t_final)
    period = time_period(flow)
    if period is not None:
        t = PERIODS_START * period
    else:
        t = MIN_TRAVEL / (sl + A * flow.max_speed)
    state = None
    while True:
        state = evolve(flow, p, A, sl, params, state=state, t_end=t)
        est = _estimate(state, flow, p, A, sl, params, t)
        if est.converged and est.sT * t >= MIN_TRAVEL or t >= T_CAP:
            return est
        t = min(2.0 * t, T_CAP)


def _record(flow, p, A, sl, params, est=None, wall=0.0, error=""):
    if est is None:
        return SweepRecord(flow.name, flow.label(), p[0], p[1], sl, A, params.n, params.cfl,
                           float(params.t_final or 0.0), float("nan"), float("nan"), False,
                           wall, error)
    return SweepRecord(flow.name, flow.label(), p[0], p[1], sl, A, params.n, params.cfl,
                       est.t_final, est.sT, est.slope_residual, est.converged, wall)


def _job(args):
    flow, p, A, sl, params, timing = args
    t0 = time.perf_counter()
    try:
        est = estimate_speed(flow, p, A, sl, params)
    except FrontlabError as e:
        wall = 1e3 * (time.perf_counter() - t0) if timing else 0.0
        return _record(flow, p, A, sl, params, None, wall, f"{type(e).__name__}: {e}")
    wall = 1e3 * (time.perf_counter() - t0) if timing else 0.0
    return _record(flow, p, A, sl, params, est, wall)


def run_jobs(jobs, n_workers: int = 1):
    """Map :func:`_job` over argument tuples, preserving input order."""
    if n_workers <= 1 or len(jobs) <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_workers) as ex:
        return list(ex.map(_job, jobs))


def sweep_A(flow: FlowSpec, p, A_list, sl: float = 1.0, params: SolverParams | None = None,
            jobs: int = 1, timing: bool = True) -> list:
    """One :class:`SweepRecord` per ``A``, in input order.

    Runs may execute concurrently (``jobs`` workers); a failing run yields
    a row with ``sT = nan`` and the error text instead of aborting.  With
    ``timing=False`` ``wall_ms`` is written as 0 so that output files are
    byte-reproducible.
    """
    params = params or SolverParams()
    A_list = [float(a) for a in A_list]
    if not A_list:
        raise ArgumentError("A_list is empty")
    if any(b <= a for a, b in zip(A_list, A_list[1:])):
        raise ArgumentError("A_list must be strictly increasing")
    p = tuple(float(v) for v in p)
    return run_jobs([(flow, p, A, sl, params, timing) for A in A_list], jobs)


@dataclass
class DirectionScan:
    """Speeds at equally spaced angles plus the subadditivity audit."""

    angles: np.ndarray
    speeds: np.ndarray
    audit_passed: bool
    violations: list
    pairs_checked: int
    estimates: list = field(default_factory=list, repr=False)

    def __iter__(self):
        return iter(zip(self.angles.tolist(), self.speeds.tolist()))

    def __len__(self):
        return len(self.angles)

    def speed_at(self, q) -> float:
        """Homogeneous extension ``sT(q) = |q| sT(q/|q|)`` at a sampled direction."""
        q = np.asarray(q, dtype=float)
        r = math.hypot(*q)
        ang = math.atan2(q[1], q[0]) % (2 * math.pi)
        k = int(round(ang / (2 * math.pi) * len(self.angles))) % len(self.angles)
        if abs((ang - self.angles[k] + math.pi) % (2 * math.pi) - math.pi) > 1e-9:
            raise ArgumentError("direction of q is not a sampled angle")
        return r * float(self.speeds[k])


def subadditivity_audit(angles, speeds, rel_tol: float = 0.05):
    """Check ``sT(p1 + p2) <= sT(p1) + sT(p2) + tol`` on sampled unit vectors.

    Only pairs whose sum points along a sampled angle can be checked
    (sums of equally spaced unit vectors bisect the two angles, which is a
    sample exactly when the index sum is even).  ``tol`` is ``rel_tol``
    times the right-hand side.
    """
    m = len(angles)
    violations = []
    checked = 0
    for i in range(m):
        for j in range(i + 1, m):
            if (i + j) % 2 or (j - i) * 2 == m:
                continue  # bisector not sampled, or p_i + p_j = 0
            k = ((i + j) // 2) % m
            half = (angles[j] - angles[i]) / 2
            q_norm = 2 * abs(math.cos(half))
            if math.cos(half) < 0:
                k = (k + m // 2) % m
            lhs = q_norm * speeds[k]
            rhs = speeds[i] + speeds[j]
            checked += 1
            if lhs > rhs + rel_tol * rhs:
                violations.append((i, j, lhs, rhs))
    return not violations, violations, checked


def direction_scan(flow: FlowSpec, A: float, n_dirs: int = 8, sl: float = 1.0,
                   params: SolverParams | None = None, jobs: int = 1) -> DirectionScan:
    """``sT`` at angles ``2 pi k / n_dirs`` with the subadditivity audit."""
    if n_dirs < 4:
        raise ArgumentError("n_dirs must be at least 4")
    params = params or SolverParams()
    angles = 2 * math.pi * np.arange(n_dirs) / n_dirs
    dirs = [(math.cos(a), math.sin(a)) for a in angles]
    ests = _map_estimates([(flow, d, A, sl, params) for d in dirs], jobs)
    speeds = np.array([e.sT for e in ests])
    ok, viol, checked = subadditivity_audit(angles, speeds)
    return DirectionScan(angles, speeds, ok, viol, checked, ests)


def _est_job(args):
    return estimate_speed(*args)


def _map_estimates(argl, jobs):
    if jobs <= 1 or len(argl) <= 1:
        return [_est_job(a) for a in argl]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_est_job, argl))


def scaling_invariance_check(flow: FlowSpec, p, A: float, params: SolverParams | None = None,
                             return_pair: bool = False):
    """Relative gap between ``sT(p, A, sl=1)`` and ``A sT(p, 1, sl=1/A)``.

    Both runs use the same grid and the same number of steps, the second
    with time step and horizon multiplied by ``A``; the two discrete
    updates agree up to rounding.  The horizon is ``params.t_final`` or
    the one chosen by :func:`estimate_speed`.
    """
    if not A > 0:
        raise ArgumentError("A must be positive")
    params = params or SolverParams()
    p = tuple(float(v) for v in p)
    T = params.t_final
    if T is None:
        T = estimate_speed(flow, p, A, 1.0, params).t_final
    dt = cfl_dt(flow, A, 1.0, 1.0 / params.n, params.cfl)
    nsteps = int(math.ceil(T / dt))
    fixed = replace(params, t_final=None)
    s1 = evolve(flow, p, A, 1.0, fixed, t_end=nsteps * dt, dt=dt)
    s2 = evolve(flow, p, 1.0, 1.0 / A, fixed, t_end=nsteps * (A * dt), dt=A * dt)
    t1, m1 = s1.history()
    t2, m2 = s2.history()
    a = -slope_windows(t1, m1, t1[-1])[0]
    b = -slope_windows(t2, m2, t2[-1])[0]
    gap = abs(a - A * b) / abs(a)
    if return_pair:
        return gap, a, A * b
    return gap


def lower_bound_ok(est: SpeedEstimate, flow: FlowSpec) -> bool:
    """Discrete form of ``sT >= |p|``: ``sT >= 1 - 3h (1 + A K0)``."""
    h = 1.0 / est.n
    return est.sT >= math.hypot(*est.p) - 3 * h * (1 + est.A * flow.K0)
