"""Monotone finite-difference solver for the periodic front corrector.

We evolve ``u = G - p.x`` on the periodic unit square, where ``G`` solves
the level-set transport law ``G_t + A V.DG + sl |DG| = 0``.  Then

    u_t + sl |p + Du| + A V(x, t).(p + Du) = 0,    u(., 0) = 0,

and ``-mean(u)/t`` tends to the effective front speed.  Space is
discretized with a local Lax-Friedrichs Hamiltonian on first-order
one-sided differences (optionally WENO3), time with two-stage TVD
Runge-Kutta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .errors import ArgumentError, SolverFailure, UnsupportedOperation
from .flows import FlowSpec, velocity, velocity_on_grid
from .grid import GridField

# fastmath minus nnan/ninf so that blow-ups still surface as NaN/inf
_FM = {"nsz", "arcp", "contract", "afn", "reassoc"}

SCHEMES = ("upwind1", "weno3")


@dataclass(frozen=True)
class SolverParams:
    """Grid and time-stepping controls.

    ``t_final=None`` leaves the horizon to the caller's policy (see
    :func:`frontlab.speed_lab.estimate_speed`).
    """

    n: int = 256
    cfl: float = 0.4
    t_final: float | None = None
    scheme: str = "upwind1"
    record_every: int = 1

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 64 or n > 2048 or n & (n - 1):
            raise ArgumentError(f"n must be a power of two in [64, 2048], got {n!r}")
        if not 0.0 < self.cfl < 1.0:
            raise ArgumentError(f"cfl must lie in (0, 1), got {self.cfl}")
        if self.t_final is not None and not self.t_final > 0:
            raise ArgumentError("t_final must be positive")
        if self.scheme not in SCHEMES:
            raise ArgumentError(f"scheme must be one of {SCHEMES}")
        if self.record_every < 1:
            raise ArgumentError("record_every must be >= 1")


@dataclass
class CorrectorState:
    """Periodic corrector ``u`` at time ``t`` plus its mean history."""

    u: GridField
    t: float
    p: tuple
    A: float
    sl: float
    mean_u_history: list = field(default_factory=list)
    steps: int = 0
    diagnostics: dict = field(default_factory=dict)

    def history(self):
        """``(times, means)`` as arrays."""
        if not self.mean_u_history:
            return np.zeros(0), np.zeros(0)
        a = np.asarray(self.mean_u_history, dtype=float)
        return a[:, 0].copy(), a[:, 1].copy()

    def copy(self) -> "CorrectorState":
        return replace(self, u=self.u.copy(), mean_u_history=list(self.mean_u_history),
                       diagnostics=dict(self.diagnostics))


def initial_state(n: int, p, A: float, sl: float) -> CorrectorState:
    p = _unit(p)
    return CorrectorState(GridField(np.zeros((n, n)), 1.0 / n), 0.0, p, float(A), float(sl),
                          [(0.0, 0.0)])


def _unit(p):
    p = np.asarray(p, dtype=float)
    if p.shape != (2,):
        raise ArgumentError("p must be a 2-vector")
    if abs(math.hypot(p[0], p[1]) - 1.0) > 1e-12:
        raise ArgumentError(f"p must be a unit vector, |p| = {math.hypot(p[0], p[1])!r}")
    return (float(p[0]), float(p[1]))


# ---------------------------------------------------------------------------
# Hamiltonian


def numerical_hamiltonian(x, t, q_minus, q_plus, flow: FlowSpec, A: float, sl: float, p):
    """Local Lax-Friedrichs numerical Hamiltonian at points ``x``.

    ``q_minus``/``q_plus`` are the backward/forward difference gradients of
    ``u`` (last axis = component).  With ``qbar`` their average and
    ``alpha_i = sl + A |V_i|``::

        H = sl |p + qbar| + A V.(p + qbar) - sum_i alpha_i/2 (q_plus_i - q_minus_i)

    Nondecreasing in each ``q_minus_i`` and nonincreasing in each
    ``q_plus_i`` because ``alpha_i`` bounds ``|dH/dq_i|``.
    """
    qm = np.asarray(q_minus, dtype=float)
    qp = np.asarray(q_plus, dtype=float)
    V = velocity(flow, x, t)
    p = np.asarray(p, dtype=float)
    g = p + 0.5 * (qm + qp)
    alpha = sl + A * np.abs(V)
    return (sl * np.sqrt(np.sum(g * g, axis=-1)) + A * np.sum(V * g, axis=-1)
            - 0.5 * np.sum(alpha * (qp - qm), axis=-1))


def cfl_dt(flow: FlowSpec, A: float, sl: float, h: float, cfl: float) -> float:
    """``cfl * h / (2 d (sl + A sup|V|))`` with ``d = 2``."""
    if not h > 0:
        raise ArgumentError("h must be positive")
    return cfl * h / (4.0 * (sl + A * flow.max_speed))


@njit(cache=True, inline="always", fastmath=_FM)
def _lf(c, l, r, d, up_, p1, p2, v1, v2, A, sl, ih):
    dxm = (c - l) * ih
    dxp = (r - c) * ih
    dym = (c - d) * ih
    dyp = (up_ - c) * ih
    g1 = p1 + 0.5 * (dxm + dxp)
    g2 = p2 + 0.5 * (dym + dyp)
    a1 = sl + A * abs(v1)
    a2 = sl + A * abs(v2)
    return (sl * np.sqrt(g1 * g1 + g2 * g2) + A * (v1 * g1 + v2 * g2)
            - 0.5 * a1 * (dxp - dxm) - 0.5 * a2 * (dyp - dym))


@njit(cache=True, fastmath=_FM)
def _lf_stage(u, V1, V2, p1, p2, A, sl, ih, dt, base, a0, out, reduce):
    """out = a0*base + (1-a0)*(u - dt*H(u)); returns (sum, min, max) of out
    when ``reduce`` is set (zeros otherwise).

    ``out`` may alias ``base`` (reads and writes hit the same node only).
    """
    n1, n2 = u.shape
    b0 = 1.0 - a0
    s = 0.0
    mn = np.inf
    mx = -np.inf
    for i in range(n1):
        im = i - 1 if i > 0 else n1 - 1
        ip = i + 1 if i < n1 - 1 else 0
        um = u[im]
        uc = u[i]
        up = u[ip]
        w1 = V1[i]
        w2 = V2[i]
        bs = base[i]
        o = out[i]
        # wrap columns handled outside the branch-free bulk loop
        o[0] = a0 * bs[0] + b0 * (uc[0] - dt * _lf(uc[0], um[0], up[0], uc[n2 - 1], uc[1],
                                                   p1, p2, w1[0], w2[0], A, sl, ih))
        for j in range(1, n2 - 1):
            o[j] = a0 * bs[j] + b0 * (uc[j] - dt * _lf(uc[j], um[j], up[j], uc[j - 1], uc[j + 1],
                                                       p1, p2, w1[j], w2[j], A, sl, ih))
        j = n2 - 1
        o[j] = a0 * bs[j] + b0 * (uc[j] - dt * _lf(uc[j], um[j], up[j], uc[j - 1], uc[0],
                                                   p1, p2, w1[j], w2[j], A, sl, ih))
    if not reduce:
        return 0.0, 0.0, 0.0
    for i in range(n1):
        o = out[i]
        rs = 0.0
        for j in range(n2):
            v = o[j]
            rs += v
            if v < mn:
                mn = v
            if v > mx:
                mx = v
        s += rs
    return s, mn, mx


def _weno_derivs(u, h, axis):
    """Third-order WENO one-sided derivatives along ``axis`` (periodic)."""
    eps = 1e-6
    d = (u - np.roll(u, 1, axis)) / h          # d[i] = (u_i - u_{i-1})/h
    dm1 = np.roll(d, 1, axis)
    dp1 = np.roll(d, -1, axis)
    dp2 = np.roll(d, -2, axis)
    r = (eps + (d - dm1) ** 2) / (eps + (dp1 - d) ** 2)
    w = 1.0 / (1.0 + 2.0 * r * r)
    qm = 0.5 * (d + dp1) - 0.5 * w * (dp1 - 2 * d + dm1)
    r = (eps + (dp2 - dp1) ** 2) / (eps + (dp1 - d) ** 2)
    w = 1.0 / (1.0 + 2.0 * r * r)
    qp = 0.5 * (d + dp1) - 0.5 * w * (dp2 - 2 * dp1 + d)
    return qm, qp


def _weno_stage(u, V1, V2, p1, p2, A, sl, h, dt, base, a0, out, reduce=True):
    qm1, qp1 = _weno_derivs(u, h, 0)
    qm2, qp2 = _weno_derivs(u, h, 1)
    g1 = p1 + 0.5 * (qm1 + qp1)
    g2 = p2 + 0.5 * (qm2 + qp2)
    H = (sl * np.sqrt(g1 * g1 + g2 * g2) + A * (V1 * g1 + V2 * g2)
         - 0.5 * (sl + A * np.abs(V1)) * (qp1 - qm1) - 0.5 * (sl + A * np.abs(V2)) * (qp2 - qm2))
    out[...] = a0 * base + (1.0 - a0) * (u - dt * H)
    return float(out.sum()), float(out.min()), float(out.max())


class _Stepper:
    """Holds work arrays and velocity samples for repeated RK2 steps."""

    def __init__(self, flow: FlowSpec, state: CorrectorState, scheme: str = "upwind1"):
        if flow.dim != 2:
            raise UnsupportedOperation("the corrector solver is two-dimensional")
        self.flow = flow
        self.state = state
        self.u = state.u.values
        self.n = self.u.shape[0]
        self.h = 1.0 / self.n
        self.work = np.empty_like(self.u)
        self.scheme = scheme
        self.steady = not flow.time_dependent
        if self.steady:
            self.V = velocity_on_grid(flow, self.n)
        diam = math.sqrt(2.0)
        self.guard = 10.0 * (1.0 + state.A * flow.K0) * diam
        self.rate = state.sl + state.A * flow.max_speed + 1.0
        self.max_abs = 0.0

    def _vel(self, t):
        return self.V if self.steady else velocity_on_grid(self.flow, self.n, t)

    def _stage(self, u, V, dt, base, a0, out, reduce):
        st = self.state
        if self.scheme == "weno3":
            return _weno_stage(u, V[0], V[1], st.p[0], st.p[1], st.A, st.sl, self.h, dt,
                               base, a0, out)
        return _lf_stage(u, V[0], V[1], st.p[0], st.p[1], st.A, st.sl, 1.0 / self.h, dt,
                         base, a0, out, reduce)

    def advance(self, dt: float) -> float:
        """One TVD-RK2 step in place; returns the new spatial mean."""
        st = self.state
        t = st.t
        self._stage(self.u, self._vel(t), dt, self.u, 0.0, self.work, False)
        s, mn, mx = self._stage(self.work, self._vel(t + dt), dt, self.u, 0.5, self.u, True)
        st.t = t + dt
        st.steps += 1
        if not (math.isfinite(s) and math.isfinite(mn) and math.isfinite(mx)):
            raise SolverFailure("non-finite corrector values",
                                {"t": st.t, "steps": st.steps, "sum": s, "min": mn, "max": mx})
        if mx - mn > self.guard:
            raise SolverFailure("corrector oscillation exceeded the blow-up guard",
                                {"t": st.t, "steps": st.steps, "oscillation": mx - mn,
                                 "guard": self.guard})
        self.max_abs = max(self.max_abs, -mn, mx)
        self.last_min, self.last_max = mn, mx
        return s / self.u.size

    def audit(self):
        st = self.state
        _, means = st.history()
        st.diagnostics["growth_ok"] = bool(self.max_abs <= self.rate * st.t + 1e-12)
        st.diagnostics["mean_nonincreasing"] = bool(np.all(np.diff(means) <= 1e-12 * (1 + np.abs(means[1:]))))
        st.diagnostics["oscillation"] = self.last_max - self.last_min if st.steps else 0.0


def step(state: CorrectorState, flow: FlowSpec, params: SolverParams, dt: float) -> CorrectorState:
    """One TVD-RK2 step; returns a new state (the input is untouched)."""
    new = state.copy()
    stp = _Stepper(flow, new, params.scheme)
    m = stp.advance(dt)
    new.mean_u_history.append((new.t, m))
    return new


def _plan(t0, t_end, dt_max):
    nsteps = max(1, int(math.ceil((t_end - t0) / dt_max * (1 - 1e-14))))
    return nsteps, (t_end - t0) / nsteps


def evolve(flow: FlowSpec, p, A: float, sl: float, params: SolverParams, *,
           state: CorrectorState | None = None, t_end: float | None = None,
           dt: float | None = None) -> CorrectorState:
    """Run the corrector from ``u = 0`` (or from ``state``) up to ``t_end``.

    ``t_end`` defaults to ``params.t_final``.  Steps are equal, with the
    largest size not exceeding :func:`cfl_dt` (or ``dt`` if given); the
    spatial mean of ``u`` is recorded every ``params.record_every`` steps
    and at the final time.
    """
    if state is None:
        state = initial_state(params.n, p, A, sl)
    else:
        state = state.copy()
    t_end = params.t_final if t_end is None else t_end
    if t_end is None:
        raise ArgumentError("no horizon: set params.t_final or pass t_end")
    if A < 0 or not sl >= 0:
        raise ArgumentError("need A >= 0 and sl >= 0")
    dt_max = dt if dt is not None else cfl_dt(flow, A, sl, 1.0 / params.n, params.cfl)
    if t_end <= state.t:
        return state
    nsteps, h_t = _plan(state.t, t_end, dt_max)
    t0 = state.t
    stp = _Stepper(flow, state, params.scheme)
    hist = state.mean_u_history
    for k in range(1, nsteps + 1):
        m = stp.advance(h_t)
        state.t = t0 + k * h_t
        if k % params.record_every == 0 or k == nsteps:
            hist.append((state.t, m))
    stp.audit()
    return state


def front_arrival_time(flow: FlowSpec, A: float, n: int, axis: int = 1, sl: float = 1.0,
                       cfl: float = 0.4, t_max: float = 50.0) -> float:
    """First time the front started on ``{x_axis = 0}`` reaches ``{x_axis = 1}``.

    Uses the corrector with ``p = e_axis``: the zero level set of
    ``G = x_axis + u`` hits the line ``x_axis = 1`` when ``min u`` over
    that (periodic) line drops to ``-1``.  Linear interpolation in time
    between the bracketing steps.
    """
    if axis not in (1, 2):
        raise ArgumentError("axis must be 1 or 2")
    p = (1.0, 0.0) if axis == 1 else (0.0, 1.0)
    state = initial_state(n, p, A, sl)
    stp = _Stepper(flow, state)
    dt = cfl_dt(flow, A, sl, 1.0 / n, cfl)
    line = (lambda u: u[0, :]) if axis == 1 else (lambda u: u[:, 0])
    prev_t, prev = 0.0, 0.0
    while state.t < t_max:
        stp.advance(dt)
        cur = float(line(stp.u).min())
        if cur <= -1.0:
            return prev_t + (state.t - prev_t) * (prev + 1.0) / (prev - cur)
        prev_t, prev = state.t, cur
    raise SolverFailure("front did not arrive before t_max", {"t": state.t, "min_u": prev})


def cell_residual(state: CorrectorState, flow: FlowSpec, sT: float) -> float:
    """L-infinity residual of the cell problem on smooth nodes.

    Central differences are used wherever the two one-sided slopes agree
    to within ``10 sqrt(h)`` along both axes; kink nodes are skipped.  A
    diagnostic only: correctors are Lipschitz, not smooth.
    """
    if flow.time_dependent:
        raise UnsupportedOperation("cell residual is defined for steady flows only")
    u = state.u.values
    h = state.u.h
    n = u.shape[0]
    V1, V2 = velocity_on_grid(flow, n)
    thr = 10.0 * math.sqrt(h)
    g = []
    smooth = np.ones(u.shape, dtype=bool)
    for ax in (0, 1):
        dm = (u - np.roll(u, 1, ax)) / h
        dp = (np.roll(u, -1, ax) - u) / h
        smooth &= np.abs(dp - dm) <= thr
        g.append(0.5 * (dm + dp))
    g1 = state.p[0] + g[0]
    g2 = state.p[1] + g[1]
    r = np.abs(state.sl * np.hypot(g1, g2) + state.A * (V1 * g1 + V2 * g2) - sT)
    if not smooth.any():
        return float("nan")
    return float(r[smooth].max())


def monotonicity_audit(flow: FlowSpec, n_samples: int = 1000, seed: int = 0,
                       eps: float = 1e-6, p=(0.6, 0.8), A_max: float = 50.0) -> int:
    """Count sign violations of the scheme's monotonicity on random states.

    Raising a backward slope must not lower the numerical Hamiltonian and
    raising a forward slope must not raise it.  Returns the number of
    violations (0 means the audit passed).
    """
    r = np.random.default_rng(seed)
    x = r.random((n_samples, flow.dim))
    qm = r.normal(scale=5.0, size=(n_samples, 2))
    qp = r.normal(scale=5.0, size=(n_samples, 2))
    A = r.uniform(0.0, A_max, size=n_samples)
    bad = 0
    for k in range(n_samples):
        base = numerical_hamiltonian(x[k], 0.0, qm[k], qp[k], flow, A[k], 1.0, p)
        tol = 1e-12 * (1.0 + abs(base))
        for i in range(2):
            e = np.zeros(2)
            e[i] = eps
            up = numerical_hamiltonian(x[k], 0.0, qm[k], qp[k] + e, flow, A[k], 1.0, p)
            dn = numerical_hamiltonian(x[k], 0.0, qm[k] + e, qp[k], flow, A[k], 1.0, p)
            bad += int(up > base + tol) + int(dn < base - tol)
    return bad
