"""Catalog of periodic incompressible velocity fields.

Every 2D flow is 1-periodic in both coordinates and comes with a stream
function ``H`` such that ``V = (-H_{x2}, H_{x1})``.  The 3D flows (ABC and
Kolmogorov) are written on the period-1 cube by the relabeling
``x -> 2*pi*x`` with the velocity values left unchanged.

New flows can be added with :func:`register_flow`; everything downstream
(solvers, orbit tools, CLI) looks flows up by name in the same registry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import ArgumentError, ConfigurationError, UnsupportedOperation

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FlowDef:
    """Registry entry: how to evaluate one named family of flows."""

    name: str
    dim: int
    time_dependent: bool
    defaults: Mapping[str, float]
    velocity: Callable
    stream: Optional[Callable] = None
    # (sup|V|, K0) in closed form, or None to fall back on sampling
    bounds: Optional[Callable] = None
    lipschitz: bool = True
    doc: str = ""
    # optional fast path: (axis coords, t, params) -> component grids
    grid: Optional[Callable] = None


@dataclass(frozen=True, eq=False)
class FlowSpec:
    """An immutable, fully parameterized flow from the catalog.

    Build these with :func:`make_flow`, which fills in defaults and the
    Lipschitz/speed bounds.
    """

    name: str
    params: Mapping[str, float]
    dim: int
    time_dependent: bool
    K0: float
    max_speed: float
    lipschitz: bool = True
    has_stream: bool = True

    def __repr__(self):
        p = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"FlowSpec({self.name}{': ' + p if p else ''})"

    def __reduce__(self):
        # rebuilt from the catalog in worker processes
        return (_rebuild, (self.name, dict(self.params)))

    def label(self) -> str:
        """Compact ``name[k=v;...]`` string used in CSV rows."""
        p = ";".join(f"{k}={v!r}" for k, v in sorted(self.params.items()))
        return p


@dataclass
class StagnationPoint:
    location: np.ndarray
    residual: float
    degenerate: bool
    jacobian_det: float


@dataclass
class StagnationSet:
    """Result of :func:`find_stagnation_points`."""

    points: list
    continuum_suspected: bool = False

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def locations(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, 2))
        return np.array([p.location for p in self.points])


@dataclass
class ValidationReport:
    mean_velocity: np.ndarray
    max_divergence: float
    periodicity_defect: float
    passed: bool
    notes: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# catalog definitions


def _zero_vel(x, t, prm):
    return tuple(np.zeros_like(xi) for xi in x)


def _zero_stream(x, t, prm):
    return np.zeros_like(x[0])


def _cellular_vel(x, t, prm):
    a = TWO_PI * x[0]
    b = TWO_PI * x[1]
    return (-TWO_PI * np.sin(a) * np.cos(b), TWO_PI * np.cos(a) * np.sin(b))


def _cellular_stream(x, t, prm):
    return np.sin(TWO_PI * x[0]) * np.sin(TWO_PI * x[1])


def _shear_vel(x, t, prm):
    amp = prm["amplitude"]
    return (amp * np.sin(TWO_PI * x[1]), np.zeros_like(x[0]))


def _shear_stream(x, t, prm):
    # -dH/dx2 = amp sin(2 pi x2)
    return prm["amplitude"] * np.cos(TWO_PI * x[1]) / TWO_PI + 0.0 * x[0]


def _catseye_vel(x, t, prm):
    d = prm["delta"]
    s1, c1 = np.sin(TWO_PI * x[0]), np.cos(TWO_PI * x[0])
    s2, c2 = np.sin(TWO_PI * x[1]), np.cos(TWO_PI * x[1])
    h1 = TWO_PI * (c1 * s2 - d * s1 * c2)
    h2 = TWO_PI * (s1 * c2 - d * c1 * s2)
    return (-h2, h1)


def _catseye_stream(x, t, prm):
    d = prm["delta"]
    a, b = TWO_PI * x[0], TWO_PI * x[1]
    return np.sin(a) * np.sin(b) + d * np.cos(a) * np.cos(b)


def _twoscale_vel(x, t, prm):
    e = prm["eps"]
    s1, c1 = np.sin(TWO_PI * x[0]), np.cos(TWO_PI * x[0])
    s2, c2 = np.sin(TWO_PI * x[1]), np.cos(TWO_PI * x[1])
    S1, C1 = np.sin(3 * TWO_PI * x[0]), np.cos(3 * TWO_PI * x[0])
    S2, C2 = np.sin(3 * TWO_PI * x[1]), np.cos(3 * TWO_PI * x[1])
    h1 = TWO_PI * c1 * s2 - 3 * TWO_PI * e * S1 * C2
    h2 = TWO_PI * s1 * c2 - 3 * TWO_PI * e * C1 * S2
    return (-h2, h1)


def _twoscale_stream(x, t, prm):
    a, b = TWO_PI * x[0], TWO_PI * x[1]
    return np.sin(a) * np.sin(b) + prm["eps"] * np.cos(3 * a) * np.cos(3 * b)


def _loglip_parts(x):
    s1, c1 = np.sin(TWO_PI * x[0]), np.cos(TWO_PI * x[0])
    s2, c2 = np.sin(TWO_PI * x[1]), np.cos(TWO_PI * x[1])
    S = s1 * s1 + s2 * s2
    sing = S <= 1e-300
    Ssafe = np.where(sing, 1.0, S)
    R = np.sqrt(-np.log(Ssafe / 4.0))
    return s1, c1, s2, c2, Ssafe, R, sing


def _loglip_vel(x, t, prm):
    s1, c1, s2, c2, S, R, sing = _loglip_parts(x)
    h1 = TWO_PI * c1 * s2 * (R - s1 * s1 / (S * R))
    h2 = TWO_PI * c2 * s1 * (R - s2 * s2 / (S * R))
    # removable singularity on the half-lattice
    return (np.where(sing, 0.0, -h2), np.where(sing, 0.0, h1))


def _loglip_stream(x, t, prm):
    s1, c1, s2, c2, S, R, sing = _loglip_parts(x)
    return np.where(sing, 0.0, s1 * s2 * R)


def unsteady_shifts(t, prm):
    """Phase shifts ``(alpha(t), beta(t))`` of the unsteady cellular flow.

    ``alpha = B * sign(sin wt) |sin wt|**r`` (and likewise ``beta`` with
    amplitude ``Bbeta``), which is Holder continuous with exponent ``r``.
    """
    s = math.sin(prm["omega"] * t)
    r = prm["r"]
    g = math.copysign(abs(s) ** r, s) if s != 0.0 else 0.0
    return prm["B"] * g, prm["Bbeta"] * g


def _unsteady_vel(x, t, prm):
    al, be = unsteady_shifts(t, prm)
    U = prm["U"]
    a = TWO_PI * (x[0] + al)
    b = TWO_PI * (x[1] + be)
    return (-U * TWO_PI * np.sin(a) * np.cos(b), U * TWO_PI * np.cos(a) * np.sin(b))


def _cellular_grid(ax, t, prm, al=0.0, be=0.0, U=1.0):
    a = TWO_PI * (ax + al)
    b = TWO_PI * (ax + be)
    s1, c1, s2, c2 = np.sin(a), np.cos(a), np.sin(b), np.cos(b)
    return (np.multiply.outer(-U * TWO_PI * s1, c2), np.multiply.outer(U * TWO_PI * c1, s2))


def _unsteady_grid(ax, t, prm):
    al, be = unsteady_shifts(t, prm)
    return _cellular_grid(ax, t, prm, al, be, prm["U"])


def _unsteady_stream(x, t, prm):
    al, be = unsteady_shifts(t, prm)
    return prm["U"] * np.sin(TWO_PI * (x[0] + al)) * np.sin(TWO_PI * (x[1] + be))


def _abc_vel(x, t, prm):
    a, b, c = prm["a"], prm["b"], prm["c"]
    y1, y2, y3 = TWO_PI * x[0], TWO_PI * x[1], TWO_PI * x[2]
    return (
        a * np.sin(y3) + c * np.cos(y2),
        b * np.sin(y1) + a * np.cos(y3),
        c * np.sin(y2) + b * np.cos(y1),
    )


def _kolmogorov_vel(x, t, prm):
    return (np.sin(TWO_PI * x[2]), np.sin(TWO_PI * x[0]), np.sin(TWO_PI * x[1]))


_CATALOG: dict[str, FlowDef] = {}


def register_flow(fdef: FlowDef) -> None:
    """Add a flow family to the catalog (extension point).

    ``fdef.velocity(x, t, params)`` receives a tuple of coordinate arrays
    (period-1 coordinates) and must return a tuple of velocity arrays of
    the same shape.  2D entries should also supply ``stream``.
    """
    if fdef.dim not in (2, 3):
        raise ConfigurationError(f"flow dimension must be 2 or 3, got {fdef.dim}")
    _CATALOG[fdef.name] = fdef


register_flow(FlowDef("zero", 2, False, {"dim": 2.0}, _zero_vel, _zero_stream,
                      bounds=lambda p: (0.0, 0.0), doc="V = 0"))
register_flow(FlowDef("cellular", 2, False, {}, _cellular_vel, _cellular_stream,
                      bounds=lambda p: (TWO_PI, TWO_PI ** 2), grid=_cellular_grid,
                      doc="H = sin(2 pi x1) sin(2 pi x2)"))
register_flow(FlowDef("shear", 2, False, {"amplitude": 1.0}, _shear_vel, _shear_stream,
                      bounds=lambda p: (abs(p["amplitude"]),
                                        max(abs(p["amplitude"]), TWO_PI * abs(p["amplitude"]))),
                      doc="V = (amplitude sin(2 pi x2), 0)"))
register_flow(FlowDef("cats_eye", 2, False, {"delta": 0.5}, _catseye_vel, _catseye_stream,
                      doc="H = sin sin + delta cos cos"))
register_flow(FlowDef("two_scale", 2, False, {"eps": 0.3}, _twoscale_vel, _twoscale_stream,
                      doc="H = sin sin + eps cos(6 pi x1) cos(6 pi x2)"))
register_flow(FlowDef("half_log_lip", 2, False, {}, _loglip_vel, _loglip_stream,
                      lipschitz=False,
                      doc="H = sin sin sqrt(-log((sin^2+sin^2)/4)); only 1/2-log-Lipschitz"))
register_flow(FlowDef("unsteady_cellular", 2, True,
                      {"U": 1.0, "B": 0.5, "omega": TWO_PI, "Bbeta": 0.0, "r": 1.0},
                      _unsteady_vel, _unsteady_stream, grid=_unsteady_grid,
                      bounds=lambda p: (TWO_PI * abs(p["U"]), TWO_PI ** 2 * abs(p["U"])),
                      doc="H = U sin(2 pi (x1 + alpha(t))) sin(2 pi (x2 + beta(t)))"))
register_flow(FlowDef("abc", 3, False, {"a": 1.0, "b": 1.0, "c": 1.0}, _abc_vel,
                      doc="ABC flow, period 2 pi rescaled to 1"))
register_flow(FlowDef("kolmogorov", 3, False, {}, _kolmogorov_vel,
                      bounds=lambda p: (math.sqrt(3.0), TWO_PI),
                      doc="(sin x3, sin x1, sin x2), period 2 pi rescaled to 1"))


def catalog() -> list[str]:
    return sorted(_CATALOG)


def _lookup(name: str) -> FlowDef:
    try:
        return _CATALOG[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown flow {name!r}; known flows: {', '.join(catalog())}") from None


# ---------------------------------------------------------------------------
# construction


def _rebuild(name, params):
    return make_flow(name, **params)


def make_flow(name: str, **params) -> FlowSpec:
    """Build a :class:`FlowSpec` by catalog name.

    Unknown names or parameters raise :class:`ConfigurationError`.  The
    special ``zero`` flow accepts ``dim=3`` for a 3D zero field.

    >>> make_flow("cats_eye", delta=0.5).params["delta"]
    0.5
    """
    fdef = _lookup(name)
    prm = dict(fdef.defaults)
    for k, v in params.items():
        if k not in prm:
            raise ConfigurationError(
                f"flow {name!r} has no parameter {k!r}; allowed: {sorted(prm) or 'none'}")
        try:
            prm[k] = float(v)
        except (TypeError, ValueError):
            raise ConfigurationError(f"parameter {k}={v!r} is not a number") from None
    dim = fdef.dim
    if name == "zero":
        dim = int(prm["dim"])
        if dim not in (2, 3):
            raise ConfigurationError("zero flow dim must be 2 or 3")
    if name == "cats_eye" and not 0.0 <= prm["delta"] < 1.0:
        raise ConfigurationError("cats_eye delta must lie in [0, 1)")
    if name == "unsteady_cellular" and not 0.0 < prm["r"] <= 1.0:
        raise ConfigurationError("unsteady_cellular Holder exponent r must lie in (0, 1]")
    frozen = MappingProxyType(prm)
    draft = FlowSpec(name, frozen, dim, fdef.time_dependent, 0.0, 0.0,
                     lipschitz=fdef.lipschitz, has_stream=fdef.stream is not None and dim == 2)
    speed, K0 = _bounds(draft, fdef)
    return FlowSpec(name, frozen, dim, fdef.time_dependent, K0, speed,
                    lipschitz=fdef.lipschitz, has_stream=draft.has_stream)


def with_params(flow: FlowSpec, **params) -> FlowSpec:
    """Copy of ``flow`` with some parameters replaced."""
    merged = dict(flow.params)
    merged.update(params)
    return make_flow(flow.name, **merged)


# ---------------------------------------------------------------------------
# evaluation


def _as_points(flow: FlowSpec, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (flow.dim,):
        raise ArgumentError(
            f"flow {flow.name!r} is {flow.dim}-dimensional but x has shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ArgumentError("x must be finite")
    return x


def velocity(flow: FlowSpec, x, t: float = 0.0) -> np.ndarray:
    """Velocity ``V(x, t)``; ``x`` has shape ``(dim,)`` or ``(..., dim)``."""
    x = _as_points(flow, x)
    fdef = _lookup(flow.name)
    comps = fdef.velocity(tuple(x[..., i] for i in range(flow.dim)), float(t), flow.params)
    return np.stack([np.broadcast_to(c, x.shape[:-1]) for c in comps], axis=-1)


def point_velocity(flow: FlowSpec):
    """Fast ``f(x) -> V(x, 0)`` for a single point, skipping validation (ODE right-hand sides)."""
    fn = _lookup(flow.name).velocity
    prm = flow.params
    dim = flow.dim

    def f(x):
        return np.array(fn(tuple(float(v) for v in x[:dim]), 0.0, prm), dtype=float)

    return f


def stream(flow: FlowSpec, x, t: float = 0.0) -> np.ndarray:
    """Stream function ``H(x, t)`` of a 2D flow."""
    if flow.dim != 2 or not flow.has_stream:
        raise UnsupportedOperation(f"flow {flow.name!r} has no stream function")
    x = _as_points(flow, x)
    fdef = _lookup(flow.name)
    out = fdef.stream((x[..., 0], x[..., 1]), float(t), flow.params)
    return np.broadcast_to(out, x.shape[:-1]).astype(float)


def velocity_jacobian(flow: FlowSpec, x, t: float = 0.0, step: float = 1e-5) -> np.ndarray:
    """``DV`` by central differences, shape ``(..., dim, dim)``; ``J[..., i, j] = dV_i/dx_j``."""
    x = _as_points(flow, x)
    cols = []
    for j in range(flow.dim):
        e = np.zeros(flow.dim)
        e[j] = step
        cols.append((velocity(flow, x + e, t) - velocity(flow, x - e, t)) / (2 * step))
    return np.stack(cols, axis=-1)


def grid_points(n: int, dim: int = 2, offset: float = 0.0):
    """Coordinates ``(i + offset)/n`` along each axis, ``ij`` indexing."""
    ax = (np.arange(n) + offset) / n
    return np.meshgrid(*([ax] * dim), indexing="ij")


def velocity_on_grid(flow: FlowSpec, n: int, t: float = 0.0, offset: float = 0.0):
    """Velocity components on the uniform ``n``-per-axis periodic grid."""
    fdef = _lookup(flow.name)
    if fdef.grid is not None and flow.dim == 2:
        ax = (np.arange(n) + offset) / n
        return tuple(np.ascontiguousarray(c) for c in fdef.grid(ax, float(t), flow.params))
    X = grid_points(n, flow.dim, offset)
    comps = fdef.velocity(tuple(X), float(t), flow.params)
    return tuple(np.ascontiguousarray(np.broadcast_to(c, X[0].shape), dtype=float) for c in comps)


# ---------------------------------------------------------------------------
# bounds and validation


def _sampled_bounds(flow: FlowSpec, n: int):
    fdef = _lookup(flow.name)
    ts = [0.0] if not flow.time_dependent else list(np.linspace(0.0, 1.0, 9))
    vmax = dmax = 0.0
    for t in ts:
        # offset keeps the samples away from removable singularities on the lattice
        X = grid_points(n, flow.dim, offset=0.5)
        h = 1.0 / n
        comps = fdef.velocity(tuple(X), t, flow.params)
        speed = np.sqrt(sum(np.asarray(c) ** 2 for c in comps))
        vmax = max(vmax, float(np.max(speed)))
        J = np.empty(X[0].shape + (flow.dim, flow.dim))
        for j in range(flow.dim):
            Xp = list(X)
            Xm = list(X)
            Xp[j] = X[j] + h / 2
            Xm[j] = X[j] - h / 2
            cp = fdef.velocity(tuple(Xp), t, flow.params)
            cm = fdef.velocity(tuple(Xm), t, flow.params)
            for i in range(flow.dim):
                J[..., i, j] = (np.asarray(cp[i]) - np.asarray(cm[i])) / h
        dmax = max(dmax, float(np.max(np.linalg.norm(J.reshape(-1, flow.dim, flow.dim), ord=2, axis=(1, 2)))))
    return vmax, dmax


def lipschitz_bound(flow: FlowSpec) -> float:
    """``K0 = max(sup|V|, sup|DV|)`` (operator norm for ``DV``).

    Closed form for trigonometric catalog flows; otherwise the sup of
    sampled values and finite-difference Jacobians (256 per axis in 2D,
    64 per axis in 3D) times a 1.05 safety factor.  For ``half_log_lip``
    the sampled value is finite but is not a true Lipschitz constant
    (``flow.lipschitz`` is False).
    """
    return _bounds(flow, _lookup(flow.name))[1]


def _bounds(flow: FlowSpec, fdef: FlowDef):
    if flow.name == "zero":
        return 0.0, 0.0
    if fdef.bounds is not None:
        speed, K0 = fdef.bounds(flow.params)
        return float(speed), float(K0)
    n = 256 if flow.dim == 2 else 64
    vmax, dmax = _sampled_bounds(flow, n)
    return 1.05 * vmax, 1.05 * max(vmax, dmax)


def validate_flow(flow: FlowSpec, t: float = 0.0, n: int | None = None,
                  n_random: int = 2000, seed: int = 0) -> ValidationReport:
    """Check mean zero, incompressibility and periodicity by sampling.

    The mean uses the periodic trapezoid rule (spectrally accurate for
    smooth periodic fields), divergence uses central differences with step
    1e-5, periodicity compares ``V(x + e_i)`` with ``V(x)``.
    """
    if n is None:
        n = 256 if flow.dim == 2 else 48
    X = np.stack(grid_points(n, flow.dim, offset=0.5), axis=-1)
    V = velocity(flow, X, t)
    mean = V.reshape(-1, flow.dim).mean(axis=0)

    step = 1e-5
    div = np.zeros(X.shape[:-1])
    for i in range(flow.dim):
        e = np.zeros(flow.dim)
        e[i] = step
        div += (velocity(flow, X + e, t)[..., i] - velocity(flow, X - e, t)[..., i]) / (2 * step)
    max_div = float(np.max(np.abs(div)))

    rng = np.random.default_rng(seed)
    P = rng.random((n_random, flow.dim))
    base = velocity(flow, P, t)
    defect = 0.0
    for i in range(flow.dim):
        e = np.zeros(flow.dim)
        e[i] = 1.0
        defect = max(defect, float(np.max(np.abs(velocity(flow, P + e, t) - base))))

    notes = []
    mean_ok = bool(np.all(np.abs(mean) <= 1e-8))
    div_tol = 1e-6 * flow.K0
    div_ok = max_div <= div_tol
    if not flow.lipschitz:
        notes.append("flow is not Lipschitz; divergence check is informational")
        div_ok = True
    if flow.dim == 3 and flow.name in ("abc", "kolmogorov"):
        notes.append("coordinates rescaled x -> 2 pi x, velocity values unchanged")
    per_ok = defect <= 1e-12 * max(1.0, flow.max_speed)
    return ValidationReport(mean, max_div, defect, mean_ok and div_ok and per_ok, notes)


# ---------------------------------------------------------------------------
# stagnation points


def _wrap(x):
    return x - np.floor(x)


def _periodic_dist(a, b):
    d = a - b
    d -= np.round(d)
    return np.sqrt(np.sum(d * d, axis=-1))


def _newton_zero(flow, x0, t, max_iter=50):
    x = np.array(x0, dtype=float)
    v = velocity(flow, x, t)
    r = float(np.linalg.norm(v))
    for _ in range(max_iter):
        if r <= 1e-14 * max(1.0, flow.max_speed):
            break
        J = velocity_jacobian(flow, x, t)
        step = np.linalg.lstsq(J, -v, rcond=1e-12)[0]
        if not np.all(np.isfinite(step)):
            return None, np.inf
        lam = 1.0
        for _ in range(30):
            xn = x + lam * step
            vn = velocity(flow, xn, t)
            rn = float(np.linalg.norm(vn))
            if rn < r or lam < 1e-6:
                break
            lam *= 0.5
        if not rn < r:
            break
        x, v, r = xn, vn, rn
    return x, r


def find_stagnation_points(flow: FlowSpec, t: float = 0.0, seeds_per_axis: int = 16,
                           tol: float | None = None, merge_radius: float = 1e-6,
                           accept: float = 1e-10) -> StagnationSet:
    """Newton-refined zeros of ``V(., t)`` in the unit cell.

    Starts from a ``seeds_per_axis`` square grid of cell-centred seeds,
    keeps seeds whose residual drops below ``accept``, and merges points
    closer than ``merge_radius`` modulo the period lattice.  A point is
    degenerate when ``|det DV| <= tol`` (default ``1e-6 * K0**2``).

    For fields whose zero set contains curves (shear lines, the zero
    flow) the refined points sample those curves; ``continuum_suspected``
    is raised when more than a quarter of the points are degenerate and
    they line up along curves.
    """
    if flow.dim != 2:
        raise UnsupportedOperation("stagnation search is implemented for 2D flows")
    if seeds_per_axis < 8:
        raise ArgumentError("seeds_per_axis must be at least 8")
    if tol is None:
        tol = 1e-6 * flow.K0 ** 2
    found = []
    for i in range(seeds_per_axis):
        for j in range(seeds_per_axis):
            x0 = ((i + 0.5) / seeds_per_axis, (j + 0.5) / seeds_per_axis)
            x, r = _newton_zero(flow, x0, t)
            if x is None or not r <= accept:
                continue
            x = _wrap(x)
            x[x >= 1.0] = 0.0
            # snap round-off so lattice points print as 0 rather than 1 - 1e-17
            x[np.abs(x - np.round(x)) < 1e-13] = np.round(x[np.abs(x - np.round(x)) < 1e-13]) % 1.0
            if any(_periodic_dist(x, p.location) <= merge_radius for p in found):
                continue
            det = float(np.linalg.det(velocity_jacobian(flow, x, t)))
            found.append(StagnationPoint(x, r, abs(det) <= tol, det))
    found.sort(key=lambda p: (round(p.location[0], 9), round(p.location[1], 9)))
    return StagnationSet(found, _continuum(found, seeds_per_axis))


def _continuum(points, seeds_per_axis) -> bool:
    degen = [p.location for p in points if p.degenerate]
    if not points or len(degen) <= 0.25 * len(points) or len(degen) < 3:
        return False
    P = np.array(degen)
    reach = 1.5 * math.sqrt(2.0) / seeds_per_axis
    on_curve = 0
    for k, x in enumerate(P):
        d = P - x
        d -= np.round(d)
        dist = np.sqrt(np.sum(d * d, axis=1))
        nb = d[(dist > 0) & (dist <= reach)]
        hit = False
        for a in range(len(nb)):
            for b in range(a + 1, len(nb)):
                cross = nb[a, 0] * nb[b, 1] - nb[a, 1] * nb[b, 0]
                if abs(cross) <= 1e-6 * reach * reach:
                    hit = True
                    break
            if hit:
                break
        on_curve += hit
    return on_curve > 0.5 * len(P)
