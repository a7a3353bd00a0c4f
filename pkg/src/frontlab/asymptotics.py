"""Travel-time integrals and growth-law fits over A-sweeps.

Two crossing-time integrals serve as oracles for the large-A behaviour:

``I(A) = int_0^1 dx / (1 + 2 pi A |sin 2 pi x|)``   (cellular, ~ log A / A)

``J(A) = int_0^1 ds / (1 + A s sqrt(-log s))``      (half-log-Lipschitz, ~ sqrt(log A) / A)

Each is computed by adaptive quadrature and, independently, by composite
Simpson on a fixed grid after a smoothing change of variables.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, simpson

from .errors import ArgumentError

MODELS = ("linear", "A_over_logA", "A_over_sqrtlogA", "constant")


def _check_A(A):
    if not A >= 0:
        raise ArgumentError("A must be nonnegative")


def _breaks(scale, hi):
    """Geometric breakpoints resolving a boundary layer of width ``scale``."""
    pts = []
    s = scale
    while s < hi:
        pts.append(s)
        s *= 10.0
    return pts


def cellular_crossing_integral(A: float, tol: float = 1e-10) -> float:
    """``I(A)``, integrated over ``[0, 1/4]`` and multiplied by 4."""
    _check_A(A)
    if A == 0:
        return 1.0
    a = 2 * math.pi * A

    def f(x):
        return 1.0 / (1.0 + a * math.sin(2 * math.pi * x))

    pts = _breaks(1.0 / a, 0.25)
    val, _ = quad(f, 0.0, 0.25, points=pts or None, epsabs=0.0, epsrel=tol, limit=500)
    return 4.0 * val


def _loglip_integrand(s, A):
    if s <= 0.0 or s >= 1.0:
        return 1.0
    return 1.0 / (1.0 + A * s * math.sqrt(-math.log(s)))


def loglip_crossing_integral(A: float, tol: float = 1e-10) -> float:
    """``J(A)``; the integrand tends to 1 at both endpoints."""
    _check_A(A)
    if A == 0:
        return 1.0
    pts = _breaks(1.0 / A, 0.5) + [0.5, 0.9, 0.99]
    pts = sorted(set(p for p in pts if 0 < p < 1))
    val, _ = quad(_loglip_integrand, 0.0, 1.0, args=(A,), points=pts, epsabs=0.0,
                  epsrel=tol, limit=500)
    return val


def cellular_crossing_simpson(A: float, panels: int = 10**6) -> float:
    """Fixed-grid Simpson value of ``I(A)``.

    With ``theta = 2 pi x``, ``t = tan(theta/2)`` and ``t = (e^s - 1)/a``
    the integrand becomes smooth on a scale of order one in ``s``.
    """
    _check_A(A)
    if A == 0:
        return 1.0
    a = 2 * math.pi * A
    s = np.linspace(0.0, math.log1p(a), panels + 1)
    t = np.expm1(s) / a
    g = 2.0 / (1.0 + 2 * a * t + t * t) * np.exp(s) / a
    return 4.0 / (2 * math.pi) * float(simpson(g, x=s))


def loglip_crossing_simpson(A: float, panels: int = 10**6) -> float:
    """Fixed-grid Simpson value of ``J(A)`` in the variable ``s = exp(-w^2)``.

    Near ``w = 0`` (``s = 1``) the integrand has a layer of width ``1/A``,
    resolved on ``[0, 1]`` by ``w = (e^r - 1)/A``.
    """
    _check_A(A)
    if A == 0:
        return 1.0

    def g(w):
        e = np.exp(-w * w)
        return 2 * w * e / (1.0 + A * w * e)

    half = panels // 2
    r = np.linspace(0.0, math.log1p(A), half + 1)
    w = np.expm1(r) / A
    inner = float(simpson(g(w) * np.exp(r) / A, x=r))
    W = math.sqrt(math.log(max(A, math.e))) + 6.0
    w = np.linspace(1.0, W, half + 1)
    # beyond W the integrand is 2 w e^{-w^2} to within A w e^{-w^2} << 1
    return inner + float(simpson(g(w), x=w)) + math.exp(-W * W)


# ---------------------------------------------------------------------------
# growth laws


def _log_shape(model, A):
    la = np.log(A)
    if model == "linear":
        return la
    if model == "A_over_logA":
        return la - np.log(la)
    if model == "A_over_sqrtlogA":
        return la - 0.5 * np.log(la)
    if model == "constant":
        return np.zeros_like(A)
    raise ArgumentError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")


def normalizer(law: str, A):
    """Factor that turns ``sT`` into the diagnostic ratio for ``law``."""
    return np.exp(-_log_shape(law, np.asarray(A, dtype=float)))


@dataclass
class GrowthFit:
    c: float
    q: float
    per_model_rss: dict
    selected: str
    n_points: int
    model_c: dict = field(default_factory=dict)


def _rows(records):
    A, s = [], []
    for r in records:
        if r.A >= 3 and r.converged:
            A.append(float(r.A))
            s.append(float(r.sT))
    return np.array(A), np.array(s)


def fit_growth_law(records) -> GrowthFit:
    """Fit ``sT ~ c A (log A)^(-q)`` and rank the candidate laws.

    Uses converged rows with ``A >= 3``.  The exponent comes from the
    regression ``log(A/sT) = -log c + q log log A``; each model in
    :data:`MODELS` is also fitted with its single constant, and the one
    with the least log-space residual is selected.
    """
    A, s = _rows(records)
    if len(np.unique(A)) < 4:
        raise ArgumentError(f"need at least 4 converged rows with distinct A >= 3, got {len(A)}")
    if np.any(~(s > 0)):
        raise ArgumentError("sT must be positive for a log-space fit")
    ls = np.log(s)
    x = np.log(np.log(A))
    y = np.log(A) - ls
    M = np.vstack([np.ones_like(x), x]).T
    (b0, q), *_ = np.linalg.lstsq(M, y, rcond=None)
    rss, cs = {}, {}
    for m in MODELS:
        r = ls - _log_shape(m, A)
        lc = r.mean()
        rss[m] = float(np.sum((r - lc) ** 2))
        cs[m] = float(math.exp(lc))
    sel = min(MODELS, key=lambda m: rss[m])
    return GrowthFit(float(math.exp(-b0)), float(q), rss, sel, len(A), cs)


@dataclass
class RatioTable:
    law: str
    rows: list
    spread: float
    trend: str
    change: float

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)


def ratio_table(records, law: str) -> RatioTable:
    """``(A, sT * normalizer(A))`` rows with spread and trend flags.

    ``spread`` is ``(max - min) / mean``; ``trend`` is ``increasing``,
    ``decreasing`` or ``mixed``; ``change`` is ``last/first - 1``.
    """
    rows = sorted(((float(r.A), float(r.sT)) for r in records if r.A > 0 and r.sT == r.sT))
    if not rows:
        return RatioTable(law, [], float("nan"), "mixed", float("nan"))
    A = np.array([a for a, _ in rows])
    v = np.array([s for _, s in rows]) * normalizer(law, A)
    spread = float((v.max() - v.min()) / v.mean())
    d = np.diff(v)
    trend = "increasing" if np.all(d > 0) else "decreasing" if np.all(d < 0) else "mixed"
    return RatioTable(law, list(zip(A.tolist(), v.tolist())), spread, trend,
                      float(v[-1] / v[0] - 1.0))
