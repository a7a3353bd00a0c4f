"""Uniform grid container shared by the PDE and min-time solvers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class GridField:
    """Node values on a uniform grid with spacing ``h``.

    Node ``(i, j)`` sits at ``origin + (i*h, j*h)``.  ``periodic`` marks
    which axes wrap around (the corrector grid wraps in both, a min-time
    stripe only transversally).
    """

    values: np.ndarray
    h: float
    origin: tuple = (0.0, 0.0)
    periodic: tuple = (True, True)

    @property
    def shape(self):
        return self.values.shape

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    def coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.h * np.arange(self.values.shape[axis])

    def copy(self) -> "GridField":
        return GridField(self.values.copy(), self.h, self.origin, self.periodic)

    def interpolate(self, x) -> np.ndarray:
        """Bilinear interpolation at points ``x`` of shape ``(..., 2)``."""
        x = np.asarray(x, dtype=float)
        v = self.values
        idx = []
        frac = []
        for ax in range(2):
            s = (x[..., ax] - self.origin[ax]) / self.h
            m = v.shape[ax]
            if self.periodic[ax]:
                i0 = np.floor(s)
                f = s - i0
                i0 = i0.astype(np.int64) % m
                i1 = (i0 + 1) % m
            else:
                s = np.clip(s, 0.0, m - 1.0)
                i0 = np.minimum(np.floor(s).astype(np.int64), m - 2)
                f = s - i0
                i1 = i0 + 1
            idx.append((i0, i1))
            frac.append(f)
        (a0, a1), (b0, b1) = idx
        f, g = frac
        return ((1 - f) * (1 - g) * v[a0, b0] + f * (1 - g) * v[a1, b0]
                + (1 - f) * g * v[a0, b1] + f * g * v[a1, b1])

    def gradient(self, x) -> np.ndarray:
        """Gradient of the bilinear interpolant at ``x`` (cellwise constant slopes)."""
        x = np.asarray(x, dtype=float)
        e = 0.5 * self.h
        out = []
        for ax in range(2):
            d = np.zeros(2)
            d[ax] = e
            out.append((self.interpolate(x + d) - self.interpolate(x - d)) / (2 * e))
        return np.stack(out, axis=-1)
