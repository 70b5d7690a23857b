"""Separable potentials ``v(x, t) = f(t) g(x)`` and their time integrals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


def adaptive_simpson(func: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-9, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with absolute tolerance ``tol``."""
    if b == a:
        return 0.0
    if b < a:
        return -adaptive_simpson(func, b, a, tol, max_depth)

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = func(lm), func(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + recurse(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    fa, fb, fm = func(a), func(b), func(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


@dataclass(frozen=True)
class TimeProfile:
    """Positive time factor ``f(t)``.

    kinds: ``constant`` (``scale``), ``power`` (``scale * (1+t)**beta``),
    ``exponential`` (``scale * exp(rate * t)``), ``table`` (piecewise
    constant, value ``values[k]`` on ``[times[k], times[k+1])``, last value
    extended), ``callable`` (arbitrary ``func``).
    """

    kind: str = "constant"
    scale: float = 1.0
    beta: float = 0.0
    rate: float = 0.0
    times: tuple = ()
    values: tuple = ()
    func: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "power", "exponential", "table", "callable"):
            raise ValueError(f"unknown time profile {self.kind!r}")
        if self.scale <= 0:
            raise ValueError("time profile must be positive")
        if self.kind == "table":
            t = np.asarray(self.times, float)
            v = np.asarray(self.values, float)
            if t.size == 0 or t.shape != v.shape or t[0] != 0 or np.any(np.diff(t) <= 0):
                raise ValueError("table profile needs increasing times from 0 and matching values")
            if np.any(v <= 0):
                raise ValueError("time profile must be positive")
        if self.kind == "callable" and self.func is None:
            raise ValueError("callable profile needs func")

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or (self.kind == "power" and self.beta == 0) or (
            self.kind == "exponential" and self.rate == 0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full(t.shape, self.scale)
        if self.kind == "power":
            return self.scale * (1.0 + t) ** self.beta
        if self.kind == "exponential":
            return self.scale * np.exp(self.rate * t)
        if self.kind == "table":
            tt = np.asarray(self.times)
            k = np.clip(np.searchsorted(tt, t, side="right") - 1, 0, tt.size - 1)
            return np.asarray(self.values)[k] * self.scale
        return np.vectorize(self.func, otypes=[float])(t) * self.scale

    def integral(self, a, b, exponent: float = 1.0, tol: float = 1e-9):
        """``int_a^b f(t)**exponent dt``, elementwise over arrays ``a <= b``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        e = exponent
        c = self.scale ** e
        if self.kind == "constant" or self.is_constant:
            return c * (b - a)
        if self.kind == "power":
            q = self.beta * e + 1.0
            if q == 0:
                return c * (np.log1p(b) - np.log1p(a))
            return c * ((1.0 + b) ** q - (1.0 + a) ** q) / q
        if self.kind == "exponential":
            lam = self.rate * e
            return c * (np.exp(lam * b) - np.exp(lam * a)) / lam
        if self.kind == "table":
            return c * (self._table_primitive(b, e) - self._table_primitive(a, e))
        f = lambda s: float(self.func(s)) ** e  # noqa: E731
        out = np.empty(np.broadcast(a, b).shape)
        for k, (lo, hi) in enumerate(zip(np.broadcast_to(a, out.shape).ravel(),
                                         np.broadcast_to(b, out.shape).ravel())):
            out.flat[k] = c * adaptive_simpson(f, lo, hi, tol)
        return out

    def _table_primitive(self, t, e):
        tt = np.asarray(self.times, float)
        vv = np.asarray(self.values, float) ** e
        cum = np.concatenate([[0.0], np.cumsum(vv[:-1] * np.diff(tt))])
        k = np.clip(np.searchsorted(tt, t, side="right") - 1, 0, tt.size - 1)
        return cum[k] + vv[k] * (t - tt[k])


@dataclass(frozen=True)
class SpaceProfile:
    """Positive vertex factor ``g(x)``.

    kinds: ``constant`` (``scale``), ``power`` (``scale * (1 + d(x, x0))**gamma``)
    and ``table`` (explicit per-vertex values aligned with the graph).
    """

    kind: str = "constant"
    scale: float = 1.0
    gamma: float = 0.0
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "power", "table"):
            raise ValueError(f"unknown space profile {self.kind!r}")
        if self.scale <= 0:
            raise ValueError("space profile must be positive")
        if self.kind == "table" and np.any(np.asarray(self.values, float) <= 0):
            raise ValueError("space profile must be positive")

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or (self.kind == "power" and self.gamma == 0)

    @property
    def needs_distance(self) -> bool:
        return self.kind == "power" and self.gamma != 0

    def __call__(self, dist=None, n: int | None = None):
        """Values on the vertices; ``dist`` holds ``d(x, x0)`` when needed."""
        if self.kind == "table":
            return self.scale * np.asarray(self.values, dtype=float)
        if self.is_constant:
            size = n if n is not None else np.asarray(dist).size
            return np.full(size, self.scale)
        if dist is None:
            raise ValueError("power-of-distance profile needs distances from x0")
        return self.scale * (1.0 + np.asarray(dist, float)) ** self.gamma


@dataclass(frozen=True)
class Potential:
    """``v(x, t) = f(t) * g(x)`` with both factors positive."""

    time: TimeProfile = TimeProfile()
    space: SpaceProfile = SpaceProfile()

    @classmethod
    def constant(cls, c: float = 1.0) -> "Potential":
        return cls(TimeProfile("constant", scale=c))

    @property
    def is_constant(self) -> bool:
        return self.time.is_constant and self.space.is_constant

    @property
    def time_independent(self) -> bool:
        return self.time.is_constant

    def space_values(self, dist=None, n=None) -> np.ndarray:
        return self.space(dist, n)

    def __call__(self, t: float, space_values: np.ndarray) -> np.ndarray:
        return float(self.time(t)) * space_values
