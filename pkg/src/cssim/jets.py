"""Truncated multivariate Taylor expansions about a fixed spacetime point.

A field is represented by the coefficients of its Taylor polynomial in the
local coordinates x - p, up to total order K. Differentiation is exact on
these coefficients, so composing up to K derivatives and evaluating at p
reproduces analytic derivatives to rounding.
"""
from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np


class JetSpace:
    def __init__(self, order: int = 4, nvars: int = 3):
        self.order = order
        self.nvars = nvars
        monos = [m for m in np.ndindex(*(order + 1,) * nvars) if sum(m) <= order]
        monos.sort(key=lambda m: (sum(m), tuple(-x for x in m)))
        self.monomials = monos
        self.size = len(monos)
        index = {m: i for i, m in enumerate(monos)}
        n = self.size
        # only the (i, j) pairs whose product survives truncation
        left, right, target = [], [], []
        for i, a in enumerate(monos):
            for j, b in enumerate(monos):
                c = tuple(x + y for x, y in zip(a, b))
                if c in index:
                    left.append(i)
                    right.append(j)
                    target.append(index[c])
        self._left = np.array(left)
        self._right = np.array(right)
        scatter = np.zeros((len(target), n))
        scatter[np.arange(len(target)), target] = 1.0
        self._scatter = scatter
        self.diff_mats = np.zeros((nvars, n, n))
        for i, m in enumerate(monos):
            for mu in range(nvars):
                if m[mu] > 0:
                    lower = list(m)
                    lower[mu] -= 1
                    self.diff_mats[mu, i, index[tuple(lower)]] = m[mu]
        self.linear = [index[tuple(int(k == mu) for k in range(nvars))] for mu in range(nvars)]

    def mul(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Truncated product of jet arrays (..., size), broadcasting leading axes."""
        return (x[..., self._left] * y[..., self._right]) @ self._scatter

    def diff(self, x: np.ndarray, mu: int) -> np.ndarray:
        return x @ self.diff_mats[mu]

    def const(self, value, shape=()) -> np.ndarray:
        value = np.asarray(value)
        out = np.zeros(value.shape + (self.size,), dtype=np.result_type(value, float))
        out[..., 0] = value
        return out

    def coordinate(self, mu: int, at: float) -> np.ndarray:
        """Jet of the coordinate function x^mu about a point whose mu-coordinate is `at`."""
        out = np.zeros(self.size)
        out[0] = at
        out[self.linear[mu]] = 1.0
        return out

    def value(self, x: np.ndarray) -> np.ndarray:
        return x[..., 0]

    def compose(self, x: np.ndarray, derivs) -> np.ndarray:
        """g(x) for a scalar function g given its derivatives g^(k)(x0), k = 0..order."""
        x0 = x[..., 0]
        dx = x.copy()
        dx[..., 0] = 0
        out = np.zeros_like(x, dtype=np.result_type(x, *[np.asarray(d) for d in derivs]))
        power = self.const(np.ones_like(x0))
        for k in range(self.order + 1):
            out = out + (np.asarray(derivs[k]) / factorial(k))[..., None] * power
            power = self.mul(power, dx)
        return out

    def power(self, x: np.ndarray, p: float) -> np.ndarray:
        x0 = x[..., 0]
        derivs = []
        coef = 1.0
        for k in range(self.order + 1):
            derivs.append(coef * x0 ** (p - k))
            coef *= p - k
        return self.compose(x, derivs)

    def sqrt(self, x):
        return self.power(x, 0.5)

    def reciprocal(self, x):
        return self.power(x, -1.0)

    def log(self, x):
        x0 = x[..., 0]
        derivs = [np.log(x0)] + [(-1) ** (k - 1) * factorial(k - 1) * x0 ** (-k) for k in range(1, self.order + 1)]
        return self.compose(x, derivs)

    def random_polynomial(self, rng: np.random.Generator, shape=(), degree: int = 3, complex_: bool = False):
        """Random polynomial of the given degree in the local coordinates, coefficients ~ U(-1, 1)."""
        out = np.zeros(tuple(shape) + (self.size,), dtype=complex if complex_ else float)
        for i, m in enumerate(self.monomials):
            if sum(m) <= degree:
                c = rng.uniform(-1, 1, size=shape)
                if complex_:
                    c = c + 1j * rng.uniform(-1, 1, size=shape)
                out[..., i] = c
        return out


@lru_cache(maxsize=8)
def jet_space(order: int = 4) -> JetSpace:
    return JetSpace(order)
