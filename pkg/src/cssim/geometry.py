"""Hyperboloidal charts, Killing/scaling fields, hyperboloid quadrature and slice interpolation."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .algebra import ETA

PAIRS = ((0, 1), (0, 2), (1, 2))


def to_hyperboloidal(t, x1, x2):
    t, x1, x2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x1, x2)))
    r = np.hypot(x1, x2)
    if np.any(t <= r):
        raise ValueError("point outside the forward cone t > r")
    tau = np.sqrt((t - r) * (t + r))
    y = np.arctanh(r / t)
    theta = np.mod(np.arctan2(x2, x1), 2 * np.pi)
    return tau, y, theta


def from_hyperboloidal(tau, y, theta):
    tau, y, theta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (tau, y, theta)))
    r = tau * np.sinh(y)
    return tau * np.cosh(y), r * np.cos(theta), r * np.sin(theta)


# Vector fields act on coordinate stacks X = (x^0, x^1, x^2) with any trailing shape,
# including truncated Taylor jets (all of these are linear in X).

def translation(mu: int, X: np.ndarray) -> np.ndarray:
    out = np.zeros_like(X)
    out[mu] = 1.0 if X.ndim == 1 else np.ones_like(X[mu])
    return out


def translation_jet(mu: int, X: np.ndarray) -> np.ndarray:
    """T_mu as a jet field: constant component 1 in slot mu."""
    out = np.zeros_like(X)
    out[mu, ..., 0] = 1.0
    return out


def lower(X: np.ndarray) -> np.ndarray:
    return np.einsum("mn,n...->m...", ETA, X)


def killing_vector(pair: tuple, X: np.ndarray) -> np.ndarray:
    """Z_{mu nu} = x_mu d_nu - x_nu d_mu."""
    mu, nu = pair
    xl = lower(X)
    out = np.zeros_like(X)
    out[nu] = xl[mu]
    out[mu] = -xl[nu]
    return out


def scaling(X: np.ndarray) -> np.ndarray:
    """S = x^mu d_mu."""
    return X.copy()


def proper_time(X: np.ndarray) -> np.ndarray:
    tau2 = X[0] ** 2 - X[1] ** 2 - X[2] ** 2
    if np.any(tau2 <= 0) or np.any(X[0] <= 0):
        raise ValueError("point outside the forward cone")
    return np.sqrt(tau2)


def normal(X: np.ndarray) -> np.ndarray:
    """N = S / tau, the future unit normal of H_tau."""
    return X / proper_time(X)


def d_theta(X: np.ndarray) -> np.ndarray:
    return np.stack([np.zeros_like(X[0]), -X[2], X[1]])


def d_y(X: np.ndarray) -> np.ndarray:
    """d_y = r d_t + t omega_j d_j."""
    r = np.hypot(X[1], X[2])
    with np.errstate(invalid="ignore", divide="ignore"):
        w1 = np.where(r > 0, X[1] / np.where(r > 0, r, 1), 1.0)
        w2 = np.where(r > 0, X[2] / np.where(r > 0, r, 1), 0.0)
    return np.stack([r, X[0] * w1, X[0] * w2])


def eta_product(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return np.einsum("m...,mn,n...->...", X, ETA, Y)


# ----------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class HyperboloidQuadrature:
    tau: float
    y: np.ndarray       # node rapidities (flattened)
    theta: np.ndarray
    weights: np.ndarray  # includes the measure density
    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    measure: str

    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(self.weights * f))

    @property
    def coords(self) -> np.ndarray:
        return np.stack([self.t, self.x1, self.x2])


def hyperboloid_quadrature(tau: float, y_max: float, n_y: int, n_theta: int,
                           measure: str = "paper", rule: str = "gauss") -> HyperboloidQuadrature:
    """Tensor quadrature on {tau} x [0, y_max] x S^1.

    measure="paper": tau^2 cosh y dy dtheta; measure="induced": tau^2 sinh y dy dtheta (the
    Riemannian area of H_tau, which is what the energy flux needs); measure="coordinate": dy dtheta.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if rule == "gauss":
        gy, gw = np.polynomial.legendre.leggauss(n_y)
        ys = 0.5 * y_max * (gy + 1)
        wy = 0.5 * y_max * gw
    elif rule == "trapezoid":
        ys = np.linspace(0.0, y_max, n_y)
        wy = np.full(n_y, y_max / (n_y - 1))
        wy[[0, -1]] *= 0.5
    else:
        raise ValueError(f"unknown rule {rule!r}")
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    wth = np.full(n_theta, 2 * np.pi / n_theta)
    Y, TH = np.meshgrid(ys, th, indexing="ij")
    W = np.outer(wy, wth)
    if measure == "paper":
        W = W * tau**2 * np.cosh(Y)
    elif measure == "induced":
        W = W * tau**2 * np.sinh(Y)
    elif measure != "coordinate":
        raise ValueError(f"unknown measure {measure!r}")
    t, x1, x2 = from_hyperboloidal(tau, Y, TH)
    return HyperboloidQuadrature(tau, Y.ravel(), TH.ravel(), W.ravel(), t.ravel(), x1.ravel(), x2.ravel(), measure)


def support_y_max(tau: float, radius: float) -> float:
    """Largest rapidity of H_tau inside the cone t - r >= radius (origin shifted by 2R)."""
    if tau <= radius:
        raise ValueError("H_tau does not meet the cone C_R")
    return float(np.log(tau / radius))


def hyperboloid_t_max(tau: float, radius: float) -> float:
    """Latest (shifted) time at which H_tau meets the cone C_R."""
    return (tau**2 + radius**2) / (2 * radius)


# -------------------------------------------------------------- interpolation

def _cubic_weights(s: np.ndarray) -> np.ndarray:
    """Lagrange weights on nodes -1, 0, 1, 2 for offset s in [0, 1]; shape (4, *s.shape)."""
    return np.stack([
        -s * (s - 1) * (s - 2) / 6,
        (s + 1) * (s - 1) * (s - 2) / 2,
        -(s + 1) * s * (s - 2) / 2,
        (s + 1) * s * (s - 1) / 6,
    ])


@dataclass(frozen=True)
class GridSpec:
    n: int
    h: float

    @property
    def x0(self) -> float:
        return -(self.n - 1) * self.h / 2

    @property
    def nodes(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.n)

    @property
    def half_width(self) -> float:
        return self.n * self.h / 2


def spatial_stencil(grid: GridSpec, x1: np.ndarray, x2: np.ndarray, margin: int = 1):
    """Base indices and cubic weights for a batch of points."""
    idx, w = [], []
    for x in (x1, x2):
        u = (np.asarray(x, dtype=float) - grid.x0) / grid.h
        i = np.floor(u).astype(int)
        i = np.minimum(i, grid.n - 2)
        s = u - i
        if np.any(i - 1 < margin) or np.any(i + 2 > grid.n - 1 - margin):
            raise ValueError("interpolation point outside the stored grid")
        idx.append(i - 1)
        w.append(_cubic_weights(s))
    return idx, w


def interpolate_grid(arr: np.ndarray, grid: GridSpec, x1, x2, stencil=None) -> np.ndarray:
    """Cubic (4x4 point) interpolation of arr (..., n, n) at points; returns (..., npts)."""
    (i, j), (wi, wj) = stencil if stencil is not None else spatial_stencil(grid, x1, x2)
    out = 0
    for a in range(4):
        for b in range(4):
            out = out + wi[a] * wj[b] * arr[..., i + a, j + b]
    return out


@dataclass
class SliceHistory:
    """Ring buffer of stored slices (t_k, {name: array}) at a uniform time stride."""
    grid: GridSpec
    depth: int = 4
    slices: deque = field(default_factory=deque)

    def push(self, t: float, fields: dict):
        if self.slices and t <= self.slices[-1][0]:
            raise ValueError("slice times must increase")
        self.slices.append((float(t), fields))
        while len(self.slices) > self.depth:
            self.slices.popleft()

    @property
    def times(self) -> np.ndarray:
        return np.array([s[0] for s in self.slices])

    def window(self) -> tuple[float, float]:
        """Time interval on which centred cubic interpolation is available."""
        if len(self.slices) < 4:
            return (np.inf, -np.inf)
        ts = self.times
        return ts[-3], ts[-2]

    def interpolate(self, names, t, x1, x2, exact_end: bool = False) -> dict:
        """Cubic interpolation in time (last four slices) and space at points (t, x1, x2)."""
        ts = self.times[-4:]
        if len(ts) < 4:
            raise ValueError("need four stored slices")
        dt = ts[1] - ts[0]
        t = np.asarray(t, dtype=float)
        lo, hi = (ts[0], ts[-1]) if exact_end else (ts[1], ts[2])
        if np.any(t < lo - 1e-9 * dt) or np.any(t > hi + 1e-9 * dt):
            raise ValueError("query time outside the stored window")
        s = (t - ts[1]) / dt
        wt = _cubic_weights(s)
        st = spatial_stencil(self.grid, x1, x2)
        sl = list(self.slices)[-4:]
        out = {}
        for name in names:
            acc = 0
            for k in range(4):
                acc = acc + wt[k] * interpolate_grid(sl[k][1][name], self.grid, x1, x2, st)
            out[name] = acc
        return out


def interpolate_state(history: SliceHistory, names, t, x1, x2) -> dict:
    return history.interpolate(names, t, x1, x2)
