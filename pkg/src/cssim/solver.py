"""Temporal-gauge method-of-lines evolution of the reduced system, constraint-solving initial data,
RK4 stepping and binary checkpoints."""
from __future__ import annotations

import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import forms as fm
from . import model as md
from .algebra import Representation, bracket, model_algebra
from .geometry import GridSpec

SpatialGrid = GridSpec
HALO = 2
MAGIC = b"CSSIM1"


class NumericalAbort(RuntimeError):
    """Raised on NaN/Inf, support escape, or failed elliptic solves."""


@dataclass(frozen=True)
class SimState:
    phi: np.ndarray  # (v, n, n) complex
    pi: np.ndarray   # (v, n, n) complex
    a: np.ndarray    # (2, g, n, n) real
    b: np.ndarray    # (g, n, n) real
    t: float = 0.0

    def axpy(self, c: float, rate: "SimState") -> "SimState":
        return SimState(self.phi + c * rate.phi, self.pi + c * rate.pi,
                        self.a + c * rate.a, self.b + c * rate.b, self.t + c)

    def arrays(self) -> dict:
        return {"phi": self.phi, "pi": self.pi, "a": self.a, "b": self.b}


@dataclass(frozen=True)
class DataConfig:
    epsilon: float = 0.01
    radius_R: float = 1.0
    profile: str = "charged"   # bump | charged
    omega: float = 1.0


@dataclass(frozen=True)
class GridConfig:
    n: int = 256
    half_width: float = 21.76

    @property
    def h(self) -> float:
        return 2 * self.half_width / self.n

    def spec(self) -> GridSpec:
        return GridSpec(self.n, self.h)


@dataclass(frozen=True)
class TimeConfig:
    t_end: float = 20.0
    cfl_safety: float = 0.5
    diag_every: int = 10


@dataclass(frozen=True)
class HypConfig:
    taus: tuple = ()
    n_y: int = 48
    n_theta: int = 64
    stride: int = 1


@dataclass(frozen=True)
class OutputConfig:
    out_dir: str = "out"
    dump_state: bool = False


@dataclass(frozen=True)
class RunConfig:
    model: str = "csh_abelian"
    params: md.ModelParams = field(default_factory=md.ModelParams)
    data: DataConfig = field(default_factory=DataConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    hyperboloid: HypConfig = field(default_factory=HypConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = 0
    margin_cells: int = 4
    escape_tol: float = 1e-5  # ring amplitude / initial amplitude that counts as support escape

    def validate(self):
        if self.params.model != self.model:
            raise ValueError("params.model must match model")
        if self.grid.n < 16:
            raise ValueError("grid needs n >= 16")
        if self.data.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.data.radius_R <= 0:
            raise ValueError("radius_R must be positive")
        if not 0 < self.time.cfl_safety <= 2:
            raise ValueError("cfl_safety must lie in (0, 2]")
        reach = self.data.radius_R + self.time.t_end + self.margin_cells * self.grid.h
        if self.grid.half_width <= reach:
            raise ValueError(f"half_width {self.grid.half_width} must exceed R + t_end + margin = {reach:.6g}")
        return self


def cfl_dt(grid: GridSpec, safety: float) -> float:
    if not 0 < safety:
        raise ValueError("safety must be positive")
    return safety * grid.h / np.sqrt(2.0)


def bump(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = np.abs(s) < 1
    out[m] = np.exp(1 - 1 / (1 - s[m] ** 2))
    return out


def interior_mask(n: int, width: int) -> np.ndarray:
    m = np.zeros((n, n))
    m[width:n - width, width:n - width] = 1
    return m


# -------------------------------------------------------------- initial data

def profile_directions(v_dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(4, v_dim)) + 1j * rng.normal(size=(4, v_dim))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def matter_profile(cfg: RunConfig, rep: Representation):
    """(f, g) for CSH, (psi_0, None) for CSD."""
    g = cfg.grid.spec()
    x = g.nodes
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    R = cfg.data.radius_R
    eps = cfg.data.epsilon
    bmp = eps * bump(np.hypot(X1, X2) / R)
    d = profile_directions(rep.v_dim, cfg.seed)
    f = bmp * (d[0][:, None, None] + (X1 / R) * d[1][:, None, None])
    if cfg.data.profile == "bump":
        gg = np.zeros_like(f)
    elif cfg.data.profile == "charged":
        gg = bmp * cfg.data.omega * (1j * d[0][:, None, None] + (X2 / R) * d[2][:, None, None])
    else:
        raise ValueError(f"unknown profile {cfg.data.profile!r}")
    return f, gg


def _dd_operator(n_in: int, h: float):
    """-(D1 D1 + D2 D2) on interior unknowns (zero extension); symmetric positive definite."""
    w = 2 * HALO

    def embed(u):
        full = np.zeros((n_in + 2 * w, n_in + 2 * w))
        full[w:-w, w:-w] = u.reshape(n_in, n_in)
        return full

    def apply(u):
        full = embed(u)
        out = np.zeros_like(full)
        for ax in (0, 1):
            out += _d4(_d4(full, ax, h), ax, h)
        return -out[w:-w, w:-w].ravel()

    return LinearOperator((n_in * n_in, n_in * n_in), matvec=apply, dtype=float)


def _d4(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    return fm.central_diff(f, axis, h, 4)


def solve_curl(rho: np.ndarray, h: float, tol: float = 1e-13, maxiter: int = 20000):
    """chi with (D1D1 + D2D2) chi = rho at distance >= 4 from the edge, chi = (q/2pi) log|x| on the ring.

    Returns (chi, a) with a = (-D2 chi, D1 chi), so that D1 a_2 - D2 a_1 = rho on the interior.
    """
    n = rho.shape[-1]
    w = 2 * HALO
    x = (np.arange(n) - (n - 1) / 2) * h
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    q = float(np.sum(rho)) * h * h
    chi_b = (q / (2 * np.pi)) * np.log(np.hypot(X1, X2))
    chi_b[w:-w, w:-w] = 0
    lift = sum(_d4(_d4(chi_b, ax, h), ax, h) for ax in (0, 1))
    rhs = -(rho - lift)[w:-w, w:-w].ravel()
    n_in = n - 2 * w
    scale = np.max(np.abs(rhs), initial=0.0)
    chi = chi_b.copy()
    if scale > 0:
        op = _dd_operator(n_in, h)
        sol, info = cg(op, rhs, rtol=tol, atol=0.0, maxiter=maxiter)
        if info != 0:
            raise NumericalAbort(f"CG did not converge (info={info})")
        chi[w:-w, w:-w] = sol.reshape(n_in, n_in)
    a = np.stack([-_d4(chi, 1, h), _d4(chi, 0, h)])
    # the derivative halo is left at zero by central_diff; fill it from the exact log tail
    if q != 0:
        r2 = X1**2 + X2**2
        tail = np.stack([-(q / (2 * np.pi)) * X2 / r2, (q / (2 * np.pi)) * X1 / r2])
        ring = 1 - interior_mask(n, HALO)
        a = a + ring * tail
    return chi, a


@dataclass
class InitialData:
    state: SimState
    picard_iterations: int
    picard_history: list
    residual: float
    source: np.ndarray  # rho = (*J)_12 / kappa on the slice


def build_initial_data(cfg: RunConfig, alg=None, rep=None, tol: float = 1e-10, max_picard: int = 50) -> InitialData:
    if alg is None or rep is None:
        alg, rep = model_algebra(cfg.model)
    p = cfg.params
    grid = cfg.grid.spec()
    n, h = grid.n, grid.h
    f, g = matter_profile(cfg, rep)
    if p.coupled:
        rho = md.constraint_source(f, g, p, rep)
    else:
        rho = np.zeros((alg.dim, n, n))
    interior = interior_mask(n, 2 * HALO)
    a = np.zeros((2, alg.dim, n, n))
    history = []
    its = 0
    for its in range(1, max_picard + 1):
        src = rho - (0 if alg.abelian else bracket(a[0], a[1], alg))
        new = np.zeros_like(a)
        for A in range(alg.dim):
            _, new[:, A] = solve_curl(src[A], h)
        a = new
        res = _curvature_residual(a, rho, alg, h, interior)
        history.append(res)
        if alg.abelian or res < tol * max(cfg.data.epsilon**2, 1e-300) or np.max(np.abs(rho)) == 0:
            break
    else:
        raise NumericalAbort(f"Picard iteration did not converge: residuals {history}")
    b = -(_d4(a[0], 0, h) + _d4(a[1], 1, h)) * interior_mask(n, HALO)
    if p.dirac:
        # g is produced by the Dirac equation, not by the profile
        pi = md.csd_time_derivative(f, md.spatial_gradient(f, h), a, p, rep) * interior_mask(n, HALO)
    else:
        pi = g
    st = SimState(f.astype(complex), pi.astype(complex), a, b, 0.0)
    return InitialData(st, its, history, history[-1] if history else 0.0, rho)


def _curvature_residual(a, rho, alg, h, interior) -> float:
    F = _d4(a[1], 0, h) - _d4(a[0], 1, h) + bracket(a[0], a[1], alg)
    return float(np.max(np.abs((F - rho) * interior), initial=0.0))


# --------------------------------------------------------------------- rhs

@dataclass
class Rhs:
    """Right-hand side of the reduced temporal-gauge system; ``workers`` > 1 evaluates row chunks in threads."""
    params: md.ModelParams
    rep: Representation
    grid: GridSpec
    workers: int = 1
    path: str = "component"

    def __post_init__(self):
        self.mask = interior_mask(self.grid.n, HALO)

    def __call__(self, s: SimState) -> SimState:
        if self.workers <= 1:
            return self._eval(s)
        n = self.grid.n
        bounds = np.linspace(0, n, self.workers + 1).astype(int)
        chunks = [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
        with ThreadPoolExecutor(max_workers=self.workers) as ex:
            parts = list(ex.map(lambda c: self._chunk(s, *c), chunks))
        return SimState(*(np.concatenate([p[k] for p in parts], axis=-2) for k in range(4)), t=1.0)

    def _chunk(self, s: SimState, lo: int, hi: int):
        n = self.grid.n
        plo, phi_ = max(lo - HALO, 0), min(hi + HALO, n)
        sub = SimState(s.phi[..., plo:phi_, :], s.pi[..., plo:phi_, :], s.a[..., plo:phi_, :], s.b[..., plo:phi_, :], s.t)
        r = self._eval(sub, rows=(plo, phi_))
        cut = slice(lo - plo, lo - plo + hi - lo)
        return (r.phi[..., cut, :], r.pi[..., cut, :], r.a[..., cut, :], r.b[..., cut, :])

    def _eval(self, s: SimState, rows=None) -> SimState:
        p, rep, h = self.params, self.rep, self.grid.h
        mask = self.mask if rows is None else self.mask[rows[0]:rows[1]]
        phi, pi, a, b = s.phi, s.pi, s.a, s.b
        lap = fm.central_diff2(phi, 0, h)
        lap += fm.central_diff2(phi, 1, h)
        if not p.coupled:
            lap -= p.mass2 * phi
            lap *= mask
            return SimState(pi * mask, lap, np.zeros_like(a), np.zeros_like(b), 1.0)
        dphi = md.spatial_gradient(phi, h)
        J = md.current(phi, pi, dphi, a, p, rep)
        if p.dirac:
            F = _curvature_from_current(J, p)
            nonlin = self._kg_core(phi, dphi, a, b) + md.squared_dirac_source(phi, F, rep)
        elif self.path == "forms":
            nonlin = md.kg_nonlinearity_forms(phi, dphi, a, b, p, rep, pi)
        else:
            nonlin = md.kg_nonlinearity(phi, dphi, a, b, p, rep)
        rate_pi = lap - p.mass2 * phi - nonlin
        rate_a = md.connection_rate(J, p)
        if self.path == "forms":
            dj = md.dJ_pullback(phi, pi, a, p, rep, h)
        else:
            dj = md.dJ12(phi, pi, dphi, a, p, rep)
        rate_b = md.b_rate(dj, p)
        return SimState(pi * mask, rate_pi * mask, rate_a * mask, rate_b * mask, 1.0)

    def _kg_core(self, phi, dphi, a, b):
        """N without the potential: -2 a_j d_j phi + b phi - a_j a_j phi."""
        rep = self.rep
        out = md.act(b, phi, rep)
        for j in range(2):
            out = out - 2 * md.act(a[j], dphi[j], rep) - md.act(a[j], md.act(a[j], phi, rep), rep)
        return out


def _curvature_from_current(J: np.ndarray, p: md.ModelParams) -> dict:
    """F = (1/kappa) *J as {(mu, nu): component}."""
    star = fm.hodge(fm.Form(1, "lie", J)).comps / p.kappa
    return {idx: star[k] for k, idx in enumerate(fm.INDICES[2])}


def rhs(state: SimState, params: md.ModelParams, rep: Representation, grid: GridSpec, path: str = "component") -> SimState:
    return Rhs(params, rep, grid, path=path)(state)


def step_rk4(state: SimState, dt: float, f: Callable[[SimState], SimState], k1: Optional[SimState] = None) -> SimState:
    k1 = f(state) if k1 is None else k1
    k2 = f(state.axpy(dt / 2, k1))
    k3 = f(state.axpy(dt / 2, k2))
    k4 = f(state.axpy(dt, k3))
    fields = []
    for name in ("phi", "pi", "a", "b"):
        acc = getattr(k2, name) + getattr(k3, name)
        acc *= 2
        acc += getattr(k1, name)
        acc += getattr(k4, name)
        acc *= dt / 6
        acc += getattr(state, name)
        fields.append(acc)
    out = SimState(*fields, t=state.t + dt)
    for name, arr in out.arrays().items():
        if not np.all(np.isfinite(arr)):
            raise NumericalAbort(f"non-finite values in {name} at t={out.t:.6g}")
    return out


def support_escape(state: SimState, ref: float, ring: int = 2 * HALO, rel: float = 1e-8) -> float:
    """Largest |phi|, |pi| in the outer ring, relative to ref; > rel means the support reached the edge."""
    m = 1 - interior_mask(state.phi.shape[-1], ring)
    amp = np.sqrt(np.sum(np.abs(state.phi) ** 2 + np.abs(state.pi) ** 2, axis=0))
    return float(np.max(amp * m)) / max(ref, 1e-300)


def evolve(cfg: RunConfig, observers=(), workers: int = 1, init: Optional[InitialData] = None,
           state: Optional[SimState] = None):
    """Integrate to t_end. Each observer is called as obs(step, state, rates) after every step
    (and once at step 0); rates are the RHS at that state, reused as the next RK stage."""
    cfg.validate()
    alg, rep = model_algebra(cfg.model)
    grid = cfg.grid.spec()
    if state is None:
        init = init or build_initial_data(cfg, alg, rep)
        state = init.state
    f = Rhs(cfg.params, rep, grid, workers=workers)
    dt = cfl_dt(grid, cfg.time.cfl_safety)
    nsteps = int(np.ceil(cfg.time.t_end / dt - 1e-12))
    dt = cfg.time.t_end / nsteps if nsteps else dt
    ref = max(float(np.max(np.abs(state.phi), initial=0.0)), float(np.max(np.abs(state.pi), initial=0.0)))
    rates = f(state)
    for obs in observers:
        obs(0, state, rates)
    for k in range(1, nsteps + 1):
        state = step_rk4(state, dt, f, k1=rates)
        rates = f(state)
        if ref > 0 and k % max(cfg.time.diag_every, 1) == 0:
            esc = support_escape(state, ref)
            if esc > cfg.escape_tol:
                raise NumericalAbort(f"support reached the boundary at t={state.t:.6g} (ratio {esc:.3g})")
        for obs in observers:
            obs(k, state, rates)
    return state


# ---------------------------------------------------------------- checkpoints

def _field_list(state: SimState):
    out = []
    for name, arr in state.arrays().items():
        if np.iscomplexobj(arr):
            out.append((name + ".re", arr.real))
            out.append((name + ".im", arr.imag))
        else:
            out.append((name, arr))
    return out


def write_checkpoint(path, state: SimState, model: str, h: float, extra: Optional[dict] = None):
    fields = _field_list(state)
    meta = {"model": model, "n": int(state.phi.shape[-1]), "h": h, "t": state.t,
            "fields": [{"name": nm, "shape": list(a.shape)} for nm, a in fields]}
    if extra:
        meta.update(extra)
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, a in fields:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def read_checkpoint(path):
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError("not a CSSIM1 checkpoint")
        (ln,) = struct.unpack("<Q", fh.read(8))
        meta = json.loads(fh.read(ln).decode("utf-8"))
        raw = {}
        for fd in meta["fields"]:
            cnt = int(np.prod(fd["shape"]))
            raw[fd["name"]] = np.frombuffer(fh.read(8 * cnt), dtype="<f8").reshape(fd["shape"])
    arrs = {}
    for name in ("phi", "pi", "a", "b"):
        if name in raw:
            arrs[name] = raw[name].copy()
        else:
            arrs[name] = raw[name + ".re"] + 1j * raw[name + ".im"]
    return SimState(arrs["phi"], arrs["pi"], arrs["a"], arrs["b"], meta["t"]), meta
