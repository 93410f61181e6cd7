"""Measured quantities: slice energies, charge, constraint and b-consistency residuals, decay
profiles, and the hyperboloidal diagnostics (energy, weighted norms, Klainerman-Sobolev ratio,
ODE-decay quantity) sampled from a streaming slice history."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import forms as fm
from . import geometry as geo
from . import model as md
from .algebra import Representation, act
from .solver import HALO, SimState, interior_mask


def covariant_grid_derivatives(s: SimState, rep: Representation, h: float) -> np.ndarray:
    """(D_0, D_1, D_2) phi on the grid in temporal gauge, shape (3, v, n, n)."""
    d = md.spatial_gradient(s.phi, h)
    return md.covariant_derivatives(s.phi, np.concatenate([s.pi[None], d]), md.connection_3(s.a), rep)


def _norm_v(x: np.ndarray, axis=0) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(x) ** 2, axis=axis))


def covariant_laplacian(s: SimState, rep: Representation, h: float) -> np.ndarray:
    """Spatial covariant Laplacian as the solver discretizes it: Lap phi + 2 a_j d_j phi - b phi + a_j a_j phi."""
    phi = s.phi
    out = fm.central_diff2(phi, 0, h) + fm.central_diff2(phi, 1, h) - act(s.b, phi, rep)
    d = md.spatial_gradient(phi, h)
    for j in range(2):
        out = out + 2 * act(s.a[j], d[j], rep) + act(s.a[j], act(s.a[j], phi, rep), rep)
    return out


def sigma_energy(s: SimState, params: md.ModelParams, rep: Representation, h: float, scheme: str = "sbp") -> float:
    """∫ 1/2 Σ_mu |D_mu phi|^2 + 1/2 mass^2 |phi|^2 dx.

    scheme="sbp" writes the spatial gradient part as -1/2 Re<phi, Lap_A phi> (the discrete
    Laplacian the solver uses), which the semi-discrete free equation conserves exactly;
    scheme="gradient" squares centred differences directly."""
    mass = 0.5 * params.mass2 * np.sum(np.abs(s.phi) ** 2, axis=0)
    kin = 0.5 * np.sum(np.abs(s.pi) ** 2, axis=0)
    if scheme == "gradient":
        D = covariant_grid_derivatives(s, rep, h)
        grad = 0.5 * np.sum(np.abs(D[1:]) ** 2, axis=(0, 1))
    elif scheme == "sbp":
        grad = -0.5 * np.sum((np.conj(s.phi) * covariant_laplacian(s, rep, h)).real, axis=0)
    else:
        raise ValueError(f"unknown energy scheme {scheme!r}")
    return float(np.sum(kin + grad + mass) * h * h)


def magnetic_charge(s: SimState, rep: Representation, h: float) -> np.ndarray:
    """∫ F_12 dx per Lie-algebra component (the ring where F is not computed is excluded)."""
    F = md.curvature12(s.a, rep, h)
    m = interior_mask(s.phi.shape[-1], 2 * HALO)
    return np.sum(F * m, axis=(-2, -1)) * h * h


def charge_from_source(source: np.ndarray, h: float) -> np.ndarray:
    return np.sum(source, axis=(-2, -1)) * h * h


def constraint_stats(s: SimState, params, rep, h: float):
    """(max, l2, source_max) of the slice constraint residual; maxima are of the pointwise g-norm."""
    r = md.constraint_residual(s.phi, s.pi, s.a, params, rep, h)
    src = md.constraint_source(s.phi, s.pi, params, rep)
    norm = lambda u: np.sqrt(np.sum(u**2, axis=0))
    return float(np.max(norm(r))), float(np.sqrt(np.sum(r**2) * h * h)), float(np.max(norm(src)))


def b_consistency(s: SimState, h: float) -> float:
    """max |b - delta a|_g with delta a = -(d_1 a_1 + d_2 a_2), away from the edge."""
    div = fm.central_diff(s.a[0], 0, h) + fm.central_diff(s.a[1], 1, h)
    m = interior_mask(s.phi.shape[-1], 2 * HALO)
    return float(np.max(np.sqrt(np.sum((s.b + div) ** 2, axis=0)) * m))


def dirac_resid_max(s: SimState, params, rep, h: float) -> float:
    r = md.dirac_residual(s.phi, s.pi, md.spatial_gradient(s.phi, h), s.a, params, rep)
    m = interior_mask(s.phi.shape[-1], HALO)
    return float(np.max(_norm_v(r) * m))


def decay_values(s: SimState, rep: Representation, h: float) -> tuple[float, float]:
    """(1+t) sup|phi| and (1+t) sup|D phi| (Euclidean-auxiliary norm over mu)."""
    D = covariant_grid_derivatives(s, rep, h)
    m = interior_mask(s.phi.shape[-1], HALO)
    w = 1 + s.t
    return w * float(np.max(_norm_v(s.phi))), w * float(np.max(np.sqrt(np.sum(np.abs(D) ** 2, axis=(0, 1))) * m))


def diamagnetic_grid(s: SimState, rep: Representation, h: float, floor: float = 1e-10) -> float:
    """max over grid points and spatial directions of |d_j |phi|| - |D_j phi| (where |phi| > floor)."""
    amp = _norm_v(s.phi)
    D = covariant_grid_derivatives(s, rep, h)
    m = interior_mask(s.phi.shape[-1], 2 * HALO) * (amp > floor)
    worst = -np.inf
    for j in range(2):
        v = (np.abs(fm.central_diff(amp, j, h)) - _norm_v(D[j + 1])) * m
        worst = max(worst, float(np.max(np.where(m > 0, v, -np.inf), initial=-np.inf)))
    return worst


def diamagnetic_jet(phi_jet: np.ndarray, A_jet: np.ndarray, rep: Representation, jet) -> float:
    """Max over directions of |d_mu |phi|| - |D_mu phi| at the base point (exact derivatives)."""
    mod2 = np.sum(jet.mul(phi_jet, np.conj(phi_jet)), axis=0).real
    amp = jet.sqrt(mod2)
    worst = -np.inf
    for mu in range(3):
        dphi = jet.diff(phi_jet, mu)[..., 0]
        Dphi = dphi + np.einsum("a,aij,j->i", A_jet[mu][:, 0], rep.t_ops, phi_jet[..., 0])
        worst = max(worst, abs(jet.diff(amp, mu)[0]) - float(np.linalg.norm(Dphi)))
    return worst


# ------------------------------------------------------------ hyperboloids

SLICE_FIELDS = ("phi", "pi", "dphi", "dpi", "ddphi", "dtpi", "a", "da", "dta")


def slice_fields(s: SimState, rates: SimState, h: float) -> dict:
    d = lambda f, j: fm.central_diff(f, j, h)
    dphi = np.stack([d(s.phi, 0), d(s.phi, 1)])
    ddphi = np.stack([fm.central_diff2(s.phi, 0, h), d(dphi[0], 1), fm.central_diff2(s.phi, 1, h)])
    return {
        "phi": s.phi, "pi": s.pi, "dphi": dphi,
        "dpi": np.stack([d(s.pi, 0), d(s.pi, 1)]),
        "ddphi": ddphi, "dtpi": rates.pi,
        "a": s.a, "da": np.stack([np.stack([d(s.a[j], i) for j in range(2)]) for i in range(2)]),  # da[i, j] = d_i a_j
        "dta": rates.a,
    }


def point_derivatives(vals: dict, rep: Representation):
    """From interpolated slice fields: phi (v,P), D (3,v,P) and DD (3,3,v,P) = D_mu D_nu phi."""
    phi, pi = vals["phi"], vals["pi"]
    a, da, dta = vals["a"], vals["da"], vals["dta"]
    dphi, dpi, dd = vals["dphi"], vals["dpi"], vals["ddphi"]
    D = np.stack([pi] + [dphi[j] + act(a[j], phi, rep) for j in range(2)])
    DD = np.zeros((3, 3) + phi.shape, dtype=complex)
    DD[0, 0] = vals["dtpi"]
    for j in range(2):
        DD[0, j + 1] = dpi[j] + act(dta[j], phi, rep) + act(a[j], pi, rep)
        DD[j + 1, 0] = dpi[j] + act(a[j], pi, rep)
    second = {(0, 0): dd[0], (0, 1): dd[1], (1, 0): dd[1], (1, 1): dd[2]}
    for i in range(2):
        for j in range(2):
            DD[i + 1, j + 1] = (second[(i, j)] + act(da[i, j], phi, rep) + act(a[j], dphi[i], rep)
                                + act(a[i], dphi[j], rep) + act(a[i], act(a[j], phi, rep), rep))
    return phi, D, DD


def hyperboloid_quantities(X: np.ndarray, phi: np.ndarray, D: np.ndarray, mass2: float) -> dict:
    """Pointwise hyperboloidal quantities at shifted coordinates X = (t', x1, x2)."""
    tau = geo.proper_time(X)
    r = np.hypot(X[1], X[2])
    y = np.arctanh(r / X[0])
    ch, sh = np.cosh(y), np.sinh(y)
    N = X / tau
    Dtau = np.einsum("mp,mvp->vp", N, D)
    Dy = np.einsum("mp,mvp->vp", geo.d_y(X), D)
    with np.errstate(invalid="ignore", divide="ignore"):
        w1 = np.where(r > 0, X[1] / np.where(r > 0, r, 1), 1.0)
        w2 = np.where(r > 0, X[2] / np.where(r > 0, r, 1), 0.0)
    Dth_scaled = -w2 * D[1] + w1 * D[2]  # D_theta / (tau sinh y)
    n2 = lambda v: np.sum(np.abs(v) ** 2, axis=0)
    ed = (0.5 * ch * (n2(Dtau) + n2(Dy / tau)) - sh * np.sum((Dy / tau * np.conj(Dtau)).real, axis=0)
          + 0.5 * ch * (n2(Dth_scaled) + mass2 * n2(phi)))
    return {"tau": tau, "y": y, "cosh": ch, "Dtau": Dtau, "ed": ed}


def energy_density_tensor(X: np.ndarray, phi: np.ndarray, D: np.ndarray, mass2: float) -> np.ndarray:
    """T(d_t, N) from the stress tensor, an independent path to the hyperboloid energy density."""
    from .algebra import ETA, ETA_INV
    tau = geo.proper_time(X)
    N = X / tau
    G = np.einsum("mvp,nvp->mnp", D, np.conj(D)).real
    lag = np.einsum("mn,mnp->p", ETA_INV, G) + mass2 * np.sum(np.abs(phi) ** 2, axis=0)
    T0n = G[0] - 0.5 * ETA[0][:, None] * lag[None]
    return np.einsum("np,np->p", T0n, N)


def z_derivatives(X: np.ndarray, D: np.ndarray, DD: np.ndarray):
    """Z_ab phi (3,v,P) and Z_ab Z_cd phi (3,3,v,P) for the three Killing fields."""
    from .algebra import ETA
    Zs = np.stack([geo.killing_vector(p, X) for p in geo.PAIRS])  # (3, mu, P)
    Z1 = np.einsum("amp,mvp->avp", Zs, D)
    # derivative of Z^nu along mu: dZ[a, mu, nu]
    dZ = np.zeros((3, 3, 3))
    for k, (al, be) in enumerate(geo.PAIRS):
        for mu in range(3):
            dZ[k, mu, be] += ETA[al, mu]
            dZ[k, mu, al] -= ETA[be, mu]
    Z2 = (np.einsum("amp,bmn,nvp->abvp", Zs, dZ, D)
          + np.einsum("amp,bnp,mnvp->abvp", Zs, Zs, DD))
    return Z1, Z2


@dataclass
class HypSample:
    tau: float
    quad_induced: geo.HyperboloidQuadrature
    quad_paper: geo.HyperboloidQuadrature
    rays: np.ndarray  # (2, nr) rapidities and angles
    t_lab: np.ndarray = None
    values: dict = field(default_factory=dict)
    done: np.ndarray = None


class HyperboloidSampler:
    """Streaming evaluation of hyperboloid diagnostics while the solver runs.

    Hyperboloids are anchored at lab time -shift (shift = 2R), so H_tau meets the cone of the
    data support for y <= log(tau/R)."""

    def __init__(self, taus, radius: float, grid: geo.GridSpec, params: md.ModelParams, rep: Representation,
                 n_y: int = 48, n_theta: int = 64, stride: int = 1, rays=((0.0, 0.0), (0.5, 0.0))):
        self.radius = radius
        self.shift = 2 * radius
        self.grid = grid
        self.params = params
        self.rep = rep
        self.stride = max(int(stride), 1)
        self.history = geo.SliceHistory(grid)
        self.samples = []
        self.first_window = True
        for tau in taus:
            ymax = geo.support_y_max(tau, radius)
            qi = geo.hyperboloid_quadrature(tau, ymax, n_y, n_theta, measure="induced")
            qp = geo.hyperboloid_quadrature(tau, ymax, n_y, n_theta, measure="paper")
            ry = np.array([[fy * ymax for fy, _ in rays], [th for _, th in rays]])
            smp = HypSample(float(tau), qi, qp, ry)
            t_r, x1_r, x2_r = geo.from_hyperboloidal(tau, ry[0], ry[1])
            smp.X = np.concatenate([qi.coords, np.stack([t_r, x1_r, x2_r])], axis=1)
            smp.t_lab = smp.X[0] - self.shift
            smp.done = np.zeros(smp.X.shape[1], dtype=bool)
            smp.buf = {}
            self.samples.append(smp)

    def latest_time_needed(self) -> float:
        return max((float(np.max(s.t_lab)) for s in self.samples), default=-np.inf)

    def __call__(self, k: int, state: SimState, rates: SimState):
        if k % self.stride:
            return
        self.history.push(state.t, slice_fields(state, rates, self.grid.h))
        if len(self.history.slices) == 4:
            ts = self.history.times
            lo = ts[0] if self.first_window else ts[1]
            self._process(lo, ts[2])
            self.first_window = False

    def finalize(self):
        if len(self.history.slices) == 4:
            ts = self.history.times
            self._process(ts[0] if self.first_window else ts[1], ts[3], exact_end=True)
        for s in self.samples:
            if not np.all(s.done):
                raise ValueError(f"H_tau with tau={s.tau} extends beyond the evolved time window")

    def _process(self, lo, hi, exact_end=False):
        eps = 1e-12 * max(1.0, abs(hi))
        for s in self.samples:
            sel = (~s.done) & (s.t_lab >= lo - eps) & (s.t_lab <= hi + eps)
            if not np.any(sel):
                continue
            X = s.X[:, sel]
            t = np.clip(s.t_lab[sel], lo, hi)
            vals = self.history.interpolate(SLICE_FIELDS, t, X[1], X[2], exact_end=exact_end or self.first_window)
            phi, D, DD = point_derivatives(vals, self.rep)
            Z1, Z2 = z_derivatives(X, D, DD)
            idx = np.nonzero(sel)[0]
            for name, arr in (("phi", phi), ("D", D), ("Z1", Z1), ("Z2", Z2)):
                if name not in s.buf:
                    s.buf[name] = np.zeros(arr.shape[:-1] + (s.X.shape[1],), dtype=complex)
                s.buf[name][..., idx] = arr
            s.done[sel] = True

    # -- results ---------------------------------------------------------

    def results(self) -> list[dict]:
        return [self.evaluate(s) for s in self.samples]

    def evaluate(self, s: HypSample) -> dict:
        nq = s.quad_induced.weights.size
        X = s.X
        phi, D, Z1, Z2 = s.buf["phi"], s.buf["D"], s.buf["Z1"], s.buf["Z2"]
        q = hyperboloid_quantities(X, phi, D, self.params.mass2)
        ch = q["cosh"]
        amp = _norm_v(phi)
        wpap = s.quad_paper.weights / ch[:nq]  # dsigma / cosh y
        l2 = lambda f: float(np.sqrt(np.sum(wpap * f[:nq] ** 2)))
        energy = float(np.sum(s.quad_induced.weights * q["ed"][:nq]))
        z1 = np.sqrt(np.sum(np.abs(Z1) ** 2, axis=(0, 1)))
        z2 = np.sqrt(np.sum(np.abs(Z2) ** 2, axis=(0, 1, 2)))
        lhs = s.tau * float(np.max((ch * amp)[:nq]))
        rhs = l2(ch * amp) + l2(ch * z1) + l2(ch * z2)
        ks = lhs / rhs if rhs > 1e-14 else 0.0
        odeq = []
        for j in range(nq, X.shape[1]):
            c = ch[j]
            inner = c * phi[:, j] + s.tau * c * q["Dtau"][:, j]
            odeq.append(float(np.linalg.norm(inner) + s.tau * c * amp[j]))
        return {
            "tau": s.tau, "hyp_energy": energy, "weighted_L2": l2(amp),
            "weighted_L2_cosh": l2(ch * amp), "weighted_Linf_cosh": float(np.max((ch * amp)[:nq])),
            "ks_ratio": ks, "ode_quantity": odeq,
            "energy_tensor": float(np.sum(s.quad_induced.weights * energy_density_tensor(X, phi, D, self.params.mass2)[:nq])),
        }


def weighted_norm(values: np.ndarray, quad_paper: geo.HyperboloidQuadrature, p, weight_power: int = 0) -> float:
    """|||cosh^k y f|||_{L^p_tau} with measure dsigma / cosh y (paper measure)."""
    ch = np.cosh(quad_paper.y)
    f = np.abs(values) * ch**weight_power
    if p == np.inf or p == "inf":
        return float(np.max(f))
    w = quad_paper.weights / ch
    return float(np.sum(w * f**p) ** (1.0 / p))


# ------------------------------------------------------------------ records

def sigma_columns(model: str, g: int) -> list[str]:
    cols = ["step", "t", "sigma_energy"] + [f"charge_{A}" for A in range(g)]
    cols += ["constraint_resid_max", "constraint_resid_l2", "constraint_source_max", "b_consistency",
             "sup_decay", "sup_covT_decay"]
    if model.startswith("csd"):
        cols.append("dirac_resid_max")
    return cols


HYP_COLUMNS = ["tau", "hyp_energy", "weighted_L2", "weighted_L2_cosh", "weighted_Linf_cosh", "ks_ratio",
               "ode_quantity_axis", "ode_quantity_mid"]


def sigma_record(step: int, s: SimState, params, rep, h: float) -> dict:
    cmax, cl2, smax = constraint_stats(s, params, rep, h)
    sd, sD = decay_values(s, rep, h)
    rec = {"step": step, "t": s.t, "sigma_energy": sigma_energy(s, params, rep, h)}
    for A, q in enumerate(magnetic_charge(s, rep, h)):
        rec[f"charge_{A}"] = float(q)
    rec.update(constraint_resid_max=cmax, constraint_resid_l2=cl2, constraint_source_max=smax,
               b_consistency=b_consistency(s, h), sup_decay=sd, sup_covT_decay=sD)
    if params.dirac:
        rec["dirac_resid_max"] = dirac_resid_max(s, params, rep, h)
    return rec


class SigmaMonitor:
    """Observer collecting slice diagnostics every ``every`` steps (and at the final step)."""

    def __init__(self, params, rep, h: float, every: int, last_step: int = None):
        self.params, self.rep, self.h = params, rep, h
        self.every = max(int(every), 1)
        self.last_step = last_step
        self.records = []

    def __call__(self, k: int, s: SimState, rates: SimState):
        if k % self.every == 0 or k == self.last_step:
            self.records.append(sigma_record(k, s, self.params, self.rep, self.h))
