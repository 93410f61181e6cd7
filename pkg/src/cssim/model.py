"""Currents, potentials, constraints and the reduced temporal-gauge nonlinearities.

Array conventions: multiplet fields have shape (v, *tail), Lie fields (g, *tail),
spacetime covector components are stacked on a leading axis of length 3
(spatial-only data on a leading axis of length 2). The temporal gauge A_0 = 0
is assumed wherever a spatial connection ``a`` is passed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import ETA, ETA_INV, Representation, act, bbrk, bracket
from . import forms as fm

# eps_{mu nu lam} with eps_{012} = +1
EPS = np.zeros((3, 3, 3))
for (i, j, k), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}.items():
    EPS[i, j, k] = s


@dataclass(frozen=True)
class ModelParams:
    model: str = "csh_abelian"
    kappa: float = 1.0
    v_or_m: float = 1.0
    coupled: bool = True

    def __post_init__(self):
        if self.kappa == 0 or self.v_or_m == 0:
            raise ValueError("kappa and v/m must be nonzero")

    @property
    def dirac(self) -> bool:
        return self.model.startswith("csd")

    @property
    def mass2(self) -> float:
        if self.dirac:
            return self.v_or_m**2
        return self.v_or_m**4 / self.kappa**2


def spatial_gradient(f: np.ndarray, h: float, order: int = 4) -> np.ndarray:
    return np.stack([fm.central_diff(f, 0, h, order), fm.central_diff(f, 1, h, order)])


def connection_3(a: np.ndarray) -> np.ndarray:
    """Spacetime components (3, g, ...) of a temporal-gauge connection from (a_1, a_2)."""
    return np.concatenate([np.zeros_like(a[:1]), a])


def covariant_derivatives(phi: np.ndarray, dphi: np.ndarray, A: np.ndarray, rep: Representation) -> np.ndarray:
    """D_mu phi = d_mu phi + A_mu phi for stacked partials dphi (3 or 2, v, ...) and A of the same length."""
    return dphi + np.stack([act(A[m], phi, rep) for m in range(len(A))])


def curvature_components(dA: np.ndarray, A: np.ndarray, rep: Representation) -> dict:
    """F_{mu nu} from partials dA[mu, nu] = d_mu A_nu; returns {(mu, nu): array} for mu < nu."""
    alg = rep.algebra
    out = {}
    n = len(A)
    for m in range(n):
        for k in range(m + 1, n):
            out[(m, k)] = dA[m, k] - dA[k, m] + bracket(A[m], A[k], alg)
    return out


# ------------------------------------------------------------------ currents

def current_csh(phi: np.ndarray, Dphi: np.ndarray, rep: Representation) -> np.ndarray:
    """J_mu = <T phi, D_mu phi> + <D_mu phi, T phi> = 2 <<phi, D_mu phi>>."""
    return 2 * np.stack([bbrk(phi, Dphi[m], rep) for m in range(len(Dphi))])


def current_csh_defining(phi: np.ndarray, Dphi: np.ndarray, rep: Representation) -> np.ndarray:
    out = []
    for m in range(len(Dphi)):
        tphi = np.einsum("aij,j...->ai...", rep.t_ops, phi)
        first = np.sum(tphi * np.conj(Dphi[m])[None], axis=1)
        second = np.sum(Dphi[m][None] * np.conj(tphi), axis=1)
        out.append((first + second).real)
    return np.stack(out)


def alpha_lower(rep: Representation) -> np.ndarray:
    """alpha_mu = eta_{mu nu} gamma^0 gamma^nu, shape (3, 2, 2)."""
    return np.einsum("mn,nij->mij", ETA, rep.alpha)


def _spin(mat: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.einsum("ij,j...->i...", mat, psi)


def current_csd(psi: np.ndarray, rep: Representation) -> np.ndarray:
    """J_mu = <<psi, i alpha_mu psi>>."""
    if not rep.dirac:
        raise ValueError(f"{rep.model} has no Dirac data")
    al = alpha_lower(rep)
    return np.stack([bbrk(psi, 1j * _spin(al[m], psi), rep) for m in range(3)])


def current_csd_defining(psi: np.ndarray, rep: Representation) -> np.ndarray:
    """J_mu^A = -i eta_{mu nu} <gamma^0 gamma^nu T^A psi, psi>."""
    out = []
    for m in range(3):
        acc = 0
        for nu in range(3):
            if ETA[m, nu] == 0:
                continue
            tpsi = np.einsum("aij,j...->ai...", rep.t_ops, psi)
            g = np.einsum("ij,aj...->ai...", rep.alpha[nu], tpsi)
            acc = acc + ETA[m, nu] * np.sum(g * np.conj(psi)[None], axis=1)
        out.append((-1j * acc).real)
    return np.stack(out)


# ---------------------------------------------------------------- potentials

def potential_csh(phi: np.ndarray, params: ModelParams, rep: Representation) -> np.ndarray:
    """The self-dual cubic-plus-quintic U_CSH, general formula over an orthonormal basis."""
    k2 = params.kappa**2
    v2 = params.v_or_m**2
    tphi = np.einsum("aij,j...->ai...", rep.t_ops, phi)
    s = np.sum(tphi * np.conj(phi)[None], axis=1)  # <T^A phi, phi>
    gram = np.einsum("ai...,bi...->ab...", tphi, np.conj(tphi))  # <T^A phi, T^B phi>
    m = -(gram + np.swapaxes(gram, 0, 1))  # <(T^A T^B + T^B T^A) phi, phi>
    t1 = np.einsum("a...,ai...->i...", s, tphi)
    coef = np.einsum("a...,ab...->b...", s, m)
    t2 = np.einsum("b...,bi...->i...", coef, tphi)
    ttphi = np.einsum("aij,bj...->abi...", rep.t_ops, tphi)  # T^A T^B phi
    t3 = np.einsum("a...,b...,abi...->i...", s, s, ttphi)
    return (4 * v2 * t1 + t2 + t3) / k2


def raise_index(J: np.ndarray) -> np.ndarray:
    return np.einsum("mn,n...->m...", ETA_INV, J)


def potential_csd(psi: np.ndarray, params: ModelParams, rep: Representation) -> np.ndarray:
    """(1/kappa) * 1/2 eps_{mu nu lam} gamma^mu gamma^nu (J^lam . psi)."""
    Jup = raise_index(current_csd(psi, rep))
    out = np.zeros_like(psi)
    g = rep.gamma
    for m in range(3):
        for n in range(3):
            for l in range(3):
                e = EPS[m, n, l]
                if e:
                    out = out + 0.5 * e * _spin(g[m] @ g[n], act(Jup[l], psi, rep))
    return out / params.kappa


def squared_dirac_source(psi: np.ndarray, F: dict, rep: Representation) -> np.ndarray:
    """1/2 gamma^mu gamma^nu F_{mu nu} . psi summed over ordered pairs; F given for mu < nu."""
    g = rep.gamma
    out = np.zeros_like(psi)
    for (m, n), f in F.items():
        out = out + 0.5 * _spin(g[m] @ g[n] - g[n] @ g[m], act(f, psi, rep))
    return out


def potential(phi: np.ndarray, params: ModelParams, rep: Representation) -> np.ndarray:
    if params.dirac:
        return potential_csd(phi, params, rep)
    return potential_csh(phi, params, rep)


def current(phi: np.ndarray, pi: np.ndarray, dphi_sp: np.ndarray, a: np.ndarray,
            params: ModelParams, rep: Representation) -> np.ndarray:
    """Spacetime current (3, g, ...) on a temporal-gauge slice."""
    if params.dirac:
        return current_csd(phi, rep)
    D = covariant_derivatives(phi, np.concatenate([pi[None], dphi_sp]), connection_3(a), rep)
    return current_csh(phi, D, rep)


# ------------------------------------------------------------------- Dirac

def dirac_residual(psi, dt_psi, dpsi_sp, a, params: ModelParams, rep: Representation) -> np.ndarray:
    """i gamma^mu D_mu psi + m psi with D_0 = d_t."""
    D = covariant_derivatives(psi, np.concatenate([dt_psi[None], dpsi_sp]), connection_3(a), rep)
    out = params.v_or_m * psi
    for m in range(3):
        out = out + 1j * _spin(rep.gamma[m], D[m])
    return out


def csd_time_derivative(psi, dpsi_sp, a, params: ModelParams, rep: Representation) -> np.ndarray:
    """d_t psi = -gamma^0 gamma^j D_j psi + i m gamma^0 psi."""
    g = rep.gamma
    out = 1j * params.v_or_m * _spin(g[0], psi)
    for j in range(2):
        Dj = dpsi_sp[j] + act(a[j], psi, rep)
        out = out - _spin(g[0] @ g[j + 1], Dj)
    return out


# ----------------------------------------------- reduced temporal-gauge system

def kg_nonlinearity(phi, dphi_sp, a, b, params: ModelParams, rep: Representation, pi=None) -> np.ndarray:
    """N in (Box - mass^2) phi = N, component expansion:
    N = -2 a_j . d_j phi + b . phi - a_j . (a_j . phi) + U."""
    out = potential(phi, params, rep)
    out = out + act(b, phi, rep)
    for j in range(2):
        out = out - 2 * act(a[j], dphi_sp[j], rep) - act(a[j], act(a[j], phi, rep), rep)
    return out


def _slice_forms(phi, dphi_sp, a, rep, pi=None):
    dt = pi if pi is not None else np.zeros_like(phi)
    phi_f = fm.scalar_to_form(phi, "multiplet")
    dphi_f = fm.Form(1, "multiplet", np.stack([dt, dphi_sp[0], dphi_sp[1]]))
    A_f = fm.Form(1, "lie", connection_3(a))
    return phi_f, dphi_f, A_f


def kg_nonlinearity_forms(phi, dphi_sp, a, b, params: ModelParams, rep: Representation, pi=None) -> np.ndarray:
    """N = 2*(A ∧ *dphi) + b phi + *(A ∧ *(A phi)) + U through the forms engine."""
    phi_f, dphi_f, A_f = _slice_forms(phi, dphi_sp, a, rep, pi)
    b_f = fm.scalar_to_form(b, "lie")
    n = 2 * fm.hodge(fm.wedge(A_f, fm.hodge(dphi_f), rep))
    n = n + fm.wedge(b_f, phi_f, rep)
    n = n + fm.hodge(fm.wedge(A_f, fm.hodge(fm.wedge(A_f, phi_f, rep)), rep))
    return n.comps[0] + potential(phi, params, rep)


def connection_rate(J: np.ndarray, params: ModelParams) -> np.ndarray:
    """d_t a_j = iota_{d_t} (1/kappa) *J: d_t a_1 = J_2 / kappa, d_t a_2 = -J_1 / kappa."""
    return np.stack([J[2], -J[1]]) / params.kappa


def connection_rate_forms(J: np.ndarray, params: ModelParams) -> np.ndarray:
    """Same as connection_rate, as -*(J ∧ dt)/kappa through the forms engine."""
    J_f = fm.Form(1, "lie", J)
    dt = fm.basis_form((0,))
    out = -fm.hodge(fm.wedge(J_f, dt)) * (1.0 / params.kappa)
    return out.comps[1:]


def dJ12(phi, pi, dphi_sp, a, params: ModelParams, rep: Representation) -> np.ndarray:
    """(dJ)_{12} from first derivatives only, using F_12 = (*J)_12 / kappa = -J_0 / kappa."""
    if params.dirac:
        al = alpha_lower(rep)
        s = lambda m, f: 1j * _spin(al[m], f)
        return (bbrk(dphi_sp[0], s(2, phi), rep) + bbrk(phi, s(2, dphi_sp[0]), rep)
                - bbrk(dphi_sp[1], s(1, phi), rep) - bbrk(phi, s(1, dphi_sp[1]), rep))
    J0 = 2 * bbrk(phi, pi, rep)
    F12 = -J0 / params.kappa
    alg = rep.algebra
    out = 4 * bbrk(dphi_sp[0], dphi_sp[1], rep)
    out = out + 2 * bbrk(dphi_sp[0], act(a[1], phi, rep), rep) - 2 * bbrk(dphi_sp[1], act(a[0], phi, rep), rep)
    inner = act(F12 - bracket(a[0], a[1], alg), phi, rep)
    inner = inner + act(a[1], dphi_sp[0], rep) - act(a[0], dphi_sp[1], rep)
    return out + 2 * bbrk(phi, inner, rep)


def dJ_expansion_csh(phi: fm.Form, dphi: fm.Form, A: fm.Form, F: fm.Form, rep: Representation) -> fm.Form:
    """2<<dphi ∧ dphi>> + 2<<dphi ∧ (A phi)>> + 2<<phi ∧ (F ∧ phi)>> - <<phi ∧ ([A ∧ A] phi)>> - 2<<phi ∧ (A ∧ dphi)>>."""
    Aphi = fm.wedge(A, phi, rep)
    out = 2 * fm.bbrk_wedge(dphi, dphi, rep)
    out = out + 2 * fm.bbrk_wedge(dphi, Aphi, rep)
    out = out + 2 * fm.bbrk_wedge(phi, fm.wedge(F, phi, rep), rep)
    out = out - fm.bbrk_wedge(phi, fm.wedge(fm.wedge(A, A, rep), phi, rep), rep)
    out = out - 2 * fm.bbrk_wedge(phi, fm.wedge(A, dphi, rep), rep)
    return out


def i_alpha_form(psi: fm.Form, rep: Representation) -> fm.Form:
    """The multiplet 1-form i alpha psi for a multiplet 0-form psi (alpha acts on spinor indices)."""
    al = alpha_lower(rep)
    c = psi.comps[0]
    comps = np.stack([1j * np.einsum("ij,j...->i...", al[m], c) for m in range(3)])
    return fm.Form(1, "multiplet", comps, psi.jet)


def i_alpha_wedge(dpsi: fm.Form, rep: Representation) -> fm.Form:
    """i alpha ∧ dpsi for a multiplet 1-form dpsi."""
    al = alpha_lower(rep)
    out = np.zeros((3,) + dpsi.comps.shape[1:], dtype=complex)
    for i, j, kk, s in fm.wedge_table(1, 1):
        out[kk] += s * 1j * np.einsum("ij,j...->i...", al[i], dpsi.comps[j])
    return fm.Form(2, "multiplet", out, dpsi.jet)


def current_csd_form(psi: fm.Form, rep: Representation) -> fm.Form:
    return fm.bbrk_wedge(psi, i_alpha_form(psi, rep), rep)


def dJ_expansion_csd(psi: fm.Form, dpsi: fm.Form, rep: Representation) -> fm.Form:
    """<<dpsi ∧ i alpha psi>> - <<psi ∧ (i alpha ∧ dpsi)>>."""
    return fm.bbrk_wedge(dpsi, i_alpha_form(psi, rep), rep) - fm.bbrk_wedge(psi, i_alpha_wedge(dpsi, rep), rep)


def dJ_pullback(phi, pi, a, params: ModelParams, rep: Representation, h: float, scheme: str = "central4") -> np.ndarray:
    """(dJ)_{12} on a grid slice through the forms engine (first derivatives of the matter field only)."""
    order = 2 if scheme == "central2" else 4
    dphi_sp = spatial_gradient(phi, h, order)
    phi_f, dphi_f, A_f = _slice_forms(phi, dphi_sp, a, rep, pi)
    if params.dirac:
        return dJ_expansion_csd(phi_f, dphi_f, rep).component(1, 2)
    J = current(phi, pi, dphi_sp, a, params, rep)
    F = fm.hodge(fm.Form(1, "lie", J)) * (1.0 / params.kappa)
    return dJ_expansion_csh(phi_f, dphi_f, A_f, F, rep).component(1, 2)


def b_rate(dj12: np.ndarray, params: ModelParams) -> np.ndarray:
    """d_t b = *(dJ ∧ dt)/kappa = -(dJ)_{12}/kappa."""
    return -dj12 / params.kappa


# -------------------------------------------------------------- constraints

def curvature12(a: np.ndarray, rep: Representation, h: float, order: int = 4) -> np.ndarray:
    return (fm.central_diff(a[1], 0, h, order) - fm.central_diff(a[0], 1, h, order)
            + bracket(a[0], a[1], rep.algebra))


def constraint_source(phi, pi, params: ModelParams, rep: Representation) -> np.ndarray:
    """(*J)_{12}/kappa = -J_0/kappa on a slice."""
    if params.dirac:
        J0 = current_csd(phi, rep)[0]
    else:
        J0 = 2 * bbrk(phi, pi, rep)
    return -J0 / params.kappa


def constraint_residual(phi, pi, a, params: ModelParams, rep: Representation, h: float,
                        scheme: str = "central4") -> np.ndarray:
    """(F - (1/kappa) *J)_{12} on the slice; zero on the outer ring where F is not computed."""
    order = 2 if scheme == "central2" else 4
    r = order  # F needs a on a ring of width order/2 and is itself valid one ring further in
    res = curvature12(a, rep, h, order) - constraint_source(phi, pi, params, rep)
    res[..., :r, :] = 0
    res[..., -r:, :] = 0
    res[..., :, :r] = 0
    res[..., :, -r:] = 0
    return res
