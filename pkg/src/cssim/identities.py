"""Exact verification of the exterior-calculus and commutator identities.

Every check builds random polynomial test fields as Taylor jets about a random
point of the forward cone, applies both sides of an identity with exact jet
derivatives, and compares the values at the base point. Residuals are reported
as max|lhs - rhs| / (1 + max(|lhs|, |rhs|)).
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import forms as fm
from . import geometry as geo
from . import model as md
from .algebra import ETA_INV, Representation, build_lie_algebra, build_representation
from .jets import JetSpace, jet_space

TOL = 1e-9


# ------------------------------------------------------------------ helpers

@dataclass
class Trial:
    rng: np.random.Generator
    jet: JetSpace
    rep: Representation
    point: np.ndarray
    X: np.ndarray  # coordinate jets (3, size)

    def form(self, k: int, kind: str = "real", degree: int = 3) -> fm.Form:
        nval = 1 if kind == "real" else (self.rep.dim if kind == "lie" else self.rep.v_dim)
        c = self.jet.random_polynomial(self.rng, (fm.NCOMP[k], nval), degree, complex_=kind == "multiplet")
        return fm.Form(k, kind, c, self.jet)

    def vector(self, degree: int = 2) -> fm.Vector:
        return fm.Vector(self.jet.random_polynomial(self.rng, (3,), degree), self.jet)

    def scalar(self, f: np.ndarray) -> fm.Form:
        return fm.Form(0, "real", f[None, None], self.jet)

    def killing(self, which: int) -> fm.Vector:
        """which in 0..5: translations T_0..T_2, then Z_01, Z_02, Z_12."""
        if which < 3:
            return fm.Vector(geo.translation_jet(which, self.X), self.jet)
        return fm.Vector(geo.killing_vector(geo.PAIRS[which - 3], self.X), self.jet)

    def random_killing(self) -> fm.Vector:
        return self.killing(int(self.rng.integers(6)))


def _val(x) -> np.ndarray:
    if isinstance(x, (fm.Form, fm.Vector)):
        return x.value()
    return np.asarray(x)[..., 0]


def _res(lhs, rhs) -> float:
    a, b = _val(lhs), _val(rhs)
    scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
    return float(np.max(np.abs(a - b), initial=0.0)) / (1.0 + scale)


def _zero_like(w: fm.Form) -> fm.Form:
    return w.like(np.zeros_like(w.comps))


def lie_derivative_coordinates(X: fm.Vector, w: fm.Form) -> fm.Form:
    """(L_X w)_I = X^m d_m w_I + sum over slots of (d_{i_s} X^m) w_{I: i_s -> m}, an independent
    coordinate formula used to cross-check the Cartan-based implementation."""
    jet = w.jet
    k = w.degree
    out = np.zeros_like(w.comps)
    for m in range(3):
        out += jet.mul(X.comps[m][None, None], jet.diff(w.comps, m))
    for i, I in enumerate(fm.INDICES[k]):
        for s, mu in enumerate(I):
            dX = [jet.diff(X.comps[m], mu) for m in range(3)]
            for m in range(3):
                J = I[:s] + (m,) + I[s + 1:]
                if len(set(J)) < k:
                    continue
                sign = fm._perm_sign(J)
                j = fm.INDICES[k].index(tuple(sorted(J)))
                out[i] += sign * jet.mul(dX[m][None], w.comps[j])
    return w.like(out)


def _box_components(phi: fm.Form, A: fm.Form, rep: Representation) -> fm.Form:
    """eta^{mn}(d_m d_n phi + 2 A_m d_n phi + (d_m A_n) phi + A_m A_n phi) with jets."""
    jet = phi.jet
    c = phi.comps[0]
    a = A.comps

    def act(x, v):
        return np.einsum("aij,aj...->i...", rep.t_ops, jet.mul(x[:, None], v[None, :]))

    out = np.zeros_like(c)
    for m in range(3):
        g = ETA_INV[m, m]
        dm = jet.diff(c, m)
        out += g * (jet.diff(dm, m) + 2 * act(a[m], dm) + act(jet.diff(a[m], m), c) + act(a[m], act(a[m], c)))
    return phi.like(out[None])


def _spin(mat: np.ndarray, w: fm.Form) -> fm.Form:
    return w.like(np.einsum("ij,kj...->ki...", mat, w.comps))


# ---------------------------------------------------------------- identities
# Each check returns the residual of one trial. Tags: "real" needs nothing, "multiplet"
# uses the representation, "bracket" is Lie-bracket dependent (skipped for abelian
# algebras), "dirac" needs the spinor representation.

@dataclass(frozen=True)
class Identity:
    name: str
    group: str
    tag: str
    check: Callable[[Trial], float]


REGISTRY: list[Identity] = []


def identity(name: str, group: str, tag: str = "real"):
    def deco(f):
        REGISTRY.append(Identity(name, group, tag, f))
        return f
    return deco


def _k(tr: Trial, lo: int = 0, hi: int = 3) -> int:
    return int(tr.rng.integers(lo, hi + 1))


# exterior calculus of real forms

@identity("real: [L_X, i_Y] = i_[X,Y]", "exterior calculus")
def _(tr):
    k = _k(tr, 1)
    w, X, Y = tr.form(k), tr.vector(), tr.vector()
    lhs = fm.lie_derivative(X, fm.interior(Y, w)) - fm.interior(Y, fm.lie_derivative(X, w))
    return _res(lhs, fm.interior(fm.vector_bracket(X, Y), w))


@identity("real: [L_X, L_Y] = L_[X,Y]", "exterior calculus")
def _(tr):
    w, X, Y = tr.form(_k(tr)), tr.vector(), tr.vector()
    lhs = fm.lie_derivative(X, fm.lie_derivative(Y, w)) - fm.lie_derivative(Y, fm.lie_derivative(X, w))
    return _res(lhs, fm.lie_derivative(fm.vector_bracket(X, Y), w))


@identity("real: [L_X, d] = 0 and d^2 = 0", "exterior calculus")
def _(tr):
    w, X = tr.form(_k(tr, 0, 2)), tr.vector()
    r1 = _res(fm.lie_derivative(X, fm.ext_d(w)), fm.ext_d(fm.lie_derivative(X, w)))
    ddw = fm.ext_d(fm.ext_d(w))
    return max(r1, _res(ddw, _zero_like(ddw)))


@identity("real: Cartan formula vs coordinate Lie derivative", "exterior calculus")
def _(tr):
    w, X = tr.form(_k(tr)), tr.vector()
    return _res(fm.lie_derivative(X, w), lie_derivative_coordinates(X, w))


@identity("real: Leibniz rules for L_X, i_X, d on wedge", "exterior calculus")
def _(tr):
    k = _k(tr, 0, 2)
    l = _k(tr, 0, 2 - k) if k < 3 else 0
    w, u, X = tr.form(k), tr.form(l), tr.vector()
    wu = fm.wedge(w, u)
    r = _res(fm.lie_derivative(X, wu),
             fm.wedge(fm.lie_derivative(X, w), u) + fm.wedge(w, fm.lie_derivative(X, u)))
    if k + l < 3:
        r = max(r, _res(fm.ext_d(wu), fm.wedge(fm.ext_d(w), u) + (-1) ** k * fm.wedge(w, fm.ext_d(u))))
    if k + l > 0:
        lhs = fm.interior(X, wu)
        rhs = _zero_like(lhs)
        if k > 0:
            rhs = rhs + fm.wedge(fm.interior(X, w), u)
        if l > 0:
            rhs = rhs + (-1) ** k * fm.wedge(w, fm.interior(X, u))
        r = max(r, _res(lhs, rhs))
    return r


# exterior calculus of multiplet-valued forms

def _kl(tr):
    k = _k(tr, 0, 3)
    return k, _k(tr, 0, 3 - k)


@identity("V: w ∧ v = (-1)^{kl} v ∧ w", "covariant calculus", "multiplet")
def _(tr):
    k, l = _kl(tr)
    v, w = tr.form(k, "multiplet"), tr.form(l)
    return _res(fm.wedge(w, v, tr.rep), (-1) ** (k * l) * fm.wedge(v, w, tr.rep))


@identity("V: [L^A_X, i_Y] v = i_[X,Y] v", "covariant calculus", "multiplet")
def _(tr):
    A, v, X, Y = tr.form(1, "lie"), tr.form(_k(tr, 1), "multiplet"), tr.vector(), tr.vector()
    rep = tr.rep
    lhs = fm.cov_lie(X, A, fm.interior(Y, v), rep) - fm.interior(Y, fm.cov_lie(X, A, v, rep))
    return _res(lhs, fm.interior(fm.vector_bracket(X, Y), v))


@identity("V: [L^A_X, L^A_Y] v = L^A_[X,Y] v + (i_Y i_X F) v", "covariant calculus", "multiplet")
def _(tr):
    A, v, X, Y = tr.form(1, "lie"), tr.form(_k(tr), "multiplet"), tr.vector(), tr.vector()
    rep = tr.rep
    L = lambda Z, u: fm.cov_lie(Z, A, u, rep)
    F = fm.curvature(A, rep)
    rhs = L(fm.vector_bracket(X, Y), v) + fm.wedge(fm.interior(Y, fm.interior(X, F)), v, rep)
    return _res(L(X, L(Y, v)) - L(Y, L(X, v)), rhs)


@identity("V: [L^A_X, d_A] v = (i_X F) ∧ v", "covariant calculus", "multiplet")
def _(tr):
    A, v, X = tr.form(1, "lie"), tr.form(_k(tr, 0, 2), "multiplet"), tr.vector()
    rep = tr.rep
    lhs = fm.cov_lie(X, A, fm.cov_d(A, v, rep), rep) - fm.cov_d(A, fm.cov_lie(X, A, v, rep), rep)
    return _res(lhs, fm.wedge(fm.interior(X, fm.curvature(A, rep)), v, rep))


@identity("V: d_A d_A v = F ∧ v", "covariant calculus", "multiplet")
def _(tr):
    A, v = tr.form(1, "lie"), tr.form(_k(tr, 0, 1), "multiplet")
    rep = tr.rep
    return _res(fm.cov_d(A, fm.cov_d(A, v, rep), rep), fm.wedge(fm.curvature(A, rep), v, rep))


@identity("V: covariant Cartan formula", "covariant calculus", "multiplet")
def _(tr):
    k = _k(tr, 0, 2)
    A, v, X = tr.form(1, "lie"), tr.form(k, "multiplet"), tr.vector()
    rep = tr.rep
    lhs = fm.interior(X, fm.cov_d(A, v, rep))
    if k > 0:
        lhs = lhs + fm.cov_d(A, fm.interior(X, v), rep)
    rhs = lie_derivative_coordinates(X, v) + fm.wedge(fm.interior(X, A), v, rep)
    return _res(lhs, rhs)


@identity("V: Leibniz rules for v ∧ w (w real)", "covariant calculus", "multiplet")
def _(tr):
    k, l = _kl(tr)
    A, v, w, X = tr.form(1, "lie"), tr.form(k, "multiplet"), tr.form(l), tr.vector()
    rep = tr.rep
    vw = fm.wedge(v, w, rep)
    r = _res(fm.cov_lie(X, A, vw, rep),
             fm.wedge(fm.cov_lie(X, A, v, rep), w, rep) + fm.wedge(v, fm.lie_derivative(X, w), rep))
    if k + l < 3:
        r = max(r, _res(fm.cov_d(A, vw, rep),
                        fm.wedge(fm.cov_d(A, v, rep), w, rep) + (-1) ** k * fm.wedge(v, fm.ext_d(w), rep)))
    if k + l > 0:
        lhs = fm.interior(X, vw)
        rhs = _zero_like(lhs)
        if k > 0:
            rhs = rhs + fm.wedge(fm.interior(X, v), w, rep)
        if l > 0:
            rhs = rhs + (-1) ** k * fm.wedge(v, fm.interior(X, w), rep)
        r = max(r, _res(lhs, rhs))
    return r


def _leibniz_g(tr, kind):
    k, l = _kl(tr)
    A, a, v, X = tr.form(1, "lie"), tr.form(k, "lie"), tr.form(l, kind), tr.vector()
    rep = tr.rep
    av = fm.wedge(a, v, rep)
    r = _res(fm.cov_lie(X, A, av, rep),
             fm.wedge(fm.cov_lie(X, A, a, rep), v, rep) + fm.wedge(a, fm.cov_lie(X, A, v, rep), rep))
    if k + l < 3:
        r = max(r, _res(fm.cov_d(A, av, rep),
                        fm.wedge(fm.cov_d(A, a, rep), v, rep) + (-1) ** k * fm.wedge(a, fm.cov_d(A, v, rep), rep)))
    if k + l > 0:
        lhs = fm.interior(X, av)
        rhs = _zero_like(lhs)
        if k > 0:
            rhs = rhs + fm.wedge(fm.interior(X, a), v, rep)
        if l > 0:
            rhs = rhs + (-1) ** k * fm.wedge(a, fm.interior(X, v), rep)
        r = max(r, _res(lhs, rhs))
    return r


@identity("g,V: Leibniz rules for a ∧ v", "covariant calculus", "multiplet")
def _(tr):
    return _leibniz_g(tr, "multiplet")


@identity("g,g: Leibniz rules for [a ∧ b]", "covariant calculus", "bracket")
def _(tr):
    return _leibniz_g(tr, "lie")


@identity("g,g: [a ∧ b] = (-1)^{kl+1} [b ∧ a]", "covariant calculus", "bracket")
def _(tr):
    k, l = _kl(tr)
    a, b = tr.form(k, "lie"), tr.form(l, "lie")
    return _res(fm.wedge(a, b, tr.rep), (-1) ** (k * l + 1) * fm.wedge(b, a, tr.rep))


# the bilinear form <<.,.>>

@identity("<<>>: D_X <<p, q>> = <<D_X p, q>> + <<p, D_X q>>", "bilinear form", "multiplet")
def _(tr):
    A, p, q, X = tr.form(1, "lie"), tr.form(0, "multiplet"), tr.form(0, "multiplet"), tr.vector()
    rep = tr.rep
    D = lambda u: fm.cov_lie(X, A, u, rep)
    return _res(D(fm.bbrk_wedge(p, q, rep)), fm.bbrk_wedge(D(p), q, rep) + fm.bbrk_wedge(p, D(q), rep))


@identity("<<>>: <<v ∧ w>> = (-1)^{kl+1} <<w ∧ v>>", "bilinear form", "multiplet")
def _(tr):
    k, l = _kl(tr)
    v, w = tr.form(k, "multiplet"), tr.form(l, "multiplet")
    return _res(fm.bbrk_wedge(v, w, tr.rep), (-1) ** (k * l + 1) * fm.bbrk_wedge(w, v, tr.rep))


@identity("<<>>: Leibniz rules for <<v ∧ w>>", "bilinear form", "multiplet")
def _(tr):
    k, l = _kl(tr)
    A, v, w, X = tr.form(1, "lie"), tr.form(k, "multiplet"), tr.form(l, "multiplet"), tr.vector()
    rep = tr.rep
    B = lambda x, y: fm.bbrk_wedge(x, y, rep)
    vw = B(v, w)
    r = _res(fm.cov_lie(X, A, vw, rep), B(fm.cov_lie(X, A, v, rep), w) + B(v, fm.cov_lie(X, A, w, rep)))
    if k + l < 3:
        r = max(r, _res(fm.cov_d(A, vw, rep),
                        B(fm.cov_d(A, v, rep), w) + (-1) ** k * B(v, fm.cov_d(A, w, rep))))
    if k + l > 0:
        lhs = fm.interior(X, vw)
        rhs = _zero_like(lhs)
        if k > 0:
            rhs = rhs + B(fm.interior(X, v), w)
        if l > 0:
            rhs = rhs + (-1) ** k * B(v, fm.interior(X, w))
        r = max(r, _res(lhs, rhs))
    return r


# Hodge star

@identity("star: ** = -1, i_X * w = *(w ∧ X^flat)", "hodge star")
def _(tr):
    k = _k(tr)
    w, X = tr.form(k), tr.vector()
    r = _res(fm.hodge(fm.hodge(w)), -w)
    if k < 3:
        r = max(r, _res(fm.interior(X, fm.hodge(w)), fm.hodge(fm.wedge(w, fm.musical_flat(X)))))
    return r


@identity("star: d w1 ∧ *w2 - w1 ∧ *delta w2 = d(w1 ∧ *w2)", "hodge star")
def _(tr):
    k = _k(tr, 0, 2)
    w1, w2 = tr.form(k), tr.form(k + 1)
    lhs = fm.wedge(fm.ext_d(w1), fm.hodge(w2)) - fm.wedge(w1, fm.hodge(fm.codifferential(w2)))
    return _res(lhs, fm.ext_d(fm.wedge(w1, fm.hodge(w2))))


@identity("star: L_Z * = * L_Z and L_Z X^flat = [Z, X]^flat (Z Killing)", "hodge star")
def _(tr):
    w, X = tr.form(_k(tr)), tr.vector()
    r = 0.0
    for which in range(6):
        Z = tr.killing(which)
        r = max(r, _res(fm.lie_derivative(Z, fm.hodge(w)), fm.hodge(fm.lie_derivative(Z, w))))
        r = max(r, _res(fm.lie_derivative(Z, fm.musical_flat(X)), fm.musical_flat(fm.vector_bracket(Z, X))))
    return r


@identity("star: covariant versions (**, i_X *, L^A_Z *)", "hodge star", "multiplet")
def _(tr):
    k = _k(tr)
    A, v, X, Z = tr.form(1, "lie"), tr.form(k, "multiplet"), tr.vector(), tr.random_killing()
    rep = tr.rep
    r = max(_res(fm.hodge(fm.hodge(v)), -v),
            _res(fm.cov_lie(Z, A, fm.hodge(v), rep), fm.hodge(fm.cov_lie(Z, A, v, rep))))
    if k < 3:
        r = max(r, _res(fm.interior(X, fm.hodge(v)), fm.hodge(fm.wedge(v, fm.musical_flat(X), rep))))
    return r


@identity("star: a ∧ *v = *a ∧ v, (*a) ∧ p = *(a ∧ p)", "hodge star", "multiplet")
def _(tr):
    k = _k(tr)
    a, v, p = tr.form(k, "lie"), tr.form(k, "multiplet"), tr.form(0, "multiplet")
    rep = tr.rep
    return max(_res(fm.wedge(a, fm.hodge(v), rep), fm.wedge(fm.hodge(a), v, rep)),
               _res(fm.wedge(fm.hodge(a), p, rep), fm.hodge(fm.wedge(a, p, rep))))


@identity("star: L_S * w = * L_S w + (3 - 2k) * w (S scaling)", "hodge star")
def _(tr):
    k = _k(tr)
    w = tr.form(k)
    S = fm.Vector(geo.scaling(tr.X), tr.jet)
    return _res(fm.lie_derivative(S, fm.hodge(w)), fm.hodge(fm.lie_derivative(S, w)) + (3 - 2 * k) * fm.hodge(w))


# covariant wave operator and its commutators

@identity("box: -*d_A*d_A p = component expansion", "wave operator", "multiplet")
def _(tr):
    A, p = tr.form(1, "lie"), tr.form(0, "multiplet")
    return _res(fm.covariant_box(p, A, tr.rep), _box_components(p, A, tr.rep))


@identity("box: d_A i_Z * v = (-1)^{k+1} i_Z * delta_A v + * L^A_Z v", "wave operator", "multiplet")
def _(tr):
    k = _k(tr, 0, 2)
    A, v, Z = tr.form(1, "lie"), tr.form(k, "multiplet"), tr.random_killing()
    rep = tr.rep
    lhs = fm.cov_d(A, fm.interior(Z, fm.hodge(v)), rep)
    rhs = fm.hodge(fm.cov_lie(Z, A, v, rep))
    if k > 0:
        rhs = rhs + (-1) ** (k + 1) * fm.interior(Z, fm.hodge(fm.codifferential(v, A, rep)))
    return _res(lhs, rhs)


@identity("box: delta_A i_Z * v = (-1)^k i_Z * d_A v + *(v ∧ d Z^flat)", "wave operator", "multiplet")
def _(tr):
    k = _k(tr, 0, 1)
    A, v, Z = tr.form(1, "lie"), tr.form(k, "multiplet"), tr.random_killing()
    rep = tr.rep
    lhs = fm.codifferential(fm.interior(Z, fm.hodge(v)), A, rep)
    rhs = (-1) ** k * fm.interior(Z, fm.hodge(fm.cov_d(A, v, rep)))
    rhs = rhs + fm.hodge(fm.wedge(v, fm.ext_d(fm.musical_flat(Z)), rep))
    return _res(lhs, rhs)


@identity("box: [Z, Box_A] p with F = *J", "wave operator", "multiplet")
def _(tr):
    A, p, Z = tr.form(1, "lie"), tr.form(0, "multiplet"), tr.random_killing()
    rep = tr.rep
    J = -fm.hodge(fm.curvature(A, rep))  # so that *J = F
    Zop = lambda u: fm.cov_lie(Z, A, u, rep)
    box = lambda u: fm.covariant_box(u, A, rep)
    lhs = Zop(box(p)) - box(Zop(p))
    Jp = fm.wedge(J, p, rep)
    rhs = fm.interior(Z, fm.hodge(fm.cov_d(A, Jp, rep)))
    rhs = rhs - fm.interior(Z, fm.hodge(fm.wedge(J, fm.cov_d(A, p, rep), rep)))
    rhs = rhs - fm.hodge(fm.wedge(Jp, fm.ext_d(fm.musical_flat(Z)), rep))
    return _res(lhs, rhs)


@identity("box: induced covariant Laplacian on H_tau via Z_01, Z_02", "wave operator", "multiplet")
def _(tr):
    jet, rep, X = tr.jet, tr.rep, tr.X
    A, p = tr.form(1, "lie"), tr.form(0, "multiplet")
    r = jet.sqrt(jet.mul(X[1], X[1]) + jet.mul(X[2], X[2]))
    tau = jet.sqrt(jet.mul(X[0], X[0]) - jet.mul(r, r))
    inv_tau = jet.reciprocal(tau)
    sh = jet.mul(r, inv_tau)
    ch = jet.mul(X[0], inv_tau)
    inv_r = jet.reciprocal(r)
    w1, w2 = jet.mul(X[1], inv_r), jet.mul(X[2], inv_r)
    f = tr.scalar
    D = lambda V, u: fm.cov_lie(V, A, u, rep)
    dy = fm.Vector(np.stack([r, jet.mul(X[0], w1), jet.mul(X[0], w2)]), jet)
    dth = fm.Vector(np.stack([np.zeros_like(r), -X[2], X[1]]), jet)
    inv_sh = jet.reciprocal(sh)
    inv_tau2 = jet.mul(inv_tau, inv_tau)
    lhs = fm.wedge(f(inv_sh), D(dy, fm.wedge(f(sh), D(dy, p))))
    lhs = lhs + fm.wedge(f(jet.mul(inv_sh, inv_sh)), D(dth, D(dth, p)))
    lhs = fm.wedge(f(inv_tau2), lhs)
    Z1, Z2 = tr.killing(3), tr.killing(4)
    z11, z22 = D(Z1, D(Z1, p)), D(Z2, D(Z2, p))
    z12, z21 = D(Z1, D(Z2, p)), D(Z2, D(Z1, p))
    th = jet.mul(sh, jet.reciprocal(ch))
    quad = fm.wedge(f(jet.mul(w1, w1)), z22) + fm.wedge(f(jet.mul(w2, w2)), z11) - fm.wedge(f(jet.mul(w1, w2)), z12 + z21)
    rhs = -1.0 * fm.wedge(f(jet.mul(jet.mul(th, th), inv_tau2)), quad)
    rhs = rhs + fm.wedge(f(inv_tau2), z11 + z22)
    rhs = rhs - fm.wedge(f(jet.mul(th, inv_tau2)), fm.wedge(f(w1), D(Z1, p)) + fm.wedge(f(w2), D(Z2, p)))
    return _res(lhs, rhs)


# expansions of the covariant expressions

@identity("expand: Box_A p = Box p - 2*(A ∧ *dp) - (delta A) p - *(A ∧ *(A p))", "expansions", "multiplet")
def _(tr):
    A, p = tr.form(1, "lie"), tr.form(0, "multiplet")
    rep = tr.rep
    zero_A = fm.Form(1, "lie", np.zeros_like(A.comps), tr.jet)
    rhs = _box_components(p, zero_A, rep)
    rhs = rhs - 2 * fm.hodge(fm.wedge(A, fm.hodge(fm.ext_d(p)), rep))
    rhs = rhs - fm.wedge(fm.codifferential(A), p, rep)
    rhs = rhs - fm.hodge(fm.wedge(A, fm.hodge(fm.wedge(A, p, rep)), rep))
    return _res(fm.covariant_box(p, A, rep), rhs)


@identity("expand: J_CSH = 2<<p ∧ dp>> + 2<<p ∧ (A p)>>", "expansions", "multiplet")
def _(tr):
    A, p = tr.form(1, "lie"), tr.form(0, "multiplet")
    rep = tr.rep
    lhs = 2 * fm.bbrk_wedge(p, fm.ext_d(p), rep) + 2 * fm.bbrk_wedge(p, fm.wedge(A, p, rep), rep)
    Dp = fm.cov_d(A, p, rep).value()
    return _res(lhs.value(), md.current_csh_defining(p.value()[0], Dp, rep))


@identity("expand: dJ_CSH five-term expansion", "expansions", "multiplet")
def _(tr):
    A, p = tr.form(1, "lie"), tr.form(0, "multiplet")
    rep = tr.rep
    J = 2 * fm.bbrk_wedge(p, fm.cov_d(A, p, rep), rep)
    rhs = md.dJ_expansion_csh(p, fm.ext_d(p), A, fm.curvature(A, rep), rep)
    return _res(fm.ext_d(J), rhs)


@identity("expand: J_CSD = <<psi ∧ i alpha psi>> and its differential", "expansions", "dirac")
def _(tr):
    p = tr.form(0, "multiplet")
    rep = tr.rep
    J = md.current_csd_form(p, rep)
    r = _res(J.value(), md.current_csd_defining(p.value()[0], rep))
    return max(r, _res(fm.ext_d(J), md.dJ_expansion_csd(p, fm.ext_d(p), rep)))


@identity("dirac: (i D-slash)^2 psi = Box_A psi - 1/2 gamma gamma F psi", "expansions", "dirac")
def _(tr):
    A, p = tr.form(1, "lie"), tr.form(0, "multiplet")
    rep = tr.rep

    def dslash(u):
        Du = fm.cov_d(A, u, rep)
        out = _zero_like(u)
        for m in range(3):
            out = out + _spin(1j * rep.gamma[m], fm.Form(0, "multiplet", Du.comps[m:m + 1], tr.jet))
        return out

    lhs = dslash(dslash(p))
    F = fm.curvature(A, rep).value()
    src = md.squared_dirac_source(p.value()[0], {I: F[i] for i, I in enumerate(fm.INDICES[2])}, rep)
    rhs = fm.covariant_box(p, A, rep).value() - src[None]
    return _res(lhs.value(), rhs)


@identity("cronstrom: (L_dtau + 2/tau) delta A = -(1/tau) *(dJ ∧ S^flat)", "expansions", "multiplet")
def _(tr):
    jet, rep, X = tr.jet, tr.rep, tr.X
    S = fm.Vector(geo.scaling(X), jet)
    Sflat = fm.musical_flat(S)
    tau2 = jet.mul(X[0], X[0]) - jet.mul(X[1], X[1]) - jet.mul(X[2], X[2])
    inv_tau2 = jet.reciprocal(tau2)
    A0 = tr.form(1, "lie")
    # project onto the Cronstrom gauge i_S A = 0 (eta(S, S) = -tau^2)
    iSA = fm.interior(S, A0)
    A = A0 + fm.wedge(fm.Form(0, "lie", jet.mul(iSA.comps, inv_tau2[None, None]), jet), Sflat, rep)
    J = -fm.hodge(fm.curvature(A, rep))
    inv_tau = jet.sqrt(inv_tau2)
    dtau = fm.scale_vector(inv_tau, S)
    dA = fm.codifferential(A)
    lhs = fm.lie_derivative(dtau, dA) + fm.wedge(tr.scalar(2 * inv_tau), dA)
    rhs = -1.0 * fm.wedge(tr.scalar(inv_tau), fm.hodge(fm.wedge(fm.ext_d(J), Sflat)))
    return max(_res(fm.interior(S, A), np.zeros((1, rep.dim, jet.size))), _res(lhs, rhs))


# ------------------------------------------------------------------- suite

ALGEBRAS = {"u1": ("csh_abelian", "csd_abelian"), "su2": ("csh_adjoint_su2", None), "su3": ("csh_adjoint_su3", None)}


def random_cone_point(rng: np.random.Generator) -> np.ndarray:
    tau = rng.uniform(0.5, 3.0)
    y = rng.uniform(0.1, 1.5)
    th = rng.uniform(0, 2 * np.pi)
    return np.array(geo.from_hyperboloidal(tau, y, th), dtype=float)


def make_trial(seed_seq: np.random.SeedSequence, rep: Representation, point=None) -> Trial:
    rng = np.random.default_rng(seed_seq)
    jet = jet_space(4)
    p = random_cone_point(rng) if point is None else np.asarray(point, dtype=float)
    X = np.stack([jet.coordinate(m, p[m]) for m in range(3)])
    return Trial(rng, jet, rep, p, X)


@dataclass
class IdentityRow:
    name: str
    group: str
    algebra: str
    status: str  # PASS, FAIL or SKIPPED
    max_residual: float = float("nan")
    trials: int = 0
    note: str = ""


@dataclass
class SuiteReport:
    rows: list[IdentityRow] = field(default_factory=list)
    seed: int = 0
    n_trials: int = 0
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.status != "FAIL" for r in self.rows)

    @property
    def identities(self) -> list[str]:
        return sorted({r.name for r in self.rows})

    def format(self) -> str:
        lines = [f"identity suite: seed={self.seed} trials={self.n_trials} ({self.seconds:.1f} s)"]
        for r in self.rows:
            res = "" if r.status == "SKIPPED" else f"{r.max_residual:.3e}"
            note = f"  ({r.note})" if r.note else ""
            lines.append(f"{r.status:7s} {r.algebra:4s} {res:>10s}  {r.name}{note}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'} "
                     f"({len(self.identities)} identities, tolerance {TOL:g})")
        return "\n".join(lines)


def _run_identity(ident: Identity, rep: Representation, seeds) -> float:
    worst = 0.0
    for s in seeds:
        worst = max(worst, ident.check(make_trial(s, rep)))
    return worst


def identity_suite(seed: int = 0, n_trials: int = 100, algebras=("u1", "su2", "su3"),
                   workers: int = 1) -> SuiteReport:
    """Run every registered identity over ``n_trials`` seeded trials per algebra."""
    t0 = time.perf_counter()
    report = SuiteReport(seed=seed, n_trials=n_trials)
    jobs = []
    root = np.random.SeedSequence(seed)
    streams = root.spawn(len(REGISTRY) * len(algebras))
    for ia, name in enumerate(algebras):
        alg = build_lie_algebra(name)
        csh, csd = ALGEBRAS[name]
        reps = {"multiplet": build_representation(csh, alg), "dirac": build_representation(csd, alg) if csd else None}
        for ii, ident in enumerate(REGISTRY):
            row = IdentityRow(ident.name, ident.group, name, "PASS")
            report.rows.append(row)
            if ident.tag == "bracket" and alg.abelian:
                row.status, row.note = "SKIPPED", "abelian: both sides vanish"
                continue
            rep = reps["dirac"] if ident.tag == "dirac" else reps["multiplet"]
            if rep is None:
                row.status, row.note = "SKIPPED", "no spinor representation"
                continue
            seeds = streams[ia * len(REGISTRY) + ii].spawn(n_trials)
            jobs.append((row, ident, rep, seeds))

    def run(job):
        row, ident, rep, seeds = job
        row.max_residual = _run_identity(ident, rep, seeds)
        row.trials = len(seeds)
        row.status = "PASS" if row.max_residual < TOL else "FAIL"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(run, jobs))
    else:
        for job in jobs:
            run(job)
    report.seconds = time.perf_counter() - t0
    return report


def covariant_laplacian_on_hyperboloid_at(tau: float, y: float, theta: float, model: str = "csh_adjoint_su2",
                                          seed: int = 0) -> float:
    """Residual of the hyperboloidal Laplacian identity at one prescribed point."""
    alg_name = "u1" if "abelian" in model else model.rsplit("_", 1)[1]
    rep = build_representation(model, build_lie_algebra(alg_name))
    p = geo.from_hyperboloidal(tau, y, theta)
    ident = next(i for i in REGISTRY if i.name.startswith("box: induced covariant Laplacian"))
    return ident.check(make_trial(np.random.SeedSequence(seed), rep, point=np.array(p, dtype=float)))
