"""Exterior calculus on R^{1+2} for real-, Lie- and multiplet-valued forms.

Components are stored in strictly increasing multi-index order. The trailing
axes of ``comps`` are a "tail": empty for a single point, the grid shape for a
gridded field, or a jet axis when ``jet`` is set (exact derivatives).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Optional

import numpy as np

from .algebra import ETA, Representation
from .jets import JetSpace

INDICES = {k: list(combinations(range(3), k)) for k in range(4)}
NCOMP = {k: len(v) for k, v in INDICES.items()}


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def wedge_table(k: int, l: int):
    out = []
    for i, I in enumerate(INDICES[k]):
        for j, J in enumerate(INDICES[l]):
            if set(I) & set(J):
                continue
            K = tuple(sorted(I + J))
            out.append((i, j, INDICES[k + l].index(K), _perm_sign(I + J)))
    return out


@lru_cache(maxsize=None)
def interior_table(k: int):
    # (iota_X w)_J = sum_mu X^mu w_{mu J}
    out = []
    for j, J in enumerate(INDICES[k - 1]):
        for mu in range(3):
            if mu in J:
                continue
            K = tuple(sorted((mu,) + J))
            out.append((j, mu, INDICES[k].index(K), _perm_sign((mu,) + J)))
    return out


@lru_cache(maxsize=None)
def hodge_table(k: int):
    out = []
    for i, I in enumerate(INDICES[k]):
        Ic = tuple(m for m in range(3) if m not in I)
        s = _perm_sign(I + Ic)
        for m in I:
            s *= int(ETA[m, m])
        out.append((i, INDICES[3 - k].index(Ic), s))
    return out


@lru_cache(maxsize=None)
def d_table(k: int):
    # (d w)_K = sum_{mu in K} sign * d_mu w_{K \ mu}
    out = []
    for kk, K in enumerate(INDICES[k + 1]):
        for pos, mu in enumerate(K):
            rest = K[:pos] + K[pos + 1:]
            out.append((kk, mu, INDICES[k].index(rest), (-1) ** pos))
    return out


KINDS = ("real", "lie", "multiplet")


@dataclass(frozen=True)
class Form:
    degree: int
    kind: str
    comps: np.ndarray  # (ncomp, nval, *tail)
    jet: Optional[JetSpace] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if not 0 <= self.degree <= 3:
            raise ValueError("degree must be in 0..3")
        if self.comps.shape[0] != NCOMP[self.degree]:
            raise ValueError(f"a {self.degree}-form needs {NCOMP[self.degree]} components")

    @property
    def nval(self) -> int:
        return self.comps.shape[1]

    @property
    def tail(self) -> tuple:
        return self.comps.shape[2:]

    def like(self, comps, degree=None, kind=None) -> "Form":
        return Form(self.degree if degree is None else degree, kind or self.kind, comps, self.jet)

    def __add__(self, other: "Form") -> "Form":
        _check_same(self, other)
        return self.like(self.comps + other.comps)

    def __sub__(self, other: "Form") -> "Form":
        _check_same(self, other)
        return self.like(self.comps - other.comps)

    def __neg__(self) -> "Form":
        return self.like(-self.comps)

    def __mul__(self, c) -> "Form":
        return self.like(self.comps * c)

    __rmul__ = __mul__

    def component(self, *idx) -> np.ndarray:
        return self.comps[INDICES[self.degree].index(tuple(idx))]

    def value(self) -> np.ndarray:
        """Evaluate at the base point of a jet form; identity otherwise."""
        return self.comps[..., 0] if self.jet is not None else self.comps


FormValue = Form
FormField = Form


def _check_same(a: Form, b: Form):
    if a.degree != b.degree or a.kind != b.kind:
        raise ValueError(f"cannot combine {a.kind} {a.degree}-form with {b.kind} {b.degree}-form")


def zero_form(degree: int, kind: str, nval: int, tail=(), jet: Optional[JetSpace] = None, dtype=None) -> Form:
    if dtype is None:
        dtype = complex if kind == "multiplet" else float
    shape = (NCOMP[degree], nval) + tuple(tail) + ((jet.size,) if jet is not None else ())
    return Form(degree, kind, np.zeros(shape, dtype=dtype), jet)


def basis_form(idx: tuple, kind: str = "real", value=None, jet=None) -> Form:
    """dx^{idx} (sorted or not) with the given coefficient (default 1)."""
    k = len(idx)
    sign = _perm_sign(idx)
    K = tuple(sorted(idx))
    if len(set(K)) < k:
        raise ValueError("repeated index in basis form")
    value = np.atleast_1d(np.asarray(1.0 if value is None else value))
    comps = np.zeros((NCOMP[k],) + value.shape + ((jet.size,) if jet is not None else ()), dtype=value.dtype)
    if jet is not None:
        comps[INDICES[k].index(K), ..., 0] = sign * value
    else:
        comps[INDICES[k].index(K)] = sign * value
    return Form(k, kind, comps, jet)


def _tmul(x: np.ndarray, y: np.ndarray, jet: Optional[JetSpace]) -> np.ndarray:
    return jet.mul(x, y) if jet is not None else x * y


def _jet_of(*forms) -> Optional[JetSpace]:
    jets = {id(f.jet): f.jet for f in forms if f is not None and f.jet is not None}
    return next(iter(jets.values())) if jets else None


def _lift(x: np.ndarray, jet: Optional[JetSpace], has_jet: bool) -> np.ndarray:
    if jet is not None and not has_jet:
        return jet.const(x)
    return x


def _pair_values(x: np.ndarray, y: np.ndarray, kx: str, ky: str, rep: Optional[Representation], jet):
    """Pointwise product of coefficient vectors (nval, *tail); returns (kind, values)."""
    if kx == "real":
        return ky, _tmul(x[0][None], y, jet)
    if ky == "real":
        return kx, _tmul(x, y[0][None], jet)
    if rep is None:
        raise ValueError(f"pairing {kx} with {ky} needs a representation")
    if kx == "lie" and ky == "lie":
        c = rep.algebra.structure_constants
    elif kx == "lie" and ky == "multiplet":
        c = np.transpose(rep.t_ops, (0, 2, 1))  # c[A, j, i] = T^A_ij
    else:
        raise ValueError(f"unsupported coefficient pairing ({kx}, {ky})")
    outer = _tmul(x[:, None], y[None, :], jet)
    vals = np.einsum("abc,ab...->c...", c, outer)
    return ("lie" if ky == "lie" else "multiplet"), vals


def _prepare(a: Form, b: Form):
    jet = _jet_of(a, b)
    ca = _lift(a.comps, jet, a.jet is not None)
    cb = _lift(b.comps, jet, b.jet is not None)
    return jet, ca, cb


def wedge(a: Form, b: Form, rep: Optional[Representation] = None) -> Form:
    """a ∧ b with the coefficient pairing implied by the kinds ((lie, lie) gives [a ∧ b])."""
    k, l = a.degree, b.degree
    if k + l > 3:
        raise ValueError("degree overflow in wedge")
    jet, ca, cb = _prepare(a, b)
    kind, out = None, None
    for i, j, kk, s in wedge_table(k, l):
        kind, v = _pair_values(ca[i], cb[j], a.kind, b.kind, rep, jet)
        if out is None:
            out = np.zeros((NCOMP[k + l],) + v.shape, dtype=v.dtype)
        out[kk] += s * v
    if out is None:
        kind, v = _pair_values(ca[0], cb[0], a.kind, b.kind, rep, jet)
        out = np.zeros((NCOMP[k + l],) + v.shape, dtype=v.dtype)
    return Form(k + l, kind, out, jet)


def bbrk_wedge(v: Form, w: Form, rep: Representation) -> Form:
    """<<v ∧ w>>: Lie-valued wedge of two multiplet-valued forms."""
    if v.kind != "multiplet" or w.kind != "multiplet":
        raise ValueError("bbrk_wedge needs multiplet-valued forms")
    k, l = v.degree, w.degree
    if k + l > 3:
        raise ValueError("degree overflow in bbrk_wedge")
    jet, cv, cw = _prepare(v, w)
    tail = cv.shape[2:]
    out = np.zeros((NCOMP[k + l], rep.dim) + tail)
    for i, j, kk, s in wedge_table(k, l):
        outer = _tmul(cv[i][:, None], np.conj(cw[j])[None, :], jet)  # (j, i, ...)
        out[kk] += s * np.einsum("aij,ji...->a...", rep.t_ops, outer).real
    return Form(k + l, "lie", out, jet)


def hodge(w: Form) -> Form:
    k = w.degree
    out = np.zeros((NCOMP[3 - k],) + w.comps.shape[1:], dtype=w.comps.dtype)
    for i, ic, s in hodge_table(k):
        out[ic] = s * w.comps[i]
    return w.like(out, degree=3 - k)


@dataclass(frozen=True)
class Vector:
    comps: np.ndarray  # (3, *tail)
    jet: Optional[JetSpace] = None

    def value(self) -> np.ndarray:
        return self.comps[..., 0] if self.jet is not None else self.comps

    def __add__(self, other):
        return Vector(self.comps + other.comps, self.jet or other.jet)

    def __sub__(self, other):
        return Vector(self.comps - other.comps, self.jet or other.jet)

    def __mul__(self, c):
        return Vector(self.comps * c, self.jet)

    __rmul__ = __mul__


VectorValue = Vector


def scale_vector(f: np.ndarray, X: Vector) -> Vector:
    """Multiply a vector field by a scalar function (same tail conventions)."""
    return Vector(_tmul(f[None], X.comps, X.jet), X.jet)


def interior(X: Vector, w: Form) -> Form:
    if w.degree == 0:
        raise ValueError("interior product of a 0-form")
    k = w.degree
    jet = _jet_of(w) or X.jet
    cw = _lift(w.comps, jet, w.jet is not None)
    cx = _lift(X.comps, jet, X.jet is not None)
    out = np.zeros((NCOMP[k - 1],) + cw.shape[1:], dtype=cw.dtype)
    for j, mu, kk, s in interior_table(k):
        out[j] += s * _tmul(cx[mu][None], cw[kk], jet)
    return Form(k - 1, w.kind, out, jet)


def musical_flat(X: Vector) -> Form:
    comps = np.einsum("mn,n...->m...", ETA, X.comps)[:, None]
    return Form(1, "real", comps, X.jet)


def musical_sharp(w: Form) -> Vector:
    if w.degree != 1 or w.kind != "real":
        raise ValueError("sharp needs a real 1-form")
    return Vector(np.einsum("mn,n...->m...", ETA, w.comps[:, 0]), w.jet)


def form_norm(w: Form) -> np.ndarray:
    """Euclidean-auxiliary norm, pointwise over the tail (evaluated at the base point for jets)."""
    c = w.value()
    return np.sqrt(np.sum(np.abs(c) ** 2, axis=(0, 1)))


def scalar_to_form(f: np.ndarray, kind: str, jet: Optional[JetSpace] = None) -> Form:
    """Wrap a coefficient array (nval, *tail) as a 0-form."""
    return Form(0, kind, np.asarray(f)[None], jet)


def act_form(a: Form, v: Form, rep: Representation) -> Form:
    """Action of a Lie-valued 0-form on a form (bracket or representation)."""
    if a.degree != 0:
        raise ValueError("act_form needs a Lie-valued 0-form")
    return wedge(a, v, rep)


# ---------------------------------------------------------------- derivatives

def _axis_slicer(ndim: int, ax: int, n: int):
    def sl(lo, hi):
        idx = [slice(None)] * ndim
        idx[ax] = slice(lo, n + hi if hi <= 0 else hi)
        return tuple(idx)
    return sl


def central_diff(f: np.ndarray, axis: int, h: float, order: int = 4) -> np.ndarray:
    """Centered first derivative along one of the last two axes; zero on the halo ring."""
    ax = f.ndim - 2 + axis
    out = np.zeros_like(f)
    sl = _axis_slicer(f.ndim, ax, f.shape[ax])
    if order == 2:
        o = out[sl(1, -1)]
        np.subtract(f[sl(2, 0)], f[sl(0, -2)], out=o)
        o *= 1 / (2 * h)
    elif order == 4:
        o = out[sl(2, -2)]
        np.subtract(f[sl(3, -1)], f[sl(1, -3)], out=o)
        o *= 8
        o -= f[sl(4, 0)]
        o += f[sl(0, -4)]
        o *= 1 / (12 * h)
    else:
        raise ValueError("central differences of order 2 or 4 only")
    return out


def central_diff2(f: np.ndarray, axis: int, h: float, order: int = 4) -> np.ndarray:
    ax = f.ndim - 2 + axis
    out = np.zeros_like(f)
    sl = _axis_slicer(f.ndim, ax, f.shape[ax])
    if order == 2:
        o = out[sl(1, -1)]
        np.add(f[sl(2, 0)], f[sl(0, -2)], out=o)
        o -= 2 * f[sl(1, -1)]
        o *= 1 / h**2
    elif order == 4:
        o = out[sl(2, -2)]
        np.add(f[sl(3, -1)], f[sl(1, -3)], out=o)
        o *= 16
        o -= f[sl(4, 0)]
        o -= f[sl(0, -4)]
        o -= 30 * f[sl(2, -2)]
        o *= 1 / (12 * h**2)
    else:
        raise ValueError("central differences of order 2 or 4 only")
    return out


def partial(w: Form, mu: int, h: Optional[float] = None, order: int = 4,
            time_derivative: Optional[Form] = None) -> np.ndarray:
    """Component-wise partial derivative d_mu of the coefficient array."""
    if w.jet is not None:
        return w.jet.diff(w.comps, mu)
    if mu == 0:
        if time_derivative is None:
            return np.full_like(w.comps, np.nan)
        return time_derivative.comps
    if h is None:
        raise ValueError("grid derivatives need the spacing h")
    return central_diff(w.comps, mu - 1, h, order)


def ext_d(w: Form, h: Optional[float] = None, scheme: str = "central4",
          time_derivative: Optional[Form] = None) -> Form:
    """Exterior derivative. Jet forms are differentiated exactly; gridded forms use
    centered differences in space and ``time_derivative`` for the d_0 slot (NaN if absent)."""
    if w.degree == 3:
        return w.like(np.zeros_like(w.comps))
    order = {"central2": 2, "central4": 4}.get(scheme, 4)
    parts = [partial(w, mu, h, order, time_derivative) for mu in range(3)]
    out = np.zeros((NCOMP[w.degree + 1],) + w.comps.shape[1:], dtype=w.comps.dtype)
    for kk, mu, i, s in d_table(w.degree):
        out[kk] += s * parts[mu][i]
    return w.like(out, degree=w.degree + 1)


def cov_d(A: Optional[Form], w: Form, rep: Optional[Representation] = None, **kw) -> Form:
    """d_A w = d w + A ∧ w."""
    dw = ext_d(w, **kw)
    if A is None:
        return dw
    return dw + wedge(A, w, rep)


def lie_derivative(X: Vector, w: Form, **kw) -> Form:
    """Cartan: L_X w = iota_X d w + d iota_X w."""
    if w.degree == 3:
        return ext_d(interior(X, w), **kw)
    out = interior(X, ext_d(w, **kw))
    if w.degree > 0:
        out = out + ext_d(interior(X, w), **kw)
    return out


def cov_lie(X: Vector, A: Optional[Form], w: Form, rep: Optional[Representation] = None, **kw) -> Form:
    """L^A_X w = L_X w + (iota_X A) w."""
    out = lie_derivative(X, w, **kw)
    if A is None:
        return out
    return out + wedge(interior(X, A), w, rep)


def codifferential(w: Form, A: Optional[Form] = None, rep: Optional[Representation] = None, **kw) -> Form:
    """delta_A w = (-1)^{k+1} * d_A * w."""
    return (-1) ** (w.degree + 1) * hodge(cov_d(A, hodge(w), rep, **kw))


def vector_bracket(X: Vector, Y: Vector) -> Vector:
    """[X, Y]^mu = X^nu d_nu Y^mu - Y^nu d_nu X^mu (jet vector fields)."""
    jet = X.jet or Y.jet
    if jet is None:
        raise ValueError("vector_bracket needs jet vector fields")
    cx = _lift(X.comps, jet, X.jet is not None)
    cy = _lift(Y.comps, jet, Y.jet is not None)
    out = np.zeros_like(cx + cy)
    for nu in range(3):
        out += _tmul(cx[nu][None], jet.diff(cy, nu), jet) - _tmul(cy[nu][None], jet.diff(cx, nu), jet)
    return Vector(out, jet)


def curvature(A: Form, rep: Representation, **kw) -> Form:
    """F = dA + 1/2 [A ∧ A]."""
    return ext_d(A, **kw) + 0.5 * wedge(A, A, rep)


def covariant_box(phi: Form, A: Optional[Form], rep: Representation, **kw) -> Form:
    """Box_A phi = - * d_A * d_A phi."""
    return -hodge(cov_d(A, hodge(cov_d(A, phi, rep, **kw)), rep, **kw))
