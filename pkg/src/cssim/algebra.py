"""Lie algebras with bi-invariant metrics and the representations used by the models."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

ETA = np.diag([-1.0, 1.0, 1.0])
ETA_INV = ETA.copy()

# gamma matrices for the Dirac models; they satisfy g^mu g^nu + g^nu g^mu = -2 eta^{mu nu}
GAMMA = np.array(
    [
        [[1, 0], [0, -1]],
        [[0, 1], [-1, 0]],
        [[0, -1j], [-1j, 0]],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class LieAlgebraData:
    kind: str
    n: int
    basis: np.ndarray  # (dim, n, n) anti-hermitian matrices
    structure_constants: np.ndarray  # c[A, B, C] with [e_A, e_B] = c_AB^C e_C
    metric: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def abelian(self) -> bool:
        return not np.any(self.structure_constants)

    def to_matrix(self, coeffs: np.ndarray) -> np.ndarray:
        """Map coefficient vectors (dim, ...) to matrices (..., n, n)."""
        return np.einsum("a...,aij->...ij", coeffs, self.basis)

    def from_matrix(self, mat: np.ndarray) -> np.ndarray:
        """Orthogonal projection of (..., n, n) matrices onto the basis; returns (dim, ...) real."""
        c = np.einsum("...ij,aij->a...", mat, self.basis.conj())
        return c.real


def _gram_schmidt(mats: list[np.ndarray]) -> np.ndarray:
    out: list[np.ndarray] = []
    for m in mats:
        v = m.astype(complex)
        for e in out:
            v = v - np.trace(v @ e.conj().T).real * e
        v = v / np.sqrt(np.trace(v @ v.conj().T).real)
        out.append(v)
    return np.array(out)


def _sun_seed(n: int) -> list[np.ndarray]:
    mats = []
    for j in range(n):
        for k in range(j + 1, n):
            m = np.zeros((n, n), complex)
            m[j, k], m[k, j] = 1, -1
            mats.append(m)
            m = np.zeros((n, n), complex)
            m[j, k], m[k, j] = 1j, 1j
            mats.append(m)
    for j in range(n - 1):
        m = np.zeros((n, n), complex)
        m[j, j], m[j + 1, j + 1] = 1j, -1j
        mats.append(m)
    return mats


def _structure_constants(basis: np.ndarray) -> np.ndarray:
    dim = basis.shape[0]
    c = np.zeros((dim, dim, dim))
    for a in range(dim):
        for b in range(dim):
            comm = basis[a] @ basis[b] - basis[b] @ basis[a]
            c[a, b] = np.einsum("ij,cij->c", comm, basis.conj()).real
    c[np.abs(c) < 1e-13] = 0.0
    return c


def build_lie_algebra(kind: str) -> LieAlgebraData:
    """Build u1 or suN (kind 'su2', 'su3', ... or 'suN:n') with an orthonormal basis."""
    kind = kind.lower()
    if kind == "u1":
        basis = np.array([[[1j]]])
        return LieAlgebraData("u1", 1, basis, np.zeros((1, 1, 1)), np.eye(1))
    if not kind.startswith("su"):
        raise ValueError(f"unknown Lie algebra kind {kind!r}")
    n = int(kind[2:].strip(":()"))
    if n < 2:
        raise ValueError("su(n) requires n >= 2")
    basis = _gram_schmidt(_sun_seed(n))
    metric = np.einsum("aij,bij->ab", basis, basis.conj()).real
    # Gram-Schmidt leaves float dust of order 1e-16 off the diagonal
    metric = np.where(np.abs(metric - np.eye(len(basis))) < 1e-13, np.eye(len(basis)), metric)
    return LieAlgebraData(f"su{n}", n, basis, _structure_constants(basis), metric)


def antisymmetry_residual(alg: LieAlgebraData) -> float:
    c = alg.structure_constants
    return float(np.max(np.abs(c + c.transpose(1, 0, 2)), initial=0.0))


def jacobi_residual(alg: LieAlgebraData) -> float:
    c = alg.structure_constants
    t = (
        np.einsum("abd,dce->abce", c, c)
        + np.einsum("bcd,dae->abce", c, c)
        + np.einsum("cad,dbe->abce", c, c)
    )
    return float(np.max(np.abs(t), initial=0.0))


def biinvariance_residual(alg: LieAlgebraData) -> float:
    # c_{CD}^{A'} delta^{DA} + c_{CD}^{A} delta^{DA'}
    c = alg.structure_constants
    t = np.einsum("cdp,da->cap", c, alg.metric) + np.einsum("cda,dp->cap", c, alg.metric)
    return float(np.max(np.abs(t), initial=0.0))


@dataclass(frozen=True)
class Representation:
    model: str
    algebra: LieAlgebraData
    t_ops: np.ndarray  # (dim, v, v) complex
    gamma: Optional[np.ndarray] = None
    alpha: Optional[np.ndarray] = field(default=None)

    @property
    def v_dim(self) -> int:
        return self.t_ops.shape[1]

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def dirac(self) -> bool:
        return self.gamma is not None

    def inner(self, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        """<v, w> = sum_i v_i conj(w_i), linear in the first slot; contracts axis 0."""
        return np.sum(v * np.conj(w), axis=0)


def build_representation(model: str, algebra: LieAlgebraData) -> Representation:
    model = model.lower()
    if model in ("csh_abelian", "csd_abelian"):
        if algebra.kind != "u1":
            raise ValueError(f"{model} needs the u1 algebra, got {algebra.kind}")
        if model == "csh_abelian":
            return Representation(model, algebra, np.array([[[1j]]]))
        t = np.array([1j * np.eye(2)])
        alpha = np.einsum("ij,njk->nik", GAMMA[0], GAMMA)
        return Representation(model, algebra, t, gamma=GAMMA.copy(), alpha=alpha)
    if model.startswith("csh_adjoint"):
        if not algebra.kind.startswith("su"):
            raise ValueError(f"{model} needs an su(n) algebra, got {algebra.kind}")
        # T^A v = [e_A, v] in the basis e_B of sl(n, C): (T^A)_{CB} = c_{AB}^C
        t = np.transpose(algebra.structure_constants, (0, 2, 1)).astype(complex)
        return Representation(model, algebra, t)
    raise ValueError(f"unknown model {model!r}")


def model_algebra(model: str) -> tuple[LieAlgebraData, Representation]:
    """Algebra/representation pair for the config-level model names."""
    model = model.lower()
    if model in ("csh_abelian", "csd_abelian"):
        alg = build_lie_algebra("u1")
    elif model.startswith("csh_adjoint_su"):
        alg = build_lie_algebra(model.rsplit("_", 1)[1])
    else:
        raise ValueError(f"unknown model {model!r}")
    return alg, build_representation(model, alg)


def representation_residual(rep: Representation) -> float:
    t = rep.t_ops
    comm = np.einsum("aij,bjk->abik", t, t) - np.einsum("bij,ajk->abik", t, t)
    rhs = np.einsum("abc,cik->abik", rep.algebra.structure_constants, t)
    return float(np.max(np.abs(comm - rhs), initial=0.0))


def unitarity_residual(rep: Representation, rng: np.random.Generator, samples: int = 100) -> float:
    worst = 0.0
    for _ in range(samples):
        v = rng.normal(size=rep.v_dim) + 1j * rng.normal(size=rep.v_dim)
        w = rng.normal(size=rep.v_dim) + 1j * rng.normal(size=rep.v_dim)
        for ta in rep.t_ops:
            worst = max(worst, abs(rep.inner(ta @ v, w) + rep.inner(v, ta @ w)))
    return worst


def gamma_residual(gamma: np.ndarray = GAMMA) -> float:
    worst = 0.0
    for mu in range(3):
        for nu in range(3):
            ac = gamma[mu] @ gamma[nu] + gamma[nu] @ gamma[mu]
            worst = max(worst, float(np.max(np.abs(ac + 2 * ETA_INV[mu, nu] * np.eye(2)))))
    return worst


def act(a: np.ndarray, v: np.ndarray, rep: Representation) -> np.ndarray:
    """sum_A a^A T^A v; a has shape (dim, ...), v has shape (v_dim, ...)."""
    return np.einsum("a...,aij,j...->i...", a, rep.t_ops, v)


def bracket(a: np.ndarray, b: np.ndarray, alg: LieAlgebraData) -> np.ndarray:
    return np.einsum("a...,b...,abc->c...", a, b, alg.structure_constants)


def bbrk(v: np.ndarray, w: np.ndarray, rep: Representation) -> np.ndarray:
    """<<v, w>> = 1/2(<Tv, w> + <w, Tv>) = Re <T^A v, w>, returned with shape (dim, ...)."""
    return np.einsum("aij,j...,i...->a...", rep.t_ops, v, np.conj(w)).real
