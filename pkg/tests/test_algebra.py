import numpy as np
import pytest
from hypothesis import given, strategies as st

from cssim import algebra as al

KINDS = ["u1", "su2", "su3"]
MODELS = ["csh_abelian", "csd_abelian", "csh_adjoint_su2", "csh_adjoint_su3"]
seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("kind", KINDS)
def test_structure_gates(kind):
    alg = al.build_lie_algebra(kind)
    assert al.antisymmetry_residual(alg) == 0.0
    assert al.jacobi_residual(alg) < 1e-12
    assert al.biinvariance_residual(alg) < 1e-12
    np.testing.assert_allclose(alg.metric, np.eye(alg.dim), atol=1e-13)


def test_u1_is_abelian():
    alg = al.build_lie_algebra("u1")
    assert alg.dim == 1 and alg.abelian
    assert np.all(alg.structure_constants == 0)
    np.testing.assert_array_equal(alg.metric, [[1.0]])


@pytest.mark.parametrize("kind,dim", [("su2", 3), ("su3", 8), ("su4", 15)])
def test_sun_dimension_and_basis(kind, dim):
    alg = al.build_lie_algebra(kind)
    assert alg.dim == dim
    for e in alg.basis:
        np.testing.assert_allclose(e, -e.conj().T, atol=1e-14)
        assert abs(np.trace(e)) < 1e-14


def test_su2_structure_constants_match_commutators():
    alg = al.build_lie_algebra("su2")
    e = alg.basis
    for A in range(3):
        for B in range(3):
            c = e[A] @ e[B] - e[B] @ e[A]
            np.testing.assert_allclose(alg.from_matrix(c), alg.structure_constants[A, B], atol=1e-14)
    # orthonormal su(2) basis: |c_12^3| = sqrt(2)
    assert abs(abs(alg.structure_constants[0, 1, 2]) - np.sqrt(2)) < 1e-13


def test_unknown_kinds_rejected():
    with pytest.raises(ValueError):
        al.build_lie_algebra("so3")
    with pytest.raises(ValueError):
        al.build_lie_algebra("su1")
    with pytest.raises(ValueError):
        al.model_algebra("csh_foo")


@pytest.mark.parametrize("model", MODELS)
def test_representation_gates(model, rng):
    _, rep = al.model_algebra(model)
    assert al.representation_residual(rep) < 1e-12
    assert al.unitarity_residual(rep, rng) < 1e-12


def test_gamma_anticommutators_exact():
    assert al.gamma_residual() == 0.0
    np.testing.assert_array_equal(al.GAMMA[0], np.diag([1, -1]))


def test_abelian_reps():
    _, rep = al.model_algebra("csh_abelian")
    assert rep.v_dim == 1 and rep.t_ops[0, 0, 0] == 1j
    _, rep = al.model_algebra("csd_abelian")
    assert rep.v_dim == 2 and rep.dirac
    np.testing.assert_array_equal(rep.gamma[0], np.diag([1, -1]))


def test_adjoint_rep_is_matrix_commutator(rng):
    alg, rep = al.model_algebra("csh_adjoint_su2")
    assert rep.v_dim == 3
    e = alg.basis
    for A in range(3):
        for B in range(3):
            v = np.eye(3)[B].astype(complex)
            a = np.eye(3)[A]
            got = np.einsum("a,aij->ij", al.act(a, v, rep), e)
            np.testing.assert_allclose(got, e[A] @ e[B] - e[B] @ e[A], atol=1e-14)


def test_act_u1():
    _, rep = al.model_algebra("csh_abelian")
    z = np.array([0.3 - 0.7j])
    np.testing.assert_allclose(al.act(np.array([1.0]), z, rep), 1j * z)
    assert np.all(al.act(np.zeros(1), z, rep) == 0)


def test_bbrk_u1_direct():
    _, rep = al.model_algebra("csh_abelian")
    phi, psi = 0.4 + 0.1j, -0.2 + 0.9j
    direct = 0.5 * ((1j * phi) * np.conj(psi) + psi * np.conj(1j * phi))
    got = al.bbrk(np.array([phi]), np.array([psi]), rep)
    assert abs(got[0] - direct.real) < 1e-15 and abs(direct.imag) < 1e-15


@given(seeds, st.sampled_from(MODELS))
def test_bbrk_antisymmetric(seed, model):
    _, rep = al.model_algebra(model)
    r = np.random.default_rng(seed)
    v = r.normal(size=rep.v_dim) + 1j * r.normal(size=rep.v_dim)
    w = r.normal(size=rep.v_dim) + 1j * r.normal(size=rep.v_dim)
    np.testing.assert_allclose(al.bbrk(v, w, rep), -al.bbrk(w, v, rep), atol=1e-14)
    assert np.all(al.bbrk(np.zeros_like(v), w, rep) == 0)


@given(seeds, st.sampled_from(["su2", "su3"]))
def test_bracket_equivariance_of_bbrk(seed, kind):
    # [a, <<v, w>>] = <<a v, w>> + <<v, a w>>, the algebraic content of the Leibniz rule
    alg, rep = al.model_algebra(f"csh_adjoint_{kind}")
    r = np.random.default_rng(seed)
    a = r.normal(size=alg.dim)
    v = r.normal(size=rep.v_dim) + 1j * r.normal(size=rep.v_dim)
    w = r.normal(size=rep.v_dim) + 1j * r.normal(size=rep.v_dim)
    lhs = al.bracket(a, al.bbrk(v, w, rep), alg)
    rhs = al.bbrk(al.act(a, v, rep), w, rep) + al.bbrk(v, al.act(a, w, rep), rep)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
