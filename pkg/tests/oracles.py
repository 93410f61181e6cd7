"""Independent closed-form formulas used as oracles.

None of these call into cssim's model code; they work with plain complex
numbers or N x N matrices so a sign or normalization slip in the library
shows up as a mismatch.
"""
import numpy as np


# abelian self-dual CSH, V = C, T v = i v

def abelian_current(phi, dphi):
    """i (phi conj(D phi) - conj(phi) D phi), real."""
    return (1j * (phi * np.conj(dphi) - np.conj(phi) * dphi)).real


def abelian_potential(phi, kappa=1.0, v=1.0):
    r2 = np.abs(phi) ** 2
    return (-4 * v**2 * r2 * phi + 3 * r2**2 * phi) / kappa**2


def abelian_potential_energy(phi, kappa=1.0, v=1.0):
    r2 = np.abs(phi) ** 2
    return r2 * (r2 - v**2) ** 2 / kappa**2


# adjoint CSH on sl(N, C), <v, w> = tr(v w^dagger)

def comm(x, y):
    return x @ y - y @ x


def dag(x):
    return np.conj(np.swapaxes(x, -1, -2))


def adjoint_current(phi, dphi):
    """-[phi^dagger, D phi] + [(D phi)^dagger, phi]."""
    return -comm(dag(phi), dphi) + comm(dag(dphi), phi)


def adjoint_potential(phi, kappa=1.0, v=1.0):
    """(4v^2/k^2)[phi,[phi,phi^dag]] + (1/k^2)(2[[phi,[phi^dag,[phi,phi^dag]]],phi] + [[phi,[phi,phi^dag]],[phi,phi^dag]])."""
    c = comm(phi, dag(phi))
    cubic = 4 * v**2 * comm(phi, c)
    quintic = 2 * comm(comm(phi, comm(dag(phi), c)), phi) + comm(comm(phi, c), c)
    return (cubic + quintic) / kappa**2


def adjoint_potential_energy(phi, kappa=1.0, v=1.0, sign=-1):
    """|[[phi,phi^dag],phi] + sign v^2 phi|^2 / k^2. The general formula reduces to sign = -1
    for the adjoint action; sign = +1 is the form written next to the closed-form U."""
    w = comm(comm(phi, dag(phi)), phi) + sign * v**2 * phi
    return np.trace(w @ dag(w)).real / kappa**2


def matrix_of(coeffs, basis):
    return np.einsum("a,aij->ij", coeffs, basis)


def coeffs_of(mat, basis):
    """Complex coefficients in an orthonormal basis for tr(x y^dagger)."""
    return np.einsum("ij,aij->a", mat, np.conj(basis))


# abelian CSD, V = C^2

GAMMA = np.array([[[1, 0], [0, -1]], [[0, 1], [-1, 0]], [[0, -1j], [-1j, 0]]], dtype=complex)
ETA = np.diag([-1.0, 1.0, 1.0])


def dirac_current(psi):
    """J_mu = eta_{mu nu} psi^dagger gamma^0 gamma^nu psi."""
    out = np.array([np.conj(psi) @ GAMMA[0] @ GAMMA[nu] @ psi for nu in range(3)])
    return (ETA @ out).real


def numerical_gradient(f, z, h=1e-6):
    """dU/d(conj z) * 2 for real f of complex vector z, central differences."""
    g = np.zeros_like(z)
    for k in range(z.size):
        e = np.zeros_like(z)
        e.flat[k] = h
        dre = (f(z + e) - f(z - e)) / (2 * h)
        dim = (f(z + 1j * e) - f(z - 1j * e)) / (2 * h)
        g.flat[k] = dre + 1j * dim
    return g


# frozen hand values
ABELIAN_U_AT = (0.3 + 0.4j, -0.24375 - 0.325j)  # |phi|^2 = 1/4 so U = (-1 + 3/16) phi
CSD_U_UNIT = (np.array([1.0, 0.0]), np.array([1.0, 0.0]))  # J = (-1, 0, 0), U = gamma^1 gamma^2 (i psi)
DELTA_X0DX0 = 1.0  # codifferential of x^0 dx^0
