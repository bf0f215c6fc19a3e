"""Gaussian-state simulation of quadratic fermionic chains.

Conventions
-----------
A quadratic Hamiltonian is stored as

    H = sum_ij A_ij c^dag_i c_j + 1/2 sum_ij (B_ij c_i c_j + h.c.) + offset

with ``A`` Hermitian and ``B`` antisymmetric. In Nambu form
``Psi = (c, c^dag)``, ``H = 1/2 Psi^dag M Psi + tr(A)/2 + offset`` with
``M = [[A, B^dag], [B, -A^*]]``.

A Gaussian state is the vacuum of quasiparticles
``beta_k = sum_i (U_ik^* c_i + V_ik^* c^dag_i)``, i.e. ``Psi = W (beta, beta^dag)``
with ``W = [[U, V^*], [V, U^*]]`` unitary. Time evolution acts as
``W -> exp(-i M T) W``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .models import FERMIONIC, HamiltonianSpec, term_list

CONSTRAINT_TOL = 1e-10
REORTHO_THRESHOLD = 1e-8
REORTHO_EVERY = 10


class ParityError(ValueError):
    pass


class BdGError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    A: np.ndarray
    B: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        A = np.asarray(self.A)
        B = np.asarray(self.B)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or B.shape != A.shape:
            raise ValueError("A and B must be square matrices of equal size")
        if np.max(np.abs(A - A.conj().T), initial=0.0) > 1e-12:
            raise ValueError("A is not Hermitian")
        if np.max(np.abs(B + B.T), initial=0.0) > 1e-12:
            raise ValueError("B is not antisymmetric")
        if not np.iscomplexobj(A) and not np.iscomplexobj(B):
            A, B = A.astype(float), B.astype(float)
        elif np.all(np.imag(A) == 0) and np.all(np.imag(B) == 0):
            A, B = np.real(A).astype(float), np.real(B).astype(float)
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n_modes(self) -> int:
        return self.A.shape[0]

    @cached_property
    def bdg(self) -> np.ndarray:
        A, B = self.A, self.B
        return np.block([[A, B.conj().T], [B, -A.conj()]])

    @cached_property
    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        try:
            w, v = scipy.linalg.eigh(self.bdg)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
            raise BdGError(str(exc)) from exc
        w.setflags(write=False)
        v.setflags(write=False)
        return w, v

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.A) and not np.iscomplexobj(self.B)

    @cached_property
    def majorana_svd(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(P, s, Q)`` with ``A + B = P diag(s) Q^T`` (real models only).

        In the Majorana basis ``a = c + c^dag``, ``b = i (c^dag - c)`` a real
        model generates ``exp(K t)`` with ``K = [[0, A + B], [-(A + B)^T, 0]]``,
        so one real SVD of size ``n`` replaces a complex eigensolve of ``2n``.
        """
        if not self.is_real:
            raise ValueError("Majorana SVD needs real A and B")
        X = self.A + self.B
        try:
            P, sv, Qt = scipy.linalg.svd(X, lapack_driver="gesdd")
        except np.linalg.LinAlgError:  # pragma: no cover - rare gesdd failure
            P, sv, Qt = scipy.linalg.svd(X, lapack_driver="gesvd")
        for a in (P, sv, Qt):
            a.setflags(write=False)
        return P, sv, Qt.T

    def propagator(self, T: float) -> np.ndarray:
        """exp(-i M T) from the cached spectral decomposition."""
        w, v = self.eigensystem
        return (v * np.exp(-1j * T * w)) @ v.conj().T

    def __add__(self, other: "QuadraticHamiltonian") -> "QuadraticHamiltonian":
        return QuadraticHamiltonian(self.A + other.A, self.B + other.B, self.offset + other.offset)

    def scaled(self, factor: float) -> "QuadraticHamiltonian":
        return QuadraticHamiltonian(factor * self.A, factor * self.B, factor * self.offset)


def build_quadratic(spec: HamiltonianSpec) -> QuadraticHamiltonian:
    if spec.model_kind not in FERMIONIC:
        raise ValueError(f"{spec.model_kind.value} is not a quadratic fermion model")
    return quadratic_from_terms(term_list(spec), spec.n_sites)


def quadratic_from_terms(terms, n: int) -> QuadraticHamiltonian:
    A = np.zeros((n, n))
    B = np.zeros((n, n))
    offset = 0.0
    for c, op, sites in terms:
        if op == "hop":
            i, j = sites[0] - 1, sites[1] - 1
            A[i, j] += c
            A[j, i] += c
        elif op == "pair":
            # c (c^dag_j c^dag_i + c_i c_j), i < j
            i, j = sites[0] - 1, sites[1] - 1
            B[i, j] += c
            B[j, i] -= c
        elif op == "num":
            i = sites[0] - 1
            A[i, i] += c
            offset -= 0.5 * c
        else:
            raise ValueError(f"operator {op!r} is not quadratic fermionic")
    return QuadraticHamiltonian(A, B, offset)


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Quasiparticle vacuum described by Bogoliubov amplitudes (U, V)."""

    U: np.ndarray
    V: np.ndarray
    applied: int = field(default=0, compare=False)

    def __post_init__(self):
        U = np.asarray(self.U, dtype=complex)
        V = np.asarray(self.V, dtype=complex)
        if U.shape != V.shape or U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise ValueError("U and V must be square matrices of equal size")
        U.setflags(write=False)
        V.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)

    @property
    def n_modes(self) -> int:
        return self.U.shape[0]

    @property
    def columns(self) -> np.ndarray:
        """The first block column (U; V) of W."""
        return np.vstack([self.U, self.V])

    @property
    def W(self) -> np.ndarray:
        U, V = self.U, self.V
        return np.block([[U, V.conj()], [V, U.conj()]])

    def constraint_error(self) -> float:
        U, V = self.U, self.V
        n = self.n_modes
        e1 = np.max(np.abs(U.conj().T @ U + V.conj().T @ V - np.eye(n)))
        e2 = np.max(np.abs(U.T @ V + V.T @ U))
        return float(max(e1, e2))

    @cached_property
    def parity(self) -> int:
        """Fermion parity (+1 even, -1 odd) of the quasiparticle vacuum."""
        sign, _ = np.linalg.slogdet(self.W)
        return 1 if sign.real > 0 else -1

    def correlations(self) -> tuple[np.ndarray, np.ndarray]:
        """(rho, kappa) with rho_ij = <c^dag_i c_j>, kappa_ij = <c_i c_j>."""
        U, V = self.U, self.V
        return V @ V.conj().T, U @ V.conj().T


def vacuum(n: int) -> GaussianState:
    return GaussianState(np.eye(n), np.zeros((n, n)))


def filled(n: int) -> GaussianState:
    return GaussianState(np.zeros((n, n)), np.eye(n))


def _orthonormalize(state: GaussianState) -> GaussianState:
    """Replace W by its polar factor; this keeps the (U, V) block structure."""
    W = state.W
    u, _, vh = np.linalg.svd(W)
    Wp = u @ vh
    n = state.n_modes
    return GaussianState(Wp[:n, :n], Wp[n:, :n], 0)


# Majorana change of basis: gamma = OMEGA @ Psi makes particle-hole conjugation
# plain complex conjugation.
def _omega(n: int) -> np.ndarray:
    eye = np.eye(n)
    return np.block([[eye, eye], [-1j * eye, 1j * eye]]) / math.sqrt(2.0)


def ground_gaussian(H: QuadraticHamiltonian, zero_tol: float = 1e-10):
    """Exact ground state of a quadratic Hamiltonian.

    Returns ``(energy, state)``; the energy is ``tr(A)/2 - sum(eps_k)/2 + offset``
    over the non-negative quasiparticle energies ``eps_k``.
    """
    n = H.n_modes
    if H.is_real:
        P, sv, Q = H.majorana_svd
        state = GaussianState(0.5 * (P + Q), 0.5 * (P - Q))
        e0 = 0.5 * float(np.trace(H.A)) - 0.5 * float(np.sum(sv)) + H.offset
        return e0, state
    w, v = H.eigensystem
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    zero = np.abs(w) < zero_tol * scale
    pos = (~zero) & (w > 0)
    cols = [v[:, pos]]
    n_zero = int(np.count_nonzero(zero))
    if n_zero:
        if n_zero % 2:
            raise BdGError("odd number of zero modes in the BdG spectrum")
        om = _omega(n)
        y = om @ v[:, zero]
        stacked = np.hstack([y.real, y.imag])
        left, _, _ = np.linalg.svd(stacked, full_matrices=False)
        real_basis = left[:, :n_zero]
        pairs = (real_basis[:, 0::2] + 1j * real_basis[:, 1::2]) / math.sqrt(2.0)
        cols.append(om.conj().T @ pairs)
    X = np.hstack(cols)
    if X.shape[1] != n:
        raise BdGError(f"expected {n} quasiparticle modes, found {X.shape[1]}")
    state = GaussianState(X[:n], X[n:])
    if state.constraint_error() > 1e-8:
        state = _orthonormalize(state)
    eps = np.clip(w[pos], 0.0, None)
    e0 = 0.5 * float(np.real(np.trace(H.A))) - 0.5 * float(np.sum(eps)) + H.offset
    return e0, state


def _real_left(R: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """``R @ Z`` for real ``R`` and complex ``Z`` as a single real product."""
    Z = np.ascontiguousarray(Z, dtype=complex)
    out = R @ Z.view(np.float64).reshape(Z.shape[0], -1)
    return np.ascontiguousarray(out).view(np.complex128).reshape(R.shape[0], -1)


def evolve_gaussian(state: GaussianState, H: QuadraticHamiltonian, T: float) -> GaussianState:
    if H.n_modes != state.n_modes:
        raise ValueError("mode count mismatch")
    if T == 0:
        return state
    n = state.n_modes
    if H.is_real:
        P, sv, Q = H.majorana_svd
        cos = np.cos(sv * T)[:, None]
        sin = np.sin(sv * T)[:, None]
        pa = _real_left(P.T, state.U + state.V)
        qb = _real_left(Q.T, 1j * (state.V - state.U))
        za = _real_left(P, cos * pa + sin * qb)
        zb = _real_left(Q, cos * qb - sin * pa)
        out = GaussianState(0.5 * (za + 1j * zb), 0.5 * (za - 1j * zb), state.applied + 1)
    else:
        w, v = H.eigensystem
        X = v @ (np.exp(-1j * T * w)[:, None] * (v.conj().T @ state.columns))
        out = GaussianState(X[:n], X[n:], state.applied + 1)
    if out.applied >= REORTHO_EVERY:
        if out.constraint_error() > REORTHO_THRESHOLD:
            out = _orthonormalize(out)
        else:
            out = GaussianState(out.U, out.V, 0)
    return out


def energy(state: GaussianState, H: QuadraticHamiltonian) -> float:
    rho, kappa = state.correlations()
    e = np.sum(H.A * rho).real + np.sum(H.B * kappa).real + H.offset
    return float(e)


def occupations(state: GaussianState) -> np.ndarray:
    rho, _ = state.correlations()
    return np.clip(np.real(np.diag(rho)), 0.0, 1.0)


def log_overlap_magnitude(a: GaussianState, b: GaussianState, check_parity: bool = True) -> float:
    """log |<a|b>| from det(U_a^dag U_b + V_a^dag V_b) = |<a|b>|^2 (up to phase)."""
    if a.n_modes != b.n_modes:
        raise ValueError("mode count mismatch")
    if check_parity and a.parity != b.parity:
        raise ParityError(f"states have opposite fermion parity ({a.parity:+d} vs {b.parity:+d})")
    m = a.U.conj().T @ b.U + a.V.conj().T @ b.V
    sign, logdet = np.linalg.slogdet(m)
    if sign == 0:
        return -math.inf
    return 0.5 * float(logdet)


def overlap_magnitude(a: GaussianState, b: GaussianState, check_parity: bool = True) -> float:
    val = math.exp(log_overlap_magnitude(a, b, check_parity))
    return min(val, 1.0)


# Fock-space oracle (small N) ---------------------------------------------------


def fock_annihilators(n: int) -> list[sp.csr_matrix]:
    """Jordan-Wigner annihilation operators on 2^n states (local 0 = empty)."""
    if n > 10:
        raise ValueError("Fock-space oracle is limited to n <= 10")
    a = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    z = sp.csr_matrix(np.diag([1.0, -1.0]))
    ops = []
    for i in range(n):
        m = sp.identity(1, format="csr")
        for k in range(n):
            local = z if k < i else (a if k == i else sp.identity(2, format="csr"))
            m = sp.kron(m, local, format="csr")
        ops.append(m)
    return ops


def fock_hamiltonian(H: QuadraticHamiltonian) -> np.ndarray:
    n = H.n_modes
    c = fock_annihilators(n)
    cd = [op.conj().T for op in c]
    dim = 2**n
    out = sp.csr_matrix((dim, dim), dtype=complex)
    for i in range(n):
        for j in range(n):
            if H.A[i, j] != 0:
                out = out + H.A[i, j] * (cd[i] @ c[j])
            if H.B[i, j] != 0:
                term = H.B[i, j] * (c[i] @ c[j])
                out = out + 0.5 * (term + term.conj().T)
    out = out + H.offset * sp.identity(dim)
    return out.toarray()


def fock_state(state: GaussianState) -> np.ndarray:
    """Fock vector of a Gaussian state as the kernel of sum_k beta_k^dag beta_k."""
    n = state.n_modes
    c = fock_annihilators(n)
    cd = [op.conj().T for op in c]
    dim = 2**n
    K = np.zeros((dim, dim), dtype=complex)
    for k in range(n):
        beta = sum(state.U[i, k].conjugate() * c[i] + state.V[i, k].conjugate() * cd[i] for i in range(n))
        beta = beta.toarray()
        K += beta.conj().T @ beta
    w, v = np.linalg.eigh(K)
    if w[0] > 1e-8 or (dim > 1 and w[1] < 1e-6):
        raise BdGError("state is not a unique quasiparticle vacuum")
    return v[:, 0]


def fock_number_operators(n: int) -> list[np.ndarray]:
    c = fock_annihilators(n)
    return [(op.conj().T @ op).toarray() for op in c]
