"""Exact dense simulation of spin-1/2 and spin-1 chains.

Basis conventions: site 1 is the most significant digit of the basis index.
Spin-1/2 local states are ``0 = up`` (sigma^z = +1) and ``1 = down``; spin-1
local states are ``m = +1, 0, -1`` in that order. Magnetization sectors are
labelled by the number of up spins.

Operators whose terms are all diagonal in one product basis (Ising couplings
in the x basis, fields along z) are kept in that factored form, so evolving
under them costs a few local basis rotations instead of a dense
eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .models import U1_SYMMETRIC, HamiltonianSpec, ModelKind, Term, term_list

DEFAULT_CAP = 2**24
DENSE_EIG_CAP = 2**14
DENSE_GS_CAP = 2**12
NORM_TOL = 1e-12


class TooLargeError(ValueError):
    pass


class BasisMismatchError(ValueError):
    pass


# local operators ---------------------------------------------------------------

_SQ2 = 1.0 / math.sqrt(2.0)

HALF = {
    "Z": np.diag([1.0, -1.0]),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Y": np.array([[0.0, -1j], [1j, 0.0]]),
    "Sx": 0.5 * np.array([[0.0, 1.0], [1.0, 0.0]]),
    "P": np.array([[0.0, 1.0], [0.0, 0.0]]),  # sigma^+ = |up><down|
    "M": np.array([[0.0, 0.0], [1.0, 0.0]]),
    "N": np.diag([1.0, 0.0]),  # (1 + sigma^z) / 2
}

ONE = {
    "Sz": np.diag([1.0, 0.0, -1.0]),
    "Sx": _SQ2 * np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]),
    "Sy": _SQ2 * np.array([[0.0, -1j, 0.0], [1j, 0.0, -1j], [0.0, 1j, 0.0]]),
}
ONE["Sx2"] = ONE["Sx"] @ ONE["Sx"]

# eigenbases that make the x-type couplings diagonal
_X_BASIS = {2: _SQ2 * np.array([[1.0, 1.0], [1.0, -1.0]])}
_w, _v = np.linalg.eigh(ONE["Sx"])
_X_BASIS[3] = _v[:, ::-1].copy()  # eigenvalues +1, 0, -1

_X_FAMILY = frozenset({"XX", "SxSx", "X", "Sx2"})
_Z_FAMILY = frozenset({"Z", "Sz"})


def _products(term: Term, d: int) -> list[tuple[float, list[tuple[int, np.ndarray]]]]:
    """Expand a term into sums of products of single-site matrices."""
    loc = HALF if d == 2 else ONE
    c, op, s = term
    if op == "Z":
        return [(c, [(s[0], HALF["Z"])])]
    if op == "X":
        return [(c, [(s[0], HALF["X"])])]
    if op == "XX":
        return [(c, [(s[0], HALF["X"]), (s[1], HALF["X"])])]
    if op == "SxSx":
        return [(c, [(s[0], loc["Sx"]), (s[1], loc["Sx"])])]
    if op == "PM":
        return [
            (c, [(s[0], HALF["P"]), (s[1], HALF["M"])]),
            (c, [(s[0], HALF["M"]), (s[1], HALF["P"])]),
        ]
    if op == "Sz":
        return [(c, [(s[0], ONE["Sz"])])]
    if op == "Sx2":
        return [(c, [(s[0], ONE["Sx2"])])]
    raise ValueError(f"operator {op!r} has no spin realization")


def _local_eigenvalues(op: str, d: int) -> Sequence[np.ndarray]:
    """Per-site eigenvalues of a product-diagonal term, in its eigenbasis order."""
    if op in ("Z", "X"):
        return [np.array([1.0, -1.0])]
    if op == "XX":
        return [np.array([1.0, -1.0])] * 2
    if op == "SxSx":
        ev = np.array([0.5, -0.5]) if d == 2 else np.array([1.0, 0.0, -1.0])
        return [ev, ev]
    if op == "Sz":
        return [np.array([1.0, 0.0, -1.0])]
    if op == "Sx2":
        return [np.array([1.0, 0.0, 1.0])]
    raise ValueError(op)


# basis bookkeeping -------------------------------------------------------------


@lru_cache(maxsize=64)
def sector_basis(n_sites: int, n_up: int) -> np.ndarray:
    """Full-space indices of spin-1/2 states with ``n_up`` up spins, ascending."""
    if not 0 <= n_up <= n_sites:
        raise ValueError(f"sector {n_up} outside 0..{n_sites}")
    idx = np.arange(2**n_sites, dtype=np.int64)
    downs = np.zeros_like(idx)
    for b in range(n_sites):
        downs += (idx >> b) & 1
    out = idx[downs == n_sites - n_up]
    out.setflags(write=False)
    return out


def _digits(states: np.ndarray, n: int, d: int) -> np.ndarray:
    """(len(states), n) array of local digits, column k is site k+1."""
    out = np.empty((states.size, n), dtype=np.int8)
    rest = states.copy()
    for k in range(n - 1, -1, -1):
        out[:, k] = rest % d
        rest //= d
    return out


def _check_dim(n: int, d: int, sector, cap: int) -> int:
    dim = d**n if sector is None else math.comb(n, sector)
    if dim > cap:
        raise TooLargeError(f"dimension {dim} exceeds cap {cap}")
    return dim


# states ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DenseState:
    """Normalized pure state of a spin chain (optionally inside a sector)."""

    amplitudes: np.ndarray
    n_sites: int
    local_dim: int = 2
    sector: Optional[int] = None

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.ndim != 1 or amp.size != self.dim:
            raise BasisMismatchError(f"expected {self.dim} amplitudes, got shape {amp.shape}")
        norm = np.linalg.norm(amp)
        if not norm > 0:
            raise ValueError("zero state vector")
        if abs(norm - 1.0) > NORM_TOL:
            amp = amp / norm
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        if self.sector is None:
            return self.local_dim**self.n_sites
        return math.comb(self.n_sites, self.sector)

    @property
    def basis(self) -> Optional[np.ndarray]:
        return None if self.sector is None else sector_basis(self.n_sites, self.sector)

    def same_basis(self, other) -> bool:
        return (self.n_sites, self.local_dim, self.sector) == (other.n_sites, other.local_dim, other.sector)

    def to_full(self) -> "DenseState":
        if self.sector is None:
            return self
        full = np.zeros(self.local_dim**self.n_sites, dtype=complex)
        full[self.basis] = self.amplitudes
        return DenseState(full, self.n_sites, self.local_dim)

    def to_sector(self, n_up: int) -> "DenseState":
        if self.sector == n_up:
            return self
        full = self.to_full().amplitudes
        idx = sector_basis(self.n_sites, n_up)
        leak = np.linalg.norm(np.delete(full, idx)) if full.size > idx.size else 0.0
        if leak > 1e-10:
            raise BasisMismatchError(f"state has weight {leak:.2e} outside sector {n_up}")
        return DenseState(full[idx], self.n_sites, self.local_dim, n_up)


def product_state(local_states: Sequence, local_dim: int = 2, sector: Optional[int] = None) -> DenseState:
    """Tensor product of single-site states.

    Each entry is either a basis label (int) or a local amplitude vector.
    """
    vecs = []
    for s in local_states:
        if np.ndim(s) == 0:
            v = np.zeros(local_dim, dtype=complex)
            v[int(s)] = 1.0
        else:
            v = np.asarray(s, dtype=complex)
            v = v / np.linalg.norm(v)
        vecs.append(v)
    amp = vecs[0]
    for v in vecs[1:]:
        amp = np.kron(amp, v)
    state = DenseState(amp, len(vecs), local_dim)
    return state if sector is None else state.to_sector(sector)


def basis_state(labels: Sequence[int], local_dim: int = 2, sector: Optional[int] = None) -> DenseState:
    return product_state([int(x) for x in labels], local_dim, sector)


# operators ---------------------------------------------------------------------


class OperatorMatrix:
    """Hermitian operator on a chain basis with a lazily cached spectrum.

    Built either from model terms (see :func:`realize`) or from an explicit
    matrix (:meth:`from_matrix`). Instances are treated as immutable.
    """

    def __init__(
        self,
        n_sites: int,
        local_dim: int = 2,
        *,
        terms: Iterable[Term] = (),
        matrix=None,
        sector: Optional[int] = None,
        cap: int = DEFAULT_CAP,
    ):
        self.n_sites = int(n_sites)
        self.local_dim = int(local_dim)
        self.sector = sector
        self.cap = cap
        self.dim = _check_dim(self.n_sites, self.local_dim, sector, cap)
        self.terms = tuple(t for t in terms if t.coeff != 0)
        self._evolutions = 0
        if matrix is not None:
            m = sp.csr_matrix(matrix) if not sp.issparse(matrix) else matrix.tocsr()
            if m.shape != (self.dim, self.dim):
                raise BasisMismatchError(f"matrix shape {m.shape} does not match dim {self.dim}")
            self._matrix = m
        else:
            self._matrix = None
        ops = {t.op for t in self.terms}
        if matrix is None and self.terms and ops <= _X_FAMILY:
            self.local_basis = _X_BASIS[self.local_dim]
        elif matrix is None and ops <= _Z_FAMILY:
            self.local_basis = np.eye(self.local_dim)
        else:
            self.local_basis = None

    @classmethod
    def from_matrix(cls, matrix, n_sites: int, local_dim: int = 2, sector: Optional[int] = None, check=True):
        op = cls(n_sites, local_dim, matrix=matrix, sector=sector)
        if check and not op.is_hermitian():
            raise ValueError("operator is not Hermitian")
        return op

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        self._require_same(other)
        if self._matrix is None and other._matrix is None:
            return OperatorMatrix(
                self.n_sites, self.local_dim, terms=self.terms + other.terms, sector=self.sector, cap=self.cap
            )
        return OperatorMatrix(
            self.n_sites, self.local_dim, matrix=self.matrix + other.matrix, sector=self.sector, cap=self.cap
        )

    def scaled(self, factor: float) -> "OperatorMatrix":
        if self._matrix is None:
            terms = [Term(factor * t.coeff, t.op, t.sites) for t in self.terms]
            return OperatorMatrix(self.n_sites, self.local_dim, terms=terms, sector=self.sector, cap=self.cap)
        return OperatorMatrix(self.n_sites, self.local_dim, matrix=factor * self.matrix, sector=self.sector)

    def _require_same(self, other):
        if (self.n_sites, self.local_dim, self.sector) != (other.n_sites, other.local_dim, other.sector):
            raise BasisMismatchError("operators live on different bases")

    @property
    def is_product_diagonal(self) -> bool:
        return self.local_basis is not None

    @property
    def basis(self) -> Optional[np.ndarray]:
        return None if self.sector is None else sector_basis(self.n_sites, self.sector)

    @cached_property
    def diagonal(self) -> np.ndarray:
        """Eigenvalues in the rotated product basis (product-diagonal operators only)."""
        if not self.is_product_diagonal:
            raise ValueError("operator is not diagonal in a product basis")
        d, n = self.local_dim, self.n_sites
        states = np.arange(self.dim) if self.sector is None else self.basis
        digits = _digits(states, n, d)
        out = np.zeros(self.dim)
        for c, op, sites in self.terms:
            vals = c
            for site, ev in zip(sites, _local_eigenvalues(op, d)):
                vals = vals * ev[digits[:, site - 1]]
            out += vals
        out.setflags(write=False)
        return out

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        if self._matrix is not None:
            return self._matrix
        return _build_sparse(self.terms, self.n_sites, self.local_dim, self.sector)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        m = self.matrix
        diff = m - m.conj().T
        return diff.nnz == 0 or np.max(np.abs(diff.data)) < tol

    @cached_property
    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Full spectral decomposition (ascending eigenvalues, column eigenvectors)."""
        if self.dim > DENSE_EIG_CAP:
            raise TooLargeError(f"dense eigendecomposition of dim {self.dim} exceeds {DENSE_EIG_CAP}")
        dense = self.matrix.toarray()
        if not np.allclose(dense, dense.conj().T, atol=1e-12, rtol=0):
            raise ValueError("operator is not Hermitian")
        if np.iscomplexobj(dense) and np.max(np.abs(dense.imag), initial=0.0) == 0.0:
            dense = dense.real
        w, v = scipy.linalg.eigh(dense)
        w.setflags(write=False)
        v.setflags(write=False)
        return w, v

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        if self.is_product_diagonal and self._matrix is None and "matrix" not in self.__dict__:
            rot = _rotate(amplitudes, self.local_basis.conj().T, self.n_sites, self.local_dim)
            return _rotate(self.diagonal * rot, self.local_basis, self.n_sites, self.local_dim)
        return self.matrix @ amplitudes

    def trace(self) -> float:
        if self.is_product_diagonal and self._matrix is None:
            return float(np.sum(self.diagonal))
        return float(np.real(self.matrix.diagonal().sum()))

    def trace_of_square(self) -> float:
        if self.is_product_diagonal and self._matrix is None:
            return float(np.sum(self.diagonal**2))
        m = self.matrix
        return float(np.real(np.sum(np.abs(m.data) ** 2)))

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def _rotate(amp: np.ndarray, u: np.ndarray, n: int, d: int) -> np.ndarray:
    """Apply the same single-site matrix ``u`` on every site."""
    if np.allclose(u, np.eye(d)):
        return amp
    psi = np.asarray(amp).reshape((d,) * n)
    for k in range(n):
        psi = np.tensordot(u, psi, axes=([1], [k]))
        psi = np.moveaxis(psi, 0, k)
    return psi.reshape(-1)


def _build_sparse(terms: Sequence[Term], n: int, d: int, sector: Optional[int]) -> sp.csr_matrix:
    states = np.arange(d**n, dtype=np.int64) if sector is None else sector_basis(n, sector)
    dim = states.size
    digits = _digits(states, n, d)
    place = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
    diag = np.zeros(dim, dtype=complex)
    rows, cols, vals = [], [], []
    for term in terms:
        for coeff, factors in _products(term, d):
            if all(np.count_nonzero(m - np.diag(np.diag(m))) == 0 for _, m in factors):
                v = np.full(dim, coeff, dtype=complex)
                for site, m in factors:
                    v *= np.diag(m)[digits[:, site - 1]]
                diag += v
                continue
            # enumerate non-zero local transitions old -> new
            combos = [(coeff, np.ones(dim, dtype=bool), np.zeros(dim, dtype=np.int64))]
            for site, m in factors:
                nxt = []
                col = digits[:, site - 1]
                for new, old in zip(*np.nonzero(m)):
                    for amp, mask, shift in combos:
                        nxt.append((amp * m[new, old], mask & (col == old), shift + (new - old) * place[site - 1]))
                combos = nxt
            for amp, mask, shift in combos:
                src = np.nonzero(mask)[0]
                if src.size == 0:
                    continue
                tgt_full = states[src] + shift[src]
                if sector is None:
                    tgt = tgt_full
                else:
                    tgt = np.searchsorted(states, tgt_full)
                    ok = (tgt < dim) & (states[np.minimum(tgt, dim - 1)] == tgt_full)
                    if not np.all(ok):
                        raise ValueError("operator does not conserve the requested sector")
                rows.append(tgt)
                cols.append(src)
                vals.append(np.full(src.size, amp, dtype=complex))
    rows.append(np.arange(dim))
    cols.append(np.arange(dim))
    vals.append(diag)
    m = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    ).tocsr()
    m.sum_duplicates()
    m.eliminate_zeros()
    if np.iscomplexobj(m.data) and np.all(m.data.imag == 0):
        m = m.real.tocsr()
    return m


def realize(spec: HamiltonianSpec, sector: Optional[int] = None, cap: int = DEFAULT_CAP) -> OperatorMatrix:
    """Turn a spin model spec into an operator on its (sector) basis."""
    if spec.is_fermionic:
        raise ValueError(f"{spec.model_kind.value} is fermionic; use the Gaussian backend")
    if sector is not None:
        conserving = spec.model_kind in U1_SYMMETRIC and spec.couplings.get("g", 0.0) == 0.0
        if not conserving:
            raise ValueError(f"{spec.model_kind.value} does not conserve magnetization")
    return OperatorMatrix(spec.n_sites, spec.local_dim, terms=term_list(spec), sector=sector, cap=cap)


def site_operator(name: str, site: int, n_sites: int, local_dim: int = 2, sector=None) -> OperatorMatrix:
    """Single-site operator such as ``N`` (excitation density) or ``Z``."""
    loc = (HALF if local_dim == 2 else ONE)[name]
    states = np.arange(local_dim**n_sites) if sector is None else sector_basis(n_sites, sector)
    if np.count_nonzero(loc - np.diag(np.diag(loc))):
        full = sp.kron(
            sp.kron(sp.identity(local_dim ** (site - 1)), sp.csr_matrix(loc)),
            sp.identity(local_dim ** (n_sites - site)),
        ).tocsr()
        m = full[states][:, states] if sector is not None else full
    else:
        digits = _digits(states, n_sites, local_dim)
        m = sp.diags(np.diag(loc)[digits[:, site - 1]]).tocsr()
    return OperatorMatrix(n_sites, local_dim, matrix=m, sector=sector)


def occupation_diagonals(n_sites: int, sector: Optional[int] = None) -> np.ndarray:
    """(n_sites, dim) array of n_i = (1 + sigma^z_i)/2 on each basis state."""
    states = np.arange(2**n_sites) if sector is None else sector_basis(n_sites, sector)
    digits = _digits(states, n_sites, 2)
    return (1 - digits.T).astype(float)


# state operations --------------------------------------------------------------


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    mags = np.abs(vec)
    k = int(np.argmax(mags > mags.max() * (1 - 1e-9)))  # first (lexicographic) largest entry
    return vec * (abs(vec[k]) / vec[k])


def ground_state(H: OperatorMatrix) -> tuple[float, DenseState]:
    """Lowest eigenpair; the returned vector has its leading largest amplitude real-positive."""
    if H.dim <= DENSE_GS_CAP or H.dim < 3:
        if not H.is_hermitian():
            raise ValueError("operator is not Hermitian")
        w, v = H.eigensystem
        e, vec = float(w[0]), v[:, 0]
    elif H.is_product_diagonal:
        k = int(np.argmin(H.diagonal))
        e = float(H.diagonal[k])
        vec = np.zeros(H.dim)
        vec[k] = 1.0
        vec = _rotate(vec, H.local_basis, H.n_sites, H.local_dim)
    else:
        if not H.is_hermitian():
            raise ValueError("operator is not Hermitian")
        m = H.matrix
        v0 = np.linspace(1.0, 2.0, H.dim)
        w, v = spla.eigsh(m, k=1, which="SA", v0=v0, tol=1e-13, ncv=min(H.dim, 40))
        e, vec = float(w[0]), v[:, 0]
    vec = _fix_phase(np.asarray(vec, dtype=complex))
    return e, DenseState(vec, H.n_sites, H.local_dim, H.sector)


def _check_pair(state: DenseState, op: OperatorMatrix):
    if (state.n_sites, state.local_dim, state.sector) != (op.n_sites, op.local_dim, op.sector):
        raise BasisMismatchError("state and operator live on different bases")


def evolve(state: DenseState, H: OperatorMatrix, T: float) -> DenseState:
    """Return exp(-i H T) |state>.

    Product-diagonal generators rotate into their local eigenbasis. Otherwise a
    generator's first evolution uses a sparse Krylov exponential; once it is
    reused (or its spectrum is already cached) the dense spectral
    decomposition is computed and kept.
    """
    _check_pair(state, H)
    psi = state.amplitudes
    if T == 0:
        return state
    if H.is_product_diagonal:
        rot = _rotate(psi, H.local_basis.conj().T, H.n_sites, H.local_dim)
        rot = rot * np.exp(-1j * T * H.diagonal)
        out = _rotate(rot, H.local_basis, H.n_sites, H.local_dim)
    elif "eigensystem" in H.__dict__ or (H._evolutions > 0 and H.dim <= DENSE_EIG_CAP):
        w, v = H.eigensystem
        out = v @ (np.exp(-1j * T * w) * (v.conj().T @ psi))
    else:
        out = spla.expm_multiply(-1j * T * H.matrix, psi.astype(complex))
    H._evolutions += 1
    norm = np.linalg.norm(out)
    if abs(norm - 1.0) > 1e-10:
        raise FloatingPointError(f"evolution lost unitarity: norm {norm}")
    return DenseState(out, state.n_sites, state.local_dim, state.sector)


def expectation(state: DenseState, O: OperatorMatrix) -> float:
    _check_pair(state, O)
    psi = state.amplitudes
    val = np.vdot(psi, O.apply(psi))
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}; operator not Hermitian?")
    return float(val.real)


def variance(state: DenseState, O: OperatorMatrix) -> float:
    _check_pair(state, O)
    psi = state.amplitudes
    opsi = O.apply(psi)
    mean = np.vdot(psi, opsi).real
    return max(float(np.vdot(opsi, opsi).real - mean**2), 0.0)


def overlap(a: DenseState, b: DenseState) -> complex:
    if not a.same_basis(b):
        if a.n_sites == b.n_sites and a.local_dim == b.local_dim:
            a, b = a.to_full(), b.to_full()
        else:
            raise BasisMismatchError("states live on different bases")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def occupations(state: DenseState) -> np.ndarray:
    """<n_i> = <(1 + sigma^z_i)/2> for every site (spin-1/2 only)."""
    if state.local_dim != 2:
        raise ValueError("occupations are defined for spin-1/2 chains")
    probs = np.abs(state.amplitudes) ** 2
    return occupation_diagonals(state.n_sites, state.sector) @ probs


def local_ground_state(spec: HamiltonianSpec) -> DenseState:
    """Product of single-site ground states of the spec's on-site terms.

    Sites are minimized independently, so for uniform fields this is the
    fully polarized state (all up for -h sum sigma^z with h > 0).
    """
    d = spec.local_dim
    loc = HALF if d == 2 else ONE
    site_h = {i: np.zeros((d, d)) for i in range(1, spec.n_sites + 1)}
    for c, op, sites in term_list(spec):
        if len(sites) == 1 and op in ("Z", "X", "Sz", "Sx2"):
            name = {"Z": "Z", "X": "X", "Sz": "Sz", "Sx2": "Sx2"}[op]
            site_h[sites[0]] = site_h[sites[0]] + c * loc[name]
    vecs = []
    for i in range(1, spec.n_sites + 1):
        w, v = np.linalg.eigh(site_h[i])
        if w.size > 1 and abs(w[1] - w[0]) < 1e-12:
            vecs.append(0)  # degenerate: pick the first basis label
        else:
            vecs.append(_fix_phase(v[:, 0].astype(complex)))
    return product_state(vecs, d)


def sector_of(state: DenseState, tol: float = 1e-10) -> Optional[int]:
    """Number of up spins if the state has definite magnetization."""
    if state.sector is not None:
        return state.sector
    if state.local_dim != 2:
        return None
    probs = np.abs(state.amplitudes) ** 2
    ups = occupation_diagonals(state.n_sites).sum(axis=0)
    k = int(round(float(probs @ ups)))
    return k if probs[ups != k].sum() < tol else None


def model_basis(spec: HamiltonianSpec) -> tuple[int, int]:
    return spec.n_sites, spec.local_dim


def is_spin_model(spec: HamiltonianSpec) -> bool:
    return spec.model_kind not in (ModelKind.KITAEV_QUADRATIC, ModelKind.KITAEV_TARGET)
