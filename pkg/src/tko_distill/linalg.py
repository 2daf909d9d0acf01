"""Dense complex linear algebra helpers for few-qubit density matrices.

Everything here is a pure function on small (2x2 .. 16x16) numpy arrays.
Decompositions wrap LAPACK but pin the ordering and phase gauge so that
repeated runs produce identical matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Tolerances: structural checks (hermiticity, orthonormality, normalization)
# versus reconstruction identities, which sit at machine precision.
ATOL = 1e-9
RECON_ATOL = 1e-12

ID2 = np.eye(2, dtype=complex)
HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
# Bell vectors in the |ab> = 2a+b basis ordering.
PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / np.sqrt(2.0)
PSI_PLUS = np.array([0.0, 1.0, 1.0, 0.0], dtype=complex) / np.sqrt(2.0)


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with complex dtype."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def projector(ket: np.ndarray) -> np.ndarray:
    """Rank-1 projector |ket><ket|."""
    ket = np.asarray(ket, dtype=complex).reshape(-1)
    return np.outer(ket, ket.conj())


def pure_fidelity(rho: np.ndarray, ket: np.ndarray) -> float:
    """Overlap <ket|rho|ket> as a real number."""
    ket = np.asarray(ket, dtype=complex).reshape(-1)
    return float(np.real(ket.conj() @ rho @ ket))


def is_hermitian(m: np.ndarray, atol: float = ATOL) -> bool:
    return bool(np.max(np.abs(m - dagger(m))) <= atol)


def is_unitary(m: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(m, dtype=complex)
    return bool(np.max(np.abs(dagger(m) @ m - np.eye(m.shape[1]))) <= atol)


def check_density_matrix(rho: np.ndarray, n_qubits: int = 2, atol: float = ATOL) -> None:
    """Raise ValueError unless rho is a trace-1 PSD matrix on n_qubits."""
    rho = np.asarray(rho, dtype=complex)
    dim = 2**n_qubits
    if rho.shape != (dim, dim):
        raise ValueError(f"density matrix must be {dim}x{dim}, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValueError("density matrix has non-finite entries")
    if not is_hermitian(rho, atol):
        raise ValueError("density matrix is not Hermitian within tolerance")
    if abs(np.trace(rho).real - 1.0) > atol or abs(np.trace(rho).imag) > atol:
        raise ValueError("density matrix trace differs from 1")
    evals = np.linalg.eigvalsh((rho + dagger(rho)) / 2.0)
    if evals[0] < -atol:
        raise ValueError(f"density matrix has negative eigenvalue {evals[0]:.3e}")


def partial_trace(rho: np.ndarray, n_qubits: int, traced) -> np.ndarray:
    """Trace out the given qubits of an n-qubit density matrix.

    Qubit positions in `traced` are 1-based (position 1 is the leftmost
    tensor factor), matching the usual tr_{2,4}-style subscripts.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = 2**n_qubits
    if rho.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix for {n_qubits} qubits, got {rho.shape}")
    positions = sorted(set(int(q) for q in traced))
    if positions and (positions[0] < 1 or positions[-1] > n_qubits):
        raise ValueError(f"traced positions {positions} outside 1..{n_qubits}")
    t = rho.reshape((2,) * (2 * n_qubits))
    remaining = n_qubits
    for q in reversed(positions):
        t = np.trace(t, axis1=q - 1, axis2=q - 1 + remaining)
        remaining -= 1
    return t.reshape((2**remaining, 2**remaining))


def _fix_phase(vec: np.ndarray) -> tuple[np.ndarray, complex]:
    """Rotate vec so its largest-magnitude entry is real positive."""
    idx = int(np.argmax(np.abs(vec)))
    a = vec[idx]
    if abs(a) < 1e-15:
        return vec, 1.0 + 0.0j
    phase = a / abs(a)
    return vec / phase, phase


def _lex_key(vec: np.ndarray):
    return tuple(np.round(vec.real, 10)) + tuple(np.round(vec.imag, 10))


def _order_degenerate(vals: np.ndarray, *mats: np.ndarray) -> None:
    """Reorder columns inside (numerically) tied value groups, in place.

    Ties are resolved by descending lexicographic order on the gauge-fixed
    leading column of mats[0], which keeps e.g. the identity decomposition
    in natural basis order.
    """
    scale = max(1.0, float(np.max(np.abs(vals)))) if vals.size else 1.0
    i = 0
    while i < vals.size:
        j = i + 1
        while j < vals.size and abs(vals[j] - vals[i]) <= 1e-13 * scale:
            j += 1
        if j - i > 1:
            cols = sorted(range(i, j), key=lambda c: _lex_key(mats[0][:, c]), reverse=True)
            vals[i:j] = vals[cols]
            for m in mats:
                m[:, i:j] = m[:, cols]
        i = j


def svd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD m = U diag(s) V^dag with s descending and a deterministic gauge."""
    m = np.asarray(m, dtype=complex)
    u, s, vh = np.linalg.svd(m)
    u = u.copy()
    v = vh.conj().T.copy()
    for i in range(s.size):
        u[:, i], phase = _fix_phase(u[:, i])
        v[:, i] = v[:, i] / phase
    _order_degenerate(s, u, v)
    return u, s, v


def eig_hermitian(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("matrix is not Hermitian within tolerance")
    w, vecs = np.linalg.eigh((h + dagger(h)) / 2.0)
    w = np.ascontiguousarray(w[::-1])
    vecs = np.ascontiguousarray(vecs[:, ::-1])
    for i in range(w.size):
        vecs[:, i], _ = _fix_phase(vecs[:, i])
    _order_degenerate(w, vecs)
    return w, vecs


@dataclass(frozen=True)
class SchmidtForm:
    """Schmidt decomposition of a two-qubit pure state.

    coeffs are real non-negative and descending; basis_a / basis_b hold the
    local Schmidt vectors as columns, so the state is
    sum_i coeffs[i] * basis_a[:, i] (x) basis_b[:, i].
    """

    coeffs: np.ndarray
    basis_a: np.ndarray
    basis_b: np.ndarray

    def vector(self) -> np.ndarray:
        out = np.zeros(4, dtype=complex)
        for i in range(self.coeffs.size):
            out += self.coeffs[i] * np.kron(self.basis_a[:, i], self.basis_b[:, i])
        return out


def schmidt(state: np.ndarray, tol: float = ATOL) -> SchmidtForm:
    """Schmidt form of a normalized two-qubit pure state via 2x2 SVD."""
    state = np.asarray(state, dtype=complex).reshape(-1)
    if state.shape != (4,):
        raise ValueError("expected a 4-component state vector")
    if abs(np.linalg.norm(state) - 1.0) > tol:
        raise ValueError("state vector is not normalized within tolerance")
    u, s, v = svd(state.reshape(2, 2))
    return SchmidtForm(coeffs=s, basis_a=u, basis_b=v.conj())
