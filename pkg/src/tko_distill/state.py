"""Canonical decomposition of entangled states shared through a TKO channel.

Sending half of |Phi+> through a canonical-form channel (p, |eta|) yields a
rank-2 state that local unitaries u_a, u_b bring to the two-term mixture

    F |mu><mu| + (1-F) |nu><nu|,
    |mu> = alpha|00> + beta|11>,   |nu> = gamma|01> + delta e^{i theta}|10>,

with all coefficients real non-negative and ordered
gamma <= beta <= 1/sqrt2 <= alpha <= delta.  `canonical_decompose` recovers
(F, alpha, beta, gamma, delta, theta, u_a, u_b) from the density matrix;
`params_analytic` evaluates the closed forms directly from (p, |eta|).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import KrausPair, apply_to_second_qubit
from .errors import EntanglementDestroyedError, NonDistillableError
from .linalg import (
    ATOL,
    ID2,
    PHI_PLUS,
    check_density_matrix,
    dagger,
    eig_hermitian,
    is_unitary,
    projector,
    schmidt,
)

# Below this Schmidt-coefficient gap the top eigenvector counts as maximally
# entangled and the dedicated degenerate construction is used.  The switch
# point balances the two error modes: the generic path loses ~eps/gap through
# singular-vector conditioning while the degenerate path loses ~gap.
_DEGENERATE_GAP = 1e-8


@dataclass(frozen=True)
class CanonicalStateParams:
    """Canonical two-term mixture parameters plus the local unitaries."""

    fidelity: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    theta: float
    u_a: np.ndarray = field(default_factory=lambda: ID2.copy())
    u_b: np.ndarray = field(default_factory=lambda: ID2.copy())

    def __post_init__(self):
        for name in ("fidelity", "alpha", "beta", "gamma", "delta", "theta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "theta", float(self.theta % (2.0 * np.pi)))
        object.__setattr__(self, "u_a", np.asarray(self.u_a, dtype=complex))
        object.__setattr__(self, "u_b", np.asarray(self.u_b, dtype=complex))
        if not 0.5 < self.fidelity <= 1.0 + ATOL:
            raise ValueError(f"fidelity weight {self.fidelity} outside (1/2, 1]")
        if abs(self.alpha**2 + self.beta**2 - 1.0) > ATOL:
            raise ValueError("alpha^2 + beta^2 must equal 1")
        if abs(self.gamma**2 + self.delta**2 - 1.0) > ATOL:
            raise ValueError("gamma^2 + delta^2 must equal 1")
        half = np.sqrt(0.5)
        chain = (
            -ATOL <= self.gamma <= self.beta + ATOL <= half + 2 * ATOL
            and half - ATOL <= self.alpha <= self.delta + ATOL <= 1.0 + 2 * ATOL
        )
        if not chain:
            raise ValueError(
                "Schmidt weights must satisfy gamma <= beta <= 1/sqrt2 <= alpha <= delta"
            )
        if not is_unitary(self.u_a) or not is_unitary(self.u_b):
            raise ValueError("u_a and u_b must be unitary within tolerance")

    def mu(self) -> np.ndarray:
        return np.array([self.alpha, 0.0, 0.0, self.beta], dtype=complex)

    def nu(self) -> np.ndarray:
        return np.array(
            [0.0, self.gamma, self.delta * np.exp(1j * self.theta), 0.0], dtype=complex
        )

    def density(self) -> np.ndarray:
        """The canonical mixture F |mu><mu| + (1-F) |nu><nu|."""
        return self.fidelity * projector(self.mu()) + (1.0 - self.fidelity) * projector(self.nu())


def shared_state(kp: KrausPair) -> np.ndarray:
    """State shared by the agents: |Phi+> with its second half sent through kp."""
    return apply_to_second_qubit(projector(PHI_PLUS), kp)


def params_analytic(p: float, abs_eta: float) -> tuple[float, float, float, float, float]:
    """Closed-form (F, alpha, beta, gamma, delta) for a canonical channel.

    p = 0 returns the noiseless convention F = 1, all weights 1/sqrt2.
    """
    p = float(p)
    abs_eta = float(abs_eta)
    if p >= 1.0:
        raise EntanglementDestroyedError(f"p={p} leaves no entanglement to distill")
    if p < 0.0:
        raise ValueError("noise severity p must be non-negative")
    if not 0.0 <= abs_eta <= 1.0 + ATOL:
        raise ValueError("|eta| must lie in [0, 1]")
    root = np.sqrt((1.0 - p) * (1.0 - abs_eta**2 * p))
    f = 0.5 + 0.5 * root
    half = np.sqrt(0.5)
    if f >= 1.0 - 1e-15:
        return 1.0, half, half, half, half
    alpha = np.sqrt(0.5 + abs_eta * p / (4.0 * f))
    beta = np.sqrt(max(0.5 - abs_eta * p / (4.0 * f), 0.0))
    # gamma^2 = 1/2 - |eta| p / (4(1-f)) vanishes identically at |eta| = 1, but
    # the direct difference of two half-sized terms leaves rounding residue
    # that the square root amplifies to ~1e-8.  Using
    #     (1-p)(1-|eta|^2 p) = s^2 - c,   s = 1 - |eta| p,  c = p (1-|eta|)^2,
    # the difference rewrites cancellation-free as c / ((s + root) 4(1-f)).
    c = p * (1.0 - abs_eta) ** 2
    s = 1.0 - abs_eta * p
    gamma2 = min(max(c / ((s + root) * 4.0 * (1.0 - f)), 0.0), 0.5)
    gamma = np.sqrt(gamma2)
    delta = np.sqrt(1.0 - gamma2)
    return float(f), float(alpha), float(beta), float(gamma), float(delta)


def _rotation_from_schmidt(basis: np.ndarray) -> np.ndarray:
    """Unitary mapping the Schmidt vectors (columns) onto |0>, |1>."""
    return np.vstack([basis[:, 0].conj(), basis[:, 1].conj()])


def _polar_unitary(m: np.ndarray) -> np.ndarray:
    """Closest unitary to m (polar decomposition)."""
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def _bloch_spinor(axis: np.ndarray) -> np.ndarray:
    """Unit spinor whose Bloch vector is the given real unit axis."""
    theta = np.arccos(np.clip(axis[2], -1.0, 1.0))
    az = np.arctan2(axis[1], axis[0])
    return np.array([np.cos(theta / 2.0), np.sin(theta / 2.0) * np.exp(1j * az)])


def _degenerate_rotations(psi: np.ndarray, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Local rotations for a maximally entangled top eigenvector.

    When psi is maximally entangled its Schmidt basis is not unique, and an
    arbitrary choice will not steer the second eigenvector phi into
    span{|01>, |10>}.  Writing W = sqrt2 * mat(psi) (unitary up to the
    degeneracy gap), orthogonality of psi and phi makes
    G = sqrt2 * mat(phi) W^dag traceless; with u_b = conj(u_a W) the rotated
    phi has matrix u_a G u_a^dag / sqrt2, so phi lands in span{|01>, |10>}
    exactly when that conjugation zeroes G's diagonal.

    Writing G = g . sigma (complex Pauli vector g), the diagonal of the
    conjugated G is the projection of g onto the rotated z-axis, so u_a must
    map some real axis perpendicular to both Re g and Im g onto z.  When G is
    unitary (phi maximally entangled too, the eta = 0 family) that plane is a
    full great circle and the eigenbasis-onto-|+/-> choice is used instead,
    which reduces to the Hadamard pair on the plain phase-damping state.
    """
    w = np.sqrt(2.0) * psi.reshape(2, 2)
    g = np.sqrt(2.0) * phi.reshape(2, 2) @ dagger(w)

    if np.linalg.norm(dagger(g) @ g - ID2) < 1e-8:
        # Unitary G = lambda (n . sigma): rotate its eigenbasis onto |+>, |->.
        evals, evecs = np.linalg.eig(g)
        order = np.lexsort((-evals.imag, -evals.real))
        g_plus = evecs[:, order[0]] / np.linalg.norm(evecs[:, order[0]])
        g_minus = evecs[:, order[1]]
        g_minus = g_minus - (g_plus.conj() @ g_minus) * g_plus
        g_minus = g_minus / np.linalg.norm(g_minus)
        plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
        minus = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)
        u_a = np.outer(plus, g_plus.conj()) + np.outer(minus, g_minus.conj())
    else:
        gvec = np.array(
            [(g[0, 1] + g[1, 0]) / 2.0, (g[1, 0] - g[0, 1]) / 2.0j, g[0, 0]]
        )
        re, im = gvec.real, gvec.imag
        axis = np.cross(re, im)
        norm = np.linalg.norm(axis)
        if norm > 1e-8 * max(np.linalg.norm(re) * np.linalg.norm(im), 1e-300):
            axis = axis / norm
        else:
            # Re g and Im g (numerically) share a line; any perpendicular works.
            n = re if np.linalg.norm(re) >= np.linalg.norm(im) else im
            n = n / np.linalg.norm(n)
            helper = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
            axis = np.cross(n, helper)
            axis = axis / np.linalg.norm(axis)
        v = _bloch_spinor(axis)
        u_a = np.array([[v[0].conj(), v[1].conj()], [-v[1], v[0]]])

    u_b = _polar_unitary((u_a @ w).conj())
    # Orientation: keep the smaller nu component on |01> (gamma <= delta);
    # X (x) X swaps both while fixing |Phi+>.
    nu = np.kron(u_a, u_b) @ phi
    if abs(nu[1]) > abs(nu[2]):
        x = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
        u_a = x @ u_a
        u_b = x @ u_b
    # Row-phase gauge: largest entry of each u_a row real positive, with
    # compensating phases on u_b so mu keeps real non-negative coefficients.
    # Pins the Hadamard pair on the plain phase-damping state.
    d = np.ones(2, dtype=complex)
    for k in (0, 1):
        entry = u_a[k, int(np.argmax(np.abs(u_a[k])))]
        if abs(entry) > 0.0:
            d[k] = (entry / abs(entry)).conj()
    u_a = d[:, None] * u_a
    u_b = d.conj()[:, None] * u_b
    return u_a, u_b


def canonical_decompose(rho: np.ndarray, tol: float = ATOL) -> CanonicalStateParams:
    """Recover the canonical mixture parameters of a TKO-channel state.

    The construction follows the rank-2 spectral decomposition: the top
    eigenvector is Schmidt-rotated onto alpha|00> + beta|11>, which is
    guaranteed (for genuine TKO states) to carry the second eigenvector into
    span{|01>, |10>}, where gamma, delta and theta are read off.  Maximally
    entangled top eigenvectors take a dedicated branch (see
    _degenerate_rotations), as does the pure noiseless case.

    Raises ValueError for states of rank > 2 or states that are not locally
    equivalent to the canonical form, and NonDistillableError when the top
    eigenvalue is at or below 1/2.
    """
    rho = np.asarray(rho, dtype=complex)
    check_density_matrix(rho, n_qubits=2, atol=max(tol, ATOL))
    evals, evecs = eig_hermitian((rho + dagger(rho)) / 2.0)
    if evals[2] > tol:
        raise ValueError(
            f"state has rank > 2 (third eigenvalue {evals[2]:.3e}); not a TKO-channel state"
        )
    f = float(evals[0])
    if f <= 0.5 + tol:
        raise NonDistillableError(
            f"fidelity weight {f:.6f} is at or below 1/2; state cannot be distilled"
        )
    psi = evecs[:, 0]
    sch = schmidt(psi)
    alpha, beta = float(sch.coeffs[0]), float(sch.coeffs[1])
    if beta > alpha:
        # The svd tie-break may reorder coefficients equal up to rounding.
        alpha, beta = beta, alpha

    if f >= 1.0 - tol:
        # Pure maximally entangled state; nu carries no weight, fix it by convention.
        u_a = _rotation_from_schmidt(sch.basis_a)
        u_b = _rotation_from_schmidt(sch.basis_b)
        half = np.sqrt(0.5)
        params = CanonicalStateParams(1.0, alpha, beta, half, half, 0.0, u_a, u_b)
        _require_reconstruction(params, rho)
        return params

    phi = evecs[:, 1]
    if alpha - beta < _DEGENERATE_GAP:
        u_a, u_b = _degenerate_rotations(psi, phi)
    else:
        u_a = _rotation_from_schmidt(sch.basis_a)
        u_b = _rotation_from_schmidt(sch.basis_b)

    nu_raw = np.kron(u_a, u_b) @ phi
    gamma_amp, delta_amp = nu_raw[1], nu_raw[2]
    scale = float(np.hypot(abs(gamma_amp), abs(delta_amp)))
    if scale < 1e-12:
        raise ValueError("second eigenvector vanishes on span{|01>,|10>}")
    gamma = abs(gamma_amp) / scale
    delta = abs(delta_amp) / scale
    if gamma > 1e-9:
        theta = float(np.angle(delta_amp / gamma_amp))
    else:
        gamma = 0.0
        delta = 1.0
        theta = 0.0
    params = CanonicalStateParams(f, alpha, beta, gamma, delta, theta, u_a, u_b)
    _require_reconstruction(params, rho)
    return params


def _require_reconstruction(params: CanonicalStateParams, rho: np.ndarray) -> None:
    # 10x headroom over the worst-case construction error at the branch switch.
    dev = verify_canonical(params, rho)
    if dev > 1e-7:
        raise ValueError(
            f"state is not locally equivalent to a canonical TKO form (deviation {dev:.3e})"
        )


def verify_canonical(params: CanonicalStateParams, rho: np.ndarray) -> float:
    """Frobenius distance between the rotated state and its reconstruction."""
    rot = np.kron(params.u_a, params.u_b)
    return float(np.linalg.norm(rot @ np.asarray(rho, dtype=complex) @ dagger(rot) - params.density()))


def steering_source_fidelity(target: CanonicalStateParams) -> float:
    """Fidelity weight of the symmetric source state used for steering."""
    f0 = target.fidelity
    ratio = target.gamma * target.delta / (target.alpha * target.beta)
    return f0 / (f0 + (1.0 - f0) * ratio)


def steering_operators(
    target: CanonicalStateParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Local measurement pairs steering a symmetric state to the target form.

    Returns (m_a, m_a_bar, m_b, m_b_bar).  Applied to the two-term mixture
    with equal Schmidt weights (the phase-damping form) at the fidelity given
    by steering_source_fidelity, the kept branch m_a (x) m_b reproduces the
    target-parameter state after normalization.  Each pair is a valid
    measurement: m^dag m + m_bar^dag m_bar = I.
    """
    a, b, g, d = target.alpha, target.beta, target.gamma, target.delta
    if g <= 1e-12:
        raise ValueError("steering requires gamma > 0")
    ra = a * g / (b * d)
    rb = b * g / (a * d)
    ph = np.exp(0.5j * target.theta)
    m_a = np.diag([np.sqrt(ra), ph]).astype(complex)
    m_a_bar = np.diag([np.sqrt(max(1.0 - ra, 0.0)), 0.0]).astype(complex)
    m_b = np.diag([ph, np.sqrt(rb)]).astype(complex)
    m_b_bar = np.diag([0.0, np.sqrt(max(1.0 - rb, 0.0))]).astype(complex)
    return m_a, m_a_bar, m_b, m_b_bar
