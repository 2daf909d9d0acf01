"""Recurrence distillation protocols: closed-form recurrences and an exact engine.

Two independent execution paths are provided on purpose.  The analytic path
iterates the closed-form fidelity/probability recurrences; the exact path
builds the 16x16 joint density matrix of two pairs, applies the bilateral
CNOT, projects the target qubits, and post-selects.  Tests hold the two
paths against each other at every round.

Qubit ordering for the joint state is (A1, A2, B1, B2): Alice holds the
first two qubits, Bob the last two; the first qubit of each side is the
source (kept) pair and the second the target (measured) pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import product

import numpy as np

from .channel import CanonicalChannelParams, kraus_from_params
from .errors import DegenerateProtocolError, EntanglementDestroyedError, NonDistillableError
from .linalg import HADAMARD, ID2, PHI_PLUS, dagger, pure_fidelity
from .state import CanonicalStateParams, canonical_decompose, shared_state

CNOT = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 0, 1],
        [0, 0, 1, 0],
    ],
    dtype=complex,
)

# CNOT on Alice's (source, target) qubits and on Bob's, in one 16x16 operator.
BILATERAL_CNOT = np.kron(CNOT, CNOT)


def _pair_interleave() -> np.ndarray:
    """Permutation taking |a1 b1 a2 b2> (two stacked pairs) to |a1 a2 b1 b2>."""
    perm = np.zeros((16, 16))
    for a1, b1, a2, b2 in product((0, 1), repeat=4):
        src = 8 * a1 + 4 * b1 + 2 * a2 + b2
        dst = 8 * a1 + 4 * a2 + 2 * b1 + b2
        perm[dst, src] = 1.0
    return perm


PAIR_INTERLEAVE = _pair_interleave()

# Target-qubit measurement: 4x16 maps |a1 a2 b1 b2> -> delta(a2=j) delta(b2=k) |a1 b1>.
_BRANCH_PROJ = {
    (j, k): np.kron(
        np.kron(ID2, np.eye(1, 2, j, dtype=complex)),
        np.kron(ID2, np.eye(1, 2, k, dtype=complex)),
    )
    for j, k in product((0, 1), repeat=2)
}


class Policy(Enum):
    """Distillation policy selecting the first-round branch handling."""

    FP = "fp"
    PP = "pp"
    QPA = "qpa"
    BBPSSW = "bbpssw"


@dataclass(frozen=True)
class RoundRecord:
    """One row of a distillation trace.

    Index 0 is the preparation stage (filter measurement for FP/PP, plain
    prepared state for QPA/BBPSSW); indices >= 1 are two-pairs-in-one-out
    rounds whose keep_prob already includes the 1/2 pair-consumption factor.
    """

    round_index: int
    fidelity: float
    keep_prob: float
    cumulative_yield: float

    def __post_init__(self):
        object.__setattr__(self, "round_index", int(self.round_index))
        object.__setattr__(self, "fidelity", float(self.fidelity))
        object.__setattr__(self, "keep_prob", float(self.keep_prob))
        object.__setattr__(self, "cumulative_yield", float(self.cumulative_yield))


@dataclass(frozen=True)
class DistillationTrace:
    policy: Policy
    threshold: float
    reached: bool
    records: tuple[RoundRecord, ...]
    engine: str

    def __post_init__(self):
        object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "reached", bool(self.reached))

    @property
    def rounds(self) -> int:
        return self.records[-1].round_index

    @property
    def final_fidelity(self) -> float:
        return self.records[-1].fidelity

    def fidelities(self) -> list[float]:
        return [r.fidelity for r in self.records]


# ---------------------------------------------------------------------------
# Preparation stage


def rssp_ops(alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Bob's filter measurement equalizing the Schmidt weights of |mu>.

    Parameters
    ----------
    alpha, beta : float
        Schmidt weights of the dominant eigenvector, beta <= alpha.

    Returns
    -------
    (m_b, m_b_bar) : kept-branch and discard-branch operators, forming a
        complete measurement m_b^dag m_b + m_b_bar^dag m_b_bar = I.
    """
    if not 0.0 < beta <= alpha + 1e-12:
        raise ValueError("rssp requires 0 < beta <= alpha")
    kappa = min(beta / alpha, 1.0)
    m_b = np.diag([kappa, 1.0]).astype(complex)
    m_b_bar = np.diag([np.sqrt(max(1.0 - kappa**2, 0.0)), 0.0]).astype(complex)
    return m_b, m_b_bar


def rssp_apply(rho_canonical: np.ndarray, params: CanonicalStateParams) -> tuple[float, np.ndarray]:
    """Apply Bob's filter to a canonical-form state by literal operator action.

    Returns the keep probability and the normalized post-measurement state,
    whose dominant component is exactly |Phi+>.
    """
    m_b, _ = rssp_ops(params.alpha, params.beta)
    op = np.kron(ID2, m_b)
    kept = op @ np.asarray(rho_canonical, dtype=complex) @ dagger(op)
    p_s = float(np.real(np.trace(kept)))
    if p_s <= 1e-15:
        raise DegenerateProtocolError("filter keep probability vanished")
    return p_s, kept / p_s


def rssp_analytic(
    f0: float, alpha: float, beta: float, gamma: float, delta: float
) -> tuple[float, float, float, float]:
    """Closed forms for the filter stage: (P_s, F~, gamma~, delta~)."""
    p_s = 2.0 * f0 * beta**2 + (1.0 - f0) * (gamma**2 + (beta * delta / alpha) ** 2)
    odd = alpha**2 * gamma**2 + beta**2 * delta**2
    denom = 2.0 * f0 * alpha**2 * beta**2 + (1.0 - f0) * odd
    f_t = 2.0 * f0 * alpha**2 * beta**2 / denom
    root = np.sqrt(odd)
    return p_s, f_t, alpha * gamma / root, beta * delta / root


# ---------------------------------------------------------------------------
# Exact two-pair round


def joint_state(pair_state: np.ndarray) -> np.ndarray:
    """Two copies of a pair state in (A1, A2, B1, B2) qubit order."""
    doubled = np.kron(pair_state, pair_state)
    return PAIR_INTERLEAVE @ doubled @ PAIR_INTERLEAVE.T


def round_branches(pair_state: np.ndarray) -> dict[tuple[int, int], tuple[float, np.ndarray | None]]:
    """All four measurement branches of one bilateral-CNOT round.

    Returns {(j, k): (branch probability, normalized kept-pair state)} where
    j, k are the target-qubit outcomes on Alice's and Bob's side; the state
    is None for branches with vanishing probability.  Probabilities sum to 1.
    """
    rho_j = joint_state(np.asarray(pair_state, dtype=complex))
    rho_j = BILATERAL_CNOT @ rho_j @ dagger(BILATERAL_CNOT)
    out = {}
    for key, proj in _BRANCH_PROJ.items():
        block = proj @ rho_j @ dagger(proj)
        prob = float(np.real(np.trace(block)))
        out[key] = (prob, block / prob if prob > 1e-15 else None)
    return out


def round_exact(pair_state: np.ndarray, policy: Policy) -> tuple[float, np.ndarray]:
    """One exact distillation round consuming two copies of pair_state.

    FP keeps only the (1,1) branch; PP and QPA keep the two agreeing
    branches, mixed by their probabilities.  Returns the keep probability
    per input pair (branch probability / 2) and the normalized post state.
    """
    if policy not in (Policy.FP, Policy.PP, Policy.QPA):
        raise ValueError(f"no operator-level round for policy {policy}")
    branches = round_branches(pair_state)
    keys = [(1, 1)] if policy is Policy.FP else [(0, 0), (1, 1)]
    prob = sum(branches[k][0] for k in keys)
    if prob <= 1e-15:
        raise DegenerateProtocolError("kept measurement branches have no population")
    mixed = sum(branches[k][0] * branches[k][1] for k in keys if branches[k][1] is not None)
    return prob / 2.0, mixed / prob


# ---------------------------------------------------------------------------
# Closed-form recurrences


def recurrence_step(f: float) -> tuple[float, float]:
    """Agreeing-branch recursion for rounds >= 2: (next fidelity, keep prob)."""
    denom = f * f + (1.0 - f) * (1.0 - f)
    return f * f / denom, denom / 2.0


def first_round_rates(
    f_t: float, gamma_t: float, delta_t: float, policy: Policy
) -> tuple[float, float]:
    """Branch probability and fidelity of round 1 after the filter stage.

    The returned probability is the branch probability (no 1/2 factor);
    divide by two for the per-input-pair keep probability.
    """
    if policy is Policy.FP:
        p_branch = 0.5 * f_t**2 + 2.0 * (1.0 - f_t) ** 2 * (gamma_t * delta_t) ** 2
        return p_branch, 0.5 * f_t**2 / p_branch
    if policy is Policy.PP:
        p_branch = f_t**2 + (1.0 - f_t) ** 2
        return p_branch, f_t**2 / p_branch
    raise ValueError(f"no closed-form first round for policy {policy}")


def first_round_closed_form(
    f0: float, alpha: float, beta: float, gamma: float, delta: float, policy: Policy
) -> tuple[float, float]:
    """Direct closed forms (P1, F1) in the raw state parameters.

    P1 composes the filter keep probability with the round-1 branch; it is
    algebraically identical to rssp_analytic + first_round_rates, and tests
    hold both routes against the exact engine.
    """
    odd = alpha**2 * gamma**2 + beta**2 * delta**2
    if policy is Policy.FP:
        p1 = (f0**2 * alpha**2 * beta**4 + (1.0 - f0) ** 2 * beta**2 * gamma**2 * delta**2) / (
            2.0 * f0 * alpha**2 * beta**2 + (1.0 - f0) * odd
        )
        f1 = f0**2 / (f0**2 + (1.0 - f0) ** 2 * (gamma * delta / (alpha * beta)) ** 2)
        return p1, f1
    if policy is Policy.PP:
        p1 = (4.0 * f0**2 * alpha**4 * beta**4 + (1.0 - f0) ** 2 * odd**2) / (
            4.0 * f0 * alpha**4 * beta**2 + 2.0 * (1.0 - f0) * alpha**2 * odd
        )
        f1 = f0**2 / (f0**2 + 0.25 * (1.0 - f0) ** 2 * (gamma**2 / beta**2 + delta**2 / alpha**2) ** 2)
        return p1, f1
    raise ValueError(f"no closed-form first round for policy {policy}")


def bbpssw_step(f: float) -> tuple[float, float]:
    """Werner-state recursion: next fidelity and two-pair success probability."""
    if f <= 0.5:
        raise NonDistillableError(f"Werner fidelity {f} at or below 1/2 cannot be distilled")
    p_succ = f * f + (2.0 / 3.0) * f * (1.0 - f) + (5.0 / 9.0) * (1.0 - f) ** 2
    f_next = (f * f + (1.0 - f) ** 2 / 9.0) / p_succ
    return f_next, p_succ


def bbpssw_initial_fidelity(f: float, alpha: float, beta: float) -> float:
    """Overlap of the canonical mixture with |Phi+> (the Werner fidelity used)."""
    return f * (alpha + beta) ** 2 / 2.0


def recurrence_analytic(
    f0: float,
    alpha: float,
    beta: float,
    gamma: float,
    delta: float,
    policy: Policy,
    f_th: float = 0.99,
    max_rounds: int = 64,
) -> DistillationTrace:
    """Analytic FP/PP trace: filter stage, closed-form round 1, then recursion."""
    policy = Policy(policy)
    if policy not in (Policy.FP, Policy.PP):
        raise ValueError("analytic recurrences exist only for FP and PP")
    if f0 <= 0.5:
        raise NonDistillableError(f"fidelity weight {f0} at or below 1/2 cannot be distilled")
    p_s, f_t, g_t, d_t = rssp_analytic(f0, alpha, beta, gamma, delta)
    records = [RoundRecord(0, f_t, p_s, p_s)]
    f = f_t
    cumulative = p_s
    k = 0
    while f < f_th and k < max_rounds:
        k += 1
        if k == 1:
            p_branch, f = first_round_rates(f_t, g_t, d_t, policy)
            keep = p_branch / 2.0
        else:
            f, keep = recurrence_step(f)
        cumulative *= keep
        records.append(RoundRecord(k, f, keep, cumulative))
    return DistillationTrace(policy, f_th, f >= f_th, tuple(records), engine="analytic")


def bbpssw_trace(f_init: float, f_th: float = 0.99, max_rounds: int = 64) -> DistillationTrace:
    """BBPSSW trace from an initial Werner fidelity."""
    if f_init <= 0.5:
        raise NonDistillableError(
            f"Werner fidelity {f_init:.6f} at or below 1/2 cannot be distilled"
        )
    records = [RoundRecord(0, f_init, 1.0, 1.0)]
    f = f_init
    cumulative = 1.0
    k = 0
    while f < f_th and k < max_rounds:
        k += 1
        f, p_succ = bbpssw_step(f)
        cumulative *= p_succ / 2.0
        records.append(RoundRecord(k, f, p_succ / 2.0, cumulative))
    return DistillationTrace(Policy.BBPSSW, f_th, f >= f_th, tuple(records), engine="analytic")


# ---------------------------------------------------------------------------
# Full pipeline


def _exact_trace(
    state: np.ndarray,
    policy: Policy,
    f_th: float,
    max_rounds: int,
    first_keep: float,
    plateau_detect: bool,
) -> DistillationTrace:
    f = pure_fidelity(state, PHI_PLUS)
    records = [RoundRecord(0, f, first_keep, first_keep)]
    cumulative = first_keep
    k = 0
    stalled = False
    while f < f_th and k < max_rounds and not stalled:
        k += 1
        round_policy = policy if k == 1 else Policy.PP
        keep, state = round_exact(state, round_policy)
        f_new = pure_fidelity(state, PHI_PLUS)
        cumulative *= keep
        records.append(RoundRecord(k, f_new, keep, cumulative))
        if plateau_detect and f_new < f_th and abs(f_new - f) < 1e-12:
            # Fixed point below threshold; further rounds cannot change anything.
            stalled = True
        f = f_new
    return DistillationTrace(policy, f_th, f >= f_th, tuple(records), engine="exact")


def run(
    channel: CanonicalChannelParams,
    policy: Policy | str,
    f_th: float = 0.99,
    max_rounds: int = 64,
    engine: str | None = None,
) -> DistillationTrace:
    """Run a full distillation pipeline for a canonical channel.

    Parameters
    ----------
    channel : CanonicalChannelParams
        Channel whose shared state is to be distilled; requires p < 1.
    policy : Policy or str
        One of fp, pp, qpa, bbpssw.
    f_th : float
        Target fidelity threshold in (1/2, 1].
    max_rounds : int
        Round budget; hitting it marks the trace as not reached.
    engine : {"analytic", "exact", None}
        FP/PP honor both engines (None defaults to analytic).  QPA always
        runs the exact engine (no closed-form recurrence preserves its
        state structure) and BBPSSW always runs its scalar recursion.
    """
    policy = Policy(policy)
    if not 0.5 < f_th <= 1.0:
        raise ValueError("threshold fidelity must lie in (1/2, 1]")
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    if channel.p >= 1.0:
        raise EntanglementDestroyedError("p >= 1 leaves no entanglement to distill")
    if engine not in (None, "analytic", "exact"):
        raise ValueError(f"unknown engine {engine!r}")

    rho = shared_state(kraus_from_params(channel))

    if policy is Policy.QPA:
        if engine == "analytic":
            raise ValueError("QPA has no analytic recurrence; use the exact engine")
        prep = np.kron(HADAMARD, HADAMARD)
        return _exact_trace(
            prep @ rho @ dagger(prep), policy, f_th, max_rounds, 1.0, plateau_detect=True
        )

    params = canonical_decompose(rho)

    if policy is Policy.BBPSSW:
        f_b = bbpssw_initial_fidelity(params.fidelity, params.alpha, params.beta)
        return bbpssw_trace(f_b, f_th, max_rounds)

    if engine == "exact":
        rot = np.kron(params.u_a, params.u_b)
        p_s, filtered = rssp_apply(rot @ rho @ dagger(rot), params)
        return _exact_trace(filtered, policy, f_th, max_rounds, p_s, plateau_detect=False)
    return recurrence_analytic(
        params.fidelity,
        params.alpha,
        params.beta,
        params.gamma,
        params.delta,
        policy,
        f_th,
        max_rounds,
    )
