"""Analysis utilities: yield accounting, convergence diagnostics, optimality
checks, and parameter sweeps over families of two-Kraus channels.

The functions here consume the traces produced by :mod:`tko_distill.distill`
and the canonical parameters from :mod:`tko_distill.state` / ``channel``.
Sweeps can fan out over a thread pool; the worker count is controlled by the
``TKO_DISTILL_THREADS`` environment variable (unset or ``0`` means one worker
per CPU, ``1`` forces serial execution).
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, TextIO, TypeVar

import numpy as np

from .channel import CanonicalChannelParams
from .distill import (
    CNOT,
    DistillationTrace,
    PAIR_INTERLEAVE,
    Policy,
    rssp_ops,
    run,
)
from .errors import DomainError
from .linalg import ID2, kron
from .state import CanonicalStateParams, params_analytic

_T = TypeVar("_T")
_U = TypeVar("_U")


# ---------------------------------------------------------------------------
# Optimal attainable fidelity
# ---------------------------------------------------------------------------


def optimal_fidelity_params(
    f: float, alpha: float, beta: float, gamma: float, delta: float
) -> float:
    """Largest single-pair fidelity reachable from two copies by local operations.

    For the canonical two-term mixture the optimum is

        F* = F^2 / (F^2 + (1 - F)^2 (gamma delta / (alpha beta))^2),

    and the postselecting protocol's first round attains it.
    """
    if not 0.5 < f <= 1.0:
        raise ValueError("fidelity weight must lie in (1/2, 1]")
    if alpha * beta <= 0.0:
        raise ValueError("alpha and beta must both be positive")
    ratio = (gamma * delta) / (alpha * beta)
    bad = (1.0 - f) ** 2 * ratio**2
    return f**2 / (f**2 + bad)


def optimal_fidelity_channel(p: float, abs_eta: float) -> float:
    """Optimal two-copy fidelity expressed directly in channel parameters.

    Equals ``optimal_fidelity_params`` on the shared state of the channel
    ``(p, |eta|)``:

        F* = 1/2 + sqrt((1 - p)(1 - |eta|^2 p)) / ((1 - p) + (1 - |eta|^2 p)).

    For ``|eta| = 1`` this is exactly 1 whenever ``p < 1``: one round of
    postselection fully repairs any amplitude-damping channel.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError("p must lie in [0, 1) for a distillable shared state")
    if not 0.0 <= abs_eta <= 1.0:
        raise ValueError("|eta| must lie in [0, 1]")
    a = 1.0 - p
    b = 1.0 - abs_eta**2 * p
    return 0.5 + math.sqrt(a * b) / (a + b)


# ---------------------------------------------------------------------------
# Randomized check that no sampled LOCC round beats the bound
# ---------------------------------------------------------------------------


def _locc_template(params: CanonicalStateParams) -> tuple[np.ndarray, np.ndarray]:
    """Weights and 4x4 matrices representing the two-pair source mixture.

    The joint state of two shared pairs is a rank-four mixture of products of
    the eigenstates ``mu`` and ``nu``.  Each component is returned reshaped as
    a matrix indexed ``[alice, bob]`` so a product operator ``N_A (x) N_B``
    acts as ``N_A @ omega @ N_B.T``.
    """
    mu = params.mu()
    nu = params.nu()
    f = params.fidelity
    weights = np.array([f * f, f * (1.0 - f), (1.0 - f) * f, (1.0 - f) ** 2])
    mats = np.empty((4, 4, 4), dtype=complex)
    for i, (x, y) in enumerate(((mu, mu), (mu, nu), (nu, mu), (nu, nu))):
        v16 = PAIR_INTERLEAVE @ np.kron(x, y)
        mats[i] = v16.reshape(4, 4)
    return weights, mats


def locc_fidelity(
    params: CanonicalStateParams, n_a: np.ndarray, n_b: np.ndarray
) -> float:
    """Kept-pair fidelity after one filtering round ``N_A (x) N_B``.

    Both operators act on one party's two qubits (ordered source, target).
    The second qubit of each party is measured out; all four outcomes keep
    the pair, so this covers any single-instrument round.  The result is the
    fidelity of the surviving pair with the maximally entangled target.
    """
    n_a = np.asarray(n_a, dtype=complex)
    n_b = np.asarray(n_b, dtype=complex)
    if n_a.shape != (4, 4) or n_b.shape != (4, 4):
        raise ValueError("local operators must be 4x4 (two qubits per party)")
    weights, omegas = _locc_template(params)
    phi = ID2 / math.sqrt(2.0)  # Phi+ as a 2x2 matrix, indexed [a1, b1]
    num = 0.0
    den = 0.0
    for c, omega in zip(weights, omegas):
        out = n_a @ omega @ n_b.T
        den += c * float(np.sum(np.abs(out) ** 2))
        kept = np.einsum("pr,pqrs->qs", phi, out.reshape(2, 2, 2, 2))
        num += c * float(np.sum(np.abs(kept) ** 2))
    if den <= 0.0:
        raise ValueError("filtering round annihilates the source mixture")
    return num / den


def fp_branch_operators(
    params: CanonicalStateParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Local operators realizing the first fully-postselected round.

    Alice applies a CNOT and keeps only outcome 1 on the target; Bob first
    applies the local filter on both of his qubits, then does the same.
    Feeding these to :func:`locc_fidelity` reproduces the optimal fidelity.
    """
    keep_one = np.diag([0.0, 1.0]).astype(complex)
    m_b, _ = rssp_ops(params.alpha, params.beta)
    n_a = kron(ID2, keep_one) @ CNOT
    n_b = kron(ID2, keep_one) @ CNOT @ kron(m_b, m_b)
    return n_a, n_b


def _spectral_norms(batch: np.ndarray) -> np.ndarray:
    """Largest singular value of each matrix in a (n, 4, 4) stack."""
    gram = np.einsum("bji,bjk->bik", batch.conj(), batch)
    eigs = np.linalg.eigvalsh(gram)
    return np.sqrt(eigs[:, -1])


def random_locc_check(
    params: CanonicalStateParams,
    samples: int = 100_000,
    seed: int = 0,
    chunk: int = 20_000,
) -> float:
    """Best kept-pair fidelity over random single-round filtering operations.

    Draws ``samples`` pairs of complex-Gaussian 4x4 operators, rescales each
    to unit spectral norm (so it is a valid measurement branch), and returns
    the maximum fidelity any of them achieves on two copies of the state.
    The maximum should never exceed ``optimal_fidelity_params`` beyond
    numerical noise.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    weights, omegas = _locc_template(params)
    weighted = np.sqrt(weights)[:, None, None] * omegas
    phi = ID2 / math.sqrt(2.0)
    best = 0.0
    remaining = samples
    while remaining > 0:
        batch = min(chunk, remaining)
        remaining -= batch
        n_a = rng.standard_normal((batch, 4, 4)) + 1j * rng.standard_normal(
            (batch, 4, 4)
        )
        n_b = rng.standard_normal((batch, 4, 4)) + 1j * rng.standard_normal(
            (batch, 4, 4)
        )
        n_a /= _spectral_norms(n_a)[:, None, None]
        n_b /= _spectral_norms(n_b)[:, None, None]
        # out[b, c] = N_A[b] @ omega[c] @ N_B[b].T, built in two contractions.
        half = np.einsum("cjk,blk->bcjl", weighted, n_b)
        out = np.einsum("bij,bcjl->bcil", n_a, half)
        den = np.einsum("bcil,bcil->b", out, out.conj()).real
        kept = np.einsum(
            "pr,bcpqrs->bcqs", phi, out.reshape(batch, 4, 2, 2, 2, 2)
        )
        num = np.einsum("bcqs,bcqs->b", kept, kept.conj()).real
        best = max(best, float(np.max(num / den)))
    return best


# ---------------------------------------------------------------------------
# Yield accounting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class YieldReport:
    """Yield of a protocol run, interpolated at its fidelity threshold.

    ``rounds_used`` is the first round index K whose fidelity reaches the
    threshold; ``average_yield`` splits the ensemble between rounds K-1 and K
    in proportion to how far each fidelity sits from the threshold, so it
    always lies between ``yield_at_k_minus_1`` and ``yield_at_k``.
    """

    policy: Policy
    f_th: float
    rounds_used: int
    yield_at_k: float
    yield_at_k_minus_1: float
    average_yield: float


def average_yield(trace: DistillationTrace) -> YieldReport:
    """Interpolated yield of a successful trace at its threshold.

    Raises ``ValueError`` if the trace never reached the threshold.  If the
    prepared state already clears it (K = 0), all three yields coincide with
    the preparation yield.
    """
    if not trace.reached:
        raise ValueError("trace did not reach its fidelity threshold")
    records = trace.records
    k = next(
        i for i, rec in enumerate(records) if rec.fidelity >= trace.threshold
    )
    if k == 0:
        y0 = records[0].cumulative_yield
        return YieldReport(trace.policy, trace.threshold, 0, y0, y0, y0)
    f_hi = records[k].fidelity
    f_lo = records[k - 1].fidelity
    y_hi = records[k].cumulative_yield
    y_lo = records[k - 1].cumulative_yield
    if f_hi - f_lo <= 0.0:
        avg = y_hi
    else:
        weight = (trace.threshold - f_lo) / (f_hi - f_lo)
        avg = (1.0 - weight) * y_lo + weight * y_hi
    return YieldReport(trace.policy, trace.threshold, k, y_hi, y_lo, avg)


def convergence_ratios(trace: DistillationTrace) -> list[tuple[float, float]]:
    """Per-round error ratios ``(1-F_k)/(1-F_{k-1})`` and ``.../(1-F_{k-1})^2``.

    The first tuple compares round 1 against the prepared state.  Quadratic
    convergence shows up as the second component approaching a constant while
    the first goes to zero; linear convergence keeps the first component at a
    fixed ratio.  Rounds where the previous fidelity is already exactly 1
    report ``(0.0, 0.0)``.
    """
    records = trace.records
    if len(records) < 2:
        raise ValueError("trace needs at least one round beyond preparation")
    ratios = []
    for prev, cur in zip(records, records[1:]):
        e_prev = 1.0 - prev.fidelity
        e_cur = 1.0 - cur.fidelity
        if e_prev <= 0.0 or e_cur <= 0.0:
            ratios.append((0.0, 0.0))
        else:
            ratios.append((e_cur / e_prev, e_cur / e_prev**2))
    return ratios


# ---------------------------------------------------------------------------
# Parameter sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    """Outcome of one (channel, policy) cell of a sweep.

    ``error`` carries the message of a domain failure (for example a
    non-distillable start) instead of raising; ``report`` is present only
    when the run reached the threshold.
    """

    p: float
    abs_eta: float
    policy: Policy
    reached: bool
    rounds: int | None
    fidelity_final: float | None
    report: YieldReport | None
    error: str | None
    seed: int


SWEEP_COLUMNS = (
    "p",
    "abs_eta",
    "policy",
    "rounds",
    "reached",
    "fidelity_final",
    "yield_avg",
    "seed",
)


def _channel_for(p: float, abs_eta: float) -> CanonicalChannelParams:
    zeta = math.sqrt(max(1.0 - abs_eta**2, 0.0))
    return CanonicalChannelParams(p=p, eta=complex(abs_eta), zeta=zeta)


def run_point(
    p: float,
    abs_eta: float,
    policy: Policy,
    f_th: float = 0.99,
    max_rounds: int = 64,
    seed: int = 0,
) -> SweepPoint:
    """Run one policy on one channel, folding failures into the result."""
    try:
        trace = run(
            _channel_for(p, abs_eta),
            policy,
            f_th=f_th,
            max_rounds=max_rounds,
        )
    except DomainError as exc:
        return SweepPoint(
            p=p,
            abs_eta=abs_eta,
            policy=policy,
            reached=False,
            rounds=None,
            fidelity_final=None,
            report=None,
            error=str(exc),
            seed=seed,
        )
    report = average_yield(trace) if trace.reached else None
    return SweepPoint(
        p=p,
        abs_eta=abs_eta,
        policy=policy,
        reached=trace.reached,
        rounds=trace.rounds,
        fidelity_final=trace.final_fidelity,
        report=report,
        error=None,
        seed=seed,
    )


def thread_count() -> int:
    """Worker count from ``TKO_DISTILL_THREADS`` (0 or unset: one per CPU)."""
    raw = os.environ.get("TKO_DISTILL_THREADS", "0")
    try:
        count = int(raw)
    except ValueError:
        count = 0
    if count <= 0:
        count = os.cpu_count() or 1
    return count


def _map_ordered(fn: Callable[[_T], _U], items: Sequence[_T]) -> list[_U]:
    workers = thread_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


_ALL_POLICIES = (Policy.FP, Policy.PP, Policy.QPA, Policy.BBPSSW)


def sweep_p(
    abs_eta: float,
    p_values: Iterable[float],
    f_th: float = 0.99,
    policies: Sequence[Policy] = _ALL_POLICIES,
    max_rounds: int = 64,
    seed: int = 0,
) -> list[SweepPoint]:
    """Sweep the noise severity at fixed channel type ``|eta|``."""
    cells = [(p, pol) for p in p_values for pol in policies]
    return _map_ordered(
        lambda cell: run_point(
            cell[0], abs_eta, cell[1], f_th=f_th, max_rounds=max_rounds, seed=seed
        ),
        cells,
    )


def sweep_eta(
    p: float,
    eta_values: Iterable[float],
    f_th: float = 0.99,
    policies: Sequence[Policy] = _ALL_POLICIES,
    max_rounds: int = 64,
    seed: int = 0,
) -> list[SweepPoint]:
    """Sweep the channel type ``|eta|`` at fixed noise severity ``p``."""
    cells = [(abs_eta, pol) for abs_eta in eta_values for pol in policies]
    return _map_ordered(
        lambda cell: run_point(
            p, cell[0], cell[1], f_th=f_th, max_rounds=max_rounds, seed=seed
        ),
        cells,
    )


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(float(value)) if isinstance(value, float) else str(value)


def sweep_row(point: SweepPoint) -> dict[str, object]:
    """Flatten one sweep point into the normative column set."""
    yield_avg = point.report.average_yield if point.report is not None else None
    return {
        "p": point.p,
        "abs_eta": point.abs_eta,
        "policy": point.policy.value,
        "rounds": point.rounds,
        "reached": point.reached,
        "fidelity_final": point.fidelity_final,
        "yield_avg": yield_avg,
        "seed": point.seed,
    }


def sweep_to_csv(points: Sequence[SweepPoint], stream: TextIO) -> None:
    """Write sweep results as CSV with the normative column order."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for point in points:
        row = sweep_row(point)
        writer.writerow(
            [
                _cell(row[col]) if not isinstance(row[col], str) else row[col]
                for col in SWEEP_COLUMNS
            ]
        )


def sweep_to_json(points: Sequence[SweepPoint], stream: TextIO) -> None:
    """Write sweep results as a JSON array of row objects."""
    rows = [sweep_row(point) for point in points]
    json.dump(rows, stream, indent=2)
    stream.write("\n")


def analytic_state_params(p: float, abs_eta: float) -> CanonicalStateParams:
    """Canonical state parameters for the channel ``(p, |eta|)``, closed form."""
    fidelity, alpha, beta, gamma, delta = params_analytic(p, abs_eta)
    return CanonicalStateParams(
        fidelity=fidelity,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        delta=delta,
        theta=0.0,
    )
