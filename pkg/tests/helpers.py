"""Shared helpers for the test suite: parameter grids and random channels."""

from __future__ import annotations

import numpy as np

from tko_distill import CanonicalChannelParams, KrausPair, kraus_from_params, remix

# (p, |eta|) grid: nine noise severities times five channel types running from
# phase damping (|eta| = 0) to amplitude damping (|eta| = 1).
P_VALUES = tuple(round(0.1 * k, 1) for k in range(1, 10))
ETA_FRACTIONS = (0.0, 0.125, 0.25, 0.375, 0.5)  # arcsin|eta| / pi
ABS_ETAS = tuple(float(np.sin(np.pi * x)) for x in ETA_FRACTIONS)
GRID = tuple((p, e) for p in P_VALUES for e in ABS_ETAS)

ID2 = np.eye(2, dtype=complex)


def haar_unitary(rng: np.random.Generator, n: int = 2) -> np.ndarray:
    """Haar-distributed n x n unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def plain_params(p: float, abs_eta: float) -> CanonicalChannelParams:
    """Canonical channel with identity basis rotations and real eta."""
    return CanonicalChannelParams(
        p=float(p),
        eta=complex(abs_eta),
        zeta=float(np.sqrt(max(1.0 - abs_eta**2, 0.0))),
        u=ID2.copy(),
        v=ID2.copy(),
    )


def random_channel(
    rng: np.random.Generator,
    p: float | None = None,
    complex_eta: bool = True,
    dressed: bool = True,
    remixed: bool = True,
) -> tuple[KrausPair, float, float]:
    """Random two-Kraus channel; returns (kraus_pair, p, |eta|).

    `dressed` draws Haar-random basis rotations, `remixed` scrambles the two
    Kraus operators by a random unitary recombination (which leaves the
    channel map itself unchanged).
    """
    if p is None:
        p = float(rng.uniform(0.01, 0.99))
    angle = float(rng.uniform(0.0, np.pi / 2.0))
    abs_eta = float(np.sin(angle))
    zeta = float(np.cos(angle))
    phase = np.exp(2j * np.pi * rng.uniform()) if complex_eta else 1.0
    u = haar_unitary(rng) if dressed else ID2.copy()
    v = haar_unitary(rng) if dressed else ID2.copy()
    kp = kraus_from_params(
        CanonicalChannelParams(p=p, eta=abs_eta * phase, zeta=zeta, u=u, v=v)
    )
    if remixed:
        kp = remix(kp, haar_unitary(rng))
    return kp, p, abs_eta
