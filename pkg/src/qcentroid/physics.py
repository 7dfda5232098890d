"""Two-qubit Werner states and CHSH correlators.

Conventions: ``|0> = |up>``, ``Z|0> = +|0>``, and the Bell state is
``(|01> + e^{i phi}|10>)/sqrt(2)``.  With these the four correlators of
``rho_W(p, phi)`` are ``E(Z, B+-) = -p/sqrt(2)`` and
``E(X, B+-) = +-p cos(phi)/sqrt(2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SQRT2 = math.sqrt(2.0)

Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
B_PLUS = (Z + X) / SQRT2
B_MINUS = (Z - X) / SQRT2

OBSERVABLES = {"Z": Z, "X": X, "Z+X": B_PLUS, "Z-X": B_MINUS}

# e_zp, e_xp, e_zm, e_xm
CORRELATOR_PAIRS = (("Z", "Z+X"), ("X", "Z+X"), ("Z", "Z-X"), ("X", "Z-X"))

ENTANGLEMENT_THRESHOLD = 1.0 / 3.0


class PhysicsError(ValueError):
    pass


@dataclass(frozen=True)
class WernerParams:
    p: float
    phi: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise PhysicsError(f"Werner mixing p must lie in (0, 1), got {self.p!r}")
        if not math.isfinite(self.phi):
            raise PhysicsError("Bell phase must be finite")


class CorrelatorVector(NamedTuple):
    e_zp: float
    e_xp: float
    e_zm: float
    e_xm: float


def bell_state(phi: float) -> np.ndarray:
    v = np.zeros(4, dtype=np.complex128)
    v[1] = 1.0 / SQRT2
    v[2] = np.exp(1j * phi) / SQRT2
    return v


def werner_density(w: WernerParams | None = None, *, p: float | None = None, phi: float = 0.0) -> np.ndarray:
    """``p |Psi_B><Psi_B| + (1-p) I/4``.

    Pass a validated :class:`WernerParams`, or ``p=`` directly to reach the
    closed endpoints ``p in {0, 1}``.
    """
    if w is not None:
        p, phi = w.p, w.phi
    if p is None or not 0.0 <= p <= 1.0:
        raise PhysicsError(f"p must lie in [0, 1], got {p!r}")
    psi = bell_state(phi)
    return p * np.outer(psi, psi.conj()) + (1.0 - p) * np.eye(4) / 4.0


def _observable(name_or_matrix) -> np.ndarray:
    if isinstance(name_or_matrix, str):
        try:
            return OBSERVABLES[name_or_matrix]
        except KeyError:
            raise PhysicsError(f"unknown observable {name_or_matrix!r}") from None
    return np.asarray(name_or_matrix, dtype=np.complex128)


def correlator(rho: np.ndarray, a, b) -> float:
    """``tr(rho (a ⊗ b))``."""
    op = np.kron(_observable(a), _observable(b))
    return float(np.real(np.trace(rho @ op)))


def correlator_vector(rho: np.ndarray) -> CorrelatorVector:
    return CorrelatorVector(*(correlator(rho, a, b) for a, b in CORRELATOR_PAIRS))


def chsh_combination(e: CorrelatorVector) -> float:
    return abs(e.e_zp + e.e_zm - e.e_xp + e.e_xm)


def chsh_value(w: WernerParams | None = None, *, p: float | None = None, phi: float = 0.0) -> float:
    """Closed form ``sqrt(2) p (1 + cos phi)`` of the CHSH combination."""
    if w is not None:
        p, phi = w.p, w.phi
    return SQRT2 * p * (1.0 + math.cos(phi))


def _eigenprojectors(obs: np.ndarray) -> dict[int, np.ndarray]:
    vals, vecs = np.linalg.eigh(obs)
    out = {}
    for sign in (1, -1):
        sel = np.isclose(vals, sign)
        v = vecs[:, sel]
        out[sign] = v @ v.conj().T
    return out


def outcome_probabilities(rho: np.ndarray, a, b) -> dict[tuple[int, int], float]:
    """Born probabilities of the joint ``(+-1, +-1)`` outcomes of ``a`` and ``b``."""
    pa = _eigenprojectors(_observable(a))
    pb = _eigenprojectors(_observable(b))
    probs = {}
    for s in (1, -1):
        for t in (1, -1):
            probs[(s, t)] = max(float(np.real(np.trace(rho @ np.kron(pa[s], pb[t])))), 0.0)
    return probs


def sample_correlator(rho: np.ndarray, a, b, shots: int, seed=None) -> float:
    """Coincidence-count estimate ``(N++ + N-- - N+- - N-+) / shots``."""
    if not isinstance(shots, (int, np.integer)) or shots < 1:
        raise PhysicsError(f"shots must be a positive integer, got {shots!r}")
    probs = outcome_probabilities(rho, a, b)
    keys = [(1, 1), (-1, -1), (1, -1), (-1, 1)]
    pv = np.array([probs[k] for k in keys])
    counts = np.random.default_rng(seed).multinomial(int(shots), pv / pv.sum())
    n_pp, n_mm, n_pm, n_mp = counts
    return float((n_pp + n_mm - n_pm - n_mp) / (n_pp + n_mm + n_pm + n_mp))


def is_entangled(p: float) -> bool:
    return p > ENTANGLEMENT_THRESHOLD
