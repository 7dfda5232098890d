"""Classical data to quantum state mappings.

Two angle conventions appear here:

* Bloch encoding of a 2D point: ``cos(theta/2)|0> + e^{i phi/2} sin(theta/2)|1>``,
  prepared by ``r(theta, phi)``.
* Product ("Mapping II") encoding of higher-dimensional points, one qubit per
  ``(theta, phi)`` pair: ``cos(theta)|0> + e^{i phi} sin(theta)|1>``, which is
  ``r(2 theta, 2 phi)|0>``.

Learning and classification work on arrays of native angles with shape
``(n_qubits, 2)`` and a ``kind`` string telling which convention applies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import qsim

TWO_PI = 2.0 * math.pi

BLOCH = "bloch"
PRODUCT = "product"

ANGLE_RANGES = {"2pi": TWO_PI, "pi": math.pi}

# correlator vector order: e_zp, e_xp, e_zm, e_xm
# mapping -> (theta1, phi1, theta2, phi2) source indices
CORRELATOR_MAPPINGS = {
    "A": (0, 2, 1, 3),
    "B": (2, 0, 3, 1),
}


class EncodingError(ValueError):
    pass


class DegenerateBoundsError(EncodingError):
    pass


class BlochAngles(NamedTuple):
    theta: float
    phi: float


@dataclass(frozen=True)
class Bounds:
    """Per-dimension ``[low, high]`` ranges used for min-max angle scaling."""

    lows: tuple[float, ...]
    highs: tuple[float, ...]

    def __post_init__(self):
        if len(self.lows) != len(self.highs):
            raise EncodingError("lows and highs differ in length")
        for i, (lo, hi) in enumerate(zip(self.lows, self.highs)):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise EncodingError(f"non-finite bound in dimension {i + 1}")
            if not hi > lo:
                raise DegenerateBoundsError(
                    f"dimension x{i + 1} is degenerate (min={lo!r}, max={hi!r})"
                )

    @property
    def dim(self) -> int:
        return len(self.lows)

    # 2D accessors
    @property
    def min_x1(self) -> float:
        return self.lows[0]

    @property
    def max_x1(self) -> float:
        return self.highs[0]

    @property
    def min_x2(self) -> float:
        return self.lows[1]

    @property
    def max_x2(self) -> float:
        return self.highs[1]

    def scale(self, x: Sequence[float]) -> np.ndarray:
        """Map ``x`` to ``[0, 1]`` per dimension, clamping out-of-range values."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise EncodingError(f"expected a {self.dim}-dimensional point, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise EncodingError(f"non-finite input {x.tolist()}")
        lo = np.asarray(self.lows)
        hi = np.asarray(self.highs)
        return np.clip((x - lo) / (hi - lo), 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"lows": list(self.lows), "highs": list(self.highs)}

    @classmethod
    def from_dict(cls, d: dict) -> "Bounds":
        return cls(tuple(float(v) for v in d["lows"]), tuple(float(v) for v in d["highs"]))


Bounds2D = Bounds


def bounds_from_dataset(vectors) -> Bounds:
    pts = np.asarray(vectors, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise EncodingError("need at least two points to derive bounds")
    if not np.all(np.isfinite(pts)):
        raise EncodingError("dataset contains non-finite values")
    return Bounds(tuple(pts.min(axis=0).tolist()), tuple(pts.max(axis=0).tolist()))


def angle_span(angle_range: str) -> float:
    try:
        return ANGLE_RANGES[angle_range]
    except KeyError:
        raise EncodingError(
            f"angle range must be one of {sorted(ANGLE_RANGES)}, got {angle_range!r}"
        ) from None


def encode_2d(x: Sequence[float], b: Bounds, angle_range: str = "2pi") -> BlochAngles:
    if b.dim != 2:
        raise EncodingError("encode_2d needs two-dimensional bounds")
    frac = b.scale(x)
    span = angle_span(angle_range)
    return BlochAngles(float(span * frac[0]), float(span * frac[1]))


def encode_correlators(
    e: Sequence[float], b: Bounds, mapping: str = "A", angle_range: str = "pi"
) -> list[tuple[float, float]]:
    """Two-qubit product angles for a 4D correlator vector.

    Each feature is min-max scaled and multiplied by half the angle span, so a
    product qubit covers the same part of the Bloch sphere as a 2D point
    encoded with the same ``angle_range``.
    """
    if b.dim != 4:
        raise EncodingError("correlator encoding needs four-dimensional bounds")
    try:
        order = CORRELATOR_MAPPINGS[mapping]
    except KeyError:
        raise EncodingError(f"unknown correlator mapping {mapping!r}") from None
    ang = 0.5 * angle_span(angle_range) * b.scale(e)
    t1, p1, t2, p2 = (float(ang[i]) for i in order)
    return [(t1, p1), (t2, p2)]


# --- single-qubit states -----------------------------------------------------

def bloch_amplitudes(theta: float, phi: float) -> np.ndarray:
    return np.array(
        [math.cos(0.5 * theta), np.exp(0.5j * phi) * math.sin(0.5 * theta)],
        dtype=np.complex128,
    )


def state_from_bloch(a: BlochAngles) -> qsim.Statevector:
    st = qsim.new_state(1)
    return qsim.apply_1q(st, 0, qsim.r(a[0], a[1]))


def circuit_inner_product(a: BlochAngles, b: BlochAngles) -> float:
    """``|<psi(a)|psi(b)>|^2`` estimated by the six-rotation circuit (exact P(0))."""
    st = qsim.new_state(1)
    for u in (
        qsim.rz(-0.5 * b[1]),
        qsim.ry(b[0]),
        qsim.rz(0.5 * b[1]),
        qsim.rz(-0.5 * a[1]),
        qsim.ry(-a[0]),
        qsim.rz(0.5 * a[1]),
    ):
        qsim.apply_1q(st, 0, u)
    return qsim.marginal_probability(st, {0: 0})


def bloch_overlap(a: BlochAngles, b: BlochAngles) -> float:
    """Analytic ``|<psi(a)|psi(b)>|`` (a magnitude, not squared)."""
    ta, pa = 0.5 * a[0], 0.5 * a[1]
    tb, pb = 0.5 * b[0], 0.5 * b[1]
    z = math.cos(ta) * math.cos(tb) + np.exp(1j * (pb - pa)) * math.sin(ta) * math.sin(tb)
    return float(abs(z))


# --- multi-qubit angle arrays -----------------------------------------------

def gate_angles(native: np.ndarray, kind: str) -> np.ndarray:
    """Per-qubit ``(theta, phi)`` for ``qsim.r`` reproducing the encoded state."""
    native = np.asarray(native, dtype=float)
    if kind == BLOCH:
        return native
    if kind == PRODUCT:
        return 2.0 * native
    raise EncodingError(f"unknown encoding kind {kind!r}")


def pairwise_overlap(a: np.ndarray, b: np.ndarray, kind: str) -> np.ndarray:
    """Overlap magnitudes between two stacks of angle arrays.

    ``a`` has shape ``(na, q, 2)`` and ``b`` ``(nb, q, 2)``; the result has
    shape ``(na, nb)``.  Product states overlap as the product over qubits.
    """
    ga = gate_angles(np.asarray(a, dtype=float), kind)
    gb = gate_angles(np.asarray(b, dtype=float), kind)
    ta = 0.5 * ga[:, None, :, 0]
    pa = 0.5 * ga[:, None, :, 1]
    tb = 0.5 * gb[None, :, :, 0]
    pb = 0.5 * gb[None, :, :, 1]
    z = np.cos(ta) * np.cos(tb) + np.exp(1j * (pb - pa)) * np.sin(ta) * np.sin(tb)
    return np.prod(np.abs(z), axis=-1)


def overlap(a: np.ndarray, b: np.ndarray, kind: str) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(pairwise_overlap(a[None], b[None], kind)[0, 0])


def state_from_angles(native: np.ndarray, kind: str) -> qsim.Statevector:
    g = gate_angles(native, kind)
    st = qsim.new_state(g.shape[0])
    for q, (t, p) in enumerate(g):
        qsim.apply_1q(st, q, qsim.r(t, p))
    return st


def state_from_product(p: Sequence[tuple[float, float]]) -> qsim.Statevector:
    angles = np.asarray(p, dtype=float)
    if angles.ndim != 2 or angles.shape[1] != 2 or angles.shape[0] == 0:
        raise EncodingError("product angles must be a non-empty list of (theta, phi)")
    if not np.all(np.isfinite(angles)):
        raise EncodingError("non-finite product angle")
    return state_from_angles(angles, PRODUCT)


def state_from_hyperspherical(thetas: Sequence[float], phis: Sequence[float]) -> qsim.Statevector:
    """Full-amplitude mapping of ``2^N - 1`` polar/phase angle pairs onto N qubits.

    ``c_0 = cos t_1``, ``c_k = e^{i p_k} sin t_1 ... sin t_k cos t_{k+1}``, and the
    last amplitude carries the full sine product.
    """
    t = np.asarray(thetas, dtype=float)
    p = np.asarray(phis, dtype=float)
    m = t.size
    n = int(round(math.log2(m + 1))) if m else 0
    if m == 0 or t.shape != p.shape or t.ndim != 1 or (1 << n) - 1 != m:
        raise EncodingError(
            f"need equal-length angle arrays of length 2^N-1, got {t.shape} and {p.shape}"
        )
    amps = np.empty(m + 1, dtype=np.complex128)
    sin_prod = 1.0
    amps[0] = math.cos(t[0])
    for k in range(1, m + 1):
        sin_prod *= math.sin(t[k - 1])
        radial = sin_prod * (math.cos(t[k]) if k < m else 1.0)
        amps[k] = np.exp(1j * p[k - 1]) * radial
    return qsim.Statevector(n, amps)


def state_from_histogram(counts: Sequence[float], n_slots: int = 32) -> qsim.Statevector:
    """Amplitude-encode a slot histogram: ``amp_i = sqrt(count_i / total)``."""
    c = np.asarray(counts, dtype=float)
    if c.shape != (n_slots,):
        raise EncodingError(f"expected {n_slots} slots, got shape {c.shape}")
    if n_slots < 2 or n_slots & (n_slots - 1):
        raise EncodingError("slot count must be a power of two")
    if np.any(c < 0) or not np.all(np.isfinite(c)):
        raise EncodingError("histogram counts must be finite and non-negative")
    total = c.sum()
    if total <= 0:
        raise EncodingError("histogram is empty")
    return qsim.Statevector(n_slots.bit_length() - 1, np.sqrt(c / total))


@dataclass(frozen=True)
class FeatureEncoder:
    """Maps raw feature vectors to native angle arrays for one model."""

    kind: str
    bounds: Bounds
    angle_range: str = "2pi"
    mapping: str | None = None

    def __post_init__(self):
        angle_span(self.angle_range)
        if self.kind == BLOCH and self.bounds.dim != 2:
            raise EncodingError("Bloch encoding expects 2D data")
        if self.kind == PRODUCT and (self.bounds.dim != 4 or self.mapping not in CORRELATOR_MAPPINGS):
            raise EncodingError("product encoding expects 4D data and mapping A or B")

    @property
    def dim(self) -> int:
        return self.bounds.dim

    @property
    def n_qubits(self) -> int:
        return 1 if self.kind == BLOCH else 2

    def encode(self, x: Sequence[float]) -> np.ndarray:
        if self.kind == BLOCH:
            return np.array([encode_2d(x, self.bounds, self.angle_range)], dtype=float)
        return np.array(
            encode_correlators(x, self.bounds, self.mapping, self.angle_range), dtype=float
        )

    def encode_many(self, xs) -> np.ndarray:
        return np.stack([self.encode(x) for x in xs]) if len(xs) else np.empty((0, self.n_qubits, 2))

    def decode_2d(self, native: np.ndarray) -> tuple[float, float]:
        """Data-space point whose encoding is ``native`` (Bloch kind only)."""
        if self.kind != BLOCH:
            raise EncodingError("decode is defined for 2D Bloch encodings only")
        span = angle_span(self.angle_range)
        t, p = np.asarray(native, dtype=float).reshape(2)
        b = self.bounds
        return (
            b.min_x1 + t / span * (b.max_x1 - b.min_x1),
            b.min_x2 + p / span * (b.max_x2 - b.min_x2),
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "bounds": self.bounds.to_dict(),
            "angle_range": self.angle_range,
            "mapping": self.mapping,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureEncoder":
        return cls(d["kind"], Bounds.from_dict(d["bounds"]), d["angle_range"], d.get("mapping"))
