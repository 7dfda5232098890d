"""Dense statevector simulator.

Qubit 0 is the most significant bit of the basis index, so the amplitude of
``|q0 q1 ... q_{n-1}>`` lives at ``int("q0q1...", 2)``.  Gates mutate the
state in place and return it for chaining.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

MAX_QUBITS = 24

OPEN = 0
CLOSED = 1

# (qubit, required bit): CLOSED fires on |1>, OPEN fires on |0>
Control = tuple[int, int]
Controls = Union[Sequence[Control], Mapping[int, int]]


class SizeError(ValueError):
    pass


class QubitIndexError(IndexError):
    pass


@dataclass
class Statevector:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (1 << self.n_qubits,):
            raise SizeError(
                f"expected {1 << self.n_qubits} amplitudes, got {self.amps.shape}"
            )

    @classmethod
    def from_amplitudes(cls, amps, normalize: bool = False) -> "Statevector":
        amps = np.asarray(amps, dtype=np.complex128).ravel()
        n = int(round(np.log2(amps.size))) if amps.size else -1
        if n < 1 or (1 << n) != amps.size or n > MAX_QUBITS:
            raise SizeError(f"amplitude count {amps.size} is not 2^n with 1<=n<={MAX_QUBITS}")
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(n, amps)

    def copy(self) -> "Statevector":
        return Statevector(self.n_qubits, self.amps.copy())

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.probabilities())))

    def tensor(self, other: "Statevector") -> "Statevector":
        """``self ⊗ other``; ``self`` occupies the high (leading) qubits."""
        n = self.n_qubits + other.n_qubits
        if n > MAX_QUBITS:
            raise SizeError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit limit")
        return Statevector(n, np.kron(self.amps, other.amps))

    def _tensor_view(self) -> np.ndarray:
        return self.amps.reshape((2,) * self.n_qubits)


@dataclass
class CountTable:
    counts: dict[int, int]
    shots: int
    n_qubits: int = 0

    def frequency(self, index: int) -> float:
        return self.counts.get(index, 0) / self.shots

    def bitstring(self, index: int) -> str:
        return format(index, f"0{self.n_qubits}b")


def new_state(n_qubits: int) -> Statevector:
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise SizeError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}")
    amps = np.zeros(1 << int(n_qubits), dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(int(n_qubits), amps)


# --- gate matrices ---------------------------------------------------------

def rz(alpha: float) -> np.ndarray:
    """Z rotation ``diag(e^{-i a/2}, e^{+i a/2})``."""
    h = 0.5 * alpha
    return np.array([[np.exp(-1j * h), 0.0], [0.0, np.exp(1j * h)]], dtype=np.complex128)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(0.5 * theta), np.sin(0.5 * theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def r(theta: float, phi: float) -> np.ndarray:
    """``Rz(phi/2) Ry(theta) Rz(-phi/2)``.

    Maps ``|0>`` to ``cos(theta/2)|0> + e^{i phi/2} sin(theta/2)|1>`` with no
    global phase.
    """
    return rz(0.5 * phi) @ ry(theta) @ rz(-0.5 * phi)


def dagger(u: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(u)).T


HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
IDENTITY = np.eye(2, dtype=np.complex128)


def is_unitary(u: np.ndarray, atol: float = 1e-12) -> bool:
    u = np.asarray(u)
    return u.shape == (2, 2) and np.allclose(u @ dagger(u), IDENTITY, atol=atol, rtol=0)


# --- kernels ---------------------------------------------------------------

def _check_qubit(state: Statevector, q: int) -> int:
    if not isinstance(q, (int, np.integer)) or not 0 <= q < state.n_qubits:
        raise QubitIndexError(f"qubit {q!r} out of range for {state.n_qubits} qubits")
    return int(q)


def normalize_controls(controls: Controls | None) -> list[Control]:
    if controls is None:
        return []
    items = controls.items() if isinstance(controls, Mapping) else controls
    out = []
    for q, bit in items:
        if bit not in (OPEN, CLOSED):
            raise ValueError(f"control polarity must be 0 (open) or 1 (closed), got {bit!r}")
        out.append((int(q), int(bit)))
    return out


def _apply_on_axis(block: np.ndarray, axis: int, u: np.ndarray) -> None:
    idx0 = [slice(None)] * block.ndim
    idx1 = list(idx0)
    idx0[axis] = 0
    idx1[axis] = 1
    idx0, idx1 = tuple(idx0), tuple(idx1)
    a0 = block[idx0].copy()
    a1 = block[idx1]
    block[idx0] = u[0, 0] * a0 + u[0, 1] * a1
    block[idx1] = u[1, 0] * a0 + u[1, 1] * a1


def apply_1q(state: Statevector, target: int, u: np.ndarray) -> Statevector:
    t = _check_qubit(state, target)
    _apply_on_axis(state._tensor_view(), t, np.asarray(u, dtype=np.complex128))
    return state


def apply_controlled(
    state: Statevector, controls: Controls | None, target: int, u: np.ndarray
) -> Statevector:
    """Apply ``u`` to ``target`` on the branch selected by ``controls``.

    Amplitudes outside the branch (any closed control at 0 or any open
    control at 1) are untouched.
    """
    t = _check_qubit(state, target)
    ctrl = normalize_controls(controls)
    seen = {t}
    for q, _ in ctrl:
        _check_qubit(state, q)
        if q in seen:
            raise QubitIndexError(f"qubit {q} used twice among controls/target")
        seen.add(q)
    index: list = [slice(None)] * state.n_qubits
    for q, bit in ctrl:
        index[q] = bit
    # integer indexing drops the control axes; the view stays writable
    branch = state._tensor_view()[tuple(index)]
    axis = t - sum(1 for q, _ in ctrl if q < t)
    _apply_on_axis(branch, axis, np.asarray(u, dtype=np.complex128))
    return state


def apply_controlled_x_conjugated(
    state: Statevector, controls: Controls | None, target: int, u: np.ndarray
) -> Statevector:
    """Gate-level form of :func:`apply_controlled`: X on every open control,
    the all-closed controlled gate, then X again."""
    ctrl = normalize_controls(controls)
    flips = [q for q, bit in ctrl if bit == OPEN]
    for q in flips:
        apply_1q(state, q, PAULI_X)
    apply_controlled(state, [(q, CLOSED) for q, _ in ctrl], target, u)
    for q in flips:
        apply_1q(state, q, PAULI_X)
    return state


def apply_controlled_batch(
    amps: np.ndarray, n_qubits: int, controls: Controls | None, target: int, u: np.ndarray
) -> np.ndarray:
    """:func:`apply_controlled` on a stack of statevectors, shape ``(B, 2**n)``, in place."""
    amps = np.asarray(amps)
    if amps.ndim != 2 or amps.shape[1] != 1 << n_qubits:
        raise SizeError(f"batch must have shape (B, {1 << n_qubits})")
    if not 0 <= target < n_qubits:
        raise QubitIndexError(f"qubit {target!r} out of range for {n_qubits} qubits")
    ctrl = normalize_controls(controls)
    seen = {target}
    for q, _ in ctrl:
        if not 0 <= q < n_qubits or q in seen:
            raise QubitIndexError(f"bad control qubit {q}")
        seen.add(q)
    index: list = [slice(None)] * (n_qubits + 1)
    for q, bit in ctrl:
        index[q + 1] = bit
    branch = amps.reshape((amps.shape[0],) + (2,) * n_qubits)[tuple(index)]
    axis = 1 + target - sum(1 for q, _ in ctrl if q < target)
    _apply_on_axis(branch, axis, np.asarray(u, dtype=np.complex128))
    return amps


def marginal_probability(state: Statevector, constraint: Mapping[int, int] | None = None) -> float:
    """Probability that each constrained qubit is found in its given bit."""
    if not constraint:
        return float(np.sum(state.probabilities()))
    index: list = [slice(None)] * state.n_qubits
    for q, bit in constraint.items():
        q = _check_qubit(state, q)
        if bit not in (0, 1):
            raise ValueError(f"qubit value must be 0 or 1, got {bit!r}")
        index[q] = int(bit)
    branch = state._tensor_view()[tuple(index)]
    return float(np.sum(np.abs(branch) ** 2))


def projection_probability(
    state: Statevector,
    fixed: Mapping[int, int],
    subsystem: Sequence[int],
    vector: np.ndarray,
) -> float:
    """Probability of ``fixed`` bits together with ``subsystem`` in ``vector``.

    ``subsystem`` lists qubits in the order matching ``vector``'s bit order
    (first listed qubit = most significant).  Qubits in neither argument are
    traced out.
    """
    subsystem = [_check_qubit(state, q) for q in subsystem]
    vec = np.asarray(vector, dtype=np.complex128).ravel()
    if vec.size != 1 << len(subsystem):
        raise SizeError("projector vector does not match the subsystem size")
    for q in fixed:
        if _check_qubit(state, q) in subsystem:
            raise QubitIndexError(f"qubit {q} is both fixed and in the subsystem")
    index: list = [slice(None)] * state.n_qubits
    for q, bit in fixed.items():
        index[q] = int(bit)
    branch = state._tensor_view()[tuple(index)]
    remaining = [q for q in range(state.n_qubits) if q not in fixed]
    axes = [remaining.index(q) for q in subsystem]
    rest = [a for a in range(branch.ndim) if a not in axes]
    mat = np.transpose(branch, axes + rest).reshape(vec.size, -1)
    amp = np.conj(vec) @ mat
    return float(np.sum(np.abs(amp) ** 2))


def sample_counts(state: Statevector, shots: int, seed: int | None = None) -> CountTable:
    if not isinstance(shots, (int, np.integer)) or shots < 1:
        raise ValueError(f"shots must be a positive integer, got {shots!r}")
    probs = state.probabilities()
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(int(shots), probs)
    nz = np.flatnonzero(draws)
    return CountTable({int(i): int(draws[i]) for i in nz}, int(shots), state.n_qubits)


def marginal_frequency(table: CountTable, constraint: Mapping[int, int]) -> float:
    """Empirical counterpart of :func:`marginal_probability`."""
    n = table.n_qubits
    hits = 0
    for index, c in table.counts.items():
        if all(((index >> (n - 1 - q)) & 1) == bit for q, bit in constraint.items()):
            hits += c
    return hits / table.shots
