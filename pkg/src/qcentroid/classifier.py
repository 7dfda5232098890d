"""Multi-controlled classification circuit built from a learned model.

Register layout: label qubits ``0 .. N-1`` (qubit 0 is the class qubit),
followed by the data qubits.  Sublabel ``i`` sits at basis index
``layout.indices[i]`` of the label register; its controlled gate maps the
sublabel's centroid state onto the class's final state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import encoding, qsim
from .model import LayoutError, Model, ModelError, ModelLayout

TIE_CLASS = 0


class PredictionError(ValueError):
    pass


@dataclass(frozen=True)
class ControlledGate:
    controls: tuple[tuple[int, int], ...]
    target: int
    unitary: np.ndarray
    sublabel: int


@dataclass
class Circuit:
    layout: ModelLayout
    n_data_qubits: int
    kind: str
    label_amplitudes: np.ndarray | None
    gates: list[ControlledGate]
    final_gates: list[list[np.ndarray]]

    @property
    def n_label_qubits(self) -> int:
        return self.layout.n_label_qubits

    @property
    def n_qubits(self) -> int:
        return self.n_label_qubits + self.n_data_qubits

    @property
    def data_qubits(self) -> list[int]:
        return list(range(self.n_label_qubits, self.n_qubits))

    def final_state(self, cls: int) -> np.ndarray:
        vec = np.ones(1, dtype=np.complex128)
        for u in self.final_gates[cls]:
            vec = np.kron(vec, u[:, 0])
        return vec


@dataclass
class Prediction:
    label: str
    class_index: int
    score_0: float
    score_1: float
    per_sublabel_scores: dict[int, float] = field(default_factory=dict)
    best_sublabel: int = -1


def _bits(index: int, width: int) -> list[int]:
    return [(index >> (width - 1 - j)) & 1 for j in range(width)]


def label_weights(model: Model, weights=None) -> np.ndarray | None:
    """Validated per-sublabel probabilities, or None for the uniform Hadamard start."""
    w = model.weights if weights is None else weights
    if w is None or (isinstance(w, str) and w == "uniform"):
        return None
    w = np.asarray(w, dtype=float)
    if w.shape != (len(model.sublabels),):
        raise PredictionError("weight vector length differs from sublabel count")
    if np.any(w < 0) or not np.isclose(w.sum(), 1.0, atol=1e-12, rtol=0):
        raise PredictionError("weights must be non-negative and sum to 1")
    return w


def label_register_amplitudes(layout: ModelLayout, weights) -> np.ndarray:
    amps = np.zeros(1 << layout.n_label_qubits, dtype=np.complex128)
    amps[list(layout.indices)] = np.sqrt(np.asarray(weights, dtype=float))
    return amps


def sublabel_mass(model: Model, weights=None) -> np.ndarray:
    """Probability carried by each sublabel's label pattern before the gates."""
    w = label_weights(model, weights)
    if w is None:
        return np.full(len(model.sublabels), 1.0 / (1 << model.layout.n_label_qubits))
    return w


def build_circuit(
    model: Model,
    weights=None,
    final_states: Mapping[int, Sequence[tuple[float, float]]] | None = None,
) -> Circuit:
    """Gate list for ``model``.

    ``final_states`` optionally maps a class index to per-data-qubit
    ``(theta, phi)`` gate angles of its target state; the default is ``|0...0>``
    for both classes.
    """
    if len(model.labels) != 2:
        raise LayoutError(f"circuit needs exactly two labels, model has {len(model.labels)}")
    if not model.sublabels:
        raise PredictionError("model has no sublabels")
    layout = model.layout
    nq = layout.n_label_qubits
    nd = model.n_data_qubits
    final_gates = []
    for cls in (0, 1):
        spec = (final_states or {}).get(cls)
        if spec is None:
            final_gates.append([qsim.IDENTITY] * nd)
        else:
            if len(spec) != nd:
                raise PredictionError("final state needs one (theta, phi) per data qubit")
            final_gates.append([qsim.r(t, p) for t, p in spec])
    w = label_weights(model, weights)
    gates = []
    for i, (s, cls) in enumerate(zip(model.sublabels, model.classes)):
        controls = tuple(zip(range(nq), _bits(layout.indices[i], nq)))
        for j, (t, p) in enumerate(encoding.gate_angles(s.centroid, model.kind)):
            u = final_gates[cls][j] @ qsim.dagger(qsim.r(t, p))
            gates.append(ControlledGate(controls, nq + j, u, i))
    return Circuit(
        layout, nd, model.kind,
        None if w is None else label_register_amplitudes(layout, w),
        gates, final_gates,
    )


def run_circuit(circuit: Circuit, native_x: np.ndarray) -> qsim.Statevector:
    nq = circuit.n_label_qubits
    if circuit.label_amplitudes is None:
        st = qsim.new_state(circuit.n_qubits)
        for q in range(nq):
            qsim.apply_1q(st, q, qsim.HADAMARD)
    else:
        label = qsim.Statevector(nq, circuit.label_amplitudes)
        st = label.tensor(qsim.new_state(circuit.n_data_qubits))
    for j, (t, p) in enumerate(encoding.gate_angles(native_x, circuit.kind)):
        qsim.apply_1q(st, nq + j, qsim.r(t, p))
    for g in circuit.gates:
        qsim.apply_controlled(st, g.controls, g.target, g.unitary)
    return st


def _exact_scores(circuit: Circuit, st: qsim.Statevector):
    nq = circuit.n_label_qubits
    data = circuit.data_qubits
    finals = [circuit.final_state(0), circuit.final_state(1)]
    class_scores = [qsim.projection_probability(st, {0: y}, data, finals[y]) for y in (0, 1)]
    per = {}
    for i, idx in enumerate(circuit.layout.indices):
        fixed = dict(zip(range(nq), _bits(idx, nq)))
        y = fixed[0]
        hit = qsim.projection_probability(st, fixed, data, finals[y])
        per[i] = hit - (qsim.marginal_probability(st, fixed) - hit)
    return class_scores, per


def _sampled_scores(circuit: Circuit, st: qsim.Statevector, shots: int, seed):
    # rotate each class's final state back to |0...0> under its class-qubit value
    nq = circuit.n_label_qubits
    st = st.copy()
    for y in (0, 1):
        for j, u in enumerate(circuit.final_gates[y]):
            qsim.apply_controlled(st, [(0, y)], nq + j, qsim.dagger(u))
    table = qsim.sample_counts(st, shots, seed)
    data_zero = {q: 0 for q in circuit.data_qubits}
    class_scores = [qsim.marginal_frequency(table, {0: y, **data_zero}) for y in (0, 1)]
    per = {}
    for i, idx in enumerate(circuit.layout.indices):
        fixed = dict(zip(range(nq), _bits(idx, nq)))
        hit = qsim.marginal_frequency(table, {**fixed, **data_zero})
        per[i] = hit - (qsim.marginal_frequency(table, fixed) - hit)
    return class_scores, per


def _argmax_first(values: Sequence[float]) -> int:
    return int(np.argmax(np.asarray(values)))


def circuit_scores(model: Model, x, shots: int | None = None, seed=None, circuit: Circuit | None = None):
    """Class joint probabilities and per-sublabel scores for raw point ``x``."""
    if not model.sublabels:
        raise PredictionError("model has no sublabels")
    x = np.asarray(x, dtype=float)
    if x.shape != (model.encoder.dim,):
        raise PredictionError(f"expected a {model.encoder.dim}-dimensional point, got shape {x.shape}")
    circuit = circuit or build_circuit(model)
    st = run_circuit(circuit, model.encoder.encode(x))
    if shots is None:
        return _exact_scores(circuit, st)
    return _sampled_scores(circuit, st, shots, seed)


def predict(
    model: Model,
    x,
    shots: int | None = None,
    seed=None,
    rule: str = "sublabel",
    circuit: Circuit | None = None,
) -> Prediction:
    """Label for ``x``.

    ``rule="class"`` compares P(q1=y, V=final_y) for y in {0, 1};
    ``rule="sublabel"`` picks the sublabel with the largest
    P(pattern, V=final) - P(pattern, V!=final) and returns its prior label.
    Ties go to class 0, then to the lowest sublabel index.
    """
    if shots is not None and (not isinstance(shots, (int, np.integer)) or shots < 1):
        raise PredictionError(f"shots must be a positive integer, got {shots!r}")
    (s0, s1), per = circuit_scores(model, x, shots, seed, circuit)
    best = _argmax_first([per[i] for i in range(len(per))])
    if rule == "class":
        cls = 1 if s1 > s0 else TIE_CLASS
    elif rule == "sublabel":
        cls = model.classes[best]
    else:
        raise PredictionError(f"unknown decision rule {rule!r}")
    return Prediction(model.labels[cls], cls, s0, s1, per, best)


def _data_states(circuit: Circuit, natives: np.ndarray) -> np.ndarray:
    out = np.ones((len(natives), 1), dtype=np.complex128)
    for j in range(circuit.n_data_qubits):
        t = natives[:, j, 0]
        p = natives[:, j, 1]
        if circuit.kind == encoding.BLOCH:
            cols = [np.cos(t / 2), np.exp(1j * p / 2) * np.sin(t / 2)]
        else:
            cols = [np.cos(t), np.exp(1j * p) * np.sin(t)]
        q = np.stack(cols, axis=1).astype(np.complex128)
        out = (out[:, :, None] * q[:, None, :]).reshape(len(natives), -1)
    return out


def batch_exact_scores(circuit: Circuit, natives: np.ndarray):
    """Exact scores for a stack of encoded points, one statevector each.

    Returns ``(class_scores (B, 2), per_sublabel (B, n))``.
    """
    natives = np.asarray(natives, dtype=float).reshape(len(natives), circuit.n_data_qubits, 2)
    nq, nd = circuit.n_label_qubits, circuit.n_data_qubits
    if circuit.label_amplitudes is None:
        label = np.full(1 << nq, 2.0 ** (-nq / 2), dtype=np.complex128)
    else:
        label = circuit.label_amplitudes
    amps = np.ascontiguousarray(label[None, :, None] * _data_states(circuit, natives)[:, None, :])
    amps = amps.reshape(len(natives), -1)
    for g in circuit.gates:
        qsim.apply_controlled_batch(amps, circuit.n_qubits, g.controls, g.target, g.unitary)
    blocks = amps.reshape(len(natives), 1 << nq, 1 << nd)
    half = 1 << (nq - 1)
    hits = np.empty(blocks.shape[:2])
    hits[:, :half] = np.abs(blocks[:, :half] @ np.conj(circuit.final_state(0))) ** 2
    hits[:, half:] = np.abs(blocks[:, half:] @ np.conj(circuit.final_state(1))) ** 2
    class_scores = np.stack([hits[:, :half].sum(axis=1), hits[:, half:].sum(axis=1)], axis=1)
    idx = list(circuit.layout.indices)
    mass = np.sum(np.abs(blocks[:, idx]) ** 2, axis=2)
    per = 2.0 * hits[:, idx] - mass
    return class_scores, per


def predict_many(model: Model, xs, shots=None, seed=None, rule="sublabel", chunk: int = 2048) -> list[Prediction]:
    circuit = build_circuit(model)
    if shots is None:
        xs = np.asarray(xs, dtype=float).reshape(-1, model.encoder.dim)
        if rule not in ("class", "sublabel"):
            raise PredictionError(f"unknown decision rule {rule!r}")
        if not np.all(np.isfinite(xs)):
            raise PredictionError("points must be finite")
        out = []
        for start in range(0, len(xs), chunk):
            natives = model.encoder.encode_many(xs[start:start + chunk])
            cs, per = batch_exact_scores(circuit, natives)
            for (s0, s1), row in zip(cs, per):
                best = _argmax_first(row)
                cls = (1 if s1 > s0 else TIE_CLASS) if rule == "class" else model.classes[best]
                out.append(Prediction(model.labels[cls], cls, float(s0), float(s1),
                                      {i: float(v) for i, v in enumerate(row)}, best))
        return out
    seeds = np.random.SeedSequence(seed).spawn(len(xs))
    return [predict(model, x, shots, s, rule, circuit) for x, s in zip(xs, seeds)]


def analytic_reference_score(model: Model, x, k: int, weights=None) -> float:
    """Analytic ``p_k |<centroid_k|x>|^2``: the expected joint probability of
    sublabel pattern ``k`` with the data register in its final state."""
    mass = sublabel_mass(model, weights)[k]
    ov = encoding.overlap(model.sublabels[k].centroid, model.encoder.encode(x), model.kind)
    return float(mass * ov * ov)


def reference_joint_probabilities(model: Model, x, weights=None) -> np.ndarray:
    native = model.encoder.encode(np.asarray(x, dtype=float))
    ov = encoding.pairwise_overlap(model.centroids(), native[None], model.kind)[:, 0]
    return sublabel_mass(model, weights) * ov * ov


def class_margin_matrix(model: Model, vectors, labels: Sequence[str], penalty: float) -> np.ndarray:
    """Per-sublabel coefficient of the (linear-in-weights) training objective."""
    native = model.encoder.encode_many(np.asarray(vectors, dtype=float))
    ov2 = encoding.pairwise_overlap(model.centroids(), native, model.kind) ** 2
    classes = np.array(model.classes)
    y = np.array([model.labels.index(str(lab)) for lab in labels])
    sign = np.where(classes[:, None] == y[None, :], 1.0, -penalty)
    return (ov2 * sign).sum(axis=1)


def weight_objective(model: Model, vectors, labels, penalty: float, weights) -> float:
    """Sum over training points of P(q1=y_i, V=final) - penalty * P(q1!=y_i, V=final)."""
    return float(class_margin_matrix(model, vectors, labels, penalty) @ np.asarray(weights, dtype=float))


def optimize_weights(
    model: Model,
    vectors,
    labels: Sequence[str],
    penalty: float,
    iters: int = 200,
    step: float = 0.05,
) -> np.ndarray:
    """Projected coordinate ascent over the simplex from uniform weights.

    Each iteration tries moving ``step`` of mass (or what is left) between
    every ordered pair of sublabels and keeps the best strict improvement.
    """
    if penalty < 0:
        raise PredictionError(f"penalty must be non-negative, got {penalty!r}")
    if len(model.labels) != 2:
        raise LayoutError("weight optimization needs a two-label model")
    n = len(model.sublabels)
    g = class_margin_matrix(model, vectors, labels, penalty)
    w = np.full(n, 1.0 / n)
    for _ in range(int(iters)):
        best_gain, best_move = 0.0, None
        for src in range(n):
            amount = min(step, w[src])
            if amount <= 0:
                continue
            for dst in range(n):
                if dst == src:
                    continue
                gain = amount * (g[dst] - g[src])
                if gain > best_gain + 1e-15:
                    best_gain, best_move = gain, (src, dst, amount)
        if best_move is None:
            break
        src, dst, amount = best_move
        w[src] -= amount
        w[dst] += amount
        w = np.clip(w, 0.0, None)
        w /= w.sum()
    return w


def sublabel_decision(
    joint_final: Mapping[str, float],
    classes: Mapping[str, str],
    pattern_mass: Mapping[str, float] | float | None = None,
) -> tuple[str, str]:
    """Sublabel/label pick from measured pattern probabilities.

    ``joint_final`` maps a label pattern to P(pattern, V=final); the rest of
    each pattern's mass (``pattern_mass``, uniform ``1/2^N`` by default) is
    P(pattern, V!=final).  Returns the winning pattern and its label.
    """
    patterns = list(joint_final)
    if not patterns:
        raise PredictionError("no patterns given")
    width = len(patterns[0])
    scores = []
    for pat in patterns:
        if pattern_mass is None:
            mass = 1.0 / (1 << width)
        elif isinstance(pattern_mass, Mapping):
            mass = pattern_mass[pat]
        else:
            mass = float(pattern_mass)
        hit = joint_final[pat]
        scores.append(hit - (mass - hit))
    best = patterns[_argmax_first(scores)]
    return best, classes[best]


def predict_dual_mapping(
    model_a: Model, model_b: Model, x, shots: int | None = None, seed=None,
    circuits: tuple[Circuit, Circuit] | None = None,
) -> Prediction:
    """Average per-sublabel scores of two encodings of the same sublabel set
    and return the prior label of the best averaged sublabel."""
    if model_a.labels != model_b.labels or model_a.classes != model_b.classes:
        raise LayoutError("dual-mapping models have different sublabel sets")
    ca, cb = circuits or (build_circuit(model_a), build_circuit(model_b))
    if shots is None:
        seed_a = seed_b = None
    else:
        seed_a, seed_b = np.random.SeedSequence(seed).spawn(2)
    (a0, a1), pa = circuit_scores(model_a, x, shots, seed_a, ca)
    (b0, b1), pb = circuit_scores(model_b, x, shots, seed_b, cb)
    per = {i: 0.5 * (pa[i] + pb[i]) for i in pa}
    best = _argmax_first([per[i] for i in range(len(per))])
    cls = model_a.classes[best]
    return Prediction(model_a.labels[cls], cls, 0.5 * (a0 + b0), 0.5 * (a1 + b1), per, best)
