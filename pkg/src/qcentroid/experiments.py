"""End-to-end pipelines shared by the CLI and the acceptance tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import classifier, datasets, encoding, learning, qsim
from .encoding import FeatureEncoder
from .model import Model, Sublabel


class UsageError(ValueError):
    pass


# --- training --------------------------------------------------------------

def encoder_for(vectors, angle_range: str = "pi", mapping: str = "A") -> FeatureEncoder:
    vectors = np.asarray(vectors, dtype=float)
    bounds = encoding.bounds_from_dataset(vectors)
    if vectors.shape[1] == 2:
        return FeatureEncoder(encoding.BLOCH, bounds, angle_range)
    if vectors.shape[1] == 4:
        return FeatureEncoder(encoding.PRODUCT, bounds, angle_range, mapping)
    raise UsageError(f"only 2D and 4D data are supported, got {vectors.shape[1]}D")


def keep_all_model(vectors, labels, encoder: FeatureEncoder) -> Model:
    """One sublabel per training point, no clustering."""
    points = encoder.encode_many(np.asarray(vectors, dtype=float))
    subs = [Sublabel(p.copy(), 1.0, str(lab), p[None].copy(), (i,))
            for i, (p, lab) in enumerate(zip(points, labels))]
    meta = {"initial_sublabels": len(subs), "fixpoint_iterations": 0, "converged": True,
            "max_iters_hit": False, "keep_all": True, "train_size": len(subs)}
    return Model(encoder, tuple(sorted(set(map(str, labels)))), subs, 1.0, None, meta)


def train(ds: datasets.LabeledDataset, cfg: learning.LearnConfig, angle_range: str = "pi",
          mapping: str = "A", penalty: float = 0.0, keep_all: bool = False) -> Model:
    if len(ds.label_set) != 2:
        raise UsageError(f"training needs exactly two labels, found {ds.label_set}")
    enc = encoder_for(ds.vectors, angle_range, mapping)
    if keep_all:
        model = keep_all_model(ds.vectors, ds.labels, enc)
    else:
        model = learning.learn(ds.vectors, ds.labels, cfg, encoder=enc)
    if penalty > 0:
        w = classifier.optimize_weights(model, ds.vectors, ds.labels, penalty)
        model = model.with_weights(w)
        model.meta["penalty"] = penalty
    return model


# --- evaluation --------------------------------------------------------------

@dataclass
class EvalReport:
    per_class: dict[str, tuple[int, int]]
    excluded: int = 0

    @property
    def correct(self) -> int:
        return sum(c for c, _ in self.per_class.values())

    @property
    def total(self) -> int:
        return sum(n for _, n in self.per_class.values())

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else float("nan")

    def rate(self, label: str) -> float:
        c, n = self.per_class[label]
        return c / n if n else float("nan")


def evaluate(model: Model, test: datasets.LabeledDataset, exclude: datasets.LabeledDataset | None = None,
             shots=None, seed=None, rule: str = "sublabel") -> EvalReport:
    unknown = sorted(set(test.labels) - set(model.labels))
    if unknown:
        raise UsageError(f"test labels {unknown} are not in the model label set {list(model.labels)}")
    keep = list(range(len(test)))
    excluded = 0
    if exclude is not None:
        seen = {tuple(v) for v in exclude.vectors.tolist()}
        keep = [i for i in keep if tuple(test.vectors[i].tolist()) not in seen]
        excluded = len(test) - len(keep)
    preds = classifier.predict_many(model, test.vectors[keep], shots, seed, rule)
    per = {lab: [0, 0] for lab in model.labels}
    for i, p in zip(keep, preds):
        truth = test.labels[i]
        per[truth][1] += 1
        per[truth][0] += int(p.label == truth)
    return EvalReport({k: (v[0], v[1]) for k, v in per.items()}, excluded)


# --- grid sweep --------------------------------------------------------------

@dataclass(frozen=True)
class SweepGrid:
    x1: tuple[float, float, int]
    x2: tuple[float, float, int]

    def __post_init__(self):
        for lo, hi, steps in (self.x1, self.x2):
            if steps < 2:
                raise UsageError("grid needs at least 2 steps per axis")
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
                raise UsageError(f"bad grid range {lo}:{hi}")

    @classmethod
    def parse(cls, text: str) -> "SweepGrid":
        try:
            a, b = text.split(",")
            axes = []
            for part in (a, b):
                lo, hi, steps = part.split(":")
                axes.append((float(lo), float(hi), int(steps)))
        except ValueError:
            raise UsageError(f"grid must look like x1min:x1max:steps,x2min:x2max:steps, got {text!r}") from None
        return cls(axes[0], axes[1])

    def axis_values(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linspace(*self.x1), np.linspace(*self.x2)

    def points(self) -> np.ndarray:
        """Row-major cells: x2 varies slowest, x1 fastest."""
        v1, v2 = self.axis_values()
        return np.array([(a, b) for b in v2 for a in v1])

    def nearest_cell(self, x) -> int:
        v1, v2 = self.axis_values()
        i = int(np.argmin(np.abs(v1 - x[0])))
        j = int(np.argmin(np.abs(v2 - x[1])))
        return j * len(v1) + i


def default_grid(model: Model, steps: int = 100) -> SweepGrid:
    b = model.encoder.bounds
    return SweepGrid((b.min_x1, b.max_x1, steps), (b.min_x2, b.max_x2, steps))


def sweep(model: Model, grid: SweepGrid, rule: str = "sublabel") -> list[tuple]:
    if model.encoder.dim != 2:
        raise UsageError("sweeps need a 2D model")
    pts = grid.points()
    preds = classifier.predict_many(model, pts, rule=rule)
    return [(float(x[0]), float(x[1]), p.label, p.score_0, p.score_1) for x, p in zip(pts, preds)]


def sweep_csv(rows: Sequence[tuple]) -> str:
    lines = ["x1,x2,predicted_label,score_0,score_1"]
    lines += [f"{a!r},{b!r},{lab},{s0!r},{s1!r}" for a, b, lab, s0, s1 in rows]
    return "\n".join(lines) + "\n"


def sweep_svg(rows: Sequence[tuple], grid: SweepGrid, labels: Sequence[str], cell: int = 4) -> str:
    colors = {labels[0]: "#f5d76e", labels[1]: "#8ec5ff"}
    n1, n2 = grid.x1[2], grid.x2[2]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{n1 * cell}" height="{n2 * cell}">']
    for k, row in enumerate(rows):
        i, j = k % n1, k // n1
        y = (n2 - 1 - j) * cell
        out.append(f'<rect x="{i * cell}" y="{y}" width="{cell}" height="{cell}" fill="{colors[row[2]]}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# --- Werner experiment ---------------------------------------------------------

@dataclass
class WernerResult:
    errors: int
    test_size: int
    confusion: dict[tuple[str, str], int]
    n_sublabels: int
    n_label_qubits: int
    n_qubits: int
    rows: list[tuple[float, float, str, str]] = field(default_factory=list)
    model_a: Model | None = None
    model_b: Model | None = None


def run_werner(train_size: int = 128, test_size: int = 400, seed=0, shots: int | None = None,
               cfg: learning.LearnConfig | None = None, angle_range: str = "pi",
               keep_all: bool = False) -> WernerResult:
    """Generate, learn on mapping A, re-express the partition under mapping B,
    and classify the test set by averaged per-sublabel scores."""
    if train_size < 4 or train_size % 2:
        raise UsageError("train size must be even and >= 4")
    if test_size < 4 or test_size % 2:
        raise UsageError("test size must be even and >= 4")
    cfg = cfg or learning.LearnConfig()
    seq_train, seq_test, seq_pred = np.random.SeedSequence(seed).spawn(3)
    tr = datasets.gen_werner_dataset(train_size, seq_train, shots)
    te = datasets.gen_werner_dataset(test_size, seq_test, shots)
    bounds = encoding.bounds_from_dataset(tr.vectors)
    enc_a = FeatureEncoder(encoding.PRODUCT, bounds, angle_range, "A")
    enc_b = FeatureEncoder(encoding.PRODUCT, bounds, angle_range, "B")
    if keep_all:
        model_a = keep_all_model(tr.vectors, tr.labels, enc_a)
    else:
        model_a = learning.learn(tr.vectors, tr.labels, cfg, encoder=enc_a)
    model_b = learning.rebase_model(model_a, enc_b, tr.vectors)
    circuits = (classifier.build_circuit(model_a), classifier.build_circuit(model_b))
    seeds = seq_pred.spawn(len(te)) if shots is not None else [None] * len(te)
    confusion = {(t, p): 0 for t in model_a.labels for p in model_a.labels}
    rows = []
    errors = 0
    for x, truth, p, phi, s in zip(te.vectors, te.labels, te.meta["p"], te.meta["phi"], seeds):
        pred = classifier.predict_dual_mapping(model_a, model_b, x, shots, s, circuits)
        confusion[(truth, pred.label)] += 1
        errors += pred.label != truth
        rows.append((float(p), float(phi), truth, pred.label))
    lay = model_a.layout
    return WernerResult(errors, len(te), confusion, len(model_a.sublabels), lay.n_label_qubits,
                        lay.n_label_qubits + model_a.n_data_qubits, rows, model_a, model_b)


# --- scattering histogram demo -----------------------------------------------

def histogram_rates(counts, references=None) -> dict[str, float]:
    """Matching rate P(label qubit = y, data = reference_y) for each reference.

    The label qubit is in uniform superposition, so each rate is at most 1/2.
    """
    refs = references or datasets.REFERENCE_DISTRIBUTIONS
    names = list(refs)
    if len(names) != 2:
        raise UsageError("the histogram demo compares exactly two references")
    data = encoding.state_from_histogram(counts, len(counts))
    label = qsim.new_state(1)
    qsim.apply_1q(label, 0, qsim.HADAMARD)
    st = label.tensor(data)
    data_qubits = list(range(1, st.n_qubits))
    out = {}
    for y, name in enumerate(names):
        ref = np.sqrt(np.asarray(refs[name], dtype=float))
        out[name] = qsim.projection_probability(st, {0: y}, data_qubits, ref / np.linalg.norm(ref))
    return out


def histogram_demo(particles: Sequence[int], state: str = "H", seed=0) -> list[tuple[int, float, float]]:
    refs = datasets.REFERENCE_DISTRIBUTIONS
    if state not in refs:
        raise UsageError(f"state must be one of {sorted(refs)}")
    rows = []
    for n, child in zip(particles, np.random.SeedSequence(seed).spawn(len(particles))):
        if n < 1:
            raise UsageError("particle count must be >= 1")
        counts = datasets.sample_histogram(refs[state], int(n), child)
        rates = histogram_rates(counts)
        rows.append((int(n), rates["H"], rates["V"]))
    return rows
