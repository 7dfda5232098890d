"""Synthetic dataset generators and the dataset CSV format.

CSV layout: header ``x1,...,xd,label``, one point per row, floats written
with ``repr`` so values round-trip exactly, labels unquoted, UTF-8, LF.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import physics


class DatasetError(ValueError):
    pass


class CSVParseError(DatasetError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


@dataclass
class LabeledDataset:
    vectors: np.ndarray
    labels: list[str]
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.ndim == 1 and self.vectors.size == 0:
            self.vectors = self.vectors.reshape(0, 0)
        self.labels = [str(lab) for lab in self.labels]
        if self.vectors.ndim != 2 or len(self.vectors) != len(self.labels):
            raise DatasetError("vectors and labels must have matching lengths")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def label_set(self) -> list[str]:
        return sorted(set(self.labels))

    def subset(self, idx) -> "LabeledDataset":
        idx = list(idx)
        meta = dict(self.meta)
        for key, val in self.meta.items():
            if isinstance(val, list) and len(val) == len(self):
                meta[key] = [val[i] for i in idx]
        return LabeledDataset(self.vectors[idx], [self.labels[i] for i in idx], meta)

    def count(self, label: str) -> int:
        return self.labels.count(label)


# --- CSV -------------------------------------------------------------------

def save_csv(ds: LabeledDataset, path: str | Path) -> None:
    for lab in ds.labels:
        if not lab or any(ch in lab for ch in ',\n\r"'):
            raise DatasetError(f"label {lab!r} cannot be written unquoted")
    header = [f"x{i + 1}" for i in range(ds.dim)] + ["label"]
    lines = [",".join(header)]
    for v, lab in zip(ds.vectors, ds.labels):
        lines.append(",".join([repr(float(x)) for x in v] + [lab]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_csv(path: str | Path) -> LabeledDataset:
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise DatasetError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    dim = len(header) - 1
    if dim < 1 or header[-1] != "label" or header[:-1] != [f"x{i + 1}" for i in range(dim)]:
        raise CSVParseError(1, f"bad header {','.join(header)!r}; expected x1,...,xd,label")
    vectors, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != dim + 1:
            raise CSVParseError(lineno, f"expected {dim + 1} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row[:-1]]
        except ValueError:
            raise CSVParseError(lineno, "non-numeric coordinate") from None
        if not all(math.isfinite(v) for v in vals):
            raise CSVParseError(lineno, "non-finite coordinate")
        label = row[-1].strip()
        if not label:
            raise CSVParseError(lineno, "empty label")
        vectors.append(vals)
        labels.append(label)
    if not vectors:
        raise DatasetError(f"{path}: dataset has no rows")
    return LabeledDataset(np.array(vectors, dtype=float), labels, {"source": str(path)})


# --- generators --------------------------------------------------------------

def gen_werner_dataset(n: int, seed=None, shots: int | None = None) -> LabeledDataset:
    """Half entangled (p > 1/3), half untangled (p <= 1/3) Werner states.

    ``p`` is uniform within each class region and the Bell phase uniform on
    ``[0, 2pi)``.  Vectors are the four correlators, exact or estimated from
    ``shots`` coincidence counts each.  ``meta`` keeps ``(p, phi)`` for
    plotting only.
    """
    if n < 4 or n % 2:
        raise DatasetError(f"Werner dataset size must be even and >= 4, got {n}")
    rng = np.random.default_rng(seed)
    half = n // 2
    thr = physics.ENTANGLEMENT_THRESHOLD
    p_ent = rng.uniform(thr, 1.0, half)
    # p in (0, 1/3]: sample 1/3 - u with u in [0, 1/3)
    p_unt = thr - rng.uniform(0.0, thr, half)
    p_unt = np.where(p_unt <= 0.0, thr, p_unt)
    ps = np.concatenate([p_ent, p_unt])
    phis = rng.uniform(0.0, 2.0 * math.pi, n)
    order = rng.permutation(n)
    ps, phis = ps[order], phis[order]
    vectors, labels = [], []
    for p, phi in zip(ps, phis):
        rho = physics.werner_density(p=float(p), phi=float(phi))
        if shots is None:
            vec = physics.correlator_vector(rho)
        else:
            seeds = rng.integers(0, 2**63 - 1, 4)
            vec = [physics.sample_correlator(rho, a, b, shots, int(s))
                   for (a, b), s in zip(physics.CORRELATOR_PAIRS, seeds)]
        vectors.append(list(vec))
        labels.append(werner_label(float(p)))
    meta = {"generator": "werner", "seed": seed, "shots": shots,
            "p": ps.tolist(), "phi": phis.tolist()}
    return LabeledDataset(np.array(vectors), labels, meta)


def werner_label(p: float) -> str:
    return "entangled" if physics.is_entangled(p) else "untangled"


@dataclass(frozen=True)
class BlobSpec:
    center: tuple[float, float]
    spread: float
    count: int
    label: str


def gen_blobs(specs: Sequence[BlobSpec], seed=None) -> LabeledDataset:
    rng = np.random.default_rng(seed)
    vectors, labels = [], []
    for b in specs:
        if b.count < 1:
            raise DatasetError("blob counts must be >= 1")
        if b.spread < 0:
            raise DatasetError("blob spread must be non-negative")
        pts = np.asarray(b.center, dtype=float) + b.spread * rng.standard_normal((b.count, 2))
        vectors.append(pts)
        labels.extend([b.label] * b.count)
    return LabeledDataset(np.concatenate(vectors), labels, {"generator": "blobs", "seed": seed})


def two_blobs(n_per_class: int, separation: float = 8.0, spread: float = 1.0,
              labels=("red", "blue")) -> list[BlobSpec]:
    """Two blobs ``separation`` spreads apart along the x1 = x2 diagonal."""
    offset = separation * spread / math.sqrt(2.0)
    return [
        BlobSpec((0.0, 0.0), spread, n_per_class, labels[0]),
        BlobSpec((offset, offset), spread, n_per_class, labels[1]),
    ]


# P in GPa, T in deg C; only the shape matters
VO2_BOUNDARY = ((0.0, 68.0), (10.0, 76.0), (20.0, 90.0), (30.0, 104.0), (40.0, 112.0))
VO2_RECT = ((0.0, 40.0), (0.0, 150.0))


def _segment_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    t = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
    return np.linalg.norm(pts - (a + t[:, None] * ab), axis=1)


def polyline_distance(pts, knots) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    knots = np.asarray(knots, dtype=float)
    d = np.full(len(pts), np.inf)
    for a, b in zip(knots[:-1], knots[1:]):
        d = np.minimum(d, _segment_distance(pts, a, b))
    return d


def gen_phase_boundary(
    n_per_class: int,
    margin: float = 0.0,
    seed=None,
    boundary=VO2_BOUNDARY,
    rect=VO2_RECT,
    labels=("metallic", "insulating"),
    max_draws: int | None = None,
) -> LabeledDataset:
    """Uniform points over ``rect`` labelled by side of a piecewise-linear
    boundary ``T = f(P)``: ``labels[0]`` above, ``labels[1]`` at or below.

    Points closer than ``margin`` (Euclidean, data units) to the curve are
    rejected.
    """
    if margin < 0:
        raise DatasetError("margin must be non-negative")
    if n_per_class < 1:
        raise DatasetError("n_per_class must be >= 1")
    knots = np.asarray(boundary, dtype=float)
    if knots.ndim != 2 or knots.shape[1] != 2 or len(knots) < 2 or np.any(np.diff(knots[:, 0]) <= 0):
        raise DatasetError("boundary needs >= 2 knots with increasing P")
    (p0, p1), (t0, t1) = rect
    rng = np.random.default_rng(seed)
    want = {labels[0]: n_per_class, labels[1]: n_per_class}
    got: dict[str, list] = {labels[0]: [], labels[1]: []}
    budget = max_draws or 10_000 * n_per_class
    draws = passed = 0
    batch = max(256, 4 * n_per_class)
    while any(len(got[k]) < want[k] for k in want):
        if draws >= 1000 and passed < 0.01 * draws:
            raise DatasetError(
                f"margin {margin} infeasible: {passed} of {draws} draws passed (over 99% rejected)"
            )
        if draws >= budget:
            raise DatasetError(f"could not fill both classes within {draws} draws")
        pts = np.column_stack([rng.uniform(p0, p1, batch), rng.uniform(t0, t1, batch)])
        draws += batch
        far = polyline_distance(pts, knots) >= margin
        passed += int(far.sum())
        above = pts[:, 1] > np.interp(pts[:, 0], knots[:, 0], knots[:, 1])
        for pt, ok, up in zip(pts, far, above):
            key = labels[0] if up else labels[1]
            if ok and len(got[key]) < want[key]:
                got[key].append(pt)
    vectors = np.array(got[labels[0]] + got[labels[1]])
    labs = [labels[0]] * n_per_class + [labels[1]] * n_per_class
    perm = rng.permutation(len(labs))
    meta = {"generator": "boundary", "seed": seed, "margin": margin,
            "boundary": knots.tolist(), "rect": [list(rect[0]), list(rect[1])]}
    return LabeledDataset(vectors[perm], [labs[i] for i in perm], meta)


def boundary_label(point, boundary=VO2_BOUNDARY, labels=("metallic", "insulating")) -> str:
    knots = np.asarray(boundary, dtype=float)
    return labels[0] if point[1] > np.interp(point[0], knots[:, 0], knots[:, 1]) else labels[1]


# --- scattering histograms ---------------------------------------------------

N_SLOTS = 32


def _bimodal(centers, widths, weights, n_slots=N_SLOTS) -> np.ndarray:
    x = np.arange(n_slots) + 0.5
    f = sum(w * np.exp(-0.5 * ((x - c) / s) ** 2) for c, s, w in zip(centers, widths, weights))
    return f / f.sum()


# two fixed reference angular distributions, indexed by slot
REFERENCE_DISTRIBUTIONS = {
    "H": _bimodal((7.0, 23.0), (2.5, 3.0), (0.6, 0.4)),
    "V": _bimodal((2.0, 15.0), (2.0, 3.5), (0.45, 0.55)),
}


def sample_histogram(dist: np.ndarray, n_particles: int, seed=None) -> np.ndarray:
    if n_particles < 1:
        raise DatasetError("need at least one particle")
    return np.random.default_rng(seed).multinomial(int(n_particles), dist)
