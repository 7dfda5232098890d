"""Trained model container and its JSON document format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .encoding import FeatureEncoder

FORMAT_VERSION = 1


class ModelError(ValueError):
    pass


class LayoutError(ModelError):
    pass


@dataclass
class Sublabel:
    """A learned subgroup of one prior label.

    ``centroid`` and every row of ``members`` are native angle arrays of shape
    ``(n_qubits, 2)``.  ``member_ids`` index the training set and are kept
    only during learning.
    """

    centroid: np.ndarray
    cone_radius: float
    prior_label: str
    members: np.ndarray
    member_ids: tuple[int, ...] = ()

    @property
    def member_count(self) -> int:
        return len(self.members)

    def copy(self) -> "Sublabel":
        return Sublabel(
            self.centroid.copy(), self.cone_radius, self.prior_label,
            self.members.copy(), tuple(self.member_ids),
        )

    def signature(self) -> tuple:
        return (
            self.prior_label,
            self.member_count,
            tuple(self.centroid.ravel().tolist()),
            self.cone_radius,
        )


@dataclass(frozen=True)
class ModelLayout:
    n_label_qubits: int
    k0: int
    k1: int
    indices: tuple[int, ...]

    @property
    def n_sublabels(self) -> int:
        return self.k0 + self.k1

    def pattern(self, i: int) -> str:
        return format(self.indices[i], f"0{self.n_label_qubits}b")


def ceil_log2(n: int) -> int:
    return 0 if n <= 1 else math.ceil(math.log2(n))


def compute_layout(classes: Sequence[int]) -> ModelLayout:
    """Split layout: class-0 sublabels from index 0, class-1 from ``2^(N-1)``.

    ``classes`` lists the class (0 or 1) of each sublabel, class-0 entries
    first.  N is the larger of the minimal register size and the size needed
    to keep each class inside its half of the register.
    """
    classes = list(classes)
    if any(c not in (0, 1) for c in classes):
        raise LayoutError("the circuit layout supports exactly two classes")
    if classes != sorted(classes):
        raise LayoutError("class-0 sublabels must precede class-1 sublabels")
    k0 = classes.count(0)
    k1 = classes.count(1)
    if k0 == 0 or k1 == 0:
        raise LayoutError("both classes need at least one sublabel")
    n_qubits = max(ceil_log2(k0 + k1), 1 + ceil_log2(max(k0, k1)), 1)
    half = 1 << (n_qubits - 1)
    indices = tuple(range(k0)) + tuple(half + m for m in range(k1))
    return ModelLayout(n_qubits, k0, k1, indices)


@dataclass
class Model:
    encoder: FeatureEncoder
    labels: tuple[str, ...]
    sublabels: list[Sublabel]
    d_threshold: float
    weights: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.labels) < 1:
            raise ModelError("model has no labels")
        order = {lab: i for i, lab in enumerate(self.labels)}
        for s in self.sublabels:
            if s.prior_label not in order:
                raise ModelError(f"sublabel carries unknown label {s.prior_label!r}")
        # class-0 first, stable within class, as the layout requires
        self.sublabels = sorted(self.sublabels, key=lambda s: order[s.prior_label])
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != (len(self.sublabels),):
                raise ModelError("weight vector length differs from sublabel count")

    @property
    def kind(self) -> str:
        return self.encoder.kind

    @property
    def n_data_qubits(self) -> int:
        return self.encoder.n_qubits

    def class_of(self, s: Sublabel) -> int:
        return self.labels.index(s.prior_label)

    @property
    def classes(self) -> list[int]:
        return [self.class_of(s) for s in self.sublabels]

    @property
    def layout(self) -> ModelLayout:
        if len(self.labels) != 2:
            raise LayoutError(f"circuit layout needs 2 labels, model has {len(self.labels)}")
        return compute_layout(self.classes)

    def centroids(self) -> np.ndarray:
        return np.stack([s.centroid for s in self.sublabels])

    def counts_per_label(self) -> dict[str, int]:
        out = {lab: 0 for lab in self.labels}
        for s in self.sublabels:
            out[s.prior_label] += 1
        return out

    def with_weights(self, weights) -> "Model":
        return Model(self.encoder, self.labels, [s.copy() for s in self.sublabels],
                     self.d_threshold, weights, dict(self.meta))

    # --- JSON ---------------------------------------------------------------

    def to_dict(self) -> dict:
        doc: dict[str, Any] = {
            "version": FORMAT_VERSION,
            "encoder": self.encoder.to_dict(),
            "bounds": self.encoder.bounds.to_dict(),
            "D": self.d_threshold,
            "labels": list(self.labels),
            "sublabels": [
                {
                    "theta_m": s.centroid[:, 0].tolist(),
                    "phi_m": s.centroid[:, 1].tolist(),
                    "N": s.member_count,
                    "d": s.cone_radius,
                    "prior_label": s.prior_label,
                }
                for s in self.sublabels
            ],
            "weights": None if self.weights is None else self.weights.tolist(),
            "meta": self.meta,
        }
        if len(self.labels) == 2:
            lay = self.layout
            doc["layout"] = {
                "n_label_qubits": lay.n_label_qubits,
                "index_of_sublabel": list(lay.indices),
            }
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_dict(cls, doc: dict) -> "Model":
        if doc.get("version") != FORMAT_VERSION:
            raise ModelError(f"unsupported model version {doc.get('version')!r}")
        try:
            encoder = FeatureEncoder.from_dict(doc["encoder"])
            subs = []
            for entry in doc["sublabels"]:
                centroid = np.column_stack([
                    np.asarray(entry["theta_m"], dtype=float),
                    np.asarray(entry["phi_m"], dtype=float),
                ])
                n = int(entry["N"])
                # members are training-only; keep N via placeholder copies of the centroid
                subs.append(Sublabel(
                    centroid, float(entry["d"]), str(entry["prior_label"]),
                    np.repeat(centroid[None], n, axis=0),
                ))
            weights = doc.get("weights")
            model = cls(encoder, tuple(doc["labels"]), subs, float(doc["D"]),
                        None if weights is None else np.asarray(weights, dtype=float),
                        dict(doc.get("meta") or {}))
        except (KeyError, TypeError) as exc:
            raise ModelError(f"malformed model document: {exc}") from exc
        if "layout" in doc:
            lay = model.layout
            if list(lay.indices) != list(doc["layout"]["index_of_sublabel"]):
                raise LayoutError("stored layout does not match the sublabel classes")
        return model

    @classmethod
    def from_json(cls, text: str) -> "Model":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "Model":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
