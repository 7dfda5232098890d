"""Sublabel learning: incremental clustering, redundancy merging, overlap splitting.

All closeness values are overlap magnitudes ``|<a|b>|`` between encoded
states, so ``arccos`` of a closeness is a Fubini-Study angle and cone radii
add and subtract as angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import encoding
from .encoding import FeatureEncoder
from .model import Model, Sublabel


class LearningError(ValueError):
    pass


def half_angle(d: float) -> float:
    """Default split threshold ``cos(arccos(d) / 2)``: halves the cone angle."""
    return math.cos(0.5 * math.acos(min(max(d, 0.0), 1.0)))


SPLIT_RULES: dict[str, Callable[[float], float]] = {"half-angle": half_angle}


@dataclass
class LearnConfig:
    D: float = 0.99
    max_fixpoint_iters: int = 10
    split_tighten: Callable[[float], float] | str = "half-angle"
    rng_seed: int = 0
    kind: str = encoding.BLOCH

    def __post_init__(self):
        if not 0.0 < self.D <= 1.0:
            raise LearningError(f"D must lie in (0, 1], got {self.D!r}")
        if int(self.max_fixpoint_iters) < 1:
            raise LearningError("max_fixpoint_iters must be positive")
        if isinstance(self.split_tighten, str):
            try:
                self.split_tighten = SPLIT_RULES[self.split_tighten]
            except KeyError:
                raise LearningError(f"unknown split rule {self.split_tighten!r}") from None


def _angle(closeness: float) -> float:
    return math.acos(min(max(closeness, 0.0), 1.0))


def _closeness(a: np.ndarray, b: np.ndarray, kind: str) -> float:
    return encoding.overlap(a, b, kind)


def _new_sublabel(point: np.ndarray, label: str, d: float, pid: int) -> Sublabel:
    return Sublabel(point.copy(), d, label, point[None].copy(), (pid,))


def assign_point(
    sublabels: list[Sublabel],
    point: np.ndarray,
    label: str,
    cfg: LearnConfig,
    point_id: int = -1,
    threshold: float | None = None,
) -> list[Sublabel]:
    """Fold one point into ``sublabels`` in place and return the list.

    The point joins the closest same-label centroid (lowest index on ties) if
    that closeness reaches the threshold, moving the centroid to the running
    mean of its members' raw angles.  Otherwise it starts a new sublabel.
    """
    point = np.asarray(point, dtype=float)
    d = cfg.D if threshold is None else threshold
    same = [i for i, s in enumerate(sublabels) if s.prior_label == label]
    if same:
        close = encoding.pairwise_overlap(
            np.stack([sublabels[i].centroid for i in same]), point[None], cfg.kind
        )[:, 0]
        best = int(np.argmax(close))
        if close[best] >= d:
            s = sublabels[same[best]]
            n = s.member_count
            s.centroid = (point + n * s.centroid) / (n + 1)
            s.members = np.concatenate([s.members, point[None]])
            s.member_ids = s.member_ids + (point_id,)
            return sublabels
    sublabels.append(_new_sublabel(point, label, d, point_id))
    return sublabels


def cluster_dataset(points: np.ndarray, labels: Sequence[str], cfg: LearnConfig) -> list[Sublabel]:
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        raise LearningError("cannot cluster an empty dataset")
    if len(points) != len(labels):
        raise LearningError("points and labels differ in length")
    subs: list[Sublabel] = []
    for i, (p, lab) in enumerate(zip(points, labels)):
        assign_point(subs, p, lab, cfg, point_id=i)
    return subs


def rival_closeness(s: Sublabel, rival: Sublabel, kind: str) -> float:
    """Closeness of ``s``'s centroid to the nearest edge of ``rival``'s cone."""
    gap = _angle(_closeness(s.centroid, rival.centroid, kind)) - _angle(rival.cone_radius)
    return math.cos(max(gap, 0.0))


def assess_against_other_labels(s: Sublabel, others: Sequence[Sublabel], kind: str = encoding.BLOCH) -> float:
    """Largest rival closeness over different-label sublabels; -1 when there are none."""
    best = -1.0
    for o in others:
        if o is s or o.prior_label == s.prior_label:
            continue
        best = max(best, rival_closeness(s, o, kind))
    return best


def partner_closeness(s: Sublabel, partner: Sublabel, kind: str) -> float:
    """Closeness of ``s``'s centroid to the far edge of a same-label ``partner`` cone."""
    reach = _angle(_closeness(s.centroid, partner.centroid, kind)) + _angle(partner.cone_radius)
    return math.cos(min(reach, math.pi))


def merge_sublabels(a: Sublabel, b: Sublabel, kind: str) -> Sublabel:
    """Member-weighted merge; the new cone covers both old cones."""
    na, nb = a.member_count, b.member_count
    centroid = (na * a.centroid + nb * b.centroid) / (na + nb)
    reach = max(
        _angle(_closeness(centroid, a.centroid, kind)) + _angle(a.cone_radius),
        _angle(_closeness(centroid, b.centroid, kind)) + _angle(b.cone_radius),
    )
    return Sublabel(
        centroid,
        math.cos(min(reach, 0.5 * math.pi)),
        a.prior_label,
        np.concatenate([a.members, b.members]),
        a.member_ids + b.member_ids,
    )


def _with_radius(sublabels: Sequence[Sublabel], radius: float | None) -> list[Sublabel]:
    work = [s.copy() for s in sublabels]
    if radius is not None:
        for s in work:
            s.cone_radius = float(radius)
    return work


def reduce_redundancy(
    sublabels: Sequence[Sublabel], kind: str = encoding.BLOCH, reset_radius: float | None = None
) -> list[Sublabel]:
    """One merging pass over a snapshot of ``sublabels``.

    Sublabel ``i`` absorbs the first same-label partner whose far cone edge is
    angularly closer to ``i`` than the nearest rival-label cone edge.  Each
    ``i`` merges at most once per pass; absorbed entries are skipped.  A
    sublabel with no rival-label sublabel never merges.  ``reset_radius``
    sets every cone radius before the pass starts.
    """
    work = _with_radius(sublabels, reset_radius)
    alive = [True] * len(work)
    for i in range(len(work)):
        if not alive[i]:
            continue
        rivals = [work[k] for k in range(len(work)) if alive[k]]
        lam_max = assess_against_other_labels(work[i], rivals, kind)
        if lam_max <= -1.0:
            continue
        for k in range(len(work)):
            if k == i or not alive[k] or work[k].prior_label != work[i].prior_label:
                continue
            lam = partner_closeness(work[i], work[k], kind)
            if lam > lam_max:
                work[i] = merge_sublabels(work[i], work[k], kind)
                alive[k] = False
                break
    return [s for s, a in zip(work, alive) if a]


def _recluster(s: Sublabel, threshold: float, cfg: LearnConfig) -> list[Sublabel]:
    pieces: list[Sublabel] = []
    ids = s.member_ids if len(s.member_ids) == s.member_count else (-1,) * s.member_count
    for p, pid in zip(s.members, ids):
        assign_point(pieces, p, s.prior_label, cfg, point_id=pid, threshold=threshold)
    for piece in pieces:
        piece.cone_radius = threshold
    return pieces


def reduce_overlap(
    sublabels: Sequence[Sublabel], cfg: LearnConfig, reset_radius: float | None = None
) -> list[Sublabel]:
    """Dissolve every sublabel whose cone meets a rival cone and re-cluster its
    members with the tightened threshold ``split_tighten(d)``.

    Members are re-fed in insertion order, so the first member seeds the
    first piece.  Pieces replace the dissolved sublabel at its position.
    """
    work = _with_radius(sublabels, reset_radius)
    out: list[Sublabel] = []
    for i, s in enumerate(work):
        current = out + work[i + 1:]
        overlapping = any(
            rival_closeness(s, o, cfg.kind) > s.cone_radius
            for o in current if o.prior_label != s.prior_label
        )
        tighter = cfg.split_tighten(s.cone_radius)
        if overlapping and tighter > s.cone_radius:
            out.extend(_recluster(s, tighter, cfg))
        else:
            out.append(s)
    return out


def overlap_remaining(sublabels: Sequence[Sublabel], kind: str) -> int:
    """Number of sublabels whose cone still meets some rival-label cone."""
    return sum(
        assess_against_other_labels(s, sublabels, kind) > s.cone_radius for s in sublabels
    )


def _signature(subs: Sequence[Sublabel]) -> tuple:
    return tuple(s.signature() for s in subs)


@dataclass
class LearnTrace:
    initial_count: int = 0
    counts: list[tuple[int, int]] = field(default_factory=list)
    members: list[tuple[int, int]] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    stalled: bool = False


def refine(subs: list[Sublabel], cfg: LearnConfig, trace: LearnTrace | None = None) -> list[Sublabel]:
    """Alternate merging and splitting until a full round changes nothing.

    Both passes start with every cone radius set back to ``cfg.D``.  A stable
    round that still leaves a flagged overlap counts as stalled, not converged.
    """
    trace = trace if trace is not None else LearnTrace()
    trace.initial_count = len(subs)
    for it in range(int(cfg.max_fixpoint_iters)):
        before = _signature(subs)
        merged = reduce_redundancy(subs, cfg.kind, reset_radius=cfg.D)
        subs = reduce_overlap(merged, cfg, reset_radius=cfg.D)
        trace.counts.append((len(merged), len(subs)))
        trace.members.append((sum(s.member_count for s in merged), sum(s.member_count for s in subs)))
        trace.iterations = it + 1
        if _signature(subs) == before:
            trace.converged = overlap_remaining(subs, cfg.kind) == 0
            trace.stalled = not trace.converged
            break
    return subs


def learn(
    vectors,
    labels: Sequence[str],
    cfg: LearnConfig | None = None,
    encoder: FeatureEncoder | None = None,
    angle_range: str = "pi",
) -> Model:
    """Train a model on labeled raw feature vectors.

    With no ``encoder`` the data must be 2D and a Bloch encoder is fitted to
    the data bounds with ``angle_range``.
    """
    cfg = cfg or LearnConfig()
    labels = [str(lab) for lab in labels]
    vectors = np.asarray(vectors, dtype=float)
    if len(vectors) == 0:
        raise LearningError("training set is empty")
    if len(vectors) != len(labels):
        raise LearningError("vectors and labels differ in length")
    distinct = tuple(sorted(set(labels)))
    if len(distinct) < 2:
        raise LearningError(f"need at least two labels, found {list(distinct)}")
    if encoder is None:
        encoder = FeatureEncoder(encoding.BLOCH, encoding.bounds_from_dataset(vectors), angle_range)
    if encoder.kind != cfg.kind:
        cfg = LearnConfig(cfg.D, cfg.max_fixpoint_iters, cfg.split_tighten, cfg.rng_seed, encoder.kind)
    points = encoder.encode_many(vectors)
    subs = cluster_dataset(points, labels, cfg)
    trace = LearnTrace()
    subs = refine(subs, cfg, trace)
    meta = {
        "initial_sublabels": trace.initial_count,
        "fixpoint_iterations": trace.iterations,
        "converged": trace.converged,
        "max_iters_hit": not (trace.converged or trace.stalled),
        "stalled": trace.stalled,
        "overlapping_sublabels": overlap_remaining(subs, cfg.kind),
        "train_size": int(len(vectors)),
    }
    return Model(encoder, distinct, subs, cfg.D, None, meta)


def rebase_model(model: Model, encoder: FeatureEncoder, vectors) -> Model:
    """Same member partition as ``model``, re-expressed under another encoder.

    Centroids are the raw-angle means of the re-encoded members and each cone
    radius is the smallest member closeness to its new centroid.
    """
    points = encoder.encode_many(np.asarray(vectors, dtype=float))
    subs = []
    for s in model.sublabels:
        if len(s.member_ids) != s.member_count or min(s.member_ids, default=-1) < 0:
            raise LearningError("rebasing needs sublabels that still carry member ids")
        members = points[list(s.member_ids)]
        centroid = members.mean(axis=0)
        close = encoding.pairwise_overlap(members, centroid[None], encoder.kind)[:, 0]
        subs.append(Sublabel(centroid, float(min(close.min(), 1.0)), s.prior_label,
                             members, tuple(s.member_ids)))
    return Model(encoder, model.labels, subs, model.d_threshold, None, dict(model.meta))
