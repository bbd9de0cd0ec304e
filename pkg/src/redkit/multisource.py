"""Cross-camera redundancy: grouping, completeness-based pruning, sweeps.

An object annotated in several overlapping cameras yields one redundancy
group per frame. Within a group the observation with the highest box
completeness score anchors the pruning rule: observations whose score falls
more than ``tau`` below the anchor are deleted, everything else is kept.
Ungrouped observations are never touched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .geometry import CameraModel, angle_to_column, bcs, horizontal_fov, \
    normalize_deg, yaw_center
from .geometry import Box2D
from .ingest import Dataset, Frame, GrayImage, resolve_box
from .overlap import OverlapGraph

# (scene_id, timestamp_ns, camera, track_id)
LabelKey = tuple[str, int, str, str]

_RESAMPLE_GRID = 64


@dataclass(frozen=True)
class Observation:
    """One camera's view of a grouped object."""

    camera: str
    full: Box2D
    clipped: Box2D
    bcs: float


@dataclass(frozen=True)
class RedundancyGroup:
    """All observations of one object across graph-connected cameras."""

    frame: int
    track_id: str
    observations: tuple[Observation, ...]


@dataclass(frozen=True)
class PruneDecision:
    """Outcome of pruning one group at one threshold."""

    kept: tuple[tuple[str, str], ...]
    removed: tuple[tuple[str, str], ...]
    tau: float


@dataclass(frozen=True)
class SweepRow:
    """Dataset-level label counts after pruning at one threshold."""

    tau: float
    deleted: int
    remaining: int
    tracks: int


def form_groups(frame: Frame, cameras: Mapping[str, CameraModel],
                graph: OverlapGraph, source: str = "native-2d"
                ) -> list[RedundancyGroup]:
    """Group a frame's observations by track across graph-connected cameras.

    An observation exists where the annotation resolves to a box with
    positive clipped area under ``source``. Observing cameras are split into
    connected components of the overlap graph; every component with at least
    two cameras becomes a group. Singleton observations stay ungrouped.
    """
    adjacency = graph.adjacency
    groups: list[RedundancyGroup] = []
    for ann in frame.annotations:
        observations = _observations(ann, cameras, source)
        if len(observations) < 2:
            continue
        for component in _components([o.camera for o in observations], adjacency):
            if len(component) < 2:
                continue
            members = tuple(o for o in observations if o.camera in component)
            groups.append(RedundancyGroup(frame.timestamp_ns, ann.track_id, members))
    groups.sort(key=lambda g: (g.track_id, g.observations[0].camera))
    return groups


def _observations(ann, cameras: Mapping[str, CameraModel], source: str
                  ) -> list[Observation]:
    obs = []
    if source == "native-2d":
        # only the cameras that actually carry a box; avoids a full rig scan
        names = sorted(ann.boxes2d)
    else:
        names = sorted(cameras)
    for name in names:
        cam = cameras.get(name)
        if cam is None:
            continue
        resolved = resolve_box(ann, cam, source)
        if resolved is None:
            continue
        full, clipped = resolved
        if clipped.area <= 0.0:
            continue
        obs.append(Observation(name, full, clipped, bcs(full, clipped)))
    return obs


def _components(cams: Sequence[str], adjacency: Mapping[str, frozenset[str]]
                ) -> list[frozenset[str]]:
    """Connected components of the overlap subgraph induced by ``cams``."""
    present = set(cams)
    seen: set[str] = set()
    out = []
    for start in sorted(present):
        if start in seen:
            continue
        stack = [start]
        comp: set[str] = set()
        while stack:
            cur = stack.pop()
            if cur in comp:
                continue
            comp.add(cur)
            for peer in adjacency.get(cur, frozenset()):
                if peer in present and peer not in comp:
                    stack.append(peer)
        seen |= comp
        out.append(frozenset(comp))
    return out


def prune_group(group: RedundancyGroup, tau: float) -> PruneDecision:
    """Apply the max-anchored completeness rule to one group.

    The highest score in the group is the anchor; an observation is removed
    when ``anchor - score > tau``. The anchor itself always survives (ties
    resolve to the lexicographically first camera, though every tied
    observation is kept anyway since its gap is zero).
    """
    if tau < 0.0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    anchor = max(o.bcs for o in group.observations)
    kept = []
    removed = []
    for o in group.observations:
        if anchor - o.bcs > tau:
            removed.append((o.camera, group.track_id))
        else:
            kept.append((o.camera, group.track_id))
    return PruneDecision(tuple(kept), tuple(removed), tau)


# --------------------------------------------------------------------------
# dataset-level pruning


@dataclass
class _DatasetIndex:
    """One pass over a dataset: every label key plus the formed groups."""

    all_keys: list[LabelKey]
    # (scene_id, group, graph for that scene)
    groups: list[tuple[str, RedundancyGroup, OverlapGraph]]
    track_label_counts: dict[tuple[str, str], int]


def _graph_for(graph: OverlapGraph | Mapping[str, OverlapGraph], scene_id: str
               ) -> OverlapGraph:
    if isinstance(graph, OverlapGraph):
        return graph
    return graph[scene_id]


def _index_dataset(dataset: Dataset,
                   graph: OverlapGraph | Mapping[str, OverlapGraph],
                   source: str) -> _DatasetIndex:
    all_keys: list[LabelKey] = []
    groups: list[tuple[str, RedundancyGroup, OverlapGraph]] = []
    track_label_counts: dict[tuple[str, str], int] = {}
    for scene in dataset.scenes:
        scene_graph = _graph_for(graph, scene.scene_id)
        cameras = scene.camera_map
        sid = scene.scene_id
        for frame in scene.frames:
            ts = frame.timestamp_ns
            for ann in frame.annotations:
                observations = _observations(ann, cameras, source)
                if not observations:
                    continue
                track_key = (sid, ann.track_id)
                track_label_counts[track_key] = (
                    track_label_counts.get(track_key, 0) + len(observations)
                )
                for o in observations:
                    all_keys.append((sid, ts, o.camera, ann.track_id))
                if len(observations) < 2:
                    continue
                for component in _components(
                        [o.camera for o in observations], scene_graph.adjacency):
                    if len(component) < 2:
                        continue
                    members = tuple(
                        o for o in observations if o.camera in component)
                    groups.append((sid, RedundancyGroup(ts, ann.track_id, members),
                                   scene_graph))
    return _DatasetIndex(all_keys, groups, track_label_counts)


def _normalize_pair_taus(pair_taus: Mapping | None) -> dict[frozenset[str], float]:
    out: dict[frozenset[str], float] = {}
    for pair, value in (pair_taus or {}).items():
        key = frozenset(pair)
        if len(key) != 2:
            raise ValueError(f"pair override key must name two cameras, got {pair!r}")
        out[key] = float(value)
    return out


def _effective_tau(group: RedundancyGroup, graph: OverlapGraph, tau: float,
                   pair_taus: dict[frozenset[str], float]) -> float:
    """Per-group threshold: the smallest override on any edge inside the group."""
    if not pair_taus:
        return tau
    cams = [o.camera for o in group.observations]
    best = None
    for i in range(len(cams)):
        for j in range(i + 1, len(cams)):
            edge = frozenset((cams[i], cams[j]))
            if graph.pair_for(cams[i], cams[j]) is None:
                continue
            t = pair_taus.get(edge, tau)
            if best is None or t < best:
                best = t
    return tau if best is None else best


def _removed_keys(index: _DatasetIndex, tau: float,
                  pair_taus: dict[frozenset[str], float]) -> list[LabelKey]:
    removed: list[LabelKey] = []
    for sid, group, graph in index.groups:
        eff = _effective_tau(group, graph, tau, pair_taus)
        anchor = max(o.bcs for o in group.observations)
        for o in group.observations:
            if anchor - o.bcs > eff:
                removed.append((sid, group.frame, o.camera, group.track_id))
    return removed


def _row_for(index: _DatasetIndex, tau: float, removed: list[LabelKey]) -> SweepRow:
    removed_per_track: dict[tuple[str, str], int] = {}
    for sid, _, _, track_id in removed:
        key = (sid, track_id)
        removed_per_track[key] = removed_per_track.get(key, 0) + 1
    tracks = sum(
        1 for key, total in index.track_label_counts.items()
        if removed_per_track.get(key, 0) < total
    )
    deleted = len(removed)
    return SweepRow(tau, deleted, len(index.all_keys) - deleted, tracks)


def prune_dataset(dataset: Dataset,
                  graph: OverlapGraph | Mapping[str, OverlapGraph],
                  tau: float, source: str = "native-2d",
                  pair_taus: Mapping | None = None
                  ) -> tuple[set[LabelKey], SweepRow]:
    """Prune every redundancy group in a dataset at one threshold.

    Args:
        dataset: parsed dataset.
        graph: the rig's overlap graph, or a scene-id keyed mapping when
            scenes have different rigs.
        tau: global completeness-gap threshold in ``[0, 1]`` scale.
        source: ``native-2d`` or ``projected-3d`` label source.
        pair_taus: optional per-camera-pair overrides, keyed by any
            two-element camera-name pair.

    Returns:
        The kept label keys ``(scene_id, timestamp_ns, camera, track_id)``
        and the count row for this threshold.
    """
    if tau < 0.0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    overrides = _normalize_pair_taus(pair_taus)
    index = _index_dataset(dataset, graph, source)
    removed = _removed_keys(index, tau, overrides)
    row = _row_for(index, tau, removed)
    kept = set(index.all_keys)
    kept.difference_update(removed)
    return kept, row


def sweep_tau(dataset: Dataset,
              graph: OverlapGraph | Mapping[str, OverlapGraph],
              taus: Sequence[float], source: str = "native-2d",
              pair_taus: Mapping | None = None) -> list[SweepRow]:
    """Prune at several thresholds, reusing one grouping pass.

    Rows come back in the order of ``taus`` (no sorting, no deduplication).
    """
    if not taus:
        raise ValueError("sweep needs at least one tau")
    if any(t < 0.0 for t in taus):
        raise ValueError("every tau must be nonnegative")
    overrides = _normalize_pair_taus(pair_taus)
    index = _index_dataset(dataset, graph, source)
    return [
        _row_for(index, tau, _removed_keys(index, tau, overrides))
        for tau in taus
    ]


# --------------------------------------------------------------------------
# overlap-region image comparison


def crop_overlap(img: GrayImage, cam: CameraModel,
                 arc: tuple[float, float]) -> GrayImage:
    """Cut the pixel columns a shared arc covers in one camera's image.

    ``arc`` is ``(start, end)`` in ego degrees (``end >= start``, the pair
    may represent a seam crossing as ``end > 180``). The arc is intersected
    with the camera's own view arc; an empty intersection is an error. The
    crop spans the full image height.
    """
    if img.width != cam.width:
        raise ValueError(
            f"image width {img.width} does not match camera {cam.name!r} "
            f"width {cam.width}"
        )
    start, end = arc
    span = end - start
    if span <= 0.0 or span > 360.0:
        raise ValueError(f"bad arc {arc!r}: end must exceed start by at most 360")
    half = horizontal_fov(cam) / 2.0
    rel = normalize_deg(start - yaw_center(cam))
    lo = hi = None
    for shift in (rel - 360.0, rel, rel + 360.0):
        cand_lo = max(shift, -half)
        cand_hi = min(shift + span, half)
        if cand_hi > cand_lo and (lo is None or cand_hi - cand_lo > hi - lo):
            lo, hi = cand_lo, cand_hi
    if lo is None:
        raise ValueError(
            f"arc {arc!r} does not intersect the view of camera {cam.name!r}"
        )
    # pull exact-edge bounds inside the open FOV interval before conversion
    eps = 1e-9
    lo = max(lo, -half + eps)
    hi = min(hi, half - eps)
    c0 = angle_to_column(lo, cam)
    c1 = angle_to_column(hi, cam)
    if c1 < c0:
        c0, c1 = c1, c0
    return GrayImage(img.pixels[:, c0 : c1 + 1])


def _resample_to_grid(img: GrayImage) -> np.ndarray:
    """Bilinear resample to the fixed comparison grid (identity at 64x64)."""
    src = img.pixels.astype(np.float64)
    h, w = src.shape
    ys = np.clip((np.arange(_RESAMPLE_GRID) + 0.5) * (h / _RESAMPLE_GRID) - 0.5,
                 0.0, h - 1.0)
    xs = np.clip((np.arange(_RESAMPLE_GRID) + 0.5) * (w / _RESAMPLE_GRID) - 0.5,
                 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    return (
        src[np.ix_(y0, x0)] * (1.0 - wy) * (1.0 - wx)
        + src[np.ix_(y0, x1)] * (1.0 - wy) * wx
        + src[np.ix_(y1, x0)] * wy * (1.0 - wx)
        + src[np.ix_(y1, x1)] * wy * wx
    )


def cosine_similarity(a: GrayImage, b: GrayImage) -> float:
    """Cosine of two crops after resampling both to a common 64x64 grid.

    All-zero crops have no direction and raise ``ValueError``. Intensities
    are nonnegative, so the result lies in ``[0, 1]``.
    """
    va = _resample_to_grid(a).ravel()
    vb = _resample_to_grid(b).ravel()
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for an all-zero crop")
    return float(np.dot(va, vb) / (na * nb))
