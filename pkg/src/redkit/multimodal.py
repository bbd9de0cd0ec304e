"""Cross-modal redundancy between two 3D detection sets.

A baseline (camera-or-fusion) detection is redundant when some LiDAR-only
detection overlaps it at or above an IoU threshold. The redundancy ratio is
the redundant fraction of the baseline set. Distance pruning drops LiDAR
boxes closer than a threshold; the lost ratio then measures how much of the
baseline loses its match. A Welch t-test compares ego distances between
high- and low-redundancy groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .geometry import Box3D, Cuboid3D, centroid_distance, iou3d


@dataclass(frozen=True)
class Matching:
    """Greedy one-to-one assignment between two detection sets.

    ``pairs`` holds ``(base_index, lidar_index, iou)`` triples in assignment
    order (descending IoU, ties by index).
    """

    pairs: tuple[tuple[int, int, float], ...]
    unmatched_base: tuple[int, ...]
    unmatched_lidar: tuple[int, ...]


@dataclass(frozen=True)
class DistanceSweepRow:
    """One distance threshold: boxes removed and baseline match loss."""

    t_dist: float
    pruned_count: int
    lost_ratio: float


def _check_theta(theta: float) -> None:
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must be in (0, 1], got {theta}")


def match_boxes(base: Sequence[Cuboid3D], lidar: Sequence[Cuboid3D],
                theta: float) -> Matching:
    """Greedily match detections across modalities.

    Candidate pairs with IoU >= ``theta`` are taken best-first; each box is
    used at most once. Deterministic for equal IoUs via index order.
    """
    _check_theta(theta)
    candidates = []
    for bi, b in enumerate(base):
        for li, l in enumerate(lidar):
            overlap = iou3d(b, l)
            if overlap >= theta:
                candidates.append((-overlap, bi, li))
    candidates.sort()
    used_base: set[int] = set()
    used_lidar: set[int] = set()
    pairs = []
    for neg, bi, li in candidates:
        if bi in used_base or li in used_lidar:
            continue
        used_base.add(bi)
        used_lidar.add(li)
        pairs.append((bi, li, -neg))
    return Matching(
        tuple(pairs),
        tuple(i for i in range(len(base)) if i not in used_base),
        tuple(i for i in range(len(lidar)) if i not in used_lidar),
    )


def redundancy_ratio(base: Sequence[Cuboid3D], lidar: Sequence[Cuboid3D],
                     theta: float) -> float:
    """Fraction of baseline boxes with at least one LiDAR overlap >= theta.

    Existence counting: one LiDAR box may cover several baseline boxes.
    Undefined (raises) for an empty baseline set.
    """
    _check_theta(theta)
    if not base:
        raise ValueError("redundancy ratio undefined for an empty baseline set")
    covered = 0
    for b in base:
        for l in lidar:
            if iou3d(b, l) >= theta:
                covered += 1
                break
    return covered / len(base)


def distance_prune(lidar: Sequence[Box3D], t_dist: float) -> list[Box3D]:
    """Keep the boxes whose centroid distance is at least ``t_dist`` meters."""
    if t_dist < 0.0:
        raise ValueError(f"t_dist must be nonnegative, got {t_dist}")
    return [b for b in lidar if centroid_distance(b) >= t_dist]


def lost_ratio(base: Sequence[Cuboid3D], pruned: Sequence[Cuboid3D],
               theta: float) -> float:
    """Fraction of baseline boxes left without a match by a pruned set."""
    _check_theta(theta)
    if not base:
        raise ValueError("lost ratio undefined for an empty baseline set")
    return 1.0 - redundancy_ratio(base, pruned, theta)


def sweep_distance(base: Sequence[Cuboid3D], lidar: Sequence[Box3D],
                   theta: float, thresholds: Sequence[float]
                   ) -> list[DistanceSweepRow]:
    """Distance-prune at each threshold and measure the baseline loss."""
    if not thresholds:
        raise ValueError("sweep needs at least one distance threshold")
    rows = []
    for t in thresholds:
        pruned = distance_prune(lidar, t)
        rows.append(DistanceSweepRow(
            t_dist=t,
            pruned_count=len(lidar) - len(pruned),
            lost_ratio=lost_ratio(base, pruned, theta),
        ))
    return rows


# --------------------------------------------------------------------------
# Welch's t-test

_BETA_TOL = 1e-12
_BETA_MAX_ITER = 500


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETA_TOL:
            return h
    raise RuntimeError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def _betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # the continued fraction converges fast only on one side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _student_t_two_sided_p(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t with ``df`` degrees."""
    if df <= 0.0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return _betainc(df / 2.0, 0.5, x)


def welch_t_test(a: Sequence[float], b: Sequence[float]
                 ) -> tuple[float, float, float]:
    """Welch's unequal-variance t-test.

    Returns ``(t, df, p)`` with the Welch-Satterthwaite degrees of freedom
    and the two-sided p-value. Each sample needs at least two values, and at
    least one sample must have nonzero variance.
    """
    na = len(a)
    nb = len(b)
    if na < 2 or nb < 2:
        raise ValueError("each sample needs at least two values")
    mean_a = sum(a) / na
    mean_b = sum(b) / nb
    var_a = sum((v - mean_a) ** 2 for v in a) / (na - 1)
    var_b = sum((v - mean_b) ** 2 for v in b) / (nb - 1)
    if var_a == 0.0 and var_b == 0.0:
        raise ValueError("both samples have zero variance, t undefined")
    sa = var_a / na
    sb = var_b / nb
    se2 = sa + sb
    t = (mean_a - mean_b) / math.sqrt(se2)
    df = se2 * se2 / (sa * sa / (na - 1) + sb * sb / (nb - 1))
    return t, df, _student_t_two_sided_p(t, df)
