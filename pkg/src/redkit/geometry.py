"""Metric geometry for multi-camera rigs.

Pinhole projection of 3D cuboids, image-boundary clipping, box completeness
scoring, IoU in two and three dimensions, and viewing-angle conversions.

Coordinate conventions, fixed package-wide:

* ego frame: x forward, y left, z up (right-handed); yaw is measured about
  +z, counterclockwise, with 0 degrees straight ahead.
* camera frame: z forward along the optical axis, x right, y down.
* camera extrinsics: a unit quaternion ``(w, x, y, z)`` rotating camera-frame
  vectors into the ego frame, plus the camera origin in ego coordinates.
* angles in public interfaces are degrees; internals work in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

# Corners with camera-frame depth at or below this value (meters) are dropped
# before hull computation.
NEAR_PLANE_M = 0.1


def quat_mul(a: tuple[float, float, float, float],
             b: tuple[float, float, float, float]) -> tuple[float, float, float, float]:
    """Hamilton product ``a * b`` of two ``(w, x, y, z)`` quaternions."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_about_z(angle_deg: float) -> tuple[float, float, float, float]:
    """Quaternion rotating by ``angle_deg`` about the ego +z (up) axis."""
    half = math.radians(angle_deg) / 2.0
    return (math.cos(half), 0.0, 0.0, math.sin(half))


def quat_to_matrix(q: tuple[float, float, float, float]
                   ) -> tuple[tuple[float, float, float], ...]:
    """Rotation matrix (row tuples) equivalent to unit quaternion ``q``."""
    w, x, y, z = q
    return (
        (1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)),
        (2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)),
        (2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)),
    )


def normalize_deg(angle: float) -> float:
    """Map an angle in degrees into ``[-180, 180)``."""
    return (angle + 180.0) % 360.0 - 180.0


@dataclass(frozen=True)
class Box2D:
    """Axis-aligned pixel box.

    A full (unclipped) box must have positive area; a box produced by
    :meth:`clip` may be degenerate (zero width or height) when the original
    lies entirely outside the image. ``clipped_to`` records the image bounds
    used for clipping, ``None`` for full boxes.
    """

    x0: float
    y0: float
    x1: float
    y1: float
    clipped_to: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ValueError(f"inverted box: ({self.x0}, {self.y0}, {self.x1}, {self.y1})")

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    def clip(self, width: int, height: int) -> "Box2D":
        """Intersect with the image rectangle ``[0, width] x [0, height]``.

        An empty intersection collapses onto the nearest image edge and has
        zero area.
        """
        w = float(width)
        h = float(height)
        return Box2D(
            min(max(self.x0, 0.0), w),
            min(max(self.y0, 0.0), h),
            min(max(self.x1, 0.0), w),
            min(max(self.y1, 0.0), h),
            clipped_to=(int(width), int(height)),
        )


@dataclass(frozen=True)
class Cuboid3D:
    """Oriented box in the ego frame.

    ``size`` is ``(length, width, height)``: length runs along the local +x
    axis at yaw 0, width along local +y, height along +z. ``yaw`` is radians
    about ego +z.
    """

    center: tuple[float, float, float]
    size: tuple[float, float, float]
    yaw: float

    def __post_init__(self) -> None:
        if any(s <= 0.0 for s in self.size):
            raise ValueError(f"cuboid size must be positive, got {self.size}")


@dataclass(frozen=True)
class Box3D(Cuboid3D):
    """Detected 3D box: a cuboid plus a confidence score in ``[0, 1]``."""

    score: float = 1.0

    def __post_init__(self) -> None:
        super().__post_init__()
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be within [0, 1], got {self.score}")


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera with a rigid mount in the ego frame."""

    name: str
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: tuple[float, float, float, float]
    translation: tuple[float, float, float]

    def __post_init__(self) -> None:
        if self.fx <= 0.0 or self.fy <= 0.0:
            raise ValueError(f"camera {self.name!r}: focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"camera {self.name!r}: image size must be positive")
        w, x, y, z = self.rotation
        norm = math.sqrt(w * w + x * x + y * y + z * z)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(
                f"camera {self.name!r}: rotation quaternion has norm {norm!r}, expected 1"
            )

    @cached_property
    def rot_matrix(self) -> tuple[tuple[float, float, float], ...]:
        """Camera-to-ego rotation matrix."""
        return quat_to_matrix(self.rotation)

    @cached_property
    def ego_to_cam(self) -> tuple[tuple[float, float, float], ...]:
        """Rows of the ego-to-camera rotation (transpose of :attr:`rot_matrix`)."""
        m = self.rot_matrix
        return (
            (m[0][0], m[1][0], m[2][0]),
            (m[0][1], m[1][1], m[2][1]),
            (m[0][2], m[1][2], m[2][2]),
        )


def cuboid_corners(cuboid: Cuboid3D) -> tuple[tuple[float, float, float], ...]:
    """The 8 corner vertices of a cuboid in the ego frame.

    Order: bottom face counterclockwise starting at local (+x, +y), then the
    top face in the same x/y order. The mean of the corners is the center.
    """
    cx, cy, cz = cuboid.center
    hl = 0.5 * cuboid.size[0]
    hw = 0.5 * cuboid.size[1]
    hh = 0.5 * cuboid.size[2]
    c = math.cos(cuboid.yaw)
    s = math.sin(cuboid.yaw)
    corners = []
    for dz in (-hh, hh):
        for lx, wy in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)):
            corners.append((cx + lx * c - wy * s, cy + lx * s + wy * c, cz + dz))
    return tuple(corners)


def project_cuboid(cuboid: Cuboid3D, cam: CameraModel
                   ) -> tuple[Box2D, Box2D] | None:
    """Project a cuboid into a camera.

    Corners are transformed into the camera frame; those at or behind the
    near plane (camera z <= ``NEAR_PLANE_M``) are dropped. If no corner
    survives, the cuboid is not visible and ``None`` is returned. Otherwise
    the full box is the axis-aligned hull of the surviving pinhole
    projections (it may extend beyond the image) and the clipped box is its
    intersection with the image rectangle.

    Returns:
        ``(full, clipped)`` boxes, or ``None`` when entirely behind the
        near plane.
    """
    r0, r1, r2 = cam.ego_to_cam
    tx, ty, tz = cam.translation
    fx, fy, cx, cy = cam.fx, cam.fy, cam.cx, cam.cy
    umin = math.inf
    vmin = math.inf
    umax = -math.inf
    vmax = -math.inf
    survivors = 0
    for px, py, pz in cuboid_corners(cuboid):
        dx = px - tx
        dy = py - ty
        dz = pz - tz
        zc = r2[0] * dx + r2[1] * dy + r2[2] * dz
        if zc <= NEAR_PLANE_M:
            continue
        xc = r0[0] * dx + r0[1] * dy + r0[2] * dz
        yc = r1[0] * dx + r1[1] * dy + r1[2] * dz
        u = cx + fx * xc / zc
        v = cy + fy * yc / zc
        if u < umin:
            umin = u
        if u > umax:
            umax = u
        if v < vmin:
            vmin = v
        if v > vmax:
            vmax = v
        survivors += 1
    if survivors == 0:
        return None
    full = Box2D(umin, vmin, umax, vmax)
    return full, full.clip(cam.width, cam.height)


def bcs(full: Box2D, clipped: Box2D) -> float:
    """Box completeness score: clipped area over full area.

    1 means the box survived clipping intact, 0 means it lies entirely
    outside the image. The full box must have positive area.
    """
    area_full = full.area
    if area_full <= 0.0:
        raise ValueError("full box has zero area, completeness undefined")
    return clipped.area / area_full


def iou2d(a: Box2D, b: Box2D) -> float:
    """Intersection over union of two axis-aligned pixel boxes."""
    ix = min(a.x1, b.x1) - max(a.x0, b.x0)
    iy = min(a.y1, b.y1) - max(a.y0, b.y0)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def _bev_footprint(box: Cuboid3D) -> list[tuple[float, float]]:
    """Ground-plane footprint corners, counterclockwise."""
    cx, cy = box.center[0], box.center[1]
    hl = 0.5 * box.size[0]
    hw = 0.5 * box.size[1]
    c = math.cos(box.yaw)
    s = math.sin(box.yaw)
    return [
        (cx + hl * c - hw * s, cy + hl * s + hw * c),
        (cx - hl * c - hw * s, cy - hl * s + hw * c),
        (cx - hl * c + hw * s, cy - hl * s - hw * c),
        (cx + hl * c + hw * s, cy + hl * s - hw * c),
    ]


def _clip_convex(subject: list[tuple[float, float]],
                 clip: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Sutherland-Hodgman clip of a convex CCW subject by a convex CCW polygon."""
    output = subject
    m = len(clip)
    for i in range(m):
        if not output:
            return []
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % m]
        ex = bx - ax
        ey = by - ay
        # interior is to the left of the directed clip edge; boundary counts
        side = [ex * (py - ay) - ey * (px - ax) for px, py in output]
        result: list[tuple[float, float]] = []
        k = len(output)
        for j in range(k):
            cur = output[j]
            prev = output[j - 1]
            if side[j] >= 0.0:
                if side[j - 1] < 0.0:
                    result.append(_edge_intersection(prev, cur, side[j - 1], side[j]))
                result.append(cur)
            elif side[j - 1] >= 0.0:
                result.append(_edge_intersection(prev, cur, side[j - 1], side[j]))
        output = result
    return output


def _edge_intersection(p: tuple[float, float], q: tuple[float, float],
                       sp: float, sq: float) -> tuple[float, float]:
    # sp and sq are the endpoints' signed distances to the clip edge. The
    # pair straddles the edge (one >= 0, one < 0), so sp - sq cannot be
    # zero even when the segment runs parallel to the edge to within
    # rounding, which the direction cross product form fails on.
    t = sp / (sp - sq)
    px, py = p
    qx, qy = q
    return (px + t * (qx - px), py + t * (qy - py))


def _polygon_area(points: list[tuple[float, float]]) -> float:
    k = len(points)
    acc = 0.0
    for i in range(k):
        x0, y0 = points[i]
        x1, y1 = points[(i + 1) % k]
        acc += x0 * y1 - x1 * y0
    return 0.5 * abs(acc)


def iou3d(a: Cuboid3D, b: Cuboid3D) -> float:
    """Intersection over union of two yaw-rotated cuboids.

    The ground-plane intersection is computed by clipping one footprint
    polygon against the other; the intersection volume is that area times
    the vertical extent overlap. Disjoint boxes score 0; identical boxes
    score exactly 1.
    """
    za0 = a.center[2] - 0.5 * a.size[2]
    za1 = a.center[2] + 0.5 * a.size[2]
    zb0 = b.center[2] - 0.5 * b.size[2]
    zb1 = b.center[2] + 0.5 * b.size[2]
    dz = min(za1, zb1) - max(za0, zb0)
    if dz <= 0.0:
        return 0.0
    fa = _bev_footprint(a)
    fb = _bev_footprint(b)
    inter_poly = _clip_convex(fa, fb)
    if len(inter_poly) < 3:
        return 0.0
    inter_area = _polygon_area(inter_poly)
    if inter_area <= 0.0:
        return 0.0
    # volumes from the same area/extent expressions as the intersection, so
    # identical inputs cancel exactly to 1
    vol_a = _polygon_area(fa) * (za1 - za0)
    vol_b = _polygon_area(fb) * (zb1 - zb0)
    inter = inter_area * dz
    union = vol_a + vol_b - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def centroid_distance(box: Cuboid3D) -> float:
    """Euclidean distance from the ego origin to the mean of the 8 corners."""
    sx = 0.0
    sy = 0.0
    sz = 0.0
    for x, y, z in cuboid_corners(box):
        sx += x
        sy += y
        sz += z
    sx /= 8.0
    sy /= 8.0
    sz /= 8.0
    return math.sqrt(sx * sx + sy * sy + sz * sz)


def horizontal_fov(cam: CameraModel) -> float:
    """Horizontal field of view in degrees: ``2 * atan(width / (2 * fx))``."""
    return math.degrees(2.0 * math.atan(cam.width / (2.0 * cam.fx)))


def yaw_center(cam: CameraModel) -> float:
    """Yaw of the optical axis in the ego frame, degrees in ``[-180, 180)``.

    The camera +z axis is mapped into the ego frame and projected onto the
    ground plane. A vertically mounted camera (ground projection shorter
    than 1e-6) has no defined yaw and raises ``ValueError``.
    """
    m = cam.rot_matrix
    ax = m[0][2]
    ay = m[1][2]
    if math.hypot(ax, ay) <= 1e-6:
        raise ValueError(f"camera {cam.name!r}: optical axis is vertical, yaw undefined")
    return normalize_deg(math.degrees(math.atan2(ay, ax)))


def angle_to_column(phi_deg: float, cam: CameraModel) -> int:
    """Pixel column of a bearing ``phi_deg`` relative to the optical axis.

    Positive angles map right of the principal point:
    ``column = cx + fx * tan(phi)``, rounded and clamped to
    ``[0, width - 1]``. The bearing must lie strictly inside the horizontal
    field of view.
    """
    if abs(phi_deg) >= horizontal_fov(cam) / 2.0:
        raise ValueError(
            f"bearing {phi_deg} deg outside the field of view of camera {cam.name!r}"
        )
    col = column_of_angle(phi_deg, cam)
    return min(max(round(col), 0), cam.width - 1)


def column_of_angle(phi_deg: float, cam: CameraModel) -> float:
    """Unrounded, unclamped column for a camera-relative bearing.

    Strictly monotone in ``phi_deg`` on ``(-90, 90)`` degrees; exposed for
    callers that need the continuous mapping behind :func:`angle_to_column`.
    """
    return cam.cx + cam.fx * math.tan(math.radians(phi_deg))
