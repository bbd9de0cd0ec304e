"""Dataset schema, parsing and emission.

The canonical on-disk form is one JSON document per scene:

.. code-block:: text

    {
      "scene_id": "...",
      "class_map": ["car", "pedestrian", ...],          # index = class id
      "cameras": [
        {"name": "CAM_FRONT",
         "intrinsics": {"fx", "fy", "cx", "cy", "width", "height"},
         "extrinsics": {"rotation": [w, x, y, z],       # camera -> ego
                        "translation": [x, y, z]}}      # meters, ego frame
      ],
      "frames": [
        {"timestamp_ns": 0,
         "annotations": [
           {"track_id": "...", "category": "...",
            "cuboid": {"center": [x, y, z], "size": [l, w, h], "yaw": r},
            "boxes2d": {"CAM_FRONT": {"x0", "y0", "x1", "y1"}}}
         ],
         "detection_sets": {"fusion_baseline": [
            {"center": [x, y, z], "size": [l, w, h], "yaw": r, "score": s}
         ]}}
      ]
    }

``cuboid``, ``boxes2d`` and ``detection_sets`` are optional; an annotation
must carry a cuboid, native 2D boxes, or both. A dataset directory holds one
such file per scene; ``parse(write(dataset))`` round-trips every field
bit-exactly.

Grayscale images use binary PGM (P5, maxval 255). Label emission writes one
text file per frame and camera in the normalized ``class x y w h`` format.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from .geometry import Box2D, Box3D, CameraModel, Cuboid3D, project_cuboid

LABEL_SOURCES = ("native-2d", "projected-3d")


class ParseError(ValueError):
    """Raised when an input document cannot be decoded at all."""


class ValidationError(ValueError):
    """Raised when a decoded document violates the schema contract."""


@dataclass(frozen=True)
class Annotation:
    """One object instance in one frame."""

    track_id: str
    category: str
    cuboid: Cuboid3D | None = None
    boxes2d: dict[str, Box2D] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.cuboid is None and not self.boxes2d:
            raise ValidationError(
                f"annotation {self.track_id!r}: needs a cuboid or native 2D boxes"
            )


@dataclass(frozen=True)
class Frame:
    timestamp_ns: int
    annotations: tuple[Annotation, ...] = ()
    detection_sets: dict[str, tuple[Box3D, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class Scene:
    scene_id: str
    cameras: tuple[CameraModel, ...]
    frames: tuple[Frame, ...]

    @cached_property
    def camera_map(self) -> dict[str, CameraModel]:
        return {c.name: c for c in self.cameras}


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of scenes sharing one class map."""

    scenes: tuple[Scene, ...]
    class_map: dict[str, int]

    def scene(self, scene_id: str) -> Scene:
        for s in self.scenes:
            if s.scene_id == scene_id:
                return s
        raise KeyError(scene_id)


class GrayImage:
    """8-bit grayscale image; pixels are a ``(height, width)`` uint8 array."""

    __slots__ = ("pixels",)

    def __init__(self, pixels: Any, width: int | None = None, height: int | None = None):
        arr = np.asarray(pixels, dtype=np.uint8)
        if arr.ndim == 1:
            if width is None or height is None:
                raise ValueError("flat pixel data needs explicit width and height")
            if arr.size != width * height:
                raise ValueError(
                    f"pixel count {arr.size} does not match {width}x{height}"
                )
            arr = arr.reshape(height, width)
        elif arr.ndim != 2:
            raise ValueError(f"expected 2D pixel data, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("image must be non-empty")
        self.pixels = arr

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __repr__(self) -> str:
        return f"GrayImage({self.width}x{self.height})"


def parse_pgm(data: bytes) -> GrayImage:
    """Decode a binary PGM (magic ``P5``, maxval 255).

    Header comments (``#`` to end of line) are allowed. Anything else, wrong
    magic, other maxvals, or a short or over-long pixel payload, is a
    ``ParseError``.
    """
    if not data.startswith(b"P5"):
        raise ParseError("not a binary PGM: expected magic 'P5'")
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] not in (0x0A, 0x0D):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise ParseError(f"bad PGM header token {token!r}")
        fields.append(int(token))
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise ParseError("PGM header not terminated by whitespace")
    pos += 1
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise ParseError(f"bad PGM dimensions {width}x{height}")
    if maxval != 255:
        raise ParseError(f"unsupported PGM maxval {maxval}, only 255 is accepted")
    payload = data[pos:]
    expected = width * height
    if len(payload) < expected:
        raise ParseError(
            f"truncated PGM payload: {len(payload)} bytes, expected {expected}"
        )
    if len(payload) > expected:
        raise ParseError(
            f"trailing bytes after PGM payload: {len(payload) - expected}"
        )
    return GrayImage(np.frombuffer(payload, dtype=np.uint8), width=width, height=height)


def serialize_pgm(img: GrayImage) -> bytes:
    """Encode an image as binary PGM; inverse of :func:`parse_pgm`."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


# --------------------------------------------------------------------------
# canonical schema parsing


def _ctx_get(obj: Mapping[str, Any], key: str, ctx: str) -> Any:
    if key not in obj:
        raise ParseError(f"{ctx}: missing required field {key!r}")
    return obj[key]


def _vec(value: Any, n: int, ctx: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ParseError(f"{ctx}: expected a {n}-vector, got {value!r}")
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{ctx}: non-numeric vector entry ({exc})") from None


def _parse_camera(obj: Mapping[str, Any], ctx: str) -> CameraModel:
    name = _ctx_get(obj, "name", ctx)
    intr = _ctx_get(obj, "intrinsics", f"{ctx} camera {name!r}")
    extr = _ctx_get(obj, "extrinsics", f"{ctx} camera {name!r}")
    c = f"{ctx} camera {name!r}"
    try:
        return CameraModel(
            name=name,
            fx=float(_ctx_get(intr, "fx", c)),
            fy=float(_ctx_get(intr, "fy", c)),
            cx=float(_ctx_get(intr, "cx", c)),
            cy=float(_ctx_get(intr, "cy", c)),
            width=int(_ctx_get(intr, "width", c)),
            height=int(_ctx_get(intr, "height", c)),
            rotation=_vec(_ctx_get(extr, "rotation", c), 4, c),
            translation=_vec(_ctx_get(extr, "translation", c), 3, c),
        )
    except ValueError as exc:
        if isinstance(exc, (ParseError, ValidationError)):
            raise
        raise ValidationError(f"{c}: {exc}") from None


def _parse_cuboid(obj: Mapping[str, Any], ctx: str) -> Cuboid3D:
    try:
        return Cuboid3D(
            center=_vec(_ctx_get(obj, "center", ctx), 3, ctx),
            size=_vec(_ctx_get(obj, "size", ctx), 3, ctx),
            yaw=float(_ctx_get(obj, "yaw", ctx)),
        )
    except ValueError as exc:
        if isinstance(exc, (ParseError, ValidationError)):
            raise
        raise ValidationError(f"{ctx}: {exc}") from None


def _parse_detection(obj: Mapping[str, Any], ctx: str) -> Box3D:
    try:
        return Box3D(
            center=_vec(_ctx_get(obj, "center", ctx), 3, ctx),
            size=_vec(_ctx_get(obj, "size", ctx), 3, ctx),
            yaw=float(_ctx_get(obj, "yaw", ctx)),
            score=float(_ctx_get(obj, "score", ctx)),
        )
    except ValueError as exc:
        if isinstance(exc, (ParseError, ValidationError)):
            raise
        raise ValidationError(f"{ctx}: {exc}") from None


def _parse_annotation(obj: Mapping[str, Any], camera_names: frozenset[str],
                      class_map: Mapping[str, int], ctx: str) -> Annotation:
    track_id = _ctx_get(obj, "track_id", ctx)
    category = _ctx_get(obj, "category", ctx)
    c = f"{ctx} annotation {track_id!r}"
    if category not in class_map:
        raise ValidationError(f"{c}: category {category!r} not in the class map")
    cuboid = None
    if obj.get("cuboid") is not None:
        cuboid = _parse_cuboid(obj["cuboid"], c)
    boxes2d: dict[str, Box2D] = {}
    for cam_name, box in (obj.get("boxes2d") or {}).items():
        if cam_name not in camera_names:
            raise ValidationError(f"{c}: 2D box names unknown camera {cam_name!r}")
        bc = f"{c} box in {cam_name!r}"
        try:
            parsed = Box2D(
                float(_ctx_get(box, "x0", bc)),
                float(_ctx_get(box, "y0", bc)),
                float(_ctx_get(box, "x1", bc)),
                float(_ctx_get(box, "y1", bc)),
            )
        except ValueError as exc:
            if isinstance(exc, (ParseError, ValidationError)):
                raise
            raise ValidationError(f"{bc}: {exc}") from None
        if parsed.area <= 0.0:
            raise ValidationError(f"{bc}: native box must have positive area")
        boxes2d[cam_name] = parsed
    if cuboid is None and not boxes2d:
        raise ValidationError(f"{c}: needs a cuboid or native 2D boxes")
    return Annotation(track_id=track_id, category=category, cuboid=cuboid, boxes2d=boxes2d)


def _parse_scene(doc: Any, class_map_out: dict[str, int] | None, ctx: str) -> tuple[Scene, dict[str, int]]:
    if not isinstance(doc, Mapping):
        raise ParseError(f"{ctx}: top level must be an object")
    scene_id = _ctx_get(doc, "scene_id", ctx)
    ctx = f"{ctx} scene {scene_id!r}"

    classes = _ctx_get(doc, "class_map", ctx)
    if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
        raise ParseError(f"{ctx}: class_map must be a list of category names")
    if len(set(classes)) != len(classes):
        raise ValidationError(f"{ctx}: duplicate category in class_map")
    class_map = {name: i for i, name in enumerate(classes)}
    if class_map_out is not None and class_map != class_map_out:
        raise ValidationError(f"{ctx}: class_map differs from the first scene's")

    cameras = tuple(
        _parse_camera(c, ctx) for c in _ctx_get(doc, "cameras", ctx)
    )
    names = [c.name for c in cameras]
    if len(set(names)) != len(names):
        raise ValidationError(f"{ctx}: duplicate camera name")
    camera_names = frozenset(names)

    raw_frames = _ctx_get(doc, "frames", ctx)
    if not raw_frames:
        raise ValidationError(f"{ctx}: a scene needs at least one frame")
    frames = []
    prev_ts = None
    for fobj in raw_frames:
        ts = _ctx_get(fobj, "timestamp_ns", ctx)
        if not isinstance(ts, int):
            raise ParseError(f"{ctx}: timestamp_ns must be an integer, got {ts!r}")
        fctx = f"{ctx} frame {ts}"
        if prev_ts is not None and ts <= prev_ts:
            raise ValidationError(f"{fctx}: timestamps must be strictly increasing")
        prev_ts = ts
        annotations = []
        seen_tracks = set()
        for aobj in fobj.get("annotations", []):
            ann = _parse_annotation(aobj, camera_names, class_map, fctx)
            if ann.track_id in seen_tracks:
                raise ValidationError(
                    f"{fctx}: duplicate track_id {ann.track_id!r}"
                )
            seen_tracks.add(ann.track_id)
            annotations.append(ann)
        detection_sets = {}
        for set_name, records in (fobj.get("detection_sets") or {}).items():
            dctx = f"{fctx} detection set {set_name!r}"
            detection_sets[set_name] = tuple(
                _parse_detection(r, dctx) for r in records
            )
        frames.append(Frame(ts, tuple(annotations), detection_sets))
    return Scene(scene_id, cameras, tuple(frames)), class_map


def parse_dataset(path: str | Path) -> Dataset:
    """Load a dataset from a scene file or a directory of scene files.

    A directory is read as all ``*.json`` files in name order. Scenes must
    agree on the class map and have unique scene ids.
    """
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.json"))
        if not files:
            raise ValidationError(f"{p}: no scene files (*.json) found")
    elif p.is_file():
        files = [p]
    else:
        raise ValidationError(f"{p}: no such file or directory")
    scenes = []
    class_map: dict[str, int] | None = None
    seen_ids = set()
    for f in files:
        try:
            doc = json.loads(f.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{f}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        scene, class_map = _parse_scene(doc, class_map, str(f))
        if scene.scene_id in seen_ids:
            raise ValidationError(f"{f}: duplicate scene_id {scene.scene_id!r}")
        seen_ids.add(scene.scene_id)
        scenes.append(scene)
    return Dataset(tuple(scenes), class_map or {})


def parse_detection_set(path: str | Path) -> tuple[Box3D, ...]:
    """Load a standalone detection-set file: a JSON array of box records."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, list):
        raise ParseError(f"{p}: expected a JSON array of detection records")
    return tuple(_parse_detection(r, f"{p} record {i}") for i, r in enumerate(doc))


# --------------------------------------------------------------------------
# canonical schema emission


def scene_to_dict(scene: Scene, class_map: Mapping[str, int]) -> dict[str, Any]:
    """The JSON-ready form of a scene; inverse of the parser."""
    by_id = sorted(class_map.items(), key=lambda kv: kv[1])
    return {
        "scene_id": scene.scene_id,
        "class_map": [name for name, _ in by_id],
        "cameras": [
            {
                "name": c.name,
                "intrinsics": {
                    "fx": c.fx, "fy": c.fy, "cx": c.cx, "cy": c.cy,
                    "width": c.width, "height": c.height,
                },
                "extrinsics": {
                    "rotation": list(c.rotation),
                    "translation": list(c.translation),
                },
            }
            for c in scene.cameras
        ],
        "frames": [
            {
                "timestamp_ns": f.timestamp_ns,
                "annotations": [
                    _annotation_to_dict(a) for a in f.annotations
                ],
                **(
                    {
                        "detection_sets": {
                            name: [
                                {
                                    "center": list(b.center),
                                    "size": list(b.size),
                                    "yaw": b.yaw,
                                    "score": b.score,
                                }
                                for b in boxes
                            ]
                            for name, boxes in f.detection_sets.items()
                        }
                    }
                    if f.detection_sets
                    else {}
                ),
            }
            for f in scene.frames
        ],
    }


def _annotation_to_dict(a: Annotation) -> dict[str, Any]:
    out: dict[str, Any] = {"track_id": a.track_id, "category": a.category}
    if a.cuboid is not None:
        out["cuboid"] = {
            "center": list(a.cuboid.center),
            "size": list(a.cuboid.size),
            "yaw": a.cuboid.yaw,
        }
    if a.boxes2d:
        out["boxes2d"] = {
            cam: {"x0": b.x0, "y0": b.y0, "x1": b.x1, "y1": b.y1}
            for cam, b in a.boxes2d.items()
        }
    return out


def write_dataset(dataset: Dataset, path: str | Path) -> list[Path]:
    """Write a dataset to disk; inverse of :func:`parse_dataset`.

    A path ending in ``.json`` (single-scene datasets only) writes one file;
    otherwise ``path`` is created as a directory with one file per scene.

    Returns:
        The written file paths, in scene order.
    """
    p = Path(path)
    if p.suffix == ".json":
        if len(dataset.scenes) != 1:
            raise ValueError("a single scene file can hold exactly one scene")
        targets = [(p, dataset.scenes[0])]
        p.parent.mkdir(parents=True, exist_ok=True)
    else:
        p.mkdir(parents=True, exist_ok=True)
        targets = [(p / f"{s.scene_id}.json", s) for s in dataset.scenes]
    written = []
    for target, scene in targets:
        doc = scene_to_dict(scene, dataset.class_map)
        target.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
        written.append(target)
    return written


# --------------------------------------------------------------------------
# label emission


def resolve_box(annotation: Annotation, cam: CameraModel, source: str
                ) -> tuple[Box2D, Box2D] | None:
    """The (full, clipped) 2D box of an annotation in one camera.

    ``native-2d`` reads the stored 2D box and clips it to the image;
    ``projected-3d`` projects the cuboid. ``None`` when the annotation has
    no observation in this camera under the chosen source.
    """
    if source == "native-2d":
        box = annotation.boxes2d.get(cam.name)
        if box is None:
            return None
        return box, box.clip(cam.width, cam.height)
    if source == "projected-3d":
        if annotation.cuboid is None:
            return None
        return project_cuboid(annotation.cuboid, cam)
    raise ValueError(f"unknown label source {source!r}, expected one of {LABEL_SOURCES}")


def emit_labels(dataset: Dataset, kept: set[tuple[str, int, str, str]],
                out_dir: str | Path, source: str = "native-2d") -> list[Path]:
    """Write one normalized label file per frame and camera.

    ``kept`` holds ``(scene_id, timestamp_ns, camera, track_id)`` keys; every
    key must resolve to a box under ``source``. Lines are
    ``class_id xc yc w h`` with center/size normalized by the image
    dimensions, six decimals, LF endings, sorted by track id. Frames with no
    kept boxes in a camera still get their (empty) file.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    kept_index: dict[tuple[str, int, str], list[str]] = {}
    for scene_id, ts, camera, track_id in kept:
        kept_index.setdefault((scene_id, ts, camera), []).append(track_id)
    for scene in dataset.scenes:
        for frame in scene.frames:
            by_track = {a.track_id: a for a in frame.annotations}
            for cam in scene.cameras:
                tracks = kept_index.get((scene.scene_id, frame.timestamp_ns, cam.name), [])
                lines = []
                for track_id in sorted(tracks):
                    ann = by_track.get(track_id)
                    if ann is None:
                        raise ValidationError(
                            f"kept key names unknown track {track_id!r} in frame "
                            f"{frame.timestamp_ns} of scene {scene.scene_id!r}"
                        )
                    resolved = resolve_box(ann, cam, source)
                    if resolved is None or resolved[1].area <= 0.0:
                        raise ValidationError(
                            f"kept key ({scene.scene_id!r}, {frame.timestamp_ns}, "
                            f"{cam.name!r}, {track_id!r}) has no visible box under "
                            f"source {source!r}"
                        )
                    lines.append(_format_label(
                        dataset.class_map[ann.category], resolved[1], cam))
                target = out / f"{scene.scene_id}__{frame.timestamp_ns}__{cam.name}.txt"
                with open(target, "w", encoding="utf-8", newline="\n") as fh:
                    if lines:
                        fh.write("\n".join(lines) + "\n")
                written.append(target)
    return written


def _format_label(class_id: int, clipped: Box2D, cam: CameraModel) -> str:
    xc = (clipped.x0 + clipped.x1) / 2.0 / cam.width
    yc = (clipped.y0 + clipped.y1) / 2.0 / cam.height
    w = (clipped.x1 - clipped.x0) / cam.width
    h = (clipped.y1 - clipped.y0) / cam.height
    for v in (xc, yc, w, h):
        if not 0.0 <= v <= 1.0 or math.isnan(v):
            raise RuntimeError(
                f"normalized label value {v!r} escaped [0, 1]; clipping contract violated"
            )
    return f"{class_id} {xc:.6f} {yc:.6f} {w:.6f} {h:.6f}"
