"""Parsing, validation, serialization, and label emission."""

import copy
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import dataset_of, scene_with_boxes, two_overlapping_cameras
from redkit.geometry import Box2D, Cuboid3D
from redkit.ingest import (
    GrayImage,
    ParseError,
    ValidationError,
    emit_labels,
    parse_dataset,
    parse_detection_set,
    parse_pgm,
    resolve_box,
    scene_to_dict,
    serialize_pgm,
    write_dataset,
)
from redkit.synth import SynthParams, camera_at_yaw, generate_scene

# ------------------------------------------------------------------- PGM


def test_parse_pgm_two_pixel_image():
    img = parse_pgm(b"P5\n2 1\n255\n" + bytes([0, 255]))
    assert (img.width, img.height) == (2, 1)
    assert img.pixels[0, 0] == 0
    assert img.pixels[0, 1] == 255


def test_parse_pgm_allows_comments():
    img = parse_pgm(b"P5\n# a comment\n2 2\n255\n" + bytes(4))
    assert (img.width, img.height) == (2, 2)


def test_parse_pgm_rejects_ascii_variant():
    with pytest.raises(ParseError):
        parse_pgm(b"P2\n2 1\n255\n0 255\n")


def test_parse_pgm_rejects_other_maxval():
    with pytest.raises(ParseError):
        parse_pgm(b"P5\n2 1\n127\n" + bytes(2))


def test_parse_pgm_rejects_truncated_payload():
    with pytest.raises(ParseError):
        parse_pgm(b"P5\n4 4\n255\n" + bytes(15))


def test_parse_pgm_rejects_trailing_bytes():
    with pytest.raises(ParseError):
        parse_pgm(b"P5\n2 1\n255\n" + bytes(3))


def test_serialize_pgm_header():
    img = GrayImage(np.zeros((1, 2), dtype=np.uint8))
    assert serialize_pgm(img) == b"P5\n2 1\n255\n\x00\x00"


@st.composite
def small_images(draw):
    w = draw(st.integers(1, 64))
    h = draw(st.integers(1, 64))
    payload = draw(st.binary(min_size=w * h, max_size=w * h))
    return GrayImage(np.frombuffer(payload, dtype=np.uint8).reshape(h, w))


@given(small_images())
def test_pgm_round_trip(img):
    assert parse_pgm(serialize_pgm(img)) == img


# ------------------------------------------------------------- scene files


@pytest.fixture
def minimal_scene_dict():
    cams = two_overlapping_cameras()
    scene = scene_with_boxes(
        cams,
        [{"track-1": {"CAM_FRONT": Box2D(100.0, 100.0, 200.0, 200.0)}}],
        scene_id="scene-a",
    )
    return scene_to_dict(scene, {"car": 0})


def write_scene(tmp_path, doc, name="scene.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_parse_minimal_fixture(tmp_path, minimal_scene_dict):
    ds = parse_dataset(write_scene(tmp_path, minimal_scene_dict))
    assert len(ds.scenes) == 1
    scene = ds.scenes[0]
    assert scene.scene_id == "scene-a"
    assert len(scene.cameras) == 2
    assert len(scene.frames) == 1
    assert len(scene.frames[0].annotations) == 1
    assert ds.class_map == {"car": 0}


def test_unknown_camera_reference_is_named(tmp_path, minimal_scene_dict):
    doc = copy.deepcopy(minimal_scene_dict)
    ann = doc["frames"][0]["annotations"][0]
    ann["boxes2d"]["CAM_X"] = ann["boxes2d"].pop("CAM_FRONT")
    with pytest.raises(ValidationError, match="CAM_X"):
        parse_dataset(write_scene(tmp_path, doc))


def test_duplicate_track_in_frame_rejected(tmp_path, minimal_scene_dict):
    doc = copy.deepcopy(minimal_scene_dict)
    doc["frames"][0]["annotations"].append(
        copy.deepcopy(doc["frames"][0]["annotations"][0])
    )
    with pytest.raises(ValidationError, match="track"):
        parse_dataset(write_scene(tmp_path, doc))


def test_duplicate_scene_ids_rejected(tmp_path, minimal_scene_dict):
    write_scene(tmp_path, minimal_scene_dict, "a.json")
    write_scene(tmp_path, minimal_scene_dict, "b.json")
    with pytest.raises(ValidationError, match="scene-a"):
        parse_dataset(tmp_path)


def test_timestamps_must_increase(tmp_path, minimal_scene_dict):
    doc = copy.deepcopy(minimal_scene_dict)
    doc["frames"].append(copy.deepcopy(doc["frames"][0]))
    with pytest.raises(ValidationError, match="timestamp"):
        parse_dataset(write_scene(tmp_path, doc))


def test_annotation_needs_some_geometry(tmp_path, minimal_scene_dict):
    doc = copy.deepcopy(minimal_scene_dict)
    ann = doc["frames"][0]["annotations"][0]
    del ann["boxes2d"]
    with pytest.raises(ValidationError):
        parse_dataset(write_scene(tmp_path, doc))


def test_malformed_json_is_a_parse_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"scene_id": "x", ')
    with pytest.raises(ParseError):
        parse_dataset(path)


def test_empty_directory_rejected(tmp_path):
    with pytest.raises((ParseError, ValidationError)):
        parse_dataset(tmp_path)


def test_write_then_parse_round_trips(tmp_path):
    ds, _ = generate_scene(
        SynthParams(seed=21, n_objects=6, n_frames=3, drop_rate=0.25, detection_noise=0.1)
    )
    paths = write_dataset(ds, tmp_path)
    assert len(paths) == 1
    again = parse_dataset(tmp_path)
    assert again == ds


def test_round_trip_is_byte_stable(tmp_path):
    ds, _ = generate_scene(SynthParams(seed=4, n_objects=3))
    first = write_dataset(ds, tmp_path / "a")[0].read_bytes()
    second = write_dataset(parse_dataset(tmp_path / "a"), tmp_path / "b")[0].read_bytes()
    assert first == second


# ------------------------------------------------------------ label output


def read_lines(path):
    text = path.read_text()
    return [ln for ln in text.split("\n") if ln]


def test_full_image_box_label_line(tmp_path):
    cams = two_overlapping_cameras()
    scene = scene_with_boxes(
        cams, [{"t0": {"CAM_FRONT": Box2D(0.0, 0.0, 1600.0, 900.0)}}]
    )
    ds = dataset_of(scene, class_map={"car": 0})
    kept = {("scene-0", 0, "CAM_FRONT", "t0")}
    emit_labels(ds, kept, tmp_path)
    lines = read_lines(tmp_path / "scene-0__0__CAM_FRONT.txt")
    assert lines == ["0 0.500000 0.500000 1.000000 1.000000"]


def test_quarter_box_label_line(tmp_path):
    cams = two_overlapping_cameras()
    scene = scene_with_boxes(
        cams, [{"t0": {"CAM_FRONT": Box2D(400.0, 225.0, 800.0, 450.0)}}]
    )
    ds = dataset_of(scene, class_map={"car": 3, "truck": 0, "pedestrian": 1, "cyclist": 2})
    kept = {("scene-0", 0, "CAM_FRONT", "t0")}
    emit_labels(ds, kept, tmp_path)
    lines = read_lines(tmp_path / "scene-0__0__CAM_FRONT.txt")
    assert lines == ["3 0.375000 0.375000 0.250000 0.250000"]


def test_empty_label_files_are_emitted(tmp_path):
    cams = two_overlapping_cameras()
    scene = scene_with_boxes(
        cams, [{"t0": {"CAM_FRONT": Box2D(10.0, 10.0, 20.0, 20.0)}}]
    )
    ds = dataset_of(scene)
    paths = emit_labels(ds, set(), tmp_path)
    assert len(paths) == 2
    for path in paths:
        assert path.exists()
        assert path.read_text() == ""


def test_label_lines_are_five_normalized_fields(tmp_path):
    ds, _ = generate_scene(SynthParams(seed=9, n_objects=10, n_frames=2))
    all_keys = {
        (scene.scene_id, frame.timestamp_ns, cam, ann.track_id)
        for scene in ds.scenes
        for frame in scene.frames
        for ann in frame.annotations
        for cam in ann.boxes2d
    }
    paths = emit_labels(ds, all_keys, tmp_path)
    total = 0
    for path in paths:
        for line in read_lines(path):
            fields = line.split(" ")
            assert len(fields) == 5
            int(fields[0])
            for value in fields[1:]:
                assert 0.0 <= float(value) <= 1.0
            total += 1
    assert total == len(all_keys)


def test_labels_sorted_by_track_within_file(tmp_path):
    cams = two_overlapping_cameras()
    scene = scene_with_boxes(
        cams,
        [{
            "zz": {"CAM_FRONT": Box2D(30.0, 30.0, 40.0, 40.0)},
            "aa": {"CAM_FRONT": Box2D(10.0, 10.0, 20.0, 20.0)},
        }],
    )
    ds = dataset_of(scene)
    kept = {("scene-0", 0, "CAM_FRONT", "zz"), ("scene-0", 0, "CAM_FRONT", "aa")}
    emit_labels(ds, kept, tmp_path)
    lines = read_lines(tmp_path / "scene-0__0__CAM_FRONT.txt")
    assert len(lines) == 2
    a_center = (10.0 + 20.0) / 2 / 1600.0
    assert float(lines[0].split()[1]) == pytest.approx(a_center, abs=1e-6)


# --------------------------------------------------------- detection sets


def detection_file(tmp_path, payload):
    path = tmp_path / "detections.json"
    path.write_text(payload)
    return path


def test_parse_detection_set_singleton(tmp_path):
    doc = json.dumps(
        [{"center": [1.0, 2.0, 0.5], "size": [4.0, 2.0, 1.5], "yaw": 0.0, "score": 0.9}]
    )
    boxes = parse_detection_set(detection_file(tmp_path, doc))
    assert len(boxes) == 1
    box = boxes[0]
    assert box.center == (1.0, 2.0, 0.5)
    assert box.size == (4.0, 2.0, 1.5)
    assert box.score == 0.9


def test_parse_detection_set_rejects_bad_size(tmp_path):
    doc = json.dumps(
        [{"center": [0, 0, 0], "size": [-1.0, 2.0, 1.0], "yaw": 0.0, "score": 0.5}]
    )
    with pytest.raises(ValidationError):
        parse_detection_set(detection_file(tmp_path, doc))


def test_parse_detection_set_empty_is_valid(tmp_path):
    assert parse_detection_set(detection_file(tmp_path, "[]")) == ()


def test_parse_detection_set_needs_a_list(tmp_path):
    with pytest.raises((ParseError, ValidationError)):
        parse_detection_set(detection_file(tmp_path, '{"center": [0,0,0]}'))


# ------------------------------------------------------------- resolve_box


def test_resolve_box_native_source_clips_stored_box():
    cam = camera_at_yaw("CAM_FRONT", 0.0, 70.0)
    from redkit.ingest import Annotation

    ann = Annotation(
        track_id="t", category="car",
        boxes2d={"CAM_FRONT": Box2D(-10.0, 0.0, 10.0, 10.0)},
    )
    full, clipped = resolve_box(ann, cam, "native-2d")
    assert full.x0 == -10.0
    assert clipped.x0 == 0.0


def test_resolve_box_projected_source_uses_cuboid():
    cam = camera_at_yaw("CAM_FRONT", 0.0, 70.0)
    from redkit.ingest import Annotation

    ann = Annotation(track_id="t", category="car",
                     cuboid=Cuboid3D((10.0, 0.0, 0.0), (1.0, 1.0, 1.0), 0.0))
    full, clipped = resolve_box(ann, cam, "projected-3d")
    cx = (full.x0 + full.x1) / 2
    assert cx == pytest.approx(cam.cx, abs=1.0)


def test_resolve_box_missing_source_returns_none():
    cam = camera_at_yaw("CAM_FRONT", 0.0, 70.0)
    from redkit.ingest import Annotation

    ann = Annotation(track_id="t", category="car",
                     cuboid=Cuboid3D((10.0, 0.0, 0.0), (1.0, 1.0, 1.0), 0.0))
    assert resolve_box(ann, cam, "native-2d") is None


def test_resolve_box_rejects_unknown_source():
    cam = camera_at_yaw("CAM_FRONT", 0.0, 70.0)
    from redkit.ingest import Annotation

    ann = Annotation(track_id="t", category="car",
                     boxes2d={"CAM_FRONT": Box2D(0.0, 0.0, 10.0, 10.0)})
    with pytest.raises(ValueError):
        resolve_box(ann, cam, "mystery")
