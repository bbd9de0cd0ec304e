"""Shared fixture builders for the redkit test suite."""

import pytest

from redkit.geometry import Box2D, CameraModel
from redkit.ingest import Annotation, Dataset, Frame, Scene
from redkit.synth import camera_at_yaw, nuscenes_like_cameras


@pytest.fixture(scope="session")
def ring():
    """The six-camera surround rig used throughout the suite."""
    return nuscenes_like_cameras()


@pytest.fixture
def front_cam():
    return camera_at_yaw("CAM_FRONT", 0.0, 70.0)


def two_overlapping_cameras():
    """A front pair whose view arcs share 15 degrees."""
    return (
        camera_at_yaw("CAM_FRONT", 0.0, 70.0),
        camera_at_yaw("CAM_FRONT_RIGHT", -55.0, 70.0),
    )


def scene_with_boxes(cameras, frames_spec, scene_id="scene-0"):
    """Build a Scene from a list of per-frame {track: {camera: Box2D}} maps.

    Timestamps are assigned as consecutive multiples of 10^8 ns. Categories
    default to "car".
    """
    frames = []
    for fi, spec in enumerate(frames_spec):
        annotations = []
        for track_id in sorted(spec):
            boxes = dict(spec[track_id])
            annotations.append(
                Annotation(track_id=track_id, category="car", boxes2d=boxes)
            )
        frames.append(
            Frame(timestamp_ns=fi * 100_000_000, annotations=tuple(annotations))
        )
    return Scene(scene_id=scene_id, cameras=tuple(cameras), frames=tuple(frames))


def dataset_of(*scenes, class_map=None):
    if class_map is None:
        class_map = {"car": 0, "truck": 1, "pedestrian": 2, "cyclist": 3}
    return Dataset(scenes=tuple(scenes), class_map=class_map)


def box_with_bcs(fraction, cam: CameraModel, row=100.0):
    """A 10px-wide box hanging off the left image edge.

    After clipping to the camera bounds exactly ``fraction`` of its area
    survives, so the BCS of the stored (full, clipped) pair equals
    ``fraction`` up to float rounding of ``10 * fraction``.
    """
    width = 10.0
    x1 = width * fraction
    return Box2D(x1 - width, row, x1, row + 10.0)
