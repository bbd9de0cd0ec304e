"""redkit: measure and prune annotation redundancy in multi-camera and
camera-LiDAR perception datasets.

The library models a surround camera rig as arcs on a viewing circle, groups
repeated annotations of one object across overlapping cameras, scores each
2D box by how much of it survives image clipping, and prunes the heavily
clipped duplicates. A parallel set of tools measures cross-modal redundancy
between camera-or-fusion 3D detections and LiDAR-only detections, and how
distance-based LiDAR filtering erodes it.
"""

from .geometry import (
    Box2D,
    Box3D,
    CameraModel,
    Cuboid3D,
    angle_to_column,
    bcs,
    centroid_distance,
    cuboid_corners,
    horizontal_fov,
    iou2d,
    iou3d,
    project_cuboid,
    yaw_center,
)
from .ingest import (
    Annotation,
    Dataset,
    Frame,
    GrayImage,
    ParseError,
    Scene,
    ValidationError,
    emit_labels,
    parse_dataset,
    parse_detection_set,
    parse_pgm,
    serialize_pgm,
    write_dataset,
)
from .multimodal import (
    DistanceSweepRow,
    Matching,
    distance_prune,
    lost_ratio,
    match_boxes,
    redundancy_ratio,
    sweep_distance,
    welch_t_test,
)
from .multisource import (
    Observation,
    PruneDecision,
    RedundancyGroup,
    SweepRow,
    cosine_similarity,
    crop_overlap,
    form_groups,
    prune_dataset,
    prune_group,
    sweep_tau,
)
from .overlap import (
    OverlapGraph,
    OverlapPair,
    ViewArc,
    build_overlap_graph,
    overlap_arc,
    preset_nuscenes,
    view_arc,
)
from .synth import (
    GroundTruth,
    SynthParams,
    Xorshift64Star,
    brute_force_prune,
    brute_force_rr,
    camera_at_yaw,
    generate_scene,
    nuscenes_like_cameras,
)

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "Box2D",
    "Box3D",
    "CameraModel",
    "Cuboid3D",
    "Dataset",
    "DistanceSweepRow",
    "Frame",
    "GrayImage",
    "GroundTruth",
    "Matching",
    "Observation",
    "OverlapGraph",
    "OverlapPair",
    "ParseError",
    "PruneDecision",
    "RedundancyGroup",
    "Scene",
    "SweepRow",
    "SynthParams",
    "ValidationError",
    "ViewArc",
    "Xorshift64Star",
    "angle_to_column",
    "bcs",
    "brute_force_prune",
    "brute_force_rr",
    "build_overlap_graph",
    "camera_at_yaw",
    "centroid_distance",
    "cosine_similarity",
    "crop_overlap",
    "cuboid_corners",
    "distance_prune",
    "emit_labels",
    "form_groups",
    "generate_scene",
    "horizontal_fov",
    "iou2d",
    "iou3d",
    "lost_ratio",
    "match_boxes",
    "nuscenes_like_cameras",
    "overlap_arc",
    "parse_dataset",
    "parse_detection_set",
    "parse_pgm",
    "preset_nuscenes",
    "project_cuboid",
    "prune_dataset",
    "prune_group",
    "redundancy_ratio",
    "serialize_pgm",
    "sweep_distance",
    "sweep_tau",
    "view_arc",
    "welch_t_test",
    "write_dataset",
    "yaw_center",
]
