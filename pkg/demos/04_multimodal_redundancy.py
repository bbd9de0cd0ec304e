"""How much does a LiDAR-only detector already know?

Pairs a fusion baseline detection set against a degraded LiDAR-only set,
measures the redundancy ratio, prunes LiDAR boxes by ego distance, and runs
the distance-versus-redundancy significance test.
"""

import statistics

from redkit.geometry import centroid_distance
from redkit.multimodal import redundancy_ratio, sweep_distance, welch_t_test
from redkit.synth import SynthParams, generate_scene


def main():
    params = SynthParams(seed=77_001, n_objects=12, n_frames=20,
                         drop_rate=0.35, detection_noise=0.15)
    dataset, _ = generate_scene(params)
    frames = dataset.scenes[0].frames

    theta = 0.5
    rrs = []
    for frame in frames:
        base = frame.detection_sets["fusion_baseline"]
        lidar = frame.detection_sets["lidar_only"]
        rrs.append(redundancy_ratio(base, lidar, theta))
    print(f"redundancy ratio over {len(frames)} frames "
          f"(theta={theta}): mean={statistics.mean(rrs):.3f}, "
          f"min={min(rrs):.3f}, max={max(rrs):.3f}")

    frame = frames[0]
    base = frame.detection_sets["fusion_baseline"]
    lidar = frame.detection_sets["lidar_only"]
    print("\ndistance-pruning sweep on frame 0:")
    print("t_dist  pruned  lost_ratio")
    for row in sweep_distance(base, lidar, theta, [0.0, 5.0, 10.0, 20.0, 30.0]):
        print(f"{row.t_dist:6.1f} {row.pruned_count:7d} {row.lost_ratio:11.3f}")

    # are objects in low-redundancy frames systematically nearer or farther?
    split = statistics.median(rrs)
    high = [centroid_distance(b) for f, rr in zip(frames, rrs) if rr >= split
            for b in f.detection_sets["fusion_baseline"]]
    low = [centroid_distance(b) for f, rr in zip(frames, rrs) if rr < split
           for b in f.detection_sets["lidar_only"]]
    if len(high) >= 2 and len(low) >= 2:
        t, df, p = welch_t_test(high, low)
        print(f"\nwelch t-test, ego distance by redundancy (split at rr={split:.3f}):")
        print(f"  n_high={len(high)}, n_low={len(low)}, t={t:.4f}, df={df:.2f}, p={p:.4g}")
    else:
        print("\nnot enough frames on one side of the split for a t-test")


if __name__ == "__main__":
    main()
