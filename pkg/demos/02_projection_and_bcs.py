"""From 3D cuboid to clipped 2D box, and how complete the result is.

Walks a car-sized cuboid across the front camera's field of view and prints
the projected box, its image-boundary clipping, and the resulting
bounding-box completeness score (clipped area over full area).
"""

import math

from redkit.geometry import Cuboid3D, bcs, project_cuboid
from redkit.synth import camera_at_yaw


def main():
    cam = camera_at_yaw("CAM_FRONT", 0.0, fov_deg=70.0)
    print(f"camera: {cam.width}x{cam.height}, fx={cam.fx:.1f}")
    print(f"\n{'bearing':>8s} {'full box (px)':>30s} {'clipped (px)':>30s} {'BCS':>6s}")

    for bearing in range(0, 45, 4):
        distance = 12.0
        x = distance * math.cos(math.radians(bearing))
        y = distance * math.sin(math.radians(bearing))
        car = Cuboid3D(center=(x, y, 0.8), size=(4.5, 1.9, 1.6), yaw=0.3)
        result = project_cuboid(car, cam)
        if result is None:
            print(f"{bearing:7d}°  behind the near plane")
            continue
        full, clipped = result
        fmt = lambda b: f"[{b.x0:6.0f},{b.y0:4.0f},{b.x1:6.0f},{b.y1:4.0f}]"
        score = bcs(full, clipped) if clipped.area > 0 else 0.0
        note = "" if clipped.area > 0 else "  (outside image)"
        print(f"{bearing:7d}°  {fmt(full):>30s} {fmt(clipped):>30s} {score:6.3f}{note}")

    print("\nBCS drops as the car slides toward the image seam; a second")
    print("camera covering that seam usually holds the more complete box.")


if __name__ == "__main__":
    main()
