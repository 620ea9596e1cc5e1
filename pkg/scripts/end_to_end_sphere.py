"""Sphere-with-blocker scene: SH render against a ray-traced Monte Carlo reference.

Prints the mean and max absolute radiance error and the blocker-side versus
mirror-twin comparison, and writes the two renders as PFM and PNG.

    python scripts/end_to_end_sphere.py --resolution 16 --out runs/sphere16
"""

import argparse
from pathlib import Path
import time

import numpy as np

from shlight import imageio
from shlight.lighting import scale_intensity
from shlight.render import render_image
from shlight.visibility import bake_visibility, generate_sphere_scene, reference_radiance

BASE_LIGHT = np.array([2.7, 0.8, 1.2, 0.0, 0.0, 0.3, -0.2, 0.0, 0.25])
TINT = np.array([1.0, 0.9, 0.8])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resolution", type=int, default=8)
    ap.add_argument("--samples", type=int, default=4096, help="Monte Carlo rays per pixel")
    ap.add_argument("--count", type=int, default=872, help="visibility bake directions")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--no-blocker", action="store_true")
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    t0 = time.perf_counter()
    kwargs = {"blocker": None} if args.no_blocker else {}
    s = generate_sphere_scene(args.resolution, **kwargs)
    vis = np.zeros(s.mask.shape + (9,))
    vis[s.mask] = bake_visibility(s.scene, s.scene.sample_positions, args.count)
    light, _ = scale_intensity(TINT[:, None] * BASE_LIGHT, s.albedo, s.normal, vis, s.mask, 0.9)
    image = render_image(s.albedo, s.normal, vis, light, s.mask)
    t1 = time.perf_counter()
    truth = np.zeros_like(image)
    truth[s.mask] = reference_radiance(s.scene, s.position[s.mask], s.normal[s.mask], s.albedo[s.mask],
                                       light, args.samples, args.seed)
    t2 = time.perf_counter()

    err = np.abs(image[s.mask] - truth[s.mask])
    print(f"{int(s.mask.sum())} pixels; bake+render {t1 - t0:.2f} s, reference {t2 - t1:.2f} s")
    print(f"mean |error| {err.mean():.4f}, max |error| {err.max():.4f}")
    w = s.mask.shape[1]
    pairs = [(r, c) for r, c in zip(*np.nonzero(s.mask)) if c >= w // 2 and s.mask[r, w - 1 - c]]
    darker = sum(bool(np.all(image[r, c] < image[r, w - 1 - c])) for r, c in pairs)
    print(f"{darker}/{len(pairs)} right-half pixels darker than their mirror twins")

    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        for name, img in (("sh_render", image), ("reference", truth)):
            imageio.write_pfm(args.out / f"{name}.pfm", img.astype(np.float32))
            imageio.export_display(args.out / f"{name}.png", img)
        print(f"images written to {args.out}")


if __name__ == "__main__":
    main()
