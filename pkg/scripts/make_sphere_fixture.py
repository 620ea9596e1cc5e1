"""Regenerate the 8x8 sphere-with-blocker fixture in tests/data/sphere8/.

Writes the intrinsic maps, the baked visibility, the scaled fixture light and
the golden renders used by the CLI regression test. Only regenerate after the
end-to-end Monte Carlo comparison passes. Run from the repo root:

    python scripts/make_sphere_fixture.py
"""

import argparse
from pathlib import Path

import numpy as np

from shlight import cli, imageio, sh
from shlight.lighting import scale_intensity
from shlight.visibility import bake_visibility, generate_sphere_scene, write_obj, write_points

# x-symmetric light (no x, xy, xz terms), positive on the whole sphere.
BASE_LIGHT = np.array([2.7, 0.8, 1.2, 0.0, 0.0, 0.3, -0.2, 0.0, 0.25])
TINT = np.array([1.0, 0.9, 0.8])
PEAK = 0.9


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="tests/data/sphere8")
    ap.add_argument("--resolution", type=int, default=8)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    s = generate_sphere_scene(args.resolution)
    vis = np.zeros(s.mask.shape + (9,))
    vis[s.mask] = bake_visibility(s.scene, s.scene.sample_positions)
    light, factor = scale_intensity(TINT[:, None] * BASE_LIGHT, s.albedo, s.normal, vis, s.mask, PEAK)

    write_obj(out / "mesh.obj", s.scene.vertices, s.scene.triangles)
    write_points(out / "points.txt", s.scene.sample_positions, s.scene.sample_normals)
    imageio.write_mask(out / "mask.pfm", s.mask)
    imageio.write_pfm(out / "albedo.pfm", s.albedo.astype(np.float32))
    imageio.write_pfm(out / "normal.pfm", s.normal.astype(np.float32))
    sh.write_coeffs(out / "vis.txt", vis[s.mask], comment="visibility per masked pixel, row-major")
    sh.write_coeffs(out / "light.txt", light, comment=f"fixture light, scaled by {factor!r} to peak {PEAK}")
    print(f"fixture written to {out} ({int(s.mask.sum())} masked pixels, light scale {factor:.4f})")
    # The golden image is rendered from the files just written, through the CLI.
    code = cli.main([
        "render", "--albedo", str(out / "albedo.pfm"), "--normal", str(out / "normal.pfm"),
        "--vis", str(out / "vis.txt"), "--light", str(out / "light.txt"), "--mask", str(out / "mask.pfm"),
        "--out", str(out / "golden.pfm"), "--shading-out", str(out / "golden_shading.pfm"),
    ])
    if code:
        raise SystemExit(code)


if __name__ == "__main__":
    main()
