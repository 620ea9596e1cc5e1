"""How the visibility bake converges with the direction count and point set.

For every sample point of the sphere-with-blocker scene, compares bakes at a
range of direction counts against a dense Fibonacci reference, for both the
Fibonacci lattice and seeded uniform random directions.

    python scripts/sampling_study.py --reference 20000
"""

import argparse

import numpy as np

from shlight.sh import fibonacci_sphere, project_samples, random_sphere
from shlight.visibility import generate_sphere_scene, visibility_samples


def bake(scene, points, quad):
    return project_samples(visibility_samples(scene, points, quad.directions).T, quad)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resolution", type=int, default=8)
    ap.add_argument("--counts", type=int, nargs="+", default=[100, 218, 436, 872, 1744, 3488])
    ap.add_argument("--reference", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    s = generate_sphere_scene(args.resolution)
    pts = s.scene.sample_positions
    ref = bake(s.scene, pts, fibonacci_sphere(args.reference))
    print(f"{len(pts)} points, reference {args.reference} lattice directions")
    print(f"{'count':>6} {'lattice max':>12} {'lattice rms':>12} {'random max':>12} {'random rms':>12}")
    for n in args.counts:
        row = [n]
        for quad in (fibonacci_sphere(n), random_sphere(n, args.seed)):
            d = bake(s.scene, pts, quad) - ref
            row += [np.abs(d).max(), np.sqrt(np.mean(d**2))]
        print(f"{row[0]:6d} {row[1]:12.4f} {row[2]:12.4f} {row[3]:12.4f} {row[4]:12.4f}")


if __name__ == "__main__":
    main()
