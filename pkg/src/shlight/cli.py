"""``shlight`` command line: render, bake, recover-light, project, rotate, loss, gradcheck, scene.

Exit codes: 0 success, 1 I/O or file-format error, 2 validation error,
3 numerical failure.
"""

import argparse
import json
import math
from pathlib import Path
import sys

import numpy as np

from . import imageio, lighting, losses, sh, visibility
from .errors import FormatError, NumericalError
from .gradcheck import REL_TOL, run_gradcheck
from .render import render_image, shading_image
from .rotation import rotate_coeffs, zyz_rotation

EXIT_IO, EXIT_VALIDATION, EXIT_NUMERICAL = 1, 2, 3


class CLIError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _require_files(*paths):
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise CLIError(f"no such file: {p}", EXIT_IO)


def _read_light(path):
    light = sh.read_coeffs(path)
    if light.shape[0] != 3:
        raise CLIError(f"{path}: RGB light needs 3 coefficient lines, found {light.shape[0]}", EXIT_VALIDATION)
    return light


def _read_map(path, channels, shape=None, name="map"):
    img = imageio.read_pfm(path).astype(float)
    if img.shape[-1] != channels:
        raise CLIError(f"{path}: {name} needs {channels} channels, found {img.shape[-1]}", EXIT_VALIDATION)
    if shape is not None and img.shape[:2] != shape:
        raise CLIError(
            f"{name} {path} is {img.shape[1]}x{img.shape[0]}, expected {shape[1]}x{shape[0]}", EXIT_VALIDATION
        )
    return img


def _emit(args, summary, text):
    print(json.dumps(summary, sort_keys=True) if getattr(args, "json", False) else text)


def cmd_render(args):
    _require_files(args.albedo, args.normal, args.vis, args.light, args.mask)
    mask = imageio.read_mask(args.mask)
    albedo = _read_map(args.albedo, 3, mask.shape, "albedo")
    normals = _read_map(args.normal, 3, mask.shape, "normal")
    vis = imageio.read_visibility_map(args.vis, mask)
    light = _read_light(args.light)
    shading = shading_image(normals, vis, light, mask)
    image = render_image(albedo, normals, vis, light, mask)
    imageio.write_pfm(args.out, image.astype(np.float32))
    if args.shading_out:
        imageio.write_pfm(args.shading_out, shading.astype(np.float32))
    if args.display:
        imageio.export_display(args.display, image, args.gamma)
    print(f"rendered {mask.shape[1]}x{mask.shape[0]} image ({int(mask.sum())} masked pixels) -> {args.out}")


def cmd_bake(args):
    _require_files(args.mesh, args.points)
    verts, tris = visibility.read_obj(args.mesh)
    scene = visibility.Scene(verts, tris)
    points = visibility.read_points(args.points)
    coeffs = visibility.bake_visibility(scene, points, args.count) if len(points) else np.zeros((0, 9))
    sh.write_coeffs(args.out, coeffs)
    print(f"baked {len(points)} points with {args.count} directions -> {args.out}")


def cmd_recover_light(args):
    _require_files(args.shading)
    s = sh.read_coeffs(args.shading)
    if args.clamp and args.clamp_order == "clamp-then-recover":
        s = lighting.clamp_nonnegative(s, args.samples)
    rec = lighting.recover_illumination(s, args.samples)
    light = rec.coeffs
    if args.clamp and args.clamp_order == "recover-then-clamp":
        light = lighting.clamp_nonnegative(light, args.samples)
    sh.write_coeffs(args.out, light)
    print(f"recovered {len(light)} channel(s); rms residual {float(rec.residual.max()):.3g}, "
          f"condition {rec.condition:.3g} -> {args.out}")


def cmd_project(args):
    _require_files(args.envmap)
    coeffs = lighting.project_envmap(imageio.read_pfm(args.envmap))
    sh.write_coeffs(args.out, coeffs)
    print(f"projected {coeffs.shape[0]} channel(s) -> {args.out}")


def cmd_rotate(args):
    _require_files(args.coeffs)
    c = sh.read_coeffs(args.coeffs)
    angles = (args.alpha, args.beta, args.gamma)
    if args.degrees:
        angles = tuple(math.radians(a) for a in angles)
    sh.write_coeffs(args.out, rotate_coeffs(zyz_rotation(*angles), c))
    print(f"rotated {len(c)} line(s) -> {args.out}")


def _read_maps(args, which, mask):
    light = _read_light(getattr(args, f"light_{which}"))
    return losses.IntrinsicMaps(
        _read_map(getattr(args, f"albedo_{which}"), 3, mask.shape, f"albedo-{which}"),
        _read_map(getattr(args, f"normal_{which}"), 3, mask.shape, f"normal-{which}"),
        imageio.read_visibility_map(getattr(args, f"vis_{which}"), mask),
        light,
    )


def cmd_loss(args):
    files = [args.image, args.mask] + [
        getattr(args, f"{k}_{w}") for k in ("albedo", "normal", "vis", "light") for w in ("est", "gt")
    ]
    _require_files(*files)
    mask = imageio.read_mask(args.mask)
    image = _read_map(args.image, 3, mask.shape, "image")
    est, gt = _read_maps(args, "est", mask), _read_maps(args, "gt", mask)
    weights = losses.LossWeights(args.lambda_n, args.lambda_v, args.lambda_l)
    total, terms = losses.total_loss(args.stage, est, gt, image, mask, weights, args.samples)
    coeff = losses.stage_weights(args.stage, weights)
    summary = {"stage": args.stage, "total": total, "terms": terms, "weights": coeff,
               "detached": {"recon-albedo,normal,light": ["visibility"]} if args.stage == "stage2-real" else {}}
    text = "\n".join([f"{k:28s} {v:.10g}  (x{coeff[k]:g})" for k, v in terms.items()] + [f"{'total':28s} {total:.10g}"])
    _emit(args, summary, text)


def cmd_gradcheck(args):
    report = run_gradcheck(args.trials, args.seed)
    ok = report.worst < args.tol
    summary = {"trials": report.trials, "worst_relative_error": report.worst, "worst_trial": report.worst_trial,
               "worst_parameter": report.worst_param, "per_parameter": report.per_param, "tolerance": args.tol,
               "passed": ok}
    _emit(args, summary, f"{report.trials} trials, worst relative error {report.worst:.3e} "
                         f"({report.worst_param}, trial {report.worst_trial}); tolerance {args.tol:g}: "
                         f"{'PASS' if ok else 'FAIL'}")
    if not ok:
        raise CLIError(f"gradient check failed: {report.worst:.3e} >= {args.tol:g}", EXIT_NUMERICAL)


def cmd_scene(args):
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    blocker = None if args.no_blocker else visibility.DEFAULT_BLOCKER
    s = visibility.generate_sphere_scene(args.resolution, blocker=blocker, fov_deg=args.fov, erode=args.erode)
    visibility.write_obj(out / "mesh.obj", s.scene.vertices, s.scene.triangles)
    visibility.write_points(out / "points.txt", s.scene.sample_positions, s.scene.sample_normals)
    imageio.write_mask(out / "mask.pfm", s.mask)
    imageio.write_pfm(out / "albedo.pfm", s.albedo.astype(np.float32))
    imageio.write_pfm(out / "normal.pfm", s.normal.astype(np.float32))
    imageio.write_pfm(out / "position.pfm", s.position.astype(np.float32))
    print(f"wrote {args.resolution}x{args.resolution} sphere scene ({int(s.mask.sum())} masked pixels) to {out}")


def build_parser():
    p = argparse.ArgumentParser(prog="shlight", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0, help="seed for any randomized step")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", help="render radiance (and shading) from intrinsic maps")
    r.add_argument("--albedo", required=True, help="RGB albedo PFM")
    r.add_argument("--normal", required=True, help="RGB PFM of unit normals (raw [-1, 1] values)")
    r.add_argument("--vis", required=True, help="visibility coefficient file (per pixel or per masked pixel)")
    r.add_argument("--light", required=True, help="3-line RGB light coefficient file")
    r.add_argument("--mask", required=True, help="mask PFM (nonzero = foreground)")
    r.add_argument("--out", required=True)
    r.add_argument("--shading-out")
    r.add_argument("--display", help="also write an 8-bit PNG/PPM preview")
    r.add_argument("--gamma", type=float, default=2.2)
    r.set_defaults(func=cmd_render)

    b = sub.add_parser("bake", help="bake SH visibility at sample points against an OBJ mesh")
    b.add_argument("--mesh", required=True)
    b.add_argument("--points", required=True, help="text file, 'x y z [nx ny nz]' per line")
    b.add_argument("--count", type=int, default=sh.DEFAULT_VISIBILITY_COUNT)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bake)

    rl = sub.add_parser("recover-light", help="recover illumination from shading coefficients")
    rl.add_argument("--shading", required=True)
    rl.add_argument("--out", required=True)
    rl.add_argument("--clamp", action="store_true", help="clamp the light to be nonnegative")
    rl.add_argument("--clamp-order", choices=("recover-then-clamp", "clamp-then-recover"),
                    default="recover-then-clamp")
    rl.add_argument("--samples", type=int, default=sh.DEFAULT_INTEGRATION_COUNT)
    rl.set_defaults(func=cmd_recover_light)

    pr = sub.add_parser("project", help="project an equirectangular PFM onto SH")
    pr.add_argument("--envmap", required=True)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_project)

    ro = sub.add_parser("rotate", help="rotate coefficients by ZYZ Euler angles")
    ro.add_argument("--coeffs", required=True)
    ro.add_argument("--alpha", type=float, default=0.0)
    ro.add_argument("--beta", type=float, default=0.0)
    ro.add_argument("--gamma", type=float, default=0.0)
    ro.add_argument("--degrees", action="store_true", help="angles are in degrees (default radians)")
    ro.add_argument("--out", required=True)
    ro.set_defaults(func=cmd_rotate)

    lo = sub.add_parser("loss", help="evaluate the stage-1 or stage-2 training loss")
    lo.add_argument("--stage", choices=losses.STAGES, required=True)
    lo.add_argument("--image", required=True, help="input RGB image PFM")
    lo.add_argument("--mask", required=True)
    for w in ("est", "gt"):
        lo.add_argument(f"--albedo-{w}", required=True)
        lo.add_argument(f"--normal-{w}", required=True)
        lo.add_argument(f"--vis-{w}", required=True)
        lo.add_argument(f"--light-{w}", required=True)
    lo.add_argument("--lambda-n", type=float, default=0.2)
    lo.add_argument("--lambda-v", type=float, default=0.2)
    lo.add_argument("--lambda-l", type=float, default=0.01)
    lo.add_argument("--samples", type=int, default=sh.DEFAULT_INTEGRATION_COUNT)
    lo.add_argument("--json", action="store_true")
    lo.set_defaults(func=cmd_loss)

    g = sub.add_parser("gradcheck", help="compare analytic render gradients with finite differences")
    g.add_argument("--trials", type=int, default=100)
    g.add_argument("--tol", type=float, default=REL_TOL)
    g.add_argument("--json", action="store_true")
    g.set_defaults(func=cmd_gradcheck)

    sc = sub.add_parser("scene", help="write the synthetic sphere scene (mesh, points, maps)")
    sc.add_argument("--resolution", type=int, default=8)
    sc.add_argument("--outdir", required=True)
    sc.add_argument("--fov", type=float, default=visibility.DEFAULT_FOV_DEG)
    sc.add_argument("--no-blocker", action="store_true")
    sc.add_argument("--erode", action="store_true", help="erode the mask by one pixel")
    sc.set_defaults(func=cmd_scene)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return 0


if __name__ == "__main__":
    sys.exit(main())
