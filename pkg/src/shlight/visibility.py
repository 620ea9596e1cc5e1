"""Ray-traced visibility baking against triangle meshes.

Occlusion is a binary any-hit query. Triangles are one-sided: a ray only
counts as blocked when it enters a triangle from its front (counter-clockwise)
side, so a point on a closed convex surface sees the whole sphere of
directions. Build closed, outward-facing geometry for occluders.
"""

from dataclasses import dataclass, field
import math
from pathlib import Path

import numpy as np

from .errors import FormatError
from .sh import DEFAULT_VISIBILITY_COUNT, direction, fibonacci_sphere, project_samples, sh_eval

LEAF_SIZE = 8
SELF_INTERSECTION_SCALE = 1e-4


@dataclass
class BVH:
    """Median-split bounding volume hierarchy stored as flat arrays."""

    box_min: np.ndarray
    box_max: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    order: np.ndarray


def build_bvh(tri_verts, leaf_size=LEAF_SIZE):
    """Build a BVH over triangles given as an ``(n, 3, 3)`` vertex array."""
    n = len(tri_verts)
    centroids = tri_verts.mean(axis=1)
    lo_all = tri_verts.min(axis=1)
    hi_all = tri_verts.max(axis=1)
    order = np.arange(n)
    box_min, box_max, left, right, start, count = [], [], [], [], [], []

    def new_node(lo, hi):
        box_min.append(lo)
        box_max.append(hi)
        left.append(-1)
        right.append(-1)
        start.append(0)
        count.append(0)
        return len(box_min) - 1

    stack = [(new_node(lo_all.min(0), hi_all.max(0)), 0, n)]
    while stack:
        node, a, b = stack.pop()
        idx = order[a:b]
        if b - a <= leaf_size:
            start[node], count[node] = a, b - a
            continue
        c = centroids[idx]
        axis = int(np.argmax(c.max(0) - c.min(0)))
        idx = idx[np.argsort(c[:, axis], kind="stable")]
        order[a:b] = idx
        mid = (a + b) // 2
        children = []
        for s, e in ((a, mid), (mid, b)):
            sub = order[s:e]
            child = new_node(lo_all[sub].min(0), hi_all[sub].max(0))
            children.append(child)
            stack.append((child, s, e))
        left[node], right[node] = children
    return BVH(
        np.array(box_min).reshape(-1, 3),
        np.array(box_max).reshape(-1, 3),
        np.array(left),
        np.array(right),
        np.array(start),
        np.array(count),
        order,
    )


@dataclass
class Scene:
    """Triangle mesh plus optional sample points (positions and normals).

    Treat instances as immutable; the BVH is built once at construction.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    sample_positions: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    sample_normals: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    bvh: BVH = field(init=False, repr=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        self.sample_positions = np.asarray(self.sample_positions, dtype=float).reshape(-1, 3)
        self.sample_normals = np.asarray(self.sample_normals, dtype=float).reshape(-1, 3)
        nv = len(self.vertices)
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= nv):
            raise ValueError(f"triangle index out of range for {nv} vertices")
        tv = self.tri_verts
        area = 0.5 * np.linalg.norm(np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0]), axis=-1)
        if np.any(area <= 1e-12):
            bad = int(np.argmax(area <= 1e-12))
            raise ValueError(f"triangle {bad} is degenerate (area {area[bad]:.3g})")
        self.bvh = build_bvh(tv) if len(tv) else None

    @property
    def tri_verts(self):
        return self.vertices[self.triangles]

    @property
    def epsilon(self):
        """Self-intersection offset: 1e-4 of the bounding-box diagonal."""
        if len(self.vertices) == 0:
            return 0.0
        return SELF_INTERSECTION_SCALE * float(np.linalg.norm(self.vertices.max(0) - self.vertices.min(0)))


def _hit_distance(origins, dirs, tv):
    """Front-face hit distance per ray/triangle pair, ``inf`` on a miss (Moller-Trumbore)."""
    v0 = tv[None, :, 0]
    e1 = tv[None, :, 1] - v0
    e2 = tv[None, :, 2] - v0
    d = dirs[:, None, :]
    pvec = np.cross(d, e2)
    det = np.sum(e1 * pvec, axis=-1)
    geo = np.linalg.norm(np.cross(e1, e2), axis=-1)
    # Front face: the ray travels against the geometric normal, det > 0.
    ok = det > 1e-12 * geo
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origins[:, None, :] - v0
    u = np.sum(tvec * pvec, axis=-1) * inv
    qvec = np.cross(tvec, e1)
    v = np.sum(d * qvec, axis=-1) * inv
    t = np.sum(e2 * qvec, axis=-1) * inv
    good = ok & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > 0.0)
    return np.where(good, t, np.inf)


def _ray_triangle_hits(origins, dirs, tv):
    return np.isfinite(_hit_distance(origins, dirs, tv))


def first_hit_distance(origins, dirs, tv, chunk=256):
    """Closest front-face hit distance per ray (``inf`` when nothing is hit)."""
    origins = np.asarray(origins, dtype=float).reshape(-1, 3)
    dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
    out = np.full(len(origins), np.inf)
    for s in range(0, len(origins), chunk):
        out[s:s + chunk] = _hit_distance(origins[s:s + chunk], dirs[s:s + chunk], tv).min(axis=1)
    return out


def _offset_rays(scene, origins, dirs):
    origins = np.asarray(origins, dtype=float).reshape(-1, 3)
    dirs = direction(np.asarray(dirs, dtype=float).reshape(-1, 3))
    origins, dirs = np.broadcast_arrays(origins, dirs)
    return origins + scene.epsilon * dirs, dirs


def occluded_brute(scene, origins, dirs, chunk=4096):
    """Reference any-hit test against every triangle; returns a bool per ray."""
    o, d = _offset_rays(scene, origins, dirs)
    hit = np.zeros(len(o), dtype=bool)
    tv = scene.tri_verts
    if len(tv) == 0:
        return hit
    step = max(1, chunk * 64 // max(len(tv), 1))
    for s in range(0, len(o), step):
        hit[s:s + step] = _ray_triangle_hits(o[s:s + step], d[s:s + step], tv).any(axis=1)
    return hit


def occluded_rays(scene, origins, dirs):
    """Any-hit test through the BVH, processing rays as packets per node."""
    o, d = _offset_rays(scene, origins, dirs)
    hit = np.zeros(len(o), dtype=bool)
    bvh = scene.bvh
    if bvh is None or len(o) == 0:
        return hit
    safe = np.where(np.abs(d) < 1e-30, np.copysign(1e-30, d), d)
    inv = 1.0 / safe
    tv = scene.tri_verts
    stack = [(0, np.arange(len(o)))]
    while stack:
        node, rays = stack.pop()
        rays = rays[~hit[rays]]
        if len(rays) == 0:
            continue
        t0 = (bvh.box_min[node] - o[rays]) * inv[rays]
        t1 = (bvh.box_max[node] - o[rays]) * inv[rays]
        tnear = np.minimum(t0, t1).max(axis=1)
        tfar = np.maximum(t0, t1).min(axis=1)
        rays = rays[(tfar >= np.maximum(tnear, 0.0))]
        if len(rays) == 0:
            continue
        if bvh.left[node] < 0:
            tris = bvh.order[bvh.start[node]:bvh.start[node] + bvh.count[node]]
            hit[rays] |= _ray_triangle_hits(o[rays], d[rays], tv[tris]).any(axis=1)
        else:
            stack.append((bvh.right[node], rays))
            stack.append((bvh.left[node], rays))
    return hit


def occluded(scene, origin, dir):
    """True iff the ray from ``origin`` along ``dir`` is blocked by the scene."""
    return bool(occluded_rays(scene, origin, dir)[0])


def visibility_samples(scene, points, dirs):
    """Binary visibility (1.0 unoccluded) for every point/direction pair.

    Returns shape ``(points, dirs)``.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    dirs = np.asarray(dirs, dtype=float).reshape(-1, 3)
    o = np.repeat(points, len(dirs), axis=0)
    d = np.tile(dirs, (len(points), 1))
    return (~occluded_rays(scene, o, d)).astype(float).reshape(len(points), len(dirs))


def bake_visibility(scene, points, count=DEFAULT_VISIBILITY_COUNT, batch=64):
    """Project binary visibility over a ``count``-point lattice onto SH.

    ``points`` is ``(3,)`` for one point (returns ``(9,)``) or ``(n, 3)``.
    """
    if count < 9:
        raise ValueError(f"visibility bake needs at least 9 directions, got {count}")
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 3)
    quad = fibonacci_sphere(int(count))
    out = np.empty((len(pts), 9))
    for s in range(0, len(pts), batch):
        vis = visibility_samples(scene, pts[s:s + batch], quad.directions)
        out[s:s + batch] = project_samples(vis.T, quad)
    return out[0] if single else out


# -- mesh I/O ---------------------------------------------------------------

def read_obj(path):
    """Parse ``v`` and ``f`` records of an ASCII OBJ file.

    Faces must be triangles; a polygon with more vertices raises ValueError.
    """
    vertices, triangles = [], []
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not a text file") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        try:
            if parts[0] == "v":
                vertices.append([float(x) for x in parts[1:4]])
                if len(parts) < 4:
                    raise ValueError("vertex needs 3 coordinates")
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise _NotTriangulated(f"{path}: face with {len(idx)} vertices at line {lineno}")
                triangles.append([i - 1 if i > 0 else len(vertices) + i for i in idx])
        except _NotTriangulated:
            raise
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}", offset=f"line {lineno}") from None
    return np.array(vertices, dtype=float).reshape(-1, 3), np.array(triangles, dtype=np.int64).reshape(-1, 3)


class _NotTriangulated(ValueError):
    pass


def write_obj(path, vertices, triangles):
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in np.asarray(vertices, dtype=float).tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in np.asarray(triangles)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_points(path):
    """Read sample points: ``x y z`` or ``x y z nx ny nz`` per line."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        parts = line.split("#", 1)[0].split()
        if not parts:
            continue
        if len(parts) not in (3, 6):
            raise FormatError(f"{path}: expected 3 or 6 numbers, found {len(parts)}", offset=f"line {lineno}")
        try:
            rows.append([float(p) for p in parts[:3]])
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}", offset=f"line {lineno}") from None
    return np.array(rows, dtype=float).reshape(-1, 3)


def write_points(path, positions, normals=None):
    positions = np.asarray(positions, dtype=float)
    rows = positions if normals is None else np.concatenate([positions, normals], axis=1)
    Path(path).write_text("".join(" ".join(repr(float(v)) for v in r) + "\n" for r in rows))


# -- synthetic scenes ---------------------------------------------------------

def uv_sphere(radius=1.0, center=(0.0, 0.0, 0.0), stacks=24, slices=48):
    """Closed triangulated sphere with outward-facing (CCW) triangles."""
    center = np.asarray(center, dtype=float)
    verts = [[0.0, 0.0, 1.0]]
    for i in range(1, stacks):
        th = math.pi * i / stacks
        for j in range(slices):
            ph = 2 * math.pi * j / slices
            verts.append([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])
    verts.append([0.0, 0.0, -1.0])
    verts = np.array(verts)
    south = len(verts) - 1

    def ring(i, j):
        return 1 + (i - 1) * slices + (j % slices)

    tris = []
    for j in range(slices):
        tris.append([0, ring(1, j), ring(1, j + 1)])
        tris.append([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)])
    for i in range(1, stacks - 1):
        for j in range(slices):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            tris.append([a, c, d])
            tris.append([a, d, b])
    return center + radius * verts, _orient_outward(verts, np.array(tris))


def box_mesh(lo, hi):
    """Axis-aligned closed box with outward-facing triangles."""
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    corners = np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    tris = []
    for a, b, c, d in quads:
        tris += [[a, b, c], [a, c, d]]
    return corners, _orient_outward(corners - (lo + hi) / 2, np.array(tris))


def _orient_outward(centered_verts, tris):
    tv = centered_verts[tris]
    nrm = np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0])
    flip = np.sum(nrm * tv.mean(axis=1), axis=-1) < 0
    tris = tris.copy()
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def merge_meshes(*meshes):
    verts, tris, offset = [], [], 0
    for v, t in meshes:
        verts.append(v)
        tris.append(t + offset)
        offset += len(v)
    return np.concatenate(verts), np.concatenate(tris)


CAMERA_POSITION = np.array([0.0, 0.0, 5.8])
DEFAULT_FOV_DEG = 22.5
DEFAULT_BLOCKER = ((1.15, -1.6, -1.6), (1.45, 1.6, 1.6))


@dataclass
class SphereScene:
    """A unit sphere seen by a pinhole camera, with per-pixel intrinsics maps."""

    scene: Scene
    mask: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    albedo: np.ndarray


def camera_rays(resolution, fov_deg=DEFAULT_FOV_DEG):
    """Unit primary-ray directions ``(res, res, 3)``; row 0 is the top of the image."""
    half = math.tan(math.radians(fov_deg) / 2.0)
    s = (np.arange(resolution) + 0.5) / resolution * 2.0 - 1.0
    px = s[None, :] * half
    py = -s[:, None] * half
    d = np.stack(np.broadcast_arrays(px, py, -np.ones_like(px * py)), axis=-1)
    return direction(d)


def erode_mask(mask):
    """Remove foreground pixels that touch the background (4-neighbourhood)."""
    m = np.pad(mask, 1, constant_values=False)
    return m[1:-1, 1:-1] & m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]


def generate_sphere_scene(
    resolution,
    blocker=DEFAULT_BLOCKER,
    fov_deg=DEFAULT_FOV_DEG,
    albedo=(0.8, 0.7, 0.6),
    erode=False,
    stacks=24,
    slices=48,
):
    """Unit sphere at the origin, optional box occluder, camera at (0, 0, 5.8).

    Primary rays are cast against the sphere mesh only; the blocker never
    covers the sphere from this camera. Pass ``blocker=None`` for the bare sphere.
    """
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    sphere = uv_sphere(stacks=stacks, slices=slices)
    d = camera_rays(resolution, fov_deg).reshape(-1, 3)
    t = first_hit_distance(np.broadcast_to(CAMERA_POSITION, d.shape), d, sphere[0][sphere[1]])
    mask = np.isfinite(t).reshape(resolution, resolution)
    # Positions lie on the tessellated surface (so bakes see no self-occlusion);
    # normals are those of the smooth sphere.
    hit = CAMERA_POSITION + np.where(np.isfinite(t), t, 0.0)[:, None] * d
    position = np.where(mask[..., None], hit.reshape(resolution, resolution, 3), 0.0)
    normal = np.zeros_like(position)
    normal[mask] = direction(position[mask])
    albedo_map = np.where(mask[..., None], np.asarray(albedo, dtype=float), 0.0)
    if erode:
        mask = erode_mask(mask)

    meshes = [sphere]
    if blocker is not None:
        meshes.append(box_mesh(*blocker))
    verts, tris = merge_meshes(*meshes)
    scene = Scene(verts, tris, position[mask], normal[mask])
    return SphereScene(scene, mask, position, normal, albedo_map)


def _tangent_frames(normals):
    helper = np.where(np.abs(normals[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    t = direction(np.cross(normals, helper))
    return t, np.cross(normals, t)


def reference_radiance(scene, points, normals, albedo, light, samples=4096, seed=0):
    """Monte Carlo ground truth of albedo/pi * integral L v max(cos, 0).

    Uses cosine-weighted hemisphere sampling with explicit occlusion rays and
    pointwise evaluation of the light; no SH products are involved. Returns
    ``(points, 3)`` radiance.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    normals = direction(np.asarray(normals, dtype=float).reshape(-1, 3))
    albedo = np.broadcast_to(np.asarray(albedo, dtype=float), (len(points), 3))
    rng = np.random.default_rng(seed)
    t, b = _tangent_frames(normals)
    out = np.empty((len(points), 3))
    for k in range(len(points)):
        u1, u2 = rng.random(samples), rng.random(samples)
        r, phi = np.sqrt(u1), 2.0 * math.pi * u2
        local = np.stack([r * np.cos(phi), r * np.sin(phi), np.sqrt(1.0 - u1)], axis=-1)
        dirs = local[:, :1] * t[k] + local[:, 1:2] * b[k] + local[:, 2:] * normals[k]
        vis = ~occluded_rays(scene, points[k], dirs)
        # pdf = cos/pi, so albedo/pi * L v cos / pdf = albedo * L * v.
        out[k] = albedo[k] * np.mean(sh_eval(light, dirs) * vis[:, None], axis=0)
    return out
