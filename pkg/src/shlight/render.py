"""Lambertian rendering with SH visibility, and its analytic gradients.

Per pixel and color channel::

    I = albedo / pi * triple_product(light, visibility, cos_n)

where ``cos_n`` is the clamped-cosine lobe rotated onto the surface normal.
Shading is the same quantity with unit albedo, so ``image = albedo * shading``.
Nothing here clamps negative results; that is left to display export.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import NumericalError
from .products import build_tripling_tensor, product_coeffs, product_matrix
from .rotation import X_MINUS_90, X_PLUS_90, _z_matrices, normal_angles, rotate_to_normal
from .sh import direction

CLAMPED_COSINE_Z = np.array(
    [math.sqrt(math.pi) / 2, 0, math.sqrt(math.pi / 3), 0, 0, 0, math.sqrt(5 * math.pi) / 8, 0, 0]
)
CLAMPED_COSINE_Z.setflags(write=False)

# Rotated chart for normal gradients: n = Q m with Q = Rx(+90deg).
_CHART_Q = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
_CHART_SWITCH = 1.0 / math.sqrt(2.0)


def clamped_cosine_z():
    """SH coefficients of max(cos(w, +Z), 0)."""
    return CLAMPED_COSINE_Z.copy()


def as_illumination(light):
    light = np.asarray(light, dtype=float)
    if light.shape != (3, 9):
        raise ValueError(f"RGB illumination needs shape (3, 9), got {light.shape}")
    return light


@dataclass(frozen=True)
class PixelIntrinsics:
    albedo: np.ndarray
    normal: np.ndarray
    visibility: np.ndarray
    mask: bool = True

    def __post_init__(self):
        albedo = np.broadcast_to(np.asarray(self.albedo, dtype=float), (3,)).copy()
        if np.any(albedo < 0.0) or np.any(albedo > 1.0):
            raise ValueError(f"albedo must lie in [0, 1], got {albedo}")
        vis = np.asarray(self.visibility, dtype=float)
        if vis.shape != (9,):
            raise ValueError(f"visibility needs 9 coefficients, got shape {vis.shape}")
        object.__setattr__(self, "albedo", albedo)
        object.__setattr__(self, "normal", direction(self.normal))
        object.__setattr__(self, "visibility", vis)


@dataclass
class RenderGradients:
    """Partials of the rendered RGB value; the leading axis is the output channel.

    ``d_albedo[c]`` is dI_c/d albedo_c (channels do not mix). ``d_normal[c]``
    lies in the tangent plane of the normal.
    """

    d_albedo: np.ndarray
    d_normal: np.ndarray
    d_visibility: np.ndarray
    d_light: np.ndarray = field(repr=False)


def _shading_terms(normals, vis, light, t):
    cos_n = rotate_to_normal(CLAMPED_COSINE_Z, normals)
    pl = product_matrix(light, t)
    return np.einsum("...i,cik,...k->...c", cos_n, pl, vis) / math.pi


def render_shading(n, v, light, t=None):
    """Unit-albedo render for one normal; returns RGB shading."""
    light = as_illumination(light)
    if t is None:
        t = build_tripling_tensor()
    return _shading_terms(direction(n), np.asarray(v, dtype=float), light, t)


def render_pixel(p, light, t=None):
    """RGB radiance of one pixel."""
    return p.albedo * render_shading(p.normal, p.visibility, light, t)


def _lobe_angle_derivatives(n):
    """Lobe coefficients at ``n`` and their derivatives along the two chart axes.

    Returns ``(cos_n, d_beta, d_phi, e_beta, e_phi, sin_beta)`` where ``e_*`` are
    unit tangent vectors such that dn/dbeta = e_beta, dn/dphi = sin_beta * e_phi.
    """
    beta, phi = normal_angles(n)
    sb = math.sin(beta)
    if sb < 1e-6:
        raise NumericalError(f"normal {n} sits on the chart pole; angle gradients undefined")
    xp_lobe = X_PLUS_90 @ CLAMPED_COSINE_Z
    zb, dzb = _z_matrices(beta), _z_matrices(beta, derivative=True)
    zp, dzp = _z_matrices(phi), _z_matrices(phi, derivative=True)
    cos_n = zp @ X_MINUS_90 @ zb @ xp_lobe
    d_beta = zp @ X_MINUS_90 @ dzb @ xp_lobe
    d_phi = dzp @ X_MINUS_90 @ zb @ xp_lobe
    cb = math.cos(beta)
    e_beta = np.array([cb * math.cos(phi), cb * math.sin(phi), -sb])
    e_phi = np.array([-math.sin(phi), math.cos(phi), 0.0])
    return cos_n, d_beta, d_phi, e_beta, e_phi, sb


def lobe_normal_jacobian(n):
    """Jacobian d cos_n / d n restricted to the tangent plane; shape ``(9, 3)``.

    Computed through the ZYZ angles; normals within 45 degrees of either pole
    are handled in a frame pre-rotated by X(+90) so the angle chart is never
    singular.
    """
    n = direction(n)
    if abs(n[2]) > _CHART_SWITCH:
        m = _CHART_Q.T @ n
        _, d_beta, d_phi, e_beta, e_phi, sb = _lobe_angle_derivatives(m)
        jac_m = np.outer(d_beta, e_beta) + np.outer(d_phi, e_phi) / sb
        # cos_n = X(+90) cos_m and grad_n = Q grad_m.
        return X_PLUS_90 @ jac_m @ _CHART_Q.T
    _, d_beta, d_phi, e_beta, e_phi, sb = _lobe_angle_derivatives(n)
    return np.outer(d_beta, e_beta) + np.outer(d_phi, e_phi) / sb


def render_gradients(p, light, t=None):
    """Analytic partials of :func:`render_pixel` with respect to every input."""
    light = as_illumination(light)
    if t is None:
        t = build_tripling_tensor()
    cos_n = rotate_to_normal(CLAMPED_COSINE_Z, p.normal)
    pl = product_matrix(light, t)  # (3, 9, 9): P_c @ v = product(L_c, v)
    e = pl @ p.visibility  # (3, 9)
    scale = p.albedo[:, None] / math.pi

    shading = e @ cos_n / math.pi
    d_vis = scale * np.einsum("i,cik->ck", cos_n, pl)
    d_light = scale * product_coeffs(cos_n, p.visibility, t)[None, :]
    d_normal = scale * (e @ lobe_normal_jacobian(p.normal))
    return RenderGradients(shading, d_normal, d_vis, d_light)


def _check_maps(albedo, normals, vis, mask):
    albedo = np.asarray(albedo, dtype=float)
    normals = np.asarray(normals, dtype=float)
    vis = np.asarray(vis, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    shape = mask.shape
    expected = {"albedo": (albedo, 3), "normal": (normals, 3), "visibility": (vis, 9)}
    for name, (arr, ch) in expected.items():
        if arr.shape != shape + (ch,):
            raise ValueError(f"{name} map has shape {arr.shape}, expected {shape + (ch,)}")
    return albedo, normals, vis, mask


def shading_image(normals, vis, light, mask, t=None):
    """Per-pixel shading; zeros where ``mask`` is False."""
    light = as_illumination(light)
    if t is None:
        t = build_tripling_tensor()
    normals = np.asarray(normals, dtype=float)
    vis = np.asarray(vis, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if normals.shape != mask.shape + (3,) or vis.shape != mask.shape + (9,):
        raise ValueError(
            f"map shapes disagree: normal {normals.shape}, visibility {vis.shape}, mask {mask.shape}"
        )
    out = np.zeros(mask.shape + (3,))
    if mask.any():
        out[mask] = _shading_terms(direction(normals[mask]), vis[mask], light, t)
    return out


def render_image(albedo, normals, vis, light, mask, t=None):
    """Render an image from per-pixel intrinsics; background pixels are zero."""
    albedo, normals, vis, mask = _check_maps(albedo, normals, vis, mask)
    return albedo * shading_image(normals, vis, light, mask, t)
