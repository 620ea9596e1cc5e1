"""Illumination recovery from shading coefficients and lighting hygiene steps."""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .errors import DegenerateInputError, NumericalError
from .render import CLAMPED_COSINE_Z, render_image
from .rotation import rotate_coeffs, rotate_to_normal, zyz_rotation
from .sh import (
    DEFAULT_INTEGRATION_COUNT,
    QuadratureSet,
    fibonacci_sphere,
    project_samples,
    sh_basis,
    sh_eval,
)


@lru_cache(maxsize=4)
def _cosine_design(count):
    """Rows c_i(n) of the rotated clamped cosine at every lattice normal."""
    normals = fibonacci_sphere(count).directions
    a = rotate_to_normal(CLAMPED_COSINE_Z, normals)
    a.setflags(write=False)
    return a


def shading_values(light, normals):
    """S(n) = integral of L(w) max(cos(w, n), 0) at each normal; shape ``(n,)`` or ``(n, k)``."""
    return rotate_to_normal(CLAMPED_COSINE_Z, normals) @ np.asarray(light, dtype=float).T


def forward_shading(light, sample_count=DEFAULT_INTEGRATION_COUNT):
    """Shading SH coefficients of a light, fitted exactly from lattice samples.

    S(n) is band-limited to degree 2, so a least-squares fit of its samples on
    the basis reproduces its coefficients to rounding error.
    """
    normals = fibonacci_sphere(sample_count).directions
    values = _cosine_design(sample_count) @ np.asarray(light, dtype=float).T
    coeffs, *_ = np.linalg.lstsq(sh_basis(normals), values, rcond=None)
    return coeffs.T


@dataclass
class Recovery:
    coeffs: np.ndarray
    residual: np.ndarray
    condition: float


def recover_illumination(shading, sample_count=DEFAULT_INTEGRATION_COUNT):
    """Least-squares light coefficients L with sum_i S_i Y_i(n) = sum_i L_i c_i(n).

    ``shading`` is ``(9,)`` or ``(k, 9)``; ``residual`` is the RMS misfit over
    the ``sample_count`` equations, per channel.
    """
    if sample_count < 9:
        raise ValueError(f"need at least 9 sample directions, got {sample_count}")
    s = np.asarray(shading, dtype=float)
    if not np.all(np.isfinite(s)):
        raise ValueError("shading coefficients must be finite")
    normals = fibonacci_sphere(sample_count).directions
    a = _cosine_design(sample_count)
    b = sh_basis(normals) @ s.T
    coeffs, _, rank, sv = np.linalg.lstsq(a, b, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if rank < 9:
        raise NumericalError(f"shading system is rank {rank} < 9 (condition {cond:.3g})")
    resid = np.sqrt(np.mean((a @ coeffs - b) ** 2, axis=0))
    return Recovery(coeffs.T, resid, cond)


def clamp_nonnegative(light, sample_count=DEFAULT_INTEGRATION_COUNT):
    """Clamp the reconstructed light to >= 0 pointwise and re-project."""
    quad = fibonacci_sphere(sample_count)
    values = sh_eval(light, quad.directions)
    return project_samples(np.maximum(values, 0.0), quad)


def scale_intensity(light, albedo, normals, vis, mask, target=1.0):
    """Scale a light so the brightest masked pixel (any channel) renders at ``target``.

    Returns ``(scaled_light, factor)``.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise DegenerateInputError("intensity scaling needs at least one masked pixel")
    img = render_image(albedo, normals, vis, light, mask)
    peak = float(img[mask].max())
    if not peak > 0.0:
        raise DegenerateInputError(f"rendered scene has no positive intensity (max {peak:.3g})")
    factor = target / peak
    return np.asarray(light, dtype=float) * factor, factor


def rotate_illumination(light, alpha, beta, gamma):
    """Rotate every channel of a light by the ZYZ angles (augmentation)."""
    return rotate_coeffs(zyz_rotation(alpha, beta, gamma), light)


def equirect_quadrature(height, width):
    """Pixel-center directions and solid angles of an equirectangular image.

    Row 0 is the +Z pole (colatitude 0); column 0 starts at azimuth 0 (+X).
    """
    theta = (np.arange(height) + 0.5) / height * math.pi
    phi = (np.arange(width) + 0.5) / width * 2.0 * math.pi
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    dirs = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
    weights = np.sin(th) * (math.pi / height) * (2.0 * math.pi / width)
    return QuadratureSet(dirs.reshape(-1, 3), weights.reshape(-1))


def project_envmap(image):
    """Project an equirectangular float image ``(h, w, channels)`` to ``(channels, 9)``."""
    image = np.asarray(image, dtype=float)
    if image.ndim == 2:
        image = image[..., None]
    h, w, ch = image.shape
    quad = equirect_quadrature(h, w)
    return project_samples(image.reshape(-1, ch), quad)
