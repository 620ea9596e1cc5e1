"""Spherical-harmonic Lambertian rendering with explicit visibility."""

from .products import build_tripling_tensor, double_product, product_coeffs, triple_product
from .render import (
    PixelIntrinsics,
    RenderGradients,
    clamped_cosine_z,
    render_gradients,
    render_image,
    render_pixel,
    render_shading,
)
from .rotation import rotate_coeffs, rotate_to_normal, x_minus_90, x_plus_90, z_rotation, zyz_rotation
from .sh import direction, fibonacci_sphere, project, sh_basis, sh_basis_eval, sh_eval

__version__ = "0.1.0"

__all__ = [
    "PixelIntrinsics",
    "RenderGradients",
    "build_tripling_tensor",
    "clamped_cosine_z",
    "direction",
    "double_product",
    "fibonacci_sphere",
    "product_coeffs",
    "project",
    "render_gradients",
    "render_image",
    "render_pixel",
    "render_shading",
    "rotate_coeffs",
    "rotate_to_normal",
    "sh_basis",
    "sh_basis_eval",
    "sh_eval",
    "triple_product",
    "x_minus_90",
    "x_plus_90",
    "z_rotation",
    "zyz_rotation",
]
