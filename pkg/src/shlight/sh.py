"""Real spherical harmonics up to degree 2, spherical quadrature and projection.

Coefficient vectors are numpy arrays whose last axis has length 9, ordered by
the flat index ``i = l(l+1) + m + 1``. Python arrays are zero-based, so flat
index ``i`` lives at array position ``i - 1``::

    0: Y_0^0   1: Y_1^-1 (y)   2: Y_1^0 (z)   3: Y_1^1 (x)
    4: Y_2^-2 (xy)   5: Y_2^-1 (yz)   6: Y_2^0 (3z^2-1)   7: Y_2^1 (xz)
    8: Y_2^2 (x^2-y^2)

No Condon-Shortley phase: every basis function has a positive constant.
"""

from dataclasses import dataclass
from functools import lru_cache
import math
from pathlib import Path

import numpy as np

from .errors import FormatError

NUM_COEFFS = 9
DEGREE = np.array([0, 1, 1, 1, 2, 2, 2, 2, 2])

_K0 = 0.5 * math.sqrt(1.0 / math.pi)
_K1 = math.sqrt(3.0 / (4.0 * math.pi))
_K2 = 0.5 * math.sqrt(15.0 / math.pi)
_K20 = 0.25 * math.sqrt(5.0 / math.pi)
_K22 = 0.25 * math.sqrt(15.0 / math.pi)

Y00 = _K0
CONSTANT_ONE = np.array([2.0 * math.sqrt(math.pi), 0, 0, 0, 0, 0, 0, 0, 0])
"""Coefficients of the constant function f(w) = 1."""

DEFAULT_VISIBILITY_COUNT = 872
DEFAULT_INTEGRATION_COUNT = 64000


def direction(v):
    """Normalize ``v`` (shape ``(..., 3)``) to unit length.

    Raises ValueError for vectors with norm below 1e-12 or non-finite entries.
    """
    v = np.asarray(v, dtype=float)
    if v.shape[-1:] != (3,):
        raise ValueError(f"direction needs a trailing axis of 3, got shape {v.shape}")
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if not np.all(np.isfinite(norm)):
        raise ValueError("direction has non-finite components")
    if np.any(norm < 1e-12):
        raise ValueError("degenerate direction (norm < 1e-12)")
    return v / norm


def sh_basis(w):
    """All nine basis functions at unit directions ``w``; returns shape ``(..., 9)``."""
    w = np.asarray(w, dtype=float)
    x, y, z = w[..., 0], w[..., 1], w[..., 2]
    return np.stack(
        [
            np.full_like(x, _K0),
            _K1 * y,
            _K1 * z,
            _K1 * x,
            _K2 * x * y,
            _K2 * y * z,
            _K20 * (3.0 * z * z - 1.0),
            _K2 * x * z,
            _K22 * (x * x - y * y),
        ],
        axis=-1,
    )


def sh_basis_gradient(w):
    """Cartesian gradient of each basis polynomial at ``w``; shape ``(..., 9, 3)``.

    This is the gradient of the polynomial extension to R^3, not the surface
    gradient; project onto the tangent plane if that is what you need.
    """
    w = np.asarray(w, dtype=float)
    x, y, z = w[..., 0], w[..., 1], w[..., 2]
    zero = np.zeros_like(x)
    one = np.ones_like(x)
    rows = [
        (zero, zero, zero),
        (zero, _K1 * one, zero),
        (zero, zero, _K1 * one),
        (_K1 * one, zero, zero),
        (_K2 * y, _K2 * x, zero),
        (zero, _K2 * z, _K2 * y),
        (zero, zero, 6.0 * _K20 * z),
        (_K2 * z, zero, _K2 * x),
        (2.0 * _K22 * x, -2.0 * _K22 * y, zero),
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def sh_basis_eval(i, w):
    """Evaluate basis function with flat index ``i`` (1..9) at direction ``w``."""
    if isinstance(i, bool) or not isinstance(i, (int, np.integer)) or not 1 <= i <= NUM_COEFFS:
        raise ValueError(f"flat SH index must be an integer in 1..9, got {i!r}")
    return float(sh_basis(direction(w))[i - 1])


def sh_eval(c, w):
    """Reconstruct ``sum_i c_i Y_i(w)``.

    ``c`` is ``(9,)`` or ``(k, 9)``; ``w`` is ``(3,)`` or ``(n, 3)``. The result
    has shape ``w.shape[:-1] + c.shape[:-1]``.
    """
    c = np.asarray(c, dtype=float)
    return sh_basis(w) @ c.T


@dataclass(frozen=True, eq=False)
class QuadratureSet:
    """Quadrature nodes on the unit sphere with per-sample solid-angle weights."""

    directions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.directions.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self):
        return len(self.weights)

    @property
    def basis(self):
        return _basis_cache(self)

    def integrate(self, values):
        """Weighted sum over the leading (sample) axis of ``values``."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))


@lru_cache(maxsize=16)
def _basis_cache(quad):
    b = sh_basis(quad.directions)
    b.setflags(write=False)
    return b


@lru_cache(maxsize=16)
def fibonacci_sphere(count):
    """Deterministic spherical Fibonacci lattice with equal weights 4*pi/count."""
    if isinstance(count, bool) or not isinstance(count, (int, np.integer)) or count < 1:
        raise ValueError(f"sample count must be a positive integer, got {count!r}")
    k = np.arange(count) + 0.5
    z = 1.0 - 2.0 * k / count
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    dirs = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
    return QuadratureSet(dirs, np.full(count, 4.0 * math.pi / count))


def random_sphere(count, seed=0):
    """Seeded Monte Carlo point set (uniform on the sphere), equal weights."""
    if count < 1:
        raise ValueError(f"sample count must be positive, got {count}")
    rng = np.random.default_rng(seed)
    dirs = direction(rng.normal(size=(count, 3)))
    return QuadratureSet(dirs, np.full(count, 4.0 * math.pi / count))


def project_samples(values, quad):
    """Project function samples taken at ``quad.directions`` onto the SH basis.

    ``values`` has shape ``(n,)`` or ``(n, k)``; the result is ``(9,)`` or ``(k, 9)``.
    """
    values = np.asarray(values, dtype=float)
    weighted = quad.basis * quad.weights[:, None]
    return (weighted.T @ values).T


def project(f, quad=None):
    """Project a spherical function onto SH coefficients.

    ``f`` is called once with the ``(n, 3)`` array of quadrature directions and
    must return ``(n,)`` or ``(n, k)`` values.
    """
    if quad is None:
        quad = fibonacci_sphere(DEFAULT_INTEGRATION_COUNT)
    return project_samples(f(quad.directions), quad)


def gram_matrix(quad):
    b = quad.basis
    return (b * quad.weights[:, None]).T @ b


def read_coeffs(path, allow_empty=False):
    """Read a coefficient text file; returns an array of shape ``(lines, 9)``."""
    rows = []
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != NUM_COEFFS:
            raise FormatError(f"{path}: expected 9 numbers, found {len(parts)}", offset=f"line {lineno}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}", offset=f"line {lineno}") from None
    if not rows and not allow_empty:
        raise FormatError(f"{path}: no coefficient lines")
    return np.array(rows, dtype=float).reshape(-1, NUM_COEFFS)


def write_coeffs(path, coeffs, comment=None):
    """Write coefficients, one line of 9 numbers per row (shortest round-trip repr)."""
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    if coeffs.shape[-1] != NUM_COEFFS:
        raise ValueError(f"coefficients need 9 columns, got shape {coeffs.shape}")
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    for row in coeffs.reshape(-1, NUM_COEFFS):
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
