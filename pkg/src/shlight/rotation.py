"""Rotation of degree-2 SH coefficient vectors.

A rotation R = Rz(gamma) Ry(beta) Rz(alpha) is realized on coefficients as the
product ``Z(gamma) @ X(-90) @ Z(beta) @ X(+90) @ Z(alpha)`` of sparse 9x9
matrices. A matrix ``M`` maps coefficients ``f`` of a function to those of its
rotated copy ``g`` with ``g(R w) = f(w)``, i.e. ``g = M @ f``.
"""

import math

import numpy as np

from .sh import direction

_S3 = math.sqrt(3.0) / 2.0

# 0-based (row, col, value); row/col i corresponds to flat index i + 1.
_X_PLUS_90_ENTRIES = [
    (0, 0, 1.0), (1, 2, -1.0), (2, 1, 1.0),
    (3, 3, 1.0), (4, 7, -1.0), (5, 5, -1.0),
    (6, 6, -0.5), (6, 8, -_S3), (7, 4, 1.0),
    (8, 6, -_S3), (8, 8, 0.5),
]
_X_MINUS_90_ENTRIES = [
    (0, 0, 1.0), (1, 2, 1.0), (2, 1, -1.0),
    (3, 3, 1.0), (4, 7, 1.0), (5, 5, -1.0),
    (6, 6, -0.5), (6, 8, -_S3), (7, 4, -1.0),
    (8, 6, -_S3), (8, 8, 0.5),
]


def _sparse(entries):
    m = np.zeros((9, 9))
    for i, j, v in entries:
        m[i, j] = v
    m.setflags(write=False)
    return m


X_PLUS_90 = _sparse(_X_PLUS_90_ENTRIES)
X_MINUS_90 = _sparse(_X_MINUS_90_ENTRIES)


def _check_angles(*angles):
    arr = np.asarray(angles, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"rotation angles must be finite, got {angles}")


def _z_matrices(alpha, derivative=False):
    """Batched Z(alpha) (or dZ/dalpha), shape ``alpha.shape + (9, 9)``."""
    a = np.asarray(alpha, dtype=float)
    c1, s1 = np.cos(a), np.sin(a)
    c2, s2 = np.cos(2 * a), np.sin(2 * a)
    if derivative:
        c1, s1, c2, s2 = -s1, c1, -2 * s2, 2 * c2
        one = np.zeros_like(a)
    else:
        one = np.ones_like(a)
    m = np.zeros(a.shape + (9, 9))
    m[..., 0, 0] = one
    m[..., 1, 1] = c1
    m[..., 1, 3] = s1
    m[..., 2, 2] = one
    m[..., 3, 1] = -s1
    m[..., 3, 3] = c1
    m[..., 4, 4] = c2
    m[..., 4, 8] = s2
    m[..., 5, 5] = c1
    m[..., 5, 7] = s1
    m[..., 6, 6] = one
    m[..., 7, 5] = -s1
    m[..., 7, 7] = c1
    m[..., 8, 4] = -s2
    m[..., 8, 8] = c2
    return m


def z_rotation(alpha):
    """SH matrix for a rotation of ``alpha`` radians about +Z."""
    _check_angles(alpha)
    return _z_matrices(float(alpha))


def z_rotation_derivative(alpha):
    """Elementwise derivative of :func:`z_rotation` with respect to ``alpha``."""
    _check_angles(alpha)
    return _z_matrices(float(alpha), derivative=True)


def x_plus_90():
    return X_PLUS_90.copy()


def x_minus_90():
    return X_MINUS_90.copy()


def _zyz(alpha, beta, gamma):
    # Batched over broadcastable angle arrays.
    alpha, beta, gamma = np.broadcast_arrays(
        np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float), np.asarray(gamma, dtype=float)
    )
    return _z_matrices(gamma) @ X_MINUS_90 @ _z_matrices(beta) @ X_PLUS_90 @ _z_matrices(alpha)


def zyz_rotation(alpha, beta, gamma):
    """SH matrix of R = Rz(gamma) Ry(beta) Rz(alpha).

    With ``beta == 0`` the Y-rotation is the identity and the product collapses
    to ``Z(gamma) @ Z(alpha)``; this keeps zero-angle rotations exact.
    """
    _check_angles(alpha, beta, gamma)
    if beta == 0.0:
        return _z_matrices(float(gamma)) @ _z_matrices(float(alpha))
    return _zyz(alpha, beta, gamma)


def rotate_coeffs(rot, c):
    """Apply ``g_i = sum_j M_ij f_j`` to coefficients ``c`` of shape ``(..., 9)``."""
    return np.asarray(c, dtype=float) @ np.asarray(rot).T


def euler_zyz_matrix(alpha, beta, gamma):
    """The 3x3 rotation Rz(gamma) @ Ry(beta) @ Rz(alpha) acting on direction vectors."""
    def rz(t):
        c, s = math.cos(t), math.sin(t)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    c, s = math.cos(beta), math.sin(beta)
    ry = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return rz(gamma) @ ry @ rz(alpha)


def matrix_to_euler_zyz(r):
    """Angles ``(alpha, beta, gamma)`` with ``euler_zyz_matrix(*angles) == r``."""
    r = np.asarray(r, dtype=float)
    beta = math.acos(min(1.0, max(-1.0, r[2, 2])))
    if math.sin(beta) > 1e-12:
        alpha = math.atan2(r[2, 1], -r[2, 0])
        gamma = math.atan2(r[1, 2], r[0, 2])
    elif r[2, 2] > 0:
        alpha, gamma = 0.0, math.atan2(r[1, 0], r[0, 0])
    else:
        alpha, gamma = 0.0, math.atan2(-r[1, 0], -r[0, 0])
    return alpha, beta, gamma


def sh_rotation_from_matrix(r):
    """SH matrix for an arbitrary 3x3 rotation via its ZYZ decomposition."""
    return zyz_rotation(*matrix_to_euler_zyz(r))


def normal_angles(n):
    """ZYZ angles (beta, azimuth) taking +Z to the unit normal(s) ``n``.

    The azimuth is carried by the last Z rotation; exactly at the poles it is
    undefined and fixed to 0.
    """
    n = np.asarray(n, dtype=float)
    nz = np.clip(n[..., 2], -1.0, 1.0)
    beta = np.arccos(nz)
    pole = (n[..., 0] == 0.0) & (n[..., 1] == 0.0)
    phi = np.where(pole, 0.0, np.arctan2(n[..., 1], n[..., 0]))
    return beta, phi


def rotate_to_normal(lobe_z, n):
    """Rotate a Z-symmetric lobe so that its axis points along ``n``.

    ``n`` may be a single direction or an ``(..., 3)`` array; the output gains
    the matching leading axes.
    """
    n = direction(n)
    beta, phi = normal_angles(n)
    rot = _zyz(0.0, beta, phi)
    return np.einsum("...ij,j->...i", rot, np.asarray(lobe_z, dtype=float))


def is_orthogonal(m, tol=1e-10):
    m = np.asarray(m)
    return bool(np.abs(m @ m.T - np.eye(9)).max() < tol)


def is_block_diagonal(m):
    m = np.asarray(m)
    mask = np.ones((9, 9), dtype=bool)
    mask[0, 0] = False
    mask[1:4, 1:4] = False
    mask[4:, 4:] = False
    return bool(np.all(m[mask] == 0.0))
