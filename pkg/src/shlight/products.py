"""Double and triple product integrals of band-limited spherical functions."""

from functools import lru_cache
from itertools import permutations
import math

import numpy as np

from .errors import NumericalError
from .sh import fibonacci_sphere

_PI = math.pi

# Nonzero T_ijk = integral of Y_i Y_j Y_k for i <= j <= k, flat (1-based) indices.
# The (5, 6, 8) entry is printed as (6, 6, 8) in some references; Y_6 Y_6 Y_8 is
# odd in x and integrates to zero, while Y_5 Y_6 Y_8 ~ x^2 y^2 z^2 carries the value.
CANONICAL_TRIPLING = {
    (1, 1, 1): math.sqrt(1 / (4 * _PI)),
    (1, 2, 2): math.sqrt(1 / (4 * _PI)),
    (1, 3, 3): math.sqrt(1 / (4 * _PI)),
    (1, 4, 4): math.sqrt(1 / (4 * _PI)),
    (1, 5, 5): math.sqrt(1 / (4 * _PI)),
    (2, 4, 5): math.sqrt(3 / (20 * _PI)),
    (1, 6, 6): math.sqrt(1 / (4 * _PI)),
    (2, 3, 6): math.sqrt(3 / (20 * _PI)),
    (1, 7, 7): math.sqrt(1 / (4 * _PI)),
    (2, 2, 7): -math.sqrt(1 / (20 * _PI)),
    (3, 3, 7): math.sqrt(1 / (5 * _PI)),
    (4, 4, 7): -math.sqrt(1 / (20 * _PI)),
    (5, 5, 7): -math.sqrt(5 / _PI) / 7,
    (6, 6, 7): math.sqrt(5 / _PI) / 14,
    (7, 7, 7): math.sqrt(5 / _PI) / 7,
    (1, 8, 8): math.sqrt(1 / (4 * _PI)),
    (3, 4, 8): math.sqrt(3 / (20 * _PI)),
    (5, 6, 8): math.sqrt(15 / _PI) / 14,
    (7, 8, 8): math.sqrt(5 / _PI) / 14,
    (1, 9, 9): math.sqrt(1 / (4 * _PI)),
    (2, 2, 9): -math.sqrt(3 / (20 * _PI)),
    (4, 4, 9): math.sqrt(3 / (20 * _PI)),
    (6, 6, 9): -math.sqrt(15 / _PI) / 14,
    (7, 9, 9): -math.sqrt(5 / _PI) / 7,
    (8, 8, 9): math.sqrt(15 / _PI) / 14,
}

CROSS_CHECK_COUNT = 64000
CROSS_CHECK_TOL = 2e-3


def numeric_tripling_tensor(quad=None):
    """Quadrature estimate of all 729 integrals of Y_i Y_j Y_k."""
    if quad is None:
        quad = fibonacci_sphere(CROSS_CHECK_COUNT)
    b = quad.basis
    return np.einsum("n,ni,nj,nk->ijk", quad.weights, b, b, b, optimize=True)


@lru_cache(maxsize=1)
def build_tripling_tensor():
    """Dense, fully symmetric 9x9x9 tripling tensor (0-based indices).

    The canonical table is cross-checked against quadrature on the 64k
    lattice; a mismatch raises NumericalError.
    """
    t = np.zeros((9, 9, 9))
    for (i, j, k), value in CANONICAL_TRIPLING.items():
        for p in set(permutations((i - 1, j - 1, k - 1))):
            t[p] = value
    numeric = numeric_tripling_tensor()
    worst = np.abs(numeric - t).max()
    if worst > CROSS_CHECK_TOL:
        idx = np.unravel_index(np.argmax(np.abs(numeric - t)), t.shape)
        raise NumericalError(
            f"tripling table disagrees with quadrature by {worst:.3g} at "
            f"flat index {tuple(int(i) + 1 for i in idx)}"
        )
    t.setflags(write=False)
    return t


def double_product(f, g):
    """Integral of f*g over the sphere: the coefficient dot product."""
    return np.sum(np.asarray(f, dtype=float) * np.asarray(g, dtype=float), axis=-1)


def product_coeffs(f, g, t=None):
    """Degree-2 projection of the pointwise product f*g: e_i = sum_jk f_j g_k T_ijk."""
    if t is None:
        t = build_tripling_tensor()
    return np.einsum("ijk,...j,...k->...i", t, f, g)


def triple_product(h, f, g, t=None):
    """Integral of h*f*g, exact when all three are degree <= 2 band-limited."""
    return double_product(h, product_coeffs(f, g, t))


def product_matrix(f, t=None):
    """Matrix ``P`` with ``P @ g == product_coeffs(f, g)``; shape ``(..., 9, 9)``."""
    if t is None:
        t = build_tripling_tensor()
    return np.einsum("ijk,...j->...ik", t, f)
