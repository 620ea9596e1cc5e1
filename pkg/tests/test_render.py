import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from shlight.errors import NumericalError
from shlight.gradcheck import finite_difference_gradients, random_pixel, relative_error
from shlight.render import (
    CLAMPED_COSINE_Z,
    PixelIntrinsics,
    clamped_cosine_z,
    lobe_normal_jacobian,
    render_gradients,
    render_image,
    render_pixel,
    render_shading,
    shading_image,
)
from shlight.sh import CONSTANT_ONE, DEGREE, sh_basis, sh_basis_gradient

from conftest import random_directions

UNIT_LIGHT = np.tile(CONSTANT_ONE, (3, 1))
FULL_VIS = CONSTANT_ONE
ZONAL_SCALE = (np.sqrt(4 * math.pi / (2 * np.arange(3) + 1)) * CLAMPED_COSINE_Z[[0, 2, 6]])[DEGREE]

unit_vectors = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-3)


def test_clamped_cosine_values():
    c = clamped_cosine_z()
    assert c[0] == pytest.approx(math.sqrt(math.pi) / 2)
    assert c[2] == pytest.approx(math.sqrt(math.pi / 3))
    assert c[6] == pytest.approx(math.sqrt(5 * math.pi) / 8)
    c[0] = 0.0
    assert CLAMPED_COSINE_Z[0] != 0.0


@settings(max_examples=100, deadline=None)
@given(unit_vectors)
def test_unit_light_full_visibility_gives_one(n):
    np.testing.assert_allclose(render_shading(n, FULL_VIS, UNIT_LIGHT), 1.0, atol=1e-10)


def test_zero_visibility_is_black(rng):
    light = rng.normal(size=(3, 9))
    assert np.all(render_shading([0, 1, 0], np.zeros(9), light) == 0.0)


def test_linear_light_shading():
    # Light L(w) = Y_3(w) with full visibility: S(z) = (2/3) pi * Y_3(z) / pi.
    light = np.zeros((3, 9))
    light[:, 2] = 1.0
    expected = 1.0 / math.sqrt(3.0 * math.pi)
    np.testing.assert_allclose(render_shading([0, 0, 1], FULL_VIS, light), expected, rtol=1e-12)


def test_render_scales_with_albedo(rng):
    light = rng.uniform(0, 1, (3, 9))
    vis = rng.normal(size=9)
    a = PixelIntrinsics([0.2, 0.5, 1.0], [0, 0, 1], vis)
    np.testing.assert_allclose(render_pixel(a, light), a.albedo * render_shading([0, 0, 1], vis, light), rtol=1e-14)


def test_render_linear_in_light_and_visibility(rng):
    l1, l2 = rng.normal(size=(2, 3, 9))
    v1, v2 = rng.normal(size=(2, 9))
    n = [0.3, -0.4, 0.8]
    np.testing.assert_allclose(
        render_shading(n, v1, l1 + 2 * l2),
        render_shading(n, v1, l1) + 2 * render_shading(n, v1, l2), atol=1e-12)
    np.testing.assert_allclose(
        render_shading(n, v1 - v2, l1),
        render_shading(n, v1, l1) - render_shading(n, v2, l1), atol=1e-12)


def test_pixel_validation():
    with pytest.raises(ValueError):
        PixelIntrinsics([1.2, 0, 0], [0, 0, 1], FULL_VIS)
    with pytest.raises(ValueError):
        PixelIntrinsics(0.5, [0, 0, 1], np.zeros(4))
    with pytest.raises(ValueError):
        PixelIntrinsics(0.5, [0, 0, 0], FULL_VIS)
    with pytest.raises(ValueError):
        render_shading([0, 0, 1], FULL_VIS, np.zeros((1, 9)))
    p = PixelIntrinsics(0.5, [0, 0, 2], FULL_VIS)
    np.testing.assert_array_equal(p.albedo, [0.5] * 3)
    np.testing.assert_array_equal(p.normal, [0, 0, 1])


def test_lobe_jacobian_matches_zonal_closed_form(rng):
    # The rotated lobe is ZONAL_SCALE * Y(n); its tangent gradient is that of Y.
    for n in random_directions(rng, 200):
        proj = np.eye(3) - np.outer(n, n)
        expected = ZONAL_SCALE[:, None] * (sh_basis_gradient(n) @ proj)
        np.testing.assert_allclose(lobe_normal_jacobian(n), expected, atol=1e-12)


@pytest.mark.parametrize("n", [[0, 0, 1], [0, 0, -1], [1, 0, 0], [0, 1, 0], [0, -1, 0],
                               [1, 1, 1], [0, 0.7071, 0.7072], [0, 0.7072, 0.7071]])
def test_lobe_jacobian_on_chart_edges(n):
    n = np.asarray(n, dtype=float) / np.linalg.norm(n)
    expected = ZONAL_SCALE[:, None] * (sh_basis_gradient(n) @ (np.eye(3) - np.outer(n, n)))
    np.testing.assert_allclose(lobe_normal_jacobian(n), expected, atol=1e-12)


def test_jacobian_is_tangent(rng):
    for n in random_directions(rng, 20):
        np.testing.assert_allclose(lobe_normal_jacobian(n) @ n, 0.0, atol=1e-12)


def test_angle_chart_pole_raises():
    from shlight.render import _lobe_angle_derivatives

    with pytest.raises(NumericalError):
        _lobe_angle_derivatives(np.array([0.0, 0.0, 1.0]))


def test_visibility_gradient_of_constant_term():
    # Constant light and visibility v1 only: dI/dv1 = 1 / (2 sqrt(pi)) with unit albedo.
    p = PixelIntrinsics(1.0, [0.2, 0.3, 0.9], FULL_VIS)
    g = render_gradients(p, UNIT_LIGHT)
    np.testing.assert_allclose(g.d_visibility[:, 0], 1.0 / (2.0 * math.sqrt(math.pi)), rtol=1e-12)


def test_uniform_light_has_no_normal_gradient(rng):
    p = PixelIntrinsics(rng.uniform(0, 1, 3), random_directions(rng, 1)[0], FULL_VIS)
    np.testing.assert_allclose(render_gradients(p, UNIT_LIGHT).d_normal, 0.0, atol=1e-14)


def test_albedo_gradient_is_shading(rng):
    p, light = random_pixel(rng)
    g = render_gradients(p, light)
    np.testing.assert_allclose(g.d_albedo, render_shading(p.normal, p.visibility, light), rtol=1e-14)


def test_gradients_match_finite_differences(rng):
    for _ in range(20):
        p, light = random_pixel(rng)
        g = render_gradients(p, light)
        fd = finite_difference_gradients(p, light)
        for a, f in zip((g.d_albedo, g.d_normal, g.d_visibility, g.d_light), fd):
            assert relative_error(a, f).max() < 1e-4


def test_gradients_near_poles(rng):
    for n in ([0, 0, 1], [1e-9, 0, -1], [0.0, 0.6, 0.8]):
        p = PixelIntrinsics(0.7, n, rng.normal(size=9))
        light = rng.normal(size=(3, 9))
        g = render_gradients(p, light)
        fd = finite_difference_gradients(p, light)
        assert relative_error(g.d_normal, fd[1]).max() < 1e-4


def test_relative_error_floor():
    assert relative_error(1e-12, 0.0) < 1e-4
    assert relative_error(1.0, 1.0 + 1e-6) == pytest.approx(1e-6, rel=1e-3)


def test_shading_image_matches_pixels(rng):
    h, w = 3, 4
    normals = rng.normal(size=(h, w, 3))
    vis = rng.normal(size=(h, w, 9))
    albedo = rng.uniform(0, 1, (h, w, 3))
    light = rng.normal(size=(3, 9))
    mask = rng.uniform(size=(h, w)) > 0.3
    img = render_image(albedo, normals, vis, light, mask)
    for r in range(h):
        for c in range(w):
            if mask[r, c]:
                p = PixelIntrinsics(albedo[r, c], normals[r, c], vis[r, c])
                np.testing.assert_allclose(img[r, c], render_pixel(p, light), rtol=1e-12, atol=1e-14)
            else:
                assert np.all(img[r, c] == 0.0)


def test_image_shape_mismatch():
    mask = np.ones((2, 2), dtype=bool)
    with pytest.raises(ValueError, match="visibility"):
        render_image(np.ones((2, 2, 3)), np.ones((2, 2, 3)), np.ones((2, 3, 9)), UNIT_LIGHT, mask)
    with pytest.raises(ValueError):
        shading_image(np.ones((2, 2, 3)), np.ones((2, 2, 8)), UNIT_LIGHT, mask)


def test_empty_mask_renders_black():
    mask = np.zeros((2, 2), dtype=bool)
    out = render_image(np.ones((2, 2, 3)), np.zeros((2, 2, 3)), np.zeros((2, 2, 9)), UNIT_LIGHT, mask)
    assert np.all(out == 0.0)


def test_shading_basis_identity(rng):
    # With full visibility the shading is sum_i k_l L_i Y_i(n) / pi.
    light = rng.normal(size=(3, 9))
    n = random_directions(rng, 1)[0]
    expected = (light * ZONAL_SCALE) @ sh_basis(n) / math.pi
    np.testing.assert_allclose(render_shading(n, FULL_VIS, light), expected, atol=1e-12)


def test_linear_light_shading_monte_carlo(rng):
    # Independent check of the pure-Y_3 example with 1e6 uniform samples.
    w = random_directions(rng, 1_000_000)
    samples = 4 * math.pi * sh_basis(w)[:, 2] * np.maximum(w[:, 2], 0.0) / math.pi
    se = samples.std() / math.sqrt(len(samples))
    light = np.zeros((3, 9))
    light[:, 2] = 1.0
    assert abs(render_shading([0, 0, 1], FULL_VIS, light)[0] - samples.mean()) < 4 * se


def test_lobe_numeric_values():
    assert CLAMPED_COSINE_Z[0] == pytest.approx(0.8862269, abs=1e-7)
    assert CLAMPED_COSINE_Z[2] == pytest.approx(1.0233267, abs=1e-7)


def test_zero_albedo_and_unit_slope():
    dark = PixelIntrinsics(0.0, [0.1, 0.2, 0.9], FULL_VIS)
    assert np.all(render_pixel(dark, UNIT_LIGHT) == 0.0)
    lit = PixelIntrinsics(1.0, [0.1, 0.2, 0.9], FULL_VIS)
    np.testing.assert_allclose(render_gradients(lit, UNIT_LIGHT).d_albedo, 1.0, atol=1e-12)
