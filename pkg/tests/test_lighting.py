import math

import numpy as np
import pytest

from shlight.errors import DegenerateInputError
from shlight.lighting import (
    clamp_nonnegative,
    equirect_quadrature,
    forward_shading,
    project_envmap,
    recover_illumination,
    rotate_illumination,
    scale_intensity,
    shading_values,
)
from shlight.render import CLAMPED_COSINE_Z, render_shading
from shlight.sh import CONSTANT_ONE, DEGREE, fibonacci_sphere, sh_basis, sh_eval

from conftest import random_directions

FUNK_HECKE = np.array([math.pi, 2 * math.pi / 3, math.pi / 4])[DEGREE]


def test_forward_shading_closed_form(rng):
    light = rng.normal(size=(3, 9))
    np.testing.assert_allclose(forward_shading(light, 8000), FUNK_HECKE * light, atol=1e-12)


def test_shading_values_match_render(rng):
    light = rng.normal(size=(3, 9))
    for n in random_directions(rng, 10):
        np.testing.assert_allclose(shading_values(light, n) / math.pi,
                                   render_shading(n, CONSTANT_ONE, light), atol=1e-12)


def test_recovery_round_trip(rng):
    light = rng.normal(size=(4, 9))
    rec = recover_illumination(forward_shading(light, 4000), 4000)
    np.testing.assert_allclose(rec.coeffs, light, atol=1e-10)
    assert np.all(rec.residual < 1e-10)
    assert 1.0 <= rec.condition < 10.0


def test_recovery_single_vector(rng):
    light = rng.normal(size=9)
    rec = recover_illumination(FUNK_HECKE * light, 2000)
    assert rec.coeffs.shape == (9,)
    np.testing.assert_allclose(rec.coeffs, light, atol=1e-10)


def test_recovery_of_single_basis_shading():
    s = np.zeros(9)
    s[4] = 1.0
    rec = recover_illumination(s, 2000)
    assert rec.coeffs[4] == pytest.approx(1.0 / FUNK_HECKE[4])


def test_recovery_validation():
    with pytest.raises(ValueError):
        recover_illumination(np.zeros(9), 8)
    with pytest.raises(ValueError):
        recover_illumination(np.full(9, np.nan), 100)


def test_clamp_nonnegative():
    # A z-dipole is negative on the lower hemisphere.
    light = np.zeros(9)
    light[2] = 1.0
    clamped = clamp_nonnegative(light, 20000)
    w = fibonacci_sphere(2000).directions
    assert sh_eval(clamped, w).min() > sh_eval(light, w).min()
    # The clamped dipole is K1 max(z, 0): c1 = sqrt(3) / 4 and c3 = 1 / 2.
    assert clamped[0] == pytest.approx(math.sqrt(3) / 4, abs=2e-3)
    assert clamped[2] == pytest.approx(0.5, abs=2e-3)


def test_clamp_keeps_positive_light():
    light = CONSTANT_ONE * 3.0
    np.testing.assert_allclose(clamp_nonnegative(light), light, atol=1e-5)


def test_scale_intensity(rng):
    albedo = np.full((2, 2, 3), 0.5)
    normals = np.tile([0.0, 0.0, 1.0], (2, 2, 1))
    vis = np.tile(CONSTANT_ONE, (2, 2, 1))
    mask = np.ones((2, 2), dtype=bool)
    light = np.tile(CONSTANT_ONE, (3, 1)) * 4.0
    scaled, factor = scale_intensity(light, albedo, normals, vis, mask, target=0.9)
    assert factor == pytest.approx(0.9 / 2.0)
    np.testing.assert_allclose(scaled, light * factor)


def test_scale_intensity_degenerate():
    albedo = np.zeros((1, 1, 3))
    normals = np.array([[[0.0, 0.0, 1.0]]])
    vis = np.zeros((1, 1, 9))
    light = np.ones((3, 9))
    with pytest.raises(DegenerateInputError):
        scale_intensity(light, albedo, normals, vis, np.ones((1, 1), dtype=bool))
    with pytest.raises(DegenerateInputError):
        scale_intensity(light, albedo, normals, vis, np.zeros((1, 1), dtype=bool))


def test_rotate_illumination_preserves_energy(rng):
    light = rng.normal(size=(3, 9))
    rotated = rotate_illumination(light, 0.3, 1.1, -0.7)
    np.testing.assert_allclose(np.linalg.norm(rotated, axis=1), np.linalg.norm(light, axis=1), rtol=1e-12)
    np.testing.assert_array_equal(rotate_illumination(light, 0, 0, 0), light)


def test_equirect_layout():
    q = equirect_quadrature(4, 8)
    dirs = q.directions.reshape(4, 8, 3)
    assert dirs[0, 0, 2] > 0.9 and dirs[-1, 0, 2] < -0.9
    assert dirs[1, 0, 0] > 0 and abs(dirs[1, 0, 1]) < dirs[1, 0, 0]
    assert equirect_quadrature(64, 128).weights.sum() == pytest.approx(4 * math.pi, rel=1e-3)


def test_project_envmap_recovers_band_limited(rng):
    light = rng.normal(size=(3, 9))
    q = equirect_quadrature(256, 512)
    image = sh_eval(light, q.directions).reshape(256, 512, 3)
    np.testing.assert_allclose(project_envmap(image), light, atol=2e-3)


def test_project_envmap_grayscale():
    assert project_envmap(np.ones((64, 128))).shape == (1, 9)


def test_recovered_light_renders_same_shading(rng):
    light = rng.normal(size=(3, 9))
    rec = recover_illumination(forward_shading(light, 4000), 4000)
    n = random_directions(rng, 5)
    np.testing.assert_allclose(shading_values(rec.coeffs, n), shading_values(light, n), atol=1e-10)
    np.testing.assert_allclose(shading_values(light, n), sh_basis(n) @ (FUNK_HECKE * light).T, atol=1e-12)
    assert CLAMPED_COSINE_Z[0] == pytest.approx(math.sqrt(math.pi) / 2)


def test_zero_shading_gives_zero_light():
    rec = recover_illumination(np.zeros((3, 9)), 2000)
    assert np.all(rec.coeffs == 0.0)


def test_constant_light_from_constant_shading():
    # The integral of the clamped cosine alone is pi at every normal.
    s = np.zeros(9)
    s[0] = math.pi * 2 * math.sqrt(math.pi)
    rec = recover_illumination(s)
    np.testing.assert_allclose(rec.coeffs, CONSTANT_ONE, atol=1e-12)
    assert rec.residual < 1e-8


def test_consistent_residual_at_default_count(rng):
    light = rng.normal(size=(3, 9))
    rec = recover_illumination(forward_shading(light))
    assert rec.residual.max() < 1e-8


def test_clamp_zero_and_mean(rng):
    np.testing.assert_array_equal(clamp_nonnegative(np.zeros(9), 2000), np.zeros(9))
    for _ in range(5):
        light = rng.normal(size=9)
        assert clamp_nonnegative(light, 8000)[0] >= light[0] - 1e-12


def test_scale_intensity_halves(rng):
    albedo = np.full((1, 1, 3), 1.0)
    normals = np.array([[[0.0, 0.0, 1.0]]])
    vis = CONSTANT_ONE[None, None, :]
    light = np.tile(CONSTANT_ONE, (3, 1)) * 1.6
    scaled, factor = scale_intensity(light, albedo, normals, vis, np.ones((1, 1), dtype=bool), target=0.8)
    assert factor == pytest.approx(0.5, rel=1e-12)


def test_scale_intensity_attains_target(rng):
    from shlight.render import render_image

    for _ in range(5):
        albedo = rng.uniform(0.2, 1, (3, 3, 3))
        normals = random_directions(rng, 9).reshape(3, 3, 3)
        vis = np.tile(CONSTANT_ONE, (3, 3, 1)) + rng.normal(scale=0.1, size=(3, 3, 9))
        mask = np.ones((3, 3), dtype=bool)
        light = np.tile(CONSTANT_ONE, (3, 1)) + rng.normal(scale=0.2, size=(3, 9))
        target = rng.uniform(0.8, 1.0)
        scaled, _ = scale_intensity(light, albedo, normals, vis, mask, target)
        assert render_image(albedo, normals, vis, scaled, mask).max() == pytest.approx(target, abs=1e-10)
