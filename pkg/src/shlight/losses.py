"""Training-loss evaluation over intrinsic maps (no optimization happens here).

Every map loss is a mean squared error averaged over the masked pixels and
over the map's channels.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateInputError
from .render import as_illumination, render_image
from .sh import DEFAULT_INTEGRATION_COUNT, direction, fibonacci_sphere, sh_eval


@dataclass(frozen=True)
class LossWeights:
    normal: float = 0.2
    visibility: float = 0.2
    light: float = 0.01

    def __post_init__(self):
        for name in ("normal", "visibility", "light"):
            value = getattr(self, name)
            if not (value >= 0.0 and math.isfinite(value)):
                raise ValueError(f"loss weight {name} must be a finite nonnegative number, got {value}")


@dataclass
class IntrinsicMaps:
    """Albedo ``(h, w, 3)``, normals ``(h, w, 3)``, visibility ``(h, w, 9)`` and RGB light ``(3, 9)``."""

    albedo: np.ndarray
    normal: np.ndarray
    visibility: np.ndarray
    light: np.ndarray

    def __post_init__(self):
        self.albedo = np.asarray(self.albedo, dtype=float)
        self.normal = np.asarray(self.normal, dtype=float)
        self.visibility = np.asarray(self.visibility, dtype=float)
        self.light = as_illumination(self.light)

    @property
    def shape(self):
        return self.albedo.shape[:2]


@dataclass(frozen=True)
class ReconVariant:
    """Which factors of the render come from the estimate.

    ``detached`` lists estimated factors whose gradients a trainer must block;
    it does not change the loss value.
    """

    name: str
    estimated: frozenset
    detached: frozenset = frozenset()


FACTORS = ("albedo", "normal", "visibility", "light")

RECON_VARIANTS = {
    "albedo": ReconVariant("albedo", frozenset({"albedo"})),
    "normal": ReconVariant("normal", frozenset({"normal"})),
    "visibility": ReconVariant("visibility", frozenset({"visibility"})),
    "light": ReconVariant("light", frozenset({"light"})),
    "albedo,normal,light": ReconVariant(
        "albedo,normal,light", frozenset(FACTORS), detached=frozenset({"visibility"})
    ),
    "full": ReconVariant("full", frozenset(FACTORS)),
}

STAGES = ("stage1-synthetic", "stage2-real")


def _check_mask(mask, shape):
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != tuple(shape):
        raise ValueError(f"mask shape {mask.shape} does not match maps {tuple(shape)}")
    if not mask.any():
        raise DegenerateInputError("loss mask selects no pixels")
    return mask


def masked_mse(a, b, mask):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"map shapes differ: {a.shape} vs {b.shape}")
    mask = _check_mask(mask, a.shape[:2])
    return float(np.mean((a[mask] - b[mask]) ** 2))


def component_losses(est, gt, mask):
    """Albedo, normal and visibility MSEs; normals are unit-normalized first."""
    mask = _check_mask(mask, gt.shape)
    return {
        "albedo": masked_mse(est.albedo, gt.albedo, mask),
        "normal": float(np.mean((direction(est.normal[mask]) - direction(gt.normal[mask])) ** 2)),
        "visibility": masked_mse(est.visibility, gt.visibility, mask),
    }


def illumination_loss(light_est, light_gt, sample_count=DEFAULT_INTEGRATION_COUNT):
    """MSE of reconstructed radiance over lattice directions and channels."""
    quad = fibonacci_sphere(sample_count)
    diff = np.asarray(light_est, dtype=float) - np.asarray(light_gt, dtype=float)
    return float(np.mean(sh_eval(diff, quad.directions) ** 2))


def reconstruction_loss(variant, est, gt, image, mask):
    """MSE between ``image`` and the render whose factors follow ``variant``."""
    if isinstance(variant, str):
        try:
            variant = RECON_VARIANTS[variant]
        except KeyError:
            raise ValueError(f"unknown reconstruction variant {variant!r}; choose from {sorted(RECON_VARIANTS)}") from None
    mask = _check_mask(mask, gt.shape)
    pick = {f: getattr(est if f in variant.estimated else gt, f) for f in FACTORS}
    rendered = render_image(pick["albedo"], pick["normal"], pick["visibility"], pick["light"], mask)
    return masked_mse(rendered, image, mask)


def loss_terms(stage, est, gt, image, mask, sample_count=DEFAULT_INTEGRATION_COUNT):
    """Unweighted loss terms used by ``stage``."""
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}; choose from {STAGES}")
    terms = {f"recon-{name}": reconstruction_loss(name, est, gt, image, mask)
             for name in (("albedo", "normal", "visibility", "light") if stage == STAGES[0]
                          else ("albedo,normal,light",))}
    terms.update(component_losses(est, gt, mask))
    terms["light"] = illumination_loss(est.light, gt.light, sample_count)
    return terms


def stage_weights(stage, weights):
    """Coefficient of each term in the stage's total."""
    w = {"albedo": 1.0, "normal": weights.normal, "visibility": weights.visibility, "light": weights.light}
    if stage == STAGES[0]:
        w.update({
            "recon-albedo": 1.0,
            "recon-normal": weights.normal,
            "recon-visibility": weights.visibility,
            "recon-light": weights.light,
        })
    else:
        w["recon-albedo,normal,light"] = 1.0
    return w


def total_loss(stage, est, gt, image, mask, weights=LossWeights(), sample_count=DEFAULT_INTEGRATION_COUNT):
    """Weighted total for ``stage``; returns ``(total, terms)``."""
    terms = loss_terms(stage, est, gt, image, mask, sample_count)
    w = stage_weights(stage, weights)
    return sum(w[k] * terms[k] for k in terms), terms
