"""Central finite-difference verification of the analytic render gradients."""

from dataclasses import dataclass

import numpy as np

from .products import build_tripling_tensor
from .render import PixelIntrinsics, render_gradients, render_pixel
from .sh import direction

FD_STEP = 1e-5
REL_TOL = 1e-4
ABS_FLOOR = 1e-8


def relative_error(analytic, numeric):
    """``|a - f| / max(|a|, |f|, floor)`` with the floor set so tiny values use 1e-8 absolute."""
    a, f = np.asarray(analytic, dtype=float), np.asarray(numeric, dtype=float)
    return np.abs(a - f) / np.maximum(np.maximum(np.abs(a), np.abs(f)), ABS_FLOOR / REL_TOL)


def finite_difference_gradients(p, light, h=FD_STEP, t=None):
    """Same layout as :class:`RenderGradients`, by central differences."""
    if t is None:
        t = build_tripling_tensor()

    def render(albedo=p.albedo, normal=p.normal, vis=p.visibility, lt=light):
        q = PixelIntrinsics.__new__(PixelIntrinsics)
        # Bypass validation: albedo steps may leave [0, 1] and normals are renormalized here.
        object.__setattr__(q, "albedo", np.asarray(albedo, dtype=float))
        object.__setattr__(q, "normal", direction(normal))
        object.__setattr__(q, "visibility", np.asarray(vis, dtype=float))
        object.__setattr__(q, "mask", True)
        return render_pixel(q, lt, t)

    d_albedo = np.zeros(3)
    for c in range(3):
        e = np.zeros(3)
        e[c] = h
        d_albedo[c] = (render(albedo=p.albedo + e)[c] - render(albedo=p.albedo - e)[c]) / (2 * h)
    d_normal = np.zeros((3, 3))
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        d_normal[:, k] = (render(normal=p.normal + e) - render(normal=p.normal - e)) / (2 * h)
    d_vis = np.zeros((3, 9))
    for k in range(9):
        e = np.zeros(9)
        e[k] = h
        d_vis[:, k] = (render(vis=p.visibility + e) - render(vis=p.visibility - e)) / (2 * h)
    d_light = np.zeros((3, 9))
    for c in range(3):
        for k in range(9):
            e = np.zeros((3, 9))
            e[c, k] = h
            d_light[c, k] = (render(lt=light + e)[c] - render(lt=light - e)[c]) / (2 * h)
    return d_albedo, d_normal, d_vis, d_light


def random_pixel(rng):
    p = PixelIntrinsics(rng.uniform(0.0, 1.0, 3), direction(rng.normal(size=3)), rng.uniform(-1.0, 1.0, 9))
    return p, rng.uniform(-1.0, 1.0, (3, 9))


@dataclass
class GradcheckReport:
    trials: int
    worst: float
    worst_trial: int
    worst_param: str
    per_param: dict

    @property
    def passed(self):
        return self.worst < REL_TOL


def run_gradcheck(trials=100, seed=0, h=FD_STEP):
    """Compare analytic and finite-difference partials on random pixels."""
    rng = np.random.default_rng(seed)
    t = build_tripling_tensor()
    names = ("albedo", "normal", "visibility", "light")
    per_param = dict.fromkeys(names, 0.0)
    worst, worst_trial, worst_param = 0.0, -1, ""
    for trial in range(trials):
        p, light = random_pixel(rng)
        g = render_gradients(p, light, t)
        analytic = (g.d_albedo, g.d_normal, g.d_visibility, g.d_light)
        numeric = finite_difference_gradients(p, light, h, t)
        for name, a, f in zip(names, analytic, numeric):
            err = float(relative_error(a, f).max())
            per_param[name] = max(per_param[name], err)
            if err > worst:
                worst, worst_trial, worst_param = err, trial, name
    return GradcheckReport(trials, worst, worst_trial, worst_param, per_param)
