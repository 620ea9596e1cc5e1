"""Float image files (PFM), normal-map encoding and 8-bit display export.

Images are numpy arrays of shape ``(height, width, channels)`` with row 0 at
the top. PFM stores rows bottom-up; the reader and writer flip accordingly.
"""

from pathlib import Path
import re

import numpy as np
from PIL import Image

from .errors import DegenerateInputError, FormatError
from .sh import read_coeffs

_HEADER = re.compile(rb"(P[Ff])\s+(\d+)\s+(\d+)\s+(\S+)\s")


def write_pfm(path, image, little_endian=True):
    image = np.asarray(image)
    if image.ndim == 2:
        image = image[..., None]
    h, w, ch = image.shape
    if ch not in (1, 3):
        raise ValueError(f"PFM holds 1 or 3 channels, got {ch}")
    kind = b"PF" if ch == 3 else b"Pf"
    scale = b"-1.0" if little_endian else b"1.0"
    dtype = "<f4" if little_endian else ">f4"
    payload = np.ascontiguousarray(image[::-1], dtype=dtype).tobytes()
    Path(path).write_bytes(kind + b"\n%d %d\n" % (w, h) + scale + b"\n" + payload)


def read_pfm(path):
    """Read a PFM file; returns float32 ``(h, w, 3)`` or ``(h, w, 1)``."""
    data = Path(path).read_bytes()
    m = _HEADER.match(data)
    if m is None:
        raise FormatError(f"{path}: malformed PFM header", offset=0)
    kind, w, h, scale = m.groups()
    try:
        scale = float(scale)
    except ValueError:
        raise FormatError(f"{path}: bad PFM scale {scale!r}", offset=m.start(4)) from None
    if scale == 0.0:
        raise FormatError(f"{path}: PFM scale must be nonzero", offset=m.start(4))
    w, h = int(w), int(h)
    ch = 3 if kind == b"PF" else 1
    start = m.end()
    need = w * h * ch * 4
    if len(data) - start < need:
        raise FormatError(
            f"{path}: truncated PFM payload, expected {need} bytes, found {len(data) - start}",
            offset=len(data),
        )
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(data, dtype=dtype, count=w * h * ch, offset=start)
    return arr.reshape(h, w, ch)[::-1].astype(np.float32)


def read_mask(path):
    """Foreground mask from a PFM: any nonzero sample marks the pixel."""
    return np.any(read_pfm(path) != 0.0, axis=-1)


def write_mask(path, mask):
    write_pfm(path, np.asarray(mask, dtype=np.float32)[..., None])


def encode_normal_map(normals):
    """Map unit normals from [-1, 1] to [0, 1] per component."""
    return (np.asarray(normals, dtype=float) + 1.0) / 2.0


def decode_normal_map(image, mask=None):
    """Invert :func:`encode_normal_map` and re-normalize.

    Inside the mask, a pixel stored as all zeros or decoding to a zero vector
    raises DegenerateInputError. Background pixels decode to zero.
    """
    image = np.asarray(image, dtype=float)
    if mask is None:
        mask = np.ones(image.shape[:-1], dtype=bool)
    n = 2.0 * image - 1.0
    norm = np.linalg.norm(n, axis=-1)
    bad = mask & ((norm < 1e-6) | np.all(image == 0.0, axis=-1))
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise DegenerateInputError(f"degenerate normal at pixel (row {r}, col {c})")
    out = np.zeros_like(n)
    out[mask] = n[mask] / norm[mask][:, None]
    return out


def display_bytes(image, gamma=2.2):
    """Clamp to [0, 1], apply 1/gamma, quantize with round-half-up to uint8."""
    x = np.clip(np.asarray(image, dtype=float), 0.0, 1.0) ** (1.0 / gamma)
    return np.floor(x * 255.0 + 0.5).astype(np.uint8)


def export_display(path, image, gamma=2.2):
    """Write an 8-bit PNG or PPM (chosen by file suffix)."""
    b = display_bytes(image, gamma)
    if b.ndim == 3 and b.shape[-1] == 1:
        b = b[..., 0]
    fmt = "PPM" if Path(path).suffix.lower() in (".ppm", ".pgm", ".pnm") else "PNG"
    Image.fromarray(b).save(path, format=fmt)


def read_visibility_map(path, mask):
    """Visibility coefficients laid out as a ``(h, w, 9)`` map.

    The file holds either one line per pixel (row-major) or one line per
    masked pixel (row-major over the mask).
    """
    mask = np.asarray(mask, dtype=bool)
    coeffs = read_coeffs(path, allow_empty=not mask.any())
    out = np.zeros(mask.shape + (9,))
    if len(coeffs) == mask.size:
        out[:] = coeffs.reshape(mask.shape + (9,))
    elif len(coeffs) == int(mask.sum()):
        out[mask] = coeffs
    else:
        raise ValueError(
            f"{path}: {len(coeffs)} visibility lines fit neither {mask.size} pixels "
            f"nor {int(mask.sum())} masked pixels of a {mask.shape[1]}x{mask.shape[0]} image"
        )
    return out
