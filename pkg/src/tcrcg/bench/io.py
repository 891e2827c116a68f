"""Tensor and image files.

T3B layout: magic ``T3B1``, three little-endian u32 dims ``(n1, n2, n3)``,
then ``n1 n2 n3`` little-endian float64 values with ``i`` fastest, then
``j``, then ``k``.
"""

import struct

import numpy as np
from PIL import Image

from .._validation import check_tensor3

T3B_MAGIC = b"T3B1"


def t3b_bytes(x):
    x = check_tensor3(x)
    head = T3B_MAGIC + struct.pack("<3I", *x.shape)
    return head + x.astype("<f8").ravel(order="F").tobytes()


def t3b_from_bytes(data):
    if len(data) < 16 or data[:4] != T3B_MAGIC:
        raise ValueError("not a T3B tensor file")
    dims = struct.unpack_from("<3I", data, 4)
    count = int(np.prod(dims))
    if len(data) != 16 + 8 * count:
        raise ValueError(f"T3B payload holds {(len(data) - 16) / 8:g} values, header says {count}")
    flat = np.frombuffer(data, dtype="<f8", count=count, offset=16)
    return flat.reshape(dims, order="F").astype(np.float64)


def write_t3b(path, x):
    with open(path, "wb") as fh:
        fh.write(t3b_bytes(x))


def read_t3b(path):
    with open(path, "rb") as fh:
        return t3b_from_bytes(fh.read())


def read_ppm(path):
    """Binary 8-bit PPM as an ``(n1, n2, 3)`` array in ``[0, 1]``."""
    with Image.open(path) as im:
        if im.format != "PPM" or im.mode != "RGB":
            raise ValueError(f"{path}: expected an 8-bit binary PPM, got {im.format} {im.mode}")
        return np.asarray(im, dtype=np.float64) / 255.0


def _to_bytes8(x):
    return np.clip(np.rint(np.asarray(x, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def write_ppm(path, image):
    """Write an ``(n1, n2, 3)`` array in ``[0, 1]`` as binary PPM; values are clipped."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an (n1, n2, 3) image, got shape {image.shape}")
    Image.fromarray(_to_bytes8(image), mode="RGB").save(path, format="PPM")


def write_pgm(path, raster):
    """Grayscale raster in ``[0, 1]`` as binary PGM (0 black, 1 white)."""
    raster = np.asarray(raster)
    if raster.ndim != 2:
        raise ValueError("raster must be two-dimensional")
    Image.fromarray(_to_bytes8(raster), mode="L").save(path, format="PPM")
