"""Image normalization and portable graymap/pixmap IO."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .common import FRAME, DataError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class FrameTransform:
    """Affine map from source-image coordinates into the 96x96 canvas."""
    scale_x: float
    scale_y: float
    offset_x: float
    offset_y: float

    def map_point(self, x, y):
        return (x * self.scale_x + self.offset_x,
                y * self.scale_y + self.offset_y)


def to_grayscale(image):
    """Collapse an (H,W,3) image with the 0.299/0.587/0.114 luminance mix."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image
    if image.ndim == 3 and image.shape[2] == 3:
        r, g, b = LUMA_WEIGHTS
        return r * image[:, :, 0] + g * image[:, :, 1] + b * image[:, :, 2]
    raise DataError(f"expected (H,W) gray or (H,W,3) color, got {image.shape}")


def bilinear_resize(image, out_h, out_w):
    """Separable bilinear resampling with half-pixel center alignment."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    fx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    top = image[np.ix_(y0, x0)] * (1 - fx) + image[np.ix_(y0, x1)] * fx
    bottom = image[np.ix_(y1, x0)] * (1 - fx) + image[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bottom * fy


def normalize_image(image):
    """Gray, aspect-preserving resize to a zero-padded 96x96, values /255.

    Returns (pixels, transform). The transform maps source annotation
    coordinates onto the canvas exactly as the pixels were mapped.
    """
    gray = to_grayscale(image)
    h, w = gray.shape
    if h == 0 or w == 0:
        raise DataError(f"zero-area image: {h}x{w}")
    scale = FRAME / max(h, w)
    out_h = max(1, round(h * scale))
    out_w = max(1, round(w * scale))
    resized = gray if (out_h, out_w) == (h, w) else bilinear_resize(gray, out_h, out_w)
    canvas = np.zeros((FRAME, FRAME))
    oy = (FRAME - out_h) // 2
    ox = (FRAME - out_w) // 2
    canvas[oy:oy + out_h, ox:ox + out_w] = resized / 255.0
    transform = FrameTransform(out_w / w, out_h / h, float(ox), float(oy))
    return np.clip(canvas, 0.0, 1.0), transform


# ---------------------------------------------------------------------------
# netpbm binary formats
# ---------------------------------------------------------------------------

def _read_header_tokens(data, count, path):
    """Pull `count` whitespace-separated tokens, honoring # comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise DataError(f"{path}: truncated header")
        ch = data[pos:pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    return tokens, pos + 1  # single whitespace separates header from raster


def read_pgm(path):
    """8-bit binary P5 graymap -> (H,W) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise DataError(f"{path}: not a binary graymap (P5)")
    tokens, offset = _read_header_tokens(data, 4, path)
    w, h, maxval = (int(t) for t in tokens[1:4])
    if maxval != 255:
        raise DataError(f"{path}: only 8-bit graymaps supported, maxval={maxval}")
    raster = data[offset:offset + w * h]
    if len(raster) != w * h:
        raise DataError(f"{path}: raster holds {len(raster)} bytes, needs {w * h}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w)


def write_pgm(path, image):
    image = np.asarray(image)
    if image.dtype != np.uint8:
        image = np.clip(np.round(image), 0, 255).astype(np.uint8)
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def read_ppm(path):
    """8-bit binary P6 pixmap -> (H,W,3) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P6"):
        raise DataError(f"{path}: not a binary pixmap (P6)")
    tokens, offset = _read_header_tokens(data, 4, path)
    w, h, maxval = (int(t) for t in tokens[1:4])
    if maxval != 255:
        raise DataError(f"{path}: only 8-bit pixmaps supported, maxval={maxval}")
    raster = data[offset:offset + 3 * w * h]
    if len(raster) != 3 * w * h:
        raise DataError(f"{path}: raster holds {len(raster)} bytes, needs {3 * w * h}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w, 3)


def load_image(path):
    """Read a .pgm or .ppm by magic number and return grayscale floats."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"P5":
        return read_pgm(path).astype(np.float64)
    if magic == b"P6":
        return to_grayscale(read_ppm(path))
    raise DataError(f"{path}: unsupported image format {magic!r}")
