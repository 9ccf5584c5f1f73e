"""Gray-scale rasters, patch extraction, and PGM/PNG file I/O.

An image is a plain 2-D ``float64`` numpy array, row-major, with intensities
in ``[0, 1]``.  The loaders normalize 8-bit files to that range and the savers
quantize back, so an 8-bit file survives a load/save round trip byte for byte.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as _PILImage

# Type aliases used across the package.
Image = np.ndarray
PixelIndex = tuple[int, int]

# Refuse headers whose pixel count would exceed this budget.
MAX_PIXELS = 1 << 26

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


class ImageIOError(Exception):
    """Base class for image file problems."""


class MalformedHeaderError(ImageIOError):
    """Header or pixel payload does not parse."""


class UnsupportedDepthError(ImageIOError):
    """File is not 8-bit gray-scale."""


class DimensionError(ImageIOError):
    """Declared dimensions are non-positive or overflow the pixel budget."""


def clamp(img: Image) -> Image:
    """Clip intensities into [0, 1].  Idempotent."""
    return np.clip(img, 0.0, 1.0)


def quantize(img: Image) -> np.ndarray:
    """8-bit levels round(v * 255), half away from zero, clamped to 0..255."""
    arr = np.asarray(img, dtype=np.float64)
    return np.clip(np.floor(arr * 255.0 + 0.5), 0.0, 255.0).astype(np.uint8)


def from_levels(levels: np.ndarray) -> Image:
    """Normalize 8-bit levels to [0, 1] intensities."""
    return np.asarray(levels, dtype=np.float64) / 255.0


def _check_dims(width: int, height: int) -> None:
    if width < 1 or height < 1:
        raise DimensionError(f"non-positive dimensions {width}x{height}")
    if width * height > MAX_PIXELS:
        raise DimensionError(f"dimension overflow: {width}x{height} exceeds {MAX_PIXELS} pixels")


def _pgm_tokens(data: bytes, start: int):
    """Yield (token, end_offset) over whitespace-separated PGM tokens.

    Comments run from '#' to end of line and count as whitespace.
    """
    i = start
    n = len(data)
    while i < n:
        c = data[i : i + 1]
        if c in b" \t\r\n\x0b\x0c":
            i += 1
        elif c == b"#":
            while i < n and data[i : i + 1] not in b"\r\n":
                i += 1
        else:
            j = i
            while j < n and data[j : j + 1] not in b" \t\r\n\x0b\x0c#":
                j += 1
            yield data[i:j], j
            i = j


def _parse_pgm(data: bytes) -> Image:
    magic = data[:2]
    binary = magic == b"P5"
    tokens = _pgm_tokens(data, 2)
    header: list[int] = []
    end = 2
    try:
        while len(header) < 3:
            tok, end = next(tokens)
            header.append(int(tok))
    except StopIteration:
        raise MalformedHeaderError("truncated PGM header") from None
    except ValueError:
        raise MalformedHeaderError("non-numeric PGM header field") from None
    width, height, maxval = header
    _check_dims(width, height)
    if maxval != 255:
        raise UnsupportedDepthError(f"unsupported PGM maxval {maxval}; only 8-bit (255) is handled")
    count = width * height
    if binary:
        # Exactly one whitespace byte separates maxval from the raster.
        raster = data[end + 1 : end + 1 + count]
        if len(raster) < count:
            raise MalformedHeaderError("truncated PGM raster")
        levels = np.frombuffer(raster, dtype=np.uint8, count=count)
    else:
        values = []
        try:
            for tok, _ in tokens:
                values.append(int(tok))
                if len(values) == count:
                    break
        except ValueError:
            raise MalformedHeaderError("non-numeric PGM sample") from None
        if len(values) < count:
            raise MalformedHeaderError("truncated PGM raster")
        levels = np.asarray(values, dtype=np.int64)
        if levels.min() < 0 or levels.max() > maxval:
            raise MalformedHeaderError("PGM sample outside 0..maxval")
        levels = levels.astype(np.uint8)
    return from_levels(levels.reshape(height, width))


def _load_png(data: bytes) -> Image:
    try:
        with _PILImage.open(io.BytesIO(data)) as im:
            mode = im.mode
            if mode != "L":
                raise UnsupportedDepthError(f"PNG mode {mode!r}; only 8-bit gray-scale is handled")
            _check_dims(im.width, im.height)
            levels = np.asarray(im, dtype=np.uint8)
    except UnsupportedDepthError:
        raise
    except DimensionError:
        raise
    except Exception as exc:
        raise MalformedHeaderError(f"unreadable PNG: {exc}") from exc
    return from_levels(levels)


def load_image(path) -> Image:
    """Load a PGM (P2 or P5) or 8-bit gray-scale PNG file.

    Returns a float64 array in [0, 1].  The format is detected from the
    file's magic bytes, not its extension.
    """
    data = Path(path).read_bytes()
    if data[:2] in (b"P2", b"P5"):
        return _parse_pgm(data)
    if data[: len(_PNG_MAGIC)] == _PNG_MAGIC:
        return _load_png(data)
    raise MalformedHeaderError(f"unrecognized image format in {path}")


def save_image(img: Image, path, ascii_pgm: bool = False) -> None:
    """Write an image as PNG or PGM, chosen by file extension.

    Intensities are quantized to 8 bits.  ``.pgm`` writes binary P5 unless
    ``ascii_pgm`` is set, in which case plain P2 is emitted.
    """
    p = Path(path)
    levels = quantize(img)
    height, width = levels.shape
    suffix = p.suffix.lower()
    if suffix == ".png":
        _PILImage.fromarray(levels, mode="L").save(p, format="PNG")
    elif suffix == ".pgm":
        if ascii_pgm:
            lines = [f"P2\n{width} {height}\n255\n"]
            for row in levels:
                lines.append(" ".join(str(int(v)) for v in row) + "\n")
            p.write_text("".join(lines), encoding="ascii")
        else:
            p.write_bytes(b"P5\n" + f"{width} {height}\n255\n".encode("ascii") + levels.tobytes())
    else:
        raise ImageIOError(f"unsupported output extension {suffix!r}; use .png or .pgm")


@dataclass(frozen=True)
class Patch:
    """Flattened square neighborhood around a pixel."""

    center: PixelIndex
    radius: int
    values: np.ndarray  # length (2 * radius + 1) ** 2, row-major


def extract_patch(img: Image, p: PixelIndex, radius: int) -> Patch:
    """Extract the (2r+1) x (2r+1) neighborhood of p, edges replicated.

    Args:
        img: source image.
        p: (row, col) center, must lie inside the image.
        radius: non-negative patch radius.

    Returns:
        Patch with values flattened row-major.
    """
    if radius < 0:
        raise ValueError(f"negative patch radius {radius}")
    h, w = img.shape
    r0, c0 = p
    if not (0 <= r0 < h and 0 <= c0 < w):
        raise ValueError(f"pixel {p} outside {h}x{w} image")
    rows = np.clip(np.arange(r0 - radius, r0 + radius + 1), 0, h - 1)
    cols = np.clip(np.arange(c0 - radius, c0 + radius + 1), 0, w - 1)
    values = img[np.ix_(rows, cols)].ravel().copy()
    return Patch(center=(r0, c0), radius=radius, values=values)


def crop_center(img: Image, size: int) -> Image:
    """Central size x size crop; the full image if it is already smaller."""
    h, w = img.shape
    ch = min(size, h)
    cw = min(size, w)
    top = (h - ch) // 2
    left = (w - cw) // 2
    return img[top : top + ch, left : left + cw].copy()
