"""Tissue segmentation and tile extraction for slide images.

Slides are binarized on the saturation channel of a downsampled thumbnail:
stained tissue is saturated, glass background is near-grey. The threshold
comes from Otsu's criterion over the 256-bin saturation histogram.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import SingleClassHistogram
from .types import SlideImage, Tile

DEFAULT_TILE_SIZE = 256
DEFAULT_MIN_TISSUE = 0.2
DEFAULT_THUMBNAIL_MAX_SIDE = 2048


def otsu_threshold(histogram) -> int:
    """Threshold t in [1, 255] maximizing between-class variance.

    Classes are the bins [0, t) and [t, 255]. Ties break to the smallest t.
    Counts are compared in exact integer arithmetic, so the argmax is immune
    to float summation-order effects.

    Raises SingleClassHistogram when all mass sits in one bin.
    """
    hist = np.asarray(histogram)
    if hist.shape != (256,):
        raise ValueError(f"expected a 256-bin histogram, got shape {hist.shape}")
    if np.any(hist < 0):
        raise ValueError("histogram counts must be non-negative")
    counts = [int(c) for c in hist]
    if not np.all(hist == np.asarray(counts)):
        raise ValueError("histogram counts must be integral")
    if sum(1 for c in counts if c > 0) < 2:
        raise SingleClassHistogram("histogram mass concentrated in a single bin")

    total_n = sum(counts)
    total_s = sum(i * c for i, c in enumerate(counts))

    # Between-class variance at t is proportional to
    # (s0*n1 - s1*n0)^2 / (n0*n1); compare across t by cross-multiplication.
    best_t = None
    best_num = 0
    best_den = 1
    n0 = 0
    s0 = 0
    for t in range(1, 256):
        n0 += counts[t - 1]
        s0 += (t - 1) * counts[t - 1]
        n1 = total_n - n0
        s1 = total_s - s0
        if n0 == 0 or n1 == 0:
            continue
        num = (s0 * n1 - s1 * n0) ** 2
        den = n0 * n1
        if best_t is None or num * best_den > best_num * den:
            best_t = t
            best_num = num
            best_den = den
    assert best_t is not None  # >=2 occupied bins guarantee a separating t
    return best_t


def saturation_channel(pixels: np.ndarray) -> np.ndarray:
    """HSV saturation of an RGB uint8 image, rescaled to uint8.

    S = (max - min) / max per pixel, with S = 0 where max = 0.
    """
    rgb = np.asarray(pixels)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected HxWx3 RGB image, got shape {rgb.shape}")
    rgb = rgb.astype(np.int64)
    mx = rgb.max(axis=2)
    mn = rgb.min(axis=2)
    sat = np.zeros(mx.shape, dtype=np.uint8)
    nz = mx > 0
    # integer rounding: round(255 * (mx - mn) / mx)
    sat[nz] = ((255 * (mx[nz] - mn[nz]) * 2 + mx[nz]) // (2 * mx[nz])).astype(np.uint8)
    return sat


def make_thumbnail(slide: SlideImage, max_side: int) -> np.ndarray:
    """Downsample so the longer side is at most max_side; no-op if already small."""
    h, w = slide.height, slide.width
    longest = max(h, w)
    if longest <= max_side:
        return slide.pixels
    scale = max_side / longest
    tw = max(1, round(w * scale))
    th = max(1, round(h * scale))
    img = Image.fromarray(slide.pixels.astype(np.uint8))
    return np.asarray(img.resize((tw, th), Image.BILINEAR))


def segment_tissue(
    slide: SlideImage, thumbnail_max_side: int = DEFAULT_THUMBNAIL_MAX_SIDE
) -> np.ndarray:
    """Binary tissue mask at thumbnail resolution.

    Mask is True where the thumbnail saturation strictly exceeds the Otsu
    threshold of its own histogram. Raises SingleClassHistogram for blank
    (contrast-free) slides.
    """
    thumb = make_thumbnail(slide, thumbnail_max_side)
    sat = saturation_channel(thumb)
    hist = np.bincount(sat.ravel(), minlength=256)
    t = otsu_threshold(hist)
    return sat > t


def extract_tiles(
    slide: SlideImage,
    mask: np.ndarray,
    tile_size: int = DEFAULT_TILE_SIZE,
    min_tissue: float = DEFAULT_MIN_TISSUE,
) -> list[Tile]:
    """Grid tiles (stride = tile size, no overlap) with enough tissue coverage.

    A tile is retained iff the mask fraction over its footprint is strictly
    greater than min_tissue. The mask may be at thumbnail resolution; the
    footprint is rescaled accordingly.
    """
    if tile_size < 1:
        raise ValueError("tile_size must be >= 1")
    if not (0.0 <= min_tissue < 1.0):
        raise ValueError("min_tissue must lie in [0, 1)")
    mask = np.asarray(mask, dtype=bool)
    mh, mw = mask.shape
    sy = mh / slide.height
    sx = mw / slide.width

    tiles = []
    for y in range(0, slide.height - tile_size + 1, tile_size):
        my0 = int(np.floor(y * sy))
        my1 = min(mh, int(np.ceil((y + tile_size) * sy)))
        for x in range(0, slide.width - tile_size + 1, tile_size):
            mx0 = int(np.floor(x * sx))
            mx1 = min(mw, int(np.ceil((x + tile_size) * sx)))
            footprint = mask[my0:my1, mx0:mx1]
            fraction = float(footprint.mean()) if footprint.size else 0.0
            if fraction > min_tissue:
                tiles.append(
                    Tile(
                        slide_id=slide.slide_id,
                        origin_x=x,
                        origin_y=y,
                        size=tile_size,
                        tissue_fraction=fraction,
                    )
                )
    return tiles


def crop_tile(slide: SlideImage, tile: Tile) -> np.ndarray:
    """Pixel content of a tile, as uint8 HxWx3."""
    y, x, p = tile.origin_y, tile.origin_x, tile.size
    return slide.pixels[y : y + p, x : x + p]
