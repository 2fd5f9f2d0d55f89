"""Deterministic toy datasets: paired slides, clinical records, expression.

Each class gets (a) a distinct expression signature and (b) a distinct
color/texture motif rendered into small slides, so conditioning signal is
present in both modalities. Everything is a pure function of the seed.
"""

from __future__ import annotations

import numpy as np

from .types import ClinicalRecord, ExpressionMatrix, SlideImage

MARKER_PREFIX = "MRK"
GENE_PREFIX = "GEN"

# Raw-space effect sizes. Markers are noise-free two-level genes, which pins
# their z-scored between-class separation at >= 2 for any train-split balance.
_MARKER_LEVEL = 1.0
_EFFECT_AMPLITUDE = 1.5
_NOISE_STD = 0.75
_MISSING_RATE = 0.02

_PALETTE = [
    (214, 68, 148),  # pink-magenta
    (96, 70, 204),  # blue-violet
    (204, 134, 56),  # amber
    (60, 170, 120),  # teal-green
    (190, 60, 60),  # brick red
    (70, 120, 200),  # steel blue
]

_PATTERNS = ("blobs", "stripes", "checker")


def marker_gene_count(g: int, n_classes: int) -> int:
    return max(n_classes, g // 4)


def synthetic_gene_ids(g: int, n_classes: int) -> list[str]:
    n_markers = marker_gene_count(g, n_classes)
    return [
        f"{MARKER_PREFIX}{j:03d}" if j < n_markers else f"{GENE_PREFIX}{j:03d}"
        for j in range(g)
    ]


def _render_blobs(rng: np.random.RandomState, canvas: np.ndarray, color: np.ndarray):
    size = canvas.shape[0]
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(10):
        cy = rng.randint(8, size - 8)
        cx = rng.randint(8, size - 8)
        r = rng.randint(8, 15)
        inside = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        canvas[inside] = color


def _render_stripes(rng: np.random.RandomState, canvas: np.ndarray, color: np.ndarray):
    size = canvas.shape[0]
    thickness = rng.randint(3, 6)
    gap = rng.randint(2, 5)
    phase = rng.randint(0, thickness + gap)
    for y in range(size):
        if (y + phase) % (thickness + gap) < thickness:
            canvas[y, 2 : size - 2] = color


def _render_checker(rng: np.random.RandomState, canvas: np.ndarray, color: np.ndarray):
    size = canvas.shape[0]
    block = rng.randint(6, 10)
    phase = rng.randint(0, 2)
    for by in range(0, size, block):
        for bx in range(0, size, block):
            if ((by // block) + (bx // block) + phase) % 2 == 0:
                canvas[by : by + block, bx : bx + block] = color


_RENDERERS = {"blobs": _render_blobs, "stripes": _render_stripes, "checker": _render_checker}


def render_synthetic_slide(
    rng: np.random.RandomState, class_idx: int, size: int = 64
) -> np.ndarray:
    """White background plus the class motif in the class color (jittered)."""
    canvas = np.full((size, size, 3), 255, dtype=np.uint8)
    base = np.asarray(_PALETTE[class_idx % len(_PALETTE)], dtype=np.int64)
    jitter = rng.randint(-15, 16, size=3)
    color = np.clip(base + jitter, 30, 235).astype(np.uint8)
    pattern = _PATTERNS[class_idx % len(_PATTERNS)]
    _RENDERERS[pattern](rng, canvas, color)
    return canvas


def make_synthetic_dataset(
    n_cases: int, g: int, n_classes: int, seed: int, slide_size: int = 64
) -> tuple[list[SlideImage], list[ClinicalRecord], ExpressionMatrix, list[int]]:
    """Build a class-structured toy dataset with all three modalities paired.

    Cases are assigned to classes round-robin. Marker genes take exact
    two-level values per class; remaining genes carry a +-amplitude class
    effect plus Gaussian noise, and a sparse missingness mask (markers stay
    fully observed).
    """
    if n_classes < 2:
        raise ValueError("n_classes must be >= 2")
    if g < 4:
        raise ValueError("g must be >= 4")
    if n_cases < n_classes:
        raise ValueError("need at least one case per class")

    rng = np.random.RandomState(seed)
    labels = [i % n_classes for i in range(n_cases)]
    case_ids = [f"case_{i:04d}" for i in range(n_cases)]
    gene_ids = synthetic_gene_ids(g, n_classes)
    n_markers = marker_gene_count(g, n_classes)

    # per-gene base level and per-class effect signs for non-marker genes
    base = rng.uniform(5.0, 15.0, size=g)
    signs = rng.choice([-1.0, 1.0], size=(n_classes, g))

    values = np.zeros((n_cases, g))
    for i, k in enumerate(labels):
        noise = rng.normal(0.0, _NOISE_STD, size=g)
        row = base + _EFFECT_AMPLITUDE * signs[k] + noise
        for j in range(n_markers):
            marker_class = j % n_classes
            row[j] = _MARKER_LEVEL if k == marker_class else -_MARKER_LEVEL
        values[i] = row

    missing = rng.random_sample((n_cases, g)) < _MISSING_RATE
    missing[:, :n_markers] = False

    expression = ExpressionMatrix(
        sample_ids=case_ids, gene_ids=gene_ids, values=values, missing_mask=missing
    )

    slides = []
    records = []
    for i, k in enumerate(labels):
        slides.append(
            SlideImage(
                slide_id=case_ids[i],
                pixels=render_synthetic_slide(rng, k, size=slide_size),
            )
        )
        records.append(
            ClinicalRecord(
                case_id=case_ids[i],
                disease_type=f"TYPE_{chr(ord('A') + k)}",
                primary_site=f"SITE_{k + 1}",
                demographics={
                    "age": int(rng.randint(35, 86)),
                    "sex": "F" if rng.randint(2) else "M",
                },
                free_fields={
                    "cohort": f"synthetic-{k}",
                    "histology_note": f"{_PATTERNS[k % len(_PATTERNS)]} growth pattern",
                    "grade": f"G{1 + i % 3}",
                },
            )
        )

    return slides, records, expression, labels
