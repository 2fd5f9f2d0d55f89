"""Domain types moved between pipeline stages.

All arrays are plain numpy; torch tensors only appear inside the model
modules. Types here are deliberately dumb containers with light validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SlideImage:
    """A stained tissue scan held fully in memory (desk-scale slides only)."""

    slide_id: str
    pixels: np.ndarray  # H x W x 3, uint8
    mpp: float | None = None  # microns per pixel, if known

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(
                f"slide {self.slide_id!r}: expected HxWx3 pixels, got {self.pixels.shape}"
            )

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class Tile:
    """One square crop of a slide, on the extraction grid."""

    slide_id: str
    origin_x: int
    origin_y: int
    size: int
    tissue_fraction: float

    def key(self) -> str:
        return f"{self.slide_id}_{self.origin_x}_{self.origin_y}"


@dataclass
class ExpressionMatrix:
    """Samples x genes expression values with an explicit missingness mask."""

    sample_ids: list[str]
    gene_ids: list[str]
    values: np.ndarray  # n x g, float
    missing_mask: np.ndarray  # n x g, bool; True = missing

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.missing_mask = np.asarray(self.missing_mask, dtype=bool)
        n, g = len(self.sample_ids), len(self.gene_ids)
        if self.values.shape != (n, g) or self.missing_mask.shape != (n, g):
            raise ValueError(
                f"expression matrix shapes disagree: {self.values.shape} values, "
                f"{self.missing_mask.shape} mask, {n} samples, {g} genes"
            )

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_genes(self) -> int:
        return self.values.shape[1]

    def row_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.sample_ids)}


@dataclass
class ClinicalRecord:
    """Structured metadata for one case."""

    case_id: str
    disease_type: str
    primary_site: str
    demographics: dict[str, object] = field(default_factory=dict)
    free_fields: dict[str, object] = field(default_factory=dict)


@dataclass
class DatasetSplit:
    """Case-level train/test partition."""

    train_ids: list[str]
    test_ids: list[str]

    def __post_init__(self):
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise ValueError(f"split partitions overlap: {sorted(overlap)[:5]}")

    @property
    def all_ids(self) -> list[str]:
        return list(self.train_ids) + list(self.test_ids)
