"""Gene-expression table preprocessing: missingness filtering and z-scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllGenesDropped
from .types import DatasetSplit, ExpressionMatrix

DEFAULT_MAX_MISSING = 0.9

# Genes whose train-split std falls below this are treated as constant and
# mapped to all-zeros instead of dividing by ~0.
CONSTANT_STD_FLOOR = 1e-12


def filter_genes(
    m: ExpressionMatrix, max_missing: float = DEFAULT_MAX_MISSING
) -> ExpressionMatrix:
    """Drop genes with MORE than max_missing missing fraction (strict).

    A gene missing in exactly max_missing of samples is retained. Column
    order is preserved. Raises AllGenesDropped when nothing survives.
    """
    if m.n_samples < 1:
        raise ValueError("expression matrix has no samples")
    missing_fraction = m.missing_mask.mean(axis=0)
    keep = missing_fraction <= max_missing
    if not keep.any():
        raise AllGenesDropped(
            f"all {m.n_genes} genes exceed the {max_missing:.0%} missingness cap"
        )
    return ExpressionMatrix(
        sample_ids=list(m.sample_ids),
        gene_ids=[gid for gid, k in zip(m.gene_ids, keep) if k],
        values=m.values[:, keep].copy(),
        missing_mask=m.missing_mask[:, keep].copy(),
    )


@dataclass
class GeneScaler:
    """Per-gene statistics fitted on the train split."""

    gene_ids: list[str]
    median: np.ndarray  # train median used to impute residual missing entries
    mean: np.ndarray
    std: np.ndarray  # population std; 0 flags a constant gene

    def to_dict(self) -> dict:
        return {
            "gene_ids": self.gene_ids,
            "median": self.median.tolist(),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneScaler":
        return cls(
            gene_ids=list(d["gene_ids"]),
            median=np.asarray(d["median"], dtype=np.float64),
            mean=np.asarray(d["mean"], dtype=np.float64),
            std=np.asarray(d["std"], dtype=np.float64),
        )


def zscore_fit_transform(
    m: ExpressionMatrix, stats_from: DatasetSplit, log1p: bool = False
) -> tuple[ExpressionMatrix, GeneScaler]:
    """Standardize every gene using statistics from the train split only.

    Residual missing entries (survivors of filter_genes) are imputed with the
    train-split gene median before fitting. Mean and population std come from
    train rows; the same transform is applied to every row. Constant genes
    map to all-zeros. Optional log1p is applied before any statistics.
    """
    row_of = m.row_index()
    train_rows = np.asarray([row_of[s] for s in stats_from.train_ids if s in row_of])
    if train_rows.size == 0:
        raise ValueError("no train-split samples present in the expression matrix")

    values = m.values.astype(np.float64).copy()
    if log1p:
        values = np.log1p(values)
    missing = m.missing_mask

    # train median over observed entries; genes fully missing on train fall
    # back to 0 (they will come out constant anyway)
    median = np.zeros(m.n_genes)
    train_vals = values[train_rows]
    train_miss = missing[train_rows]
    for j in range(m.n_genes):
        observed = train_vals[~train_miss[:, j], j]
        median[j] = float(np.median(observed)) if observed.size else 0.0

    values[missing] = np.broadcast_to(median, values.shape)[missing]

    train_filled = values[train_rows]
    mean = train_filled.mean(axis=0)
    std = train_filled.std(axis=0)  # population (ddof=0)

    constant = std < CONSTANT_STD_FLOOR
    safe_std = np.where(constant, 1.0, std)
    z = (values - mean) / safe_std
    z[:, constant] = 0.0

    scaler = GeneScaler(
        gene_ids=list(m.gene_ids),
        median=median,
        mean=mean,
        std=np.where(constant, 0.0, std),
    )
    out = ExpressionMatrix(
        sample_ids=list(m.sample_ids),
        gene_ids=list(m.gene_ids),
        values=z,
        missing_mask=np.zeros_like(missing),
    )
    return out, scaler


def apply_scaler(
    m: ExpressionMatrix, scaler: GeneScaler, log1p: bool = False
) -> ExpressionMatrix:
    """Transform new samples with previously fitted statistics."""
    if list(m.gene_ids) != list(scaler.gene_ids):
        raise ValueError("gene set differs from the fitted scaler")
    values = m.values.astype(np.float64).copy()
    if log1p:
        values = np.log1p(values)
    values[m.missing_mask] = np.broadcast_to(scaler.median, values.shape)[m.missing_mask]
    constant = scaler.std == 0.0
    safe_std = np.where(constant, 1.0, scaler.std)
    z = (values - scaler.mean) / safe_std
    z[:, constant] = 0.0
    return ExpressionMatrix(
        sample_ids=list(m.sample_ids),
        gene_ids=list(m.gene_ids),
        values=z,
        missing_mask=np.zeros_like(m.missing_mask),
    )
