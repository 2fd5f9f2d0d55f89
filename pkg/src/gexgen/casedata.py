"""In-memory view of a preprocessed dataset, shared by training and eval.

Holds z-scored profiles plus native (pre-projection) patch and text features
per case. Native features are frozen-encoder outputs: constants during
training, with only the projection layers learning on top of them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .encoders import sample_patch_indices
from .errors import DataError, MissingLabels
from .types import DatasetSplit


@dataclass
class CaseDataset:
    case_ids: list[str]
    gene_ids: list[str]
    profiles: np.ndarray  # n x g, z-scored, row order matches case_ids
    img_native: dict[str, np.ndarray]  # case -> n_tiles x native_dim
    txt_native: dict[str, np.ndarray]  # case -> M x native_dim, row 0 = CLS
    disease_type: dict[str, str]
    primary_site: dict[str, str]
    split: DatasetSplit

    def __post_init__(self):
        self.profiles = np.asarray(self.profiles, dtype=np.float32)
        missing = [c for c in self.case_ids if c not in self.img_native or c not in self.txt_native]
        if missing:
            raise DataError(f"cases lack embeddings: {missing[:5]}")
        self._row = {c: i for i, c in enumerate(self.case_ids)}

    @property
    def n_genes(self) -> int:
        return self.profiles.shape[1]

    @property
    def img_native_dim(self) -> int:
        first = next(iter(self.img_native.values()))
        return first.shape[1]

    @property
    def txt_native_dim(self) -> int:
        first = next(iter(self.txt_native.values()))
        return first.shape[1]

    def profile_rows(self, ids: list[str]) -> np.ndarray:
        return self.profiles[[self._row[c] for c in ids]]

    def labels(self, ids: list[str], task: str) -> list[str]:
        source = {"disease_type": self.disease_type, "primary_site": self.primary_site}.get(task)
        if source is None:
            raise ValueError(f"unknown label task {task!r}")
        missing = [c for c in ids if c not in source or not source[c]]
        if missing:
            raise MissingLabels(f"cases lack {task}: {missing[:5]}")
        return [source[c] for c in ids]

    def train_ids(self) -> list[str]:
        return [c for c in self.split.train_ids if c in self._row]

    def test_ids(self) -> list[str]:
        return [c for c in self.split.test_ids if c in self._row]


@dataclass
class ConditioningBatch:
    """Tensors for one batch of cases: sampled patches, padded text, profiles."""

    case_ids: list[str]
    img: torch.Tensor  # B x N x img_native_dim
    txt: torch.Tensor  # B x M_max x txt_native_dim
    txt_mask: torch.Tensor  # B x M_max bool, True = padded row
    real: torch.Tensor  # B x g


def assemble_batch(
    dataset: CaseDataset,
    ids: list[str],
    n_patches: int,
    rng: np.random.RandomState,
) -> ConditioningBatch:
    """Draw a fresh patch subsample per case and pad text to the batch max."""
    img_rows = []
    txt_rows = []
    for case in ids:
        tiles = dataset.img_native[case]
        idx = sample_patch_indices(tiles.shape[0], n_patches, rng)
        img_rows.append(tiles[idx])
        txt_rows.append(dataset.txt_native[case])

    m_max = max(t.shape[0] for t in txt_rows)
    txt_dim = txt_rows[0].shape[1]
    txt = np.zeros((len(ids), m_max, txt_dim), dtype=np.float32)
    mask = np.ones((len(ids), m_max), dtype=bool)
    for i, t in enumerate(txt_rows):
        txt[i, : t.shape[0]] = t
        mask[i, : t.shape[0]] = False

    return ConditioningBatch(
        case_ids=list(ids),
        img=torch.from_numpy(np.stack(img_rows).astype(np.float32)),
        txt=torch.from_numpy(txt),
        txt_mask=torch.from_numpy(mask),
        real=torch.from_numpy(dataset.profile_rows(ids)),
    )


class CategoricalEncoder:
    """One-hot encoding of disease type and primary site, vocab fixed at fit."""

    def __init__(self, dataset: CaseDataset, ids: list[str]):
        self.disease_vocab = sorted({dataset.disease_type[c] for c in ids})
        self.site_vocab = sorted({dataset.primary_site[c] for c in ids})
        self.dim = len(self.disease_vocab) + len(self.site_vocab)
        self._d_index = {v: i for i, v in enumerate(self.disease_vocab)}
        self._s_index = {v: i for i, v in enumerate(self.site_vocab)}

    def encode(self, dataset: CaseDataset, ids: list[str]) -> np.ndarray:
        out = np.zeros((len(ids), self.dim), dtype=np.float32)
        for i, c in enumerate(ids):
            d = dataset.disease_type.get(c)
            s = dataset.primary_site.get(c)
            if d is None or s is None:
                raise MissingLabels(f"case {c} lacks categorical labels")
            if d in self._d_index:
                out[i, self._d_index[d]] = 1.0
            if s in self._s_index:
                out[i, len(self.disease_vocab) + self._s_index[s]] = 1.0
        return out

    def to_dict(self) -> dict:
        return {"disease_vocab": self.disease_vocab, "site_vocab": self.site_vocab}
