"""Frozen feature extractors plus trainable linear projections to dimension d.

Pretrained encoders are abstracted behind a featurizer contract: anything
that maps raw inputs to fixed-width native features. The shipped stubs are
deterministic closed-form featurizers sized for desk-scale runs; real
pretrained adapters plug in behind the same interface. Only the projection
layer is trainable — featurizers never receive gradients.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .errors import EncoderFailure, NoTiles

SHARED_DIM_DEFAULT = 256
TOKEN_CAP_DEFAULT = 256


@dataclass
class PatchEmbeddingMatrix:
    values: np.ndarray  # N x d float32
    slide_id: str
    patch_refs: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if not np.all(np.isfinite(self.values)):
            raise EncoderFailure(f"non-finite patch embeddings for slide {self.slide_id!r}")


@dataclass
class TextEmbeddingMatrix:
    values: np.ndarray  # M x d float32, row 0 = CLS
    cls_index: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if not np.all(np.isfinite(self.values)):
            raise EncoderFailure("non-finite text embeddings")

    @property
    def cls(self) -> np.ndarray:
        return self.values[self.cls_index]


class ImageStubFeaturizer:
    """12 color/texture statistics per tile, all in [0, 1].

    Feature order: channel means (3), channel stds (3), grey mean, grey std,
    saturation mean, saturation std, mean |horizontal grey gradient|,
    mean |vertical grey gradient|. Grey is the plain channel average.
    """

    name = "stub-image-v1"
    native_dim = 12

    def features(self, pixels: np.ndarray) -> np.ndarray:
        img = np.asarray(pixels, dtype=np.float64)
        if img.ndim != 3 or img.shape[2] != 3:
            raise EncoderFailure(f"tile must be HxWx3, got {img.shape}")
        img = img / 255.0
        grey = img.mean(axis=2)
        mx = img.max(axis=2)
        mn = img.min(axis=2)
        sat = np.where(mx > 0, (mx - mn) / np.where(mx > 0, mx, 1.0), 0.0)
        dx = np.abs(np.diff(grey, axis=1)).mean() if grey.shape[1] > 1 else 0.0
        dy = np.abs(np.diff(grey, axis=0)).mean() if grey.shape[0] > 1 else 0.0
        feats = np.concatenate(
            [
                img.mean(axis=(0, 1)),
                img.std(axis=(0, 1)),
                [grey.mean(), grey.std(), sat.mean(), sat.std(), dx, dy],
            ]
        )
        return feats.astype(np.float32)

    def features_batch(self, tiles: list[np.ndarray]) -> np.ndarray:
        if not tiles:
            raise EncoderFailure("no tiles to encode")
        return np.stack([self.features(t) for t in tiles])


_TOKEN_RE = re.compile(r"[a-z0-9]+")
_TEXT_TABLE_SEED = 7309


def _hash_bucket(token: str, n_buckets: int) -> int:
    digest = hashlib.md5(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little") % n_buckets


class TextStubFeaturizer:
    """Hashed bag-of-words text features.

    Tokens hash into 64 buckets. Row 0 (the CLS surrogate) is the normalized
    bucket histogram of the kept tokens; remaining rows look each kept token
    up in a fixed random bucket-embedding table. The table is seeded with a
    module constant, so features are stable across processes.
    """

    name = "stub-text-v1"
    native_dim = 64
    n_buckets = 64

    def __init__(self):
        rng = np.random.RandomState(_TEXT_TABLE_SEED)
        self.bucket_table = rng.normal(0.0, 1.0, size=(self.n_buckets, self.native_dim)).astype(
            np.float32
        )

    def features(self, text: str, max_tokens: int) -> np.ndarray:
        if not text or not text.strip():
            raise EncoderFailure("cannot encode empty text")
        if max_tokens < 2:
            raise ValueError("max_tokens must be >= 2 (CLS row plus one token)")
        tokens = _TOKEN_RE.findall(text.lower())
        if not tokens:
            raise EncoderFailure("text contains no tokens")
        kept = tokens[: max_tokens - 1]
        buckets = [_hash_bucket(t, self.n_buckets) for t in kept]
        cls = np.bincount(buckets, minlength=self.n_buckets).astype(np.float32) / len(kept)
        rows = self.bucket_table[buckets]
        return np.concatenate([cls[None, :], rows], axis=0)


class EncoderAdapter(nn.Module):
    """A frozen featurizer paired with its trainable projection to d."""

    def __init__(self, featurizer, d: int, seed: int = 0):
        super().__init__()
        self.featurizer = featurizer
        self.name = featurizer.name
        self.native_dim = featurizer.native_dim
        self.frozen = True
        self.projection = make_projection(self.native_dim, d, seed)

    @property
    def d(self) -> int:
        return self.projection.out_features

    def project(self, native: torch.Tensor) -> torch.Tensor:
        return self.projection(native)


def make_projection(native_dim: int, d: int, seed: int) -> nn.Linear:
    """Linear projection with seeded initialization, independent of global RNG."""
    layer = nn.Linear(native_dim, d)
    gen = torch.Generator().manual_seed(seed)
    bound = 1.0 / np.sqrt(native_dim)
    with torch.no_grad():
        layer.weight.uniform_(-bound, bound, generator=gen)
        layer.bias.uniform_(-bound, bound, generator=gen)
    return layer


def encode_patches(
    adapter: EncoderAdapter,
    tiles: list[np.ndarray],
    slide_id: str = "",
    patch_refs: list[str] | None = None,
) -> PatchEmbeddingMatrix:
    """Project per-tile native features; row i depends only on tile i."""
    native = adapter.featurizer.features_batch(tiles)
    with torch.no_grad():
        projected = adapter.project(torch.from_numpy(native).float()).numpy()
    return PatchEmbeddingMatrix(
        values=projected, slide_id=slide_id, patch_refs=patch_refs or []
    )


def encode_text(
    adapter: EncoderAdapter, text: str, max_tokens: int = TOKEN_CAP_DEFAULT
) -> TextEmbeddingMatrix:
    """Tokenize, featurize, and project; row 0 stays the CLS embedding."""
    native = adapter.featurizer.features(text, max_tokens)
    with torch.no_grad():
        projected = adapter.project(torch.from_numpy(native).float()).numpy()
    return TextEmbeddingMatrix(values=projected)


def sample_patch_indices(n_tiles: int, n: int, rng: np.random.RandomState) -> np.ndarray:
    """Uniform indices: without replacement when enough tiles exist."""
    if n_tiles < 1:
        raise NoTiles("no tiles available to sample")
    replace = n_tiles < n
    return rng.choice(n_tiles, size=n, replace=replace)


def sample_patches(all_tiles: list, n: int, seed: int) -> list:
    """Deterministic patch subsample used at each training step."""
    rng = np.random.RandomState(seed)
    idx = sample_patch_indices(len(all_tiles), n, rng)
    return [all_tiles[i] for i in idx]
