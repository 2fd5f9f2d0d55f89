"""Embedding cache: one binary file per entry plus a JSON sidecar.

Matrices are stored as little-endian floats in row-major order; the sidecar
records shape, dtype, encoder name, and a sha256 checksum. Writes go through
a temp file and atomic rename, so concurrent readers never see torn entries.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from pathlib import Path

import numpy as np

from .errors import CorruptEntry, KeyNotFound

_KEY_RE = re.compile(r"^[A-Za-z0-9._-]+$")
_DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}


def _check_key(key: str) -> str:
    if not _KEY_RE.match(key):
        raise ValueError(f"store key {key!r} must match {_KEY_RE.pattern}")
    return key


class EmbeddingStore:
    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _paths(self, key: str) -> tuple[Path, Path]:
        _check_key(key)
        return self.root / f"{key}.bin", self.root / f"{key}.json"

    def has(self, key: str) -> bool:
        bin_path, meta_path = self._paths(key)
        return bin_path.exists() and meta_path.exists()

    def save(self, key: str, matrix: np.ndarray, encoder: str = "", dtype: str = "f32") -> None:
        if dtype not in _DTYPES:
            raise ValueError(f"unsupported dtype {dtype!r}; one of {sorted(_DTYPES)}")
        arr = np.ascontiguousarray(np.asarray(matrix), dtype=_DTYPES[dtype])
        if arr.ndim != 2:
            raise ValueError(f"store holds 2D matrices, got shape {arr.shape}")
        payload = arr.tobytes(order="C")
        meta = {
            "n_rows": int(arr.shape[0]),
            "dim": int(arr.shape[1]),
            "dtype": dtype,
            "encoder": encoder,
            "checksum": hashlib.sha256(payload).hexdigest(),
        }
        bin_path, meta_path = self._paths(key)
        tmp_bin = bin_path.with_suffix(".bin.tmp")
        tmp_meta = meta_path.with_suffix(".json.tmp")
        tmp_bin.write_bytes(payload)
        tmp_meta.write_text(json.dumps(meta, sort_keys=True) + "\n")
        os.replace(tmp_bin, bin_path)
        os.replace(tmp_meta, meta_path)

    def load(self, key: str) -> np.ndarray:
        bin_path, meta_path = self._paths(key)
        if not (bin_path.exists() and meta_path.exists()):
            raise KeyNotFound(f"no entry under key {key!r} in {self.root}")
        try:
            meta = json.loads(meta_path.read_text())
        except json.JSONDecodeError as e:
            raise CorruptEntry(f"unreadable sidecar for {key!r}: {e}") from e
        dtype = meta.get("dtype", "f32")
        if dtype not in _DTYPES:
            raise CorruptEntry(f"entry {key!r} has unknown dtype {dtype!r}")
        payload = bin_path.read_bytes()
        if hashlib.sha256(payload).hexdigest() != meta.get("checksum"):
            raise CorruptEntry(f"checksum mismatch for {key!r}")
        n_rows, dim = int(meta["n_rows"]), int(meta["dim"])
        expected = n_rows * dim * _DTYPES[dtype].itemsize
        if len(payload) != expected:
            raise CorruptEntry(
                f"entry {key!r} holds {len(payload)} bytes, expected {expected}"
            )
        return np.frombuffer(payload, dtype=_DTYPES[dtype]).reshape(n_rows, dim).copy()

    def metadata(self, key: str) -> dict:
        _, meta_path = self._paths(key)
        if not meta_path.exists():
            raise KeyNotFound(f"no entry under key {key!r} in {self.root}")
        return json.loads(meta_path.read_text())


def cache_embeddings(
    store_path: Path, key: str, matrix: np.ndarray, encoder: str = "", dtype: str = "f32"
) -> None:
    EmbeddingStore(store_path).save(key, matrix, encoder=encoder, dtype=dtype)


def load_embeddings(store_path: Path, key: str) -> np.ndarray:
    return EmbeddingStore(store_path).load(key)


def content_key(encoder: str, case_id: str, content_hash: str) -> str:
    """Cache key convention: encoder name, case, and a content digest prefix."""
    return f"{encoder}-{case_id}-{content_hash[:12]}"
