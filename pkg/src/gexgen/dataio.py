"""On-disk formats for every pipeline artifact.

Formats are intentionally plain: TSV for expression tables (empty field =
missing), JSONL for per-case records and tile manifests, JSON for splits and
fitted statistics, lossless PNG for slides and tiles. All writers are
deterministic so re-runs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
from PIL import Image

from .errors import DataError
from .expression import GeneScaler
from .types import ClinicalRecord, DatasetSplit, ExpressionMatrix, SlideImage, Tile


def _dump_json(obj, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_json(path: Path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing file: {path}")
    return json.loads(path.read_text())


# --- expression tables -------------------------------------------------------


def write_expression_tsv(m: ExpressionMatrix, path: Path) -> None:
    """First column sample_id, one column per gene, empty cell = missing."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = m.values.astype(object)
    values[m.missing_mask] = ""
    df = pd.DataFrame(values, columns=m.gene_ids)
    df.insert(0, "sample_id", m.sample_ids)
    df.to_csv(path, sep="\t", index=False, float_format="%.10g")


def read_expression_tsv(path: Path) -> ExpressionMatrix:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing expression table: {path}")
    df = pd.read_csv(path, sep="\t", dtype={"sample_id": str})
    if "sample_id" not in df.columns:
        raise DataError(f"expression table {path} lacks a sample_id column")
    sample_ids = df["sample_id"].tolist()
    genes = [c for c in df.columns if c != "sample_id"]
    raw = df[genes].to_numpy(dtype=np.float64)
    missing = np.isnan(raw)
    values = np.where(missing, 0.0, raw)
    return ExpressionMatrix(
        sample_ids=sample_ids, gene_ids=genes, values=values, missing_mask=missing
    )


# --- clinical metadata -------------------------------------------------------


def write_clinical_jsonl(records: list[ClinicalRecord], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "case_id": r.case_id,
                        "disease_type": r.disease_type,
                        "primary_site": r.primary_site,
                        "demographics": r.demographics,
                        "free_fields": r.free_fields,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_clinical_jsonl(path: Path) -> list[ClinicalRecord]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing clinical metadata: {path}")
    records = []
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        records.append(
            ClinicalRecord(
                case_id=d["case_id"],
                disease_type=d.get("disease_type", ""),
                primary_site=d.get("primary_site", ""),
                demographics=d.get("demographics", {}),
                free_fields=d.get("free_fields", {}),
            )
        )
    return records


# --- splits ------------------------------------------------------------------


def write_split(split: DatasetSplit, path: Path, seed: int, fraction: float) -> None:
    _dump_json(
        {"train": split.train_ids, "test": split.test_ids, "seed": seed, "fraction": fraction},
        Path(path),
    )


def read_split(path: Path) -> DatasetSplit:
    d = _load_json(Path(path))
    return DatasetSplit(train_ids=list(d["train"]), test_ids=list(d["test"]))


# --- tiles -------------------------------------------------------------------


def tile_png_name(tile: Tile) -> str:
    return f"{tile.key()}.png"


def write_tile_png(pixels: np.ndarray, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(pixels, dtype=np.uint8)).save(path, format="PNG")


def read_png(path: Path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing image: {path}")
    return np.asarray(Image.open(path).convert("RGB"))


def write_tile_manifest(tiles: list[Tile], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for t in tiles:
            fh.write(
                json.dumps(
                    {
                        "slide_id": t.slide_id,
                        "origin_x": t.origin_x,
                        "origin_y": t.origin_y,
                        "size": t.size,
                        "tissue_fraction": t.tissue_fraction,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_tile_manifest(path: Path) -> list[Tile]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing tile manifest: {path}")
    tiles = []
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        tiles.append(
            Tile(
                slide_id=d["slide_id"],
                origin_x=int(d["origin_x"]),
                origin_y=int(d["origin_y"]),
                size=int(d["size"]),
                tissue_fraction=float(d["tissue_fraction"]),
            )
        )
    return tiles


# --- slides ------------------------------------------------------------------


def write_slide_png(slide: SlideImage, directory: Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{slide.slide_id}.png"
    Image.fromarray(slide.pixels.astype(np.uint8)).save(path, format="PNG")
    return path


def read_slide_png(path: Path) -> SlideImage:
    path = Path(path)
    return SlideImage(slide_id=path.stem, pixels=read_png(path))


# --- summaries and fitted stats ----------------------------------------------


def write_summaries_jsonl(summaries: dict[str, str], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for case_id in sorted(summaries):
            fh.write(json.dumps({"case_id": case_id, "text": summaries[case_id]}) + "\n")


def read_summaries_jsonl(path: Path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"missing summaries: {path}")
    out = {}
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        out[d["case_id"]] = d["text"]
    return out


def write_scaler(scaler: GeneScaler, path: Path) -> None:
    _dump_json(scaler.to_dict(), Path(path))


def read_scaler(path: Path) -> GeneScaler:
    return GeneScaler.from_dict(_load_json(Path(path)))
