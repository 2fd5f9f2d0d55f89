"""Deterministic case-summary text from structured clinical metadata.

A fixed template stands in for LLM-written summaries: same record in, same
bytes out, no external model. Summaries land between 50 and 300 words.
"""

from __future__ import annotations

from .types import ClinicalRecord

# Structured-record keys that never belong in a narrative summary.
_EXCLUDED_KEYS = {"case_id", "id", "uuid", "sample_id", "slide_id", "patient_id"}
_EXCLUDED_SUBSTRINGS = ("path", "file", "url", "dir")

_MAX_WORDS = 300
# Leave headroom for the closing boilerplate when adding annotation items.
_ANNOTATION_WORD_BUDGET = 220

_CLOSING = (
    "The tissue specimen associated with this case was processed for "
    "histopathology review, and the matched gene expression profile was "
    "measured under the experimental conditions noted above. This summary "
    "was derived deterministically from the structured clinical record to "
    "describe the disease site, patient background, and study context for "
    "research use."
)


def _relevant_items(fields: dict) -> list[tuple[str, str]]:
    items = []
    for key in sorted(fields):
        low = key.lower()
        if low in _EXCLUDED_KEYS or any(s in low for s in _EXCLUDED_SUBSTRINGS):
            continue
        value = fields[key]
        if value is None or value == "":
            continue
        items.append((key.replace("_", " "), str(value)))
    return items


def serialize_clinical_summary(record: ClinicalRecord) -> str:
    """Render one case into fixed-template narrative text."""
    disease = record.disease_type or "an unspecified disease"
    site = record.primary_site or "an unspecified primary site"
    parts = [
        f"This case describes a patient diagnosed with {disease}, "
        f"a disease arising in the {site}."
    ]

    demo = _relevant_items(record.demographics)
    if demo:
        listing = "; ".join(f"{k} {v}" for k, v in demo)
        parts.append(f"The demographic profile recorded for this patient lists {listing}.")
    else:
        parts.append("No additional demographic details are recorded for this patient.")

    extra = _relevant_items(record.free_fields)
    if extra:
        kept = []
        words_used = sum(len(p.split()) for p in parts)
        truncated = False
        for k, v in extra:
            item = f"{k} {v}"
            if words_used + len(item.split()) > _ANNOTATION_WORD_BUDGET:
                truncated = True
                break
            kept.append(item)
            words_used += len(item.split())
        if kept:
            parts.append("Additional clinical annotations include " + "; ".join(kept) + ".")
        if truncated:
            parts.append("Further annotation fields were omitted for brevity.")
    else:
        parts.append("No further clinical annotations are available in the structured record.")

    parts.append(_CLOSING)
    text = " ".join(parts)
    assert 50 <= len(text.split()) <= _MAX_WORDS, "summary template out of word bounds"
    return text
