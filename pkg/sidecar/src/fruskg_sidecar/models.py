"""Deterministic model backends.

Both backends are pure functions of their inputs and a pinned
configuration, so responses are reproducible across restarts and hosts
and golden fixtures stay valid. Swapping in heavyweight models (sentence
encoders, statistical NER) only requires implementing the same two
classes; the wire contract does not change.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModelInfo:
    model_id: str
    dimension: int
    max_length: int
    version_hash: str


class HashEmbeddingModel:
    """Seeded unit vector per distinct text."""

    def __init__(self, model_id: str = "default", dimension: int = 32,
                 max_length: int = 10_000):
        self.model_id = model_id
        self.dimension = dimension
        self.max_length = max_length

    @property
    def info(self) -> ModelInfo:
        payload = f"hash-embed|{self.model_id}|{self.dimension}|{self.max_length}"
        return ModelInfo(self.model_id, self.dimension, self.max_length,
                         hashlib.sha256(payload.encode()).hexdigest()[:16])

    def embed(self, texts: list[str]) -> list[list[float]]:
        out = []
        for text in texts:
            digest = hashlib.sha256(text.encode("utf-8")).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "big") % (2**32))
            vec = rng.standard_normal(self.dimension)
            vec /= np.linalg.norm(vec)
            out.append(vec.tolist())
        return out


_GAZETTEER = {
    "Lisbon": "GPE", "Portugal": "GPE", "Tokyo": "GPE", "Moscow": "GPE",
    "Paris": "GPE", "United States": "GPE", "Soviet Union": "GPE",
    "France": "GPE", "Angola": "GPE",
    "Azores": "LOC", "Europe": "LOC", "Africa": "LOC",
    "NATO": "ORG", "United Nations": "ORG", "CIA": "ORG",
    "Department of State": "ORG", "White House": "FAC",
    "Richard Nixon": "PERSON", "Henry Kissinger": "PERSON",
    "Cold War": "EVENT", "Portuguese": "NORP", "Soviet": "NORP",
}

_MONTHS = ("January|February|March|April|May|June|July|August|September|"
           "October|November|December")
_DATE = re.compile(rf"\b(?:{_MONTHS})\s+\d{{1,2}},\s+\d{{4}}\b"
                   rf"|\b(?:{_MONTHS})\s+\d{{4}}\b"
                   rf"|\b\d{{4}}-\d{{2}}-\d{{2}}\b")


class GazetteerNerModel:
    """Dictionary NER plus a date recognizer.

    Emitting DATE spans is deliberate: consumers are expected to filter
    labels they do not want, and integration tests verify exactly that.
    """

    def __init__(self, model_id: str = "default", max_length: int = 10_000):
        self.model_id = model_id
        self.max_length = max_length
        phrases = sorted(_GAZETTEER, key=len, reverse=True)
        self._pattern = re.compile(
            r"\b(" + "|".join(re.escape(p) for p in phrases) + r")\b")

    @property
    def info(self) -> ModelInfo:
        payload = f"gazetteer-ner|{self.model_id}|{self.max_length}|" + \
            "|".join(sorted(_GAZETTEER))
        return ModelInfo(self.model_id, 0, self.max_length,
                         hashlib.sha256(payload.encode()).hexdigest()[:16])

    def annotate(self, text: str) -> list[dict]:
        spans = [
            {"text": m.group(1), "label": _GAZETTEER[m.group(1)],
             "start": m.start(1), "end": m.end(1)}
            for m in self._pattern.finditer(text)
        ]
        spans.extend(
            {"text": m.group(0), "label": "DATE",
             "start": m.start(0), "end": m.end(0)}
            for m in _DATE.finditer(text)
        )
        spans.sort(key=lambda s: (s["start"], s["end"]))
        return spans
