"""Embedding and NER providers.

Two implementations of each contract: an HTTP client speaking the sidecar
wire format (POST /embed, POST /ner, GET /info), and deterministic in-repo
test doubles so the whole pipeline runs with no sidecar at all.
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol

import numpy as np

from .errors import EmbedderUnavailable, ProviderUnavailable


class Embedder(Protocol):
    def embed(self, texts: list[str]) -> list[list[float]]: ...
    @property
    def identity(self) -> str: ...


class NerProvider(Protocol):
    def annotate(self, text: str) -> list[dict]: ...
    @property
    def identity(self) -> str: ...
    @property
    def max_length(self) -> int: ...


class HashEmbedder:
    """Deterministic pseudo-embeddings: a seeded vector per distinct text.

    Not semantically meaningful, but stable across runs and machines, which
    is all the determinism suite needs.
    """

    def __init__(self, dimension: int = 32):
        self.dimension = dimension

    @property
    def identity(self) -> str:
        return f"hash-embedder-d{self.dimension}"

    def embed(self, texts: list[str]) -> list[list[float]]:
        out = []
        for text in texts:
            digest = hashlib.sha256(text.encode("utf-8")).digest()
            seed = int.from_bytes(digest[:8], "big") % (2**32)
            rng = np.random.default_rng(seed)
            vec = rng.standard_normal(self.dimension)
            vec /= np.linalg.norm(vec)
            out.append(vec.tolist())
        return out


_DEFAULT_GAZETTEER = {
    "Portugal": "GPE", "Lisbon": "GPE", "Tokyo": "GPE", "Moscow": "GPE",
    "United States": "GPE", "Soviet Union": "GPE", "France": "GPE",
    "Angola": "GPE", "Azores": "LOC", "Africa": "LOC", "Europe": "LOC",
    "NATO": "ORG", "United Nations": "ORG", "CIA": "ORG",
    "Department of State": "ORG", "White House": "FAC",
    "Richard Nixon": "PERSON", "Henry Kissinger": "PERSON",
    "Cold War": "EVENT", "Portuguese": "NORP", "Soviet": "NORP",
}


class GazetteerNer:
    """Dictionary-based NER double with exact longest-match semantics."""

    def __init__(self, gazetteer: dict[str, str] | None = None, max_length: int = 100_000):
        self.gazetteer = dict(gazetteer or _DEFAULT_GAZETTEER)
        self._max_length = max_length
        # longest phrases first so "United States" beats "United"
        phrases = sorted(self.gazetteer, key=len, reverse=True)
        self._pattern = re.compile(
            r"\b(" + "|".join(re.escape(p) for p in phrases) + r")\b"
        ) if phrases else None

    @property
    def identity(self) -> str:
        return "gazetteer-ner"

    @property
    def max_length(self) -> int:
        return self._max_length

    def annotate(self, text: str) -> list[dict]:
        if self._pattern is None or not text:
            return []
        spans = []
        for m in self._pattern.finditer(text):
            spans.append({
                "text": m.group(1),
                "label": self.gazetteer[m.group(1)],
                "start": m.start(1),
                "end": m.end(1),
            })
        return spans


class SidecarEmbedder:
    """Client for the sidecar's POST /embed endpoint."""

    def __init__(self, base_url: str, model_id: str = "default", timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.timeout = timeout

    @property
    def identity(self) -> str:
        return f"sidecar:{self.base_url}:{self.model_id}"

    def embed(self, texts: list[str]) -> list[list[float]]:
        import requests

        try:
            resp = requests.post(
                f"{self.base_url}/embed",
                json={"texts": texts, "model_id": self.model_id},
                timeout=self.timeout,
            )
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise EmbedderUnavailable(str(exc)) from exc
        return resp.json()["vectors"]


class SidecarNer:
    """Client for the sidecar's POST /ner endpoint."""

    def __init__(self, base_url: str, model_id: str = "default", timeout: float = 60.0):
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.timeout = timeout
        self._max_length: int | None = None

    @property
    def identity(self) -> str:
        return f"sidecar:{self.base_url}:{self.model_id}"

    @property
    def max_length(self) -> int:
        if self._max_length is None:
            import requests

            try:
                resp = requests.get(f"{self.base_url}/info", timeout=self.timeout)
                resp.raise_for_status()
                self._max_length = int(resp.json()["max_length"])
            except requests.RequestException as exc:
                raise ProviderUnavailable(str(exc)) from exc
        return self._max_length

    def annotate(self, text: str) -> list[dict]:
        import requests

        try:
            resp = requests.post(
                f"{self.base_url}/ner",
                json={"text": text, "model_id": self.model_id},
                timeout=self.timeout,
            )
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise ProviderUnavailable(str(exc)) from exc
        return resp.json()["entities"]
