"""Pipeline configuration: YAML file plus environment overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigInvalid


@dataclass
class PipelineConfig:
    corpus_dir: Path
    output_dir: Path
    cache_dir: Path

    # unification thresholds
    dl_max_step3: int = 5
    jaro_min_step3: float = 0.9
    min_common_words_step3: int = 2
    dl_max_step4: int = 1

    # wikification
    wikidata_endpoint: str = "https://query.wikidata.org/sparql"
    wikidata_offline: bool = False
    requests_per_second: float = 5.0
    candidate_limit: int = 20
    low_confidence_threshold: float = 0.5

    # sidecar / test doubles
    sidecar_url: str | None = None
    use_test_double: bool = True
    embed_dimension: int = 32

    # geo
    city_db_path: Path | None = None
    overrides_path: Path | None = None

    # analytics defaults
    window_start: int = 1949
    window_end: int = 1985
    window_step: int = 4
    bin_width: int = 2
    min_occurrence: int = 50
    damping: float = 0.85
    dimension: int = 128
    seed: int = 42

    def as_dict(self) -> dict:
        out = {}
        for key, value in self.__dict__.items():
            out[key] = str(value) if isinstance(value, Path) else value
        return out


def load_config(path: str | Path) -> PipelineConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigInvalid(str(exc)) from exc

    endpoint = os.environ.get("FRUSKG_WIKIDATA_ENDPOINT")
    sidecar = os.environ.get("FRUSKG_SIDECAR_URL")
    if endpoint:
        raw["wikidata_endpoint"] = endpoint
    if sidecar:
        raw["sidecar_url"] = sidecar
        raw.setdefault("use_test_double", False)

    for required in ("corpus_dir", "output_dir"):
        if required not in raw:
            raise ConfigInvalid(f"missing required key {required}")
    raw.setdefault("cache_dir", str(Path(raw["output_dir"]) / "cache"))

    known = set(PipelineConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")

    for key in ("corpus_dir", "output_dir", "cache_dir", "city_db_path", "overrides_path"):
        if raw.get(key) is not None:
            raw[key] = Path(raw[key])

    config = PipelineConfig(**raw)
    if not config.corpus_dir.is_dir():
        raise ConfigInvalid(f"corpus directory does not exist: {config.corpus_dir}")
    if not 0 < config.damping < 1:
        raise ConfigInvalid("damping must be in (0, 1)")
    if config.bin_width < 1 or config.min_occurrence < 0 or config.dimension < 2:
        raise ConfigInvalid("analytics parameters out of range")
    return config
