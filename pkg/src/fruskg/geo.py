"""City-to-country resolution with a manual-override escape hatch.

Automatic matching is a normalized exact lookup against the vendored city
database; several matches (e.g. Sucre in Bolivia and Colombia) are left for
a human overrides file rather than guessed.
"""

from __future__ import annotations

import csv
import unicodedata
from dataclasses import dataclass, field, asdict
from importlib import resources
from pathlib import Path
from typing import Optional

from .errors import DatabaseNotLoaded, OverrideCountryUnknown, UnknownCountry

CONTINENTS = {"Africa", "Asia", "Europe", "North America", "South America", "Oceania"}


@dataclass
class GeoResolution:
    city_raw: str
    normalized_city: str
    status: str  # unique | ambiguous | not-found | overridden
    country: Optional[str] = None
    continent: Optional[str] = None
    candidates: list[dict] = field(default_factory=list)  # {"city","country"}

    def to_json(self) -> dict:
        return asdict(self)


def normalize_city(raw: str) -> str:
    """Case-fold and strip diacritics and surrounding punctuation."""
    s = unicodedata.normalize("NFKD", raw)
    s = "".join(c for c in s if not unicodedata.combining(c))
    s = s.lower().strip().strip(".,;:")
    return " ".join(s.split())


class GeoDatabase:
    """Vendored world-cities table plus the country-to-continent table."""

    def __init__(self, cities_path: str | Path | None = None,
                 continents_path: str | Path | None = None):
        self._cities: dict[str, list[dict]] = {}
        self._continent_of: dict[str, str] = {}
        self._load(cities_path, continents_path)

    def _load(self, cities_path, continents_path):
        if cities_path is None:
            cities_text = resources.files("fruskg.data").joinpath("worldcities.csv").read_text(encoding="utf-8")
        else:
            cities_text = Path(cities_path).read_text(encoding="utf-8")
        if continents_path is None:
            cont_text = resources.files("fruskg.data").joinpath("continents.csv").read_text(encoding="utf-8")
        else:
            cont_text = Path(continents_path).read_text(encoding="utf-8")

        for row in csv.DictReader(cont_text.splitlines()):
            self._continent_of[row["country"]] = row["continent"]

        for row in csv.DictReader(cities_text.splitlines()):
            key = normalize_city(row["city"])
            entry = {
                "city": row["city"],
                "country": row["country"],
                "population": float(row.get("population") or 0),
                "latitude": float(row.get("latitude") or 0),
                "longitude": float(row.get("longitude") or 0),
            }
            self._cities.setdefault(key, []).append(entry)
        for entries in self._cities.values():
            entries.sort(key=lambda e: (-e["population"], e["country"]))

    @property
    def loaded(self) -> bool:
        return bool(self._cities)

    def lookup(self, normalized: str) -> list[dict]:
        return self._cities.get(normalized, [])

    def continent_of(self, country: str) -> str:
        try:
            return self._continent_of[country]
        except KeyError:
            raise UnknownCountry(country) from None

    def knows_country(self, country: str) -> bool:
        return country in self._continent_of


def match_city(city_raw: str, db: GeoDatabase) -> GeoResolution:
    if not db.loaded:
        raise DatabaseNotLoaded("city database is empty")
    normalized = normalize_city(city_raw)
    hits = db.lookup(normalized) if normalized else []
    if not hits:
        return GeoResolution(city_raw=city_raw, normalized_city=normalized, status="not-found")
    if len(hits) == 1:
        country = hits[0]["country"]
        return GeoResolution(
            city_raw=city_raw, normalized_city=normalized, status="unique",
            country=country, continent=db.continent_of(country),
        )
    return GeoResolution(
        city_raw=city_raw, normalized_city=normalized, status="ambiguous",
        candidates=[{"city": h["city"], "country": h["country"]} for h in hits],
    )


def load_overrides(path: str | Path) -> dict[str, str]:
    text = Path(path).read_text(encoding="utf-8")
    out = {}
    for row in csv.DictReader(text.splitlines()):
        out[normalize_city(row["normalized_city"])] = row["country"]
    return out


def apply_overrides(resolutions: list[GeoResolution], overrides: dict[str, str],
                    db: GeoDatabase) -> list[GeoResolution]:
    """Promote ambiguous/not-found resolutions named in the overrides file.

    Unique resolutions are never downgraded. A country unknown to the
    continent table is a configuration error, raised immediately.
    """
    for country in overrides.values():
        if not db.knows_country(country):
            raise OverrideCountryUnknown(country)
    out = []
    for res in resolutions:
        if res.status in ("ambiguous", "not-found") and res.normalized_city in overrides:
            country = overrides[res.normalized_city]
            res = GeoResolution(
                city_raw=res.city_raw, normalized_city=res.normalized_city,
                status="overridden", country=country,
                continent=db.continent_of(country),
            )
        out.append(res)
    return out


def unresolved_template(resolutions: list[GeoResolution]) -> str:
    """CSV template listing cities a human still has to resolve."""
    lines = ["normalized_city,country"]
    seen = set()
    for res in resolutions:
        if res.status in ("ambiguous", "not-found") and res.normalized_city not in seen:
            seen.add(res.normalized_city)
            lines.append(f"{res.normalized_city},")
    return "\n".join(lines) + "\n"
