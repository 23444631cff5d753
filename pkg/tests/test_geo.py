"""City resolution tests against the vendored city/continent tables."""

import pytest

from fruskg.errors import OverrideCountryUnknown, UnknownCountry
from fruskg.geo import (
    CONTINENTS,
    GeoDatabase,
    apply_overrides,
    load_overrides,
    match_city,
    normalize_city,
    unresolved_template,
)


@pytest.fixture(scope="module")
def db():
    return GeoDatabase()


def test_normalize_city():
    assert normalize_city("  Lisbon. ") == "lisbon"
    assert normalize_city("São Paulo") == "sao paulo"
    assert normalize_city("MEXICO CITY") == "mexico city"
    assert normalize_city("") == ""


def test_unique_match(db):
    res = match_city("Lisbon", db)
    assert res.status == "unique"
    assert res.country == "Portugal"
    assert res.continent == "Europe"


def test_ambiguous_match_sucre(db):
    res = match_city("Sucre", db)
    assert res.status == "ambiguous"
    assert res.country is None
    countries = {c["country"] for c in res.candidates}
    assert {"Bolivia", "Colombia"} <= countries


def test_not_found(db):
    res = match_city("Xyzzyville", db)
    assert res.status == "not-found"
    assert res.country is None


def test_diacritics_resolve(db):
    assert match_city("São Paulo", db).country == "Brazil"
    assert match_city("Sao Paulo", db).country == "Brazil"


def test_continent_table_closed(db):
    """Every country referenced by a city row has a continent."""
    for entries in db._cities.values():
        for entry in entries:
            assert db.continent_of(entry["country"]) in CONTINENTS


def test_unknown_country_raises(db):
    with pytest.raises(UnknownCountry):
        db.continent_of("Atlantis")


def test_overrides_roundtrip(db, tmp_path):
    resolutions = [match_city(c, db) for c in ("Lisbon", "Sucre", "Xyzzyville")]
    template = unresolved_template(resolutions)
    assert template.splitlines()[0] == "normalized_city,country"
    assert "sucre," in template
    assert "xyzzyville," in template
    assert "lisbon" not in template

    path = tmp_path / "overrides.csv"
    path.write_text("normalized_city,country\nsucre,Bolivia\n", encoding="utf-8")
    overrides = load_overrides(path)
    fixed = apply_overrides(resolutions, overrides, db)
    by_city = {r.normalized_city: r for r in fixed}
    assert by_city["sucre"].status == "overridden"
    assert by_city["sucre"].country == "Bolivia"
    assert by_city["sucre"].continent == "South America"
    # unique stays unique; unmatched stays unresolved
    assert by_city["lisbon"].status == "unique"
    assert by_city["xyzzyville"].status == "not-found"


def test_override_with_unknown_country_rejected(db):
    res = [match_city("Sucre", db)]
    with pytest.raises(OverrideCountryUnknown):
        apply_overrides(res, {"sucre": "Atlantis"}, db)


def test_status_totals_invariant(db):
    """Overrides only ever convert ambiguous/not-found into overridden."""
    cities = ["Lisbon", "Sucre", "Madrid", "Tokyo", "Nowhereville", "Paris"]
    before = [match_city(c, db) for c in cities]
    fixed = apply_overrides(before, {"sucre": "Bolivia"}, db)
    assert len(fixed) == len(before)
    for old, new in zip(before, fixed):
        if old.status == "unique":
            assert new.status == "unique" and new.country == old.country
        else:
            assert new.status in (old.status, "overridden")


def test_custom_tables(tmp_path):
    cities = tmp_path / "cities.csv"
    cities.write_text(
        "city,country,population,latitude,longitude\n"
        "Testville,Testland,100,0,0\n", encoding="utf-8")
    conts = tmp_path / "continents.csv"
    conts.write_text("country,continent\nTestland,Europe\n", encoding="utf-8")
    db = GeoDatabase(cities, conts)
    assert match_city("testville", db).country == "Testland"
