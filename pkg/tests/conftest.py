import hashlib
import json
import shutil
from pathlib import Path

import pytest

from fruskg.wikidata import WikidataClient, build_candidate_query, build_facts_query

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return DATA / "corpus"


@pytest.fixture()
def volumes(corpus_dir):
    from fruskg.tei_ingest import scan_corpus

    stream, _report = scan_corpus(corpus_dir)
    return list(stream)


def _install_response(cache_dir: Path, query: str, response_file: str):
    digest = hashlib.sha256(query.encode("utf-8")).hexdigest()
    shutil.copy(DATA / "wikidata_responses" / response_file, cache_dir / f"{digest}.json")


@pytest.fixture()
def wikidata_client(tmp_path) -> WikidataClient:
    """Offline client with the recorded fixture responses pre-cached."""
    cache_dir = tmp_path / "wd_cache"
    cache_dir.mkdir()
    _install_response(cache_dir, build_candidate_query(["Richard Nixon"]), "candidates_richard_nixon.json")
    _install_response(cache_dir, build_candidate_query(["Zqxwv Pqrst"]), "candidates_empty.json")
    _install_response(cache_dir, build_facts_query("Q9588"), "facts_Q9588.json")
    _install_response(cache_dir, build_facts_query("Q314"), "facts_Q314.json")
    return WikidataClient(cache_dir=cache_dir, offline=True)


@pytest.fixture(scope="session")
def redaction_fixtures():
    return json.loads((DATA / "redaction_fixtures.json").read_text(encoding="utf-8"))
