"""Analytics tests: oracles for projection and PageRank, statistical checks
for the walk generator, and determinism/equivariance for embeddings."""

import itertools
import random
from collections import Counter

import numpy as np
import pytest

from fruskg.analytics import (
    EmbeddingSet,
    WeightedGraph,
    embed_graph,
    generate_walks,
    pagerank,
    project_cooccurrence,
    redaction_table,
    role_projection,
    timeline_by_continent,
    top_k_similar,
)
from fruskg.errors import (
    DimensionTooSmall,
    EmptyProjection,
    MissingTopics,
    UnknownEntity,
)
from fruskg.kgraph import KGraph


# --- fixture graph builders -------------------------------------------------

def geo_graph():
    """Four dated documents: 3 from Europe, 1 from Asia, 1 from the US."""
    kg = KGraph()
    cities = [("lisbon", "Portugal", "Europe"), ("paris", "France", "Europe"),
              ("tokyo", "Japan", "Asia"), ("washington", "United States", "North America")]
    for city, country, continent in cities:
        kg.add_node("City", city, name=city)
        kg.add_node("Country", country, continent=continent)
        kg.add_relation(f"City:{city}", f"Country:{country}", "LOCATED_IN")
    docs = [("d1", 1970, "lisbon"), ("d2", 1971, "paris"), ("d3", 1970, "paris"),
            ("d4", 1971, "tokyo"), ("d5", 1970, "washington"), ("d6", 1984, "lisbon")]
    for doc_id, year, city in docs:
        kg.add_node("Document", doc_id, docId=doc_id, subtype="historical-document",
                    volume="v", year=year, date=f"{year}-06-01")
        kg.add_relation(f"Document:{doc_id}", f"City:{city}", "SENT_FROM")
    return kg


def entity_graph(doc_entities, years=None):
    kg = KGraph()
    years = years or {}
    for doc_id, ents in doc_entities.items():
        kg.add_node("Document", doc_id, docId=doc_id, subtype="historical-document",
                    volume="v", year=years.get(doc_id, 1970))
        for ent in ents:
            kg.add_node("NamedEntity", ent, text=ent, entityType="GPE")
            kg.add_relation(f"Document:{doc_id}", f"NamedEntity:{ent}", "HAS_ENTITY")
    return kg


# --- timeline ---------------------------------------------------------------

def test_timeline_shares():
    rows = timeline_by_continent(geo_graph(), bin_width=2)
    by_bin = {}
    for r in rows:
        by_bin.setdefault(r["bin"], {})[r["continent"]] = r["share"]
    # US documents excluded: 1970-71 bin has 3 Europe + 1 Asia
    assert by_bin[1970]["Europe"] == pytest.approx(0.75)
    assert by_bin[1970]["Asia"] == pytest.approx(0.25)
    assert by_bin[1984] == {"Europe": pytest.approx(1.0)}
    for bin_start, shares in by_bin.items():
        assert sum(shares.values()) == pytest.approx(1.0)
    assert "North America" not in {r["continent"] for r in rows}


def test_timeline_bin_assignment():
    rows = timeline_by_continent(geo_graph(), bin_width=2)
    assert {r["bin"] for r in rows} == {1970, 1984}  # 1971 folds into 1970


# --- co-occurrence projection ----------------------------------------------

def brute_force_projection(doc_entities, min_occurrence, window=None, years=None):
    years = years or {}
    filtered = {
        d: set(ents) for d, ents in doc_entities.items()
        if window is None or window[0] <= years.get(d, 1970) <= window[1]
    }
    occurrence = Counter()
    for ents in filtered.values():
        occurrence.update(ents)
    surviving = {e for e, c in occurrence.items() if c >= min_occurrence}
    weights = Counter()
    for ents in filtered.values():
        for a, b in itertools.combinations(sorted(e for e in ents if e in surviving), 2):
            weights[(f"NamedEntity:{a}", f"NamedEntity:{b}")] += 1
    return weights


def test_projection_matches_brute_force():
    rng = random.Random(7)
    entities = [f"e{i}" for i in range(12)]
    for _ in range(25):
        doc_entities = {
            f"d{j}": rng.sample(entities, rng.randint(1, 6))
            for j in range(rng.randint(2, 30))
        }
        min_occ = rng.randint(1, 4)
        expected = brute_force_projection(doc_entities, min_occ)
        kg = entity_graph(doc_entities)
        try:
            graph = project_cooccurrence(kg, min_occurrence=min_occ)
        except EmptyProjection:
            assert not doc_entities
            continue
        got = Counter()
        for i, adj in enumerate(graph.adjacency):
            for j, w in adj:
                if i < j:
                    got[(graph.keys[i], graph.keys[j])] = w
        assert got == Counter({tuple(sorted(k)): v for k, v in expected.items() if v})


def test_projection_threshold_and_window():
    doc_entities = {"d1": ["a", "b"], "d2": ["a", "b"], "d3": ["a", "c"]}
    years = {"d1": 1950, "d2": 1960, "d3": 1960}
    kg = entity_graph(doc_entities, years)
    graph = project_cooccurrence(kg, min_occurrence=2, window=(1955, 1965))
    # window drops d1; only "a" appears twice, so no pair survives
    assert all(not adj for adj in graph.adjacency)
    graph = project_cooccurrence(kg, min_occurrence=1, window=(1955, 1965))
    pairs = {frozenset((graph.keys[i], graph.keys[j]))
             for i, adj in enumerate(graph.adjacency) for j, _ in adj}
    assert frozenset(("NamedEntity:a", "NamedEntity:b")) in pairs
    assert frozenset(("NamedEntity:a", "NamedEntity:c")) in pairs


def test_projection_empty_raises():
    kg = entity_graph({"d1": ["a"]}, years={"d1": 1900})
    with pytest.raises(EmptyProjection):
        project_cooccurrence(kg, min_occurrence=1, window=(1950, 1960))


def test_projection_unknown_label():
    with pytest.raises(ValueError):
        project_cooccurrence(entity_graph({"d1": ["a"]}), label="City")


# --- embeddings -------------------------------------------------------------

def triangle_plus_tail():
    return WeightedGraph.from_edge_weights({
        ("a", "b"): 2.0, ("b", "c"): 1.0, ("a", "c"): 1.0, ("c", "d"): 1.0,
    })


def test_embed_deterministic_and_normalized():
    g = triangle_plus_tail()
    e1 = embed_graph(g, dimension=16, seed=5)
    e2 = embed_graph(g, dimension=16, seed=5)
    for key in e1.vectors:
        assert np.array_equal(e1.vectors[key], e2.vectors[key])
        assert np.linalg.norm(e1.vectors[key]) == pytest.approx(1.0)


def test_embed_seed_changes_vectors():
    g = triangle_plus_tail()
    e1 = embed_graph(g, dimension=16, seed=5)
    e2 = embed_graph(g, dimension=16, seed=6)
    assert any(not np.allclose(e1.vectors[k], e2.vectors[k]) for k in e1.vectors)


def test_embed_permutation_equivariance():
    """Renaming nodes while preserving sort order preserves the vectors."""
    w1 = {("a", "b"): 2.0, ("b", "c"): 1.0, ("a", "c"): 1.0}
    mapping = {"a": "x1", "b": "x2", "c": "x3"}  # order-preserving rename
    w2 = {(mapping[a], mapping[b]): w for (a, b), w in w1.items()}
    e1 = embed_graph(WeightedGraph.from_edge_weights(w1), dimension=16, seed=9)
    e2 = embed_graph(WeightedGraph.from_edge_weights(w2), dimension=16, seed=9)
    for old, new in mapping.items():
        assert np.allclose(e1.vectors[old], e2.vectors[new])


def test_embed_isolated_node_kept():
    g = WeightedGraph(keys=["a", "b", "lonely"],
                      adjacency=[[(1, 1.0)], [(0, 1.0)], []])
    emb = embed_graph(g, dimension=8)
    assert np.linalg.norm(emb.vectors["lonely"]) == pytest.approx(1.0)


def test_embed_dimension_too_small():
    with pytest.raises(DimensionTooSmall):
        embed_graph(triangle_plus_tail(), dimension=1)


def test_top_k_similar():
    vectors = {
        "q": np.array([1.0, 0.0]),
        "same": np.array([2.0, 0.0]),
        "close": np.array([1.0, 0.2]),
        "far": np.array([-1.0, 0.0]),
    }
    emb = EmbeddingSet(window=(0, 0), dimension=2, vectors=vectors, seed=0)
    result = top_k_similar(emb, "q", k=3)
    assert [k for k, _ in result] == ["same", "close", "far"]
    assert result[0][1] == pytest.approx(1.0)
    with pytest.raises(UnknownEntity):
        top_k_similar(emb, "missing")


def test_top_k_tie_break_lexicographic():
    vectors = {"q": np.array([1.0, 0.0]),
               "b": np.array([3.0, 0.0]),
               "a": np.array([2.0, 0.0])}
    emb = EmbeddingSet(window=(0, 0), dimension=2, vectors=vectors, seed=0)
    assert [k for k, _ in top_k_similar(emb, "q", k=2)] == ["a", "b"]


# --- walks ------------------------------------------------------------------

def test_walks_shape_and_membership():
    g = triangle_plus_tail()
    walks = generate_walks(g, walk_length=10, walks_per_node=3, seed=1)
    assert len(walks) == g.n * 3
    for walk in walks:
        assert 1 <= len(walk) <= 10
        for a, b in zip(walk, walk[1:]):
            i, j = g.keys.index(a), g.keys.index(b)
            assert any(x == j for x, _ in g.adjacency[i])


def test_walks_deterministic():
    g = triangle_plus_tail()
    assert generate_walks(g, seed=3) == generate_walks(g, seed=3)


def test_walk_first_step_frequency():
    """From a, equal-weight neighbors b and c are drawn ~uniformly."""
    g = WeightedGraph.from_edge_weights({("a", "b"): 1.0, ("a", "c"): 1.0,
                                         ("b", "c"): 1.0})
    walks = generate_walks(g, walk_length=2, walks_per_node=10_000, seed=11)
    from_a = [w[1] for w in walks if w[0] == "a"]
    share_b = from_a.count("b") / len(from_a)
    assert share_b == pytest.approx(0.5, abs=0.05)


def test_walk_high_p_q_avoids_backtracking():
    """On a path graph with huge p and q, the walk cannot return or jump."""
    g = WeightedGraph.from_edge_weights({("a", "b"): 1.0, ("b", "c"): 1.0,
                                         ("c", "d"): 1.0})
    walks = generate_walks(g, p=1e9, q=1e9, walk_length=4,
                           walks_per_node=200, seed=2)
    for walk in walks:
        if walk[0] == "a" and len(walk) >= 3:
            # from b, returning to a has weight 1/p and c (not adjacent to a)
            # has weight 1/q, so both are equally tiny; from a path interior,
            # the only non-penalized move does not exist, so steps are split.
            assert walk[1] == "b"


def test_walk_low_p_returns():
    """Tiny p forces immediate backtracking."""
    g = WeightedGraph.from_edge_weights({("a", "b"): 1.0, ("b", "c"): 1.0,
                                         ("b", "d"): 1.0})
    walks = generate_walks(g, p=1e-9, q=1.0, walk_length=3,
                           walks_per_node=500, seed=4)
    returns = [w for w in walks if w[0] == "a" and len(w) == 3]
    assert returns
    back = sum(1 for w in returns if w[2] == "a") / len(returns)
    assert back > 0.99


def test_walks_invalid_params():
    with pytest.raises(ValueError):
        generate_walks(triangle_plus_tail(), p=0)


# --- PageRank ---------------------------------------------------------------

def pagerank_oracle(graph, damping, iterations=5000):
    n = graph.n
    M = np.zeros((n, n))
    for i in range(n):
        total = graph.degree_weight(i)
        if total == 0:
            M[:, i] = 1.0 / n
        else:
            for j, w in graph.adjacency[i]:
                M[j, i] = w / total
    scores = np.full(n, 1.0 / n)
    for _ in range(iterations):
        scores = (1 - damping) / n + damping * (M @ scores)
    return scores / scores.mean()


def random_weighted_graph(rng, max_nodes=100):
    n = rng.randint(2, max_nodes)
    weights = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.08:
                weights[(f"n{i:03d}", f"n{j:03d}")] = rng.uniform(0.5, 5.0)
    if not weights:
        weights[("n000", "n001")] = 1.0
    return WeightedGraph.from_edge_weights(weights)


def test_pagerank_matches_oracle_on_random_graphs():
    rng = random.Random(2024)
    for _ in range(100):
        graph = random_weighted_graph(rng)
        damping = rng.choice([0.5, 0.85, 0.95])
        table = pagerank(graph, damping=damping, max_iterations=500, tolerance=1e-14)
        expected = pagerank_oracle(graph, damping)
        got = {key: score for key, _, score in table.rows}
        for i, key in enumerate(graph.keys):
            assert got[key] == pytest.approx(expected[i], abs=1e-6)


def test_pagerank_triangle_scores_one():
    g = WeightedGraph.from_edge_weights({("a", "b"): 1.0, ("b", "c"): 1.0,
                                         ("a", "c"): 1.0})
    table = pagerank(g)
    for _, _, score in table.rows:
        assert score == pytest.approx(1.0, abs=1e-6)
    assert table.converged


def test_pagerank_mean_is_one():
    rng = random.Random(5)
    g = random_weighted_graph(rng, max_nodes=40)
    table = pagerank(g)
    assert np.mean([s for _, _, s in table.rows]) == pytest.approx(1.0)


def test_pagerank_sorted_descending():
    rng = random.Random(6)
    g = random_weighted_graph(rng, max_nodes=40)
    scores = [s for _, _, s in pagerank(g).rows]
    assert scores == sorted(scores, reverse=True)


# --- role projection --------------------------------------------------------

def role_graph():
    kg = KGraph()
    kg.add_node("Person", "p1")
    kg.add_node("Person", "p2")
    kg.add_node("Role", "President")
    kg.add_node("Role", "Secretary")
    kg.add_node("Role", "Senator")
    kg.add_relation("Person:p1", "Role:President",
                    "HAS_ROLE", start="1969-01-20", end="1974-08-09")
    kg.add_relation("Person:p1", "Role:Senator",
                    "HAS_ROLE", start="1950-01-01", end="1953-01-01")
    kg.add_relation("Person:p2", "Role:Secretary", "HAS_ROLE")
    for doc_id, date in (("d1", "1970-05-01"), ("d2", "1951-06-01"), ("d3", None)):
        kg.add_node("Document", doc_id, docId=doc_id, subtype="historical-document",
                    volume="v", date=date)
        kg.add_relation(f"Document:{doc_id}", "Person:p1", "MENTIONED")
        kg.add_relation(f"Document:{doc_id}", "Person:p2", "MENTIONED")
    return kg


def test_role_projection_respects_intervals():
    graph = role_projection(role_graph())
    pairs = Counter()
    for i, adj in enumerate(graph.adjacency):
        for j, w in adj:
            if i < j:
                pairs[(graph.keys[i], graph.keys[j])] = w
    # d1 (1970): President+Secretary. d2 (1951): Senator+Secretary.
    # d3 (undated): all three roles pairwise.
    assert pairs[("Role:President", "Role:Secretary")] == 2.0
    assert pairs[("Role:Secretary", "Role:Senator")] == 2.0
    assert pairs[("Role:President", "Role:Senator")] == 1.0


def test_role_projection_via_label_dispatch():
    g1 = project_cooccurrence(role_graph(), label="Role")
    g2 = role_projection(role_graph())
    assert g1.keys == g2.keys
    assert g1.adjacency == g2.adjacency


# --- redaction tables -------------------------------------------------------

def redacted_graph():
    kg = KGraph()
    kg.add_node("Term", "t1", label_text="NATO")
    kg.add_node("Term", "t2", label_text="MAP")
    reds = [{"rtype": "text-amount"}, {"rtype": "name"}]
    kg.add_node("Document", "d1", docId="d1", subtype="historical-document",
                volume="v", redactions=reds)
    kg.add_node("Document", "d2", docId="d2", subtype="historical-document",
                volume="v", redactions=[{"rtype": "text-amount"}])
    kg.add_node("Document", "d3", docId="d3", subtype="historical-document",
                volume="v")
    for doc in ("d1", "d2", "d3"):
        kg.add_relation(f"Document:{doc}", "Term:t1", "ABOUT_TERM")
    kg.add_relation("Document:d1", "Term:t2", "ABOUT_TERM")
    return kg


def test_redaction_table_by_term():
    rows = redaction_table(redacted_graph(), grouping="term")
    by_label = {r["label"]: r for r in rows}
    assert by_label["NATO"]["documents"] == 2
    assert by_label["NATO"]["redactions"] == 3
    assert by_label["MAP"]["documents"] == 1
    assert by_label["MAP"]["redactions"] == 2
    reds = [r["redactions"] for r in rows]
    assert reds == sorted(reds, reverse=True)


def test_redaction_table_rtype_filter():
    rows = redaction_table(redacted_graph(), grouping="term", rtype_filter="name")
    by_label = {r["label"]: r for r in rows}
    assert by_label["NATO"]["redactions"] == 1
    assert by_label["NATO"]["documents"] == 1


def test_redaction_table_topics_missing():
    with pytest.raises(MissingTopics):
        redaction_table(redacted_graph(), grouping="topic")
    with pytest.raises(ValueError):
        redaction_table(redacted_graph(), grouping="nonsense")
