"""Graph analytics: timelines, co-occurrence projections, embeddings,
random walks, PageRank, and redaction tables."""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionTooSmall, EmptyProjection, MissingTopics,
                     UnknownEntity)
from .kgraph import KGraph


@dataclass
class WeightedGraph:
    """Undirected weighted graph with contiguous integer node ids."""

    keys: list[str]  # id -> node key
    adjacency: list[list[tuple[int, float]]]
    undirected: bool = True

    @classmethod
    def from_edge_weights(cls, weights: dict[tuple[str, str], float]) -> "WeightedGraph":
        keys = sorted({k for pair in weights for k in pair})
        index = {k: i for i, k in enumerate(keys)}
        adjacency: list[list[tuple[int, float]]] = [[] for _ in keys]
        for (a, b), w in sorted(weights.items()):
            if a == b or w <= 0:
                continue
            ia, ib = index[a], index[b]
            adjacency[ia].append((ib, float(w)))
            adjacency[ib].append((ia, float(w)))
        for neighbors in adjacency:
            neighbors.sort()
        return cls(keys=keys, adjacency=adjacency)

    @property
    def n(self) -> int:
        return len(self.keys)

    def index_of(self, key: str) -> int:
        try:
            return self.keys.index(key)
        except ValueError:
            raise UnknownEntity(key) from None

    def degree_weight(self, i: int) -> float:
        return sum(w for _, w in self.adjacency[i])


@dataclass
class EmbeddingSet:
    window: tuple[int, int]
    dimension: int
    vectors: dict[str, np.ndarray]
    seed: int
    method: str = "sparse-random-projection"


@dataclass
class ScoreTable:
    rows: list[tuple[str, str, float]]  # (key, label, score)
    damping: float
    iterations: int
    tolerance: float
    converged: bool = True


def timeline_by_continent(kg: KGraph, bin_width: int = 2,
                          exclude_country: str = "United States") -> list[dict]:
    """Per-(bin, continent) normalized document share, excluding one origin
    country; shares inside a bin sum to 1."""
    country_of_city: dict[str, str] = {}
    for rel in kg.relations_of_type("LOCATED_IN"):
        country_of_city[rel.src] = rel.dst
    continent_of_country = {
        key: attrs.get("continent")
        for key, (label, attrs) in kg.nodes.items() if label == "Country"
    }
    city_of_doc: dict[str, str] = {}
    for rel in kg.relations_of_type("SENT_FROM"):
        city_of_doc[rel.src] = rel.dst

    counts: dict[tuple[int, str], int] = Counter()
    for doc_key, city_key in city_of_doc.items():
        attrs = kg.nodes[doc_key][1]
        year = attrs.get("year")
        if year is None:
            continue
        country_key = country_of_city.get(city_key)
        if country_key is None:
            continue
        if country_key == f"Country:{exclude_country}":
            continue
        continent = continent_of_country.get(country_key)
        if not continent:
            continue
        bin_start = (int(year) // bin_width) * bin_width
        counts[(bin_start, continent)] += 1

    totals: dict[int, int] = Counter()
    for (bin_start, _), c in counts.items():
        totals[bin_start] += c

    rows = []
    for (bin_start, continent), c in sorted(counts.items()):
        rows.append({
            "bin": bin_start,
            "continent": continent,
            "count": c,
            "share": c / totals[bin_start],
        })
    return rows


_OCCURRENCE_RELATION = {"NamedEntity": "HAS_ENTITY", "Person": "MENTIONED"}


def _doc_year(kg: KGraph, doc_key: str):
    return kg.nodes[doc_key][1].get("year")


def project_cooccurrence(kg: KGraph, label: str = "NamedEntity",
                         min_occurrence: int = 50,
                         window: tuple[int, int] | None = None) -> WeightedGraph:
    """Bipartite Document-entity subgraph -> entity co-occurrence graph.

    Each document contributes +1 to every unordered pair of its surviving
    entities; entities seen in fewer than `min_occurrence` in-window
    documents are dropped.
    """
    if label == "Role":
        return role_projection(kg)
    if label not in _OCCURRENCE_RELATION:
        raise ValueError(f"unsupported projection label {label}")
    rtype = _OCCURRENCE_RELATION[label]

    doc_entities: dict[str, set[str]] = defaultdict(set)
    for rel in kg.relations_of_type(rtype):
        if kg.nodes[rel.dst][0] != label:
            continue
        year = _doc_year(kg, rel.src)
        if window is not None:
            if year is None or not (window[0] <= int(year) <= window[1]):
                continue
        doc_entities[rel.src].add(rel.dst)
    if not doc_entities:
        raise EmptyProjection(f"no documents with {rtype} edges in window {window}")

    occurrence: Counter = Counter()
    for ents in doc_entities.values():
        occurrence.update(ents)
    surviving = {e for e, c in occurrence.items() if c >= min_occurrence}

    weights: dict[tuple[str, str], float] = Counter()
    for ents in doc_entities.values():
        kept = sorted(e for e in ents if e in surviving)
        for a, b in itertools.combinations(kept, 2):
            weights[(a, b)] += 1
    return WeightedGraph.from_edge_weights(weights)


def embed_graph(graph: WeightedGraph, dimension: int = 128,
                iteration_weights: tuple[float, ...] = (0.0, 1.0, 1.0),
                seed: int = 42, sparsity: int = 3,
                window: tuple[int, int] = (0, 0)) -> EmbeddingSet:
    """Iterative sparse random projection embedding.

    Nodes start from seeded sparse vectors with entries in {-s, 0, +s};
    each iteration replaces a node's vector with the degree-normalized
    weighted neighbor average; the output is the iteration-weighted sum,
    L2-normalized per node. Initial vectors are assigned by rank in sorted
    node-key order, so order-preserving relabelings give identical
    similarity structure.
    """
    if dimension < 2:
        raise DimensionTooSmall(str(dimension))
    if graph.n == 0:
        raise ValueError("graph is empty")

    order = np.argsort(graph.keys)
    rank = np.empty(graph.n, dtype=int)
    rank[order] = np.arange(graph.n)

    init = np.zeros((graph.n, dimension))
    for i in range(graph.n):
        rng = np.random.default_rng((seed, int(rank[i])))
        while True:
            draws = rng.random(dimension)
            vec = np.where(draws < 1 / (2 * sparsity), float(sparsity),
                           np.where(draws < 1 / sparsity, -float(sparsity), 0.0))
            if np.any(vec):
                break
        init[i] = vec

    final = np.zeros_like(init)
    current = init
    for weight in iteration_weights:
        nxt = np.zeros_like(current)
        for i in range(graph.n):
            total = graph.degree_weight(i)
            if total == 0:
                nxt[i] = current[i]  # isolated node keeps its vector
                continue
            for j, w in graph.adjacency[i]:
                nxt[i] += (w / total) * current[j]
        current = nxt
        if weight:
            final += weight * current

    norms = np.linalg.norm(final, axis=1)
    for i in range(graph.n):
        if norms[i] < 1e-12:
            final[i] = init[i]
            norms[i] = np.linalg.norm(init[i])
    final /= norms[:, None]

    return EmbeddingSet(
        window=window, dimension=dimension,
        vectors={graph.keys[i]: final[i] for i in range(graph.n)},
        seed=seed,
    )


def generate_walks(graph: WeightedGraph, p: float = 1.0, q: float = 1.0,
                   walk_length: int = 80, walks_per_node: int = 10,
                   seed: int = 42) -> list[list[str]]:
    """Second-order biased random walks (the Node2Vec transition rule).

    Moving from t to v, the next step x is drawn with unnormalized weight
    w(v,x)/p when x == t, w(v,x) when x is adjacent to t, w(v,x)/q
    otherwise.
    """
    if p <= 0 or q <= 0:
        raise ValueError("p and q must be positive")
    rng = np.random.default_rng(seed)
    neighbor_sets = [set(j for j, _ in adj) for adj in graph.adjacency]
    walks: list[list[str]] = []
    for start in range(graph.n):
        for _ in range(walks_per_node):
            walk = [start]
            while len(walk) < walk_length:
                v = walk[-1]
                neighbors = graph.adjacency[v]
                if not neighbors:
                    break
                if len(walk) == 1:
                    weights = np.array([w for _, w in neighbors])
                else:
                    t = walk[-2]
                    weights = np.array([
                        w / p if x == t else (w if x in neighbor_sets[t] else w / q)
                        for x, w in neighbors
                    ])
                probs = weights / weights.sum()
                walk.append(int(rng.choice([x for x, _ in neighbors], p=probs)))
            walks.append([graph.keys[i] for i in walk])
    return walks


def top_k_similar(embeddings: EmbeddingSet, key: str, k: int = 10) -> list[tuple[str, float]]:
    """k nearest neighbors by cosine, query excluded, ties lexicographic."""
    if key not in embeddings.vectors:
        raise UnknownEntity(key)
    query = embeddings.vectors[key]
    qn = np.linalg.norm(query)
    scored = []
    for other, vec in embeddings.vectors.items():
        if other == key:
            continue
        denom = qn * np.linalg.norm(vec)
        cos = float(np.dot(query, vec) / denom) if denom > 0 else 0.0
        scored.append((other, cos))
    scored.sort(key=lambda t: (-round(t[1], 12), t[0]))
    return scored[:k]


def role_projection(kg: KGraph) -> WeightedGraph:
    """Role co-occurrence graph: for each document, each mentioned person is
    mapped to the role(s) held at the document's date; role pairs
    co-mentioned in a document accumulate weight."""
    roles_of_person: dict[str, list[tuple[str, str | None, str | None]]] = defaultdict(list)
    for rel in kg.relations_of_type("HAS_ROLE"):
        roles_of_person[rel.src].append(
            (rel.dst, rel.attributes.get("start"), rel.attributes.get("end")))

    mentioned: dict[str, list[str]] = defaultdict(list)
    for rel in kg.relations_of_type("MENTIONED"):
        mentioned[rel.src].append(rel.dst)

    weights: dict[tuple[str, str], float] = Counter()
    for doc_key, persons in mentioned.items():
        date = kg.nodes[doc_key][1].get("date")
        doc_roles: set[str] = set()
        for person in persons:
            for role, start, end in roles_of_person.get(person, ()):
                if date is not None:
                    if start and date < start:
                        continue
                    if end and date > end:
                        continue
                # undated documents and undated intervals match anything
                doc_roles.add(role)
        for a, b in itertools.combinations(sorted(doc_roles), 2):
            weights[(a, b)] += 1
    return WeightedGraph.from_edge_weights(weights)


def pagerank(graph: WeightedGraph, damping: float = 0.85,
             max_iterations: int = 200, tolerance: float = 1e-10) -> ScoreTable:
    """Weighted PageRank, scores scaled so the mean score is 1."""
    n = graph.n
    if n == 0:
        raise EmptyProjection("cannot rank an empty graph")
    out_weight = np.array([graph.degree_weight(i) for i in range(n)])
    scores = np.full(n, 1.0 / n)
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        nxt = np.zeros(n)
        dangling = scores[out_weight == 0].sum()
        for i in range(n):
            if out_weight[i] == 0:
                continue
            share = scores[i] / out_weight[i]
            for j, w in graph.adjacency[i]:
                nxt[j] += share * w
        nxt = (1 - damping) / n + damping * (nxt + dangling / n)
        if np.max(np.abs(nxt - scores)) < tolerance:
            scores = nxt
            converged = True
            break
        scores = nxt
    scores = scores / scores.mean()
    labels = {i: graph.keys[i].split(":", 1)[-1] for i in range(n)}
    rows = sorted(
        ((graph.keys[i], labels[i], float(scores[i])) for i in range(n)),
        key=lambda r: (-r[2], r[0]),
    )
    return ScoreTable(rows=rows, damping=damping, iterations=iterations,
                      tolerance=tolerance, converged=converged)


def redaction_table(kg: KGraph, grouping: str = "term",
                    rtype_filter: str | None = None) -> list[dict]:
    """(group, document count, redaction count), sorted by redactions."""
    if grouping == "term":
        rel_type, group_label = "ABOUT_TERM", "Term"
    elif grouping == "named-entity":
        rel_type, group_label = "HAS_ENTITY", "NamedEntity"
    elif grouping == "topic":
        rel_type, group_label = "HAS_TOPIC", "Topic"
        if not kg.nodes_with_label("Topic"):
            raise MissingTopics("no topic assignments imported")
    else:
        raise ValueError(f"unknown grouping {grouping}")

    groups_of_doc: dict[str, set[str]] = defaultdict(set)
    for rel in kg.relations_of_type(rel_type):
        if kg.nodes[rel.dst][0] == group_label:
            groups_of_doc[rel.src].add(rel.dst)

    doc_count: Counter = Counter()
    red_count: Counter = Counter()
    for doc_key, groups in groups_of_doc.items():
        reds = kg.nodes[doc_key][1].get("redactions") or []
        matching = [r for r in reds if rtype_filter is None or r.get("rtype") == rtype_filter]
        if not matching:
            continue
        for group in groups:
            doc_count[group] += 1
            red_count[group] += len(matching)

    rows = []
    for group in sorted(red_count, key=lambda g: (-red_count[g], g)):
        attrs = kg.nodes[group][1]
        rows.append({
            "group": group,
            "label": attrs.get("label_text") or attrs.get("text") or group,
            "documents": doc_count[group],
            "redactions": red_count[group],
        })
    return rows
