"""Cluster person-name annotations into unified persons.

Four sequential merge passes over a union-find structure:

1. exactly equal canonical names
2. equal token multisets ("Richard Nixon" vs "Nixon Richard")
3. >= 2 common words plus Damerau-Levenshtein <= 5 or Jaro-Winkler >= 0.9
4. Damerau-Levenshtein <= 1

Each pass merges the connected components of the pair relation evaluated
over the names accumulated by earlier passes. Candidate blocking is an
optimization only: output is identical to brute-force all-pairs comparison.
"""

from __future__ import annotations

import hashlib
import itertools
import re
from collections import defaultdict
from dataclasses import dataclass, field, asdict

from .strdist import damerau_levenshtein, jaro_winkler
from .tei_ingest import PersonAnnotation

_PAREN = re.compile(r"\([^)]*\)")
_PUNCT = re.compile(r"[.,]")
_WS = re.compile(r"\s+")


def normalize_name(raw: str) -> tuple[str, list[str]]:
    """Lowercase, strip punctuation and parenthesized qualifiers."""
    s = _PAREN.sub(" ", raw.lower())
    s = _PUNCT.sub(" ", s)
    s = _WS.sub(" ", s).strip()
    return s, s.split() if s else []


@dataclass
class UnificationConfig:
    dl_max_step3: int = 5
    jaro_min_step3: float = 0.9
    min_common_words_step3: int = 2
    dl_max_step4: int = 1

    def __post_init__(self):
        if min(self.dl_max_step3, self.min_common_words_step3, self.dl_max_step4) < 0:
            raise ValueError("thresholds must be nonnegative")
        if not 0.0 <= self.jaro_min_step3 <= 1.0:
            raise ValueError("jaro_min_step3 must be in [0,1]")


@dataclass
class UnifiedPerson:
    uid: str
    names: list[str]
    member_ids: list[tuple[str, str]]  # (volume_id, local_id)
    descriptions: list[dict]  # {volume_id, local_id, description}
    merge_trace: list[dict] = field(default_factory=list)
    qid: str | None = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["member_ids"] = [list(m) for m in self.member_ids]
        return d

    @classmethod
    def from_json(cls, data: dict) -> "UnifiedPerson":
        data = dict(data)
        data["member_ids"] = [tuple(m) for m in data["member_ids"]]
        return cls(**data)


@dataclass
class MergeAudit:
    initial_clusters: int = 0
    cluster_counts: dict = field(default_factory=dict)  # step -> count after pass
    decisions: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def _content_uid(member_ids: list[tuple[str, str]]) -> str:
    payload = "|".join(f"{v}:{l}" for v, l in sorted(member_ids))
    return hashlib.sha1(payload.encode("utf-8")).hexdigest()[:16]


def _sig_tokens(tokens: list[str]) -> frozenset[str]:
    # words of length >= 2; single initials would cause spurious merges
    return frozenset(t for t in tokens if len(t) >= 2)


def candidate_pairs(names: list[str]) -> list[tuple[int, int]]:
    """Blocking: index pairs that could satisfy any merge criterion.

    Covers token sharing (steps 1-3) and every DL<=1 pair (step 4),
    including edits at the first character.
    """
    canon = []
    tokens = []
    for name in names:
        c, t = normalize_name(name)
        canon.append(c)
        tokens.append(t)

    pairs: set[tuple[int, int]] = set()

    by_token: dict[str, list[int]] = defaultdict(list)
    for i, toks in enumerate(tokens):
        for tok in set(toks):
            by_token[tok].append(i)
    for members in by_token.values():
        for i, j in itertools.combinations(members, 2):
            pairs.add((i, j) if i < j else (j, i))

    # length/first-char band covers DL<=1 edits at position >= 1
    by_band: dict[tuple[str, int], list[int]] = defaultdict(list)
    for i, c in enumerate(canon):
        if c:
            by_band[(c[0], len(c))].append(i)
    for (ch, ln), members in list(by_band.items()):
        for other_len in (ln, ln + 1):
            for i in members:
                for j in by_band.get((ch, other_len), []):
                    if i != j and (ln != other_len or i < j):
                        pairs.add((i, j) if i < j else (j, i))

    # first-character edits: substitution/deletion at position 0 and
    # transposition of the first two characters
    by_suffix: dict[str, list[int]] = defaultdict(list)
    for i, c in enumerate(canon):
        if c:
            by_suffix[c].append(i)
            by_suffix[c[1:]].append(i)
    for members in by_suffix.values():
        for i, j in itertools.combinations(sorted(set(members)), 2):
            pairs.add((i, j))
    by_swap: dict[str, list[int]] = defaultdict(list)
    for i, c in enumerate(canon):
        if len(c) >= 2:
            by_swap["".join(sorted(c[:2])) + c[2:]].append(i)
    for members in by_swap.values():
        for i, j in itertools.combinations(members, 2):
            pairs.add((i, j) if i < j else (j, i))

    return sorted(pairs)


def _pass_merge(step: int, uf: _UnionFind, names_of: dict[int, list[int]],
                canon: list[str], tokens: list[list[str]],
                config: UnificationConfig, audit: MergeAudit,
                brute_force: bool):
    """One merge pass: union clusters linked by a satisfying name pair."""
    roots = sorted(names_of)

    if step == 1:
        by_key: dict[str, int] = {}
        for root in roots:
            for ni in names_of[root]:
                key = canon[ni]
                if key in by_key:
                    _record_union(uf, by_key[key], root, step, canon[ni], canon[ni], audit)
                else:
                    by_key[key] = root
        return
    if step == 2:
        by_key2: dict[tuple, int] = {}
        for root in roots:
            for ni in names_of[root]:
                key = tuple(sorted(tokens[ni]))
                if key in by_key2:
                    _record_union(uf, by_key2[key], root, step, canon[ni], canon[ni], audit)
                else:
                    by_key2[key] = root
        return

    # steps 3 and 4: evaluate name pairs, then union the linked clusters
    all_names = [ni for root in roots for ni in names_of[root]]
    owner = {ni: root for root in roots for ni in names_of[root]}

    # blocking assumes >=1 shared token (step 3) and DL<=1 (step 4);
    # nonstandard thresholds fall back to all-pairs comparison
    if step == 3 and config.min_common_words_step3 < 1:
        brute_force = True
    if step == 4 and config.dl_max_step4 > 1:
        brute_force = True

    if brute_force:
        name_pairs = [(a, b) for a, b in itertools.combinations(sorted(all_names), 2)]
    else:
        ordered = sorted(all_names)
        sub = candidate_pairs([canon[ni] for ni in ordered])
        name_pairs = [(ordered[i], ordered[j]) for i, j in sub]

    for a, b in name_pairs:
        ra, rb = uf.find(owner[a]), uf.find(owner[b])
        if ra == rb:
            continue
        ca, cb = canon[a], canon[b]
        if not ca or not cb:
            continue  # names that normalize to nothing only merge via step 1
        if step == 3:
            common = _sig_tokens(tokens[a]) & _sig_tokens(tokens[b])
            if len(common) < config.min_common_words_step3:
                continue
            if not (damerau_levenshtein(ca, cb) <= config.dl_max_step3
                    or jaro_winkler(ca, cb) >= config.jaro_min_step3):
                continue
        else:
            if damerau_levenshtein(ca, cb) > config.dl_max_step4:
                continue
        _record_union(uf, ra, rb, step, ca, cb, audit)


def _record_union(uf: _UnionFind, a: int, b: int, step: int,
                  name_a: str, name_b: str, audit: MergeAudit):
    ra, rb = uf.find(a), uf.find(b)
    if ra == rb:
        return
    uf.union(ra, rb)
    audit.decisions.append({
        "step": step, "cluster_a": min(ra, rb), "cluster_b": max(ra, rb),
        "name_a": name_a, "name_b": name_b,
    })


def unify(annotations: list[PersonAnnotation],
          config: UnificationConfig | None = None,
          steps: tuple[int, ...] = (1, 2, 3, 4),
          brute_force: bool = False) -> tuple[list[UnifiedPerson], MergeAudit]:
    """Run the merge passes and emit one UnifiedPerson per final cluster.

    `brute_force` disables candidate blocking (all-pairs comparison); the
    result must be identical either way.
    """
    if not annotations:
        raise ValueError("annotations must be non-empty")
    config = config or UnificationConfig()

    canon: list[str] = []
    tokens: list[list[str]] = []
    for ann in annotations:
        c, t = normalize_name(ann.name)
        canon.append(c)
        tokens.append(t)

    n = len(annotations)
    uf = _UnionFind(n)
    audit = MergeAudit(initial_clusters=n)

    for step in steps:
        names_of: dict[int, list[int]] = defaultdict(list)
        for i in range(n):
            names_of[uf.find(i)].append(i)
        _pass_merge(step, uf, names_of, canon, tokens, config, audit, brute_force)
        audit.cluster_counts[step] = len({uf.find(i) for i in range(n)})

    clusters: dict[int, list[int]] = defaultdict(list)
    for i in range(n):
        clusters[uf.find(i)].append(i)

    decisions_by_root: dict[int, list[dict]] = defaultdict(list)
    for dec in audit.decisions:
        decisions_by_root[uf.find(dec["cluster_a"])].append(dec)

    persons = []
    for root in sorted(clusters):
        members = clusters[root]
        names: list[str] = []
        seen_names: set[str] = set()
        member_ids: list[tuple[str, str]] = []
        descriptions: list[dict] = []
        for i in members:
            ann = annotations[i]
            if ann.name not in seen_names:
                seen_names.add(ann.name)
                names.append(ann.name)
            member_ids.append((ann.volume_id, ann.local_id))
            if ann.description:
                descriptions.append({
                    "volume_id": ann.volume_id, "local_id": ann.local_id,
                    "description": ann.description,
                })
        persons.append(UnifiedPerson(
            uid=_content_uid(member_ids),
            names=names,
            member_ids=member_ids,
            descriptions=descriptions,
            merge_trace=[{"step": d["step"], "pair": [d["name_a"], d["name_b"]]}
                         for d in decisions_by_root[root]],
        ))
    return persons, audit
