"""Dockerfile generation by retrieval.

Specs are rendered into per-field texts and indexed; a query spec scores
every document with Okapi BM25 summed over fields (a disjunctive,
should-style query). A TF-IDF cosine ranking over whole rendered specs is
provided as the lexical stand-in for an embedding-based baseline.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyCorpus, SchemaError
from .spec_model import SPEC_FIELDS, DockerSpec, FLAG_FIELDS, spec_from_dict, spec_to_dict

INDEX_MAGIC = "dockerspec-index"
INDEX_VERSION = 1

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75


def render_spec_fields(spec: DockerSpec) -> dict[str, str]:
    """Per-field query/document text: os and pkg_manager verbatim,
    dependencies space-joined sorted, a flag renders as its own field name
    when true and as empty text when false."""
    texts = {
        "os": spec.os,
        "pkg_manager": spec.pkg_manager,
        "dependencies": " ".join(sorted(spec.dependencies)),
    }
    for name in FLAG_FIELDS:
        texts[name] = name if getattr(spec, name) else ""
    return texts


@dataclass
class IndexedDocument:
    id: int
    spec: DockerSpec
    field_texts: dict[str, str]
    dockerfile_text: str
    term_frequencies: dict[str, Counter]
    length: dict[str, int]


@dataclass
class RetrievalIndex:
    documents: list[IndexedDocument]
    postings: dict[str, dict[str, list[tuple[int, int]]]]
    doc_frequency: dict[str, dict[str, int]]
    average_length: dict[str, float]
    k1: float
    b: float

    @property
    def size(self) -> int:
        return len(self.documents)


@dataclass(frozen=True)
class ScoredHit:
    doc_id: int
    score: float
    dockerfile_text: str


def build_index(entries: list[tuple[DockerSpec, str]],
                k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> RetrievalIndex:
    """Index (spec, dockerfile) pairs; deterministic for a given entry order."""
    if not entries:
        raise EmptyCorpus("cannot index an empty corpus")
    documents = []
    postings: dict[str, dict[str, list[tuple[int, int]]]] = {f: {} for f in SPEC_FIELDS}
    for doc_id, (spec, dockerfile_text) in enumerate(entries):
        field_texts = render_spec_fields(spec)
        frequencies = {f: Counter(text.split()) for f, text in field_texts.items()}
        lengths = {f: sum(c.values()) for f, c in frequencies.items()}
        documents.append(IndexedDocument(doc_id, spec, field_texts, dockerfile_text,
                                         frequencies, lengths))
        for field_name, counts in frequencies.items():
            for term, tf in counts.items():
                postings[field_name].setdefault(term, []).append((doc_id, tf))
    doc_frequency = {
        f: {term: len(plist) for term, plist in terms.items()}
        for f, terms in postings.items()
    }
    n = len(documents)
    average_length = {
        f: sum(d.length[f] for d in documents) / n for f in SPEC_FIELDS
    }
    return RetrievalIndex(documents, postings, doc_frequency, average_length, k1, b)


def _idf(n_docs: int, df: int) -> float:
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def query_terms_for(spec: DockerSpec) -> dict[str, list[str]]:
    return {f: text.split() for f, text in render_spec_fields(spec).items()}


def bm25_score(query_terms: dict[str, list[str]],
               doc: IndexedDocument, index: RetrievalIndex) -> float:
    """Okapi BM25 summed over fields and query terms for one document."""
    n = index.size
    score = 0.0
    for field_name in SPEC_FIELDS:
        avgdl = index.average_length[field_name]
        if avgdl == 0.0:
            continue
        norm = index.k1 * (1.0 - index.b + index.b * doc.length[field_name] / avgdl)
        for term in query_terms.get(field_name, ()):
            tf = doc.term_frequencies[field_name].get(term, 0)
            if tf == 0:
                continue
            df = index.doc_frequency[field_name].get(term, 0)
            score += _idf(n, df) * tf * (index.k1 + 1.0) / (tf + norm)
    return score


def retrieve(spec: DockerSpec, k: int, index: RetrievalIndex) -> list[ScoredHit]:
    """Top-k documents by summed per-field BM25; ties broken by ascending id.

    Every field contributes independently (disjunctive query), so zero-score
    documents are still returned when k exceeds the number of scoring ones.
    """
    if index.size == 0:
        raise EmptyCorpus("retrieval over an empty index")
    query_terms = query_terms_for(spec)
    scores = [0.0] * index.size
    n = index.size
    for field_name in SPEC_FIELDS:
        avgdl = index.average_length[field_name]
        if avgdl == 0.0:
            continue
        for term in query_terms[field_name]:
            df = index.doc_frequency[field_name].get(term, 0)
            if df == 0:
                continue
            idf = _idf(n, df)
            for doc_id, tf in index.postings[field_name][term]:
                doc_length = index.documents[doc_id].length[field_name]
                norm = index.k1 * (1.0 - index.b + index.b * doc_length / avgdl)
                scores[doc_id] += idf * tf * (index.k1 + 1.0) / (tf + norm)
    ranked = sorted(range(index.size), key=lambda i: (-scores[i], i))[:max(k, 0)]
    return [ScoredHit(i, scores[i], index.documents[i].dockerfile_text) for i in ranked]


def _tfidf_vector(counts: Counter, idf: dict[str, float], n_docs: int) -> dict[str, float]:
    default = math.log((1.0 + n_docs) / 1.0) + 1.0
    return {term: tf * idf.get(term, default) for term, tf in counts.items()}


def _cosine(a: dict[str, float], b: dict[str, float]) -> float:
    dot = sum(weight * b[term] for term, weight in a.items() if term in b)
    norm_a = math.sqrt(sum(w * w for w in a.values()))
    norm_b = math.sqrt(sum(w * w for w in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def rendered_spec_text(spec: DockerSpec) -> str:
    return " ".join(t for t in render_spec_fields(spec).values() if t)


def vector_retrieve(spec: DockerSpec, k: int,
                    entries: list[tuple[DockerSpec, str]]) -> list[ScoredHit]:
    """Top-k by TF-IDF cosine between the rendered query spec and each stored
    spec (the lexical stand-in for the sentence-embedding baseline).

    Uses smoothed idf, ln((1+N)/(1+df)) + 1, so identical rendered specs
    always score 1.0.
    """
    if not entries:
        raise EmptyCorpus("retrieval over an empty corpus")
    n = len(entries)
    doc_counts = [Counter(rendered_spec_text(s).split()) for s, _ in entries]
    df: Counter = Counter()
    for counts in doc_counts:
        df.update(counts.keys())
    idf = {term: math.log((1.0 + n) / (1.0 + d)) + 1.0 for term, d in df.items()}
    query_vector = _tfidf_vector(Counter(rendered_spec_text(spec).split()), idf, n)
    similarities = [
        _cosine(query_vector, _tfidf_vector(counts, idf, n)) for counts in doc_counts
    ]
    ranked = sorted(range(n), key=lambda i: (-similarities[i], i))[:max(k, 0)]
    return [ScoredHit(i, similarities[i], entries[i][1]) for i in ranked]


def save_index(index: RetrievalIndex, path: Path) -> None:
    """Write a self-describing index file (documents plus BM25 parameters;
    statistics are rebuilt on load, which is deterministic)."""
    payload = {
        "magic": INDEX_MAGIC,
        "version": INDEX_VERSION,
        "k1": index.k1,
        "b": index.b,
        "entries": [
            {"spec": spec_to_dict(doc.spec), "dockerfile": doc.dockerfile_text}
            for doc in index.documents
        ],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_index(path: Path) -> tuple[RetrievalIndex, list[tuple[DockerSpec, str]]]:
    """Read an index file; raises SchemaError on wrong magic or version."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not an index file: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("magic") != INDEX_MAGIC:
        raise SchemaError("not an index file (bad magic header)")
    if payload.get("version") != INDEX_VERSION:
        raise SchemaError(f"unsupported index version {payload.get('version')!r}")
    entries = [
        (spec_from_dict(item["spec"]), item["dockerfile"])
        for item in payload["entries"]
    ]
    return build_index(entries, payload["k1"], payload["b"]), entries
