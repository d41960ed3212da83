"""Metrics and statistics for comparing generated Dockerfiles to targets.

Covers per-field adherence with dependency recall, Zhang-Shasha tree edit
distance with size normalization, BLEU-4, layer-digest matching, and the
Mann-Whitney / Benjamini-Hochberg / Cliff's delta trio used to compare
systems.
"""

from __future__ import annotations

import math
import statistics
from collections import Counter
from dataclasses import dataclass

from .dockerfile_syntax import Node, ast_size, build_ast, parse_dockerfile
from .errors import (
    DockerspecError,
    EmptyCandidate,
    EmptyInput,
    EmptyManifest,
    EmptySample,
    InferenceIncomplete,
)
from .spec_inference import (
    _all_run_statements,
    extract_installable_args,
    infer_downloads_external,
    infer_flags,
    infer_os,
    infer_pkg_manager,
    infer_spec,
    split_image_reference,
)
from .spec_model import SPEC_FIELDS, DockerSpec, WordLists


# ---------------------------------------------------------------------------
# adherence

@dataclass(frozen=True)
class AdherenceReport:
    """Per-field agreement; every non-dependency score is 0 or 1, the
    dependencies score is recall against the target set."""

    field_scores: dict[str, float]

    @property
    def dependency_recall(self) -> float:
        return self.field_scores["dependencies"]


def adherence(target: DockerSpec, obtained: DockerSpec) -> AdherenceReport:
    """Score each field 1/0 on equality; dependencies score recall
    (1.0 when the target set is empty: nothing required, nothing missed)."""
    scores: dict[str, float] = {}
    for name in SPEC_FIELDS:
        if name == "dependencies":
            if not target.dependencies:
                scores[name] = 1.0
            else:
                hit = len(target.dependencies & obtained.dependencies)
                scores[name] = hit / len(target.dependencies)
        else:
            scores[name] = 1.0 if getattr(target, name) == getattr(obtained, name) else 0.0
    return AdherenceReport(scores)


# ---------------------------------------------------------------------------
# tree edit distance (Zhang-Shasha, unit costs)

def _postorder(root: Node) -> tuple[list[str], list[int]]:
    """Post-order labels and, per node, the index of its leftmost leaf."""
    labels: list[str] = []
    leftmost: list[int] = []

    def walk(node: Node) -> int:
        first = None
        for child in node.children:
            child_leftmost = walk(child)
            if first is None:
                first = child_leftmost
        index = len(labels)
        labels.append(node.label)
        leftmost.append(first if first is not None else index)
        return leftmost[index]

    walk(root)
    return labels, leftmost


def _keyroots(leftmost: list[int]) -> list[int]:
    last_with_leftmost: dict[int, int] = {}
    for index, value in enumerate(leftmost):
        last_with_leftmost[value] = index
    return sorted(last_with_leftmost.values())


def tree_edit_distance(a: Node, b: Node) -> int:
    """Minimum number of unit-cost node insertions, deletions, and relabels
    turning ordered tree ``a`` into ``b``."""
    labels_a, left_a = _postorder(a)
    labels_b, left_b = _postorder(b)
    size_a, size_b = len(labels_a), len(labels_b)
    tree_dist = [[0] * size_b for _ in range(size_a)]

    def forest_dist(i: int, j: int) -> None:
        i_offset = left_a[i] - 1
        j_offset = left_b[j] - 1
        m = i - left_a[i] + 2
        n = j - left_b[j] + 2
        fd = [[0] * n for _ in range(m)]
        for x in range(1, m):
            fd[x][0] = fd[x - 1][0] + 1
        for y in range(1, n):
            fd[0][y] = fd[0][y - 1] + 1
        for x in range(1, m):
            for y in range(1, n):
                if left_a[x + i_offset] == left_a[i] and left_b[y + j_offset] == left_b[j]:
                    relabel = 0 if labels_a[x + i_offset] == labels_b[y + j_offset] else 1
                    fd[x][y] = min(fd[x - 1][y] + 1,
                                   fd[x][y - 1] + 1,
                                   fd[x - 1][y - 1] + relabel)
                    tree_dist[x + i_offset][y + j_offset] = fd[x][y]
                else:
                    p = left_a[x + i_offset] - 1 - i_offset
                    q = left_b[y + j_offset] - 1 - j_offset
                    fd[x][y] = min(fd[x - 1][y] + 1,
                                   fd[x][y - 1] + 1,
                                   fd[p][q] + tree_dist[x + i_offset][y + j_offset])

    for i in _keyroots(left_a):
        for j in _keyroots(left_b):
            forest_dist(i, j)
    return tree_dist[size_a - 1][size_b - 1]


@dataclass(frozen=True)
class DistanceReport:
    raw_distance: int
    normalized: float
    size_a: int
    size_b: int


def normalized_distance(a: Node, b: Node) -> DistanceReport:
    """Edit distance divided by the sum of the two tree sizes."""
    raw = tree_edit_distance(a, b)
    size_a, size_b = ast_size(a), ast_size(b)
    return DistanceReport(raw, raw / (size_a + size_b), size_a, size_b)


# ---------------------------------------------------------------------------
# BLEU-4

def _ngram_counts(tokens: list[str], order: int) -> Counter:
    return Counter(tuple(tokens[i:i + order]) for i in range(len(tokens) - order + 1))


def bleu4(candidate: list[str], reference: list[str]) -> float:
    """Geometric mean of modified 1..4-gram precisions times the brevity
    penalty. A zero n-gram precision is smoothed to 1/(2 * candidate length).
    """
    if not candidate:
        raise EmptyCandidate("BLEU candidate is empty")
    c, r = len(candidate), len(reference)
    log_precision_sum = 0.0
    for order in range(1, 5):
        candidate_ngrams = _ngram_counts(candidate, order)
        reference_ngrams = _ngram_counts(reference, order)
        matched = sum(min(count, reference_ngrams[gram])
                      for gram, count in candidate_ngrams.items())
        total = max(c - order + 1, 0)
        precision = matched / total if total else 0.0
        if precision == 0.0:
            precision = 1.0 / (2.0 * c)
        log_precision_sum += math.log(precision)
    brevity = 1.0 if c > r else math.exp(1.0 - r / c)
    return brevity * math.exp(log_precision_sum / 4.0)


# ---------------------------------------------------------------------------
# image layers

@dataclass(frozen=True)
class LayerReport:
    digest_equal: bool
    matching_layer_ratio: float

    def __post_init__(self):
        if self.digest_equal and self.matching_layer_ratio != 1.0:
            raise ValueError("equal image digests but differing layer sets")


def layer_match(original_layers: list[str], generated_layers: list[str],
                original_digest: str, generated_digest: str) -> LayerReport:
    """Share of original layer digests that also appear in the generated
    image, plus digest equality of the whole images (an unknown/empty image
    digest never compares equal)."""
    original = set(original_layers)
    if not original:
        raise EmptyManifest("original manifest has no layers")
    ratio = len(original & set(generated_layers)) / len(original)
    return LayerReport(bool(original_digest) and original_digest == generated_digest, ratio)


# ---------------------------------------------------------------------------
# statistics

def _midranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        midrank = (i + j) / 2.0 + 1.0
        for position in range(i, j + 1):
            ranks[order[position]] = midrank
        i = j + 1
    return ranks


def _exact_p_value(ranks: list[float], n_a: int) -> float:
    """Two-sided permutation p-value for the rank sum of the first sample:
    the share of equally likely group assignments whose rank sum deviates
    from the null mean at least as much as the observed one. Doubling the
    ranks keeps midranks from ties in exact integers."""
    doubled = [int(round(2 * r)) for r in ranks]
    n = len(ranks)
    # ways[c][s] = number of c-subsets of the doubled ranks summing to s
    ways: list[Counter] = [Counter() for _ in range(n_a + 1)]
    ways[0][0] = 1
    for value in doubled:
        for c in range(n_a - 1, -1, -1):
            if not ways[c]:
                continue
            for s, count in list(ways[c].items()):
                ways[c + 1][s + value] += count
    center = n_a * (n + 1)  # doubled expected rank sum
    observed_deviation = abs(sum(doubled[:n_a]) - center)
    matching = sum(count for s, count in ways[n_a].items()
                   if abs(s - center) >= observed_deviation)
    return matching / math.comb(n, n_a)


def mann_whitney_u(sample_a: list[float], sample_b: list[float]) -> tuple[float, float]:
    """Mann-Whitney U of the first sample and the two-sided p-value.

    Exact permutation distribution when the combined size is at most 16,
    tie-corrected normal approximation (no continuity correction) otherwise.
    """
    if not sample_a or not sample_b:
        raise EmptySample("both samples must be non-empty")
    n_a, n_b = len(sample_a), len(sample_b)
    n = n_a + n_b
    ranks = _midranks(list(sample_a) + list(sample_b))
    rank_sum_a = sum(ranks[:n_a])
    u_a = rank_sum_a - n_a * (n_a + 1) / 2.0

    if n <= 16:
        return u_a, _exact_p_value(ranks, n_a)

    tie_term = 0.0
    for count in Counter(ranks).values():
        tie_term += count ** 3 - count
    variance = n_a * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0.0:
        return u_a, 1.0
    z = (u_a - n_a * n_b / 2.0) / math.sqrt(variance)
    return u_a, min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))


def benjamini_hochberg(p_values: list[float]) -> list[float]:
    """Step-up adjusted p-values: monotone, at least the raw value, capped
    at 1.0, returned in the input order."""
    m = len(p_values)
    order = sorted(range(m), key=lambda i: p_values[i])
    adjusted = [0.0] * m
    running_min = 1.0
    for rank_index in range(m - 1, -1, -1):
        i = order[rank_index]
        running_min = min(running_min, p_values[i] * m / (rank_index + 1))
        adjusted[i] = running_min
    return adjusted


_DELTA_THRESHOLDS = ((0.147, "negligible"), (0.33, "small"), (0.474, "medium"))


def cliffs_delta(sample_a: list[float], sample_b: list[float]) -> tuple[float, str]:
    """Cliff's delta over all pairs plus its conventional magnitude label."""
    if not sample_a or not sample_b:
        raise EmptySample("both samples must be non-empty")
    greater = sum(1 for x in sample_a for y in sample_b if x > y)
    less = sum(1 for x in sample_a for y in sample_b if x < y)
    delta = (greater - less) / (len(sample_a) * len(sample_b))
    for threshold, label in _DELTA_THRESHOLDS:
        if abs(delta) < threshold:
            return delta, label
    return delta, "large"


# ---------------------------------------------------------------------------
# whole-run evaluation

@dataclass
class PairResult:
    index: int
    adherence: AdherenceReport | None = None
    distance: DistanceReport | None = None
    bleu: float | None = None
    error: str | None = None


@dataclass
class RunReport:
    pair_results: list[PairResult]
    adherence_means: dict[str, float]
    distance_summary: dict[str, float]
    bleu_mean: float
    evaluated_pairs: int
    failed_pairs: int


def infer_spec_for_generated(text: str, lists: WordLists,
                             target_dependencies: frozenset[str]) -> DockerSpec:
    """Spec of a generated Dockerfile.

    Generated files carry no comments, so the comment-based dependency step
    does not apply: a target dependency counts as met when it appears as an
    installable argument or a FROM word anywhere in the file.
    """
    doc = parse_dockerfile(text)
    froms = doc.instructions_of_kind("FROM")
    if not froms:
        raise InferenceIncomplete("generated file has no FROM instruction")
    ref = split_image_reference(froms[0].raw_arguments)
    mentioned = extract_installable_args(_all_run_statements(doc))
    mentioned.update(ref.name_words)
    mentioned.update(ref.tag_words)
    os_name = infer_os(ref, lists)
    return DockerSpec(
        os=os_name,
        pkg_manager=infer_pkg_manager(doc, os_name),
        dependencies=frozenset(d for d in target_dependencies if d in mentioned),
        downloads_external=infer_downloads_external(doc),
        **infer_flags(doc),
    )


def evaluate_pair(index: int, target_text: str, generated_text: str,
                  lists: WordLists) -> PairResult:
    result = PairResult(index)
    try:
        target_doc = parse_dockerfile(target_text)
        target_spec = infer_spec(target_doc, lists)
        obtained_spec = infer_spec_for_generated(
            generated_text, lists, target_spec.dependencies)
        result.adherence = adherence(target_spec, obtained_spec)
        generated_doc = parse_dockerfile(generated_text)
        result.distance = normalized_distance(
            build_ast(target_doc), build_ast(generated_doc))
        result.bleu = bleu4(generated_text.split(), target_text.split())
    except DockerspecError as exc:
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def evaluate_run(pairs: list[tuple[str, str]], lists: WordLists) -> RunReport:
    """Evaluate (target, generated) text pairs.

    Pairs where parsing or inference fails are recorded and skipped; they
    never abort the run. Aggregates are means over the surviving pairs.
    """
    if not pairs:
        raise EmptyInput("no pairs to evaluate")
    results = [
        evaluate_pair(i, target, generated, lists)
        for i, (target, generated) in enumerate(pairs)
    ]
    succeeded = [r for r in results if r.error is None]

    adherence_means = {}
    if succeeded:
        for name in SPEC_FIELDS:
            adherence_means[name] = statistics.fmean(
                r.adherence.field_scores[name] for r in succeeded)
    distances = [r.distance.normalized for r in succeeded]
    distance_summary = {}
    if distances:
        distance_summary = {
            "min": min(distances),
            "median": statistics.median(distances),
            "mean": statistics.fmean(distances),
            "max": max(distances),
            "stdev": statistics.pstdev(distances),
        }
    bleu_mean = statistics.fmean(r.bleu for r in succeeded) if succeeded else 0.0
    return RunReport(
        pair_results=results,
        adherence_means=adherence_means,
        distance_summary=distance_summary,
        bleu_mean=bleu_mean,
        evaluated_pairs=len(succeeded),
        failed_pairs=len(results) - len(succeeded),
    )


def compare_systems(distances_by_system: dict[str, list[float]]) -> list[dict]:
    """Pairwise Mann-Whitney tests over per-system distance distributions,
    with Benjamini-Hochberg adjustment across all pairings and Cliff's delta
    effect sizes."""
    names = sorted(distances_by_system)
    pairings = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    raw = []
    for a, b in pairings:
        u, p = mann_whitney_u(distances_by_system[a], distances_by_system[b])
        delta, magnitude = cliffs_delta(distances_by_system[a], distances_by_system[b])
        raw.append({"systems": [a, b], "u_statistic": u, "p_value": p,
                    "delta": delta, "magnitude": magnitude})
    adjusted = benjamini_hochberg([item["p_value"] for item in raw])
    for item, p_adjusted in zip(raw, adjusted):
        item["p_adjusted"] = p_adjusted
    return raw
