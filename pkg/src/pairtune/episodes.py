"""Balanced same-class / different-class pair generation.

Pairs are sampled class-first: a same-pair draws a class uniformly among
those with at least two examples, then two distinct members; a
different-pair draws an unordered class pair uniformly, then one member
from each. Different-class pairs never cross datasets. Pairs may repeat
across the sequence; the emitted order is a seeded shuffle over all
datasets' pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, LabeledExample


class EpisodeError(Exception):
    """Invalid pair-generation request for the given corpora."""


@dataclass(frozen=True)
class EpisodePair:
    """Two examples from one dataset plus the binary same-class target."""

    a: LabeledExample
    b: LabeledExample
    target: int
    source_dataset: str


@dataclass
class EpisodeSpec:
    """Per-dataset pair quotas, the same-pair share, and the RNG seed."""

    quotas: dict[str, int] = field(default_factory=dict)
    same_fraction: float = 0.5
    seed: int = 0


def same_pair_count(quota: int, same_fraction: float) -> int:
    """Number of same-class pairs in a quota (round half up)."""
    return int(quota * same_fraction + 0.5)


def generate_episodes(corpora, spec: EpisodeSpec) -> list[EpisodePair]:
    """Generate exactly spec.quotas[d] pairs for each quota'd dataset d.

    Deterministic given the seed; the same seed yields the identical pair
    sequence.
    """
    if isinstance(corpora, Corpus):
        corpora = [corpora]
    if not 0.0 < spec.same_fraction < 1.0:
        raise EpisodeError("same_fraction must be strictly between 0 and 1")
    by_id: dict[str, Corpus] = {}
    for corpus in corpora:
        if corpus.dataset_id in by_id:
            raise EpisodeError(f"duplicate dataset id '{corpus.dataset_id}'")
        by_id[corpus.dataset_id] = corpus
    unknown = set(spec.quotas) - set(by_id)
    if unknown:
        raise EpisodeError(f"quota names unknown dataset(s): {sorted(unknown)}")
    for ds, quota in spec.quotas.items():
        if quota < 1:
            raise EpisodeError(f"quota for '{ds}' must be >= 1, got {quota}")

    rng = np.random.default_rng(spec.seed)
    pairs: list[EpisodePair] = []
    for corpus in corpora:
        if corpus.dataset_id in spec.quotas:
            pairs.extend(_dataset_pairs(corpus, spec.quotas[corpus.dataset_id], spec, rng))
    order = rng.permutation(len(pairs))
    return [pairs[int(i)] for i in order]


def _dataset_pairs(corpus: Corpus, quota: int, spec: EpisodeSpec, rng) -> list[EpisodePair]:
    ds = corpus.dataset_id
    labels = corpus.classes()
    if len(labels) < 2:
        raise EpisodeError(f"dataset '{ds}' has fewer than 2 classes")
    buckets = {lab: corpus.class_index[lab] for lab in labels}
    eligible = [lab for lab in labels if len(buckets[lab]) >= 2]

    n_same = same_pair_count(quota, spec.same_fraction)
    n_diff = quota - n_same
    if n_same > 0 and not eligible:
        raise EpisodeError(
            f"dataset '{ds}' has no class with >= 2 examples; same-pairs impossible"
        )

    examples = corpus.examples
    out: list[EpisodePair] = []
    for _ in range(n_same):
        bucket = buckets[eligible[rng.integers(len(eligible))]]
        i = int(rng.integers(len(bucket)))
        j = int(rng.integers(len(bucket) - 1))
        if j >= i:  # two distinct members, uniform without replacement
            j += 1
        out.append(EpisodePair(examples[bucket[i]], examples[bucket[j]], 1, ds))
    for _ in range(n_diff):
        ca = int(rng.integers(len(labels)))
        cb = int(rng.integers(len(labels) - 1))
        if cb >= ca:
            cb += 1
        bucket_a, bucket_b = buckets[labels[ca]], buckets[labels[cb]]
        a = examples[bucket_a[rng.integers(len(bucket_a))]]
        b = examples[bucket_b[rng.integers(len(bucket_b))]]
        out.append(EpisodePair(a, b, 0, ds))
    return out


def write_pairs(pairs, path) -> None:
    """Dump pairs as "<dataset>\\t<id_a>\\t<id_b>\\t<target>" lines."""
    with open(path, "w", encoding="utf-8") as f:
        for pair in pairs:
            f.write(f"{pair.source_dataset}\t{pair.a.id}\t{pair.b.id}\t{pair.target}\n")


def load_pairs(path, corpora) -> list[EpisodePair]:
    """Replay a pair dump against the corpora it was generated from."""
    if isinstance(corpora, Corpus):
        corpora = [corpora]
    lookup = {
        (c.dataset_id, ex.id): ex for c in corpora for ex in c.examples
    }
    p = Path(path)
    pairs: list[EpisodePair] = []
    with open(p, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 4:
                raise EpisodeError(f"{p}:{lineno}: expected 4 tab-separated fields")
            ds, id_a, id_b, target = fields
            if target not in ("0", "1"):
                raise EpisodeError(f"{p}:{lineno}: target must be 0 or 1")
            try:
                a, b = lookup[(ds, id_a)], lookup[(ds, id_b)]
            except KeyError as err:
                raise EpisodeError(f"{p}:{lineno}: unknown example {err.args[0]}") from None
            pairs.append(EpisodePair(a, b, int(target), ds))
    return pairs
