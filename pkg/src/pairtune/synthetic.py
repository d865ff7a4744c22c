"""Seeded synthetic corpora with group-structured class vocabularies.

The token universe is ``n_groups`` groups of ``group_size`` tokens with
deterministic names, so corpora generated with the same geometry share the
universe. Each class owns a combination of ``groups_per_class`` groups and
its examples draw tokens from that pool; ``domain_noise`` is the
probability that a token comes from the whole universe instead. Disjoint
class sets over one universe (via ``class_offset`` or explicit
``class_groups``) model unseen classes that still share domain-level token
structure.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from .corpus import Corpus, LabeledExample


def synthetic_corpus(
    dataset_id: str,
    n_classes: int,
    examples_per_class: int,
    *,
    n_groups: int,
    group_size: int = 20,
    groups_per_class: int = 1,
    tokens_per_example: int = 8,
    domain_noise: float = 0.0,
    class_offset: int = 0,
    class_groups: list[tuple[int, ...]] | None = None,
    token_namespace: str = "",
    seed: int = 0,
) -> Corpus:
    """Generate a deterministic labeled corpus over a group-token universe.

    Classes are numbered ``class_offset .. class_offset + n_classes - 1``
    and assigned group combinations in a fixed lexicographic order unless
    ``class_groups`` lists them explicitly (one tuple per class).
    """
    if n_classes < 2:
        raise ValueError("need at least 2 classes")
    if examples_per_class < 1 or tokens_per_example < 1:
        raise ValueError("examples_per_class and tokens_per_example must be >= 1")
    if not 0.0 <= domain_noise < 1.0:
        raise ValueError("domain_noise must lie in [0, 1)")
    if n_groups < 1 or group_size < 1 or groups_per_class < 1:
        raise ValueError("group geometry values must be >= 1")

    prefix = f"{token_namespace}:" if token_namespace else ""
    group_tokens = [
        [f"{prefix}w{g:02d}x{i:03d}" for i in range(group_size)] for g in range(n_groups)
    ]
    universe = [tok for group in group_tokens for tok in group]

    if class_groups is None:
        combos = list(combinations(range(n_groups), groups_per_class))
        if class_offset + n_classes > len(combos):
            raise ValueError(
                f"only {len(combos)} group combinations available; "
                f"need {class_offset + n_classes}"
            )
        class_groups = combos[class_offset : class_offset + n_classes]
    elif len(class_groups) != n_classes:
        raise ValueError("class_groups must list one group tuple per class")
    for groups in class_groups:
        if any(g < 0 or g >= n_groups for g in groups):
            raise ValueError(f"group index out of range in {groups}")

    rng = np.random.default_rng(seed)
    examples: list[LabeledExample] = []
    for k, groups in enumerate(class_groups):
        label = f"c{class_offset + k:03d}"
        pool = [tok for g in groups for tok in group_tokens[g]]
        for n in range(examples_per_class):
            tokens = []
            for _ in range(tokens_per_example):
                if domain_noise > 0.0 and rng.random() < domain_noise:
                    tokens.append(universe[rng.integers(len(universe))])
                else:
                    tokens.append(pool[rng.integers(len(pool))])
            examples.append(
                LabeledExample(
                    id=f"{dataset_id}-{label}-{n:04d}",
                    text=" ".join(tokens),
                    class_label=label,
                    dataset_id=dataset_id,
                )
            )
    return Corpus.from_examples(dataset_id, examples)
