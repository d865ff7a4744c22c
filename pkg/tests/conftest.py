"""Shared test helpers: independent numeric oracles and corpus builders.

The finite-difference and brute-force helpers here deliberately avoid the
library's backward/metric code paths so they stay independent checks.
"""

from __future__ import annotations

import math

import numpy as np

from pairtune.corpus import Corpus, LabeledExample


def make_corpus(dataset_id, rows):
    """Corpus from (id, text, label) triples."""
    examples = [
        LabeledExample(id=r[0], text=r[1], class_label=r[2], dataset_id=dataset_id)
        for r in rows
    ]
    return Corpus.from_examples(dataset_id, examples)


def write_jsonl(path, rows):
    """Write (id, text, label) triples as a json-lines corpus file."""
    import json

    with open(path, "w", encoding="utf-8") as f:
        for ex_id, text, label in rows:
            f.write(json.dumps({"id": ex_id, "text": text, "label": label}) + "\n")
    return path


def well_scaled_params(params, seed):
    """Redraw parameters at O(1) activation scale.

    Finite differences at step 1e-4 need the forward pass away from the
    cosine's vanishing-norm region and the ReLU kinks; the production init
    is deliberately tiny, so gradient-check tests rescale.
    """
    rng = np.random.default_rng(seed)
    if params.E is not None:
        params.E[...] = rng.normal(size=params.E.shape)
    params.W1[...] = rng.normal(size=params.W1.shape) / np.sqrt(params.W1.shape[1])
    params.b1[...] = rng.normal(size=params.b1.shape) * 0.2
    params.W2[...] = rng.normal(size=params.W2.shape) / np.sqrt(params.W2.shape[1])
    params.b2[...] = rng.normal(size=params.b2.shape) * 0.2
    return params


def finite_difference_gradients(loss_fn, arrays: dict[str, np.ndarray], step: float = 1e-4):
    """Central finite differences of a scalar loss over every array entry.

    Perturbs the live arrays in place and restores them, so ``loss_fn``
    must recompute the loss from those arrays on every call.
    """
    grads = {}
    for name, arr in arrays.items():
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            loss_plus = loss_fn()
            flat[i] = orig - step
            loss_minus = loss_fn()
            flat[i] = orig
            gflat[i] = (loss_plus - loss_minus) / (2.0 * step)
        grads[name] = g
    return grads


def max_relative_error(analytic: dict, numeric: dict, abs_floor: float = 1e-8) -> float:
    """Largest element-wise relative error between two gradient dicts."""
    worst = 0.0
    for name, num in numeric.items():
        ana = analytic[name]
        denom = np.maximum(np.maximum(np.abs(ana), np.abs(num)), abs_floor)
        worst = max(worst, float((np.abs(ana - num) / denom).max()))
    return worst


def brute_force_delta(corpus, vector_for_id):
    """Exhaustive all-distinct-pairs distance gap, via plain Python loops.

    Returns (delta, mean_diff, mean_same) over every unordered example pair.
    """

    def cos_dist(u, v):
        dot = sum(x * y for x, y in zip(u, v))
        nu = math.sqrt(sum(x * x for x in u))
        nv = math.sqrt(sum(y * y for y in v))
        return 1.0 - dot / (max(nu, 1e-12) * max(nv, 1e-12))

    same, diff = [], []
    examples = corpus.examples
    for i in range(len(examples)):
        for j in range(i + 1, len(examples)):
            d = cos_dist(vector_for_id[examples[i].id], vector_for_id[examples[j].id])
            if examples[i].class_label == examples[j].class_label:
                same.append(d)
            else:
                diff.append(d)
    mean_same = sum(same) / len(same)
    mean_diff = sum(diff) / len(diff)
    return mean_diff - mean_same, mean_diff, mean_same
