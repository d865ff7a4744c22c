"""Both finetuning regimes plus the optimizer.

The Siamese trainer runs every pair member through one shared parameter
set, scores the pair with cosine similarity, and regresses that score onto
a binary target with a squared-error loss. The naive trainer attaches a
ReLU classification head and trains with softmax cross-entropy; callers
discard the head and keep the finetuned encoder.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus
from .encoder import (
    EncoderConfig,
    EncoderGradient,
    EncoderParams,
    encode,
    encode_backward,
)


class NumericError(Exception):
    """A training or evaluation quantity stopped being finite."""


@dataclass
class SiameseConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    target_same: float = 1.0
    target_diff: float = 0.0
    epsilon_norm: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs >= 0, batch_size >= 1 and learning_rate > 0 required")
        if not (-1.0 <= self.target_diff < self.target_same <= 1.0):
            raise ValueError("targets must lie in [-1, 1] with target_same > target_diff")


@dataclass
class NaiveConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    hidden_dim: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs >= 0, batch_size >= 1 and learning_rate > 0 required")
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be >= 1")


@dataclass
class HeadParams:
    """The discardable classification head: hidden ReLU layer plus softmax logits."""

    Wh: np.ndarray
    bh: np.ndarray
    Wo: np.ndarray
    bo: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"Wh": self.Wh, "bh": self.bh, "Wo": self.Wo, "bo": self.bo}


@dataclass
class HeadGradient:
    Wh: np.ndarray
    bh: np.ndarray
    Wo: np.ndarray
    bo: np.ndarray

    @classmethod
    def zeros_like(cls, head: HeadParams) -> "HeadGradient":
        return cls(
            Wh=np.zeros_like(head.Wh),
            bh=np.zeros_like(head.bh),
            Wo=np.zeros_like(head.Wo),
            bo=np.zeros_like(head.bo),
        )

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"Wh": self.Wh, "bh": self.bh, "Wo": self.Wo, "bo": self.bo}

    def scale(self, factor: float) -> None:
        for arr in self.as_dict().values():
            arr *= factor


def init_head_params(d_out: int, hidden_dim: int, n_classes: int, seed: int = 0) -> HeadParams:
    rng = np.random.default_rng(seed)
    lim_h = 1.0 / np.sqrt(d_out)
    lim_o = 1.0 / np.sqrt(hidden_dim)
    return HeadParams(
        Wh=rng.uniform(-lim_h, lim_h, size=(hidden_dim, d_out)),
        bh=np.zeros(hidden_dim),
        Wo=rng.uniform(-lim_o, lim_o, size=(n_classes, hidden_dim)),
        bo=np.zeros(n_classes),
    )


@dataclass
class OptimizerState:
    """Adam moment accumulators mirroring the parameter shapes."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray]) -> "OptimizerState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def optimizer_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    learning_rate: float,
) -> tuple[dict[str, np.ndarray], OptimizerState]:
    """One bias-corrected Adam update; parameter arrays change in place."""
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    for name, g in grads.items():
        if name not in params:
            raise ValueError(f"gradient for unknown parameter '{name}'")
        p = params[name]
        if g.shape != p.shape:
            raise ValueError(f"shape mismatch for '{name}': {g.shape} vs {p.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


def cosine_similarity(u, v, epsilon_norm: float = 1e-12) -> float:
    """u.v / (max(|u|, eps) * max(|v|, eps)); 0 whenever either vector is 0."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    gu = max(float(np.linalg.norm(u)), epsilon_norm)
    gv = max(float(np.linalg.norm(v)), epsilon_norm)
    return float(u @ v / (gu * gv))


def cosine_similarity_backward(
    u: np.ndarray, v: np.ndarray, epsilon_norm: float, upstream: float
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the guarded cosine similarity w.r.t. both arguments.

    When a norm sits at the epsilon guard it is constant, so its branch of
    the quotient rule drops out.
    """
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    gu = max(nu, epsilon_norm)
    gv = max(nv, epsilon_norm)
    sim = float(u @ v) / (gu * gv)
    du = v / (gu * gv)
    dv = u / (gu * gv)
    if nu > epsilon_norm:
        du = du - sim * u / (gu * gu)
    if nv > epsilon_norm:
        dv = dv - sim * v / (gv * gv)
    return upstream * du, upstream * dv


def siamese_loss(sim: float, target: float) -> tuple[float, float]:
    """Squared error against the binary target: ((sim-t)^2, 2(sim-t))."""
    r = sim - target
    return r * r, 2.0 * r


@dataclass
class TrainingReport:
    """Per-epoch mean loss trajectory plus item counts and wall time."""

    epoch_losses: list[float] = field(default_factory=list)
    n_items: int = 0
    epoch_seconds: list[float] = field(default_factory=list)


def siamese_pair_backward(
    params: EncoderParams,
    config: EncoderConfig,
    xa,
    xb,
    target: float,
    epsilon_norm: float,
    grad: EncoderGradient,
) -> float:
    """Loss of one pair; its gradient (through both branches) joins ``grad``."""
    za = encode(params, config, xa)
    zb = encode(params, config, xb)
    sim = cosine_similarity(za, zb, epsilon_norm)
    loss, dsim = siamese_loss(sim, target)
    dza, dzb = cosine_similarity_backward(za, zb, epsilon_norm, dsim)
    encode_backward(params, config, xa, dza, grad)
    encode_backward(params, config, xb, dzb, grad)
    return loss


def naive_example_backward(
    params: EncoderParams,
    config: EncoderConfig,
    head: HeadParams,
    x,
    target_index: int,
    egrad: EncoderGradient,
    hgrad: HeadGradient,
) -> float:
    """Cross-entropy loss of one example; gradients join the accumulators."""
    z = encode(params, config, x)
    a = head.Wh @ z + head.bh
    mask = a > 0.0
    hidden = np.where(mask, a, 0.0)
    logits = head.Wo @ hidden + head.bo
    loss, dlogits = softmax_cross_entropy(logits, target_index)
    hgrad.Wo += np.outer(dlogits, hidden)
    hgrad.bo += dlogits
    da = (head.Wo.T @ dlogits) * mask
    hgrad.Wh += np.outer(da, z)
    hgrad.bh += da
    encode_backward(params, config, x, head.Wh.T @ da, egrad)
    return loss


def train_siamese(
    params: EncoderParams,
    config: EncoderConfig,
    pairs,
    input_fn,
    scfg: SiameseConfig,
    log=None,
) -> tuple[EncoderParams, TrainingReport]:
    """Finetune the shared encoder on same/different pairs.

    Each epoch reshuffles the fixed pair set (seeded) and walks it in
    mini-batches; gradients from both branches of every pair accumulate
    into the one parameter set, and each batch takes one Adam step on the
    batch-mean gradient. Deterministic given the seed.

    ``input_fn`` maps a LabeledExample to the encoder input (token indices
    or a fixed vector); inputs are cached per example id.
    """
    pairs = list(pairs)
    if not pairs and scfg.epochs > 0:
        raise ValueError("no training pairs")
    rng = np.random.default_rng(scfg.seed)
    pdict = params.as_dict()
    opt = OptimizerState.for_params(pdict)
    report = TrainingReport(n_items=len(pairs))
    cache: dict[tuple[str, str], object] = {}

    def prepared(ex):
        key = (ex.dataset_id, ex.id)
        got = cache.get(key)
        if got is None:
            got = cache[key] = input_fn(ex)
        return got

    order = np.arange(len(pairs))
    for epoch in range(scfg.epochs):
        started = time.perf_counter()
        rng.shuffle(order)
        total = 0.0
        for batch_no, lo in enumerate(range(0, len(order), scfg.batch_size)):
            batch = order[lo : lo + scfg.batch_size]
            grad = EncoderGradient.zeros_like(params)
            for i in batch:
                pair = pairs[int(i)]
                target = scfg.target_same if pair.target == 1 else scfg.target_diff
                loss = siamese_pair_backward(
                    params, config, prepared(pair.a), prepared(pair.b),
                    target, scfg.epsilon_norm, grad,
                )
                if not math.isfinite(loss):
                    raise NumericError(
                        f"non-finite loss at epoch {epoch} batch {batch_no}"
                    )
                total += loss
            grad.scale(1.0 / len(batch))
            optimizer_step(pdict, grad.as_dict(), opt, scfg.learning_rate)
        elapsed = time.perf_counter() - started
        mean_loss = total / len(order)
        report.epoch_losses.append(mean_loss)
        report.epoch_seconds.append(elapsed)
        if log is not None:
            log(f"epoch {epoch + 1}/{scfg.epochs} mean_loss={mean_loss:.6f} elapsed={elapsed:.2f}s")
    return params, report


def class_indexing(corpus: Corpus) -> dict[str, int]:
    """Stable class -> output index assignment (sorted labels)."""
    return {label: i for i, label in enumerate(sorted(corpus.class_index))}


def head_logits(params: EncoderParams, config: EncoderConfig, head: HeadParams, x) -> np.ndarray:
    """Class logits for one input, through encoder and head."""
    z = encode(params, config, x)
    hidden = np.maximum(head.Wh @ z + head.bh, 0.0)
    return head.Wo @ hidden + head.bo


def softmax_cross_entropy(logits: np.ndarray, target_index: int) -> tuple[float, np.ndarray]:
    """Loss and d(loss)/d(logits) for one example."""
    shifted = logits - logits.max()
    lse = math.log(float(np.sum(np.exp(shifted))))
    loss = lse - float(shifted[target_index])
    dlogits = np.exp(shifted - lse)
    dlogits[target_index] -= 1.0
    return loss, dlogits


def train_naive(
    params: EncoderParams,
    config: EncoderConfig,
    corpus: Corpus,
    input_fn,
    ncfg: NaiveConfig,
    log=None,
) -> tuple[EncoderParams, HeadParams, TrainingReport]:
    """Finetune encoder + classification head on the corpus's class labels.

    Gradients flow through the head into the encoder. Returns the finetuned
    encoder and the head (which callers typically discard).
    """
    label_index = class_indexing(corpus)
    rng = np.random.default_rng(ncfg.seed)
    head = init_head_params(config.d_out, ncfg.hidden_dim, len(label_index), seed=ncfg.seed)
    joint = params.as_dict() | head.as_dict()
    opt = OptimizerState.for_params(joint)
    report = TrainingReport(n_items=len(corpus))

    inputs = [input_fn(ex) for ex in corpus.examples]
    targets = [label_index[ex.class_label] for ex in corpus.examples]

    order = np.arange(len(corpus))
    for epoch in range(ncfg.epochs):
        started = time.perf_counter()
        rng.shuffle(order)
        total = 0.0
        for batch_no, lo in enumerate(range(0, len(order), ncfg.batch_size)):
            batch = order[lo : lo + ncfg.batch_size]
            egrad = EncoderGradient.zeros_like(params)
            hgrad = HeadGradient.zeros_like(head)
            for i in batch:
                loss = naive_example_backward(
                    params, config, head, inputs[int(i)], targets[int(i)], egrad, hgrad
                )
                if not math.isfinite(loss):
                    raise NumericError(
                        f"non-finite loss at epoch {epoch} batch {batch_no}"
                    )
                total += loss
            egrad.scale(1.0 / len(batch))
            hgrad.scale(1.0 / len(batch))
            optimizer_step(joint, egrad.as_dict() | hgrad.as_dict(), opt, ncfg.learning_rate)
        elapsed = time.perf_counter() - started
        mean_loss = total / len(order)
        report.epoch_losses.append(mean_loss)
        report.epoch_seconds.append(elapsed)
        if log is not None:
            log(f"epoch {epoch + 1}/{ncfg.epochs} mean_loss={mean_loss:.6f} elapsed={elapsed:.2f}s")
    return params, head, report
