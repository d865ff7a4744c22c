"""A differentiable sentence encoder with hand-rolled backpropagation.

Two modes behind one interface:

* ``trainable``: token embeddings, mean pooling, then a two-layer ReLU
  projection; everything trains from scratch.
* ``frozen-projection``: a fixed input vector (e.g. exported from an
  external sentence encoder) feeding the same trainable projection.

Forward pass for pooled input ``m``::

    z = W2 @ relu(W1 @ m + b1) + b2
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, CorpusError, LabeledExample, VectorTable

TRAINABLE = "trainable"
FROZEN_PROJECTION = "frozen-projection"

UNK_TOKEN = "<unk>"

# Only these characters are trimmed from token edges, so mentions, hashtags
# and URLs survive whole.
_EDGE_PUNCT = ".,;:!?\"'()[]{}<>`“”‘’…"

_MODEL_MAGIC = "PAIRTUNE-MODEL 1"
STORAGE_BINARY = "binary"
STORAGE_TEXT = "text"


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace and trim edge punctuation per token.

    Never returns an empty list: blank input yields ``[UNK_TOKEN]``.
    """
    tokens = []
    for raw in text.lower().split():
        tok = raw.strip(_EDGE_PUNCT)
        if tok:
            tokens.append(tok)
    return tokens or [UNK_TOKEN]


@dataclass
class Vocabulary:
    """Token -> contiguous index map with the unknown token at index 0."""

    token_to_index: dict[str, int]
    min_count: int = 1

    @property
    def size(self) -> int:
        return len(self.token_to_index)

    def lookup(self, tokens: list[str]) -> np.ndarray:
        """Map tokens to indices; unknown tokens map to the UNK index 0."""
        return np.array([self.token_to_index.get(t, 0) for t in tokens], dtype=np.intp)

    def token_list(self) -> list[str]:
        """Tokens in index order."""
        ordered = sorted(self.token_to_index.items(), key=lambda kv: kv[1])
        return [tok for tok, _ in ordered]


def build_vocab(corpora, min_count: int = 1) -> Vocabulary:
    """Count tokens over one or more corpora and keep those seen >= min_count.

    Indices are deterministic: descending frequency, ties broken
    lexicographically, with UNK fixed at index 0.
    """
    if min_count < 1:
        raise ValueError("min_count must be a positive integer")
    if isinstance(corpora, Corpus):
        corpora = [corpora]
    counts: Counter[str] = Counter()
    n_examples = 0
    for corpus in corpora:
        for ex in corpus.examples:
            counts.update(tokenize(ex.text))
            n_examples += 1
    if n_examples == 0:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    kept = [t for t, c in counts.items() if c >= min_count and t != UNK_TOKEN]
    kept.sort(key=lambda t: (-counts[t], t))
    token_to_index = {UNK_TOKEN: 0}
    for i, tok in enumerate(kept, start=1):
        token_to_index[tok] = i
    return Vocabulary(token_to_index=token_to_index, min_count=min_count)


def save_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"min_count={vocab.min_count}\n")
        for tok in vocab.token_list():
            f.write(tok + "\n")


def load_vocab(path) -> Vocabulary:
    p = Path(path)
    with open(p, encoding="utf-8") as f:
        header = f.readline().strip()
        if not header.startswith("min_count="):
            raise CorpusError(f"{p}:1: expected a 'min_count=<N>' header")
        min_count = int(header.split("=", 1)[1])
        tokens = [line.rstrip("\n") for line in f]
    if not tokens or tokens[0] != UNK_TOKEN:
        raise CorpusError(f"{p}: vocabulary must start with '{UNK_TOKEN}'")
    return Vocabulary(
        token_to_index={tok: i for i, tok in enumerate(tokens)},
        min_count=min_count,
    )


@dataclass
class EncoderConfig:
    """Mode and layer dimensions of the encoder."""

    mode: str = TRAINABLE
    d_tok: int = 16
    d_in: int | None = None
    h: int = 64
    d_out: int = 512

    def __post_init__(self):
        if self.mode not in (TRAINABLE, FROZEN_PROJECTION):
            raise ValueError(f"unknown encoder mode '{self.mode}'")
        if self.mode == FROZEN_PROJECTION and (self.d_in is None or self.d_in < 1):
            raise ValueError("frozen-projection mode needs d_in >= 1")
        for name in ("d_tok", "h", "d_out"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def d_in_eff(self) -> int:
        """Width of the pooled input feeding the projection."""
        return self.d_tok if self.mode == TRAINABLE else self.d_in


@dataclass
class EncoderParams:
    """All trainable parameters; the single set shared by both Siamese branches.

    ``E`` is the token embedding table (trainable mode only, None otherwise).
    """

    E: np.ndarray | None
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        """Live references to the parameter arrays, keyed by name."""
        out = {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}
        if self.E is not None:
            out["E"] = self.E
        return out

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            E=None if self.E is None else self.E.copy(),
            W1=self.W1.copy(),
            b1=self.b1.copy(),
            W2=self.W2.copy(),
            b2=self.b2.copy(),
        )


@dataclass
class EncoderGradient:
    """Additive gradient accumulator, shape-identical to its EncoderParams."""

    E: np.ndarray | None
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    @classmethod
    def zeros_like(cls, params: EncoderParams) -> "EncoderGradient":
        return cls(
            E=None if params.E is None else np.zeros_like(params.E),
            W1=np.zeros_like(params.W1),
            b1=np.zeros_like(params.b1),
            W2=np.zeros_like(params.W2),
            b2=np.zeros_like(params.b2),
        )

    def as_dict(self) -> dict[str, np.ndarray]:
        out = {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}
        if self.E is not None:
            out["E"] = self.E
        return out

    def scale(self, factor: float) -> None:
        for arr in self.as_dict().values():
            arr *= factor


def init_encoder_params(
    config: EncoderConfig, vocab_size: int | None = None, seed: int = 0
) -> EncoderParams:
    """Seeded init: weights uniform in +-1/sqrt(fan_in), E in +-0.1, biases 0."""
    rng = np.random.default_rng(seed)
    E = None
    if config.mode == TRAINABLE:
        if vocab_size is None or vocab_size < 1:
            raise ValueError("trainable mode needs vocab_size >= 1")
        E = rng.uniform(-0.1, 0.1, size=(vocab_size, config.d_tok))
    lim1 = 1.0 / np.sqrt(config.d_in_eff)
    W1 = rng.uniform(-lim1, lim1, size=(config.h, config.d_in_eff))
    lim2 = 1.0 / np.sqrt(config.h)
    W2 = rng.uniform(-lim2, lim2, size=(config.d_out, config.h))
    return EncoderParams(
        E=E, W1=W1, b1=np.zeros(config.h), W2=W2, b2=np.zeros(config.d_out)
    )


def identity_projection(dim: int) -> tuple[EncoderConfig, EncoderParams]:
    """Frozen-projection encoder that reproduces its input vector exactly.

    Stacking [I; -I] before the ReLU and [I, -I] after it gives
    relu(m) - relu(-m) == m, so the output equals the input bit for bit.
    """
    eye = np.eye(dim)
    config = EncoderConfig(mode=FROZEN_PROJECTION, d_in=dim, h=2 * dim, d_out=dim)
    params = EncoderParams(
        E=None,
        W1=np.vstack([eye, -eye]),
        b1=np.zeros(2 * dim),
        W2=np.hstack([eye, -eye]),
        b2=np.zeros(dim),
    )
    return config, params


def _pooled_input(params: EncoderParams, config: EncoderConfig, x) -> np.ndarray:
    if config.mode == TRAINABLE:
        idx = np.asarray(x, dtype=np.intp)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("trainable mode needs a non-empty token index sequence")
        return params.E[idx].mean(axis=0)
    vec = np.asarray(x, dtype=np.float64)
    if vec.shape != (config.d_in,):
        raise ValueError(f"expected an input vector of length {config.d_in}, got shape {vec.shape}")
    return vec


def encode(params: EncoderParams, config: EncoderConfig, x) -> np.ndarray:
    """Embed one input (token indices or a fixed vector) into d_out dimensions.

    Pure function of (params, x): identical inputs give bit-identical output.
    """
    m = _pooled_input(params, config, x)
    a = params.W1 @ m + params.b1
    hidden = np.maximum(a, 0.0)
    return params.W2 @ hidden + params.b2


def encode_backward(
    params: EncoderParams,
    config: EncoderConfig,
    x,
    upstream: np.ndarray,
    grad: EncoderGradient,
) -> EncoderGradient:
    """Accumulate d(upstream . z)/d(theta) into ``grad`` for input ``x``.

    The ReLU subgradient at exactly 0 is taken as 0. In trainable mode each
    token position contributes 1/n_tokens of the pooled gradient to its
    embedding row, so repeated indices accumulate.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (config.d_out,):
        raise ValueError(f"upstream gradient must have shape ({config.d_out},)")
    m = _pooled_input(params, config, x)
    a = params.W1 @ m + params.b1
    mask = a > 0.0
    hidden = np.where(mask, a, 0.0)

    grad.W2 += np.outer(upstream, hidden)
    grad.b2 += upstream
    da = (params.W2.T @ upstream) * mask
    grad.W1 += np.outer(da, m)
    grad.b1 += da
    if config.mode == TRAINABLE:
        dm = params.W1.T @ da
        idx = np.asarray(x, dtype=np.intp)
        np.add.at(grad.E, idx, dm / idx.size)
    return grad


def make_embedder(
    config: EncoderConfig,
    params: EncoderParams,
    vocab: Vocabulary | None = None,
    vectors: VectorTable | None = None,
):
    """Return a function mapping a LabeledExample to its embedding vector."""
    if config.mode == TRAINABLE:
        if vocab is None:
            raise ValueError("trainable mode needs a vocabulary")

        def embed(example: LabeledExample) -> np.ndarray:
            return encode(params, config, vocab.lookup(tokenize(example.text)))

    else:
        if vectors is None:
            raise ValueError("frozen-projection mode needs a vector table")
        if vectors.dim != config.d_in:
            raise ValueError(
                f"vector table dim {vectors.dim} does not match encoder d_in {config.d_in}"
            )

        def embed(example: LabeledExample) -> np.ndarray:
            if example.id not in vectors:
                raise CorpusError(f"no vector for example id '{example.id}'")
            return encode(params, config, vectors[example.id])

    return embed


def make_input_fn(
    config: EncoderConfig,
    vocab: Vocabulary | None = None,
    vectors: dict[str, VectorTable] | VectorTable | None = None,
):
    """Return a function mapping a LabeledExample to the encoder's raw input.

    Trainable mode yields token index arrays; frozen mode yields the stored
    vectors. ``vectors`` may be one table or a dataset_id -> table map.
    """
    if config.mode == TRAINABLE:
        if vocab is None:
            raise ValueError("trainable mode needs a vocabulary")

        def prepare(example: LabeledExample):
            return vocab.lookup(tokenize(example.text))

    else:
        if vectors is None:
            raise ValueError("frozen-projection mode needs vector table(s)")
        tables = vectors if isinstance(vectors, dict) else None

        def prepare(example: LabeledExample):
            table = tables[example.dataset_id] if tables is not None else vectors
            if example.id not in table:
                raise CorpusError(f"no vector for example id '{example.id}'")
            return table[example.id]

    return prepare


def _matrix_order(config: EncoderConfig, vocab_size: int | None):
    shapes = []
    if config.mode == TRAINABLE:
        shapes.append(("E", (vocab_size, config.d_tok)))
    shapes += [
        ("W1", (config.h, config.d_in_eff)),
        ("b1", (config.h,)),
        ("W2", (config.d_out, config.h)),
        ("b2", (config.d_out,)),
    ]
    return shapes


def save_model(
    path,
    config: EncoderConfig,
    params: EncoderParams,
    vocab: Vocabulary | None = None,
    storage: str = STORAGE_BINARY,
) -> None:
    """Write the model file: magic line, JSON header, then parameter payload.

    Binary payload is row-major little-endian float64 and round-trips
    bit-exactly; text payload stores one row per line using shortest
    round-trip decimal representations.
    """
    if storage not in (STORAGE_BINARY, STORAGE_TEXT):
        raise ValueError(f"unknown storage '{storage}'")
    if config.mode == TRAINABLE and vocab is None:
        raise ValueError("trainable models must be saved with their vocabulary")
    header = {
        "storage": storage,
        "mode": config.mode,
        "d_tok": config.d_tok,
        "d_in": config.d_in,
        "h": config.h,
        "d_out": config.d_out,
        "vocab": vocab.token_list() if vocab is not None else None,
        "min_count": vocab.min_count if vocab is not None else None,
    }
    mats = params.as_dict()
    order = _matrix_order(config, vocab.size if vocab is not None else None)
    with open(path, "wb") as f:
        f.write((_MODEL_MAGIC + "\n").encode("utf-8"))
        f.write((json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8"))
        for name, shape in order:
            arr = mats[name]
            if arr.shape != shape:
                raise ValueError(f"parameter '{name}' has shape {arr.shape}, expected {shape}")
            if storage == STORAGE_BINARY:
                f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
            else:
                for row in np.atleast_2d(arr):
                    f.write((" ".join(repr(float(v)) for v in row) + "\n").encode("utf-8"))


def load_model(path) -> tuple[EncoderConfig, EncoderParams, Vocabulary | None]:
    """Read a model file back; inverse of save_model."""
    p = Path(path)
    blob = p.read_bytes()
    first_nl = blob.find(b"\n")
    second_nl = blob.find(b"\n", first_nl + 1)
    if first_nl < 0 or second_nl < 0:
        raise CorpusError(f"{p}: truncated model file")
    if blob[:first_nl].decode("utf-8", errors="replace") != _MODEL_MAGIC:
        raise CorpusError(f"{p}: not a model file (bad magic line)")
    try:
        header = json.loads(blob[first_nl + 1 : second_nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise CorpusError(f"{p}: malformed model header") from None

    config = EncoderConfig(
        mode=header["mode"],
        d_tok=header["d_tok"] or 1,
        d_in=header["d_in"],
        h=header["h"],
        d_out=header["d_out"],
    )
    vocab = None
    if header.get("vocab") is not None:
        vocab = Vocabulary(
            token_to_index={tok: i for i, tok in enumerate(header["vocab"])},
            min_count=header.get("min_count") or 1,
        )
    if config.mode == TRAINABLE and vocab is None:
        raise CorpusError(f"{p}: trainable model is missing its vocabulary")

    order = _matrix_order(config, vocab.size if vocab is not None else None)
    payload = blob[second_nl + 1 :]
    mats: dict[str, np.ndarray] = {}
    if header["storage"] == STORAGE_BINARY:
        offset = 0
        for name, shape in order:
            count = int(np.prod(shape))
            end = offset + count * 8
            if end > len(payload):
                raise CorpusError(f"{p}: payload too short for parameter '{name}'")
            mats[name] = (
                np.frombuffer(payload[offset:end], dtype="<f8").astype(np.float64).reshape(shape)
            )
            offset = end
        if offset != len(payload):
            raise CorpusError(f"{p}: {len(payload) - offset} trailing payload bytes")
    elif header["storage"] == STORAGE_TEXT:
        lines = payload.decode("utf-8").splitlines()
        pos = 0
        for name, shape in order:
            n_rows = shape[0] if len(shape) == 2 else 1
            rows = []
            for _ in range(n_rows):
                if pos >= len(lines):
                    raise CorpusError(f"{p}: payload too short for parameter '{name}'")
                rows.append([float(v) for v in lines[pos].split()])
                pos += 1
            mats[name] = np.array(rows, dtype=np.float64).reshape(shape)
        if pos != len(lines):
            raise CorpusError(f"{p}: {len(lines) - pos} trailing payload lines")
    else:
        raise CorpusError(f"{p}: unknown storage '{header['storage']}'")

    for name, arr in mats.items():
        if not np.all(np.isfinite(arr)):
            raise CorpusError(f"{p}: non-finite values in parameter '{name}'")

    params = EncoderParams(
        E=mats.get("E"),
        W1=mats["W1"],
        b1=mats["b1"],
        W2=mats["W2"],
        b2=mats["b2"],
    )
    return config, params, vocab
