"""Paragraph-vector comment embeddings and the hierarchical path features.

Implements the distributed-bag-of-words paragraph-vector variant with
negative sampling: one trainable vector per training document predicts the
document's tokens against noise samples drawn from the unigram^0.75
distribution. Unseen texts are embedded by seeded inference with frozen
word output weights. Path embeddings average the comment embeddings along
one random-walk path; per-video linguistic features average the encoded
path embeddings.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autoencoder import AutoencoderModel, encode
from .errors import DataError, InternalError
from .text import tokenize
from .util import derive_seed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingConfig:
    epochs: int = 20
    negatives: int = 5
    min_count: int = 2
    lr_start: float = 0.025
    lr_end: float = 1e-4
    seed: int = 0
    # inference mirrors one training-epoch update per step with the same
    # learning-rate decay, so inferred vectors match stored-vector statistics
    inference_steps: int | None = None  # None: use `epochs`
    inference_lr: float | None = None   # None: use `lr_start`


@dataclass
class EmbeddingModel:
    dim: int
    vocabulary: dict[str, int]
    counts: np.ndarray          # token counts aligned with vocabulary indices
    word_out: np.ndarray        # (vocab, dim) output weights
    doc_matrix: np.ndarray      # (n_docs, dim) trained document vectors
    doc_index: dict[str, int]   # raw training text -> doc_matrix row
    config: EmbeddingConfig

    def __post_init__(self):
        self._noise_cum = _noise_cumulative(self.counts)
        self._infer_cache: dict[str, np.ndarray] = {}


def _preprocess(text: str) -> list[str]:
    return tokenize(text, drop_urls=True)


def _noise_cumulative(counts: np.ndarray) -> np.ndarray:
    weights = np.asarray(counts, dtype=np.float64) ** 0.75
    total = weights.sum()
    if total <= 0:
        raise InternalError("empty noise distribution")
    return np.cumsum(weights / total)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -30.0, 30.0)))


def _doc_step(vec, token_idx, word_out, noise_cum, negatives, lr, rng,
              update_words: bool) -> None:
    """One negative-sampling update of a document vector (in place)."""
    n = token_idx.size
    neg = np.searchsorted(noise_cum, rng.random(n * negatives))
    targets = np.concatenate([token_idx, neg])
    labels = np.concatenate([np.ones(n), np.zeros(n * negatives)])
    rows = word_out[targets]
    gain = (labels - _sigmoid(rows @ vec)) * lr
    grad_vec = gain @ rows
    if update_words:
        np.add.at(word_out, targets, gain[:, None] * vec)
    vec += grad_vec


def train_embedding(corpus, dim: int = 256,
                    config: EmbeddingConfig | None = None) -> EmbeddingModel:
    """Train document vectors over `corpus` (list of texts); seeded and pure."""
    config = config or EmbeddingConfig()
    if dim < 2:
        raise DataError(f"embedding dim must be >= 2, got {dim}")
    texts = list(corpus)
    if not texts:
        raise DataError("embedding corpus is empty")

    docs_tokens = [_preprocess(t) for t in texts]
    counts: dict[str, int] = {}
    for tokens in docs_tokens:
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
    vocab_tokens = sorted((t for t, c in counts.items() if c >= config.min_count),
                          key=lambda t: (-counts[t], t))
    if not vocab_tokens:
        raise DataError("vocabulary is empty after min-count filtering")
    vocabulary = {tok: i for i, tok in enumerate(vocab_tokens)}
    count_arr = np.array([counts[t] for t in vocab_tokens], dtype=np.int64)

    doc_token_idx = [
        np.array([vocabulary[t] for t in tokens if t in vocabulary], dtype=np.int64)
        for tokens in docs_tokens
    ]

    rng = np.random.default_rng(config.seed)
    n_docs = len(texts)
    doc_matrix = rng.uniform(-0.5 / dim, 0.5 / dim, size=(n_docs, dim))
    word_out = np.zeros((len(vocabulary), dim))
    noise_cum = _noise_cumulative(count_arr)

    total_steps = config.epochs * n_docs
    step = 0
    for _ in range(config.epochs):
        for d in range(n_docs):
            idx = doc_token_idx[d]
            step += 1
            if idx.size == 0:
                continue
            lr = config.lr_start + (config.lr_end - config.lr_start) * (step / total_steps)
            _doc_step(doc_matrix[d], idx, word_out, noise_cum,
                      config.negatives, lr, rng, update_words=True)

    # refinement pass: re-optimize each document vector against the frozen
    # word weights with the same operator inference uses, so stored vectors
    # and inferred vectors share statistics
    refine_steps = max(1, config.inference_steps
                       if config.inference_steps is not None else config.epochs)
    refine_lr = config.inference_lr if config.inference_lr is not None else config.lr_start
    for d in range(n_docs):
        idx = doc_token_idx[d]
        if idx.size == 0:
            continue
        rng_d = np.random.default_rng(derive_seed(config.seed, "refine", d))
        for s in range(refine_steps):
            lr = refine_lr + (config.lr_end - refine_lr) * (s / refine_steps)
            _doc_step(doc_matrix[d], idx, word_out, noise_cum,
                      config.negatives, lr, rng_d, update_words=False)

    doc_index: dict[str, int] = {}
    for d, text in enumerate(texts):
        doc_index.setdefault(text, d)
    log.debug("trained embedding: %d docs, vocab %d, dim %d", n_docs, len(vocabulary), dim)
    return EmbeddingModel(
        dim=dim,
        vocabulary=vocabulary,
        counts=count_arr,
        word_out=word_out,
        doc_matrix=doc_matrix,
        doc_index=doc_index,
        config=config,
    )


def embed_comment(model: EmbeddingModel, text: str) -> np.ndarray:
    """Stored vector for training texts; seeded inference otherwise.

    Texts with no in-vocabulary token map to the zero vector.
    """
    token_idx = np.array([model.vocabulary[t] for t in _preprocess(text)
                          if t in model.vocabulary], dtype=np.int64)
    if token_idx.size == 0:
        return np.zeros(model.dim)
    row = model.doc_index.get(text)
    if row is not None:
        return model.doc_matrix[row].copy()

    cached = model._infer_cache.get(text)
    if cached is not None:
        return cached.copy()
    cfg = model.config
    rng = np.random.default_rng(derive_seed(cfg.seed, "infer", text))
    vec = rng.uniform(-0.5 / model.dim, 0.5 / model.dim, size=model.dim)
    steps = max(1, cfg.inference_steps if cfg.inference_steps is not None else cfg.epochs)
    lr_start = cfg.inference_lr if cfg.inference_lr is not None else cfg.lr_start
    for step in range(steps):
        lr = lr_start + (cfg.lr_end - lr_start) * (step / steps)
        _doc_step(vec, token_idx, model.word_out, model._noise_cum,
                  cfg.negatives, lr, rng, update_words=False)
    model._infer_cache[text] = vec
    return vec.copy()


def path_embedding(model: EmbeddingModel, path, texts) -> np.ndarray:
    """Mean of the comment embeddings along one walk path; empty -> zeros."""
    if not path:
        return np.zeros(model.dim)
    acc = np.zeros(model.dim)
    for node in path:
        if node not in texts:
            raise InternalError(f"path references unknown node {node!r}")
        acc += embed_comment(model, texts[node])
    return acc / len(path)


def linguistic_features(paths, texts, model: EmbeddingModel,
                        path_encoder: AutoencoderModel) -> np.ndarray:
    """Encode every path embedding and average: the per-video linguistic vector."""
    if path_encoder.input_dim != model.dim:
        raise DataError(
            f"path encoder input dim {path_encoder.input_dim} != embedding dim {model.dim}")
    stacked = np.stack([path_embedding(model, p, texts) for p in paths])
    encoded = encode(path_encoder, stacked)
    return encoded.mean(axis=0)


# --------------------------------------------------------------------------
# Model files: JSON metadata plus two .npy arrays under one prefix.

def save_embedding(model: EmbeddingModel, directory, prefix: str = "embedding") -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "format": "ovcp-doc-embedding",
        "version": 1,
        "variant": "pv-dbow-negative-sampling",
        "dim": model.dim,
        "config": {
            "epochs": model.config.epochs,
            "negatives": model.config.negatives,
            "min_count": model.config.min_count,
            "lr_start": model.config.lr_start,
            "lr_end": model.config.lr_end,
            "seed": model.config.seed,
            "inference_steps": model.config.inference_steps,
            "inference_lr": model.config.inference_lr,
        },
        "vocabulary": sorted(model.vocabulary, key=model.vocabulary.get),
        "counts": model.counts.tolist(),
        "doc_index": model.doc_index,
    }
    (directory / f"{prefix}.json").write_text(
        json.dumps(meta, sort_keys=True, ensure_ascii=False), encoding="utf-8")
    np.save(directory / f"{prefix}.words.npy", model.word_out)
    np.save(directory / f"{prefix}.docs.npy", model.doc_matrix)


def load_embedding(directory, prefix: str = "embedding") -> EmbeddingModel:
    directory = Path(directory)
    meta_path = directory / f"{prefix}.json"
    if not meta_path.is_file():
        raise DataError(f"embedding model file not found: {meta_path}")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"corrupt embedding model file {meta_path}: {exc}") from None
    if meta.get("format") != "ovcp-doc-embedding":
        raise DataError(f"{meta_path} is not an embedding model file")
    word_out = np.load(directory / f"{prefix}.words.npy")
    doc_matrix = np.load(directory / f"{prefix}.docs.npy")
    vocabulary = {tok: i for i, tok in enumerate(meta["vocabulary"])}
    return EmbeddingModel(
        dim=meta["dim"],
        vocabulary=vocabulary,
        counts=np.array(meta["counts"], dtype=np.int64),
        word_out=word_out,
        doc_matrix=doc_matrix,
        doc_index={k: int(v) for k, v in meta["doc_index"].items()},
        config=EmbeddingConfig(**meta["config"]),
    )
