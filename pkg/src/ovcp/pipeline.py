"""End-to-end feature pipeline and the trained model bundle.

Feature layout per video: network latent (sentiment latent ++ endorsement
latent), then the linguistic latent, then the 13 metadata features. All
randomness is derived from the pipeline seed; per-video walk seeds depend
only on (seed, video_id) so a video's walks do not change with its position
or split membership.
"""

import json
import logging
import shutil
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from . import classify
from .autoencoder import TrainConfig, encode, load_model, save_model, train_autoencoder
from .comment_graph import build_graph
from .corpus import Video, parse_timestamp
from .doc_embedding import (EmbeddingConfig, embed_comment, load_embedding,
                            save_embedding, train_embedding)
from .errors import DataError
from .metadata_features import default_keywords, extract_metadata, load_keywords
from .sentiment import default_lexicon, load_lexicon
from .util import canonical_json, derive_seed, sha256_file
from .walk_features import WalkConfig, feature_matrices, flatten_for_encoder, random_walk_paths

log = logging.getLogger(__name__)

FEATURE_CATEGORIES = ("network", "linguistic", "metadata")

_BUNDLE_FILES = ("ae_sentiment.json", "ae_endorsement.json", "ae_linguistic.json",
                 "classifier.json", "embedding.json", "embedding.words.npy",
                 "embedding.docs.npy", "scalers.json", "lexicon.tsv", "keywords.txt")


@dataclass
class PipelineConfig:
    seed: int = 42
    num_walks: int = 100
    max_path_len: int = 5
    network_hidden: tuple = (256, 64, 16)
    linguistic_hidden: tuple = (128, 64, 32, 16)
    embedding_dim: int = 256
    embedding_epochs: int = 20
    ae_epochs: int = 80
    ae_batch_size: int = 32
    ae_learning_rate: float = 1e-3
    ae_patience: int = 10
    linguistic_sample_cap: int = 8000
    classifier: str = "adaboost"
    classifier_hyperparams: dict = field(default_factory=dict)
    threshold: float = 0.5
    feature_set: tuple = FEATURE_CATEGORIES
    lexicon_path: str | None = None
    keywords_path: str | None = None
    as_of: str | None = None  # ISO timestamp; default derived from the data

    def network_sizes(self) -> list[int]:
        flat = self.num_walks * self.max_path_len
        hidden = list(self.network_hidden)
        return [flat, *hidden, *hidden[-2::-1], flat]

    def linguistic_sizes(self) -> list[int]:
        hidden = list(self.linguistic_hidden)
        return [self.embedding_dim, *hidden, *hidden[-2::-1], self.embedding_dim]

    def segment_slices(self) -> dict[str, slice]:
        network = 2 * self.network_hidden[-1]
        linguistic = self.linguistic_hidden[-1]
        return {
            "network": slice(0, network),
            "linguistic": slice(network, network + linguistic),
            "metadata": slice(network + linguistic, network + linguistic + 13),
        }

    @property
    def feature_dim(self) -> int:
        return 2 * self.network_hidden[-1] + self.linguistic_hidden[-1] + 13

    def feature_columns(self) -> np.ndarray:
        """Column indices selected by feature_set, in canonical segment order."""
        unknown = set(self.feature_set) - set(FEATURE_CATEGORIES)
        if unknown:
            raise DataError(f"unknown feature categories: {sorted(unknown)}")
        slices = self.segment_slices()
        columns: list[int] = []
        for category in FEATURE_CATEGORIES:
            if category in self.feature_set:
                s = slices[category]
                columns.extend(range(s.start, s.stop))
        if not columns:
            raise DataError("feature_set selects no features")
        return np.array(columns, dtype=int)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "num_walks": self.num_walks,
            "max_path_len": self.max_path_len,
            "network_hidden": list(self.network_hidden),
            "linguistic_hidden": list(self.linguistic_hidden),
            "embedding_dim": self.embedding_dim,
            "embedding_epochs": self.embedding_epochs,
            "ae_epochs": self.ae_epochs,
            "ae_batch_size": self.ae_batch_size,
            "ae_learning_rate": self.ae_learning_rate,
            "ae_patience": self.ae_patience,
            "linguistic_sample_cap": self.linguistic_sample_cap,
            "classifier": self.classifier,
            "classifier_hyperparams": self.classifier_hyperparams,
            "threshold": self.threshold,
            "feature_set": list(self.feature_set),
            "lexicon_path": self.lexicon_path,
            "keywords_path": self.keywords_path,
            "as_of": self.as_of,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        kwargs = dict(obj)
        for key in ("network_hidden", "linguistic_hidden", "feature_set"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass
class InputScaler:
    """Per-dimension z-scoring (training statistics) for autoencoder inputs."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "InputScaler":
        std = X.std(axis=0)
        std[std == 0] = 1.0
        return cls(mean=X.mean(axis=0), std=std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "InputScaler":
        return cls(mean=np.array(obj["mean"], dtype=np.float64),
                   std=np.array(obj["std"], dtype=np.float64))


@contextmanager
def _stage(timings: dict | None, name: str):
    if timings is None:
        yield
        return
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[name] = timings.get(name, 0.0) + (time.perf_counter() - start)


def _latest_timestamp(videos) -> datetime | None:
    latest = None
    for video in videos:
        candidates = [video.published_at] + [c.published_at for c in video.all_comments()]
        for ts in candidates:
            if latest is None or ts > latest:
                latest = ts
    return latest


class FeaturePipeline:
    """Fits the feature extractors on a training split and featurizes videos."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.lexicon = (load_lexicon(config.lexicon_path)
                        if config.lexicon_path else default_lexicon())
        self.keywords = (load_keywords(config.keywords_path)
                         if config.keywords_path else default_keywords())
        self.sent_encoder = None
        self.endo_encoder = None
        self.ling_encoder = None
        self.embedding = None
        self.sent_scaler: InputScaler | None = None
        self.endo_scaler: InputScaler | None = None
        self.ling_scaler: InputScaler | None = None
        self.as_of: datetime | None = (
            parse_timestamp(config.as_of) if config.as_of else None)

    @property
    def fitted(self) -> bool:
        return self.embedding is not None

    # -- per-video intermediates ------------------------------------------

    def _ae_config(self, tag: str) -> TrainConfig:
        return TrainConfig(
            epochs=self.config.ae_epochs,
            batch_size=self.config.ae_batch_size,
            learning_rate=self.config.ae_learning_rate,
            seed=derive_seed(self.config.seed, tag),
            early_stop_patience=self.config.ae_patience,
        )

    def _collect(self, videos, timings):
        with _stage(timings, "ingestion"):
            texts_per_video = [ {c.id: c.text for c in v.all_comments()} for v in videos ]
        with _stage(timings, "graph"):
            graphs = [build_graph(v, self.lexicon) for v in videos]
        with _stage(timings, "walks"):
            mats = []
            for video, graph in zip(videos, graphs):
                walk_cfg = WalkConfig(
                    num_walks=self.config.num_walks,
                    max_path_len=self.config.max_path_len,
                    seed=derive_seed(self.config.seed, "walk", video.video_id),
                )
                paths = random_walk_paths(graph, walk_cfg)
                mats.append(feature_matrices(graph, paths, self.config.max_path_len))
        return texts_per_video, mats

    def _network_inputs(self, mats):
        xs = np.stack([flatten_for_encoder(m.sentiment) for m in mats])
        xe = np.log1p(np.stack([flatten_for_encoder(m.endorsement) for m in mats]))
        return xs, xe

    def _path_embeddings(self, mats, texts_per_video):
        per_video = []
        for m, texts in zip(mats, texts_per_video):
            rows = [self._path_embedding_cached(path, texts) for path in m.paths]
            per_video.append(np.stack(rows))
        return per_video

    def _path_embedding_cached(self, path, texts):
        if not path:
            return np.zeros(self.config.embedding_dim)
        acc = np.zeros(self.config.embedding_dim)
        for node in path:
            acc += embed_comment(self.embedding, texts[node])
        return acc / len(path)

    def _metadata_rows(self, videos):
        rows = []
        for video in videos:
            own_latest = _latest_timestamp([video])
            as_of = self.as_of or own_latest
            if own_latest is not None and own_latest > as_of:
                as_of = own_latest
            rows.append(extract_metadata(video, self.keywords, as_of).to_array())
        return np.stack(rows)

    # -- fitting / transforming -------------------------------------------

    def fit_transform(self, videos, timings: dict | None = None) -> np.ndarray:
        videos = list(videos)
        if not videos:
            raise DataError("cannot fit the pipeline on zero videos")
        if self.as_of is None:
            self.as_of = _latest_timestamp(videos)

        texts_per_video, mats = self._collect(videos, timings)

        with _stage(timings, "network_encoding"):
            xs, xe = self._network_inputs(mats)
            self.sent_scaler = InputScaler.fit(xs)
            self.endo_scaler = InputScaler.fit(xe)
            xs = self.sent_scaler.transform(xs)
            xe = self.endo_scaler.transform(xe)
            self.sent_encoder = train_autoencoder(
                xs, self.config.network_sizes(), self._ae_config("ae_sent"))
            self.endo_encoder = train_autoencoder(
                xe, self.config.network_sizes(), self._ae_config("ae_endo"))
            network = np.hstack([encode(self.sent_encoder, xs),
                                 encode(self.endo_encoder, xe)])

        with _stage(timings, "linguistic"):
            corpus = [c.text for v in videos for c in v.all_comments()]
            embed_cfg = EmbeddingConfig(
                epochs=self.config.embedding_epochs,
                seed=derive_seed(self.config.seed, "embedding"),
            )
            if corpus:
                self.embedding = train_embedding(
                    corpus, dim=self.config.embedding_dim, config=embed_cfg)
            else:
                # degenerate corpus of comment-free videos: a single dummy
                # document keeps the model well-formed; everything embeds to 0
                self.embedding = train_embedding(
                    ["empty empty"], dim=self.config.embedding_dim,
                    config=EmbeddingConfig(
                        epochs=1, min_count=1,
                        seed=derive_seed(self.config.seed, "embedding")))
            per_video_paths = self._path_embeddings(mats, texts_per_video)
            pooled = np.vstack(per_video_paths)
            self.ling_scaler = InputScaler.fit(pooled)
            pooled = self.ling_scaler.transform(pooled)
            cap = self.config.linguistic_sample_cap
            if cap and pooled.shape[0] > cap:
                rng = np.random.default_rng(derive_seed(self.config.seed, "ling_sample"))
                pooled = pooled[rng.choice(pooled.shape[0], size=cap, replace=False)]
            self.ling_encoder = train_autoencoder(
                pooled, self.config.linguistic_sizes(), self._ae_config("ae_ling"))
            linguistic = np.stack([
                encode(self.ling_encoder, self.ling_scaler.transform(rows)).mean(axis=0)
                for rows in per_video_paths
            ])

        with _stage(timings, "metadata"):
            metadata = self._metadata_rows(videos)

        return np.hstack([network, linguistic, metadata])

    def transform(self, videos, timings: dict | None = None) -> np.ndarray:
        if not self.fitted:
            raise DataError("pipeline is not fitted")
        videos = list(videos)
        if not videos:
            return np.zeros((0, self.config.feature_dim))
        texts_per_video, mats = self._collect(videos, timings)
        with _stage(timings, "network_encoding"):
            xs, xe = self._network_inputs(mats)
            network = np.hstack([encode(self.sent_encoder, self.sent_scaler.transform(xs)),
                                 encode(self.endo_encoder, self.endo_scaler.transform(xe))])
        with _stage(timings, "linguistic"):
            per_video_paths = self._path_embeddings(mats, texts_per_video)
            linguistic = np.stack([
                encode(self.ling_encoder, self.ling_scaler.transform(rows)).mean(axis=0)
                for rows in per_video_paths
            ])
        with _stage(timings, "metadata"):
            metadata = self._metadata_rows(videos)
        return np.hstack([network, linguistic, metadata])


# --------------------------------------------------------------------------
# Bundles: pipeline + classifier persisted as a verifiable run directory.

@dataclass
class ModelBundle:
    pipeline: FeaturePipeline
    classifier: classify.TrainedClassifier
    threshold: float = 0.5

    def predict(self, video: Video) -> tuple[float, bool, float]:
        """Score one video; returns (score, label, elapsed milliseconds)."""
        start = time.perf_counter()
        features = self.pipeline.transform([video])[0]
        columns = self.pipeline.config.feature_columns()
        score = classify.predict_score(self.classifier, features[columns])
        label = score >= self.threshold
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        return score, label, elapsed_ms

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        pipe = self.pipeline
        save_model(pipe.sent_encoder, directory / "ae_sentiment.json")
        save_model(pipe.endo_encoder, directory / "ae_endorsement.json")
        save_model(pipe.ling_encoder, directory / "ae_linguistic.json")
        classify.save_classifier(self.classifier, directory / "classifier.json")
        save_embedding(pipe.embedding, directory, prefix="embedding")
        scalers = {
            "sentiment": pipe.sent_scaler.to_dict(),
            "endorsement": pipe.endo_scaler.to_dict(),
            "linguistic": pipe.ling_scaler.to_dict(),
        }
        (directory / "scalers.json").write_text(
            json.dumps(scalers, sort_keys=True), encoding="utf-8")
        _write_lexicon(pipe, directory / "lexicon.tsv")
        _write_keywords(pipe, directory / "keywords.txt")

        config_dict = pipe.config.to_dict()
        config_dict["as_of"] = pipe.as_of.isoformat() if pipe.as_of else None
        manifest = {
            "format": "ovcp-bundle",
            "version": 1,
            "config": config_dict,
            "threshold": self.threshold,
            "files": {name: sha256_file(directory / name) for name in _BUNDLE_FILES},
        }
        (directory / "manifest.json").write_text(canonical_json(manifest), encoding="utf-8")

    @classmethod
    def load(cls, directory) -> "ModelBundle":
        directory = Path(directory)
        manifest_path = directory / "manifest.json"
        if not manifest_path.is_file():
            raise DataError(f"model bundle manifest not found: {manifest_path}")
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"corrupt bundle manifest {manifest_path}: {exc}") from None
        if manifest.get("format") != "ovcp-bundle":
            raise DataError(f"{manifest_path} is not a model bundle manifest")
        for name, expected in manifest["files"].items():
            path = directory / name
            if not path.is_file():
                raise DataError(f"model bundle is missing {name}")
            actual = sha256_file(path)
            if actual != expected:
                raise DataError(
                    f"model bundle hash mismatch for {name}: "
                    f"manifest {expected[:12]}.., file {actual[:12]}..")

        config = PipelineConfig.from_dict(manifest["config"])
        config.lexicon_path = str(directory / "lexicon.tsv")
        config.keywords_path = str(directory / "keywords.txt")
        pipeline = FeaturePipeline(config)
        pipeline.sent_encoder = load_model(directory / "ae_sentiment.json")
        pipeline.endo_encoder = load_model(directory / "ae_endorsement.json")
        pipeline.ling_encoder = load_model(directory / "ae_linguistic.json")
        pipeline.embedding = load_embedding(directory, prefix="embedding")
        scalers = json.loads((directory / "scalers.json").read_text(encoding="utf-8"))
        pipeline.sent_scaler = InputScaler.from_dict(scalers["sentiment"])
        pipeline.endo_scaler = InputScaler.from_dict(scalers["endorsement"])
        pipeline.ling_scaler = InputScaler.from_dict(scalers["linguistic"])
        classifier = classify.load_classifier(directory / "classifier.json")
        return cls(pipeline=pipeline, classifier=classifier,
                   threshold=manifest.get("threshold", 0.5))


def _write_lexicon(pipe: FeaturePipeline, path: Path) -> None:
    if pipe.config.lexicon_path:
        shutil.copyfile(pipe.config.lexicon_path, path)
        return
    lines = [f"{token}\t{pol:+.4f}" for token, pol in sorted(pipe.lexicon.entries.items())]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_keywords(pipe: FeaturePipeline, path: Path) -> None:
    if pipe.config.keywords_path:
        shutil.copyfile(pipe.config.keywords_path, path)
        return
    path.write_text("\n".join(pipe.keywords.phrases) + "\n", encoding="utf-8")
