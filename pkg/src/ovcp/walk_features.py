"""Seeded random walks over a comment graph and the per-video walk matrices.

Each walk starts at a uniformly sampled comment node and follows the single
outgoing edge toward the source, recording up to `max_path_len` nodes (the
source itself is never recorded). The sentiment/endorsement matrices stack
the node attributes along each walk, zero-padded once the source is reached.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .comment_graph import CommentGraph
from .errors import InternalError, UsageError


@dataclass(frozen=True)
class WalkConfig:
    num_walks: int = 100
    max_path_len: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.num_walks < 1:
            raise UsageError(f"num_walks must be >= 1, got {self.num_walks}")
        if self.max_path_len < 1:
            raise UsageError(f"max_path_len must be >= 1, got {self.max_path_len}")


@dataclass
class WalkFeatureMatrices:
    """Per-video walk features: both matrices are (num_walks, max_path_len)."""

    sentiment: np.ndarray
    endorsement: np.ndarray
    paths: list[list[str]]


def random_walk_paths(graph: CommentGraph, config: WalkConfig) -> list[list[str]]:
    """Sample `num_walks` node-id paths; deterministic per (graph, config)."""
    node_ids = sorted(graph.nodes)
    rng = np.random.default_rng(config.seed)
    if not node_ids:
        return [[] for _ in range(config.num_walks)]

    starts = rng.integers(0, len(node_ids), size=config.num_walks)
    paths = []
    for s in starts:
        current = node_ids[int(s)]
        path = []
        while len(path) < config.max_path_len:
            path.append(current)
            current = graph.edges[current]
            if current == graph.source_id:
                break
        paths.append(path)
    return paths


def feature_matrices(graph: CommentGraph, paths: list[list[str]],
                     max_path_len: int) -> WalkFeatureMatrices:
    """Stack node attributes along each path, zero-padded to `max_path_len`."""
    num_walks = len(paths)
    sent = np.zeros((num_walks, max_path_len))
    endo = np.zeros((num_walks, max_path_len))
    for m, path in enumerate(paths):
        if len(path) > max_path_len:
            raise InternalError(f"path {m} longer than max_path_len")
        for k, node in enumerate(path):
            attrs = graph.nodes.get(node)
            if attrs is None:
                raise InternalError(f"path {m} references unknown node {node!r}")
            sent[m, k] = attrs.sentiment
            endo[m, k] = attrs.endorsement
    return WalkFeatureMatrices(sentiment=sent, endorsement=endo, paths=paths)


def flatten_for_encoder(matrix: np.ndarray) -> np.ndarray:
    """Row-major flattening; (num_walks * max_path_len,) at the output."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise UsageError(f"expected a 2-D matrix, got ndim={matrix.ndim}")
    return matrix.reshape(-1)


def write_matrix_csvs(mats: WalkFeatureMatrices, video_id: str, out_dir) -> tuple[Path, Path]:
    """Dump the two matrices as `<video_id>.hs.csv` / `<video_id>.he.csv`."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    hs_path = out_dir / f"{video_id}.hs.csv"
    he_path = out_dir / f"{video_id}.he.csv"
    np.savetxt(hs_path, mats.sentiment, delimiter=",", fmt="%.10g")
    np.savetxt(he_path, mats.endorsement, delimiter=",", fmt="%.10g")
    return hs_path, he_path
