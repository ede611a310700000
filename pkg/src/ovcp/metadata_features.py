"""The 13 per-video metadata features and their correlation matrix."""

import csv
import re
from dataclasses import dataclass, fields
from datetime import datetime
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import Video
from .errors import DataError
from .text import URL_RE

METADATA_FEATURE_NAMES = (
    "comment_count",
    "dislike_count",
    "like_count",
    "view_count",
    "like_to_dislike",
    "daily_view_count",
    "like_to_view",
    "duration_minutes",
    "description_url_count",
    "like_per_comment",
    "words_per_comment",
    "clickbait_count",
    "weighted_clickbait_count",
)

_DEFAULT_KEYWORDS_CACHE = None


@dataclass(frozen=True)
class MetadataVector:
    comment_count: float
    dislike_count: float
    like_count: float
    view_count: float
    like_to_dislike: float
    daily_view_count: float
    like_to_view: float
    duration_minutes: float
    description_url_count: float
    like_per_comment: float
    words_per_comment: float
    clickbait_count: float
    weighted_clickbait_count: float

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)])


@dataclass(frozen=True)
class ClickbaitKeywords:
    phrases: tuple[str, ...]

    def __post_init__(self):
        if not self.phrases:
            raise DataError("keyword list must be non-empty")
        if len(set(self.phrases)) != len(self.phrases):
            raise DataError("keyword list contains duplicates")
        for p in self.phrases:
            if not p or p != p.lower():
                raise DataError(f"keywords must be non-empty lowercase: {p!r}")

    def patterns(self) -> list[re.Pattern]:
        return [re.compile(r"\b" + re.escape(p) + r"\b") for p in self.phrases]


def load_keywords(path) -> ClickbaitKeywords:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"keyword file not found: {path}")
    phrases = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip().lower()
        if line and not line.startswith("#"):
            phrases.append(line)
    return ClickbaitKeywords(tuple(phrases))


def default_keywords() -> ClickbaitKeywords:
    global _DEFAULT_KEYWORDS_CACHE
    if _DEFAULT_KEYWORDS_CACHE is None:
        text = resources.files("ovcp.data").joinpath("clickbait_keywords.txt") \
            .read_text(encoding="utf-8")
        phrases = tuple(l.strip().lower() for l in text.splitlines()
                        if l.strip() and not l.startswith("#"))
        _DEFAULT_KEYWORDS_CACHE = ClickbaitKeywords(phrases)
    return _DEFAULT_KEYWORDS_CACHE


def extract_metadata(video: Video, keywords: ClickbaitKeywords,
                     as_of: datetime) -> MetadataVector:
    """Compute the 13-entry metadata vector for one video."""
    if as_of < video.published_at:
        raise DataError(
            f"as_of {as_of.isoformat()} earlier than publish time of {video.video_id}")

    comments = video.all_comments()
    n = len(comments)
    days = int((as_of - video.published_at).total_seconds() // 86400)
    patterns = keywords.patterns()

    def keyword_hits(text: str) -> int:
        lowered = text.lower()
        return sum(len(p.findall(lowered)) for p in patterns)

    if n:
        like_per_comment = sum(c.like_count for c in comments) / n
        words_per_comment = sum(len(c.text.split()) for c in comments) / n
        hits = [keyword_hits(c.text) for c in comments]
        clickbait_count = sum(hits) / n
        weighted = sum(h * (1 + c.like_count) for h, c in zip(hits, comments)) / n
    else:
        like_per_comment = words_per_comment = clickbait_count = weighted = 0.0

    return MetadataVector(
        comment_count=float(n),
        dislike_count=float(video.dislike_count),
        like_count=float(video.like_count),
        view_count=float(video.view_count),
        like_to_dislike=(video.like_count + 1) / (video.dislike_count + 1),
        daily_view_count=video.view_count / max(1, days),
        like_to_view=video.like_count / max(1, video.view_count),
        duration_minutes=video.duration_seconds / 60.0,
        description_url_count=float(len(URL_RE.findall(video.description))),
        like_per_comment=like_per_comment,
        words_per_comment=words_per_comment,
        clickbait_count=clickbait_count,
        weighted_clickbait_count=weighted,
    )


def feature_correlation(rows) -> np.ndarray:
    """Pearson correlation of the 13 features; constant columns correlate 0."""
    matrix = np.stack([r.to_array() if isinstance(r, MetadataVector) else np.asarray(r)
                       for r in rows])
    if matrix.shape[0] < 2:
        raise DataError("feature correlation needs at least 2 rows")
    centered = matrix - matrix.mean(axis=0)
    std = np.sqrt((centered * centered).mean(axis=0))
    nonconst = std > 0

    corr = np.zeros((matrix.shape[1], matrix.shape[1]))
    if nonconst.any():
        normalized = centered[:, nonconst] / std[nonconst]
        sub = (normalized.T @ normalized) / matrix.shape[0]
        sub = np.clip((sub + sub.T) / 2.0, -1.0, 1.0)
        np.fill_diagonal(sub, 1.0)
        corr[np.ix_(nonconst, nonconst)] = sub
    return corr


def export_feature_csv(path, video_ids, rows, labels=None) -> None:
    """CSV with the 13 named columns; video_id first, optional label last."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["video_id", *METADATA_FEATURE_NAMES]
        if labels is not None:
            header.append("label")
        writer.writerow(header)
        for i, (vid, row) in enumerate(zip(video_ids, rows)):
            values = row.to_array() if isinstance(row, MetadataVector) else np.asarray(row)
            out = [vid, *[repr(float(v)) for v in values]]
            if labels is not None:
                out.append(str(bool(labels[i])).lower())
            writer.writerow(out)
