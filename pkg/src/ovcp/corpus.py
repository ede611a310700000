"""Dataset types, record ingestion, time-window filtering and fold splitting.

A dataset on disk is a directory (or zip archive) holding one UTF-8 JSON
record per video; see `video_to_record` for the schema. Records that fail
validation are skipped with a `SKIP <file> <reason>` line on stderr.
"""

import json
import logging
import math
import sys
import zipfile
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import DataError, UsageError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Comment:
    id: str
    author: str
    text: str
    like_count: int
    published_at: datetime
    parent_id: str | None = None


@dataclass(frozen=True)
class CommentThread:
    """A top-level comment and its replies, replies in chronological order."""

    top: Comment
    replies: tuple[Comment, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.replies, key=lambda c: c.published_at))
        object.__setattr__(self, "replies", ordered)

    def all_comments(self) -> list[Comment]:
        return [self.top, *self.replies]

    def size(self) -> int:
        return 1 + len(self.replies)


@dataclass(frozen=True)
class Video:
    video_id: str
    title: str
    description: str
    published_at: datetime
    view_count: int
    like_count: int
    dislike_count: int
    duration_seconds: int
    threads: tuple[CommentThread, ...] = ()
    label: bool | None = None

    def all_comments(self) -> list[Comment]:
        out = []
        for thread in self.threads:
            out.extend(thread.all_comments())
        return out

    def comment_count(self) -> int:
        return sum(t.size() for t in self.threads)


@dataclass
class Dataset:
    videos: list[Video]
    name: str = "dataset"

    def __len__(self):
        return len(self.videos)

    def labels(self) -> list[bool | None]:
        return [v.label for v in self.videos]


# --------------------------------------------------------------------------
# Timestamps

def parse_timestamp(value: str) -> datetime:
    """ISO-8601; a trailing Z or a missing offset means UTC."""
    if not isinstance(value, str):
        raise DataError(f"timestamp must be a string, got {type(value).__name__}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError:
        raise DataError(f"bad ISO-8601 timestamp: {value!r}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# --------------------------------------------------------------------------
# Record parsing / validation

_COMMENT_FIELDS = ("id", "author", "text", "like_count", "published_at")


def _comment_from_record(obj, *, parent_id=None, where="comment") -> Comment:
    if not isinstance(obj, dict):
        raise DataError(f"{where}: expected an object")
    for key in _COMMENT_FIELDS:
        if key not in obj:
            raise DataError(f"{where}: missing field {key!r}")
    like_count = obj["like_count"]
    if not isinstance(like_count, int) or isinstance(like_count, bool) or like_count < 0:
        raise DataError(f"{where}: like_count must be a non-negative integer")
    cid = obj["id"]
    if not isinstance(cid, str) or not cid:
        raise DataError(f"{where}: id must be a non-empty string")
    rec_parent = obj.get("parent_id", parent_id)
    return Comment(
        id=cid,
        author=str(obj["author"]),
        text=str(obj["text"]),
        like_count=like_count,
        published_at=parse_timestamp(obj["published_at"]),
        parent_id=rec_parent,
    )


def video_from_record(obj) -> Video:
    """Build and validate a Video from a parsed record; raises DataError."""
    if not isinstance(obj, dict):
        raise DataError("record must be a JSON object")
    for key in ("video_id", "title", "description", "published_at",
                "view_count", "like_count", "dislike_count", "duration_seconds"):
        if key not in obj:
            raise DataError(f"missing field {key!r}")
    for key in ("view_count", "like_count", "dislike_count", "duration_seconds"):
        value = obj[key]
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise DataError(f"{key} must be a non-negative integer")
    if obj["duration_seconds"] <= 0:
        raise DataError("duration_seconds must be positive")
    label = obj.get("label")
    if label is not None and not isinstance(label, bool):
        raise DataError("label must be a boolean when present")
    published_at = parse_timestamp(obj["published_at"])

    threads = []
    seen_ids: set[str] = set()
    for t_idx, tobj in enumerate(obj.get("threads", [])):
        if not isinstance(tobj, dict) or "top" not in tobj:
            raise DataError(f"threads[{t_idx}]: expected an object with 'top'")
        top = _comment_from_record(tobj["top"], where=f"threads[{t_idx}].top")
        if top.parent_id is not None:
            raise DataError(f"threads[{t_idx}].top: top-level comment has parent_id")
        replies = []
        for r_idx, robj in enumerate(tobj.get("replies", [])):
            reply = _comment_from_record(robj, where=f"threads[{t_idx}].replies[{r_idx}]")
            if reply.parent_id != top.id:
                raise DataError(
                    f"threads[{t_idx}].replies[{r_idx}]: parent_id "
                    f"{reply.parent_id!r} does not match top id {top.id!r}")
            replies.append(reply)
        thread = CommentThread(top=top, replies=tuple(replies))
        for c in thread.all_comments():
            if c.id in seen_ids:
                raise DataError(f"duplicate comment id {c.id!r}")
            seen_ids.add(c.id)
        threads.append(thread)

    video = Video(
        video_id=str(obj["video_id"]),
        title=str(obj["title"]),
        description=str(obj["description"]),
        published_at=published_at,
        view_count=obj["view_count"],
        like_count=obj["like_count"],
        dislike_count=obj["dislike_count"],
        duration_seconds=obj["duration_seconds"],
        threads=tuple(threads),
        label=label,
    )
    if not video.video_id:
        raise DataError("video_id must be non-empty")
    return _clamp_early_comments(video)


def _clamp_early_comments(video: Video) -> Video:
    """Comments timestamped before the video's publish time are clamped to it."""
    def fix(c: Comment) -> Comment:
        if c.published_at < video.published_at:
            log.warning("comment %s of video %s predates publish time; clamped",
                        c.id, video.video_id)
            return replace(c, published_at=video.published_at)
        return c

    changed = False
    threads = []
    for t in video.threads:
        top = fix(t.top)
        replies = tuple(fix(r) for r in t.replies)
        if top is not t.top or any(a is not b for a, b in zip(replies, t.replies)):
            changed = True
        threads.append(CommentThread(top=top, replies=replies))
    if not changed:
        return video
    return replace(video, threads=tuple(threads))


def video_to_record(video: Video) -> dict:
    """Serialize a Video into the on-disk record shape."""
    def comment_obj(c: Comment, with_parent: bool) -> dict:
        obj = {
            "id": c.id,
            "author": c.author,
            "text": c.text,
            "like_count": c.like_count,
            "published_at": format_timestamp(c.published_at),
        }
        if with_parent:
            obj["parent_id"] = c.parent_id
        return obj

    record = {
        "video_id": video.video_id,
        "title": video.title,
        "description": video.description,
        "published_at": format_timestamp(video.published_at),
        "view_count": video.view_count,
        "like_count": video.like_count,
        "dislike_count": video.dislike_count,
        "duration_seconds": video.duration_seconds,
        "threads": [
            {
                "top": comment_obj(t.top, with_parent=False),
                "replies": [comment_obj(r, with_parent=True) for r in t.replies],
            }
            for t in video.threads
        ],
    }
    if video.label is not None:
        record["label"] = video.label
    return record


# --------------------------------------------------------------------------
# Loading

def _iter_record_files(path: Path):
    """Yield (name, json-text) pairs from a directory or zip archive."""
    if path.is_dir():
        for f in sorted(path.glob("*.json")):
            yield f.name, f.read_text(encoding="utf-8")
    elif path.is_file() and path.suffix == ".zip":
        with zipfile.ZipFile(path) as zf:
            for name in sorted(zf.namelist()):
                if name.endswith(".json"):
                    yield name, zf.read(name).decode("utf-8")
    else:
        raise DataError(f"dataset path is neither a directory nor a zip archive: {path}")


def load_dataset(path, name: str | None = None, report=None) -> Dataset:
    """Load all parsable video records under `path`.

    Invalid records are reported as `SKIP <file> <reason>` on `report`
    (stderr by default) and skipped. Raises DataError if the path is
    missing, no record parses, or two records share a video_id.
    """
    path = Path(path)
    if report is None:
        report = sys.stderr
    if not path.exists():
        raise DataError(f"dataset path does not exist: {path}")

    videos: list[Video] = []
    seen: dict[str, str] = {}
    for fname, text in _iter_record_files(path):
        try:
            video = video_from_record(json.loads(text))
        except (DataError, json.JSONDecodeError) as exc:
            print(f"SKIP {fname} {exc}", file=report)
            continue
        if video.video_id in seen:
            raise DataError(
                f"duplicate video_id {video.video_id!r} in {fname} "
                f"(first seen in {seen[video.video_id]})")
        seen[video.video_id] = fname
        videos.append(video)
    if not videos:
        raise DataError(f"zero parsable videos under {path}")
    return Dataset(videos=videos, name=name or path.stem)


def parse_comment_threads(payload) -> list[CommentThread]:
    """Group a flat comment export into threads.

    `payload` is a list of comment objects (or {"comments": [...]}) where
    top-level items carry no parent_id and replies reference their top-level
    comment via parent_id. Replies are reordered chronologically; a reply
    whose parent is not in the payload is dropped with a warning.
    """
    if isinstance(payload, dict):
        payload = payload.get("comments", [])
    if not isinstance(payload, list):
        raise DataError("comment payload must be a list or {'comments': [...]}")

    tops: dict[str, Comment] = {}
    replies: list[Comment] = []
    for idx, obj in enumerate(payload):
        comment = _comment_from_record(obj, where=f"comments[{idx}]")
        if comment.parent_id is None:
            tops[comment.id] = comment
        else:
            replies.append(comment)

    grouped: dict[str, list[Comment]] = {cid: [] for cid in tops}
    for reply in replies:
        if reply.parent_id not in grouped:
            log.warning("dropping reply %s: unknown parent %s", reply.id, reply.parent_id)
            continue
        grouped[reply.parent_id].append(reply)
    return [CommentThread(top=tops[cid], replies=tuple(grouped[cid])) for cid in tops]


# --------------------------------------------------------------------------
# Time-window filtering

def filter_by_window(video: Video, window_minutes: float) -> Video:
    """Keep only comments posted within `window_minutes` of publication.

    A top-level comment outside the window removes its whole thread;
    replies outside are removed individually. `math.inf` keeps everything.
    """
    if not window_minutes > 0:
        raise UsageError(f"window must be positive, got {window_minutes}")

    def offset_minutes(c: Comment) -> float:
        delta = (c.published_at - video.published_at).total_seconds() / 60.0
        if delta < 0:
            log.warning("comment %s predates publish time; treating offset as 0", c.id)
            return 0.0
        return delta

    threads = []
    for t in video.threads:
        if offset_minutes(t.top) > window_minutes:
            continue
        kept = tuple(r for r in t.replies if offset_minutes(r) <= window_minutes)
        threads.append(CommentThread(top=t.top, replies=kept))
    return replace(video, threads=tuple(threads))


# --------------------------------------------------------------------------
# Stratified k-fold

def stratified_kfold(dataset: Dataset, k: int, seed: int) -> list[tuple[list[int], list[int]]]:
    """Deterministic stratified folds as (train_indices, test_indices) pairs."""
    if k < 2:
        raise UsageError(f"k must be >= 2, got {k}")
    labels = dataset.labels()
    if any(lbl is None for lbl in labels):
        raise DataError("stratified_kfold requires every video to be labeled")

    by_class: dict[bool, list[int]] = {}
    for idx, lbl in enumerate(labels):
        by_class.setdefault(bool(lbl), []).append(idx)
    for lbl, members in by_class.items():
        if len(members) < k:
            raise DataError(f"class {lbl} has {len(members)} members, fewer than k={k}")

    rng = np.random.default_rng(seed)
    test_folds: list[list[int]] = [[] for _ in range(k)]
    for lbl in sorted(by_class):
        members = np.array(by_class[lbl])
        members = members[rng.permutation(len(members))]
        base, extra = divmod(len(members), k)
        lucky = set(rng.choice(k, size=extra, replace=False).tolist()) if extra else set()
        pos = 0
        for fold in range(k):
            take = base + (1 if fold in lucky else 0)
            test_folds[fold].extend(members[pos:pos + take].tolist())
            pos += take

    all_indices = set(range(len(dataset)))
    splits = []
    for fold in range(k):
        test = sorted(test_folds[fold])
        train = sorted(all_indices.difference(test))
        splits.append((train, test))
    return splits
