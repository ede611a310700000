"""Seeded generator of labeled synthetic video corpora.

The two classes carry the signatures observed on real data: clickbait
videos get short threads plus a few "hub" comments that attract many
replies and large like counts, narrow mostly-negative sentiment and
keyword-laden complaint texts; non-clickbait videos get longer reply
chains (built through @mentions), diverse sentiment and topical
vocabulary. Distributions: thread count ~ negative binomial per class,
like counts ~ zipf-tailed per class, polarity from class-specific
mixtures over the shipped lexicon vocabulary.
"""

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .comment_graph import build_graph, graph_stats
from .corpus import Comment, CommentThread, Dataset, Video, video_to_record
from .errors import DataError
from .metadata_features import default_keywords
from .sentiment import PolarityLexicon, default_lexicon, polarity
from .util import canonical_json, derive_seed

_EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)

_CONTENT_WORDS = (
    "video camera lens studio music guitar drum melody chorus voice singer "
    "recipe kitchen flavor butter dough oven garden flower river mountain "
    "valley glacier lava volcano canyon forest wildlife falcon octopus "
    "engine turbine circuit battery magnet rocket orbit galaxy nebula "
    "telescope chess puzzle strategy opening endgame history empire "
    "dynasty museum painting sculpture marathon stadium goalkeeper "
    "defender referee episode chapter interview narrator subtitle montage "
    "timelapse drone footage angle lighting editing render texture pixel "
    "keyboard algorithm dataset graphics physics chemistry biology "
    "economy market currency harvest festival tradition culture language"
).split()

_COMPLAINT_WORDS = (
    "title promised nothing shown actual content never appears skipped "
    "ending spoiler minutes watching this literally expected preview "
    "picture totally different everyone else scrolling comments before "
    "time refund attention seconds whole point missing skip ahead"
).split()

_FILLER_WORDS = (
    "the a this that with about from really very just so much too also "
    "here there when where honestly actually basically pretty quite"
).split()


@dataclass(frozen=True)
class SynthConfig:
    n_videos: int = 100
    clickbait_ratio: float = 0.2
    seed: int = 0
    # expected number of hub threads per clickbait video
    hub_intensity: float = 1.0
    # negative binomial (r, p) for extra threads per video, per class
    clickbait_thread_params: tuple[float, float] = (4.0, 0.3)
    nonclickbait_thread_params: tuple[float, float] = (5.0, 0.28)
    # geometric success probability for replies per thread (higher = shorter)
    clickbait_reply_p: float = 0.8
    nonclickbait_reply_p: float = 0.38
    # probability a comment's sentiment orientation is re-drawn uniformly
    # instead of pinned to the class default (negative): (clickbait, non)
    sentiment_diversity: tuple[float, float] = (0.25, 0.8)
    # zipf exponents for like counts: lower = heavier tail: (clickbait, non)
    endorsement_skew: tuple[float, float] = (1.8, 2.6)
    # probability a clickbait-video comment contains a clickbait keyword
    keyword_rate: float = 0.15

    def __post_init__(self):
        if self.n_videos < 1:
            raise DataError("n_videos must be >= 1")
        if not 0.0 < self.clickbait_ratio < 1.0:
            raise DataError("clickbait_ratio must be inside (0, 1)")
        if self.hub_intensity < 0:
            raise DataError("hub_intensity must be >= 0")
        for p in (self.clickbait_reply_p, self.nonclickbait_reply_p):
            if not 0.0 < p <= 1.0:
                raise DataError("reply probabilities must be in (0, 1]")
        for d in self.sentiment_diversity:
            if not 0.0 <= d <= 1.0:
                raise DataError("sentiment_diversity values must be in [0, 1]")
        for a in self.endorsement_skew:
            if not a > 1.0:
                raise DataError("endorsement_skew exponents must be > 1")
        if not 0.0 <= self.keyword_rate <= 1.0:
            raise DataError("keyword_rate must be in [0, 1]")


def _word_pools(lexicon: PolarityLexicon):
    positive = sorted(t for t, p in lexicon.entries.items() if p >= 0.5 and t.isalpha())
    negative = sorted(t for t, p in lexicon.entries.items() if p <= -0.5 and t.isalpha())
    return positive, negative


class _VideoBuilder:
    def __init__(self, config: SynthConfig, lexicon: PolarityLexicon):
        self.config = config
        self.positive, self.negative = _word_pools(lexicon)
        self.keywords = default_keywords().phrases

    def _pick(self, rng, pool, k):
        return [pool[i] for i in rng.integers(0, len(pool), size=k)]

    def _comment_text(self, rng, clickbait: bool) -> str:
        cfg = self.config
        diversity = cfg.sentiment_diversity[0 if clickbait else 1]
        if rng.random() < diversity:
            orientation = ("positive", "negative", "neutral")[int(rng.integers(0, 3))]
        else:
            orientation = "negative"

        base_pool = _COMPLAINT_WORDS if clickbait else _CONTENT_WORDS
        words = self._pick(rng, base_pool, int(rng.integers(2, 7)))
        words += self._pick(rng, _FILLER_WORDS, int(rng.integers(1, 4)))
        if orientation == "positive":
            words += self._pick(rng, self.positive, int(rng.integers(1, 4)))
        elif orientation == "negative":
            words += self._pick(rng, self.negative, int(rng.integers(1, 4)))
        keyword_p = cfg.keyword_rate if clickbait else 0.02
        if rng.random() < keyword_p:
            words.append(self.keywords[int(rng.integers(0, len(self.keywords)))])
        order = rng.permutation(len(words))
        return " ".join(words[i] for i in order)

    def _likes(self, rng, clickbait: bool) -> int:
        skew = self.config.endorsement_skew[0 if clickbait else 1]
        return int(min(rng.zipf(skew) - 1, 10000))

    def _offset_minutes(self, rng) -> float:
        # a 30% early rush keeps short detection windows populated
        if rng.random() < 0.3:
            return float(rng.exponential(15.0))
        return float(rng.exponential(600.0))

    def build(self, index: int, clickbait: bool) -> Video:
        cfg = self.config
        rng = np.random.default_rng(derive_seed(cfg.seed, "video", index))
        video_id = f"synth-{cfg.seed}-{index:05d}"
        published = _EPOCH + timedelta(days=index, minutes=int(rng.integers(0, 1440)))

        r, p = cfg.clickbait_thread_params if clickbait else cfg.nonclickbait_thread_params
        n_threads = 1 + int(rng.negative_binomial(r, p))
        n_hubs = min(n_threads, int(rng.poisson(cfg.hub_intensity))) if clickbait else 0
        reply_p = cfg.clickbait_reply_p if clickbait else cfg.nonclickbait_reply_p
        chain_p = 0.1 if clickbait else 0.65

        counter = 0
        threads = []
        for t in range(n_threads):
            hub = t < n_hubs
            top_author = f"user{int(rng.integers(0, 60))}"
            top_offset = self._offset_minutes(rng)
            top_likes = self._likes(rng, clickbait)
            if hub:
                top_likes += int(rng.integers(50, 400))
            top = Comment(
                id=f"{video_id}-c{counter:04d}",
                author=top_author,
                text=self._comment_text(rng, clickbait),
                like_count=top_likes,
                published_at=published + timedelta(minutes=top_offset),
            )
            counter += 1

            if hub:
                n_replies = 8 + int(rng.poisson(8.0 * max(cfg.hub_intensity, 0.25)))
            else:
                n_replies = int(rng.geometric(reply_p)) - 1
            replies = []
            offset = top_offset
            prev_author = None
            for _ in range(n_replies):
                offset += float(rng.exponential(45.0)) + 0.5
                author = f"user{int(rng.integers(0, 60))}"
                text = self._comment_text(rng, clickbait)
                if prev_author is not None and rng.random() < chain_p:
                    text = f"@{prev_author} {text}"
                replies.append(Comment(
                    id=f"{video_id}-c{counter:04d}",
                    author=author,
                    text=text,
                    like_count=self._likes(rng, clickbait),
                    published_at=published + timedelta(minutes=offset),
                    parent_id=top.id,
                ))
                counter += 1
                prev_author = author
            threads.append(CommentThread(top=top, replies=tuple(replies)))

        views = int(rng.lognormal(10.5, 1.0)) + 100
        like_rate = rng.uniform(0.01, 0.05)
        dislike_rate = rng.uniform(0.008, 0.03) if clickbait else rng.uniform(0.002, 0.018)
        description_words = self._pick(rng, _CONTENT_WORDS, int(rng.integers(8, 25)))
        n_urls = int(rng.poisson(0.9 if clickbait else 0.4))
        for u in range(n_urls):
            description_words.append(f"https://example.com/{video_id}/{u}")

        return Video(
            video_id=video_id,
            title=" ".join(self._pick(rng, _CONTENT_WORDS, int(rng.integers(4, 9)))),
            description=" ".join(description_words),
            published_at=published,
            view_count=views,
            like_count=int(views * like_rate),
            dislike_count=int(views * dislike_rate),
            duration_seconds=int(rng.integers(120, 1500)),
            threads=tuple(threads),
            label=clickbait,
        )


def generate_corpus(config: SynthConfig,
                    lexicon: PolarityLexicon | None = None) -> Dataset:
    """Generate a fully labeled corpus; byte-identical per config."""
    n_clickbait = round(config.n_videos * config.clickbait_ratio)
    if n_clickbait == 0 or n_clickbait == config.n_videos:
        raise DataError(
            f"clickbait_ratio {config.clickbait_ratio} yields an empty class "
            f"for n_videos={config.n_videos}")
    lexicon = lexicon or default_lexicon()
    labels = np.array([True] * n_clickbait + [False] * (config.n_videos - n_clickbait))
    master = np.random.default_rng(derive_seed(config.seed, "labels"))
    labels = labels[master.permutation(config.n_videos)]

    builder = _VideoBuilder(config, lexicon)
    videos = [builder.build(i, bool(labels[i])) for i in range(config.n_videos)]
    name = f"synth-n{config.n_videos}-s{config.seed}"
    return Dataset(videos=videos, name=name)


def write_corpus(dataset: Dataset, out_dir, config: SynthConfig | None = None) -> list[Path]:
    """Write one canonical-JSON record per video (plus the config echo)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for video in dataset.videos:
        path = out_dir / f"{video.video_id}.json"
        path.write_text(canonical_json(video_to_record(video)), encoding="utf-8")
        paths.append(path)
    if config is not None:
        echo = {
            "n_videos": config.n_videos,
            "clickbait_ratio": config.clickbait_ratio,
            "seed": config.seed,
            "hub_intensity": config.hub_intensity,
            "clickbait_thread_params": list(config.clickbait_thread_params),
            "nonclickbait_thread_params": list(config.nonclickbait_thread_params),
            "clickbait_reply_p": config.clickbait_reply_p,
            "nonclickbait_reply_p": config.nonclickbait_reply_p,
            "sentiment_diversity": list(config.sentiment_diversity),
            "endorsement_skew": list(config.endorsement_skew),
            "keyword_rate": config.keyword_rate,
        }
        (out_dir / "synth_config.json").write_text(canonical_json(echo), encoding="utf-8")
    return paths


@dataclass(frozen=True)
class ClassSignature:
    n_videos: int
    mean_max_in_degree: float
    mean_thread_depth: float
    polarity_variance: float
    endorsement_gini: float


def _gini(values) -> float:
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = x.size
    total = x.sum()
    if n == 0 or total <= 0:
        return 0.0
    ranks = np.arange(1, n + 1)
    return float(2.0 * (ranks * x).sum() / (n * total) - (n + 1) / n)


def class_signature_report(dataset: Dataset,
                           lexicon: PolarityLexicon | None = None) -> dict[bool, ClassSignature]:
    """Per-class aggregates validating the generator's class signatures."""
    if any(v.label is None for v in dataset.videos):
        raise DataError("class_signature_report requires a fully labeled dataset")
    lexicon = lexicon or default_lexicon()

    report: dict[bool, ClassSignature] = {}
    for label in (True, False):
        members = [v for v in dataset.videos if v.label is label]
        if not members:
            continue
        max_in, depths, polarities, likes = [], [], [], []
        for video in members:
            stats = graph_stats(build_graph(video, lexicon))
            max_in.append(stats.max_in_degree)
            depths.append(stats.mean_thread_depth)
            for c in video.all_comments():
                polarities.append(polarity(c.text, lexicon))
                likes.append(c.like_count)
        report[label] = ClassSignature(
            n_videos=len(members),
            mean_max_in_degree=float(np.mean(max_in)),
            mean_thread_depth=float(np.mean(depths)),
            polarity_variance=float(np.var(polarities)) if polarities else 0.0,
            endorsement_gini=_gini(likes),
        )
    return report
