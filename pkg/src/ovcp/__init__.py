"""Content-agnostic clickbait video detection from viewer comment networks."""

__version__ = "0.1.0"

from .corpus import Comment, CommentThread, Dataset, Video  # noqa: F401
from .pipeline import FeaturePipeline, ModelBundle, PipelineConfig  # noqa: F401
