"""Lexicon-based polarity scoring and endorsement extraction.

Comment sentiment is the arithmetic mean of the polarities of the lexicon
tokens found in the text, which keeps scores deterministic, bounded in
[-1, 1] and auditable against the shipped TSV.
"""

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import DataError
from .text import tokenize

_DEFAULT_LEXICON_CACHE: "PolarityLexicon | None" = None


@dataclass(frozen=True)
class PolarityLexicon:
    """Map of lowercase token -> polarity in [-1, 1]."""

    entries: dict[str, float]

    def __post_init__(self):
        for token, pol in self.entries.items():
            if not token or token != token.lower():
                raise DataError(f"lexicon token must be non-empty lowercase: {token!r}")
            if not -1.0 <= pol <= 1.0:
                raise DataError(f"lexicon polarity out of [-1, 1]: {token!r} -> {pol}")

    def __len__(self):
        return len(self.entries)


def parse_lexicon(lines, source: str = "<lexicon>") -> PolarityLexicon:
    """Parse `token<TAB>polarity` lines; blank lines and # comments allowed."""
    entries: dict[str, float] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{source}:{lineno}: expected token<TAB>polarity")
        token, value = parts[0].strip().lower(), parts[1].strip()
        try:
            pol = float(value)
        except ValueError:
            raise DataError(f"{source}:{lineno}: bad polarity {value!r}") from None
        if not -1.0 <= pol <= 1.0:
            raise DataError(f"{source}:{lineno}: polarity {pol} outside [-1, 1]")
        if not token:
            raise DataError(f"{source}:{lineno}: empty token")
        entries[token] = pol
    return PolarityLexicon(entries)


def load_lexicon(path) -> PolarityLexicon:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"lexicon file not found: {path}")
    with path.open(encoding="utf-8") as fh:
        return parse_lexicon(fh, source=str(path))


def default_lexicon() -> PolarityLexicon:
    """The lexicon shipped with the package (~2k curated entries), cached."""
    global _DEFAULT_LEXICON_CACHE
    if _DEFAULT_LEXICON_CACHE is None:
        data = resources.files("ovcp.data").joinpath("default_lexicon.tsv")
        text = data.read_text(encoding="utf-8")
        _DEFAULT_LEXICON_CACHE = parse_lexicon(text.splitlines(), source="default_lexicon.tsv")
    return _DEFAULT_LEXICON_CACHE


def polarity(text: str, lexicon: PolarityLexicon) -> float:
    """Mean polarity of the matched tokens; 0.0 when nothing matches."""
    matched = [lexicon.entries[t] for t in tokenize(text) if t in lexicon.entries]
    if not matched:
        return 0.0
    return sum(matched) / len(matched)


def endorsement(comment) -> int:
    """Endorsement attribute of a comment: its like count."""
    return comment.like_count
