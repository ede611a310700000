"""Tokenization shared by the sentiment scorer and the document embedder."""

import re

URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)

# Alphanumeric runs (underscore excluded), or single emoji/symbol codepoints.
_TOKEN_RE = re.compile(
    r"[^\W_]+"
    r"|[←-⇿☀-➿⬀-⯿\U0001f000-\U0001faff]"
)


def strip_urls(text: str) -> str:
    return URL_RE.sub(" ", text)


def tokenize(text: str, drop_urls: bool = False) -> list[str]:
    """Lowercase and split on non-alphanumerics; emoji survive as single tokens."""
    if drop_urls:
        text = strip_urls(text)
    return _TOKEN_RE.findall(text.lower())
