"""Small shared helpers: seed derivation and canonical JSON."""

import hashlib
import json


def derive_seed(*parts) -> int:
    """Derive a stable 63-bit seed from a sequence of values.

    Uses blake2b over the string forms, so the result is identical across
    runs, platforms and Python processes (unlike hash()).
    """
    joined = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(joined.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def canonical_json(obj) -> str:
    """Serialize with a fixed key order so identical values give identical bytes."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
