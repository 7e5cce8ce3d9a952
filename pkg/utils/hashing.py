import hashlib
import json
from typing import Any


def stable_hash(payload: Any) -> str:
    """sha256 over the canonical JSON form of payload"""
    encoded = json.dumps(payload, sort_keys=True, ensure_ascii=False, default=str).encode("utf-8")
    return hashlib.sha256(encoded).hexdigest()


def seed_from(*parts: Any) -> int:
    """Derive a 64-bit generator seed that does not depend on PYTHONHASHSEED"""
    digest = hashlib.blake2b("\x00".join(str(part) for part in parts).encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "little")
