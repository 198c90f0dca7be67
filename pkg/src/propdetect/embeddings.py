"""Message-embedding storage and a deterministic hash embedder for tests.

The portable store format (magic ``TGEMB1``) lets any exporter produce
vectors offline; the core never runs a neural encoder itself. The hash
embedder buckets character 3-grams into signed dimensions and L2-normalizes,
which is enough to make shared vocabulary measurable in tests and demos.
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from .errors import DataError, FormatError

MAGIC = b"TGEMB1\n"


class EmbeddingStore:
    """Immutable-after-build map from message-id strings to float32 vectors."""

    def __init__(self, dim: int, provenance: str = ""):
        if dim <= 0:
            raise DataError("dimension must be positive")
        self.dim = dim
        self.provenance = provenance
        self._vectors: dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, message_id: str) -> bool:
        return message_id in self._vectors

    def ids(self) -> list[str]:
        return list(self._vectors)

    def add(self, message_id: str, vector) -> None:
        vec = np.asarray(vector, dtype=np.float32)
        if vec.shape != (self.dim,):
            raise DataError(f"vector for {message_id} has shape {vec.shape}, "
                            f"expected ({self.dim},)")
        if not np.all(np.isfinite(vec)):
            raise DataError(f"vector for {message_id} has non-finite components")
        if message_id in self._vectors:
            raise DataError(f"duplicate id {message_id}")
        self._vectors[message_id] = vec

    def get(self, message_id: str) -> np.ndarray | None:
        return self._vectors.get(message_id)

    def get_many(self, message_ids) -> list[np.ndarray | None]:
        return [self._vectors.get(mid) for mid in message_ids]


def save_store(store: EmbeddingStore, path) -> None:
    """Write the bit-exact binary format (see load_store)."""
    header = json.dumps({"dim": store.dim, "count": len(store),
                         "provenance": store.provenance}, sort_keys=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(header.encode("utf-8") + b"\n")
        for message_id in store.ids():
            raw_id = message_id.encode("utf-8")
            if len(raw_id) > 0xFFFF:
                raise DataError(f"id too long: {message_id[:40]}...")
            fh.write(struct.pack(">H", len(raw_id)))
            fh.write(raw_id)
            fh.write(store.get(message_id).astype("<f4").tobytes())


def load_store(path) -> EmbeddingStore:
    """Read an embedding file: magic, one JSON header line, then records of
    (2-byte big-endian id length, id bytes, dim little-endian float32)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        header_line = fh.readline()
        if not header_line.endswith(b"\n"):
            raise FormatError(f"{path}: truncated header")
        try:
            header = json.loads(header_line.decode("utf-8"))
            dim = int(header["dim"])
            count = int(header["count"])
        except (json.JSONDecodeError, KeyError, ValueError, UnicodeDecodeError) as exc:
            raise FormatError(f"{path}: bad header: {exc}")
        if dim <= 0:
            raise FormatError(f"{path}: non-positive dimension {dim}")

        store = EmbeddingStore(dim, provenance=str(header.get("provenance", "")))
        vec_bytes = 4 * dim
        for i in range(count):
            len_raw = fh.read(2)
            if len(len_raw) != 2:
                raise FormatError(f"{path}: truncated at record {i}")
            (id_len,) = struct.unpack(">H", len_raw)
            raw_id = fh.read(id_len)
            if len(raw_id) != id_len:
                raise FormatError(f"{path}: truncated id at record {i}")
            raw_vec = fh.read(vec_bytes)
            if len(raw_vec) != vec_bytes:
                raise FormatError(f"{path}: truncated vector at record {i}")
            vec = np.frombuffer(raw_vec, dtype="<f4").astype(np.float32)
            if not np.all(np.isfinite(vec)):
                raise DataError(f"{path}: non-finite vector at record {i}")
            store._vectors[raw_id.decode("utf-8")] = vec
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after {count} records")
    return store


def hash_embed(text: str, dimension: int = 128) -> np.ndarray:
    """Deterministic text embedding: character 3-grams hashed into signed
    buckets, then L2-normalized. Identical texts yield identical unit vectors.
    """
    if dimension < 8:
        raise DataError("dimension must be >= 8")
    # frame the text so even empty/short inputs produce at least one gram
    framed = "\x02" + text + "\x03"
    if len(framed) < 3:
        framed += "\x03"
    vec = np.zeros(dimension, dtype=np.float64)
    for i in range(len(framed) - 2):
        gram = framed[i:i + 3]
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        value = int.from_bytes(digest, "big")
        bucket = (value >> 1) % dimension
        sign = 1.0 if value & 1 else -1.0
        vec[bucket] += sign
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        vec[0] = 1.0
        norm = 1.0
    return (vec / norm).astype(np.float32)


def build_store_from_texts(items, dimension: int = 128,
                           provenance: str = "hash-embedder") -> EmbeddingStore:
    """items: iterable of (message_id, text). Convenience for tests and demos."""
    store = EmbeddingStore(dimension, provenance=provenance)
    for message_id, text in items:
        store.add(message_id, hash_embed(text, dimension))
    return store
