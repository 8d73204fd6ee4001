"""Submit-time feature encodings.

Two encodings share the same source fields, all known at submission:

* INT: 15 dense numeric features. String-valued fields go through per-field
  dictionaries that assign integer ids in first-seen order starting at 1;
  id 0 means missing or never seen during fitting. Numeric fields pass
  through, with 0 standing in for absent optional values, and the submit
  timestamp becomes epoch seconds.
* SB: the job's fields are rendered into one comma-separated string and a
  sentence embedder maps that string to a 384-dim vector. The built-in
  hash embedder is deterministic and offline; an external embedder speaks
  a small HTTP protocol (POST /embed, GET /health) for real sentence
  models.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from datetime import timezone
from enum import Enum
from typing import Iterable, Optional, Protocol, Sequence

import numpy as np

from .errors import DimensionError, EmbedderUnavailable, EmptyTraining
from .trace import JobRecord

SB_DIM = 384
INT_DIM = 15


class Encoding(Enum):
    INT = "int"
    SB = "sb"

    @property
    def dim(self) -> int:
        return INT_DIM if self is Encoding.INT else SB_DIM


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    encoding: Encoding

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 1 or arr.shape[0] != self.encoding.dim:
            raise DimensionError(
                f"{self.encoding.value} vector must have {self.encoding.dim} entries, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise DimensionError("feature vector contains non-finite values")


# ---------------------------------------------------------------------------
# INT encoding

_DICT_FIELDS = ("name", "command", "account", "dependency", "requested_nodes", "partition", "qos")


def _dict_key(record: JobRecord, field_name: str) -> str:
    if field_name == "requested_nodes":
        return ";".join(record.requested_nodes)
    return getattr(record, field_name)


class IntEncoder:
    """Dictionary-backed dense encoder producing 15-entry float vectors.

    Fitting scans records in order and assigns each previously unseen string
    the next integer id, starting at 1 per field. Values absent from a record
    or absent from the fitted dictionaries encode as 0, so inference never
    mutates the dictionaries.
    """

    dim = INT_DIM

    def __init__(self):
        self._dicts: dict[str, dict[str, int]] = {f: {} for f in _DICT_FIELDS}
        self.fitted = False

    def fit(self, records: Iterable[JobRecord]) -> "IntEncoder":
        self._dicts = {f: {} for f in _DICT_FIELDS}
        seen_any = False
        for record in records:
            seen_any = True
            for f in _DICT_FIELDS:
                key = _dict_key(record, f)
                if key == "":
                    continue
                table = self._dicts[f]
                if key not in table:
                    table[key] = len(table) + 1
        if not seen_any:
            raise EmptyTraining("cannot fit dictionaries on an empty job list")
        self.fitted = True
        return self

    def _id(self, field_name: str, record: JobRecord) -> int:
        key = _dict_key(record, field_name)
        if key == "":
            return 0
        return self._dicts[field_name].get(key, 0)

    def vocabulary_sizes(self) -> dict[str, int]:
        return {f: len(t) for f, t in self._dicts.items()}

    def lookup(self, field_name: str, value_id: int) -> Optional[str]:
        """Reverse lookup for round-trip checks; None for id 0 or unknown."""
        for key, vid in self._dicts[field_name].items():
            if vid == value_id:
                return key
        return None

    def transform(self, record: JobRecord) -> np.ndarray:
        if not self.fitted:
            raise DimensionError("IntEncoder.transform called before fit")
        epoch = record.submit_time.astimezone(timezone.utc).timestamp()
        return np.array(
            [
                self._id("name", record),
                self._id("command", record),
                self._id("account", record),
                record.user_id,
                self._id("dependency", record),
                record.group_id,
                self._id("requested_nodes", record),
                record.num_tasks_per_socket or 0,
                self._id("partition", record),
                record.time_limit or 0,
                self._id("qos", record),
                record.num_cpu,
                record.num_nodes,
                record.num_gpus,
                epoch,
            ],
            dtype=np.float64,
        )

    def transform_matrix(self, records: Sequence[JobRecord]) -> np.ndarray:
        if not records:
            return np.empty((0, INT_DIM), dtype=np.float64)
        return np.stack([self.transform(r) for r in records])

    def feature_vector(self, record: JobRecord) -> FeatureVector:
        return FeatureVector(self.transform(record), Encoding.INT)


# ---------------------------------------------------------------------------
# SB encoding

def render_job_string(record: JobRecord) -> str:
    """Render the submit-time fields as one comma-separated string.

    Field order matches the INT feature order. Absent optional values render
    as "0", node lists as "[n1, n2]", and the submit timestamp as
    "YYYY-MM-DD HH:MM:SS" (UTC).
    """
    nodes = "[" + ", ".join(record.requested_nodes) + "]" if record.requested_nodes else "0"
    submit = record.submit_time.astimezone(timezone.utc).strftime("%Y-%m-%d %H:%M:%S")
    parts = (
        record.name,
        record.command,
        record.account,
        str(record.user_id),
        record.dependency if record.dependency else "0",
        str(record.group_id),
        nodes,
        str(record.num_tasks_per_socket) if record.num_tasks_per_socket is not None else "0",
        record.partition,
        str(record.time_limit) if record.time_limit is not None else "0",
        record.qos,
        str(record.num_cpu),
        str(record.num_nodes),
        str(record.num_gpus),
        submit,
    )
    return ", ".join(parts)


_TOKEN_SPLIT = re.compile(r"[,\s/_.]+")
_token_memo: dict[str, tuple[int, float]] = {}


def _token_slot(token: str) -> tuple[int, float]:
    slot = _token_memo.get(token)
    if slot is None:
        raw = token.encode("utf-8")
        bucket = int.from_bytes(
            hashlib.blake2b(raw, digest_size=8, person=b"hfo-bucket").digest(), "big"
        ) % SB_DIM
        sign_bit = hashlib.blake2b(raw, digest_size=8, person=b"hfo-sign").digest()[0] & 1
        slot = (bucket, 1.0 if sign_bit else -1.0)
        _token_memo[token] = slot
    return slot


def hash_embed(text: str, dim: int = SB_DIM) -> np.ndarray:
    """Deterministic signed-hash embedding of a token stream, L2-normalized.

    Tokens are split on commas, whitespace, slashes, underscores and dots.
    Each token adds +-1 to one hashed bucket. A text with no tokens embeds
    as the zero vector, which the cosine distance treats as maximally far.
    """
    vec = np.zeros(dim, dtype=np.float64)
    for token in _TOKEN_SPLIT.split(text):
        if not token:
            continue
        bucket, sign = _token_slot(token)
        vec[bucket % dim] += sign
    norm = np.sqrt(vec @ vec)
    if norm > 0.0:
        vec /= norm
    return vec


class Embedder(Protocol):
    name: str
    dim: int

    def embed(self, text: str) -> np.ndarray: ...

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray: ...


@dataclass
class HashEmbedder:
    """Offline default embedder; same text always yields the same vector."""

    name: str = "hash-v1"
    dim: int = SB_DIM

    def embed(self, text: str) -> np.ndarray:
        return hash_embed(text, self.dim)

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.empty((0, self.dim), dtype=np.float64)
        return np.stack([self.embed(t) for t in texts])


@dataclass
class ExternalEmbedder:
    """Client for an embedding service speaking the /embed protocol.

    POST {url}/embed with {"texts": [...]} must return {"vectors": [[...]],
    "model": str, "dim": int}; GET {url}/health must report {"status": "ok",
    "dim": int}. Batches are chunked client-side so oversize requests never
    reach the service. Any transport or shape problem raises
    EmbedderUnavailable.
    """

    url: str
    timeout: float = 30.0
    max_batch: int = 64
    name: str = field(default="external", init=False)
    dim: int = field(default=SB_DIM, init=False)

    def __post_init__(self):
        self.url = self.url.rstrip("/")

    def _post(self, texts: Sequence[str]) -> np.ndarray:
        import requests

        try:
            resp = requests.post(f"{self.url}/embed", json={"texts": list(texts)}, timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
        except Exception as exc:
            raise EmbedderUnavailable(f"embedder at {self.url} failed: {exc}") from exc
        vectors = payload.get("vectors")
        if vectors is None or len(vectors) != len(texts):
            raise EmbedderUnavailable(f"embedder at {self.url} returned {0 if vectors is None else len(vectors)} vectors for {len(texts)} texts")
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != self.dim or int(payload.get("dim", -1)) != self.dim:
            raise EmbedderUnavailable(f"embedder at {self.url} returned dim {payload.get('dim')}, expected {self.dim}")
        if not np.all(np.isfinite(arr)):
            raise EmbedderUnavailable(f"embedder at {self.url} returned non-finite values")
        self.name = str(payload.get("model", "external"))
        return arr

    def embed(self, text: str) -> np.ndarray:
        return self._post([text])[0]

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.empty((0, self.dim), dtype=np.float64)
        chunks = [
            self._post(texts[i : i + self.max_batch]) for i in range(0, len(texts), self.max_batch)
        ]
        return np.concatenate(chunks, axis=0)

    def validate(self) -> None:
        """Check health and determinism before a run; raise if unusable."""
        import requests

        try:
            resp = requests.get(f"{self.url}/health", timeout=self.timeout)
            resp.raise_for_status()
            payload = resp.json()
        except Exception as exc:
            raise EmbedderUnavailable(f"embedder health check at {self.url} failed: {exc}") from exc
        if payload.get("status") != "ok" or int(payload.get("dim", -1)) != self.dim:
            raise EmbedderUnavailable(f"embedder at {self.url} unhealthy: {payload}")
        probe = "probe, 0, probe_0, 1970-01-01 00:00:00"
        first = self._post([probe])
        second = self._post([probe])
        if not np.array_equal(first, second):
            raise EmbedderUnavailable(f"embedder at {self.url} is not deterministic")


class SbEncoder:
    """Job-string encoder over a pluggable embedder, stateless across jobs."""

    dim = SB_DIM

    def __init__(self, embedder: Optional[Embedder] = None):
        self.embedder = embedder if embedder is not None else HashEmbedder()

    def transform(self, record: JobRecord) -> np.ndarray:
        return self.embedder.embed(render_job_string(record))

    def transform_matrix(self, records: Sequence[JobRecord]) -> np.ndarray:
        if not records:
            return np.empty((0, SB_DIM), dtype=np.float64)
        return self.embedder.embed_batch([render_job_string(r) for r in records])

    def feature_vector(self, record: JobRecord) -> FeatureVector:
        return FeatureVector(self.transform(record), Encoding.SB)
