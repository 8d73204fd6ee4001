"""Embedding service speaking the hfo external-embedder protocol.

Endpoints:
    GET  /health                  -> {"status": "ok", "dim": 384}
    POST /embed {"texts": [...]}  -> {"vectors": [[384 floats], ...],
                                      "model": str, "dim": 384}

Vectors for the same text are bitwise identical across requests within one
process lifetime. Oversized batches are refused with 413 instead of being
split server-side; the client already chunks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import torch
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

EMBED_DIM = 384
DEFAULT_MODEL = "sentence-transformers/all-MiniLM-L6-v2"


@dataclass(frozen=True)
class SidecarConfig:
    host: str = "127.0.0.1"
    port: int = 8230
    model_id: str = DEFAULT_MODEL
    max_batch: int = 64

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")
        if not (0 <= self.port <= 65535):
            raise ValueError(f"port out of range: {self.port}")


def load_encoder(config: SidecarConfig):
    """Load the sentence encoder or raise; the caller refuses to serve on failure."""
    from sentence_transformers import SentenceTransformer

    encoder = SentenceTransformer(config.model_id, device="cpu")
    encoder.eval()
    if hasattr(encoder, "get_embedding_dimension"):
        dim = encoder.get_embedding_dimension()
    else:  # sentence-transformers < 5 spells it differently
        dim = encoder.get_sentence_embedding_dimension()
    if dim != EMBED_DIM:
        raise ValueError(f"model {config.model_id!r} produces {dim}-dim vectors, protocol requires {EMBED_DIM}")
    return encoder


class EmbedRequest(BaseModel):
    texts: List[str]


def build_app(config: SidecarConfig, encoder) -> FastAPI:
    app = FastAPI(title="embed-sidecar")

    @app.get("/health")
    def health():
        return {"status": "ok", "dim": EMBED_DIM}

    @app.post("/embed")
    def embed(req: EmbedRequest):
        if len(req.texts) > config.max_batch:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(req.texts)} texts exceeds maximum of {config.max_batch}",
            )
        with torch.inference_mode():
            # one text per forward pass: padding a batch changes the float
            # reduction order, and the protocol promises bitwise-stable
            # vectors regardless of what a text happens to share a request with
            rows = [
                encoder.encode(text, convert_to_numpy=True, show_progress_bar=False)
                for text in req.texts
            ]
        return {
            "vectors": [[float(v) for v in row] for row in rows],
            "model": config.model_id,
            "dim": EMBED_DIM,
        }

    return app
