"""HTTP sidecar exposing a sentence encoder behind the hfo embedder protocol."""

from .service import DEFAULT_MODEL, EMBED_DIM, SidecarConfig, build_app, load_encoder

__all__ = ["DEFAULT_MODEL", "EMBED_DIM", "SidecarConfig", "build_app", "load_encoder"]
