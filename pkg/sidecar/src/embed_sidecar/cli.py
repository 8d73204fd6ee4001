"""Command-line launcher: load the model, refuse to start if that fails."""

from __future__ import annotations

import argparse
import sys

from .service import DEFAULT_MODEL, SidecarConfig, build_app, load_encoder


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="embed-sidecar", description="serve sentence embeddings over HTTP")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8230)
    parser.add_argument("--model", default=DEFAULT_MODEL, help="sentence-transformers model id or local path")
    parser.add_argument("--max-batch", type=int, default=64)
    args = parser.parse_args(argv)

    try:
        config = SidecarConfig(host=args.host, port=args.port, model_id=args.model, max_batch=args.max_batch)
        encoder = load_encoder(config)
    except Exception as exc:
        print(f"error: cannot serve model {args.model!r}: {exc}", file=sys.stderr)
        return 1

    import uvicorn

    uvicorn.run(build_app(config, encoder), host=config.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
