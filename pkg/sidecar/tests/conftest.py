"""Fixtures: tiny randomly-initialized sentence-transformers built on disk.

The protocol cares about shapes, determinism and transport, not embedding
quality, so a one-layer random-weight model is enough and keeps the suite
fully offline.
"""

from __future__ import annotations

import os
import sys

import pytest
import torch

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

_VOCAB = (
    ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    + list("abcdefghijklmnopqrstuvwxyz0123456789")
    + ["##" + c for c in "abcdefghijklmnopqrstuvwxyz0123456789"]
    + ["job", "run", "sim", "gpu", "cpu", "acct", "sh", ",", "_", ".", "-", "/"]
)


def _build_tiny_model(root, hidden):
    from sentence_transformers import SentenceTransformer, models
    from transformers import BertConfig, BertModel, BertTokenizerFast

    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(_VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file), do_lower_case=True)
    config = BertConfig(
        vocab_size=len(_VOCAB),
        hidden_size=hidden,
        num_hidden_layers=1,
        num_attention_heads=4,
        intermediate_size=2 * hidden,
        max_position_embeddings=128,
    )
    torch.manual_seed(0)
    bert = BertModel(config)
    hf_dir = root / "hf"
    bert.save_pretrained(hf_dir)
    tokenizer.save_pretrained(hf_dir)
    st = SentenceTransformer(
        modules=[models.Transformer(str(hf_dir)), models.Pooling(hidden)], device="cpu"
    )
    out = root / "st"
    st.save(str(out))
    return out


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    return _build_tiny_model(tmp_path_factory.mktemp("tiny384"), hidden=384)


@pytest.fixture(scope="session")
def wrong_dim_model_dir(tmp_path_factory):
    return _build_tiny_model(tmp_path_factory.mktemp("tiny256"), hidden=256)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Replay the sidecar acceptance verdict after capture is torn down."""
    mod = sys.modules.get("test_sidecar_acceptance")
    lines = getattr(mod, "VERDICTS", None)
    if lines:
        terminalreporter.section("sidecar acceptance")
        for line in lines:
            terminalreporter.write_line(line)
