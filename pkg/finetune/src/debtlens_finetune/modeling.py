"""Base model and tokenizer resolution.

When the configured base identifier is loadable (local path or cache) its
pretrained weights and tokenizer are used. Otherwise a compact RoBERTa-class
encoder is built with random initialization and a byte-level BPE tokenizer is
trained on the bundle's own texts; the export card records which path ran.
"""

from __future__ import annotations

import logging

logger = logging.getLogger(__name__)

FALLBACK_VOCAB_SIZE = 4096
FALLBACK_LEARNING_RATE = 1e-3  # random init needs a real learning rate
PRETRAINED_LEARNING_RATE = 2e-5

SPECIAL_TOKENS = ["<s>", "<pad>", "</s>", "<unk>"]


def train_tokenizer(texts: list[str], vocab_size: int = FALLBACK_VOCAB_SIZE):
    from tokenizers import Tokenizer, models, pre_tokenizers, trainers

    tok = Tokenizer(models.BPE(unk_token="<unk>"))
    tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=True)
    trainer = trainers.BpeTrainer(
        vocab_size=vocab_size,
        special_tokens=SPECIAL_TOKENS,
        show_progress=False,
        initial_alphabet=pre_tokenizers.ByteLevel.alphabet(),
    )
    tok.train_from_iterator(texts, trainer)
    return tok


def prepare_base(
    identifier: str, num_labels: int, texts: list[str], seed: int, max_length: int
):
    """(make_model, tokenizer, provenance, default_lr).

    make_model() returns a freshly initialized model; calling it again gives
    an identical starting point, so every CV fold and the final refit begin
    from the same weights. tokenizer is a tokenizers.Tokenizer either way.
    """
    import torch
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    try:
        AutoModelForSequenceClassification.from_pretrained(identifier, num_labels=num_labels)
        hf_tok = AutoTokenizer.from_pretrained(identifier, use_fast=True)
        tokenizer = hf_tok.backend_tokenizer

        def make_pretrained():
            return AutoModelForSequenceClassification.from_pretrained(
                identifier, num_labels=num_labels
            )

        logger.info("loaded pretrained base %s", identifier)
        return make_pretrained, tokenizer, f"pretrained:{identifier}", PRETRAINED_LEARNING_RATE
    except Exception as exc:
        logger.warning(
            "base model %r unavailable (%s); building a random-init RoBERTa-class "
            "encoder instead", identifier, str(exc).splitlines()[0][:120],
        )
    from transformers import RobertaConfig, RobertaForSequenceClassification

    tokenizer = train_tokenizer(texts)
    config = RobertaConfig(
        vocab_size=tokenizer.get_vocab_size(),
        hidden_size=128,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=256,
        max_position_embeddings=max_length + 2,
        num_labels=num_labels,
        pad_token_id=tokenizer.token_to_id("<pad>"),
        bos_token_id=tokenizer.token_to_id("<s>"),
        eos_token_id=tokenizer.token_to_id("</s>"),
    )

    def make_random_init():
        torch.manual_seed(seed)
        return RobertaForSequenceClassification(config)

    return make_random_init, tokenizer, "random-init", FALLBACK_LEARNING_RATE


class LogitsGraph:
    """Builds the traceable inference wrapper lazily (torch import stays local)."""

    @staticmethod
    def build(model):
        import torch

        class _Wrapper(torch.nn.Module):
            def __init__(self, inner):
                super().__init__()
                self.inner = inner

            def forward(self, input_ids):
                attention_mask = torch.ones_like(input_ids)
                return self.inner(input_ids=input_ids, attention_mask=attention_mask).logits

        return _Wrapper(model)
