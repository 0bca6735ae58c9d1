"""Model backends.

Every backend answers two queries in word-level terms:

    predict_masked(tokens, positions, top_k) -> {position: [(word, p), ...]}
    predict_next(prefix, context, top_k)     -> [(word, p), ...]

``tokens`` uses "[MASK]" markers for hidden slots; "[EOS]" in a
predict_next reply signals end of generation.

The transformers backends map the pipeline's word-level tokens onto the
model's own subword tokenization internally: a word's probability is
the probability of its first subtoken continuation, renormalized over
the returned top_k. This convention is approximate (documented), but it
keeps the wire format purely word-level.
"""

from __future__ import annotations

MASK_MARKER = "[MASK]"
EOS_MARKER = "[EOS]"


class StubModel:
    """Deterministic uniform-distribution model: no weights, no network.

    Returns the first ``top_k`` words of a fixed vocabulary, each with
    probability 1/len(vocab), for every query. Useful for protocol
    conformance checks and CI.
    """

    VOCAB = (
        "alpha", "bravo", "charlie", "delta", "echo", "foxtrot",
        "golf", "hotel", "india", "juliet", "kilo", "lima",
    )

    def __init__(self, mode):
        self.mode = mode

    def _uniform(self, top_k):
        p = 1.0 / len(self.VOCAB)
        return [(w, p) for w in self.VOCAB[: max(1, min(top_k, len(self.VOCAB)))]]

    def predict_masked(self, tokens, positions, top_k):
        return {pos: self._uniform(top_k) for pos in positions}

    def predict_next(self, prefix, context, top_k):
        return self._uniform(top_k)


class TransformersMaskedLM:
    """Fill-mask bridge for encoder models (BERT-family)."""

    def __init__(self, model_id):
        import torch
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForMaskedLM.from_pretrained(model_id)
        self.model.eval()
        self.mode = "mlm"

    def predict_masked(self, tokens, positions, top_k):
        torch = self._torch
        words = [
            self.tokenizer.mask_token if t == MASK_MARKER else t for t in tokens
        ]
        encoding = self.tokenizer(
            " ".join(words), return_tensors="pt", truncation=True
        )
        input_ids = encoding["input_ids"][0]
        mask_id = self.tokenizer.mask_token_id
        # i-th mask subtoken corresponds to the i-th requested position,
        # in slot order
        mask_slots = [i for i, t in enumerate(tokens) if t == MASK_MARKER]
        subtoken_rows = (input_ids == mask_id).nonzero(as_tuple=True)[0].tolist()
        row_of = dict(zip(mask_slots, subtoken_rows))
        with torch.no_grad():
            logits = self.model(**encoding).logits[0]
        out = {}
        for pos in positions:
            row = row_of.get(pos)
            if row is None:
                out[pos] = []
                continue
            probs = torch.softmax(logits[row], dim=-1)
            values, indices = torch.topk(probs, top_k)
            total = float(values.sum())
            pairs = []
            for v, idx in zip(values.tolist(), indices.tolist()):
                word = self.tokenizer.decode([idx]).strip().lower()
                if word:
                    pairs.append((word, v / total if total > 0 else 0.0))
            out[pos] = pairs
        return out

    def predict_next(self, prefix, context, top_k):
        raise ValueError("masked-language model cannot serve clm requests")


class TransformersCausalLM:
    """Next-token bridge for decoder models."""

    def __init__(self, model_id):
        import torch
        from transformers import AutoModelForCausalLM, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForCausalLM.from_pretrained(model_id)
        self.model.eval()
        self.mode = "clm"

    def predict_masked(self, tokens, positions, top_k):
        raise ValueError("causal model cannot serve mlm requests")

    def predict_next(self, prefix, context, top_k):
        torch = self._torch
        text = " ".join(list(context) + ["\n"] + list(prefix)) if context else " ".join(prefix)
        if not text:
            text = self.tokenizer.bos_token or ""
        encoding = self.tokenizer(text, return_tensors="pt", truncation=True)
        with torch.no_grad():
            logits = self.model(**encoding).logits[0, -1]
        probs = torch.softmax(logits, dim=-1)
        values, indices = torch.topk(probs, top_k)
        total = float(values.sum())
        pairs = []
        for v, idx in zip(values.tolist(), indices.tolist()):
            word = self.tokenizer.decode([idx]).strip().lower()
            if idx == self.tokenizer.eos_token_id:
                word = EOS_MARKER
            if word:
                pairs.append((word, v / total if total > 0 else 0.0))
        return pairs


def load_model(config):
    if config.model == "stub":
        return StubModel(config.mode)
    if config.mode == "mlm":
        return TransformersMaskedLM(config.model)
    return TransformersCausalLM(config.model)
