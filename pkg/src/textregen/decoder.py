"""The two generation regimes.

Infilling: repeatedly score every remaining masked position, commit the
single most confident one (ties: lowest position, then lowest token id),
and let the committed token become context for later queries. All
remaining positions are re-scored after every commit; corpora are small
enough that the quadratic cost is acceptable and the semantics stay
exact.

Left-to-right: emit tokens from BOS, each conditioned on the emitted
prefix and the conditioning context set, until EOS is emitted or the
length cap ceil(length_cap_factor * original_length) is reached. At
least one token is always emitted (EOS is skipped at the first step) so
a generation is never empty, which also keeps the metric preconditions
satisfiable on degenerate contexts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corruption import MaskingStrategy
from .errors import DecodeError, PredictorError, ProtocolError, ValidationError
from .tokenizer import EOS_TOKEN, TokenSequence, detokenize, load_stopwords, make_token


@dataclass(frozen=True)
class DecodePolicy:
    mode: str = "greedy"  # greedy | sample
    temperature: float = 1.0
    top_k: int = 10
    length_cap_factor: float = 1.25
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("greedy", "sample"):
            raise ValidationError(f"unknown decode mode {self.mode!r}")
        if self.top_k < 1:
            raise ValidationError("top_k must be >= 1")
        if self.mode == "sample" and self.temperature <= 0:
            raise ValidationError("temperature must be > 0")
        if self.length_cap_factor <= 0:
            raise ValidationError("length_cap_factor must be > 0")


@dataclass(frozen=True)
class GenerationRecord:
    """One regenerated text with its per-step commit trace."""

    doc_id: str
    regime: str  # mlm | clm
    strategy: MaskingStrategy
    output_tokens: TokenSequence
    steps: tuple  # (step#, position, surface, confidence)
    seed: int
    predictor_id: str

    @property
    def output_text(self):
        return detokenize(self.output_tokens)

    def to_json_obj(self):
        ratio = self.strategy.ratio if self.strategy.kind == "random" else None
        return {
            "doc_id": self.doc_id,
            "regime": self.regime,
            "strategy": self.strategy.kind,
            "ratio": ratio,
            "seed": self.seed,
            "predictor_id": self.predictor_id,
            "output": self.output_text,
            "output_surfaces": list(self.output_tokens.surfaces),
            "steps": [[s, p, t, c] for s, p, t, c in self.steps],
        }


def record_from_json_obj(obj, stopwords=None):
    if stopwords is None:
        stopwords = load_stopwords()
    strategy = MaskingStrategy(obj["strategy"], obj.get("ratio"))
    tokens = tuple(make_token(s, stopwords) for s in obj["output_surfaces"])
    return GenerationRecord(
        doc_id=obj["doc_id"],
        regime=obj["regime"],
        strategy=strategy,
        output_tokens=TokenSequence(tokens, doc_id=obj["doc_id"]),
        steps=tuple((s, p, t, c) for s, p, t, c in obj["steps"]),
        seed=obj["seed"],
        predictor_id=obj.get("predictor_id", ""),
    )


def _pick(dist, policy, rng, skip_eos_surface=None, token_surface=None):
    """Choose an entry from a distribution under the policy.

    Returns (token_id, confidence) where confidence is the probability
    of the distribution's top entry (the position-ranking criterion).
    """
    entries = dist.entries
    if skip_eos_surface is not None:
        entries = tuple(e for e in entries if token_surface(e[0]) != skip_eos_surface)
        if not entries:
            return None  # caller re-queries with a larger top_k
    if policy.mode == "greedy" or len(entries) == 1:
        return entries[0][0], dist.confidence
    probs = np.array([p for _, p in entries], dtype=float)
    if probs.sum() <= 0:
        return entries[0][0], dist.confidence
    probs = probs ** (1.0 / policy.temperature)
    probs /= probs.sum()
    idx = int(rng.choice(len(entries), p=probs))
    return entries[idx][0], dist.confidence


def infill(masked, model, policy=None):
    """Confidence-ordered iterative infilling of a masked sequence.

    Exactly one commit per iteration; the step count equals the initial
    mask count and kept slots are passed through untouched. A zero-mask
    input returns the identity record with an empty trace.
    """
    if policy is None:
        policy = DecodePolicy()
    stopwords = load_stopwords()
    rng = np.random.default_rng(int(policy.seed))
    working = masked
    remaining = set(masked.masked_positions)
    steps = []
    step = 1
    try:
        while remaining:
            dists = model.predict_masked_many(
                working, sorted(remaining), top_k=policy.top_k
            )
            position, dist = min(
                dists.items(), key=lambda kv: (-kv[1].confidence, kv[0], kv[1].argmax)
            )
            token_id, confidence = _pick(dist, policy, rng)
            surface = model.token_surface(token_id)
            working = working.with_committed(position, make_token(surface, stopwords))
            steps.append((step, position, surface, confidence))
            remaining.discard(position)
            step += 1
    except (PredictorError, ProtocolError) as exc:
        raise DecodeError(f"predictor failed mid-infill: {exc}", partial_steps=steps) from exc
    output = TokenSequence(
        tuple(slot.token for slot in working.slots), doc_id=masked.doc_id
    )
    return GenerationRecord(
        doc_id=masked.doc_id,
        regime="mlm",
        strategy=masked.strategy,
        output_tokens=output,
        steps=tuple(steps),
        seed=policy.seed,
        predictor_id=model.predictor_id,
    )


def generate_causal(context, original_length, model, policy=None):
    """Left-to-right generation conditioned on the kept-token context."""
    if policy is None:
        policy = DecodePolicy()
    if original_length < 1:
        raise ValidationError("original_length must be >= 1")
    stopwords = load_stopwords()
    rng = np.random.default_rng(int(policy.seed))
    cap = math.ceil(policy.length_cap_factor * original_length - 1e-9)
    context_surfaces = list(context.surfaces) if context is not None else []
    prefix = []
    tokens = []
    steps = []
    try:
        while len(tokens) < cap:
            top_k = policy.top_k
            while True:
                dist = model.predict_next(prefix, context_surfaces, top_k=top_k)
                picked = _pick(
                    dist,
                    policy,
                    rng,
                    skip_eos_surface=EOS_TOKEN if not tokens else None,
                    token_surface=model.token_surface,
                )
                if picked is not None:
                    break
                if top_k >= 1 << 16:
                    raise PredictorError(
                        "predictor offers only end-of-sequence at the first step"
                    )
                top_k *= 2  # first step returned only EOS; widen and retry
            token_id, confidence = picked
            surface = model.token_surface(token_id)
            if surface == EOS_TOKEN:
                steps.append((len(steps) + 1, len(tokens), surface, confidence))
                break
            tokens.append(make_token(surface, stopwords))
            prefix.append(surface)
            steps.append((len(steps) + 1, len(tokens) - 1, surface, confidence))
    except (PredictorError, ProtocolError) as exc:
        raise DecodeError(f"predictor failed mid-generation: {exc}", partial_steps=steps) from exc
    doc_id = context.doc_id if context is not None else ""
    strategy = context.strategy if context is not None else MaskingStrategy("random", 1.0)
    output = TokenSequence(tuple(tokens), doc_id=doc_id)
    return GenerationRecord(
        doc_id=doc_id,
        regime="clm",
        strategy=strategy,
        output_tokens=output,
        steps=tuple(steps),
        seed=policy.seed,
        predictor_id=model.predictor_id,
    )
