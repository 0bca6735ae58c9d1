"""Remote predictor handles speaking the wire protocol.

A remote predictor satisfies the same contract as the built-in n-gram
models, so decoders cannot tell them apart. Token surfaces arriving from
the server are interned into a session-local id table (ids in
first-seen order); timeouts and transport failures surface as
PredictorError, malformed replies as ProtocolError. Distributions are
never fabricated on failure.
"""

from __future__ import annotations

from .errors import ProtocolError, ValidationError
from .predictor import Distribution
from .protocol import PROTO_VERSION, open_transport


class _Interner:
    def __init__(self):
        self._ids = {}
        self._surfaces = []

    def id_of(self, surface):
        tid = self._ids.get(surface)
        if tid is None:
            tid = len(self._surfaces)
            self._ids[surface] = tid
            self._surfaces.append(surface)
        return tid

    def surface_of(self, tid):
        return self._surfaces[tid]


class RemotePredictor:
    """Client handle for a wire-protocol model server.

    ``mode`` selects which half of the predictor contract the handle
    exposes: "mlm" (predict_masked/predict_masked_many) or "clm"
    (predict_next).
    """

    def __init__(self, endpoint, mode, timeout=30.0):
        if mode not in ("mlm", "clm"):
            raise ValidationError(f"mode must be 'mlm' or 'clm', not {mode!r}")
        self.endpoint = endpoint
        self.mode = mode
        self.timeout = timeout
        self._interner = _Interner()
        self._next_id = 1
        self._transport = open_transport(endpoint, timeout=timeout)
        self._transport.send({"op": "hello", "proto": PROTO_VERSION, "mode": mode})
        reply = self._transport.recv(timeout)
        if reply.get("op") == "error":
            raise ProtocolError(f"handshake rejected: {reply.get('message')}")
        if reply.get("op") != "hello_ok" or reply.get("proto") != PROTO_VERSION:
            raise ProtocolError(f"protocol-version mismatch in handshake: {reply}")

    @property
    def predictor_id(self):
        return f"remote-{self.mode}"

    def token_surface(self, token_id):
        return self._interner.surface_of(token_id)

    def close(self):
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _request(self, obj):
        request_id = self._next_id
        self._next_id += 1
        obj["id"] = request_id
        self._transport.send(obj)
        reply = self._transport.recv(self.timeout)
        if reply.get("op") == "error":
            raise ProtocolError(f"server error: {reply.get('message')}")
        if reply.get("op") != "predictions" or reply.get("id") != request_id:
            raise ProtocolError(f"unexpected reply {reply!r} to request {request_id}")
        return reply

    def _to_distribution(self, raw, position):
        """Validate and intern a [["token", p], ...] reply list.

        Negative probabilities and mass above 1 violate the distribution
        invariants and are protocol errors; unsorted entries are
        re-sorted and accepted.
        """
        if not isinstance(raw, list) or not raw:
            raise ProtocolError(f"empty or malformed prediction list: {raw!r}")
        pairs = []
        for item in raw:
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise ProtocolError(f"malformed prediction entry: {item!r}")
            surface, prob = item
            if not isinstance(surface, str) or not isinstance(prob, (int, float)):
                raise ProtocolError(f"malformed prediction entry: {item!r}")
            if prob < 0:
                raise ProtocolError(f"negative probability for {surface!r}: {prob}")
            pairs.append((self._interner.id_of(surface), float(prob)))
        merged = {}
        for tid, prob in pairs:
            merged[tid] = merged.get(tid, 0.0) + prob
        if sum(merged.values()) > 1.0 + 1e-9:
            raise ProtocolError("prediction probabilities sum above 1")
        return Distribution.from_scores(merged.items(), position=position)

    # MLM half

    def predict_masked_many(self, masked, positions, top_k=10):
        if self.mode != "mlm":
            raise ValidationError("predict_masked requires an mlm-mode handle")
        positions = list(positions)
        reply = self._request(
            {
                "op": "predict_masked",
                "tokens": masked.prompt_surfaces(),
                "positions": positions,
                "top_k": top_k,
            }
        )
        at = reply.get("at")
        if not isinstance(at, dict):
            raise ProtocolError(f"reply missing 'at' map: {reply!r}")
        out = {}
        for position in positions:
            raw = at.get(str(position))
            if raw is None:
                raise ProtocolError(f"reply missing position {position}")
            out[position] = self._to_distribution(raw, position)
        return out

    def predict_masked(self, masked, position, top_k=10):
        return self.predict_masked_many(masked, [position], top_k=top_k)[position]

    # CLM half

    def predict_next(self, prefix, context=None, top_k=10):
        if self.mode != "clm":
            raise ValidationError("predict_next requires a clm-mode handle")
        surfaces = []
        if context is not None:
            surfaces = context.surfaces if hasattr(context, "surfaces") else list(context)
        reply = self._request(
            {
                "op": "predict_next",
                "prefix": list(prefix),
                "context": list(surfaces),
                "top_k": top_k,
            }
        )
        raw = reply.get("next")
        if raw is None:
            raise ProtocolError(f"reply missing 'next' list: {reply!r}")
        return self._to_distribution(raw, position=len(list(prefix)))
