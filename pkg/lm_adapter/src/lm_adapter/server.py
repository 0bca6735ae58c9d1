"""Protocol server loop.

Speaks newline-delimited JSON over stdio (default) or a TCP listener:

    handshake -> {"op":"hello","proto":1,"mode":"mlm"|"clm"}
    reply     <- {"op":"hello_ok","proto":1}
    MLM       -> {"op":"predict_masked","id":n,"tokens":[...],"positions":[...],"top_k":K}
              <- {"op":"predictions","id":n,"at":{"<i>":[["word",p],...]}}
    CLM       -> {"op":"predict_next","id":n,"prefix":[...],"context":[...],"top_k":K}
              <- {"op":"predictions","id":n,"next":[["word",p],...]}
    errors    <- {"op":"error","id":n,"message":...}

One request in flight per connection; the TCP listener serves each
connection on its own thread. Inputs longer than the configured maximum
sequence length (512) are rejected with an error naming the cap.
"""

from __future__ import annotations

import argparse
import json
import socketserver
import sys

from .config import AdapterConfig
from .models import load_model

PROTO_VERSION = 1


def _error(request_id, message):
    return {"op": "error", "id": request_id, "message": message}


class Session:
    """Protocol state machine for one connection."""

    def __init__(self, config, model):
        self.config = config
        self.model = model
        self.ready = False

    def handle(self, msg):
        op = msg.get("op")
        request_id = msg.get("id")
        if op == "hello":
            if msg.get("proto") != PROTO_VERSION:
                return _error(
                    request_id,
                    f"unsupported protocol version {msg.get('proto')}; "
                    f"server speaks {PROTO_VERSION}",
                )
            if msg.get("mode") != self.config.mode:
                return _error(
                    request_id,
                    f"server is configured for mode {self.config.mode!r}, "
                    f"client asked for {msg.get('mode')!r}",
                )
            self.ready = True
            return {"op": "hello_ok", "proto": PROTO_VERSION}
        if not self.ready:
            return _error(request_id, "handshake required before requests")
        if op == "predict_masked":
            return self._predict_masked(msg, request_id)
        if op == "predict_next":
            return self._predict_next(msg, request_id)
        return _error(request_id, f"unknown op {op!r}")

    def _check_length(self, n, request_id):
        if n > self.config.max_len:
            return _error(
                request_id,
                f"input of {n} tokens exceeds the maximum sequence length "
                f"of {self.config.max_len} tokens",
            )
        return None

    def _predict_masked(self, msg, request_id):
        if self.config.mode != "mlm":
            return _error(request_id, "server is not in mlm mode")
        tokens = msg.get("tokens")
        positions = msg.get("positions")
        if not isinstance(tokens, list) or not isinstance(positions, list):
            return _error(request_id, "predict_masked needs 'tokens' and 'positions'")
        over = self._check_length(len(tokens), request_id)
        if over:
            return over
        bad = [p for p in positions if not isinstance(p, int) or not 0 <= p < len(tokens)]
        if bad:
            return _error(request_id, f"positions out of range: {bad[:5]}")
        top_k = int(msg.get("top_k", self.config.top_k))
        predictions = self.model.predict_masked(tokens, positions, top_k)
        return {
            "op": "predictions",
            "id": request_id,
            "at": {str(p): [[w, float(pr)] for w, pr in predictions[p]] for p in positions},
        }

    def _predict_next(self, msg, request_id):
        if self.config.mode != "clm":
            return _error(request_id, "server is not in clm mode")
        prefix = msg.get("prefix")
        context = msg.get("context", [])
        if not isinstance(prefix, list) or not isinstance(context, list):
            return _error(request_id, "predict_next needs 'prefix' (and list 'context')")
        over = self._check_length(len(prefix) + len(context), request_id)
        if over:
            return over
        top_k = int(msg.get("top_k", self.config.top_k))
        predictions = self.model.predict_next(prefix, context, top_k)
        return {
            "op": "predictions",
            "id": request_id,
            "next": [[w, float(p)] for w, p in predictions],
        }


def _serve_stream(config, model, rfile, wfile):
    session = Session(config, model)
    for line in rfile:
        if not line.strip():
            continue
        try:
            msg = json.loads(line)
            if not isinstance(msg, dict):
                raise ValueError("message must be an object")
        except ValueError as exc:
            reply = _error(None, f"malformed message: {exc}")
        else:
            try:
                reply = session.handle(msg)
            except ValueError as exc:
                reply = _error(msg.get("id"), str(exc))
        wfile.write(json.dumps(reply) + "\n")
        wfile.flush()


def serve(config):
    """Run the server until EOF (stdio) or interrupt (TCP)."""
    model = load_model(config)
    if config.listen is None:
        _serve_stream(config, model, sys.stdin, sys.stdout)
        return

    host, _, port = config.listen.rpartition(":")

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            rfile = (line.decode("utf-8") for line in self.rfile)
            _serve_stream(config, model, rfile, _SocketWriter(self.wfile))

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    with Server((host or "127.0.0.1", int(port)), Handler) as server:
        print(f"listening on {server.server_address[0]}:{server.server_address[1]}",
              file=sys.stderr, flush=True)
        server.serve_forever()


class _SocketWriter:
    def __init__(self, wfile):
        self._wfile = wfile

    def write(self, text):
        self._wfile.write(text.encode("utf-8"))

    def flush(self):
        self._wfile.flush()


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="lm-adapter",
        description="Expose a masked or causal language model (or the "
        "deterministic stub) as a wire-protocol predictor server.",
    )
    parser.add_argument("--model", default="stub",
                        help="'stub' or a transformers model identifier")
    parser.add_argument("--mode", choices=("mlm", "clm"), default="mlm")
    parser.add_argument("--top-k", type=int, default=10)
    parser.add_argument("--listen", help="host:port TCP listener (default: stdio)")
    parser.add_argument("--max-len", type=int, default=512)
    args = parser.parse_args(argv)
    config = AdapterConfig(
        model=args.model, mode=args.mode, top_k=args.top_k,
        listen=args.listen, max_len=args.max_len,
    )
    serve(config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
