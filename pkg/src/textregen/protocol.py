"""Wire protocol transport: newline-delimited JSON over a stream socket
or a subprocess stdio pipe.

Message flow (one request in flight per connection):

    handshake -> {"op":"hello","proto":1,"mode":"mlm"|"clm"}
    reply     <- {"op":"hello_ok","proto":1}
    MLM       -> {"op":"predict_masked","id":n,"tokens":[...],"positions":[i,...],"top_k":K}
              <- {"op":"predictions","id":n,"at":{"<i>":[["token",p],...]}}
    CLM       -> {"op":"predict_next","id":n,"prefix":[...],"context":[...],"top_k":K}
              <- {"op":"predictions","id":n,"next":[["token",p],...]}
    errors    <- {"op":"error","id":n,"message":...}

Endpoints: ``tcp://host:port`` connects a socket; ``stdio:<command>``
spawns the command and speaks over its stdin/stdout. The surface
"[EOS]" is the end-of-generation marker for CLM replies; "[MASK]"
marks hidden slots in MLM requests.
"""

from __future__ import annotations

import json
import selectors
import shlex
import socket
import subprocess

from .errors import PredictorError, ProtocolError

PROTO_VERSION = 1


class Transport:
    """Line-oriented JSON message channel."""

    def send(self, obj):
        raise NotImplementedError

    def recv(self, timeout):
        raise NotImplementedError

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class TcpTransport(Transport):
    def __init__(self, host, port, timeout=30.0):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise PredictorError(f"cannot connect to {host}:{port}: {exc}") from exc
        self._rfile = self._sock.makefile("r", encoding="utf-8", newline="\n")

    def send(self, obj):
        try:
            self._sock.sendall((json.dumps(obj) + "\n").encode("utf-8"))
        except OSError as exc:
            raise PredictorError(f"send failed: {exc}") from exc

    def recv(self, timeout):
        self._sock.settimeout(timeout)
        try:
            line = self._rfile.readline()
        except (OSError, socket.timeout) as exc:
            raise PredictorError(f"receive failed: {exc}") from exc
        if not line:
            raise PredictorError("connection closed by server")
        return _parse_line(line)

    def close(self):
        try:
            self._rfile.close()
            self._sock.close()
        except OSError:
            pass


class StdioTransport(Transport):
    def __init__(self, command):
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise PredictorError(f"cannot spawn {command!r}: {exc}") from exc
        self._selector = selectors.DefaultSelector()
        self._selector.register(self._proc.stdout, selectors.EVENT_READ)

    def send(self, obj):
        if self._proc.poll() is not None:
            raise PredictorError("predictor subprocess exited")
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise PredictorError(f"send failed: {exc}") from exc

    def recv(self, timeout):
        if not self._selector.select(timeout):
            raise PredictorError(f"no reply within {timeout}s")
        line = self._proc.stdout.readline()
        if not line:
            raise PredictorError("predictor subprocess closed its output")
        return _parse_line(line)

    def close(self):
        self._selector.close()
        if self._proc.poll() is None:
            self._proc.stdin.close()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()


def _parse_line(line):
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed protocol line: {line!r}") from exc
    if not isinstance(obj, dict) or "op" not in obj:
        raise ProtocolError(f"protocol message must be an object with 'op': {line!r}")
    return obj


def open_transport(endpoint, timeout=30.0):
    """``tcp://host:port`` or ``stdio:<command>``."""
    if endpoint.startswith("tcp://"):
        rest = endpoint[len("tcp://") :]
        host, _, port = rest.rpartition(":")
        if not host or not port.isdigit():
            raise ProtocolError(f"bad tcp endpoint {endpoint!r}")
        return TcpTransport(host, int(port), timeout=timeout)
    if endpoint.startswith("stdio:"):
        return StdioTransport(endpoint[len("stdio:") :])
    raise ProtocolError(
        f"unknown endpoint {endpoint!r}; expected tcp://host:port or stdio:<command>"
    )
