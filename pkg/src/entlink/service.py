"""Minimal HTTP annotation service over a shared engine.

POST /annotate with ``{"text": ..., "language": optional}`` returns the
annotated record; GET /health reports dictionary statistics.  Concurrent
requests are bounded by the configured worker count.
"""

from __future__ import annotations

import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .core import Engine, EngineError, UnsupportedLanguageError, record_to_json


class AnnotationServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], engine: Engine | None, workers: int = 1):
        super().__init__(address, AnnotationHandler)
        self.engine = engine
        self.semaphore = threading.BoundedSemaphore(max(1, workers))


class AnnotationHandler(BaseHTTPRequestHandler):
    server: AnnotationServer

    def log_message(self, format: str, *args) -> None:  # quiet by default
        pass

    def _send(self, status: int, payload: dict | str) -> None:
        body = payload if isinstance(payload, str) else json.dumps(
            payload, ensure_ascii=False, sort_keys=True, separators=(",", ":")
        )
        data = body.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self) -> None:
        if self.path != "/health":
            self._send(404, {"error": "not found"})
            return
        engine = self.server.engine
        if engine is None:
            self._send(503, {"status": "loading"})
            return
        stats = engine.dicts.stats()
        stats["status"] = "ok"
        stats["models_loaded"] = engine.models is not None
        stats["resident_dictionary_bytes"] = _deep_size(engine.dicts)
        self._send(200, stats)

    def do_POST(self) -> None:
        if self.path != "/annotate":
            self._send(404, {"error": "not found"})
            return
        engine = self.server.engine
        if engine is None:
            self._send(503, {"error": "engine not ready"})
            return
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw.strip():
            self._send(400, {"error": "empty request body"})
            return
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError:
            self._send(400, {"error": "request body is not valid JSON"})
            return
        text = payload.get("text") if isinstance(payload, dict) else None
        if not isinstance(text, str) or not text.strip():
            self._send(400, {"error": "missing or empty 'text' field"})
            return
        language = payload.get("language")
        with self.server.semaphore:
            try:
                record = engine.annotate(text, language=language).to_record()
            except UnsupportedLanguageError as exc:
                self._send(422, {"error": str(exc)})
                return
            except EngineError as exc:
                self._send(422, {"error": str(exc)})
                return
        self._send(200, record_to_json(record))


def _deep_size(obj, _seen=None) -> int:
    """Rough resident size of the dictionary structures, in bytes."""
    if _seen is None:
        _seen = set()
    if id(obj) in _seen:
        return 0
    _seen.add(id(obj))
    size = sys.getsizeof(obj)
    if isinstance(obj, dict):
        size += sum(_deep_size(k, _seen) + _deep_size(v, _seen) for k, v in obj.items())
    elif isinstance(obj, (list, tuple, set, frozenset)):
        size += sum(_deep_size(item, _seen) for item in obj)
    elif hasattr(obj, "__dict__"):
        size += _deep_size(vars(obj), _seen)
    return size


def create_server(
    engine: Engine | None, host: str = "127.0.0.1", port: int = 0, workers: int = 1
) -> AnnotationServer:
    return AnnotationServer((host, port), engine, workers=workers)


def serve(config, host: str = "127.0.0.1", port: int = 8378, workers: int = 1) -> None:
    """Load the engine from ``config`` and serve until interrupted."""
    from .config import build_engine

    server = create_server(None, host=host, port=port, workers=workers)
    print(f"listening on http://{host}:{server.server_address[1]}", flush=True)
    server.engine = build_engine(config)
    print("engine ready", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
