"""Minimal in-process HTTP endpoint for exercising the inference client.

The responder callable receives (body, request_index) and returns
(status_code, payload); dict payloads are sent as JSON, strings as raw
text. Request bodies, headers, and a high-water mark of concurrent
in-flight requests are recorded for assertions.
"""
from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable


class StubEndpoint:
    def __init__(self, respond: Callable[[dict, int], tuple[int, object]], delay: float = 0.0):
        self.respond = respond
        self.delay = delay
        self.requests: list[dict] = []
        self.headers: list[dict] = []
        self.max_in_flight = 0
        self._in_flight = 0
        self._lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self) -> None:
                with stub._lock:
                    stub._in_flight += 1
                    stub.max_in_flight = max(stub.max_in_flight, stub._in_flight)
                    length = int(self.headers.get("Content-Length") or 0)
                    body = json.loads(self.rfile.read(length)) if length else {}
                    index = len(stub.requests)
                    stub.requests.append(body)
                    stub.headers.append({k: v for k, v in self.headers.items()})
                try:
                    if stub.delay:
                        time.sleep(stub.delay)
                    status, payload = stub.respond(body, index)
                    if isinstance(payload, str):
                        data = payload.encode("utf-8")
                        content_type = "text/plain"
                    else:
                        data = json.dumps(payload).encode("utf-8")
                        content_type = "application/json"
                    self.send_response(status)
                    self.send_header("Content-Type", content_type)
                    self.send_header("Content-Length", str(len(data)))
                    self.end_headers()
                    self.wfile.write(data)
                finally:
                    with stub._lock:
                        stub._in_flight -= 1

            def log_message(self, *args) -> None:
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self._server.server_address[1]}/generate"
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> "StubEndpoint":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
