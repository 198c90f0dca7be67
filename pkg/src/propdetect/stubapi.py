"""In-process stub of the Telegram Bot HTTP API for tests and demos.

Implements the three routes the moderation bot uses: long-poll getUpdates,
deleteMessage, and banChatMember. Records every acting call so tests can
assert exactly what the bot did. Optionally injects transient failures to
exercise retry logic.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse


@dataclass
class StubState:
    token: str
    updates: list[dict] = field(default_factory=list)
    calls: list[tuple[str, dict]] = field(default_factory=list)
    fail_next: int = 0          # respond 500 to this many acting calls
    lock: threading.Lock = field(default_factory=threading.Lock)
    event: threading.Event = field(default_factory=threading.Event)

    def push_update(self, update: dict) -> None:
        with self.lock:
            update = dict(update)
            update.setdefault("update_id", len(self.updates) + 1)
            self.updates.append(update)
        self.event.set()

    def acting_calls(self, method: str | None = None) -> list[tuple[str, dict]]:
        with self.lock:
            if method is None:
                return list(self.calls)
            return [(m, p) for m, p in self.calls if m == method]


class _Handler(BaseHTTPRequestHandler):
    state: StubState

    def log_message(self, fmt, *args):  # keep test output clean
        pass

    def _respond(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _route(self) -> tuple[str, str] | None:
        parts = urlparse(self.path)
        segments = [s for s in parts.path.split("/") if s]
        if len(segments) != 2 or not segments[0].startswith("bot"):
            return None
        return segments[0][3:], segments[1]

    def do_GET(self):
        route = self._route()
        if route is None:
            return self._respond(404, {"ok": False, "error_code": 404})
        token, method = route
        if token != self.state.token:
            return self._respond(401, {"ok": False, "error_code": 401,
                                       "description": "Unauthorized"})
        if method != "getUpdates":
            return self._respond(404, {"ok": False, "error_code": 404})
        query = parse_qs(urlparse(self.path).query)
        offset = int(query.get("offset", ["0"])[0])
        timeout = min(float(query.get("timeout", ["0"])[0]), 5.0)
        deadline = time.monotonic() + timeout
        while True:
            with self.state.lock:
                pending = [u for u in self.state.updates if u["update_id"] >= offset]
            if pending or time.monotonic() >= deadline:
                return self._respond(200, {"ok": True, "result": pending})
            self.state.event.clear()
            self.state.event.wait(max(0.0, deadline - time.monotonic()))

    def do_POST(self):
        route = self._route()
        if route is None:
            return self._respond(404, {"ok": False, "error_code": 404})
        token, method = route
        if token != self.state.token:
            return self._respond(401, {"ok": False, "error_code": 401,
                                       "description": "Unauthorized"})
        if method not in ("deleteMessage", "banChatMember"):
            return self._respond(404, {"ok": False, "error_code": 404})
        length = int(self.headers.get("Content-Length", "0"))
        try:
            payload = json.loads(self.rfile.read(length).decode("utf-8")) if length else {}
        except json.JSONDecodeError:
            return self._respond(400, {"ok": False, "error_code": 400})
        with self.state.lock:
            if self.state.fail_next > 0:
                self.state.fail_next -= 1
                return self._respond(500, {"ok": False, "error_code": 500,
                                           "description": "transient"})
            self.state.calls.append((method, payload))
        return self._respond(200, {"ok": True, "result": True})


class StubBotServer:
    """Threaded stub server; use as a context manager in tests."""

    def __init__(self, token: str = "TEST:TOKEN"):
        self.state = StubState(token=token)
        handler = type("BoundHandler", (_Handler,), {"state": self.state})
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "StubBotServer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)
