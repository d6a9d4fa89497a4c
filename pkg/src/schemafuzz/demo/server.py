"""Serve the demo service on a real port (for CLI and network-transport tests)."""

from __future__ import annotations

import argparse
import threading
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..transport import InboundRequest
from .app import DemoService


def _make_handler(service: DemoService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _dispatch(self):
            split = urllib.parse.urlsplit(self.path)
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            request = InboundRequest(
                method=self.command,
                path=split.path,
                query=urllib.parse.parse_qsl(split.query),
                headers=list(self.headers.items()),
                body=body,
            )
            status, headers, payload = service(request)
            self.send_response(status)
            for name, value in headers:
                self.send_header(name, value)
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            if payload:
                self.wfile.write(payload)

        do_GET = do_POST = do_PUT = do_DELETE = do_PATCH = _dispatch

        def log_message(self, *args):  # keep test output quiet
            pass

    return Handler


def serve(port: int = 0, slow_delay: float = 1.5) -> tuple[ThreadingHTTPServer, DemoService]:
    """Bind and return (server, service); caller drives serve_forever()."""
    service = DemoService(slow_delay=slow_delay)
    server = ThreadingHTTPServer(("127.0.0.1", port), _make_handler(service))
    return server, service


def serve_in_background(port: int = 0, slow_delay: float = 1.5):
    """Start serving on a daemon thread; returns (server, service, base_url)."""
    server, service = serve(port, slow_delay)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, bound_port = server.server_address[:2]
    return server, service, f"http://{host}:{bound_port}"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="schemafuzz-demo",
        description="Run the seeded-defect demo service (schema at /openapi.json).")
    parser.add_argument("--port", type=int, default=8099)
    parser.add_argument("--slow-delay", type=float, default=1.5,
                        help="sleep for GET /slow, seconds")
    args = parser.parse_args(argv)
    server, _service = serve(args.port, args.slow_delay)
    print(f"demo service on http://127.0.0.1:{server.server_address[1]} "
          f"(POST /reset restores seeded state)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
