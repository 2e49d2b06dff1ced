"""Request loop: line-delimited JSON over stdio, or the same bodies over HTTP.

One request is handled at a time. Every failure becomes an error response
that echoes whatever id the client sent; nothing a client writes can bring
the loop down. Loaded datasets are cached by path, so repeated requests
against the same directory skip the parse and operator build.
"""

import json
import logging
import sys
import time
from http.server import BaseHTTPRequestHandler, HTTPServer

from .dataset import load_dataset_dir
from .space import RequestError, check_architecture
from .training import run_job

log = logging.getLogger(__name__)


def handle_request(obj, cache) -> dict:
    request_id = obj.get("id") if isinstance(obj, dict) else None
    start = time.monotonic()
    try:
        if not isinstance(obj, dict):
            raise RequestError("request must be a JSON object")
        macro, ops = check_architecture(obj.get("macro"), obj.get("ops"))
        path = obj.get("dataset_path")
        if not isinstance(path, str) or not path:
            raise RequestError("dataset_path must be a non-empty string")
        try:
            seed = int(obj.get("seed", 0))
        except (TypeError, ValueError):
            raise RequestError(f"seed must be an integer, got {obj.get('seed')!r}")
        data = cache.get(path)
        if data is None:
            data = load_dataset_dir(path)
            cache[path] = data
        valid_perf, test_perf = run_job(data, macro, ops, seed, obj.get("hyperparams"))
        return {
            "id": request_id,
            "valid_perf": valid_perf,
            "test_perf": test_perf,
            "duration_s": time.monotonic() - start,
        }
    except Exception as exc:  # per-request containment: the loop must survive
        log.info("request failed: %s", exc)
        return {"id": request_id, "error": str(exc) or exc.__class__.__name__}


def serve_stdio(stdin=None, stdout=None):
    """Answer one JSON line per request until stdin closes."""
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    cache = {}
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            response = {"id": None, "error": f"request is not valid JSON: {exc}"}
        else:
            response = handle_request(obj, cache)
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()


class _Handler(BaseHTTPRequestHandler):
    cache = None

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        try:
            obj = json.loads(body)
        except json.JSONDecodeError as exc:
            response = {"id": None, "error": f"request is not valid JSON: {exc}"}
        else:
            response = handle_request(obj, self.cache)
        payload = json.dumps(response).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, fmt, *args):
        log.debug("http: " + fmt, *args)


def make_http_server(host, port) -> HTTPServer:
    """Build (but do not start) the HTTP server; port 0 picks a free port."""
    handler = type("Handler", (_Handler,), {"cache": {}})
    return HTTPServer((host, port), handler)


def serve_http(host, port):
    server = make_http_server(host, port)
    bound = server.server_address
    print(f"listening on http://{bound[0]}:{bound[1]}", file=sys.stderr, flush=True)
    server.serve_forever()
