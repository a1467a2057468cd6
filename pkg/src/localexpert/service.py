"""Read-only HTTP service over one dataset snapshot.

GET /recommend?query=&city=&mode=&method=&k=&user=&seed=&top=&aggregate=&stay=&timings=
GET /health
"""
from __future__ import annotations

import argparse
import logging
import os
import random
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional
from urllib.parse import parse_qs, urlsplit

from .errors import NotFoundError, UnknownQueryError
from .ingest import load_dataset
from .model import MODES, PA
from .recommend import AGGREGATIONS, METHODS, POOL, dumps_body, make_query, recommend, run_body
from .walk import DEFAULT_STAY, WALK_METHODS, WalkConfig

log = logging.getLogger(__name__)

FIXED = "fixed"
RANDOM = "random"


@dataclass(frozen=True)
class ServiceConfig:
    bind: str = "127.0.0.1:8000"
    data_dir: Optional[str] = None
    default_method: str = "lrw"
    default_k: int = 5
    seed_policy: str = RANDOM
    seed: int = 0

    @classmethod
    def from_env(cls, environ=None) -> "ServiceConfig":
        env = os.environ if environ is None else environ
        return cls(
            bind=env.get("BIND", cls.bind),
            data_dir=env.get("DATA_DIR"),
            default_method=env.get("DEFAULT_METHOD", cls.default_method),
            default_k=int(env.get("DEFAULT_K", cls.default_k)),
            seed_policy=env.get("SEED_POLICY", cls.seed_policy),
            seed=int(env.get("SEED", cls.seed)),
        )

    @property
    def address(self) -> tuple[str, int]:
        host, _, port = self.bind.rpartition(":")
        return host or "127.0.0.1", int(port)


class BadRequest(Exception):
    def __init__(self, param: str, message: str):
        self.param = param
        super().__init__(message)


class RecommendService:
    """Request handling detached from the socket layer."""

    def __init__(self, config: ServiceConfig, dataset=None):
        if config.default_method not in METHODS:
            raise ValueError(f"unknown default method {config.default_method!r}")
        if config.seed_policy not in (FIXED, RANDOM):
            raise ValueError(f"seed policy must be {FIXED!r} or {RANDOM!r}")
        if dataset is None:
            if not config.data_dir:
                raise ValueError("no dataset directory configured")
            dataset = load_dataset(config.data_dir)
        self.config = config
        self.dataset = dataset
        self.loaded_at = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())

    def health(self) -> tuple[int, dict]:
        return 200, {"status": "ok", "counts": self.dataset.counts(), "loaded_at": self.loaded_at}

    def _seed(self, given: Optional[int], method: str) -> Optional[int]:
        if given is not None:
            return given
        if method not in WALK_METHODS:
            return None
        if self.config.seed_policy == FIXED:
            return self.config.seed
        return random.SystemRandom().getrandbits(63)

    def recommend(self, params: dict) -> tuple[int, dict]:
        try:
            args = _parse(params, self.config)
        except BadRequest as exc:
            return 400, {"error": str(exc), "param": exc.param}
        try:
            query = make_query(args["query"], args["city"], args["mode"], args["k"], args["user"])
        except UnknownQueryError as exc:
            return 422, {"error": str(exc), "known_queries": exc.known}
        seed = self._seed(args["seed"], args["method"])
        cfg = WalkConfig(args["method"] if args["method"] in WALK_METHODS else "lrw",
                         args["k"], args["stay"], seed or 0)
        try:
            run = recommend(self.dataset, query, args["method"], cfg, args["aggregate"])
        except NotFoundError as exc:
            return 404, {"error": str(exc)}
        return 200, run_body(run, seed, args["top"], args["timings"])


def _parse(params: dict, config: ServiceConfig) -> dict:
    def one(name, default=None):
        values = params.get(name)
        if not values or values[-1] == "":
            return default
        return values[-1]

    def integer(name, default, minimum=None):
        raw = one(name)
        if raw is None:
            return default
        try:
            v = int(raw)
        except ValueError:
            raise BadRequest(name, f"parameter {name!r} must be an integer") from None
        if minimum is not None and v < minimum:
            raise BadRequest(name, f"parameter {name!r} must be >= {minimum}")
        return v

    out = {}
    for name in ("query", "city"):
        out[name] = one(name)
        if out[name] is None:
            raise BadRequest(name, f"missing parameter {name!r}")
    out["mode"] = one("mode", "global")
    if out["mode"] not in MODES:
        raise BadRequest("mode", f"parameter 'mode' must be one of {list(MODES)}")
    out["user"] = one("user")
    if out["mode"] == PA and out["user"] is None:
        raise BadRequest("user", "parameter 'user' is required when mode=pa")
    out["method"] = one("method", config.default_method)
    if out["method"] not in METHODS:
        raise BadRequest("method", f"parameter 'method' must be one of {list(METHODS)}")
    out["aggregate"] = one("aggregate", POOL)
    if out["aggregate"] not in AGGREGATIONS:
        raise BadRequest("aggregate", f"parameter 'aggregate' must be one of {list(AGGREGATIONS)}")
    out["k"] = integer("k", config.default_k, 1)
    out["seed"] = integer("seed", None)
    out["top"] = integer("top", None, 1)
    stay = one("stay")
    try:
        out["stay"] = DEFAULT_STAY if stay is None else float(stay)
    except ValueError:
        raise BadRequest("stay", "parameter 'stay' must be a number") from None
    if not 0.0 <= out["stay"] <= 1.0:
        raise BadRequest("stay", "parameter 'stay' must lie in [0, 1]")
    out["timings"] = one("timings", "0").lower() in ("1", "true", "yes")
    return out


class Handler(BaseHTTPRequestHandler):
    service: RecommendService = None  # bound by make_server
    protocol_version = "HTTP/1.1"

    def _send(self, status: int, payload: dict):
        body = (dumps_body(payload) + "\n").encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        url = urlsplit(self.path)
        try:
            if url.path == "/recommend":
                status, payload = self.service.recommend(parse_qs(url.query, keep_blank_values=True))
            elif url.path == "/health":
                status, payload = self.service.health()
            else:
                status, payload = 404, {"error": f"no route for {url.path}"}
        except Exception:  # noqa: BLE001
            log.exception("request failed: %s", self.path)
            status, payload = 500, {"error": "internal error"}
        self._send(status, payload)

    def log_message(self, fmt, *args):
        log.info("%s - %s", self.address_string(), fmt % args)


def make_server(config: ServiceConfig, dataset=None) -> ThreadingHTTPServer:
    """Load the dataset, then bind; a load failure means no socket is opened."""
    service = RecommendService(config, dataset)
    handler = type("BoundHandler", (Handler,), {"service": service})
    server = ThreadingHTTPServer(config.address, handler)
    server.daemon_threads = True
    return server


def serve(config: ServiceConfig) -> None:
    server = make_server(config)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def main(argv=None):
    env = ServiceConfig.from_env()
    p = argparse.ArgumentParser(prog="localexpert.service")
    p.add_argument("--data", default=env.data_dir)
    p.add_argument("--bind", default=env.bind)
    p.add_argument("--method", default=env.default_method, choices=METHODS)
    p.add_argument("--k", type=int, default=env.default_k)
    p.add_argument("--seed-policy", default=env.seed_policy, choices=(FIXED, RANDOM))
    p.add_argument("--seed", type=int, default=env.seed)
    a = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO)
    serve(ServiceConfig(a.bind, a.data, a.method, a.k, a.seed_policy, a.seed))


if __name__ == "__main__":
    main()
