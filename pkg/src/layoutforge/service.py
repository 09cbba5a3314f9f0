"""Embedded HTTP service for the floor-plan UI.

Plain stdlib threading server: every body is JSON, layout computation is
stateless and seed-deterministic, and the prior store is the only shared
state. CORS is wide open since this is a local tool.
"""

from __future__ import annotations

import json
import logging
import random
import threading
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from .hyper import HyperKey, HyperScheduler
from .jsonio import canonical_dumps
from .pipeline import LayoutSettings, layout_scene, outcome_to_json
from .scene import Catalog, Scene, SceneParseError, scene_from_json, scene_to_json
from .store import PriorStore

logger = logging.getLogger(__name__)


class ServiceError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


class LayoutService:
    """Request handlers behind the HTTP surface, usable in-process too."""

    def __init__(
        self,
        store: PriorStore,
        corpus: Optional[list[Scene]] = None,
        scheduler: Optional[HyperScheduler] = None,
    ):
        self.store = store
        self.scenes = {s.scene_id: s for s in (corpus or [])}
        self.catalog = Catalog()
        for scene in self.scenes.values():
            self.catalog.merge(scene.catalog)
        self.scheduler = scheduler or HyperScheduler(store, self.catalog, mode="background")

    def health(self) -> dict:
        return {"status": "ok"}

    def scene_ids(self) -> dict:
        return {"scenes": sorted(self.scenes)}

    def scene_doc(self, scene_id: str) -> dict:
        if scene_id not in self.scenes:
            raise ServiceError(404, f"unknown scene {scene_id!r}")
        return scene_to_json(self.scenes[scene_id])

    def priors_keys(self) -> dict:
        return {
            "pairwise": self.store.pairwise_keys(),
            "chains": self.store.chain_keys(),
            "hyper": self.store.hyper_keys(),
        }

    def layout(self, body: dict) -> dict:
        if "scene" in body:
            try:
                scene = scene_from_json(body["scene"], source="<request>")
            except SceneParseError as e:
                raise ServiceError(400, str(e)) from e
        elif "sceneId" in body:
            if body["sceneId"] not in self.scenes:
                raise ServiceError(404, f"unknown scene {body['sceneId']!r}")
            scene = self.scenes[body["sceneId"]]
        else:
            raise ServiceError(400, "layout request needs 'scene' or 'sceneId'")
        include = body.get("include")
        if include is not None:
            keep = set(int(i) for i in include)
            scene = replace(
                scene, objects=[o for i, o in enumerate(scene.objects) if i in keep]
            )
        seed = body.get("seed")
        if seed is None:
            seed = random.SystemRandom().randrange(2**31)
        settings = LayoutSettings.from_config(body.get("config", {}), int(seed))
        # Background generation may need instances the corpus never saw.
        self.scheduler.catalog.merge(scene.catalog)
        outcome = layout_scene(scene, self.store, self.scheduler, settings)
        return outcome_to_json(outcome)

    def submit_hyper(self, body: dict) -> dict:
        try:
            if "key" in body:
                key = HyperKey.from_string(body["key"])
            else:
                key = HyperKey.from_counts(
                    body["dominant"], {k: int(v) for k, v in body["secondaries"].items()}
                )
        except (KeyError, ValueError, TypeError) as e:
            raise ServiceError(400, f"bad hyper key: {e}") from e
        relation = self.scheduler.request(key, force=bool(body.get("force", False)))
        return {
            "key": key.to_string(),
            "status": relation.status,
            "priorCount": len(relation.priors),
        }


def _make_handler(service: LayoutService):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            logger.debug("http: " + fmt, *args)

        def _send(self, status: int, doc: dict) -> None:
            data = canonical_dumps(doc).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.end_headers()
            self.wfile.write(data)

        def do_OPTIONS(self):
            self._send(204, {})

        def do_GET(self):
            try:
                path = self.path.split("?", 1)[0].rstrip("/") or "/"
                if path == "/health":
                    self._send(200, service.health())
                elif path == "/scenes":
                    self._send(200, service.scene_ids())
                elif path.startswith("/scenes/"):
                    self._send(200, service.scene_doc(path[len("/scenes/"):]))
                elif path == "/priors/keys":
                    self._send(200, service.priors_keys())
                else:
                    self._send(404, {"error": f"no route {path}"})
            except ServiceError as e:
                self._send(e.status, {"error": str(e)})
            except Exception as e:  # pragma: no cover - defensive
                logger.exception("request failed")
                self._send(500, {"error": str(e)})

        def do_POST(self):
            try:
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length) if length else b"{}"
                try:
                    body = json.loads(raw.decode("utf-8")) if raw else {}
                except json.JSONDecodeError as e:
                    raise ServiceError(400, f"invalid JSON body: {e}")
                path = self.path.split("?", 1)[0].rstrip("/")
                if path == "/layout":
                    self._send(200, service.layout(body))
                elif path == "/hyper":
                    self._send(200, service.submit_hyper(body))
                else:
                    self._send(404, {"error": f"no route {path}"})
            except ServiceError as e:
                self._send(e.status, {"error": str(e)})
            except Exception as e:  # pragma: no cover - defensive
                logger.exception("request failed")
                self._send(500, {"error": str(e)})

    return Handler


def make_server(service: LayoutService, host: str, port: int) -> ThreadingHTTPServer:
    return ThreadingHTTPServer((host, port), _make_handler(service))


def serve_forever(service: LayoutService, host: str, port: int) -> None:
    server = make_server(service, host, port)
    logger.info("serving on http://%s:%d", *server.server_address)
    try:
        server.serve_forever()
    finally:
        server.server_close()
        service.scheduler.shutdown()


def start_background(service: LayoutService, host: str = "127.0.0.1", port: int = 0):
    """Start the server on a daemon thread; returns (server, base_url)."""
    server = make_server(service, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    addr = server.server_address
    return server, f"http://{addr[0]}:{addr[1]}"
