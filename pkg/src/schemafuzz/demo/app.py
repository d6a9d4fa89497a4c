"""The demo inventory service: a small HTTP handler with seeded defects.

Behaviour is deterministic given the request sequence since the last reset;
manifest.json documents every seeded defect and the check kind expected to
catch it. The handler implements the in-process transport's calling
convention directly and is also servable on a real port (see server.py).
"""

from __future__ import annotations

import json
import threading
import time
import urllib.parse
from importlib import resources
from typing import Any

from ..transport import InboundRequest

_JSON = [("Content-Type", "application/json")]


def load_openapi_document() -> dict:
    return json.loads(resources.files("schemafuzz.demo").joinpath("openapi.json")
                      .read_text("utf-8"))


def load_ground_truth() -> dict:
    return json.loads(resources.files("schemafuzz.demo").joinpath("manifest.json")
                      .read_text("utf-8"))


def _json_body(payload: Any) -> bytes:
    return json.dumps(payload, sort_keys=True).encode("utf-8")


class DemoService:
    """Callable handler: InboundRequest -> (status, headers, body)."""

    def __init__(self, slow_delay: float = 1.5):
        self.slow_delay = slow_delay
        self._lock = threading.RLock()
        self._openapi = _json_body(load_openapi_document())
        self._catalog = _json_body([
            {"sku": f"SKU-{index:05d}", "price": (index % 997) / 10.0}
            for index in range(1500)
        ])
        self.reset()

    def reset(self) -> None:
        with self._lock:
            self.items: dict[int, dict] = {
                1: {"id": 1, "name": "Widget", "quantity": 100},
            }
            self.orders: dict[int, dict] = {}
            self._next_item_id = 2
            self._next_order_id = 1

    # --- dispatch ---

    def __call__(self, request: InboundRequest) -> tuple[int, list, bytes]:
        segments = [urllib.parse.unquote(part)
                    for part in request.path.split("/") if part != ""]
        method = request.method.upper()
        with self._lock:
            return self._route(method, segments, request)

    def _route(self, method: str, segments: list[str],
               request: InboundRequest) -> tuple[int, list, bytes]:
        if segments == ["openapi.json"] and method == "GET":
            return 200, list(_JSON), self._openapi
        if segments == ["reset"] and method == "POST":
            self.reset()
            return 200, list(_JSON), _json_body({"reset": True})
        if segments == ["items"]:
            if method == "POST":
                return self._create_item(request)
            if method == "GET":
                return self._list_items()
            if method == "PUT":
                # seeded: 405 without the RFC-required Allow header
                return 405, list(_JSON), _json_body({"error": "method not allowed"})
        if len(segments) == 2 and segments[0] == "items":
            item_id = self._parse_id(segments[1])
            if method == "GET":
                return self._get_item(item_id)
            if method == "DELETE":
                # seeded: claims deletion but changes nothing, and 204 carries a body
                return 204, [("Content-Type", "text/plain")], b"deleted"
        if segments == ["search"] and method == "GET":
            # seeded: declared-required X-Total-Count header omitted
            return 200, list(_JSON), _json_body([])
        if segments == ["slow"] and method == "GET":
            if self.slow_delay > 0:
                time.sleep(self.slow_delay)
            return 200, list(_JSON), _json_body({"ok": True})
        if segments == ["ping"] and method == "GET":
            # seeded: 200 with an empty body
            return 200, [], b""
        if segments == ["legacy"] and method == "GET":
            # seeded: declares JSON, serves HTML
            return 200, [("Content-Type", "text/html")], b"<html><body>legacy report</body></html>"
        if segments == ["orders"] and method == "POST":
            return self._create_order(request)
        if len(segments) == 2 and segments[0] == "orders" and method == "GET":
            return self._get_order(self._parse_id(segments[1]))
        if segments == ["catalog"] and method == "GET":
            return 200, list(_JSON), self._catalog
        return 404, list(_JSON), _json_body({"detail": "not found"})

    # --- helpers ---

    @staticmethod
    def _parse_id(text: str):
        try:
            return int(text)
        except ValueError:
            return None

    @staticmethod
    def _parse_json(request: InboundRequest) -> Any:
        try:
            return json.loads(request.body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return {}

    # --- items ---

    def _create_item(self, request: InboundRequest) -> tuple[int, list, bytes]:
        payload = self._parse_json(request)
        if not isinstance(payload, dict):
            payload = {}
        quantity = payload.get("quantity")
        if (isinstance(quantity, int) and not isinstance(quantity, bool)
                and quantity > 2**31 - 1):
            # seeded: 32-bit storage column overflows on valid 64-bit input
            return 500, list(_JSON), _json_body({"error": "internal server error"})
        # seeded: no input validation at all; anything is coerced and accepted
        item = {
            "id": self._next_item_id,
            "name": payload.get("name") if isinstance(payload.get("name"), str)
                    else json.dumps(payload.get("name")),
            "quantity": self._coerce_int(quantity),
        }
        self._next_item_id += 1
        self.items[item["id"]] = item
        return 201, list(_JSON), _json_body(item)

    @staticmethod
    def _coerce_int(value: Any) -> int:
        if isinstance(value, bool):
            return int(value)
        if isinstance(value, int):
            return value
        if isinstance(value, float):
            return int(value)
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                return 0
        return 0

    def _list_items(self) -> tuple[int, list, bytes]:
        listing = []
        for item_id in sorted(self.items):
            item = dict(self.items[item_id])
            if item_id == 1:
                # seeded: legacy serialiser stringifies the first row's quantity
                item["quantity"] = str(item["quantity"])
            listing.append(item)
        return 200, list(_JSON), _json_body(listing)

    def _get_item(self, item_id) -> tuple[int, list, bytes]:
        if item_id is not None and item_id in self.items:
            return 200, list(_JSON), _json_body(self.items[item_id])
        # seeded (by omission): the schema declares only 200 for this operation
        return 404, list(_JSON), _json_body({"detail": "item not found"})

    # --- orders ---

    def _create_order(self, request: InboundRequest) -> tuple[int, list, bytes]:
        payload = self._parse_json(request)
        if not isinstance(payload, dict):
            payload = {}
        sku = payload.get("sku")
        count = payload.get("count")
        valid = (isinstance(sku, str) and len(sku) >= 1
                 and isinstance(count, int) and not isinstance(count, bool)
                 and count >= 1)
        if not valid:
            return 400, list(_JSON), _json_body({"error": "invalid order"})
        order = {"id": self._next_order_id, "sku": sku, "count": count}
        self._next_order_id += 1
        if count > 100:
            # seeded: rejected order is stored anyway (resource leak)
            self.orders[order["id"]] = order
            return 409, list(_JSON), _json_body(
                {"error": "insufficient stock", "id": order["id"]})
        self.orders[order["id"]] = order
        return 201, list(_JSON), _json_body(order)

    def _get_order(self, order_id) -> tuple[int, list, bytes]:
        if order_id is not None and order_id in self.orders:
            return 200, list(_JSON), _json_body(self.orders[order_id])
        return 404, list(_JSON), _json_body({"error": "order not found"})
