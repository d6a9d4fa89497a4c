"""Concrete HTTP request construction, body serialisation, and dispatch.

TestCase building percent-encodes path values (including ``/``), serialises
query arrays per their declared style (comma-joined by default), and guards
header values against CR/LF injection. Two Transport implementations ship:
a real HTTP/1.1 client over http.client (no retries, no redirects) and an
in-process loopback that dispatches straight to a handler callable for fast
deterministic testing.

Body serialisers are a registry keyed by media type; JSON output has stable
key order so replays are byte-identical.
"""

from __future__ import annotations

import http.client
import json
import socket
import ssl
import time
import urllib.parse
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Protocol

from . import __version__
from .choices import ChoiceSequence
from .errors import (
    MissingRequiredParameter,
    TransportError,
    UnencodableValue,
    UnknownMediaType,
)
from .document import ApiOperation
from .jsontools import stringify_primitive

USER_AGENT = f"schemafuzz/{__version__}"
DEFAULT_TIMEOUT = 10.0
_MULTIPART_BOUNDARY = "schemafuzz-boundary-4ef3a0b1c9d2"


@dataclass
class TestCase:
    """A fully concrete HTTP request, plus the choices that produced it."""

    operation_ref: str
    method: str
    resolved_path: str
    query: list[tuple[str, str]] = field(default_factory=list)
    headers: list[tuple[str, str]] = field(default_factory=list)
    cookies: list[tuple[str, str]] = field(default_factory=list)
    body: Optional[tuple[str, bytes]] = None  # (media type, serialised bytes)
    choice_sequence: Optional[ChoiceSequence] = None
    intent: str = "positive"
    provenance: Optional[str] = None  # which component carried the negated value
    parameter_values: dict[str, Any] = field(default_factory=dict)  # raw generated values
    body_value: Any = None  # raw body before serialisation

    def __post_init__(self):
        if "{" in self.resolved_path or "}" in self.resolved_path:
            raise UnencodableValue(f"unresolved placeholder in path {self.resolved_path!r}")
        if self.intent == "negative" and not self.provenance:
            raise ValueError("negative intent requires a provenance note")

    def url(self, base_url: str) -> str:
        query = urllib.parse.urlencode(self.query, quote_via=urllib.parse.quote)
        base = base_url.rstrip("/")
        return f"{base}{self.resolved_path}" + (f"?{query}" if query else "")

    def as_curl(self, base_url: str) -> str:
        parts = ["curl", "-X", self.method.upper(), f"'{self.url(base_url)}'"]
        for name, value in self.all_headers():
            parts.append(f"-H '{name}: {value}'")
        if self.body is not None:
            text = self.body[1].decode("utf-8", "replace").replace("'", "'\\''")
            parts.append(f"-d '{text}'")
        return " ".join(parts)

    def all_headers(self) -> list[tuple[str, str]]:
        """Headers as sent: defaults first, then declared ones (which may override)."""
        names = {name.lower() for name, _ in self.headers}
        out: list[tuple[str, str]] = []
        if "user-agent" not in names:
            out.append(("User-Agent", USER_AGENT))
        if self.body is not None and "content-type" not in names:
            out.append(("Content-Type", self.body[0]))
        out.extend(self.headers)
        if self.cookies and "cookie" not in names:
            out.append(("Cookie", "; ".join(f"{k}={v}" for k, v in self.cookies)))
        return out

    def render(self, base_url: str) -> bytes:
        """Deterministic wire rendering: request line, ordered headers, body."""
        target = urllib.parse.urlsplit(self.url(base_url))
        path = target.path + (f"?{target.query}" if target.query else "")
        lines = [f"{self.method.upper()} {path} HTTP/1.1", f"Host: {target.netloc}"]
        lines += [f"{name}: {value}" for name, value in self.all_headers()]
        body = self.body[1] if self.body else b""
        if body:
            lines.append(f"Content-Length: {len(body)}")
        return ("\r\n".join(lines) + "\r\n\r\n").encode("utf-8") + body


@dataclass
class HttpResponse:
    status: int
    headers: list[tuple[str, str]]
    body: bytes
    elapsed: float  # seconds, total
    timing: tuple[float, float] = (0.0, 0.0)  # (time to first byte, total)

    def __post_init__(self):
        if not 100 <= self.status <= 599:
            raise ValueError(f"status {self.status} out of range")
        if self.elapsed < 0:
            raise ValueError("elapsed must be >= 0")

    def header(self, name: str) -> Optional[str]:
        wanted = name.lower()
        for key, value in self.headers:
            if key.lower() == wanted:
                return value
        return None

    def content_type(self) -> Optional[str]:
        """Content-Type with parameters stripped, lowercased."""
        value = self.header("Content-Type")
        if value is None:
            return None
        return value.split(";")[0].strip().lower()


class Transport(Protocol):
    def send(self, case: TestCase, base_url: str,
             timeout: float = DEFAULT_TIMEOUT) -> HttpResponse: ...


# --- request building -------------------------------------------------------------

def build_test_case(op: ApiOperation, values: dict[str, Any],
                    body_value: Any = None, media_type: Optional[str] = None,
                    intent: str = "positive",
                    extra_headers: Optional[list[tuple[str, str]]] = None,
                    choice_sequence: Optional[ChoiceSequence] = None,
                    provenance: Optional[str] = None,
                    include_body: bool = False) -> TestCase:
    """Substitute, encode, and serialise one operation invocation.

    ``values`` maps parameter names to generated JSON values and must cover
    every required parameter. ``include_body`` distinguishes an intentional
    body of ``None`` (JSON null) from no body at all.
    """
    path = op.path_template
    query: list[tuple[str, str]] = []
    headers: list[tuple[str, str]] = list(extra_headers or [])
    cookies: list[tuple[str, str]] = []

    for param in op.parameters:
        if param.name not in values:
            if param.required:
                raise MissingRequiredParameter(f"{op.key}: {param.name!r} has no value")
            continue
        value = values[param.name]
        if param.location == "path":
            encoded = urllib.parse.quote(_scalar_text(value, param.name), safe="")
            path = path.replace("{%s}" % param.name, encoded)
        elif param.location == "query":
            query.extend(_query_pairs(param.name, value, param.style))
        elif param.location == "header":
            headers.append((param.name, _header_text(value, param.name)))
        elif param.location == "cookie":
            cookies.append((param.name, _scalar_text(value, param.name)))
        # body/formData parameters arrive via body_value instead

    body = None
    if include_body:
        chosen = media_type or "application/json"
        body = (chosen, serialise_body(chosen, body_value))

    return TestCase(
        operation_ref=op.key,
        method=op.method,
        resolved_path=path,
        query=query,
        headers=headers,
        cookies=cookies,
        body=body,
        choice_sequence=choice_sequence,
        intent=intent,
        provenance=provenance,
        parameter_values=dict(values),
        body_value=body_value if include_body else None,
    )


_STYLE_SEPARATORS = {"csv": ",", "ssv": " ", "tsv": "\t", "pipes": "|"}


def _query_pairs(name: str, value: Any, style: Optional[str]) -> list[tuple[str, str]]:
    if isinstance(value, list):
        if style == "multi":
            return [(name, _scalar_text(item, name)) for item in value]
        separator = _STYLE_SEPARATORS.get(style or "csv", ",")
        return [(name, separator.join(_scalar_text(item, name) for item in value))]
    if isinstance(value, dict):
        if style == "deepObject":
            return [(f"{name}[{key}]", _scalar_text(item, name)) for key, item in value.items()]
        flattened = [text for key, item in value.items()
                     for text in (key, _scalar_text(item, name))]
        return [(name, ",".join(flattened))]
    return [(name, _scalar_text(value, name))]


def _scalar_text(value: Any, name: str) -> str:
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return stringify_primitive(value)


def _header_text(value: Any, name: str) -> str:
    if isinstance(value, (dict, list)):
        raise UnencodableValue(
            f"header {name!r}: structured value has no defined serialisation")
    text = stringify_primitive(value)
    if "\r" in text or "\n" in text:
        raise UnencodableValue(f"header {name!r}: CR/LF in value")
    return text


# --- body serialisers ---------------------------------------------------------------

def _serialise_json(value: Any) -> bytes:
    return json.dumps(value, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False).encode("utf-8")


def _serialise_form(value: Any) -> bytes:
    if not isinstance(value, dict):
        raise UnencodableValue("form encoding needs an object body")
    pairs = []
    for key, item in value.items():
        if isinstance(item, list):
            pairs.extend((key, _scalar_text(sub, key)) for sub in item)
        else:
            pairs.append((key, _scalar_text(item, key)))
    return urllib.parse.urlencode(pairs).encode("ascii")


def _serialise_text(value: Any) -> bytes:
    if isinstance(value, str):
        return value.encode("utf-8")
    return _serialise_json(value)


def _serialise_multipart(value: Any) -> bytes:
    if not isinstance(value, dict):
        raise UnencodableValue("multipart encoding needs an object body")
    chunks = []
    for key, item in value.items():
        chunks.append(f"--{_MULTIPART_BOUNDARY}\r\n"
                      f'Content-Disposition: form-data; name="{key}"\r\n\r\n'
                      f"{_scalar_text(item, key)}\r\n")
    chunks.append(f"--{_MULTIPART_BOUNDARY}--\r\n")
    return "".join(chunks).encode("utf-8")


def _serialise_octets(value: Any) -> bytes:
    if isinstance(value, str):
        return value.encode("utf-8")
    return _serialise_json(value)


_SERIALISERS: dict[str, Callable[[Any], bytes]] = {
    "application/json": _serialise_json,
    "application/x-www-form-urlencoded": _serialise_form,
    "text/plain": _serialise_text,
    "multipart/form-data": _serialise_multipart,
    "application/octet-stream": _serialise_octets,
}


def register_serialiser(media_type: str, serialiser: Callable[[Any], bytes]) -> None:
    """Extension point: override or add a media-type serialiser."""
    _SERIALISERS[media_type.lower()] = serialiser


def multipart_content_type() -> str:
    return f"multipart/form-data; boundary={_MULTIPART_BOUNDARY}"


def serialise_body(media_type: str, value: Any) -> bytes:
    """Deterministic bytes for the media type; UnknownMediaType when unregistered."""
    base = media_type.split(";")[0].strip().lower()
    serialiser = _SERIALISERS.get(base)
    if serialiser is None and base.endswith("+json"):
        serialiser = _serialise_json
    if serialiser is None:
        raise UnknownMediaType(media_type)
    return serialiser(value)


def serialisable(media_type: str) -> bool:
    base = media_type.split(";")[0].strip().lower()
    return base in _SERIALISERS or base.endswith("+json")


# --- transports ----------------------------------------------------------------------

def send(transport: Transport, case: TestCase, base_url: str,
         timeout: float = DEFAULT_TIMEOUT) -> HttpResponse:
    """Exactly one request on the wire; TransportErrors are never target defects."""
    split = urllib.parse.urlsplit(base_url)
    if split.scheme not in ("http", "https") or not split.netloc:
        raise ValueError(f"base_url must be an absolute http(s) URL, got {base_url!r}")
    return transport.send(case, base_url, timeout)


class NetworkTransport:
    """HTTP/1.1 over TCP. No automatic retries, no redirect following."""

    def __init__(self, verify_tls: bool = True):
        self._tls_context = None if verify_tls else ssl._create_unverified_context()

    def send(self, case: TestCase, base_url: str,
             timeout: float = DEFAULT_TIMEOUT) -> HttpResponse:
        split = urllib.parse.urlsplit(base_url)
        if split.scheme == "https":
            conn = http.client.HTTPSConnection(split.netloc, timeout=timeout,
                                               context=self._tls_context)
        else:
            conn = http.client.HTTPConnection(split.netloc, timeout=timeout)
        prefix = split.path.rstrip("/")
        query = urllib.parse.urlencode(case.query, quote_via=urllib.parse.quote)
        path = prefix + case.resolved_path + (f"?{query}" if query else "")
        body = case.body[1] if case.body else None
        started = time.perf_counter()
        try:
            conn.request(case.method.upper(), path, body=body,
                         headers=dict(case.all_headers()))
            response = conn.getresponse()
            first_byte = time.perf_counter() - started
            data = response.read()
            total = time.perf_counter() - started
            return HttpResponse(
                status=response.status,
                headers=list(response.getheaders()),
                body=data,
                elapsed=total,
                timing=(first_byte, total),
            )
        except socket.timeout as exc:
            raise TransportError("timeout", f"{case.method.upper()} {path}: {exc}") from exc
        except ssl.SSLError as exc:
            raise TransportError("tls", str(exc)) from exc
        except (ConnectionError, OSError, http.client.HTTPException) as exc:
            raise TransportError("connection", f"{case.method.upper()} {path}: {exc}") from exc
        finally:
            conn.close()


@dataclass
class InboundRequest:
    """What an in-process handler sees; the loopback analogue of a socket read."""

    method: str
    path: str
    query: list[tuple[str, str]]
    headers: list[tuple[str, str]]
    body: bytes


class InProcessTransport:
    """Direct function dispatch to a handler: fast, deterministic, no sockets.

    The handler takes an InboundRequest and returns (status, headers, body).
    """

    def __init__(self, handler: Callable[[InboundRequest], tuple[int, list, bytes]]):
        self._handler = handler

    def send(self, case: TestCase, base_url: str,
             timeout: float = DEFAULT_TIMEOUT) -> HttpResponse:
        # path stays percent-encoded: handlers split on "/" and unquote segments,
        # exactly as a real server would
        prefix = urllib.parse.urlsplit(base_url).path.rstrip("/")
        request = InboundRequest(
            method=case.method.upper(),
            path=prefix + case.resolved_path,
            query=list(case.query),
            headers=case.all_headers(),
            body=case.body[1] if case.body else b"",
        )
        started = time.perf_counter()
        try:
            status, headers, body = self._handler(request)
        except Exception as exc:
            raise TransportError("protocol", f"in-process handler raised: {exc!r}") from exc
        elapsed = time.perf_counter() - started
        return HttpResponse(
            status=status,
            headers=list(headers),
            body=bytes(body),
            elapsed=elapsed,
            timing=(elapsed, elapsed),
        )
