"""OpenAPI 2/3 loading, reference resolution, and operation extraction.

Loading is deliberately tolerant: the document only needs to be well-formed
JSON/YAML with a version marker. Extraction isolates failures per operation
(one garbage endpoint never aborts a campaign) and normalises the OpenAPI 2
body/formData parameter styles and draft-04 quirks into the common shapes
the rest of the system consumes.
"""

from __future__ import annotations

import copy
import enum
import json
import re
import urllib.parse
from dataclasses import dataclass, field
from typing import Any, Optional

import yaml

from .errors import DanglingRef, ParseError, RemoteRef, UnsupportedSpec
from .jsontools import pointer_unescape, resolve_pointer

HTTP_METHODS = ("get", "put", "post", "delete", "options", "head", "patch", "trace")
_STATUS_PATTERN_RE = re.compile(r"^[1-5](XX|[0-9]{2})$")

# Flat OpenAPI 2 parameters carry schema keywords directly on the parameter.
_FLAT_SCHEMA_KEYS = (
    "type", "format", "enum", "default", "minimum", "maximum",
    "exclusiveMinimum", "exclusiveMaximum", "multipleOf",
    "minLength", "maxLength", "pattern", "items",
    "minItems", "maxItems", "uniqueItems",
)


class SpecVersion(enum.Enum):
    OPENAPI2 = "openapi2"
    OPENAPI3 = "openapi3"


@dataclass
class ApiDocument:
    spec_version: SpecVersion
    base_path: str
    raw: dict
    components: dict[str, Any]
    resolved: bool = False


@dataclass
class ParameterSpec:
    name: str
    location: str  # path | query | header | cookie | body | formData
    required: bool
    schema: Any
    style: Optional[str] = None  # csv | ssv | tsv | pipes | multi | deepObject


@dataclass
class HeaderSpec:
    schema: Any
    required: bool


@dataclass
class ResponseSpec:
    status_pattern: str  # "200", "4XX", "default"
    content: dict[str, Any] = field(default_factory=dict)  # media type -> schema
    required_headers: dict[str, HeaderSpec] = field(default_factory=dict)


@dataclass
class LinkSpec:
    name: str
    source_status: str
    target_operation: str  # operationId, or "METHOD /path" after graph resolution
    parameter_bindings: dict[str, str] = field(default_factory=dict)
    body_binding: Optional[str] = None
    target_is_ref: bool = False  # target_operation is "METHOD /path" from an operationRef


@dataclass
class ApiOperation:
    method: str
    path_template: str
    operation_id: Optional[str] = None
    parameters: list[ParameterSpec] = field(default_factory=list)
    request_body: Optional[dict[str, Any]] = None  # media type -> schema
    body_required: bool = False
    responses: dict[str, ResponseSpec] = field(default_factory=dict)
    links: list[LinkSpec] = field(default_factory=list)
    security: list = field(default_factory=list)

    @property
    def key(self) -> str:
        return f"{self.method.upper()} {self.path_template}"

    def path_parameter_names(self) -> list[str]:
        return re.findall(r"\{([^{}]+)\}", self.path_template)


@dataclass
class ExtractionResult:
    operations: list[ApiOperation]
    skipped: list[tuple[str, str, str]] = field(default_factory=list)  # (path, method, reason)
    warnings: list[str] = field(default_factory=list)


@dataclass
class LinkEdge:
    source: str  # operation key
    target: str
    status_pattern: str
    link: LinkSpec


@dataclass
class LinkGraph:
    nodes: dict[str, ApiOperation]
    edges: list[LinkEdge] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def outgoing(self, key: str) -> list[LinkEdge]:
        return [edge for edge in self.edges if edge.source == key]


def status_matches(status: int, pattern: str) -> bool:
    """Exact ("404"), wildcard ("4XX"), or "default" status patterns."""
    if pattern == "default":
        return True
    if pattern.endswith("XX"):
        return status // 100 == int(pattern[0])
    return str(status) == pattern


def match_response(responses: dict[str, ResponseSpec], status: int) -> Optional[ResponseSpec]:
    """Most specific declared response: exact beats wildcard beats default."""
    exact = responses.get(str(status))
    if exact is not None:
        return exact
    wildcard = responses.get(f"{status // 100}XX")
    if wildcard is not None:
        return wildcard
    return responses.get("default")


# --- loading -------------------------------------------------------------------

def load_document(data: bytes, format_hint: str = "auto") -> ApiDocument:
    """Parse an OpenAPI document from raw bytes and detect its version."""
    if not data:
        raise ParseError("empty document")
    if format_hint not in ("json", "yaml", "auto"):
        raise ValueError(f"bad format hint {format_hint!r}")
    raw = _parse_bytes(data, format_hint)
    if not isinstance(raw, dict):
        raise ParseError(f"document root must be a mapping, got {type(raw).__name__}")
    if str(raw.get("swagger")) == "2.0":
        version = SpecVersion.OPENAPI2
        base_path = raw.get("basePath", "") or ""
    elif str(raw.get("openapi", "")).startswith("3"):
        version = SpecVersion.OPENAPI3
        base_path = _openapi3_base_path(raw)
    else:
        raise UnsupportedSpec(
            "document has neither swagger: \"2.0\" nor an openapi: 3.x marker")
    return ApiDocument(
        spec_version=version,
        base_path=base_path.rstrip("/"),
        raw=raw,
        components=_collect_components(version, raw),
    )


def _parse_bytes(data: bytes, format_hint: str):
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"document is not UTF-8: {exc}") from exc
    if format_hint in ("json", "auto"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            if format_hint == "json":
                raise ParseError(f"malformed JSON: {exc}") from exc
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed YAML: {exc}") from exc


def _openapi3_base_path(raw: dict) -> str:
    servers = raw.get("servers")
    if isinstance(servers, list) and servers and isinstance(servers[0], dict):
        url = servers[0].get("url", "")
        if isinstance(url, str) and url:
            return urllib.parse.urlsplit(url).path or ""
    return ""


def _collect_components(version: SpecVersion, raw: dict) -> dict[str, Any]:
    if version is SpecVersion.OPENAPI2:
        source = raw.get("definitions")
    else:
        source = (raw.get("components") or {}).get("schemas")
    return dict(source) if isinstance(source, dict) else {}


# --- reference resolution --------------------------------------------------------

def resolve_references(doc: ApiDocument, max_recursion_depth: int = 3) -> ApiDocument:
    """Inline every ``$ref``; unroll cycles ``max_recursion_depth`` times.

    The innermost occurrence of a cycle becomes the most permissive schema
    consistent with the target's declared type (or the empty schema).
    Remote and file references are rejected outright.
    """
    if max_recursion_depth < 1:
        raise ValueError("max_recursion_depth must be >= 1")
    resolved = _resolve_node(doc.raw, doc.raw, (), max_recursion_depth)
    return ApiDocument(
        spec_version=doc.spec_version,
        base_path=doc.base_path,
        raw=resolved,
        components=_collect_components(doc.spec_version, resolved),
        resolved=True,
    )


def _resolve_node(node: Any, root: dict, stack: tuple, depth: int) -> Any:
    if isinstance(node, dict):
        if "$ref" in node:
            ref = node["$ref"]
            if not isinstance(ref, str):
                raise DanglingRef(f"$ref must be a string, got {ref!r}")
            if not ref.startswith("#"):
                raise RemoteRef(f"remote reference {ref!r} rejected; inline it first")
            pointer = urllib.parse.unquote(ref[1:])
            try:
                target = resolve_pointer(root, pointer)
            except KeyError:
                raise DanglingRef(f"reference {ref!r} resolves to nothing") from None
            if stack.count(ref) >= depth:
                return _permissive_stub(target)
            return _resolve_node(target, root, stack + (ref,), depth)
        return {key: _resolve_node(value, root, stack, depth)
                for key, value in node.items()}
    if isinstance(node, list):
        return [_resolve_node(item, root, stack, depth) for item in node]
    return node


def _permissive_stub(target: Any) -> dict:
    if isinstance(target, dict) and "type" in target:
        return {"type": copy.deepcopy(target["type"])}
    return {}


# --- operation extraction ---------------------------------------------------------

def extract_operations(doc: ApiDocument) -> ExtractionResult:
    """One ApiOperation per (path, method); failures skip just that operation."""
    result = ExtractionResult(operations=[])
    paths = doc.raw.get("paths")
    if not isinstance(paths, dict):
        if paths is not None:
            result.warnings.append("paths is not a mapping; no operations extracted")
        return result
    for path, item in paths.items():
        if not isinstance(item, dict):
            result.warnings.append(f"path item {path!r} is not a mapping; ignored")
            continue
        shared_params = item.get("parameters", [])
        for method in HTTP_METHODS:
            if method not in item:
                continue
            try:
                operation = _extract_one(doc, path, method, item[method],
                                         shared_params, result.warnings)
                result.operations.append(operation)
            except Exception as exc:  # per-operation isolation by design
                result.skipped.append((path, method, f"{type(exc).__name__}: {exc}"))
    return result


def _extract_one(doc: ApiDocument, path: str, method: str,
                 entry: Any, shared_params: Any, warnings: list[str]) -> ApiOperation:
    if not isinstance(entry, dict):
        raise TypeError(f"operation entry must be a mapping, got {type(entry).__name__}")

    merged: dict[tuple[str, str], Any] = {}
    for source in (shared_params if isinstance(shared_params, list) else [],
                   entry.get("parameters", [])):
        if not isinstance(source, list):
            raise TypeError("parameters must be an array")
        for param in source:
            if not isinstance(param, dict):
                raise TypeError(f"parameter entry must be a mapping, got {param!r}")
            merged[(param.get("name"), param.get("in"))] = param

    op = ApiOperation(
        method=method,
        path_template=path,
        operation_id=entry.get("operationId"),
        security=entry.get("security", doc.raw.get("security", []) or []),
    )

    form_properties: dict[str, Any] = {}
    form_required: list[str] = []
    for (name, location), param in merged.items():
        if not isinstance(name, str) or location is None:
            raise ValueError(f"parameter missing name/in: {param!r}")
        if location == "body":
            op.request_body = {_first_consumes(doc, entry): _schema_of(param.get("schema", {}))}
            op.body_required = bool(param.get("required"))
            continue
        if location == "formData":
            form_properties[name] = _flat_schema(param)
            if param.get("required"):
                form_required.append(name)
            continue
        op.parameters.append(_parameter_spec(doc, name, location, param))

    if form_properties:
        body_schema: dict[str, Any] = {"type": "object", "properties": form_properties}
        if form_required:
            body_schema["required"] = sorted(form_required)
        op.request_body = {"application/x-www-form-urlencoded": body_schema}
        op.body_required = bool(form_required)

    if doc.spec_version is SpecVersion.OPENAPI3 and isinstance(entry.get("requestBody"), dict):
        body = entry["requestBody"]
        content = body.get("content", {})
        if isinstance(content, dict) and content:
            op.request_body = {mt: _schema_of((spec or {}).get("schema", {}))
                               for mt, spec in content.items()}
            op.body_required = bool(body.get("required"))

    # every {param} in the template needs a required path parameter
    declared_path = {p.name for p in op.parameters if p.location == "path"}
    for name in op.path_parameter_names():
        if name not in declared_path:
            op.parameters.append(ParameterSpec(name, "path", True, {"type": "string"}))
    for param in op.parameters:
        if param.location == "path":
            param.required = True

    _extract_responses(doc, entry, op, warnings)
    return op


def _parameter_spec(doc: ApiDocument, name: str, location: str, param: dict) -> ParameterSpec:
    if doc.spec_version is SpecVersion.OPENAPI2:
        schema = _flat_schema(param)
        style = _collection_format_style(param.get("collectionFormat"))
    else:
        if "schema" in param:
            schema = _schema_of(param["schema"])
        elif isinstance(param.get("content"), dict) and param["content"]:
            first = next(iter(param["content"].values()))
            schema = _schema_of((first or {}).get("schema", {}))
        else:
            schema = {}
        style = _openapi3_style(param)
    return ParameterSpec(
        name=name,
        location=location,
        required=bool(param.get("required")) or location == "path",
        schema=schema,
        style=style,
    )


def _collection_format_style(collection_format: Any) -> Optional[str]:
    if collection_format in ("csv", "ssv", "tsv", "pipes", "multi"):
        return collection_format
    return None


def _openapi3_style(param: dict) -> Optional[str]:
    style = param.get("style")
    explode = param.get("explode")
    if style == "form":
        return "multi" if explode else "csv"
    if style == "spaceDelimited":
        return "ssv"
    if style == "pipeDelimited":
        return "pipes"
    if style == "deepObject":
        return "deepObject"
    if style is None and explode is True:
        return "multi"
    return None


def _flat_schema(param: dict) -> dict:
    schema = {key: copy.deepcopy(param[key]) for key in _FLAT_SCHEMA_KEYS if key in param}
    return _normalise_schema(schema)


def _schema_of(schema: Any) -> Any:
    return _normalise_schema(copy.deepcopy(schema))


def _normalise_schema(schema: Any) -> Any:
    """OpenAPI dialect fixes: nullable:true becomes a type union with "null"."""
    if isinstance(schema, dict):
        out = {}
        for key, value in schema.items():
            if key in ("properties",):
                out[key] = {name: _normalise_schema(sub)
                            for name, sub in value.items()} if isinstance(value, dict) else value
            elif key in ("items", "additionalProperties", "not"):
                out[key] = _normalise_schema(value)
            elif key in ("allOf", "anyOf", "oneOf") and isinstance(value, list):
                out[key] = [_normalise_schema(sub) for sub in value]
            else:
                out[key] = value
        if out.pop("nullable", None) is True and "type" in out:
            declared = out["type"]
            names = declared if isinstance(declared, list) else [declared]
            if "null" not in names:
                out["type"] = list(names) + ["null"]
        return out
    return schema


def _first_consumes(doc: ApiDocument, entry: dict) -> str:
    for source in (entry.get("consumes"), doc.raw.get("consumes")):
        if isinstance(source, list) and source:
            return source[0]
    return "application/json"


def _extract_responses(doc: ApiDocument, entry: dict, op: ApiOperation,
                       warnings: list[str]) -> None:
    responses = entry.get("responses")
    if not isinstance(responses, dict) or not responses:
        # recorded and flagged, not fatal: synthesise a permissive default
        warnings.append(f"{op.key}: no responses declared; assuming default")
        op.responses["default"] = ResponseSpec("default")
        return
    for status, spec in responses.items():
        pattern = str(status)
        if pattern != "default" and not _STATUS_PATTERN_RE.match(pattern):
            continue
        if not isinstance(spec, dict):
            continue
        response = ResponseSpec(status_pattern=pattern)
        if doc.spec_version is SpecVersion.OPENAPI2:
            if "schema" in spec:
                for media_type in _produces(doc, entry):
                    response.content[media_type] = _schema_of(spec["schema"])
        else:
            content = spec.get("content")
            if isinstance(content, dict):
                for media_type, media_spec in content.items():
                    response.content[media_type] = _schema_of(
                        (media_spec or {}).get("schema", {}))
        headers = spec.get("headers")
        if isinstance(headers, dict):
            for header_name, header_spec in headers.items():
                if not isinstance(header_spec, dict):
                    continue
                if doc.spec_version is SpecVersion.OPENAPI2:
                    schema = _flat_schema(header_spec)
                    required = False
                else:
                    schema = _schema_of(header_spec.get("schema", {}))
                    required = bool(header_spec.get("required"))
                response.required_headers[header_name] = HeaderSpec(schema, required)
        links = spec.get("links")
        if isinstance(links, dict):
            for link_name, link_spec in links.items():
                if not isinstance(link_spec, dict):
                    continue
                op.links.append(_link_spec(link_name, pattern, link_spec))
        op.responses[pattern] = response
    if not op.responses:
        op.responses["default"] = ResponseSpec("default")


def _produces(doc: ApiDocument, entry: dict) -> list[str]:
    for source in (entry.get("produces"), doc.raw.get("produces")):
        if isinstance(source, list) and source:
            return list(source)
    return ["application/json"]


def _link_spec(name: str, source_status: str, spec: dict) -> LinkSpec:
    target = spec.get("operationId")
    target_is_ref = False
    if not target and isinstance(spec.get("operationRef"), str):
        target = _operation_ref_to_key(spec["operationRef"])
        target_is_ref = True
    parameters = spec.get("parameters")
    body = spec.get("requestBody")
    return LinkSpec(
        name=name,
        source_status=source_status,
        target_operation=target or "",
        parameter_bindings=dict(parameters) if isinstance(parameters, dict) else {},
        body_binding=body if isinstance(body, str) else None,
        target_is_ref=target_is_ref,
    )


def _operation_ref_to_key(ref: str) -> str:
    """``#/paths/~1users~1{id}/get`` -> ``GET /users/{id}``; empty if unparseable."""
    if not ref.startswith("#/paths/"):
        return ""
    rest = ref[len("#/paths/"):]
    parts = rest.split("/")
    if len(parts) < 2:
        return ""
    method = parts[-1]
    path = pointer_unescape(urllib.parse.unquote("/".join(parts[:-1])))
    if method.lower() not in HTTP_METHODS:
        return ""
    return f"{method.upper()} {path}"


# --- link graph -------------------------------------------------------------------

def extract_link_graph(doc_or_ops, operations: Optional[list[ApiOperation]] = None) -> LinkGraph:
    """Directed multigraph of operations connected by their declared links."""
    if operations is None:
        if isinstance(doc_or_ops, ApiDocument):
            operations = extract_operations(doc_or_ops).operations
        else:
            operations = list(doc_or_ops)
    graph = LinkGraph(nodes={op.key: op for op in operations})
    by_id = {op.operation_id: op for op in operations if op.operation_id}
    for op in operations:
        for link in op.links:
            target = None
            if link.target_is_ref:
                target = graph.nodes.get(link.target_operation)
            else:
                target = by_id.get(link.target_operation)
            if target is None:
                graph.warnings.append(
                    f"link {link.name!r} on {op.key}: unresolvable target "
                    f"{link.target_operation!r}; edge dropped")
                continue
            graph.edges.append(LinkEdge(
                source=op.key,
                target=target.key,
                status_pattern=link.source_status,
                link=link,
            ))
    return graph
