#!/usr/bin/env python3
"""Structural validator for OpenAPI 3.0 documents (JSON form).

Independent of the C++ emitter: checks the OAS 3.0 rules directly so the two
implementations can disagree. Exits 0 when every document passes, 1 otherwise,
printing one line per problem.
"""

import json
import re
import sys

HTTP_METHODS = ("get", "put", "post", "delete", "options", "head", "patch", "trace")
PATH_ITEM_EXTRAS = ("summary", "description", "servers", "parameters", "$ref")
PARAM_LOCATIONS = ("query", "header", "path", "cookie")
RESPONSE_KEY = re.compile(r"^([1-5][0-9][0-9]|[1-5]XX|default)$")
TEMPLATE_VAR = re.compile(r"\{([^}/]+)\}")
SCHEMA_TYPES = ("string", "number", "integer", "boolean", "array", "object")
COMPONENT_KEYS = (
    "schemas",
    "responses",
    "parameters",
    "examples",
    "requestBodies",
    "headers",
    "securitySchemes",
    "links",
    "callbacks",
)


class Problems:
    def __init__(self, path):
        self.path = path
        self.items = []

    def add(self, where, message):
        self.items.append(f"{self.path}: {where}: {message}")


def is_ext(key):
    return key.startswith("x-")


def resolve_ref(doc, ref, problems, where):
    if not isinstance(ref, str) or not ref.startswith("#/"):
        problems.add(where, f"$ref must be an internal reference, got {ref!r}")
        return None
    node = doc
    for part in ref[2:].split("/"):
        part = part.replace("~1", "/").replace("~0", "~")
        if not isinstance(node, dict) or part not in node:
            problems.add(where, f"$ref {ref!r} does not resolve")
            return None
        node = node[part]
    return node


def check_schema(doc, schema, problems, where, depth=0):
    if depth > 32:
        problems.add(where, "schema nesting exceeds sanity bound")
        return
    if not isinstance(schema, dict):
        problems.add(where, "schema must be an object")
        return
    if "$ref" in schema:
        resolve_ref(doc, schema["$ref"], problems, where)
        return
    stype = schema.get("type")
    if stype is not None and stype not in SCHEMA_TYPES:
        problems.add(where, f"unknown schema type {stype!r}")
    if stype == "array":
        if "items" not in schema:
            problems.add(where, "array schema needs items")
        else:
            check_schema(doc, schema["items"], problems, where + ".items", depth + 1)
    for name, sub in schema.get("properties", {}).items():
        check_schema(doc, sub, problems, f"{where}.properties.{name}", depth + 1)
    for combiner in ("allOf", "anyOf", "oneOf"):
        for i, sub in enumerate(schema.get(combiner, [])):
            check_schema(doc, sub, problems, f"{where}.{combiner}[{i}]", depth + 1)


def check_parameter(doc, param, problems, where):
    if not isinstance(param, dict):
        problems.add(where, "parameter must be an object")
        return None
    if "$ref" in param:
        param = resolve_ref(doc, param["$ref"], problems, where)
        if param is None:
            return None
    name = param.get("name")
    location = param.get("in")
    if not isinstance(name, str) or not name:
        problems.add(where, "parameter needs a non-empty string name")
        return None
    if location not in PARAM_LOCATIONS:
        problems.add(where, f"parameter {name!r} has bad location {location!r}")
        return None
    if location == "path" and param.get("required") is not True:
        problems.add(where, f"path parameter {name!r} must set required: true")
    if "schema" in param:
        check_schema(doc, param["schema"], problems, f"{where}.schema")
    if "content" in param and "schema" in param:
        problems.add(where, f"parameter {name!r} cannot carry both schema and content")
    return (name, location, param)


def check_response(doc, key, response, problems, where):
    if not RESPONSE_KEY.match(key):
        problems.add(where, f"bad response key {key!r}")
    if not isinstance(response, dict):
        problems.add(where, "response must be an object")
        return
    if "$ref" in response:
        response = resolve_ref(doc, response["$ref"], problems, where)
        if response is None:
            return
    if not isinstance(response.get("description"), str):
        problems.add(where, "response needs a string description")
    for media, body in response.get("content", {}).items():
        if "/" not in media:
            problems.add(where, f"media type {media!r} is not type/subtype")
        if isinstance(body, dict) and "schema" in body:
            check_schema(doc, body["schema"], problems, f"{where}.content[{media}].schema")


def check_operation(doc, path, method, operation, problems, inherited_params):
    where = f"paths.{path}.{method}"
    if not isinstance(operation, dict):
        problems.add(where, "operation must be an object")
        return []
    responses = operation.get("responses")
    if not isinstance(responses, dict) or not responses:
        problems.add(where, "operation needs a non-empty responses object")
    else:
        for key, response in responses.items():
            if is_ext(key):
                continue
            check_response(doc, key, response, problems, f"{where}.responses.{key}")

    params = []
    seen = set()
    for i, raw in enumerate(operation.get("parameters", [])):
        entry = check_parameter(doc, raw, problems, f"{where}.parameters[{i}]")
        if entry is None:
            continue
        if (entry[0], entry[1]) in seen:
            problems.add(where, f"duplicate parameter ({entry[0]}, {entry[1]})")
        seen.add((entry[0], entry[1]))
        params.append(entry)
    for entry in inherited_params:
        if (entry[0], entry[1]) not in seen:
            params.append(entry)

    if "requestBody" in operation:
        body = operation["requestBody"]
        if isinstance(body, dict) and "$ref" in body:
            body = resolve_ref(doc, body["$ref"], problems, f"{where}.requestBody")
        if isinstance(body, dict):
            content = body.get("content")
            if not isinstance(content, dict) or not content:
                problems.add(where, "requestBody needs a non-empty content map")
            else:
                for media, entry in content.items():
                    if isinstance(entry, dict) and "schema" in entry:
                        check_schema(
                            doc, entry["schema"], problems, f"{where}.requestBody[{media}].schema"
                        )
        else:
            problems.add(where, "requestBody must be an object")

    # Path templating: every {var} needs a path parameter and vice versa.
    template_vars = set(TEMPLATE_VAR.findall(path))
    path_params = {entry[0] for entry in params if entry[1] == "path"}
    for var in sorted(template_vars - path_params):
        problems.add(where, f"template variable {{{var}}} lacks a path parameter")
    for var in sorted(path_params - template_vars):
        problems.add(where, f"path parameter {var!r} does not appear in the template")
    return params


def check_components(doc, problems):
    components = doc.get("components")
    if components is None:
        return
    if not isinstance(components, dict):
        problems.add("components", "must be an object")
        return
    for key in components:
        if key not in COMPONENT_KEYS and not is_ext(key):
            problems.add("components", f"unknown section {key!r}")
    for name, scheme in components.get("securitySchemes", {}).items():
        where = f"components.securitySchemes.{name}"
        if not isinstance(scheme, dict):
            problems.add(where, "must be an object")
            continue
        stype = scheme.get("type")
        if stype not in ("apiKey", "http", "oauth2", "openIdConnect"):
            problems.add(where, f"bad type {stype!r}")
        if stype == "apiKey":
            if not isinstance(scheme.get("name"), str):
                problems.add(where, "apiKey scheme needs a name")
            if scheme.get("in") not in ("query", "header", "cookie"):
                problems.add(where, "apiKey scheme needs in: query|header|cookie")
    for name, response in components.get("responses", {}).items():
        check_response(doc, "default", response, problems, f"components.responses.{name}")
    for name, schema in components.get("schemas", {}).items():
        check_schema(doc, schema, problems, f"components.schemas.{name}")


def check_security(doc, problems):
    declared = set(doc.get("components", {}).get("securitySchemes", {}))
    for i, requirement in enumerate(doc.get("security", [])):
        if not isinstance(requirement, dict):
            problems.add(f"security[{i}]", "must be an object")
            continue
        for name in requirement:
            if name not in declared:
                problems.add(f"security[{i}]", f"references undeclared scheme {name!r}")


def check_document(path):
    problems = Problems(path)
    try:
        with open(path, "rb") as handle:
            doc = json.load(handle)
    except (OSError, ValueError) as exc:
        problems.add("-", f"cannot parse: {exc}")
        return problems.items

    if not isinstance(doc, dict):
        problems.add("-", "root must be an object")
        return problems.items

    version = doc.get("openapi")
    if not isinstance(version, str) or not version.startswith("3.0"):
        problems.add("openapi", f"must be a 3.0.x version string, got {version!r}")

    info = doc.get("info")
    if not isinstance(info, dict):
        problems.add("info", "missing or not an object")
    else:
        if not isinstance(info.get("title"), str) or not info["title"]:
            problems.add("info.title", "must be a non-empty string")
        if not isinstance(info.get("version"), str) or not info["version"]:
            problems.add("info.version", "must be a non-empty string")

    for i, server in enumerate(doc.get("servers", [])):
        if not isinstance(server, dict) or not isinstance(server.get("url"), str):
            problems.add(f"servers[{i}]", "needs a string url")

    if "externalDocs" in doc:
        external = doc["externalDocs"]
        if not isinstance(external, dict) or not isinstance(external.get("url"), str):
            problems.add("externalDocs", "needs a string url")

    paths = doc.get("paths")
    if not isinstance(paths, dict):
        problems.add("paths", "missing or not an object")
        paths = {}
    operation_ids = set()
    for path, item in paths.items():
        if is_ext(path):
            continue
        where = f"paths.{path}"
        if not path.startswith("/"):
            problems.add(where, "path must start with '/'")
        if not isinstance(item, dict):
            problems.add(where, "path item must be an object")
            continue
        inherited = []
        for i, raw in enumerate(item.get("parameters", [])):
            entry = check_parameter(doc, raw, problems, f"{where}.parameters[{i}]")
            if entry is not None:
                inherited.append(entry)
        saw_operation = False
        for key, value in item.items():
            if key in HTTP_METHODS:
                saw_operation = True
                check_operation(doc, path, key, value, problems, inherited)
                op_id = value.get("operationId") if isinstance(value, dict) else None
                if op_id is not None:
                    if op_id in operation_ids:
                        problems.add(where, f"duplicate operationId {op_id!r}")
                    operation_ids.add(op_id)
            elif key not in PATH_ITEM_EXTRAS and not is_ext(key):
                problems.add(where, f"unknown path item key {key!r}")
        if not saw_operation and "$ref" not in item:
            problems.add(where, "path item declares no operations")

    check_components(doc, problems)
    check_security(doc, problems)
    return problems.items


def main(argv):
    if len(argv) < 2:
        print("usage: check_openapi.py <doc.json> [more.json ...]", file=sys.stderr)
        return 2
    failures = 0
    for path in argv[1:]:
        issues = check_document(path)
        if issues:
            failures += 1
            for line in issues:
                print(f"ERROR {line}")
        else:
            print(f"OK {path}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
