"""Deterministic output writing and input fingerprinting.

Every artifact embeds the resolved run configuration and git-style blob
hashes of its input files, so a result can always be traced to exact
inputs.  JSON is written with sorted keys and a trailing newline; CSV
floats use shortest round-trip formatting.  Wall-clock timings never go
into JSON/CSV (they belong in .log sidecars) so reruns with identical
config and inputs are byte-identical.
"""

from __future__ import annotations

import hashlib
import json

SCHEMA_VERSION = 1

__all__ = [
    "SCHEMA_VERSION",
    "git_blob_sha1",
    "canonical_json",
    "write_json",
    "write_csv",
    "input_hashes",
]


def git_blob_sha1(path) -> str:
    """sha1 of ``blob <size>\\0<content>``, matching git hash-object."""
    with open(path, "rb") as fh:
        content = fh.read()
    h = hashlib.sha1()
    h.update(b"blob %d\x00" % len(content))
    h.update(content)
    return h.hexdigest()


def input_hashes(paths) -> dict:
    return {str(p): git_blob_sha1(p) for p in paths}


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2,
                      ensure_ascii=False, allow_nan=False) + "\n"


def _sanitize(obj):
    """Replace non-finite floats (JSON has no literal for them)."""
    if isinstance(obj, float):
        return obj if obj == obj and abs(obj) != float("inf") else None
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def write_json(path, payload: dict, config: dict = None,
               inputs: dict = None) -> None:
    doc = {"schema_version": SCHEMA_VERSION}
    if config is not None:
        doc["config"] = config
    if inputs is not None:
        doc["inputs"] = inputs
    doc.update(payload)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(canonical_json(_sanitize(doc)))


def provenance_comments(config: dict = None, inputs: dict = None) -> list:
    """Comment lines carrying the same provenance block as JSON outputs."""
    lines = [f"schema_version: {SCHEMA_VERSION}"]
    if config is not None:
        lines.append("config: " + json.dumps(_sanitize(config),
                                             sort_keys=True))
    if inputs is not None:
        lines.append("inputs: " + json.dumps(inputs, sort_keys=True))
    return lines


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "" if v != v else repr(v)
    return str(v)


def write_csv(path, header, rows, config: dict = None,
              inputs: dict = None) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for comment in provenance_comments(config, inputs):
            fh.write(f"# {comment}\n")
        for line in lines:
            fh.write(line + "\n")
