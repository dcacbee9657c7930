"""Tool identity and deterministic artifact headers."""

from __future__ import annotations

import hashlib
import json

TOOL_NAME = "hyptimes"
VERSION = "0.1.0"


def config_digest(cfg: dict) -> str:
    """Short stable digest of a configuration mapping."""
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def header_lines(cfg: dict, extra: dict | None = None) -> list[str]:
    """Comment header embedded in every delimited artifact."""
    lines = [
        f"# tool: {TOOL_NAME} {VERSION}",
        f"# digest: {config_digest(cfg)}",
    ]
    for key in sorted(cfg):
        lines.append(f"# {key}: {cfg[key]}")
    for key in sorted(extra or {}):
        lines.append(f"# {key}: {extra[key]}")
    return lines


def json_meta(cfg: dict) -> dict:
    """Metadata object embedded in every JSON artifact."""
    return {
        "tool": f"{TOOL_NAME} {VERSION}",
        "digest": config_digest(cfg),
        "config": dict(sorted(cfg.items())),
    }
