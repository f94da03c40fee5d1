"""Small shared helpers: deterministic JSON IO and markdown code-block handling."""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path
from typing import Any

_FENCE_RE = re.compile(r"```[a-zA-Z0-9_+-]*\n(.*?)```", re.DOTALL)


def json_dumps_pinned(obj: Any) -> str:
    """Serialize with a pinned, reproducible layout (sorted keys, 2-space indent)."""
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path: Path | str, obj: Any) -> None:
    Path(path).write_text(json_dumps_pinned(obj), encoding="utf-8")


def read_json(path: Path | str) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def extract_code_block(text: str) -> str:
    """Return the contents of the first fenced code block, or the stripped text
    when no fence is present. Model outputs wrap code in ``` fences more often
    than not, but not reliably."""
    m = _FENCE_RE.search(text)
    if m:
        return m.group(1).strip()
    return text.strip()


def extract_json_object(text: str) -> str:
    """Return the first top-level JSON object embedded in ``text``.

    Models wrap JSON in prose and fences; this scans for balanced ``{...}``
    candidates (string- and escape-aware) and returns the first one that
    parses. Raises ValueError when no candidate parses.
    """
    block = extract_code_block(text)
    for candidate_source in (block, text):
        start = candidate_source.find("{")
        while start != -1:
            candidate = _balanced_object(candidate_source, start)
            if candidate is not None:
                try:
                    json.loads(candidate)
                    return candidate
                except json.JSONDecodeError:
                    pass
            start = candidate_source.find("{", start + 1)
    raise ValueError("no parseable JSON object found in text")


def _balanced_object(text: str, start: int) -> str | None:
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None
