"""Lean verifier protocol: HTTP client plus an in-process mock.

Wire contract: POST {base_url}/verify with body
{"unit_id": str, "source": str, "timeout_s": int} and response
{"unit_id": str, "ok": bool, "diagnostics": [{"severity", "line", "col",
"message"}], "elapsed_ms": int}. ok is true exactly when no diagnostic has
severity "error"; a proof placeholder alone yields ok=true with a sorry
warning, because statement-level checking intentionally accepts unproven
lemmas.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import requests

PLACEHOLDER = "sorry"
DEFAULT_IMPORTS = "import Mathlib"
DEFAULT_TIMEOUT_S = 300

_SORRY_RE = re.compile(r"(?<![A-Za-z0-9_'])sorry(?![A-Za-z0-9_'])")


class VerifierError(Exception):
    """Base class for verifier-side failures."""


class VerifierTransportError(VerifierError):
    pass


class VerifierTimeout(VerifierError):
    pass


class VerifierProtocolError(VerifierError):
    """Response did not satisfy the wire contract."""


@dataclass(frozen=True)
class CodeUnit:
    source: str
    imports_header: str = DEFAULT_IMPORTS
    unit_id: str = ""


def make_unit(body: str, unit_id: str, header: str = DEFAULT_IMPORTS) -> CodeUnit:
    """Compose a self-contained checkable unit: preamble + declaration body."""
    source = f"{header}\n\n{body}" if header else body
    return CodeUnit(source=source, imports_header=header, unit_id=unit_id)


def contains_placeholder(text: str) -> bool:
    return bool(_SORRY_RE.search(text))


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    line: int
    col: int
    message: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "severity": self.severity,
            "line": self.line,
            "col": self.col,
            "message": self.message,
        }


@dataclass(frozen=True)
class VerifierReport:
    unit_id: str
    ok: bool
    diagnostics: tuple[Diagnostic, ...]
    contains_sorry_warning: bool
    elapsed_ms: int

    def __post_init__(self) -> None:
        has_error = any(d.severity == "error" for d in self.diagnostics)
        if self.ok == has_error:
            raise VerifierProtocolError(
                f"unit {self.unit_id}: ok={self.ok} inconsistent with "
                f"{'an' if has_error else 'no'} error diagnostic"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "unit_id": self.unit_id,
            "ok": self.ok,
            "diagnostics": [d.to_dict() for d in self.diagnostics],
            "contains_sorry_warning": self.contains_sorry_warning,
            "elapsed_ms": self.elapsed_ms,
        }

    @staticmethod
    def from_dict(data: dict[str, Any]) -> "VerifierReport":
        return VerifierReport(
            unit_id=data["unit_id"],
            ok=data["ok"],
            diagnostics=tuple(
                Diagnostic(d["severity"], d["line"], d["col"], d["message"])
                for d in data["diagnostics"]
            ),
            contains_sorry_warning=data.get("contains_sorry_warning", False),
            elapsed_ms=data.get("elapsed_ms", 0),
        )


def first_error_summary(report: VerifierReport) -> str:
    """One-line summary of the first error by position: "L{line}:{col}: {message}"."""
    errors = sorted(
        (d for d in report.diagnostics if d.severity == "error"),
        key=lambda d: (d.line, d.col),
    )
    if not errors:
        raise ValueError(f"unit {report.unit_id}: no error diagnostics to summarize")
    first = errors[0]
    return f"L{first.line}:{first.col}: {first.message}"


Timeout = float
HttpTransport = Callable[[str, bytes, Timeout], tuple[int, bytes]]


def _requests_transport(url: str, body: bytes, timeout_s: Timeout) -> tuple[int, bytes]:
    try:
        resp = requests.post(
            url, data=body, headers={"Content-Type": "application/json"}, timeout=timeout_s
        )
    except requests.Timeout as exc:
        raise VerifierTimeout(f"verifier timed out after {timeout_s}s") from exc
    except requests.RequestException as exc:
        raise VerifierTransportError(f"POST {url} failed: {exc}") from exc
    return resp.status_code, resp.content


def encode_verify_request(unit: CodeUnit, timeout_s: int) -> bytes:
    """Exact wire bytes for a verify call; key order and separators are pinned."""
    body = {"unit_id": unit.unit_id, "source": unit.source, "timeout_s": timeout_s}
    return json.dumps(body, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def decode_verify_response(raw: bytes) -> VerifierReport:
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise VerifierProtocolError(f"verifier payload is not JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise VerifierProtocolError("verifier payload must be an object")
    for key in ("unit_id", "ok", "diagnostics", "elapsed_ms"):
        if key not in data:
            raise VerifierProtocolError(f"verifier payload missing key {key!r}")
    raw_diags = data["diagnostics"]
    if not isinstance(raw_diags, list):
        raise VerifierProtocolError("diagnostics must be an array")
    diags = []
    for d in raw_diags:
        try:
            diags.append(
                Diagnostic(
                    severity=d["severity"],
                    line=int(d["line"]),
                    col=int(d["col"]),
                    message=d["message"],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise VerifierProtocolError(f"bad diagnostic entry: {d!r}") from exc
    diags.sort(key=lambda d: (d.line, d.col))
    return VerifierReport(
        unit_id=data["unit_id"],
        ok=bool(data["ok"]),
        diagnostics=tuple(diags),
        contains_sorry_warning=bool(data.get("contains_sorry_warning", False)),
        elapsed_ms=int(data["elapsed_ms"]),
    )


class HttpVerifier:
    """Client for a verification service; bounded concurrency via semaphore."""

    def __init__(
        self,
        base_url: str,
        timeout_s: int = DEFAULT_TIMEOUT_S,
        parallelism: int = 4,
        transport: HttpTransport | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self._transport = transport or _requests_transport
        self._semaphore = threading.Semaphore(parallelism)

    def check(self, unit: CodeUnit) -> VerifierReport:
        body = encode_verify_request(unit, self.timeout_s)
        with self._semaphore:
            # allow a little slack over the verifier-side budget
            status, raw = self._transport(self.base_url + "/verify", body, self.timeout_s + 30)
        if not 200 <= status < 300:
            raise VerifierProtocolError(
                f"verifier returned status {status}: {raw.decode('utf-8', 'replace')[:200]}"
            )
        return decode_verify_response(raw)


def _first_unbalanced(source: str) -> tuple[int, int, str] | None:
    """(line, col, message) of the first delimiter problem, 1-based, or None."""
    pairs = {")": "(", "]": "[", "}": "{"}
    stack: list[tuple[str, int, int]] = []
    line, col = 1, 1
    for ch in source:
        if ch in "([{":
            stack.append((ch, line, col))
        elif ch in ")]}":
            if not stack or stack[-1][0] != pairs[ch]:
                return line, col, f"unexpected token '{ch}'"
            stack.pop()
        if ch == "\n":
            line += 1
            col = 1
        else:
            col += 1
    if stack:
        opener, oline, ocol = stack[-1]
        return oline, ocol, f"unclosed '{opener}'"
    return None


class MockVerifier:
    """Deterministic in-process stand-in for the verification service.

    A scripted {source -> report} table takes precedence; unscripted units
    fall back to a toy ruleset (non-empty, balanced delimiters) so negative
    paths are exercisable without a live prover. elapsed_ms is always 0.
    """

    def __init__(self, table: dict[str, VerifierReport] | None = None):
        self.table = dict(table or {})
        self.calls: list[CodeUnit] = []

    def script(self, source: str, report: VerifierReport) -> None:
        self.table[source] = report

    def check(self, unit: CodeUnit) -> VerifierReport:
        self.calls.append(unit)
        scripted = self.table.get(unit.source)
        if scripted is not None:
            # replay under the caller's unit id
            return VerifierReport(
                unit_id=unit.unit_id,
                ok=scripted.ok,
                diagnostics=scripted.diagnostics,
                contains_sorry_warning=scripted.contains_sorry_warning,
                elapsed_ms=scripted.elapsed_ms,
            )
        if not unit.source.strip():
            return VerifierReport(
                unit_id=unit.unit_id,
                ok=False,
                diagnostics=(Diagnostic("error", 1, 1, "empty source"),),
                contains_sorry_warning=False,
                elapsed_ms=0,
            )
        problem = _first_unbalanced(unit.source)
        if problem is not None:
            line, col, message = problem
            return VerifierReport(
                unit_id=unit.unit_id,
                ok=False,
                diagnostics=(Diagnostic("error", line, col, message),),
                contains_sorry_warning=False,
                elapsed_ms=0,
            )
        has_sorry = contains_placeholder(unit.source)
        diags = (
            (Diagnostic("warning", 1, 1, "declaration uses 'sorry'"),) if has_sorry else ()
        )
        return VerifierReport(
            unit_id=unit.unit_id,
            ok=True,
            diagnostics=diags,
            contains_sorry_warning=has_sorry,
            elapsed_ms=0,
        )


MOCK_SCHEME = "mock:"


def load_mock_table(path: Path | str) -> dict[str, VerifierReport]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = data["entries"] if isinstance(data, dict) else data
    table = {}
    for entry in entries:
        table[entry["source"]] = VerifierReport.from_dict(entry["report"])
    return table


def verifier_from_url(
    url: str,
    timeout_s: int = DEFAULT_TIMEOUT_S,
    parallelism: int = 4,
    transport: HttpTransport | None = None,
):
    """"mock:" or "mock:TABLE.json" give the in-process mock; anything else
    is treated as a service base URL."""
    if url.startswith(MOCK_SCHEME):
        rest = url[len(MOCK_SCHEME):]
        table = load_mock_table(rest) if rest else None
        return MockVerifier(table)
    return HttpVerifier(url, timeout_s=timeout_s, parallelism=parallelism, transport=transport)
