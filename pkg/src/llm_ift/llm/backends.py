"""Backends that answer prompts: a chat-completions HTTP client, recorded
replies looked up by prompt hash, and the deterministic taint engine."""
from __future__ import annotations

import hashlib
import logging
import os
import threading
import time
from pathlib import Path
from typing import Optional

import httpx

from ..errors import BackendError, ConfigError, FixtureMiss, TransportError
from ..graph import build_graph, topo_sort
from ..report import dumps_report
from ..rtl.unit import resolve_hierarchy
from ..taint.engine import propagate
from ..taint.finding import finding_from_taint, report_from_taint
from .model import BackendConfig, PromptBundle

log = logging.getLogger(__name__)

RETRY_STATUS = {429, 500, 502, 503, 504}
BACKOFF_START = 1.0


def fixture_key(bundle: PromptBundle) -> str:
    """Replay key: SHA-256 over the system and user text."""
    data = bundle.system_text.encode("utf-8") + b"\x00" + bundle.user_text.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


class Backend:
    kind = "abstract"

    def complete(self, bundle: PromptBundle) -> str:
        raise NotImplementedError


class HttpBackend(Backend):
    """OpenAI-compatible ``/chat/completions`` client with retry and backoff.

    ``endpoint`` is either the full completions URL or an API base URL to which
    ``/chat/completions`` is appended.
    """

    kind = "http"

    def __init__(self, config: BackendConfig, client: Optional[httpx.Client] = None, sleep=time.sleep):
        if not config.endpoint or not config.model:
            raise ConfigError("http backend requires 'endpoint' and 'model'")
        self.config = config
        url = config.endpoint.rstrip("/")
        if not url.endswith("/chat/completions"):
            url += "/chat/completions"
        self.url = url
        self._client = client
        self._sleep = sleep

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env or "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def payload(self, bundle: PromptBundle) -> dict:
        return {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": bundle.system_text},
                {"role": "user", "content": bundle.user_text},
            ],
            "temperature": self.config.temperature,
        }

    def _post(self, body: dict) -> httpx.Response:
        if self._client is not None:
            return self._client.post(self.url, json=body, headers=self._headers(),
                                     timeout=self.config.timeout)
        with httpx.Client() as client:
            return client.post(self.url, json=body, headers=self._headers(), timeout=self.config.timeout)

    def complete(self, bundle: PromptBundle) -> str:
        body = self.payload(bundle)
        attempts = self.config.max_retries + 1
        delay = BACKOFF_START
        last = None
        for attempt in range(1, attempts + 1):
            try:
                resp = self._post(body)
            except httpx.HTTPError as exc:
                last = TransportError(f"{type(exc).__name__}: {exc}", None, attempt)
            else:
                if resp.status_code == 200:
                    return self._content(resp, attempt)
                err = TransportError(f"HTTP {resp.status_code} from {self.url}", resp.status_code, attempt)
                if resp.status_code not in RETRY_STATUS:
                    raise err
                last = err
            if attempt < attempts:
                log.warning("attempt %d/%d failed (%s); retrying in %.0fs", attempt, attempts, last, delay)
                self._sleep(delay)
                delay *= 2
        raise TransportError(f"{last} (gave up after {attempts} attempts)", last.status, attempts)

    def _content(self, resp: httpx.Response, attempt: int) -> str:
        try:
            doc = resp.json()
            content = doc["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise TransportError("malformed chat-completions response", resp.status_code, attempt) from None
        if not isinstance(content, str):
            raise TransportError("chat-completions content is not text", resp.status_code, attempt)
        return content


class ReplayBackend(Backend):
    """Answers from ``<fixtures_dir>/<sha256>.txt`` files."""

    kind = "replay"

    def __init__(self, directory):
        self.directory = Path(directory)

    def complete(self, bundle: PromptBundle) -> str:
        key = fixture_key(bundle)
        path = self.directory / f"{key}.txt"
        try:
            return path.read_bytes().decode("utf-8")
        except FileNotFoundError:
            raise FixtureMiss(key, str(self.directory)) from None


class RecordingBackend(Backend):
    """Forward to ``inner`` and store every reply as a replay fixture."""

    kind = "recording"

    def __init__(self, inner: Backend, directory):
        self.inner = inner
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.written = []
        self._lock = threading.Lock()

    def complete(self, bundle: PromptBundle) -> str:
        reply = self.inner.complete(bundle)
        key = fixture_key(bundle)
        with self._lock:
            (self.directory / f"{key}.txt").write_bytes(reply.encode("utf-8"))
            self.written.append(key)
        return reply


class MockTaintBackend(Backend):
    """Deterministic stand-in: answers from the taint fixpoint of one design.

    Finding prompts get ``finding_from_taint`` for the prompt's subject module;
    report prompts (integration or whole-design) get ``report_from_taint``.
    """

    kind = "mock-taint"

    def __init__(self, unit, seeds, g=None, schedule=None, include_clocks: bool = False):
        self.unit = unit
        self.g = g if g is not None else build_graph(resolve_hierarchy(unit), unit.module_names)
        self.schedule = schedule or topo_sort(self.g)
        self.state = propagate(unit, self.g, seeds, include_clocks=include_clocks)

    def complete(self, bundle: PromptBundle) -> str:
        if bundle.expected_schema == "finding":
            if bundle.subject not in self.unit:
                raise BackendError(f"mock-taint: unknown module '{bundle.subject}'")
            return finding_from_taint(bundle.subject, self.state, self.g).dumps(with_module=False, indent=2) + "\n"
        if bundle.expected_schema == "report":
            return dumps_report(report_from_taint(self.state, self.g, self.schedule))
        raise BackendError(f"mock-taint: unknown schema '{bundle.expected_schema}'")


def make_backend(config: BackendConfig, unit=None, seeds=(), g=None, schedule=None,
                 include_clocks: bool = False, client=None, sleep=time.sleep) -> Backend:
    """Instantiate the backend described by ``config`` for one design."""
    if config.kind == "http":
        return HttpBackend(config, client=client, sleep=sleep)
    if config.kind == "replay":
        return ReplayBackend(config.fixtures_dir)
    if config.kind == "mock-taint":
        if unit is None:
            raise ConfigError("mock-taint backend needs the design unit")
        return MockTaintBackend(unit, seeds, g, schedule, include_clocks)
    raise ConfigError(f"unknown backend kind '{config.kind}'")


def invoke(backend, bundle: PromptBundle, **design) -> str:
    """Send ``bundle`` to ``backend`` (a Backend, or a BackendConfig plus design kwargs)."""
    if isinstance(backend, BackendConfig):
        backend = make_backend(backend, **design)
    return backend.complete(bundle)
