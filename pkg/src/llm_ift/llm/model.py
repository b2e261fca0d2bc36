"""Data carried between prompt construction, backends and the pipeline."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from ..errors import ConfigError

FLOW_SCOPES = ("internal", "external")
BACKEND_KINDS = ("http", "replay", "mock-taint")


@dataclass(frozen=True)
class Flow:
    source: str
    sink: str
    scope: str = "internal"

    def to_json(self) -> dict:
        return {"source": self.source, "sink": self.sink, "scope": self.scope}


@dataclass(frozen=True)
class ModuleFinding:
    """Per-module result: sensitive sources, influenced assets, transformations, flows."""

    module: str
    sensitive_sources: tuple = ()
    influenced_assets: tuple = ()
    transformations: tuple = ()
    flows: tuple = ()  # of Flow

    @property
    def empty(self) -> bool:
        return not (self.sensitive_sources or self.influenced_assets
                    or self.transformations or self.flows)

    def to_json(self, with_module: bool = True) -> dict:
        doc = {}
        if with_module:
            doc["module"] = self.module
        doc["sensitive_sources"] = list(self.sensitive_sources)
        doc["influenced_assets"] = list(self.influenced_assets)
        doc["transformations"] = list(self.transformations)
        doc["flows"] = [f.to_json() for f in self.flows]
        return doc

    def dumps(self, with_module: bool = True, indent: Optional[int] = None) -> str:
        return json.dumps(self.to_json(with_module), indent=indent, ensure_ascii=False)


@dataclass(frozen=True)
class Technique:
    name: str  # net-level | gate-level
    definition: str


@dataclass
class AnalysisContext:
    """Findings gathered so far, in schedule order, plus the technique definitions."""

    findings: list = field(default_factory=list)
    techniques: list = field(default_factory=list)
    budget: int = 24000
    # per-module ModuleStats, filled in by the pipeline
    stats: list = field(default_factory=list)

    def finding(self, module: str) -> Optional[ModuleFinding]:
        for f in self.findings:
            if f.module == module:
                return f
        return None

    def modules(self) -> list:
        return [f.module for f in self.findings]

    def add(self, finding: ModuleFinding):
        if self.finding(finding.module) is not None:
            raise ValueError(f"module '{finding.module}' already analyzed")
        self.findings.append(finding)

    def copy(self) -> "AnalysisContext":
        return AnalysisContext(list(self.findings), list(self.techniques), self.budget, list(self.stats))


@dataclass(frozen=True)
class ModuleStats:
    module: str
    seconds: float
    prompt_chars: int
    reply_chars: int
    attempts: int

    def to_json(self) -> dict:
        return {"module": self.module, "seconds": round(self.seconds, 6), "prompt_chars": self.prompt_chars,
                "reply_chars": self.reply_chars, "attempts": self.attempts}


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    expected_schema: str  # finding | report
    # which module (or design, for reports) the prompt is about; not part of the
    # prompt text and therefore not part of the replay key
    subject: str = field(default="", compare=False)

    def chars(self) -> int:
        return len(self.system_text) + len(self.user_text)


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock-taint"
    endpoint: Optional[str] = None
    model: Optional[str] = None
    api_key_env: str = "LLM_IFT_API_KEY"
    temperature: float = 0.0
    max_retries: int = 2
    timeout: float = 60.0
    fixtures_dir: Optional[str] = None

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ConfigError(f"unknown backend kind '{self.kind}' (expected one of {', '.join(BACKEND_KINDS)})")
        if self.kind == "http" and not (self.endpoint and self.model):
            raise ConfigError("http backend requires 'endpoint' and 'model'")
        if self.kind == "replay" and not self.fixtures_dir:
            raise ConfigError("replay backend requires 'fixtures_dir'")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")

    def to_json(self) -> dict:
        return {
            "kind": self.kind, "endpoint": self.endpoint, "model": self.model,
            "api_key_env": self.api_key_env, "temperature": self.temperature,
            "max_retries": self.max_retries, "timeout": self.timeout,
            "fixtures_dir": self.fixtures_dir,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "BackendConfig":
        if not isinstance(doc, dict):
            raise ConfigError("'backend' must be an object")
        known = set(cls.__dataclass_fields__)
        extra = sorted(set(doc) - known)
        if extra:
            raise ConfigError(f"unknown backend option(s): {', '.join(extra)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
