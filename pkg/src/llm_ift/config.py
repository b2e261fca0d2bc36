"""Tool configuration loaded from a JSON file, with command-line overrides."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .llm.model import BackendConfig
from .llm.prompts import TECHNIQUE_NAMES, Templates, load_techniques

MIN_BUDGET = 1000
DEFAULT_BUDGET = 24000


@dataclass(frozen=True)
class ToolConfig:
    backend: BackendConfig = field(default_factory=BackendConfig)
    techniques: tuple = TECHNIQUE_NAMES
    prompt_dir: Optional[str] = None
    context_budget_chars: int = DEFAULT_BUDGET
    include_clocks: bool = False
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.context_budget_chars, int) or self.context_budget_chars < MIN_BUDGET:
            raise ConfigError(f"context_budget_chars must be an integer >= {MIN_BUDGET}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        if self.prompt_dir is not None and not Path(self.prompt_dir).is_dir():
            raise ConfigError(f"prompt_dir does not exist: {self.prompt_dir}")
        fx = self.backend.fixtures_dir
        if self.backend.kind == "replay" and fx and not Path(fx).is_dir():
            raise ConfigError(f"fixtures_dir does not exist: {fx}")
        for t in self.techniques:
            if t not in TECHNIQUE_NAMES:
                raise ConfigError(f"unknown technique '{t}' (expected {', '.join(TECHNIQUE_NAMES)})")

    def templates(self) -> Templates:
        return Templates(self.prompt_dir)

    def technique_defs(self) -> list:
        return load_techniques(self.techniques, self.prompt_dir)

    def replace(self, **changes) -> "ToolConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    def to_json(self) -> dict:
        return {
            "backend": self.backend.to_json(),
            "techniques": list(self.techniques),
            "prompt_dir": self.prompt_dir,
            "context_budget_chars": self.context_budget_chars,
            "include_clocks": self.include_clocks,
            "workers": self.workers,
        }


_KEYS = {"backend", "techniques", "prompt_dir", "context_budget_chars", "include_clocks", "workers"}


def _resolve(base: Path, p: Optional[str]) -> Optional[str]:
    if p is None:
        return None
    path = Path(p)
    return str(path if path.is_absolute() else base / path)


def config_from_json(doc: dict, base: Path = Path(".")) -> ToolConfig:
    """Build a ToolConfig from a parsed config document; relative paths resolve against ``base``."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    extra = sorted(set(doc) - _KEYS)
    if extra:
        raise ConfigError(f"unknown config key(s): {', '.join(extra)}")
    backend = dict(doc.get("backend") or {})
    if "fixtures_dir" in backend:
        backend["fixtures_dir"] = _resolve(base, backend["fixtures_dir"])
    techniques = doc.get("techniques", list(TECHNIQUE_NAMES))
    if not isinstance(techniques, list) or not all(isinstance(t, str) for t in techniques):
        raise ConfigError("techniques must be a list of names")
    include_clocks = doc.get("include_clocks", False)
    if not isinstance(include_clocks, bool):
        raise ConfigError("include_clocks must be true or false")
    return ToolConfig(
        backend=BackendConfig.from_json(backend),
        techniques=tuple(techniques),
        prompt_dir=_resolve(base, doc.get("prompt_dir")),
        context_budget_chars=doc.get("context_budget_chars", DEFAULT_BUDGET),
        include_clocks=include_clocks,
        workers=doc.get("workers", 1),
    )


def load_config(path=None) -> ToolConfig:
    if path is None:
        return ToolConfig()
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return config_from_json(doc, path.parent)
