"""Engine configuration: a single YAML file with ${ENV_VAR} interpolation."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .backends import (
    Backend,
    MockBackend,
    MockScript,
    RemoteBackend,
    SamplingParams,
    Stage,
    default_params,
)
from .critic_debate import DebatePolicy
from .interpreter import ClassifierHead, HashEncoder
from .sandbox import ExecLimits

_ENV_PATTERN = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


class ConfigError(ValueError):
    pass


def _interpolate(text: str) -> str:
    def replace(match: re.Match) -> str:
        name = match.group(1)
        if name not in os.environ:
            raise ConfigError(f"config references unset environment variable {name}")
        return os.environ[name]

    return _ENV_PATTERN.sub(replace, text)


@dataclass
class BackendProfile:
    kind: str  # mock | remote
    mock_script: Optional[str] = None
    endpoint: Optional[str] = None
    model: Optional[str] = None


@dataclass
class EngineConfig:
    backend: BackendProfile
    run_store_root: str
    classifier_head_path: str
    policy: DebatePolicy = field(default_factory=DebatePolicy)
    limits: ExecLimits = field(default_factory=ExecLimits)
    sampling_overrides: dict[Stage, SamplingParams] = field(default_factory=dict)
    runner: Optional[list[str]] = None
    workers: int = 4

    def load_head(self) -> ClassifierHead:
        return ClassifierHead.from_file(self.classifier_head_path)

    def make_encoder(self) -> HashEncoder:
        return HashEncoder(self.load_head().dim)

    def make_backend(self):
        if self.backend.kind == "mock":
            if not self.backend.mock_script:
                raise ConfigError("mock backend requires mock_script path")
            return MockBackend(MockScript.from_file(self.backend.mock_script))
        if self.backend.kind == "remote":
            if not (self.backend.endpoint and self.backend.model):
                raise ConfigError("remote backend requires endpoint and model")
            return RemoteBackend(self.backend.endpoint, self.backend.model)
        raise ConfigError(f"unknown backend kind {self.backend.kind!r}")

    def params_for(self, stage: Stage) -> SamplingParams:
        return self.sampling_overrides.get(stage, default_params(stage))


def load_config(path: str | Path) -> EngineConfig:
    raw = yaml.safe_load(_interpolate(Path(path).read_text())) or {}
    backend_raw = raw.get("backend", {})
    profile = BackendProfile(
        kind=backend_raw.get("kind", "mock"),
        mock_script=backend_raw.get("mock_script"),
        endpoint=backend_raw.get("endpoint"),
        model=backend_raw.get("model"),
    )
    policy_raw = raw.get("debate", {})
    limits_raw = raw.get("limits", {})
    overrides: dict[Stage, SamplingParams] = {}
    for stage_name, params in (raw.get("sampling_overrides") or {}).items():
        stage = Stage(stage_name)
        base = default_params(stage)
        overrides[stage] = SamplingParams(
            temperature=params.get("temperature", base.temperature),
            top_p=params.get("top_p", base.top_p),
            max_new_tokens=params.get("max_new_tokens", base.max_new_tokens),
        )
    config = EngineConfig(
        backend=profile,
        run_store_root=raw.get("run_store_root", "runs"),
        classifier_head_path=raw.get("classifier_head_path", ""),
        policy=DebatePolicy(
            max_rounds=policy_raw.get("max_rounds", 5),
            agreement_window=policy_raw.get("agreement_window", 2),
        ),
        limits=ExecLimits(
            wall_time=limits_raw.get("wall_time", 60.0),
            memory=limits_raw.get("memory", 1 << 30),
            network=limits_raw.get("network", "disabled"),
        ),
        sampling_overrides=overrides,
        runner=raw.get("runner"),
        workers=int(raw.get("workers", 4)),
    )
    for name in ("classifier_head_path",):
        value = getattr(config, name)
        if value and not Path(value).exists():
            raise ConfigError(f"{name} does not exist: {value}")
    if config.backend.kind == "mock" and config.backend.mock_script:
        if not Path(config.backend.mock_script).exists():
            raise ConfigError(f"mock_script does not exist: {config.backend.mock_script}")
    return config
