"""
Experiment configuration: one YAML document plus `key=value` overrides.

Override keys are dotted paths into the config (`search.max_epochs=3`). A bare
name (`max_epochs=3`) is accepted when exactly one field carries it; top-level
fields always win. Values are read as YAML scalars or flow collections.
"""

import os
from collections.abc import Iterator, Mapping, Sequence
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from darts_plus.errors import ConfigError
from darts_plus.lemma import LemmaConfig, LemmaSweepConfig
from darts_plus.runner import config as cfg
from darts_plus.runner.evaluate import EvalConfig
from darts_plus.search import DataConfig, SearchConfig
from darts_plus.space import SpaceConfig
from darts_plus.stopping import Criterion1Config, Criterion2Config, StoppingConfig

Command = Literal["search", "eval-genotype", "lemma-train", "lemma-sigma0", "lemma-grid"]


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Command = cfg.CMD_SEARCH
    seed: int = Field(0, ge=0, lt=2**64)
    out_dir: Path = Path(cfg.DEF_OUT_DIR)
    emit_dot: bool = True
    emit_epochs: bool = True
    genotype_path: Path | None = None

    space: SpaceConfig = Field(default_factory=SpaceConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    search: SearchConfig = Field(default_factory=SearchConfig)
    stopping: StoppingConfig = Field(default_factory=StoppingConfig)
    criterion1: Criterion1Config = Field(default_factory=Criterion1Config)
    criterion2: Criterion2Config = Field(default_factory=Criterion2Config)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    lemma: LemmaConfig = Field(default_factory=LemmaConfig)
    sweep: LemmaSweepConfig = Field(default_factory=LemmaSweepConfig)

    @model_validator(mode="after")
    def _one_seed(self) -> "ExperimentConfig":
        # the run seed drives every component
        self.search.seed = self.seed
        self.lemma.seed = self.seed
        return self

    def echo(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=False)


def _leaf_paths(model: type[BaseModel], prefix: tuple[str, ...] = ()) -> Iterator[tuple[str, ...]]:
    for name, field in model.model_fields.items():
        annotation = field.annotation
        if isinstance(annotation, type) and issubclass(annotation, BaseModel):
            yield from _leaf_paths(annotation, prefix + (name,))
        else:
            yield prefix + (name,)


def resolve_key(key: str) -> tuple[str, ...]:
    if not key:
        raise ConfigError("<override>", "empty key")
    if "." in key or key in ExperimentConfig.model_fields:
        return tuple(key.split("."))
    matches = [path for path in _leaf_paths(ExperimentConfig) if path[-1] == key]
    if not matches:
        raise ConfigError(key, "unknown key")
    if len(matches) > 1:
        options = ", ".join(".".join(path) for path in matches)
        raise ConfigError(key, f"ambiguous key, use one of: {options}")
    return matches[0]


def assign(document: dict[str, Any], path: tuple[str, ...], value: Any) -> None:
    node = document
    for part in path[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError(".".join(path), f"{part} is not a section")
        node = child
    node[path[-1]] = value


def apply_override(document: dict[str, Any], override: str) -> None:
    key, sep, raw = override.partition("=")
    if not sep:
        raise ConfigError(override, "override must look like key=value")
    path = resolve_key(key.strip())
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigError(".".join(path), f"cannot parse value {raw!r}: {exc}") from exc
    assign(document, path, value)


def _check_component_seeds(document: dict[str, Any]) -> None:
    seed = document.get("seed", 0)
    for name in ("search", "lemma"):
        section = document.get(name)
        if isinstance(section, dict) and "seed" in section and section["seed"] != seed:
            raise ConfigError(f"{name}.seed", f"differs from the run seed {seed}; set the top-level seed instead")


def load_document(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"file not found: {path}")
    try:
        with open(path, encoding="utf-8") as f:
            document = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"{path} is not valid YAML: {exc}") from exc
    if document is None:
        return {}
    if not isinstance(document, dict):
        raise ConfigError("config", f"{path} must hold a mapping at the top level")
    return document


def _writable(directory: Path) -> bool:
    probe = directory.resolve()
    while not probe.exists():
        probe = probe.parent
    return probe.is_dir() and os.access(probe, os.W_OK)


def parse_config(
    path: str | Path | None = None,
    overrides: Sequence[str] = (),
    assignments: Mapping[str, Any] | None = None,
) -> ExperimentConfig:
    """
    Load `path`, apply the `key=value` overrides, then `assignments`.

    Assignments map dotted keys to values that are used as given, without
    YAML parsing. The command line passes paths this way.
    """
    document = load_document(path)
    for override in overrides:
        apply_override(document, override)
    for key, value in (assignments or {}).items():
        assign(document, resolve_key(key), value)
    _check_component_seeds(document)
    try:
        config = ExperimentConfig.model_validate(document)
    except ValidationError as exc:
        error = exc.errors()[0]
        key_path = ".".join(str(part) for part in error["loc"]) or "config"
        raise ConfigError(key_path, error["msg"]) from exc

    if config.command == cfg.CMD_EVAL and config.genotype_path is None:
        raise ConfigError("genotype_path", "eval-genotype needs a genotype file")
    if config.genotype_path is not None and not config.genotype_path.is_file():
        raise ConfigError("genotype_path", f"file not found: {config.genotype_path}")
    if not _writable(config.out_dir):
        raise ConfigError("out_dir", f"{config.out_dir} is not writable")
    return config
