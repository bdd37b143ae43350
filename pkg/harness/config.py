"""Experiment configuration: YAML on disk, pydantic models in memory."""

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field

from agent.ppo import PpoConfig
from dbm.sampling import SamplerConfig

HeadKind = Literal["mlp", "dbm"]
BackendName = Literal["exact", "gibbs", "anneal"]

# (policy kind, value kind) for the four comparison variants, baseline first
VARIANT_KINDS: tuple[tuple[str, str], ...] = (("mlp", "mlp"), ("dbm", "mlp"), ("mlp", "dbm"), ("dbm", "dbm"))
BASELINE_VARIANT = "policy-mlp_value-mlp"


def variant_name(policy_kind: str, value_kind: str) -> str:
    return f"policy-{policy_kind}_value-{value_kind}"


VARIANTS: tuple[str, ...] = tuple(variant_name(p, v) for p, v in VARIANT_KINDS)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class HeadConfig(_Strict):
    """One function approximator; mlp_* fields apply to MLP heads, the rest to DBM heads."""
    kind: HeadKind = "mlp"
    mlp_hidden: list[int] = Field(default_factory=lambda: [64, 64])
    activation: Literal["tanh", "relu", "linear"] = "tanh"
    dbm_hidden: list[int] = Field(default_factory=lambda: [8, 8])
    backend: BackendName = "exact"
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)
    init_scale: float = Field(default=0.1, gt=0)
    beta: float = Field(default=1.0, gt=0)


class PlateauConfig(_Strict):
    window: int = Field(default=5, ge=1, description="Moving-average window in episodes.")
    tolerance_frac: float = Field(default=0.05, ge=0)
    hold: int = Field(default=5, ge=1)


class ExperimentConfig(_Strict):
    name: str = "experiment"
    env: str = Field(default="default", description="Named network spec or path to a spec YAML file.")
    ppo: PpoConfig = Field(default_factory=PpoConfig)
    policy: HeadConfig = Field(default_factory=HeadConfig)
    value: HeadConfig = Field(default_factory=HeadConfig)
    episodes: int = Field(default=300, ge=1)
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    output_dir: str | None = None
    variants: list[str] = Field(default_factory=lambda: list(VARIANTS))
    learning_rate_sweep: list[float] = Field(default_factory=list)
    plateau: PlateauConfig = Field(default_factory=PlateauConfig)
    record_wall_time: bool = False
    trace: bool = False

    @property
    def variant(self) -> str:
        return variant_name(self.policy.kind, self.value.kind)


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate a YAML experiment config (unknown keys are errors)."""
    raw = yaml.safe_load(Path(path).read_text()) or {}
    return ExperimentConfig.model_validate(raw)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return cfg.model_dump(mode="json")


def dump_experiment_config(cfg: ExperimentConfig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=False))
    return path


def apply_overrides(
    cfg: ExperimentConfig,
    seeds: list[int] | None = None,
    out: str | None = None,
    backend: str | None = None,
    episodes: int | None = None,
    trace: bool | None = None,
    learning_rate: float | None = None,
) -> ExperimentConfig:
    """CLI flags win over file values; the result is re-validated."""
    data = config_to_dict(cfg)
    if seeds is not None:
        data["seeds"] = seeds
    if out is not None:
        data["output_dir"] = out
    if backend is not None:
        data["policy"]["backend"] = backend
        data["value"]["backend"] = backend
    if episodes is not None:
        data["episodes"] = episodes
    if trace:
        data["trace"] = True
    if learning_rate is not None:
        data["ppo"]["learning_rate"] = learning_rate
    return ExperimentConfig.model_validate(data)


def with_variant(cfg: ExperimentConfig, variant: str) -> ExperimentConfig:
    """The same experiment with head kinds set for one of the four variants."""
    kinds = dict(zip(VARIANTS, VARIANT_KINDS))
    if variant not in kinds:
        raise ValueError(f"Unknown variant {variant!r}: expected one of {list(VARIANTS)}")
    policy_kind, value_kind = kinds[variant]
    data = config_to_dict(cfg)
    data["policy"]["kind"] = policy_kind
    data["value"]["kind"] = value_kind
    return ExperimentConfig.model_validate(data)


def variant_configs(cfg: ExperimentConfig) -> list[ExperimentConfig]:
    return [with_variant(cfg, v) for v in cfg.variants]
