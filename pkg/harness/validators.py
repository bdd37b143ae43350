"""Cross-field checks on experiment configs that pydantic field constraints cannot express."""

import logging

from cyberenv import EnvError, NetworkSpec, get_network_spec
from harness.config import VARIANT_KINDS, VARIANTS, ExperimentConfig, HeadConfig

logger = logging.getLogger(__name__)


class ConfigValidationError(Exception):
    """Raised when an experiment config fails validation."""
    pass


def validate_head(role: str, head: HeadConfig) -> None:
    if head.kind == "mlp":
        if not head.mlp_hidden or any(width < 1 for width in head.mlp_hidden):
            raise ConfigValidationError(f"{role}.mlp_hidden must be non-empty positive widths, got {head.mlp_hidden}")
        return
    if not head.dbm_hidden or any(size < 1 for size in head.dbm_hidden):
        raise ConfigValidationError(f"{role}.dbm_hidden must be non-empty positive sizes, got {head.dbm_hidden}")
    if head.backend == "exact" and sum(head.dbm_hidden) > head.sampler.exact_cap:
        raise ConfigValidationError(
            f"{role}: {sum(head.dbm_hidden)} hidden units exceed the exact backend cap "
            f"of {head.sampler.exact_cap}; use gibbs/anneal or smaller layers"
        )


def validate_experiment_config(cfg: ExperimentConfig, batch: bool = False) -> NetworkSpec:
    """
    Validate an experiment config beyond its field constraints.

    With batch=True the heads are also checked in every kind the listed
    variants will give them.

    Returns:
        The resolved NetworkSpec

    Raises:
        ConfigValidationError: If the spec reference, head settings, seeds or variants are invalid
    """
    try:
        spec = get_network_spec(cfg.env)
    except EnvError as e:
        raise ConfigValidationError(str(e)) from e

    validate_head("policy", cfg.policy)
    validate_head("value", cfg.value)

    if len(set(cfg.seeds)) != len(cfg.seeds):
        raise ConfigValidationError(f"seeds must be distinct, got {cfg.seeds}")
    if any(seed < 0 for seed in cfg.seeds):
        raise ConfigValidationError(f"seeds must be non-negative, got {cfg.seeds}")

    unknown = [v for v in cfg.variants if v not in VARIANTS]
    if unknown:
        raise ConfigValidationError(f"unknown variants {unknown}; expected a subset of {list(VARIANTS)}")
    if not cfg.variants:
        raise ConfigValidationError("at least one variant is required")

    if batch:
        kinds = dict(zip(VARIANTS, VARIANT_KINDS))
        for variant in cfg.variants:
            policy_kind, value_kind = kinds[variant]
            validate_head("policy", cfg.policy.model_copy(update={"kind": policy_kind}))
            validate_head("value", cfg.value.model_copy(update={"kind": value_kind}))

    if any(lr <= 0 for lr in cfg.learning_rate_sweep):
        raise ConfigValidationError(f"learning_rate_sweep values must be positive, got {cfg.learning_rate_sweep}")

    logger.debug("Config %s valid for network %s", cfg.name, spec.name)
    return spec
