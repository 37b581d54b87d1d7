"""
Pydantic models for the runner - effective run configuration

A run configuration is the YAML config file (flat `key: value` pairs plus a
nested `logging:` section) with command-line flags layered on top.
Hyperparameter keys go to Hyperparams; every other key is a RunConfig field.
"""

from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from lib.ner.constants import ALL_VARIANTS, DEFAULT_CORRUPTION_RATE, DEFAULT_SWEEP_SIZES
from lib.ner.hyperparams import Hyperparams
from lib.ner.validation import ValidationError

# Config keys that belong to Hyperparams (aliases and field names)
HYPER_KEYS = {name for name in Hyperparams.model_fields} | {
    f.alias for f in Hyperparams.model_fields.values() if f.alias
}

# Non-path settings of the logging section live outside RunConfig
NON_RUN_KEYS = ("logging",)


# ============================================================================
# Run Configuration
# ============================================================================

class RunConfig(BaseModel):
    """Hyperparameters, artifact paths and mode flags of one command"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    hyper: Hyperparams = Field(default_factory=Hyperparams)

    # Corpus files
    train: Optional[Path] = Field(None, description="Training BIO file")
    dev: Optional[Path] = Field(None, description="Development BIO file")
    test: Optional[Path] = Field(None, description="Test BIO file")
    extra: Optional[Path] = Field(None, description="Noisy extension of the training data (BIO)")
    input: Optional[Path] = Field(None, description="BIO file a command reads (corrupt, build-dict, dump-reprs)")
    raw: Optional[Path] = Field(None, description="Unlabeled text, one token per line")
    dictionary: Optional[Path] = Field(None, description="Entity dictionary, `surface<TAB>label` per line")
    features: Optional[Path] = Field(None, description="Precomputed hidden vectors")

    # Artifacts
    checkpoint: Optional[Path] = None
    centroids: Optional[Path] = None
    training_log: Optional[Path] = None
    output: Optional[Path] = None
    output_dir: Optional[Path] = None
    stats: Optional[Path] = Field(None, description="Stats sidecar (YAML); default <output>.stats.yaml")
    run_log: Optional[Path] = Field(None, description="Export of this command's log records")

    # Scoring without a model
    pred: Optional[Path] = None
    gold: Optional[Path] = None
    triples: Optional[Path] = None

    # Corruption
    mode: Literal["dict", "rate"] = "rate"
    drop_prob: float = Field(DEFAULT_CORRUPTION_RATE, ge=0.0, le=1.0, description="Entity deletion probability")

    # Experiments
    experiment: Literal["robustness", "batch_sweep", "ablation"] = "robustness"
    variants: List[str] = Field(default_factory=lambda: ["ce_only", "scl_only", "scl_rai"])
    seeds: List[int] = Field(default_factory=lambda: [1, 2, 3, 4, 5], min_length=1)
    sizes: List[int] = Field(default_factory=lambda: list(DEFAULT_SWEEP_SIZES), min_length=1)
    synthetic: bool = Field(False, description="Run experiments on a generated corpus")
    parallel: bool = False

    # Synthetic corpus
    n_train: int = Field(2000, ge=0)
    n_dev: int = Field(500, ge=0)
    n_test: int = Field(500, ge=0)
    n_extra: int = Field(2000, ge=0)
    dictionary_fraction: float = Field(0.6, ge=0.0, le=1.0)

    # Diagnostics
    log_wall_time: bool = False
    inject_fault: Optional[Literal["E", "U", "b", "W", "V"]] = None

    @field_validator("variants")
    @classmethod
    def validate_variants(cls, v):
        unknown = [name for name in v if name not in ALL_VARIANTS]
        if unknown:
            raise ValueError(f"unknown variants: {', '.join(unknown)}")
        return v

    @field_validator("sizes")
    @classmethod
    def validate_sizes(cls, v):
        if any(size < 1 for size in v):
            raise ValueError("batch sizes must be positive")
        return v

    def require(self, *names: str):
        """
        Check that the named path settings are set and exist.

        Raises:
            ValidationError: a required input is missing
        """
        for name in names:
            path = getattr(self, name)
            if path is None:
                raise ValidationError(f"--{name.replace('_', '-')} is required", field=name)
            if not Path(path).exists():
                raise ValidationError(f"{name} file not found: {path}", field=name, value=str(path))

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, exclude_none=True)


def build_run_config(file_values: Optional[Dict[str, Any]], overrides: Dict[str, Any]) -> RunConfig:
    """
    Merge config-file values and flag overrides (flags win) into a RunConfig.

    Raises:
        pydantic.ValidationError: unknown key or out-of-range value
    """
    values = {k: v for k, v in (file_values or {}).items() if k not in NON_RUN_KEYS}
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "lambda_" in values:
        values["lambda"] = values.pop("lambda_")
    hyper = {key: values.pop(key) for key in list(values) if key in HYPER_KEYS}
    return RunConfig(hyper=Hyperparams.model_validate(hyper), **values)
