"""
Hyperparameter model for the Span NER Engine

Pydantic model with range constraints; field defaults come from constants.py.
The contrastive weight is exposed as `lambda` in config files.

Author: SpanNER Team
Date: 2025-02-06
"""

from pydantic import BaseModel, ConfigDict, Field

from .constants import (
    DEFAULT_ALPHA,
    DEFAULT_BATCH_SIZE,
    DEFAULT_DROPOUT,
    DEFAULT_EMBED_DIM,
    DEFAULT_EPOCHS,
    DEFAULT_HIDDEN_DIM,
    DEFAULT_LAMBDA,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MAX_SPAN_LEN,
    DEFAULT_MIN_TOKEN_COUNT,
    DEFAULT_NEG_RATIO,
    DEFAULT_PROJECTION_DIM,
    DEFAULT_SEED,
    DEFAULT_TAU,
    INIT_SCALE,
)


class Hyperparams(BaseModel):
    """Training and inference hyperparameters"""
    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    lambda_: float = Field(DEFAULT_LAMBDA, alias="lambda", ge=0.0, le=1.0,
                           description="Weight of the contrastive loss")
    alpha: float = Field(DEFAULT_ALPHA, ge=0.0, le=1.0, description="Weight of the retrieval distribution")
    tau: float = Field(DEFAULT_TAU, gt=0.0, description="Contrastive temperature")
    neg_ratio: float = Field(DEFAULT_NEG_RATIO, gt=0.0, le=1.0, description="Negatives per token")
    negative_sampling: bool = Field(True, description="Sample negatives (false: every non-gold span)")
    dropout_rate: float = Field(DEFAULT_DROPOUT, ge=0.0, lt=1.0)
    batch_size: int = Field(DEFAULT_BATCH_SIZE, ge=1, description="Sentences per optimizer step")
    learning_rate: float = Field(DEFAULT_LEARNING_RATE, gt=0.0)
    epochs: int = Field(DEFAULT_EPOCHS, ge=0)
    max_span_len: int = Field(DEFAULT_MAX_SPAN_LEN, ge=1, description="Longest enumerated span in tokens")
    seed: int = Field(DEFAULT_SEED, ge=0)
    min_token_count: int = Field(DEFAULT_MIN_TOKEN_COUNT, ge=1,
                                 description="Training tokens seen fewer times share the UNK row")

    embed_dim: int = Field(DEFAULT_EMBED_DIM, ge=1, description="d_e")
    hidden_dim: int = Field(DEFAULT_HIDDEN_DIM, ge=1, description="d_h")
    projection_dim: int = Field(DEFAULT_PROJECTION_DIM, ge=1, description="d_r")
    init_scale: float = Field(INIT_SCALE, gt=0.0)

    def with_overrides(self, **changes) -> "Hyperparams":
        """Copy with changed fields, re-validated (accepts `lambda` or `lambda_`)."""
        data = self.model_dump(by_alias=True)
        if "lambda_" in changes:
            changes["lambda"] = changes.pop("lambda_")
        data.update(changes)
        return Hyperparams.model_validate(data)

    def to_json(self) -> str:
        """JSON in field order, as stored in checkpoints."""
        return self.model_dump_json(by_alias=True)


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-06"
__description__ = "Validated hyperparameter model"
