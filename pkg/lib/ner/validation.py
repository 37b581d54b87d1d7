"""
Input Validation Helper Module for the Span NER Engine

Provides the exception hierarchy and consistent validation of numeric
parameters, vectors, and spans.

Author: SpanNER Team
Date: 2025-02-03
"""

from typing import Any, List, Optional

import numpy as np


# ============================================================================
# Exception Classes
# ============================================================================

class ValidationError(Exception):
    """
    Raised when a parameter or configuration value fails validation.

    Contains detailed error information to help debug validation issues.
    """
    def __init__(self, message: str, field: Optional[str] = None, value: Any = None):
        self.field = field
        self.value = value
        super().__init__(message)

    def __str__(self):
        if self.field and self.value is not None:
            return f"ValidationError in '{self.field}': {self.args[0]} (got: {self.value})"
        elif self.field:
            return f"ValidationError in '{self.field}': {self.args[0]}"
        else:
            return f"ValidationError: {self.args[0]}"


class ContractViolation(ValidationError):
    """A documented precondition of an operation does not hold."""


class BioFormatError(ValueError):
    """Malformed line in a BIO or entity dictionary document."""
    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class BinaryFormatError(ValueError):
    """Bad magic, version or dimensions in a binary artifact."""


class MissingSentenceError(KeyError):
    """A precomputed feature file has no vectors for the requested sentence id."""


class NumericError(ArithmeticError):
    """Non-finite value encountered; names the parameter or tensor involved."""
    def __init__(self, message: str, parameter: Optional[str] = None):
        self.parameter = parameter
        if parameter is not None:
            message = f"{message} (parameter={parameter})"
        super().__init__(message)


class AlignmentError(ValueError):
    """Prediction and gold token streams differ."""
    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


# ============================================================================
# Validation Helper Functions
# ============================================================================

class Validator:
    """
    Static validation methods for engine parameters.

    All methods raise ValidationError on failure and return validated/converted
    values on success.
    """

    # ------------------------------------------------------------------------
    # Numeric Range Validation
    # ------------------------------------------------------------------------

    @staticmethod
    def validate_range(value: Any, name: str = "value",
                       min_val: Optional[float] = None,
                       max_val: Optional[float] = None) -> float:
        """
        Validate numeric value is within the closed range [min_val, max_val].

        Example:
            >>> alpha = Validator.validate_range(0.5, "alpha", 0.0, 1.0)
        """
        try:
            value = float(value)
        except (ValueError, TypeError):
            raise ValidationError(f"{name} must be a number", field=name, value=value)

        if not np.isfinite(value):
            raise ValidationError(f"{name} must be finite", field=name, value=value)

        if min_val is not None and value < min_val:
            raise ValidationError(f"{name} must be >= {min_val}, got {value}", field=name, value=value)

        if max_val is not None and value > max_val:
            raise ValidationError(f"{name} must be <= {max_val}, got {value}", field=name, value=value)

        return value

    @staticmethod
    def validate_probability(value: Any, name: str = "probability") -> float:
        """Validate value lies in [0, 1]."""
        return Validator.validate_range(value, name, 0.0, 1.0)

    @staticmethod
    def validate_open_unit(value: Any, name: str = "ratio") -> float:
        """Validate value lies in (0, 1]."""
        value = Validator.validate_range(value, name, None, 1.0)
        if value <= 0.0:
            raise ValidationError(f"{name} must be > 0, got {value}", field=name, value=value)
        return value

    @staticmethod
    def validate_positive(value: Any, name: str = "value") -> float:
        """Validate value is strictly positive."""
        value = Validator.validate_range(value, name)
        if value <= 0.0:
            raise ValidationError(f"{name} must be > 0, got {value}", field=name, value=value)
        return value

    @staticmethod
    def validate_choice(value: Any, choices: List[Any], name: str = "value") -> Any:
        """
        Validate value is one of the allowed choices.

        Example:
            >>> mode = Validator.validate_choice("dict", ["dict", "rate"], "mode")
        """
        if value in choices:
            return value
        raise ValidationError(f"{name} must be one of {list(choices)}, got '{value}'", field=name, value=value)

    # ------------------------------------------------------------------------
    # Vector Validation
    # ------------------------------------------------------------------------

    @staticmethod
    def validate_vector(value: Any, name: str = "vector", dim: Optional[int] = None) -> np.ndarray:
        """
        Validate a finite 1-D vector, optionally of a given dimension.

        Raises:
            ContractViolation: wrong rank or dimension
            NumericError: non-finite components
        """
        arr = np.asarray(value, dtype=np.float64)
        if arr.ndim != 1:
            raise ContractViolation(f"{name} must be 1-D, got shape {arr.shape}", field=name)
        if dim is not None and arr.shape[0] != dim:
            raise ContractViolation(f"{name} must have dimension {dim}, got {arr.shape[0]}",
                                    field=name, value=arr.shape[0])
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"{name} contains non-finite values", parameter=name)
        return arr

    @staticmethod
    def validate_finite(array: np.ndarray, name: str) -> np.ndarray:
        """Raise NumericError naming the array if any entry is NaN or infinite."""
        if not np.all(np.isfinite(array)):
            raise NumericError(f"{name} contains non-finite values", parameter=name)
        return array


# ============================================================================
# Module Metadata
# ============================================================================

__version__ = "1.0.0"
__author__ = "SpanNER Team"
__date__ = "2025-02-03"
__description__ = "Exceptions and input validation utilities for the span NER engine"
