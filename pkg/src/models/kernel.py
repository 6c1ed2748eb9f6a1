"""
Pydantic models for squared-exponential kernel hyperparameters.
"""

from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator


class SeKernelParams(BaseModel):
    """
    Squared-exponential kernel ``nu * exp(-0.5 (a-b)^T diag(rho) (a-b))``.

    ``precision`` holds the weights rho of the quadratic form (inverse squared
    lengthscales), one per input dimension.
    """

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        json_schema_extra={"example": {"amplitude": 407.0, "precision": [1.37, 5.55]}},
    )

    amplitude: float = Field(
        gt=0.0,
        description="Signal variance nu (kernel value at zero displacement)"
    )

    precision: List[float] = Field(
        min_length=1,
        description="Precision weights rho_i, one per input dimension"
    )

    @field_validator("precision")
    @classmethod
    def validate_precision(cls, v: List[float]) -> List[float]:
        """Every precision weight must be strictly positive."""
        for i, rho in enumerate(v):
            if not rho > 0.0:
                raise ValueError(f"precision[{i}] must be > 0, got {rho}")
        return v

    @property
    def input_dim(self) -> int:
        """Dimension of the input space."""
        return len(self.precision)
