import enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

LOW_CUTOFF_RANGE = (0.0, 500.0)
HIGH_CUTOFF_RANGE = (3500.0, 4000.0)
# First 375 Hz band lying fully above 4 kHz when K = 64 (4125-4500 Hz).
CUTOFF_BAND = 11
U64_MAX = 2**64 - 1


class ExciterVariant(str, enum.Enum):
    NOISE = "noise"
    FOLD = "fold"
    RECT = "rect"


class LtvMode(str, enum.Enum):
    DIRECT = "direct"
    MATCH = "match"


class PipelineVariant(str, enum.Enum):
    BASELINE = "baseline"  # upsampled input only
    EXCITE = "excite"  # exciter output, no LTV stage
    LTV = "ltv"  # exciter followed by LTV filter and residual mix


class DegradationRecord(BaseModel):
    """
    Passband applied to one utterance when producing its 8 kHz input.
    Serialized as one JSON line with keys {id, f_lo, f_hi, seed, k}.
    """

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    utterance_id: str = Field(..., alias="id", min_length=1)
    f_lo: float = Field(..., ge=LOW_CUTOFF_RANGE[0], le=LOW_CUTOFF_RANGE[1], description="Lower cutoff in Hz")
    f_hi: float = Field(..., ge=HIGH_CUTOFF_RANGE[0], le=HIGH_CUTOFF_RANGE[1], description="Upper cutoff in Hz")
    seed: int = Field(0, ge=0, le=U64_MAX)
    cutoff_band_k: int = Field(CUTOFF_BAND, alias="k", ge=0, lt=64)

    def to_json_line(self) -> str:
        return self.model_dump_json(by_alias=True)


class ExciterKind(BaseModel):
    """Selects the classical exciter and its parameters."""

    model_config = ConfigDict(frozen=True)

    variant: ExciterVariant = ExciterVariant.NOISE
    seed: int = Field(0, ge=0, le=U64_MAX, description="Noise generator seed (noise variant only)")
    flat_level: Optional[float] = Field(
        None,
        gt=0,
        description="Linear per-bin STFT magnitude for the upper band; None = follow the passband",
    )

    @model_validator(mode="after")
    def validate_level(self):
        if self.flat_level is not None and self.variant != ExciterVariant.NOISE:
            raise ValueError("flat_level only applies to the noise exciter")
        return self
