import math
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, field_validator


class MetricReport(BaseModel):
    """Objective fidelity metrics for one extended utterance against its wideband reference."""

    utterance_id: str
    mel_l1: Optional[float] = Field(None, description="Mean |log10 mel(ref) - log10 mel(est)| over 80 bands")
    stoi: Optional[float] = Field(None, ge=0.0, le=1.0, description="Short-time objective intelligibility")
    coarse_loss_hi: Optional[float] = Field(None, description="Mean |Y - Y_hat| over coarse bands >= k")
    upper_band_energy_db: Optional[float] = Field(None, description="Energy above the band-k edge relative to total")
    # Kept for schema compatibility; both need external pretrained networks.
    clap: Optional[float] = None
    deep_feature_loss: Optional[float] = None
    error: Optional[str] = None

    @field_validator("stoi", mode="before")
    @classmethod
    def clamp_stoi(cls, v):
        if v is None:
            return v
        return min(max(float(v), 0.0), 1.0)

    @field_validator("mel_l1", "coarse_loss_hi", "upper_band_energy_db")
    @classmethod
    def validate_finite(cls, v):
        if v is not None and not math.isfinite(v):
            raise ValueError("metric values must be finite")
        return v

    @property
    def ok(self) -> bool:
        return self.error is None


class CorpusSummary(BaseModel):
    """Corpus means over successfully evaluated utterances."""

    count: int = 0
    error_count: int = 0
    failed_ids: List[str] = Field(default_factory=list)
    mel_l1_mean: Optional[float] = None
    stoi_mean: Optional[float] = None
    coarse_loss_hi_mean: Optional[float] = None
    upper_band_energy_db_mean: Optional[float] = None


class RidgeSweepEntry(BaseModel):
    """Training and validation losses of one ridge setting."""

    ridge: float = Field(..., gt=0)
    train_l1: float
    train_squared: float
    validation_l1: float
    validation_squared: float


class BatchResult(BaseModel):
    """Outcome of a corpus-wide command: which utterances succeeded and why the others failed."""

    processed: List[str] = Field(default_factory=list)
    failed: Dict[str, str] = Field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failed
