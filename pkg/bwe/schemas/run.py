import configparser
import io
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from bwe.schemas.records import U64_MAX, ExciterKind, ExciterVariant, LtvMode, PipelineVariant

LOCK_SECTION = "run"


class RunConfig(BaseModel):
    """
    Effective configuration of one CLI run. Unknown keys are rejected so that
    typos in config files fail loudly instead of silently using defaults.
    """

    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    global_seed: int = Field(0, ge=0, le=U64_MAX)
    exciter: ExciterVariant = ExciterVariant.NOISE
    exciter_seed: int = Field(0, ge=0, le=U64_MAX)
    flat_level: Optional[float] = Field(None, gt=0)
    ltv_mode: LtvMode = LtvMode.MATCH
    gain_ceiling_db: float = Field(40.0, ge=0)
    predictor: str = Field("oracle", description="'oracle' or a path to a BWELTV01 model file")
    variant: PipelineVariant = PipelineVariant.LTV
    input_dir: Optional[str] = None
    output_dir: Optional[str] = None
    manifest: Optional[str] = None
    references_dir: Optional[str] = None
    estimates_dir: Optional[str] = None
    model_out: Optional[str] = None
    workers: int = Field(0, ge=0)
    context: int = Field(2, ge=0)
    ridge: float = Field(1e-3, gt=0)
    sweep: bool = False
    wav_subtype: Literal["FLOAT", "PCM_16"] = "FLOAT"
    feature_format: Literal["binary", "csv"] = "binary"

    @property
    def uses_oracle(self) -> bool:
        return self.predictor == "oracle"

    def exciter_kind(self) -> ExciterKind:
        flat_level = self.flat_level if self.exciter == ExciterVariant.NOISE else None
        return ExciterKind(variant=self.exciter, seed=self.exciter_seed, flat_level=flat_level)

    def to_lock_text(self) -> str:
        """Serializes as a [run] section of `key = value` lines, sorted by key."""
        lines = [f"[{LOCK_SECTION}]"]
        for key, value in sorted(self.model_dump(mode="json", exclude_none=True).items()):
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_lock_text(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser.read_file(io.StringIO(text))
        return cls(**dict(parser.items(LOCK_SECTION)))
