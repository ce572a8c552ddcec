from typing import Any, Dict, Optional

from pydantic import BaseModel


class StageTrace(BaseModel):
    """Structured trace of a single pipeline stage for one utterance."""

    stage: str
    duration_ms: float
    input_summary: Dict[str, Any]
    output_summary: Dict[str, Any]
    success: bool
    error: Optional[str] = None


class RunSnapshot(BaseModel):
    """Provenance record written next to every set of outputs."""

    snapshot_version: str
    command: str
    engine: Dict[str, str]
    config: Dict[str, Any]
    fingerprint: Optional[str] = None
