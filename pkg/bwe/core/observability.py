import logging
import time
from contextlib import contextmanager
from typing import Any, Dict, List, Optional

from bwe.schemas.traces import StageTrace

logger = logging.getLogger(__name__)


def configure_logging(level: str = "INFO", fmt: Optional[str] = None) -> None:
    """Configures the root logger once for CLI runs."""
    from bwe.core.config import settings

    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=fmt or settings.LOG_FORMAT,
    )


class LatencyTracker:
    """Tracks wall-clock latency of pipeline stages."""

    def __init__(self):
        self.measurements: Dict[str, float] = {}

    @contextmanager
    def measure(self, operation_name: str):
        """Context manager to measure operation latency."""
        start_time = time.perf_counter()
        try:
            yield
        finally:
            duration_ms = (time.perf_counter() - start_time) * 1000
            self.measurements[operation_name] = duration_ms
            logger.debug(f"{operation_name} completed in {duration_ms:.2f}ms")

    def get_measurement(self, operation_name: str) -> Optional[float]:
        return self.measurements.get(operation_name)


class ExecutionTracer:
    """
    Captures per-utterance stage traces for extension runs.
    Timings live only here; they never feed into audio outputs or fingerprints.
    """

    def __init__(self):
        self.traces: Dict[str, List[Dict[str, Any]]] = {}
        self.realtime_factors: Dict[str, float] = {}

    def record_stage(
        self,
        utterance_id: str,
        stage: str,
        duration_ms: float,
        input_data: Optional[Dict[str, Any]] = None,
        output_data: Optional[Dict[str, Any]] = None,
        success: bool = True,
        error: Optional[str] = None,
    ):
        trace = StageTrace(
            stage=stage,
            duration_ms=duration_ms,
            input_summary=self._summarize_data(input_data or {}),
            output_summary=self._summarize_data(output_data or {}),
            success=success,
            error=error,
        )
        self.traces.setdefault(utterance_id, []).append(trace.model_dump())
        logger.debug(f"Recorded {stage} trace for {utterance_id}")

    def record_realtime_factor(self, utterance_id: str, processing_ms: float, audio_seconds: float):
        """Processing time divided by audio duration (below 1 is faster than real time)."""
        if audio_seconds <= 0:
            return
        self.realtime_factors[utterance_id] = (processing_ms / 1000.0) / audio_seconds

    def get_full_trace(self) -> Dict[str, Any]:
        return {
            "traces": {k: self.traces[k] for k in sorted(self.traces)},
            "realtime_factors": {k: self.realtime_factors[k] for k in sorted(self.realtime_factors)},
        }

    def _summarize_data(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """Summarize payloads so traces never hold sample arrays."""
        summary = {}
        for key, value in data.items():
            if hasattr(value, "shape"):
                summary[key] = f"<array {tuple(value.shape)}>"
            elif isinstance(value, (list, tuple)):
                summary[key] = f"<list of {len(value)} items>"
            elif isinstance(value, str) and len(value) > 100:
                summary[key] = f"<string of {len(value)} chars>"
            else:
                summary[key] = value
        return summary
