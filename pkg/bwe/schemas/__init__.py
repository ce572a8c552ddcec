from bwe.schemas.audio import (
    CANONICAL_STFT,
    NARROWBAND_RATE,
    WIDEBAND_RATE,
    ComplexSpectrogram,
    LtvResponse,
    MagnitudeSpectrogram,
    Signal,
    StftConfig,
)
from bwe.schemas.features import (
    EPSILON,
    CoarseSpectrum,
    FeaturePair,
    GroupingMatrix,
    MelSpectrogram,
    PredictorModel,
)
from bwe.schemas.records import (
    CUTOFF_BAND,
    DegradationRecord,
    ExciterKind,
    ExciterVariant,
    LtvMode,
    PipelineVariant,
)
from bwe.schemas.reports import BatchResult, CorpusSummary, MetricReport, RidgeSweepEntry
from bwe.schemas.run import RunConfig

__all__ = [
    "CANONICAL_STFT",
    "BatchResult",
    "CUTOFF_BAND",
    "EPSILON",
    "NARROWBAND_RATE",
    "WIDEBAND_RATE",
    "CoarseSpectrum",
    "ComplexSpectrogram",
    "CorpusSummary",
    "DegradationRecord",
    "ExciterKind",
    "ExciterVariant",
    "FeaturePair",
    "GroupingMatrix",
    "LtvMode",
    "LtvResponse",
    "MagnitudeSpectrogram",
    "MelSpectrogram",
    "MetricReport",
    "PipelineVariant",
    "PredictorModel",
    "RidgeSweepEntry",
    "RunConfig",
    "Signal",
    "StftConfig",
]
