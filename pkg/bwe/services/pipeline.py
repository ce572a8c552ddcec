import logging
import time
from typing import Any, Callable, Optional

from bwe.core.exceptions import ConfigError, ContractError
from bwe.core.observability import ExecutionTracer, LatencyTracker
from bwe.schemas.audio import NARROWBAND_RATE, WIDEBAND_RATE, Signal
from bwe.schemas.features import CoarseSpectrum, FeaturePair, GroupingMatrix, PredictorModel
from bwe.schemas.records import DegradationRecord, ExciterKind, PipelineVariant
from bwe.schemas.run import RunConfig
from bwe.services.degrade import degrade_to_8k, utterance_seed
from bwe.services.excite import excite
from bwe.services.features import coarse_features, config_hash, default_grouping
from bwe.services.ltv import apply_ltv, build_response, residual_mix
from bwe.services.predict import load_model, oracle_predict, predict
from bwe.services.signal_io import upsample_6x

logger = logging.getLogger(__name__)


def build_feature_pair(
    reference: Signal,
    record: DegradationRecord,
    g: Optional[GroupingMatrix] = None,
) -> FeaturePair:
    """
    Features of the pipeline input (degrade -> upsample) and of the wideband
    reference, zero-padded to the upsampled length so frames line up.
    """
    reference.require_rate(WIDEBAND_RATE, "build_feature_pair")
    g = g or default_grouping()
    upsampled = upsample_6x(degrade_to_8k(reference, record))
    target = reference.fit_length(len(upsampled))
    return FeaturePair(coarse_features(upsampled, g), coarse_features(target, g), record)


class ExtensionPipeline:
    """
    8 kHz -> 48 kHz extension: upsample, excite, predict the coarse envelope,
    shape the excitation with the LTV filter and add it to the upsampled input.
    The baseline and excite variants stop after the first and second stage.
    """

    def __init__(
        self,
        config: RunConfig,
        model: Optional[PredictorModel] = None,
        g: Optional[GroupingMatrix] = None,
    ):
        self.config = config
        self.g = g or default_grouping()
        self.kind = config.exciter_kind()
        self.latency_tracker = LatencyTracker()
        self.tracer = ExecutionTracer()

        self.model = model
        if self.model is None and self.needs_predictor and not config.uses_oracle:
            self.model = load_model(config.predictor)
        if self.model is not None:
            expected = config_hash(self.g)
            if self.model.config_hash != expected or self.model.n_bands != self.g.n_bands:
                raise ContractError(
                    f"Predictor was trained for geometry {self.model.config_hash:#018x} "
                    f"with {self.model.n_bands} bands; this pipeline uses {expected:#018x} "
                    f"with {self.g.n_bands} bands"
                )

    @property
    def needs_predictor(self) -> bool:
        return self.config.variant == PipelineVariant.LTV

    @property
    def needs_reference(self) -> bool:
        return self.needs_predictor and self.config.uses_oracle and self.model is None

    def _stage(self, utterance_id: str, stage: str, fn: Callable[..., Any], *args, **kwargs) -> Any:
        start = time.perf_counter()
        try:
            with self.latency_tracker.measure(f"{stage}_{utterance_id}"):
                result = fn(*args, **kwargs)
        except Exception as e:
            self.tracer.record_stage(
                utterance_id, stage, (time.perf_counter() - start) * 1000, success=False, error=str(e)
            )
            raise
        output = {"samples": result.samples} if isinstance(result, Signal) else {"frames": getattr(result, "frames", None)}
        self.tracer.record_stage(utterance_id, stage, (time.perf_counter() - start) * 1000, output_data=output)
        return result

    def utterance_exciter(self, utterance_id: str) -> ExciterKind:
        """Per-utterance exciter seed, so outputs do not depend on processing order."""
        return self.kind.model_copy(update={"seed": utterance_seed(self.kind.seed, utterance_id)})

    def predict_envelope(
        self,
        upsampled: Signal,
        record: DegradationRecord,
        reference: Optional[Signal] = None,
    ) -> CoarseSpectrum:
        x = coarse_features(upsampled, self.g)
        if self.model is not None:
            return predict(self.model, x, self.g)
        if reference is None:
            raise ConfigError(f"Oracle predictor needs the wideband reference for {record.utterance_id}")
        reference.require_rate(WIDEBAND_RATE, "oracle predictor")
        y = coarse_features(reference.fit_length(len(upsampled)), self.g)
        return oracle_predict(FeaturePair(x, y, record))

    def extend(
        self,
        narrowband: Signal,
        record: DegradationRecord,
        reference: Optional[Signal] = None,
    ) -> Signal:
        narrowband.require_rate(NARROWBAND_RATE, "extend")
        utt = record.utterance_id
        start = time.perf_counter()

        upsampled = self._stage(utt, "upsample", upsample_6x, narrowband)
        output = upsampled
        if self.config.variant != PipelineVariant.BASELINE:
            excited = self._stage(utt, "excite", excite, upsampled, self.utterance_exciter(utt), record)
            output = excited
            if self.config.variant == PipelineVariant.LTV:
                target = self._stage(utt, "predict", self.predict_envelope, upsampled, record, reference)
                response = build_response(target, self.g, self.config.ltv_mode)
                filtered = self._stage(
                    utt,
                    "ltv",
                    apply_ltv,
                    excited,
                    response,
                    record,
                    self.g,
                    self.config.gain_ceiling_db,
                )
                output = self._stage(utt, "mix", residual_mix, upsampled, filtered)

        self.tracer.record_realtime_factor(utt, (time.perf_counter() - start) * 1000, upsampled.duration)
        return output
