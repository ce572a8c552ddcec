from dataclasses import dataclass

import numpy as np

from bwe.core.exceptions import ContractError
from bwe.schemas.audio import CANONICAL_STFT, StftConfig
from bwe.schemas.records import DegradationRecord

EPSILON = 1e-5
LOG_FLOOR = float(np.log10(EPSILON))
N_BANDS = 64
N_MELS = 80


@dataclass(frozen=True)
class GroupingMatrix:
    """
    Non-overlapping brickwall filterbank M (K x B) with its closed-form
    pseudoinverse M+ (B x K). Row k is 1 on bins [band_edges[k], band_edges[k+1]).
    """

    matrix: np.ndarray
    pinv: np.ndarray
    band_edges: np.ndarray
    epsilon: float = EPSILON

    @property
    def n_bands(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def n_bins(self) -> int:
        return int(self.matrix.shape[1])

    def band_of_bin(self, bin_index: int) -> int:
        return int(np.searchsorted(self.band_edges, bin_index, side="right") - 1)

    def band_bins(self, band: int) -> slice:
        return slice(int(self.band_edges[band]), int(self.band_edges[band + 1]))

    def band_lower_hz(self, band: int, config: StftConfig = CANONICAL_STFT) -> float:
        return float(self.band_edges[band]) * config.bin_hz


@dataclass(frozen=True)
class CoarseSpectrum:
    """T x K coarse log10-magnitude features, log10(M F + eps)."""

    frames: np.ndarray
    config: StftConfig = CANONICAL_STFT

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2:
            raise ContractError(f"Coarse spectrum must be 2-D, got shape {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise ContractError("Coarse spectrum must be finite")
        if frames.size and frames.min() < LOG_FLOOR - 1e-9:
            raise ContractError(f"Coarse values must stay above log10(eps) = {LOG_FLOOR}")
        object.__setattr__(self, "frames", frames)

    @property
    def band_count(self) -> int:
        return int(self.frames.shape[1])

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])


@dataclass(frozen=True)
class MelSpectrogram:
    """T x 80 log10 mel energies."""

    frames: np.ndarray

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or not np.all(np.isfinite(frames)):
            raise ContractError("Mel spectrogram must be a finite 2-D matrix")
        object.__setattr__(self, "frames", frames)


@dataclass(frozen=True)
class FeaturePair:
    """Input features X (upsampled bandlimited signal) and target features Y (wideband)."""

    x_features: CoarseSpectrum
    y_features: CoarseSpectrum
    record: DegradationRecord

    def __post_init__(self):
        if self.x_features.frames.shape != self.y_features.frames.shape:
            raise ContractError(
                f"Feature pair {self.record.utterance_id} has mismatched shapes "
                f"{self.x_features.frames.shape} vs {self.y_features.frames.shape}"
            )


@dataclass(frozen=True)
class PredictorModel:
    """
    Affine map from a (2c+1)-frame context of X (plus bias) to the bands >= k of Y.
    weights has shape (K - k) x (K * (2c + 1) + 1); the last column is the bias.
    """

    weights: np.ndarray
    n_bands: int
    cutoff_band: int
    context: int
    ridge: float
    config_hash: int

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        expected = (self.n_bands - self.cutoff_band, self.n_bands * (2 * self.context + 1) + 1)
        if self.context < 0:
            raise ContractError("Context radius must be >= 0")
        if weights.shape != expected:
            raise ContractError(f"Predictor weights must have shape {expected}, got {weights.shape}")
        if not np.all(np.isfinite(weights)):
            raise ContractError("Predictor weights must be finite")
        object.__setattr__(self, "weights", weights)

    @property
    def bias(self) -> np.ndarray:
        return self.weights[:, -1]
