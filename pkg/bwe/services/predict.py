import hashlib
import logging
import math
import struct
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import LinAlgError, solve

from bwe.core.exceptions import ContractError, FormatError, NumericalError
from bwe.schemas.features import LOG_FLOOR, CoarseSpectrum, FeaturePair, GroupingMatrix, PredictorModel
from bwe.schemas.reports import RidgeSweepEntry
from bwe.services.features import config_hash, default_grouping

logger = logging.getLogger(__name__)

MODEL_MAGIC = b"BWELTV01"
_HEADER = struct.Struct("<8sIIIdQ")

DEFAULT_CONTEXT = 2
DEFAULT_RIDGE = 1e-3
RIDGE_GRID = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0)
TRAIN_FRACTION = 0.9


def context_matrix(frames: np.ndarray, context: int) -> np.ndarray:
    """
    Stacks frames t-c..t+c (edge-replicated at both ends) side by side and
    appends a bias column of ones: T x (K(2c+1) + 1).
    """
    n_frames = frames.shape[0]
    index = np.arange(n_frames)
    columns = [frames[np.clip(index + offset, 0, n_frames - 1)] for offset in range(-context, context + 1)]
    columns.append(np.ones((n_frames, 1)))
    return np.hstack(columns)


def _check_pairs(pairs: Sequence[FeaturePair]) -> Tuple[List[FeaturePair], int, int]:
    if not pairs:
        raise ContractError("Training needs at least one feature pair")
    ordered = sorted(pairs, key=lambda p: p.record.utterance_id)
    n_bands = ordered[0].x_features.band_count
    cutoff = ordered[0].record.cutoff_band_k
    for pair in ordered:
        if pair.x_features.band_count != n_bands or pair.record.cutoff_band_k != cutoff:
            raise ContractError(f"Pair {pair.record.utterance_id} disagrees on band count or cutoff band")
    return ordered, n_bands, cutoff


def _normal_equations(pairs: Sequence[FeaturePair], context: int):
    ordered, n_bands, cutoff = _check_pairs(pairs)
    dim = n_bands * (2 * context + 1) + 1
    gram = np.zeros((dim, dim))
    cross = np.zeros((dim, n_bands - cutoff))
    n_frames = 0
    # Fixed accumulation order (sorted by id, frames in time order) keeps the result reproducible.
    for pair in ordered:
        a = context_matrix(pair.x_features.frames, context)
        b = pair.y_features.frames[:, cutoff:]
        gram += a.T @ a
        cross += a.T @ b
        n_frames += a.shape[0]
    return gram, cross, n_frames, n_bands, cutoff


def _solve_ridge(gram: np.ndarray, cross: np.ndarray, ridge: float) -> np.ndarray:
    penalty = np.full(gram.shape[0], ridge)
    penalty[-1] = 0.0  # bias is not shrunk
    try:
        weights = solve(gram + np.diag(penalty), cross, assume_a="sym")
    except LinAlgError as e:
        raise NumericalError(f"Ridge system is singular for lambda={ridge}: {e}") from e
    if not np.all(np.isfinite(weights)):
        raise NumericalError(f"Ridge solution is not finite for lambda={ridge}")
    return weights.T


def train_ridge(
    pairs: Sequence[FeaturePair],
    context: int = DEFAULT_CONTEXT,
    ridge: float = DEFAULT_RIDGE,
    g: Optional[GroupingMatrix] = None,
) -> PredictorModel:
    """
    Closed-form ridge regression from context windows of X to the high bands
    of Y: (A'A + lambda I) W = A'B, with the bias column left unpenalized.
    """
    if context < 0:
        raise ContractError("Context radius must be >= 0")
    if ridge <= 0:
        raise ContractError("Ridge parameter must be positive")
    g = g or default_grouping()

    gram, cross, n_frames, n_bands, cutoff = _normal_equations(pairs, context)
    if n_frames <= gram.shape[0]:
        raise ContractError(f"{n_frames} training frames do not exceed the feature dimension {gram.shape[0]}")

    weights = _solve_ridge(gram, cross, ridge)
    logger.info(f"Trained ridge predictor on {len(pairs)} utterances / {n_frames} frames (c={context}, lambda={ridge:g})")
    return PredictorModel(weights, n_bands, cutoff, context, ridge, config_hash(g))


def bias_only_model(
    pairs: Sequence[FeaturePair],
    context: int = DEFAULT_CONTEXT,
    g: Optional[GroupingMatrix] = None,
) -> PredictorModel:
    """Zero-weight predictor whose bias is the mean of the training high bands."""
    ordered, n_bands, cutoff = _check_pairs(pairs)
    g = g or default_grouping()
    targets = np.vstack([p.y_features.frames[:, cutoff:] for p in ordered])
    weights = np.zeros((n_bands - cutoff, n_bands * (2 * context + 1) + 1))
    weights[:, -1] = targets.mean(axis=0)
    return PredictorModel(weights, n_bands, cutoff, context, math.inf, config_hash(g))


def predict(model: PredictorModel, x: CoarseSpectrum, g: Optional[GroupingMatrix] = None) -> CoarseSpectrum:
    """Bands below k pass through from x; bands >= k come from the affine map on context windows."""
    g = g or default_grouping()
    if x.band_count != model.n_bands:
        raise ContractError(f"Features have {x.band_count} bands, model expects {model.n_bands}")
    if model.config_hash != config_hash(g, x.config):
        raise ContractError(
            f"Model was trained for feature geometry {model.config_hash:#018x}, "
            f"current geometry is {config_hash(g, x.config):#018x}"
        )

    output = x.frames.copy()
    if x.n_frames:
        high = context_matrix(x.frames, model.context) @ model.weights.T
        output[:, model.cutoff_band:] = np.maximum(high, LOG_FLOOR)
    return CoarseSpectrum(output, x.config)


def oracle_predict(pair: FeaturePair) -> CoarseSpectrum:
    """Ground-truth high bands on top of the input's low bands."""
    cutoff = pair.record.cutoff_band_k
    output = pair.x_features.frames.copy()
    output[:, cutoff:] = pair.y_features.frames[:, cutoff:]
    return CoarseSpectrum(output, pair.x_features.config)


def _high_band_difference(y: CoarseSpectrum, y_hat: CoarseSpectrum, k: int) -> np.ndarray:
    if y.frames.shape != y_hat.frames.shape:
        raise ContractError(f"Cannot compare features of shapes {y.frames.shape} and {y_hat.frames.shape}")
    if k < 0 or k >= y.band_count:
        raise ContractError(f"Band index {k} outside 0..{y.band_count - 1}")
    return y.frames[:, k:] - y_hat.frames[:, k:]


def feature_loss(y: CoarseSpectrum, y_hat: CoarseSpectrum, k: int) -> float:
    """Mean |Y - Y_hat| over all frames and the bands >= k."""
    diff = _high_band_difference(y, y_hat, k)
    return float(np.mean(np.abs(diff))) if diff.size else 0.0


def squared_feature_loss(y: CoarseSpectrum, y_hat: CoarseSpectrum, k: int) -> float:
    diff = _high_band_difference(y, y_hat, k)
    return float(np.mean(diff ** 2)) if diff.size else 0.0


def corpus_losses(model: PredictorModel, pairs: Sequence[FeaturePair], g: Optional[GroupingMatrix] = None) -> Tuple[float, float]:
    """Frame-weighted (L1, squared) high-band losses of `model` over `pairs`."""
    diffs = []
    for pair in sorted(pairs, key=lambda p: p.record.utterance_id):
        y_hat = predict(model, pair.x_features, g)
        diffs.append(_high_band_difference(pair.y_features, y_hat, model.cutoff_band).reshape(-1))
    if not diffs:
        raise ContractError("Loss evaluation needs at least one feature pair")
    stacked = np.concatenate(diffs)
    return float(np.mean(np.abs(stacked))), float(np.mean(stacked ** 2))


def _split_key(utterance_id: str) -> Tuple[str, str]:
    return hashlib.sha256(utterance_id.encode("utf-8")).hexdigest(), utterance_id


def split_train_validation(ids: Sequence[str], fraction: float = TRAIN_FRACTION) -> Tuple[List[str], List[str]]:
    """
    Deterministic split by utterance: ids ordered by the sha256 of the id,
    the first round(fraction * n) (at least one) go to training.
    """
    if not 0.0 < fraction <= 1.0:
        raise ContractError(f"Training fraction must lie in (0, 1], got {fraction}")
    ordered = sorted(set(ids), key=_split_key)
    if not ordered:
        return [], []
    n_train = min(len(ordered), max(1, int(round(fraction * len(ordered)))))
    return sorted(ordered[:n_train]), sorted(ordered[n_train:])


def sweep_ridge(
    train_pairs: Sequence[FeaturePair],
    validation_pairs: Sequence[FeaturePair],
    context: int = DEFAULT_CONTEXT,
    grid: Sequence[float] = RIDGE_GRID,
    g: Optional[GroupingMatrix] = None,
) -> Tuple[PredictorModel, List[RidgeSweepEntry]]:
    """
    Trains one model per lambda on the training pairs and keeps the one with
    the lowest validation L1 loss (first one wins on ties).
    """
    if not grid:
        raise ContractError("Ridge grid is empty")
    if not validation_pairs:
        raise ContractError("Ridge sweep needs at least one validation pair")
    g = g or default_grouping()

    gram, cross, n_frames, n_bands, cutoff = _normal_equations(train_pairs, context)
    if n_frames <= gram.shape[0]:
        raise ContractError(f"{n_frames} training frames do not exceed the feature dimension {gram.shape[0]}")

    best: Optional[PredictorModel] = None
    best_loss = math.inf
    entries = []
    for ridge in grid:
        if ridge <= 0:
            raise ContractError(f"Ridge grid values must be positive, got {ridge}")
        model = PredictorModel(_solve_ridge(gram, cross, ridge), n_bands, cutoff, context, float(ridge), config_hash(g))
        train_l1, train_l2 = corpus_losses(model, train_pairs, g)
        val_l1, val_l2 = corpus_losses(model, validation_pairs, g)
        entries.append(
            RidgeSweepEntry(
                ridge=float(ridge),
                train_l1=train_l1,
                train_squared=train_l2,
                validation_l1=val_l1,
                validation_squared=val_l2,
            )
        )
        logger.info(f"lambda={ridge:g}: train L1 {train_l1:.4f}, validation L1 {val_l1:.4f}")
        if val_l1 < best_loss:
            best, best_loss = model, val_l1

    logger.info(f"Selected lambda={best.ridge:g} (validation L1 {best_loss:.4f})")
    return best, entries


def save_model(model: PredictorModel, path: Union[str, Path]) -> None:
    """BWELTV01: magic, u32 K, u32 k, u32 c, f64 lambda, u64 geometry hash, then f64 weights row-major."""
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MODEL_MAGIC, model.n_bands, model.cutoff_band, model.context, model.ridge, model.config_hash))
        f.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())


def load_model(path: Union[str, Path]) -> PredictorModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Model file not found: {path}")
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"Truncated model header in {path}")
    magic, n_bands, cutoff, context, ridge, geometry = _HEADER.unpack_from(data)
    if magic != MODEL_MAGIC:
        raise FormatError(f"{path} is not a BWELTV01 model")
    if cutoff >= n_bands:
        raise FormatError(f"{path} declares cutoff band {cutoff} for {n_bands} bands")

    rows, cols = n_bands - cutoff, n_bands * (2 * context + 1) + 1
    payload = data[_HEADER.size:]
    if len(payload) != rows * cols * 8:
        raise FormatError(f"{path} holds {len(payload)} weight bytes, expected {rows * cols * 8}")
    weights = np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)
    return PredictorModel(weights, n_bands, cutoff, context, ridge, geometry)
