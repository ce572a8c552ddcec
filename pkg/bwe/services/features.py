import hashlib
import logging
import struct
from functools import lru_cache
from pathlib import Path
from typing import Optional, Union

import librosa
import numpy as np

from bwe.core.exceptions import ContractError, FormatError
from bwe.schemas.audio import CANONICAL_STFT, MagnitudeSpectrogram, Signal, StftConfig
from bwe.schemas.features import (
    EPSILON,
    N_BANDS,
    N_MELS,
    CoarseSpectrum,
    GroupingMatrix,
    MelSpectrogram,
)
from bwe.services.spectral import magnitude, stft

logger = logging.getLogger(__name__)

FEATURE_MAGIC = b"BWEFEAT1"
_HEADER = struct.Struct("<8sII")


def build_grouping_matrix(bins: int = CANONICAL_STFT.n_bins, bands: int = N_BANDS) -> GroupingMatrix:
    """
    Uniform brickwall partition: bands 0..K-2 get floor(B/K) bins each and the
    last band absorbs the remainder (bins 1008..1024 for B=1025, K=64).
    The pseudoinverse of a 0/1 matrix with disjoint rows is its transpose
    scaled by the reciprocal row sums, which keeps it non-negative.
    """
    if bands < 1 or bins < 1:
        raise ContractError("Grouping matrix needs at least one band and one bin")
    if bands > bins:
        raise ContractError(f"Cannot split {bins} bins into {bands} bands")

    width = bins // bands
    edges = np.arange(bands + 1, dtype=np.int64) * width
    edges[-1] = bins

    matrix = np.zeros((bands, bins))
    for k in range(bands):
        matrix[k, edges[k]:edges[k + 1]] = 1.0
    pinv = matrix.T / matrix.sum(axis=1)

    for array in (matrix, pinv, edges):
        array.setflags(write=False)
    return GroupingMatrix(matrix=matrix, pinv=pinv, band_edges=edges, epsilon=EPSILON)


@lru_cache(maxsize=1)
def default_grouping() -> GroupingMatrix:
    return build_grouping_matrix()


def compress(mag: MagnitudeSpectrogram, g: GroupingMatrix) -> CoarseSpectrum:
    """X = log10(M F + eps), frame by frame."""
    if mag.n_bins != g.n_bins:
        raise ContractError(f"Magnitudes have {mag.n_bins} bins, grouping matrix expects {g.n_bins}")
    return CoarseSpectrum(np.log10(mag.frames @ g.matrix.T + g.epsilon), mag.config)


def decompress(coarse: CoarseSpectrum, g: GroupingMatrix) -> MagnitudeSpectrogram:
    """F = M+ (10**X - eps); piecewise constant within each band."""
    if coarse.band_count != g.n_bands:
        raise ContractError(f"Coarse spectrum has {coarse.band_count} bands, grouping matrix has {g.n_bands}")
    linear = np.power(10.0, coarse.frames) - g.epsilon
    # 10**log10(eps) - eps can round to a few 1e-21 below zero
    return MagnitudeSpectrogram(np.maximum(linear @ g.pinv.T, 0.0), coarse.config)


@lru_cache(maxsize=4)
def mel_filterbank(config: StftConfig = CANONICAL_STFT, n_mels: int = N_MELS) -> np.ndarray:
    """HTK-scale triangular filters over 0 Hz - Nyquist, area-normalized (n_mels x B)."""
    basis = librosa.filters.mel(
        sr=config.sample_rate,
        n_fft=config.fft_size,
        n_mels=n_mels,
        fmin=0.0,
        fmax=config.sample_rate / 2,
        htk=True,
        norm="slaney",
        dtype=np.float64,
    )
    basis.setflags(write=False)
    return basis


def log_mel(mag: MagnitudeSpectrogram) -> MelSpectrogram:
    """80-band log10 mel magnitudes floored at eps."""
    if mag.config != CANONICAL_STFT:
        raise ContractError("log_mel is defined on the canonical 48 kHz 2048/512 STFT")
    basis = mel_filterbank(mag.config)
    return MelSpectrogram(np.log10(np.maximum(mag.frames @ basis.T, EPSILON)))


def coarse_features(signal: Signal, g: Optional[GroupingMatrix] = None, config: StftConfig = CANONICAL_STFT) -> CoarseSpectrum:
    return compress(magnitude(stft(signal, config)), g or default_grouping())


def log_mel_features(signal: Signal) -> MelSpectrogram:
    return log_mel(magnitude(stft(signal, CANONICAL_STFT)))


def config_hash(g: Optional[GroupingMatrix] = None, config: StftConfig = CANONICAL_STFT) -> int:
    """64-bit fingerprint of the feature geometry a predictor was trained on."""
    g = g or default_grouping()
    description = (
        f"fft={config.fft_size};hop={config.hop};sr={config.sample_rate};"
        f"K={g.n_bands};B={g.n_bins};eps={g.epsilon!r};"
        f"edges={','.join(str(int(e)) for e in g.band_edges)}"
    )
    digest = hashlib.sha256(description.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def save_features(frames: np.ndarray, path: Union[str, Path], fmt: str = "binary") -> None:
    """
    Writes a T x K feature matrix either as BWEFEAT1 (magic, u32 T, u32 K,
    float64 row-major, little-endian) or as CSV with one frame per line.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if fmt == "csv":
        np.savetxt(path, frames, delimiter=",", fmt="%.17g")
        return
    if fmt != "binary":
        raise ContractError(f"Unknown feature format {fmt}")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(FEATURE_MAGIC, frames.shape[0], frames.shape[1]))
        f.write(np.ascontiguousarray(frames, dtype="<f8").tobytes())


def load_features(path: Union[str, Path], fmt: str = "binary") -> np.ndarray:
    if fmt == "csv":
        return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise FormatError(f"Truncated feature header in {path}")
        magic, n_frames, n_bands = _HEADER.unpack(header)
        if magic != FEATURE_MAGIC:
            raise FormatError(f"{path} is not a BWEFEAT1 file")
        payload = f.read()
    if len(payload) != n_frames * n_bands * 8:
        raise FormatError(f"{path} holds {len(payload)} payload bytes, expected {n_frames * n_bands * 8}")
    return np.frombuffer(payload, dtype="<f8").reshape(n_frames, n_bands).astype(np.float64)