import numpy as np
import pytest

from bwe.core.exceptions import ContractError, FormatError
from bwe.schemas.audio import CANONICAL_STFT, WIDEBAND_RATE, MagnitudeSpectrogram, Signal
from bwe.schemas.features import LOG_FLOOR, CoarseSpectrum
from bwe.services.features import (
    build_grouping_matrix,
    coarse_features,
    compress,
    config_hash,
    decompress,
    load_features,
    log_mel,
    log_mel_features,
    mel_filterbank,
    save_features,
)


class TestGroupingMatrix:
    def test_pseudoinverse_is_right_inverse(self, grouping):
        np.testing.assert_allclose(grouping.matrix @ grouping.pinv, np.eye(64), atol=1e-12)

    def test_pseudoinverse_is_non_negative(self, grouping):
        assert np.all(grouping.pinv >= 0)
        assert grouping.pinv.shape == (1025, 64)

    def test_band_layout(self, grouping):
        """Purpose: 16-bin bands, the last one absorbing the remaining 17 bins."""
        widths = np.diff(grouping.band_edges)
        assert np.all(widths[:-1] == 16)
        assert widths[-1] == 17
        assert grouping.band_edges[11] == 176
        assert grouping.band_lower_hz(11) == pytest.approx(4125.0)
        assert grouping.band_of_bin(1024) == 63

    def test_every_bin_in_exactly_one_band(self, grouping):
        np.testing.assert_array_equal(grouping.matrix.sum(axis=0), np.ones(1025))

    def test_arrays_are_read_only(self, grouping):
        with pytest.raises(ValueError):
            grouping.matrix[0, 0] = 5.0

    def test_more_bands_than_bins(self):
        with pytest.raises(ContractError):
            build_grouping_matrix(bins=10, bands=20)


class TestCompression:
    def test_piecewise_constant_round_trip(self, grouping):
        rng = np.random.default_rng(3)
        per_band = rng.uniform(0.0, 4.0, size=(12, 64))
        mags = MagnitudeSpectrogram(per_band @ grouping.matrix)
        restored = decompress(compress(mags, grouping), grouping)
        np.testing.assert_allclose(restored.frames, mags.frames, rtol=1e-10, atol=1e-12)

    def test_silence_hits_the_floor(self, grouping):
        coarse = compress(MagnitudeSpectrogram(np.zeros((3, 1025))), grouping)
        np.testing.assert_allclose(coarse.frames, LOG_FLOOR)
        assert LOG_FLOOR == pytest.approx(-5.0)

    def test_floor_decompresses_to_zero(self, grouping):
        restored = decompress(CoarseSpectrum(np.full((2, 64), LOG_FLOOR)), grouping)
        assert np.all(restored.frames == 0.0)

    def test_band_count_mismatch(self, grouping):
        with pytest.raises(ContractError):
            decompress(CoarseSpectrum(np.zeros((2, 32))), grouping)
        with pytest.raises(ContractError):
            compress(MagnitudeSpectrogram(np.zeros((2, 513))), grouping)

    def test_below_floor_rejected(self):
        with pytest.raises(ContractError):
            CoarseSpectrum(np.full((1, 64), -6.0))

    def test_compress_is_monotone(self, grouping):
        rng = np.random.default_rng(4)
        base = rng.uniform(0.0, 1.0, size=(6, 1025))
        louder = base + rng.uniform(1e-3, 0.5, size=base.shape)
        smaller = compress(MagnitudeSpectrogram(base), grouping).frames
        larger = compress(MagnitudeSpectrogram(louder), grouping).frames
        assert np.all(larger > smaller)

    def test_decompress_then_compress_is_a_projection(self, speech, grouping):
        """Purpose: expanding a coarse spectrum and compressing it again returns the same bands."""
        coarse = coarse_features(speech, grouping)
        again = compress(decompress(coarse, grouping), grouping)
        np.testing.assert_allclose(again.frames, coarse.frames, atol=1e-9)
        twice = compress(decompress(again, grouping), grouping)
        np.testing.assert_allclose(twice.frames, again.frames, atol=1e-9)

    def test_speech_features_shape(self, speech, grouping):
        coarse = coarse_features(speech, grouping)
        assert coarse.frames.shape == (CANONICAL_STFT.frame_count(len(speech)), 64)
        assert coarse.frames.min() >= LOG_FLOOR


class TestLogMel:
    def test_filterbank_shape(self):
        basis = mel_filterbank()
        assert basis.shape == (80, 1025)
        assert np.all(basis >= 0)

    def test_silence_is_floored(self):
        mel = log_mel(MagnitudeSpectrogram(np.zeros((4, 1025))))
        np.testing.assert_allclose(mel.frames, -5.0)

    def test_scaling_shifts_by_log_gain(self, speech):
        loud = Signal(speech.samples * 10.0, WIDEBAND_RATE)
        quiet = log_mel_features(speech).frames
        diff = log_mel_features(loud).frames - quiet
        # only frames comfortably above the floor shift by exactly one decade
        active = quiet > -3.0
        np.testing.assert_allclose(diff[active], 1.0, atol=1e-9)


class TestConfigHash:
    def test_stable_for_same_geometry(self, grouping):
        assert config_hash(grouping) == config_hash(build_grouping_matrix())
        assert 0 <= config_hash(grouping) < 2**64

    def test_changes_with_band_count(self, grouping):
        assert config_hash(grouping) != config_hash(build_grouping_matrix(bands=32))


class TestFeatureFiles:
    def test_binary_dump(self, tmp_path, speech, grouping):
        frames = coarse_features(speech, grouping).frames
        path = tmp_path / "utt.coarse.bin"
        save_features(frames, path)
        assert path.read_bytes()[:8] == b"BWEFEAT1"
        assert np.array_equal(load_features(path), frames)

    def test_csv_dump(self, tmp_path, speech, grouping):
        frames = coarse_features(speech, grouping).frames
        path = tmp_path / "utt.coarse.csv"
        save_features(frames, path, fmt="csv")
        loaded = load_features(path, fmt="csv")
        assert loaded.shape == frames.shape
        assert np.array_equal(loaded, frames)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.bin"
        path.write_bytes(b"BWESPEC1" + b"\x00" * 8)
        with pytest.raises(FormatError):
            load_features(path)

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ContractError):
            save_features(np.zeros((1, 64)), tmp_path / "x.npy", fmt="npy")
