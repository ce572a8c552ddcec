import numpy as np
import pytest

from bwe.core.exceptions import ContractError
from bwe.schemas.audio import NARROWBAND_RATE, WIDEBAND_RATE, Signal
from bwe.schemas.features import CoarseSpectrum
from bwe.schemas.records import DegradationRecord, ExciterKind, ExciterVariant
from bwe.services.degrade import bandlimit
from bwe.services.evaluate import band_energy_db
from bwe.services.excite import excite, flatness, passband_bins, passband_level
from bwe.services.features import build_grouping_matrix, coarse_features
from bwe.services.spectral import magnitude, stft


def _tone(freq, n=48000, amplitude=0.3):
    return Signal(amplitude * np.sin(2 * np.pi * freq * np.arange(n) / WIDEBAND_RATE), WIDEBAND_RATE)


# interior frames: skip the zero-padded edges of the centred STFT
INTERIOR = slice(6, -10)


class TestPassbandPreservation:
    @pytest.mark.parametrize("variant", list(ExciterVariant))
    def test_passband_untouched(self, variant, upsampled_input, record):
        excited = excite(upsampled_input, ExciterKind(variant=variant, seed=5), record)
        assert len(excited) == len(upsampled_input)
        before = bandlimit(upsampled_input, record.f_lo, record.f_hi).samples
        after = bandlimit(excited, record.f_lo, record.f_hi).samples
        assert np.max(np.abs(after - before)) < 1e-6

    def test_empty_signal_passes_through(self, record):
        empty = Signal(np.zeros(0), WIDEBAND_RATE)
        assert len(excite(empty, ExciterKind(), record)) == 0

    def test_requires_wideband(self, record):
        with pytest.raises(ContractError):
            excite(Signal(np.zeros(800), NARROWBAND_RATE), ExciterKind(), record)

    def test_unknown_variant(self, upsampled_input, record):
        kind = ExciterKind.model_construct(variant="bogus", seed=0, flat_level=None)
        with pytest.raises(ContractError):
            excite(upsampled_input, kind, record)


class TestNoiseExciter:
    def test_upper_band_is_flat(self, upsampled_input, record, grouping):
        excited = excite(upsampled_input, ExciterKind(variant=ExciterVariant.NOISE, seed=1), record)
        spread = flatness(coarse_features(excited, grouping), record.cutoff_band_k)[INTERIOR]
        assert float(np.mean(spread)) <= 0.6

    def test_flat_level_on_silence(self, record):
        """Edge case: all-zero input still gets excitation at the requested level and an empty passband."""
        level = 0.01
        silence = Signal(np.zeros(48000), WIDEBAND_RATE)
        excited = excite(silence, ExciterKind(variant=ExciterVariant.NOISE, seed=3, flat_level=level), record)

        _, hi = passband_bins(record)
        upper = magnitude(stft(excited)).frames[INTERIOR, hi + 1:]
        ratio = float(np.sqrt(np.mean(upper ** 2))) / level
        assert 0.8 <= ratio <= 1.2
        assert np.max(np.abs(bandlimit(excited, record.f_lo, record.f_hi).samples)) < 1e-9

    def test_same_seed_is_deterministic(self, upsampled_input, record):
        kind = ExciterKind(variant=ExciterVariant.NOISE, seed=77)
        first = excite(upsampled_input, kind, record)
        second = excite(upsampled_input, kind, record)
        assert np.array_equal(first.samples, second.samples)

    def test_passband_level_uses_complete_bands(self, upsampled_input, record):
        level = passband_level(stft(upsampled_input), record)
        assert level.shape == (stft(upsampled_input).n_frames,)
        assert np.all(level >= 1e-5)

    def test_passband_without_complete_band(self, upsampled_input):
        narrow = DegradationRecord(utterance_id="n", f_lo=500.0, f_hi=3500.0)
        assert passband_level(stft(upsampled_input), narrow).size > 0
        with pytest.raises(ContractError):
            passband_level(stft(upsampled_input), narrow, g=build_grouping_matrix(bands=1))


class TestFoldExciter:
    def test_tone_is_mirrored_then_shifted(self, record):
        """Purpose: a 1875 Hz tone reappears mirrored in the first block and shifted in the second."""
        excited = excite(_tone(1875.0), ExciterKind(variant=ExciterVariant.FOLD), record)
        # passband bins 6..157: mirror lands on bin 315 - 80 = 235, shift on bin 80 + 304 = 384
        assert band_energy_db(excited, 5350.0, 5650.0) > -20.0
        assert band_energy_db(excited, 8850.0, 9150.0) > -20.0
        assert band_energy_db(excited, 6200.0, 8400.0) < -30.0


class TestRectExciter:
    def test_creates_upper_band_energy(self, record):
        excited = excite(_tone(1000.0), ExciterKind(variant=ExciterVariant.RECT), record)
        assert band_energy_db(excited, 4200.0, 24000.0) > -60.0


class TestFlatness:
    def test_flat_frames(self):
        assert np.all(flatness(CoarseSpectrum(np.full((3, 64), -2.0)), 11) == 0.0)

    def test_known_spread(self):
        frames = np.full((1, 64), -2.0)
        frames[0, 20] = -1.0
        frames[0, 5] = 3.0  # below k, ignored
        assert flatness(CoarseSpectrum(frames), 11)[0] == pytest.approx(1.0)

    def test_band_out_of_range(self):
        with pytest.raises(ContractError):
            flatness(CoarseSpectrum(np.zeros((2, 64))), 64)

    def test_noise_is_flatter_than_wideband_speech(self, speech, upsampled_input, record, grouping):
        excited = excite(upsampled_input, ExciterKind(variant=ExciterVariant.NOISE, seed=2), record)
        noise_spread = np.mean(flatness(coarse_features(excited, grouping), 11)[INTERIOR])
        speech_spread = np.mean(flatness(coarse_features(speech, grouping), 11)[INTERIOR])
        assert noise_spread < speech_spread
