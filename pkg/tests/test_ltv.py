import numpy as np
import pytest
import scipy.fft

from bwe.core.exceptions import ContractError
from bwe.schemas.audio import CANONICAL_STFT, NARROWBAND_RATE, WIDEBAND_RATE, LtvResponse, Signal
from bwe.schemas.features import LOG_FLOOR, CoarseSpectrum
from bwe.schemas.records import ExciterKind, ExciterVariant, LtvMode
from bwe.services.excite import excite
from bwe.services.features import coarse_features
from bwe.services.ltv import apply_ltv, build_response, cutoff_hz, residual_mix

N = 24576  # 52 STFT frames


def _noise(seed, n=N, scale=0.1):
    return Signal(np.random.default_rng(seed).standard_normal(n) * scale, WIDEBAND_RATE)


def _frames(n=N):
    return CANONICAL_STFT.frame_count(n)


class TestBuildResponse:
    def test_piecewise_constant_per_band(self, grouping):
        target = CoarseSpectrum(np.random.default_rng(0).uniform(-3.0, 0.0, (_frames(), 64)))
        response = build_response(target, grouping)
        assert response.frames.shape == (_frames(), 1025)
        for band in (0, 11, 40, 63):
            block = response.frames[:, grouping.band_bins(band)]
            np.testing.assert_allclose(block, block[:, :1].repeat(block.shape[1], axis=1))

    def test_floor_target_gives_zero_response(self, grouping):
        response = build_response(CoarseSpectrum(np.full((4, 64), LOG_FLOOR)), grouping)
        assert np.all(response.frames == 0.0)

    def test_band_count_mismatch(self, grouping):
        with pytest.raises(ContractError):
            build_response(CoarseSpectrum(np.zeros((4, 32))), grouping)


class TestApplyLtv:
    def test_unit_response_is_identity(self):
        x = _noise(1)
        response = LtvResponse(np.ones((_frames(), 1025)), LtvMode.DIRECT)
        y = apply_ltv(x, response)
        np.testing.assert_allclose(y.samples, x.samples, atol=1e-9)

    def test_zero_response_silences(self, grouping):
        response = build_response(CoarseSpectrum(np.full((_frames(), 64), LOG_FLOOR)), grouping, LtvMode.DIRECT)
        y = apply_ltv(_noise(2), response)
        assert np.max(np.abs(y.samples)) < 1e-12

    def test_impulse_response_is_zero_phase(self, grouping):
        """Purpose: a real, time-invariant gain keeps an impulse's response symmetric about the impulse."""
        impulse = np.zeros(N)
        impulse[10240] = 1.0
        per_band = np.random.default_rng(5).uniform(-2.0, 0.0, 64)
        target = CoarseSpectrum(np.tile(per_band, (_frames(), 1)))
        response = build_response(target, grouping, LtvMode.DIRECT)

        y = apply_ltv(Signal(impulse, WIDEBAND_RATE), response).samples
        left = y[10240 - 4000:10240][::-1]
        right = y[10241:10240 + 4001]
        assert np.max(np.abs(y)) > 0
        assert np.max(np.abs(left - right)) < 1e-9

    def test_direct_mode_is_homogeneous(self, grouping):
        target = CoarseSpectrum(np.random.default_rng(6).uniform(-3.0, 0.0, (_frames(), 64)))
        response = build_response(target, grouping, LtvMode.DIRECT)
        x = _noise(3)
        single = apply_ltv(x, response).samples
        scaled = apply_ltv(Signal(x.samples * 2.5, WIDEBAND_RATE), response).samples
        np.testing.assert_allclose(scaled, 2.5 * single, atol=1e-10)

    def test_match_mode_with_own_envelope_is_near_identity(self, grouping):
        x = _noise(4)
        response = build_response(coarse_features(x, grouping), grouping, LtvMode.MATCH)
        y = apply_ltv(x, response, g=grouping)
        np.testing.assert_allclose(y.samples, x.samples, atol=1e-4)

    def test_match_mode_reaches_target_envelope(self, speech, upsampled_input, record, grouping):
        """Purpose: with the true wideband envelope as target, the filtered upper band lands on it."""
        excited = excite(upsampled_input, ExciterKind(variant=ExciterVariant.NOISE, seed=8), record)
        target = coarse_features(speech.fit_length(len(upsampled_input)), grouping)
        filtered = apply_ltv(excited, build_response(target, grouping, LtvMode.MATCH), record, grouping)

        k = record.cutoff_band_k
        achieved = coarse_features(filtered, grouping).frames[6:-10, k:]
        assert float(np.mean(np.abs(achieved - target.frames[6:-10, k:]))) <= 0.1

    @pytest.mark.parametrize("mode", [LtvMode.DIRECT, LtvMode.MATCH])
    def test_frame_constant_response_commutes_with_hop_shift(self, mode, grouping):
        per_band = np.random.default_rng(9).uniform(-3.0, -0.5, 64)
        response = build_response(CoarseSpectrum(np.tile(per_band, (_frames(), 1))), grouping, mode)
        x = _noise(10).samples
        shift = 3 * CANONICAL_STFT.hop
        delayed = Signal(np.concatenate([np.zeros(shift), x[:N - shift]]), WIDEBAND_RATE)

        y = apply_ltv(Signal(x, WIDEBAND_RATE), response, g=grouping).samples
        y_delayed = apply_ltv(delayed, response, g=grouping).samples
        interior = slice(4096, N - shift - 4096)
        np.testing.assert_allclose(y_delayed[shift:][interior], y[interior], atol=1e-6)

    def test_gain_ceiling(self, grouping):
        """Edge case: a near-silent excitation asked for a loud envelope is amplified by at most 40 dB."""
        x = _noise(5, scale=1e-6)
        response = build_response(CoarseSpectrum(np.zeros((_frames(), 64))), grouping, LtvMode.MATCH)
        y = apply_ltv(x, response, g=grouping, gain_ceiling_db=40.0)
        np.testing.assert_allclose(y.samples, 100.0 * x.samples, rtol=1e-6, atol=1e-12)

    def test_record_keeps_output_above_cutoff(self, record, grouping):
        response = LtvResponse(np.ones((_frames(), 1025)), LtvMode.DIRECT)
        y = apply_ltv(_noise(6), response, record, grouping)
        freqs = scipy.fft.rfftfreq(N, d=1 / WIDEBAND_RATE)
        spectrum = np.abs(scipy.fft.rfft(y.samples))
        assert cutoff_hz(record, grouping) == pytest.approx(4125.0)
        assert np.max(spectrum[freqs < 4125.0]) < 1e-9
        assert np.mean(spectrum[freqs > 4500.0]) > 1.0

    def test_shape_mismatch(self):
        response = LtvResponse(np.ones((3, 1025)), LtvMode.DIRECT)
        with pytest.raises(ContractError):
            apply_ltv(_noise(7), response)

    def test_requires_wideband(self):
        response = LtvResponse(np.ones((3, 1025)), LtvMode.DIRECT)
        with pytest.raises(ContractError):
            apply_ltv(Signal(np.zeros(800), NARROWBAND_RATE), response)


class TestResidualMix:
    def test_adds_signals(self):
        a, b = _noise(1), _noise(2)
        np.testing.assert_allclose(residual_mix(a, b).samples, a.samples + b.samples)

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            residual_mix(_noise(1, n=100), _noise(2, n=101))

    def test_rate_mismatch(self):
        with pytest.raises(ContractError):
            residual_mix(Signal(np.zeros(100), NARROWBAND_RATE), _noise(2, n=100))
