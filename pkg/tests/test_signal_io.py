import numpy as np
import pytest
import soundfile as sf

from bwe.core.exceptions import ContractError, UnsupportedEncodingError, WavFormatError
from bwe.schemas.audio import NARROWBAND_RATE, WIDEBAND_RATE, Signal
from bwe.services.evaluate import band_energy_db
from bwe.services.signal_io import (
    decimate_6x,
    interpolation_filter,
    read_wav,
    require_pipeline_rate,
    upsample_6x,
    write_wav,
)


def _sine(freq, rate, n, amplitude=0.5):
    return Signal(amplitude * np.sin(2 * np.pi * freq * np.arange(n) / rate), rate)


class TestWavIO:
    def test_float_round_trip(self, tmp_path, speech):
        """Purpose: 32-bit float WAVs preserve samples to float32 precision."""
        path = tmp_path / "a.wav"
        write_wav(speech, path)
        loaded = read_wav(path)
        assert loaded.sample_rate == WIDEBAND_RATE
        assert len(loaded) == len(speech)
        np.testing.assert_allclose(loaded.samples, speech.samples, atol=1e-7)

    def test_pcm16_error_within_half_step(self, tmp_path, speech):
        path = tmp_path / "a16.wav"
        write_wav(speech, path, subtype="PCM_16")
        loaded = read_wav(path)
        assert np.max(np.abs(loaded.samples - speech.samples)) <= 0.5 / 32768 + 1e-12

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_wav(tmp_path / "nope.wav")

    def test_garbage_header(self, tmp_path):
        """Bad case: a text file with a .wav extension."""
        path = tmp_path / "broken.wav"
        path.write_bytes(b"RIFF\x00\x00this is not audio at all")
        with pytest.raises(WavFormatError):
            read_wav(path)

    def test_unsupported_encoding(self, tmp_path):
        path = tmp_path / "ulaw.wav"
        sf.write(str(path), np.zeros(800), NARROWBAND_RATE, subtype="ULAW", format="WAV")
        with pytest.raises(UnsupportedEncodingError):
            read_wav(path)

    def test_multichannel_keeps_first_channel(self, tmp_path):
        path = tmp_path / "stereo.wav"
        data = np.stack([np.full(100, 0.25), np.full(100, -0.5)], axis=1)
        sf.write(str(path), data, NARROWBAND_RATE, subtype="FLOAT")
        loaded = read_wav(path)
        np.testing.assert_allclose(loaded.samples, 0.25)

    def test_unwritable_subtype(self, tmp_path, speech):
        with pytest.raises(UnsupportedEncodingError):
            write_wav(speech, tmp_path / "x.wav", subtype="PCM_24")


class TestResampling:
    def test_filter_is_odd_and_symmetric(self):
        taps = interpolation_filter()
        assert len(taps) % 2 == 1
        np.testing.assert_allclose(taps, taps[::-1], atol=1e-12)
        assert abs(np.sum(taps) - 1.0) < 1e-3

    def test_upsample_length_and_rate(self):
        up = upsample_6x(_sine(440, NARROWBAND_RATE, 1001))
        assert up.sample_rate == WIDEBAND_RATE
        assert len(up) == 6006

    def test_upsample_reproduces_in_band_sine(self):
        """Purpose: output sample 6n lines up with input sample n; 1 kHz lies in the flat passband."""
        n = 8000
        up = upsample_6x(_sine(1000, NARROWBAND_RATE, n))
        expected = _sine(1000, WIDEBAND_RATE, 6 * n)
        interior = slice(6000, 6 * n - 6000)
        assert np.max(np.abs(up.samples[interior] - expected.samples[interior])) < 1e-3

    def test_upsample_rejects_images(self):
        up = upsample_6x(_sine(1000, NARROWBAND_RATE, 16000))
        interior = Signal(up.samples[6000:-6000], WIDEBAND_RATE)
        assert band_energy_db(interior, 4200, 24000) <= -80

    def test_upsample_rejects_white_noise_images(self):
        noise = Signal(np.random.default_rng(31).standard_normal(16000) * 0.1, NARROWBAND_RATE)
        up = upsample_6x(noise)
        interior = Signal(up.samples[6000:-6000], WIDEBAND_RATE)
        assert band_energy_db(interior, 4200, 24000) <= -80

    def test_upsample_is_linear(self):
        rng = np.random.default_rng(32)
        a = Signal(rng.standard_normal(4000), NARROWBAND_RATE)
        b = Signal(rng.standard_normal(4000), NARROWBAND_RATE)
        mixed = upsample_6x(Signal(3.0 * a.samples + 0.5 * b.samples, NARROWBAND_RATE)).samples
        combined = 3.0 * upsample_6x(a).samples + 0.5 * upsample_6x(b).samples
        assert np.linalg.norm(mixed - combined) <= 1e-9 * np.linalg.norm(combined)

    def test_decimate_inverts_upsample_in_band(self):
        x = _sine(1000, NARROWBAND_RATE, 8000)
        back = decimate_6x(upsample_6x(x))
        assert back.sample_rate == NARROWBAND_RATE
        assert len(back) == len(x)
        assert np.max(np.abs(back.samples[1000:-1000] - x.samples[1000:-1000])) < 1e-3

    def test_wrong_rate(self):
        with pytest.raises(ContractError):
            upsample_6x(_sine(440, WIDEBAND_RATE, 480))
        with pytest.raises(ContractError):
            decimate_6x(_sine(440, NARROWBAND_RATE, 480))

    def test_empty_input(self):
        assert len(upsample_6x(Signal(np.zeros(0), NARROWBAND_RATE))) == 0

    def test_pipeline_rates(self):
        for rate in (NARROWBAND_RATE, WIDEBAND_RATE):
            assert require_pipeline_rate(Signal(np.zeros(10), rate)).sample_rate == rate
        with pytest.raises(ContractError):
            require_pipeline_rate(Signal(np.zeros(10), 16000))
