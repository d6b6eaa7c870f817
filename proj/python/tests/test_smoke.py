import math

import numpy as np
import pytest

import duriano


def sine(hz, seconds=0.5, sr=44100):
    t = np.arange(int(seconds * sr)) / sr
    return 0.5 * np.sin(2 * math.pi * hz * t)


def test_stft_shape_and_peak():
    mag = duriano.stft_magnitude(sine(1000.0))
    assert mag.shape[1] == 2049
    assert int(np.argmax(mag[mag.shape[0] // 2])) == 93


def test_analyze_is_bounded():
    mel, lin = duriano.analyze(sine(440.0))
    assert mel.shape[1] == 80 and lin.shape[1] == 2049
    assert mel.min() >= 0.0 and lin.max() <= 1.0


def test_griffin_lim_error_does_not_rise():
    mag = duriano.stft_magnitude(sine(440.0, 0.2))
    audio, errors = duriano.griffin_lim(mag, 10)
    assert len(errors) == 10
    assert all(b <= a * (1 + 1e-9) for a, b in zip(errors, errors[1:]))
    assert audio.ndim == 1


def test_pitch_and_notes():
    f0 = duriano.extract_f0(sine(440.0))
    voiced = f0[f0 > 0]
    assert abs(np.median(voiced) - 440.0) < 1.0
    notes = duriano.segment_notes(np.full(30, 440.0))
    assert notes[0] == (69, "onset")
    assert notes[1] == (69, "sustain")


def test_metrics():
    x = np.linspace(100, 300, 50)
    assert duriano.pearson(x, 2 * x + 3) == pytest.approx(1.0, abs=1e-12)
    assert list(duriano.normalize_mean_one(np.array([100.0, 300.0]))) == [0.5, 1.5]
    assert list(duriano.resample_contour(np.array([100.0, 200.0]), 3)) == [100.0, 150.0, 200.0]
    mu, sigma = duriano.fit_gaussian(np.ones(10))
    assert (mu, sigma) == (1.0, 0.0)
    report = duriano.eval_report(["a", "b"], [x, x])
    assert report.startswith("system\ta\tb\n")


def test_errors_map_to_value_error():
    with pytest.raises(ValueError, match="degenerate contour"):
        duriano.pearson(np.ones(5), np.arange(5.0))


def test_inventory_and_cli(tmp_path):
    symbols = duriano.phonemes()
    assert len(symbols) == 39 and symbols[0] == "sil"
    code, out, err = duriano.run(["train", "--workdir", str(tmp_path)])
    assert code == 2
    assert "preprocess" in err
