// Python bindings: numpy in, numpy out, errors as ValueError.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "duriano/cli/commands.hpp"
#include "duriano/corpus/inventory.hpp"
#include "duriano/dsp/griffin_lim.hpp"
#include "duriano/dsp/io.hpp"
#include "duriano/dsp/spectrogram.hpp"
#include "duriano/dsp/stft.hpp"
#include "duriano/eval/metrics.hpp"
#include "duriano/model/checkpoint.hpp"
#include "duriano/pitch/notes.hpp"
#include "duriano/util/error.hpp"

namespace py = pybind11;
using namespace duriano;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw InputError("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw InputError("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.storage().begin());
  return m;
}

Array from_matrix(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.storage().begin(), m.storage().end(), out.mutable_data());
  return out;
}

Array from_vector(const std::vector<double>& v) {
  Array out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

dsp::AudioBuffer audio_of(const Array& samples, int sample_rate) {
  dsp::AudioBuffer a;
  a.samples = to_vector(samples);
  a.sample_rate = sample_rate;
  return a;
}

}  // namespace

PYBIND11_MODULE(_duriano, m) {
  m.doc() = "Singing synthesis toolkit: spectrogram analysis, pitch tracking, evaluation and the command layer.";
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.attr("SAMPLE_RATE") = 44100;
  m.attr("HOP_LENGTH") = 441;
  m.attr("FFT_SIZE") = 4096;

  m.def("stft_magnitude", [](const Array& samples) {
    return from_matrix(dsp::magnitude(dsp::stft(to_vector(samples), dsp::StftConfig::canonical())));
  }, py::arg("samples"), "Magnitude STFT with the canonical configuration, shape (frames, 2049).");

  m.def("analyze", [](const Array& samples) {
    const auto cfg = dsp::StftConfig::canonical();
    const auto pair = dsp::analyze(audio_of(samples, cfg.sample_rate), cfg, dsp::build_mel_filterbank(cfg));
    return py::make_tuple(from_matrix(pair.mel.frames), from_matrix(pair.linear.frames));
  }, py::arg("samples"), "Normalized (mel, linear) training targets.");

  m.def("griffin_lim", [](const Array& magnitude, int iterations) {
    const auto r = dsp::griffin_lim_magnitude(to_matrix(magnitude), iterations, dsp::StftConfig::canonical());
    return py::make_tuple(from_vector(r.audio.samples), from_vector(r.errors));
  }, py::arg("magnitude"), py::arg("iterations") = dsp::kGriffinLimIterations,
        "Phase reconstruction from raw magnitudes; returns (audio, per-iteration error).");

  m.def("vocode", [](const Array& normalized, int iterations) {
    dsp::LinearSpectrogram spec;
    spec.frames = to_matrix(normalized);
    spec.config = dsp::StftConfig::canonical();
    return from_vector(dsp::griffin_lim(spec, iterations).audio.samples);
  }, py::arg("linear"), py::arg("iterations") = dsp::kGriffinLimIterations);

  m.def("extract_f0", [](const Array& samples, int sample_rate, int hop, double fmin, double fmax) {
    return from_vector(pitch::extract_f0(audio_of(samples, sample_rate), hop, fmin, fmax).f0);
  }, py::arg("samples"), py::arg("sample_rate") = 44100, py::arg("hop") = 441, py::arg("fmin") = 65.0,
        py::arg("fmax") = 1050.0);

  m.def("segment_notes", [](const Array& f0_hz, double hop_seconds) {
    pitch::PitchContour c;
    c.f0 = to_vector(f0_hz);
    c.hop_seconds = hop_seconds;
    py::list out;
    for (const auto& e : pitch::segment_notes(c).events)
      out.append(py::make_tuple(e.voiced() ? py::object(py::int_(e.pitch)) : py::object(py::none()),
                                pitch::state_name(e.state)));
    return out;
  }, py::arg("f0_hz"), py::arg("hop_seconds") = 0.01, "Per-frame (midi or None, state) pairs.");

  m.def("pearson", [](const Array& x, const Array& y) { return eval::pearson(to_vector(x), to_vector(y)); });
  m.def("pearson_voiced", [](const Array& x, const Array& y) { return eval::pearson_voiced(to_vector(x), to_vector(y)); });
  m.def("resample_contour", [](const Array& x, std::size_t n) { return from_vector(eval::resample_contour(to_vector(x), n)); });
  m.def("normalize_mean_one", [](const Array& x) { return from_vector(eval::normalize_mean_one(to_vector(x))); });
  m.def("fit_gaussian", [](const Array& x) {
    const auto f = eval::fit_gaussian(to_vector(x));
    return py::make_tuple(f.mu, f.sigma);
  }, "Maximum-likelihood (mu, sigma).");

  m.def("eval_report", [](const std::vector<std::string>& labels, const std::vector<Array>& contours) {
    if (labels.size() != contours.size()) throw InputError("one label per contour required");
    eval::ContourSet set;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      pitch::PitchContour c;
      c.f0 = to_vector(contours[i]);
      set.push_back({labels[i], c});
    }
    return eval::format_report(eval::eval_report(set));
  }, py::arg("labels"), py::arg("contours"), "Tab-separated correlation and Gaussian-fit report.");

  m.def("phonemes", [] { return corpus::PhonemeInventory::standard().symbols(); });

  m.def("read_wav", [](const std::string& path) {
    const auto a = dsp::read_wav(path);
    return py::make_tuple(from_vector(a.samples), a.sample_rate);
  });
  m.def("write_wav", [](const std::string& path, const Array& samples, int sample_rate) {
    dsp::write_wav(path, audio_of(samples, sample_rate));
  }, py::arg("path"), py::arg("samples"), py::arg("sample_rate") = 44100);

  m.def("checkpoint_info", [](const std::string& path) {
    const auto ck = model::load_checkpoint(path);
    py::dict d;
    d["step"] = ck.step;
    d["mode"] = model::mode_name(ck.model->config().mode);
    d["parameters"] = ck.model->params().parameter_count();
    d["singers"] = ck.singers.names();
    d["roles"] = ck.roles.names();
    return d;
  });

  m.def("run", [](const std::vector<std::string>& args) {
    std::vector<std::string> argv_store = {"duriano"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs a command-line invocation; returns (exit_code, stdout, stderr).");
}
