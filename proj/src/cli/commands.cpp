#include "poksvd/cli/commands.hpp"

#include <algorithm>
#include <iomanip>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "poksvd/io/formats.hpp"
#include "poksvd/io/wav.hpp"
#include "poksvd/ksvd.hpp"
#include "poksvd/pipeline.hpp"
#include "poksvd/synthetic.hpp"

namespace poksvd::cli {

namespace {

struct PursuitFlags {
  Index smax = 3;
  double tau = 1e-4;
  double epsilon = 1e-3;
  std::string selection_rule = "derived";

  void attach(CLI::App* app) {
    app->add_option("--smax", smax, "Maximum active atoms per frame");
    app->add_option("--tau", tau, "Absolute residual-norm stop");
    app->add_option("--epsilon", epsilon, "Relative-change convergence threshold");
    app->add_option("--selection-rule", selection_rule, "Atom scoring: derived | literal")
        ->check(CLI::IsMember({"derived", "literal"}));
  }

  PursuitConfig build(bool phase_optimization) const {
    PursuitConfig cfg;
    cfg.s_max = smax;
    cfg.tau = tau;
    cfg.epsilon = epsilon;
    cfg.selection = parse_selection_rule(selection_rule);
    cfg.phase_optimization = phase_optimization;
    cfg.validate();
    return cfg;
  }
};

struct StftFlags {
  Index window = 0;
  Index hop = 0;
  std::string taper;

  void attach(CLI::App* app) {
    app->add_option("--window", window, "Window length in samples (default 64 ms)");
    app->add_option("--hop", hop, "Hop in samples (default window / 2)");
    app->add_option("--taper", taper, "Window taper: hamming | rect");
  }

  StftConfig build(std::uint32_t sample_rate) const {
    StftConfig cfg = StftConfig::defaults_for(sample_rate);
    if (window > 0) {
      cfg.window_len = window;
      cfg.hop = window / 2;
    }
    if (hop > 0) cfg.hop = hop;
    if (!taper.empty()) cfg.taper = parse_taper(taper);
    cfg.validate();
    return cfg;
  }

  /// Explicitly requested values must agree with a dictionary's provenance.
  void check_against(const StftConfig& provenance) const {
    if (window > 0 && window != provenance.window_len)
      throw ConfigError("provenance mismatch: --window " + std::to_string(window) +
                        " but dictionary was trained with " + std::to_string(provenance.window_len));
    if (hop > 0 && hop != provenance.hop)
      throw ConfigError("provenance mismatch: --hop " + std::to_string(hop) +
                        " but dictionary was trained with " + std::to_string(provenance.hop));
    if (!taper.empty() && parse_taper(taper) != provenance.taper)
      throw ConfigError("provenance mismatch: --taper " + taper + " but dictionary was trained with " +
                        to_string(provenance.taper));
  }
};

/// Applies key=value lines from `path` to options not given on the command line.
void apply_config_file(CLI::App* app, const std::string& path) {
  std::istringstream lines(io::read_file(path));
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(number) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    CLI::Option* opt = app->get_option_no_throw("--" + key);
    if (opt == nullptr) opt = app->get_option_no_throw("-" + key);
    if (opt == nullptr || key == "config")
      throw ConfigError(path + ":" + std::to_string(number) + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;
    opt->add_result(value);
    try {
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      throw ConfigError(path + ":" + std::to_string(number) + ": invalid value for '" + key +
                        "': " + e.what());
    }
  }
}

SampleMatrix fit_length(const SampleMatrix& samples, Index length) {
  SampleMatrix out = SampleMatrix::Zero(length, samples.cols());
  const Index n = std::min(length, samples.rows());
  out.topRows(n) = samples.topRows(n);
  return out;
}

void print_report(std::ostream& out, const EvalReport& report) { out << io::to_key_value(report); }

struct TrainCommand {
  std::string input, output, log_path, config;
  Index atoms = 40;
  Index channels = 0;
  int iters = 50;
  std::uint64_t seed = 0;
  bool classic = false;
  PursuitFlags pursuit;
  StftFlags stft;

  void attach(CLI::App* app) {
    app->add_option("--input", input, "Training WAV (noise only)")->required();
    app->add_option("--output", output, "Dictionary file to write")->required();
    app->add_option("-K,--atoms", atoms, "Number of atoms");
    app->add_option("--channels", channels, "Expected channel count (0 = any)");
    app->add_option("--iters", iters, "Maximum outer iterations");
    app->add_option("--seed", seed, "Initialization seed");
    app->add_option("--log", log_path, "Also write the progress log to this file");
    app->add_flag("--classic", classic, "Phase-blind K-SVD baseline");
    app->add_option("--config", config, "key=value configuration file");
    pursuit.attach(app);
    stft.attach(app);
  }

  int run(std::ostream& out) const {
    LearningConfig cfg;
    cfg.atoms = atoms;
    cfg.pursuit = pursuit.build(!classic);
    cfg.epsilon_outer = pursuit.epsilon;
    cfg.epsilon_atom = pursuit.epsilon;
    cfg.max_outer_iters = iters;
    cfg.seed = seed;
    cfg.validate();

    const io::WavData wav = io::read_wav(input);
    if (channels > 0 && wav.samples.cols() != channels)
      throw ConfigError("channel-count mismatch: --channels " + std::to_string(channels) + " but '" +
                        input + "' has " + std::to_string(wav.samples.cols()));
    const StftConfig stft_cfg = stft.build(wav.sample_rate);
    const Spectrogram spec = poksvd::stft(wav.samples, stft_cfg);
    if (spec.frames() < atoms) throw ComputationError("insufficient training data");

    std::ostringstream log;
    const TrainedModel model = po_ksvd(spec, cfg, [&](const IterationLog& entry) {
      std::ostringstream line;
      line << std::setprecision(17) << "iteration=" << entry.iteration << " objective=" << entry.objective
           << " atoms_replaced=" << entry.atoms_replaced << " codes_rejected=" << entry.codes_rejected;
      out << line.str() << '\n';
      log << line.str() << '\n';
    });
    io::save_dictionary(output, {model.dictionary, stft_cfg});
    if (!log_path.empty()) io::write_file_atomic(log_path, log.str());
    return kExitOk;
  }
};

struct DenoiseCommand {
  std::string input, output, dict_path, emit_noise, reference, noise_reference, report_path, config;
  Index channels = 0;
  bool mask = false;
  bool mask_summed = false;
  double floor_quantile = 0.1;
  PursuitFlags pursuit;
  StftFlags stft;

  void attach(CLI::App* app) {
    app->add_option("--input", input, "Mixture WAV")->required();
    app->add_option("--output", output, "Target WAV to write")->required();
    app->add_option("--dict", dict_path, "Noise dictionary file")->required();
    app->add_option("--channels", channels, "Expected channel count (0 = any)");
    app->add_option("--emit-noise", emit_noise, "Also write the noise estimate WAV");
    app->add_flag("--mask", mask, "Apply the masking post-processor");
    app->add_flag("--mask-summed", mask_summed, "Mask on channel-summed PSDs");
    app->add_option("--floor-quantile", floor_quantile, "Quietest-frame fraction for the floor level");
    app->add_option("--reference", reference, "Clean target WAV; enables the evaluation report");
    app->add_option("--noise-reference", noise_reference, "True noise WAV, enables SIR");
    app->add_option("--report", report_path, "JSON report path (default <output>.eval.json)");
    app->add_option("--config", config, "key=value configuration file");
    pursuit.attach(app);
    stft.attach(app);
  }

  int run(std::ostream& out) const {
    std::optional<MaskConfig> mask_cfg;
    if (mask) {
      mask_cfg = MaskConfig{floor_quantile, mask_summed};
      mask_cfg->validate();
    }
    const io::DictionaryFile dict = io::load_dictionary(dict_path);
    const PursuitConfig cfg = pursuit.build(dict.dictionary.gauge() == Gauge::PerBin);
    stft.check_against(dict.stft);

    const io::WavData wav = io::read_wav(input);
    if (wav.samples.cols() != dict.dictionary.channels())
      throw ConfigError("channel-count mismatch: '" + input + "' has " +
                        std::to_string(wav.samples.cols()) + " channels, dictionary expects " +
                        std::to_string(dict.dictionary.channels()));
    if (channels > 0 && channels != wav.samples.cols())
      throw ConfigError("channel-count mismatch: --channels " + std::to_string(channels));
    if (wav.sample_rate != dict.stft.sample_rate)
      throw ConfigError("provenance mismatch: '" + input + "' is " + std::to_string(wav.sample_rate) +
                        " Hz, dictionary was trained at " + std::to_string(dict.stft.sample_rate) + " Hz");

    const Spectrogram mixture = poksvd::stft(wav.samples, dict.stft);
    const DenoiseResult result = denoise(mixture, dict.dictionary, cfg, mask_cfg);
    const SampleMatrix target = fit_length(istft(result.target), wav.samples.rows());
    io::write_wav(output, target, wav.sample_rate);
    if (!emit_noise.empty())
      io::write_wav(emit_noise, fit_length(istft(result.noise_estimate), wav.samples.rows()), wav.sample_rate);
    if (mask) out << "masked_points=" << result.masked_points << '\n';

    if (!reference.empty()) {
      const io::WavData ref = io::read_wav(reference);
      std::optional<io::WavData> noise;
      if (!noise_reference.empty()) noise = io::read_wav(noise_reference);
      const EvalReport report = evaluate(ref.samples, target, noise ? &noise->samples : nullptr);
      print_report(out, report);
      io::write_file_atomic(report_path.empty() ? output + ".eval.json" : report_path, io::to_json(report));
    }
    return kExitOk;
  }
};

struct CodeCommand {
  std::string input, dict_path, output, config;
  PursuitFlags pursuit;

  void attach(CLI::App* app) {
    app->add_option("--input", input, "Frames file or WAV")->required();
    app->add_option("--dict", dict_path, "Dictionary file")->required();
    app->add_option("--output", output, "Write code lines here instead of stdout");
    app->add_option("--config", config, "key=value configuration file");
    pursuit.attach(app);
  }

  int run(std::ostream& out) const {
    const io::DictionaryFile dict = io::load_dictionary(dict_path);
    const PursuitConfig cfg = pursuit.build(dict.dictionary.gauge() == Gauge::PerBin);
    Spectrogram frames;
    if (input.size() >= 4 && input.substr(input.size() - 4) == ".wav") {
      const io::WavData wav = io::read_wav(input);
      if (wav.sample_rate != dict.stft.sample_rate)
        throw ConfigError("provenance mismatch: sample rate differs from the dictionary's");
      frames = poksvd::stft(wav.samples, dict.stft);
    } else {
      frames = io::load_spectrogram(input);
    }
    if (frames.channels() != dict.dictionary.channels() || frames.bins() != dict.dictionary.bins())
      throw ConfigError("frames are " + std::to_string(frames.channels()) + " channels x " +
                        std::to_string(frames.bins()) + " bins, dictionary is " +
                        std::to_string(dict.dictionary.channels()) + " x " +
                        std::to_string(dict.dictionary.bins()));

    std::ostringstream lines;
    for (Index t = 0; t < frames.frames(); ++t) {
      const CodingResult coded = po_omp(frames.values().col(t), dict.dictionary, cfg);
      lines << io::format_code_line(t, coded.code, coded.residual_norm) << '\n';
    }
    if (output.empty())
      out << lines.str();
    else
      io::write_file_atomic(output, lines.str());
    return kExitOk;
  }
};

struct SynthCommand {
  std::string output, config;
  SyntheticSpec spec;
  std::uint32_t rate = 16000;

  void attach(CLI::App* app) {
    spec.zero_edge_bins = true;
    app->add_option("--output", output, "Output prefix (.wav, .frames, .dict, .truth.txt)")->required();
    app->add_option("--channels", spec.channels, "Channels M");
    app->add_option("--bins", spec.bins, "Frequency bins F");
    app->add_option("--frames", spec.frames, "Frames T");
    app->add_option("-K,--atoms", spec.atoms, "Planted atoms K");
    app->add_option("--smax", spec.s_max, "Active atoms per frame");
    app->add_option("--gain-lo", spec.gain_lo, "Lower activation gain");
    app->add_option("--gain-hi", spec.gain_hi, "Upper activation gain");
    app->add_option("--noise-sigma", spec.noise_sigma, "Per-entry noise standard deviation");
    app->add_option("--spectral-spread", spec.spectral_spread, "Log-normal atom envelope spread");
    app->add_option("--max-coherence", spec.max_coherence, "Redraw until coherence is below this");
    app->add_option("--seed", spec.seed, "Random seed");
    app->add_option("--rate", rate, "Nominal sample rate of the rendered WAV");
    app->add_option("--config", config, "key=value configuration file");
  }

  int run(std::ostream& out) const {
    spec.validate();
    const SyntheticData data = generate_synthetic(spec);
    const StftConfig stft_cfg = spec.nominal_stft(rate);
    const Spectrogram spec_out(data.spectrogram.channels(), data.spectrogram.values(), stft_cfg);

    std::ostringstream truth;
    for (Index t = 0; t < spec_out.frames(); ++t) {
      const auto ut = static_cast<std::size_t>(t);
      const ComplexVector noise = spec_out.values().col(t) -
                                  apply_phased_dictionary(data.truth.dictionary, data.truth.phases[ut],
                                                          data.truth.codes[ut]);
      truth << io::format_code_line(t, data.truth.codes[ut], noise.norm()) << '\n';
    }
    io::write_wav(output + ".wav", istft(spec_out), rate);
    io::save_spectrogram(output + ".frames", spec_out);
    io::save_dictionary(output + ".dict", {data.truth.dictionary, stft_cfg});
    io::write_file_atomic(output + ".truth.txt", truth.str());
    out << "coherence=" << coherence(data.truth.dictionary) << '\n';
    return kExitOk;
  }
};

struct EvalCommand {
  std::string input, reference, noise_reference, output, config;

  void attach(CLI::App* app) {
    app->add_option("--input", input, "Estimated signal WAV")->required();
    app->add_option("--reference", reference, "Reference target WAV")->required();
    app->add_option("--noise-reference", noise_reference, "Reference noise WAV, enables SIR");
    app->add_option("--output", output, "JSON report path");
    app->add_option("--config", config, "key=value configuration file");
  }

  int run(std::ostream& out) const {
    const io::WavData est = io::read_wav(input);
    const io::WavData ref = io::read_wav(reference);
    std::optional<io::WavData> noise;
    if (!noise_reference.empty()) noise = io::read_wav(noise_reference);
    const EvalReport report = evaluate(ref.samples, est.samples, noise ? &noise->samples : nullptr);
    print_report(out, report);
    if (!output.empty()) io::write_file_atomic(output, io::to_json(report));
    return kExitOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Phase-optimized sparse coding and dictionary learning for multichannel spectrograms",
               "poksvd"};
  app.require_subcommand(1);
  TrainCommand train;
  DenoiseCommand denoise_cmd;
  CodeCommand code;
  SynthCommand synth;
  EvalCommand eval;
  CLI::App* train_app = app.add_subcommand("train", "Learn a dictionary from a noise recording");
  CLI::App* denoise_app = app.add_subcommand("denoise", "Remove dictionary-modelled noise from a mixture");
  CLI::App* code_app = app.add_subcommand("code", "Sparse-code frames against a dictionary");
  CLI::App* synth_app = app.add_subcommand("synth", "Render a planted synthetic mixture");
  CLI::App* eval_app = app.add_subcommand("eval", "Energy-ratio SDR/SIR of an estimate");
  train.attach(train_app);
  denoise_cmd.attach(denoise_app);
  code.attach(code_app);
  synth.attach(synth_app);
  eval.attach(eval_app);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitComputation;
  }

  try {
    const auto with_config = [](CLI::App* sub, const std::string& path) {
      if (!path.empty()) apply_config_file(sub, path);
    };
    if (*train_app) {
      with_config(train_app, train.config);
      return train.run(out);
    }
    if (*denoise_app) {
      with_config(denoise_app, denoise_cmd.config);
      return denoise_cmd.run(out);
    }
    if (*code_app) {
      with_config(code_app, code.config);
      return code.run(out);
    }
    if (*synth_app) {
      with_config(synth_app, synth.config);
      return synth.run(out);
    }
    if (*eval_app) {
      with_config(eval_app, eval.config);
      return eval.run(out);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitComputation;
  }
  return kExitComputation;
}

}  // namespace poksvd::cli
