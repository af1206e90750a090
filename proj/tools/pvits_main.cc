// pvits: corpus preparation, training, synthesis and evaluation.

#include <glog/logging.h>
#include <torch/torch.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pvits/data/preprocess.h"
#include "pvits/data/synthetic_corpus.h"
#include "pvits/eval/mel_plot.h"
#include "pvits/eval/pitch_stability.h"
#include "pvits/eval/synthesizer.h"
#include "pvits/features/manifest.h"
#include "pvits/train/trainer.h"

namespace {

using namespace pvits;

struct SynthLine {
  std::string id;
  std::vector<int64_t> phonemes, accents;
};

std::vector<int64_t> ParseIds(const std::string& field) {
  std::istringstream is(field);
  std::vector<int64_t> v;
  int64_t x;
  while (is >> x) v.push_back(x);
  if (!is.eof()) throw std::invalid_argument("bad integer list '" + field + "'");
  return v;
}

// "id|phonemes|accents" or a full manifest line.
std::vector<SynthLine> ReadSynthInput(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<SynthLine> lines;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::istringstream is(line);
    for (std::string f; std::getline(is, f, '|');) fields.push_back(f);
    SynthLine s;
    if (fields.size() == 3) {
      s.id = fields[0];
      s.phonemes = ParseIds(fields[1]);
      s.accents = ParseIds(fields[2]);
    } else {
      auto e = ParseManifestLine(line, number);
      s.id = e.id;
      s.phonemes.assign(e.phonemes.begin(), e.phonemes.end());
      s.accents.assign(e.accents.begin(), e.accents.end());
    }
    lines.push_back(std::move(s));
  }
  return lines;
}

AppConfig LoadConfigOrDefault(const std::string& path) {
  return path.empty() ? AppConfig::Desk() : AppConfig::Load(path);
}

}  // namespace

int main(int argc, char** argv) {
  google::InitGoogleLogging(argv[0]);
  FLAGS_logtostderr = true;
  torch::set_num_threads(1);

  CLI::App app{"Period VITS text-to-speech"};
  app.require_subcommand(1);

  auto* corpus = app.add_subcommand("make-corpus", "Write a synthetic speech-like corpus");
  std::string corpus_out;
  SyntheticCorpusConfig corpus_cfg;
  corpus->add_option("--out", corpus_out, "Output directory")->required();
  corpus->add_option("--utterances", corpus_cfg.num_utterances);
  corpus->add_option("--speakers", corpus_cfg.num_speakers)->check(CLI::Range(1, 4));
  corpus->add_option("--emotions", corpus_cfg.num_emotions)->check(CLI::Range(1, 3));
  corpus->add_option("--seed", corpus_cfg.seed);

  auto* pre = app.add_subcommand("preprocess", "Extract features for a manifest");
  std::string manifest, pre_out, pre_config;
  pre->add_option("--manifest", manifest)->required()->check(CLI::ExistingFile);
  pre->add_option("--out", pre_out)->required();
  pre->add_option("--config", pre_config, "JSON config (default: desk profile)");

  auto* train = app.add_subcommand("train", "Train or resume");
  std::string train_config, resume, train_features, train_out;
  int64_t train_steps = -1;
  train->add_option("--config", train_config)->required()->check(CLI::ExistingFile);
  train->add_option("--resume", resume, "Checkpoint to resume from");
  train->add_option("--features", train_features, "Overrides data.feature_dir");
  train->add_option("--out", train_out, "Overrides data.output_dir");
  train->add_option("--steps", train_steps, "Overrides train.max_steps");

  auto* synth = app.add_subcommand("synth", "Synthesise from phoneme/accent IDs");
  std::string synth_ckpt, synth_input, synth_out = "synth_out";
  int64_t speaker = 0, emotion = 0;
  uint64_t seed = 0;
  double temperature = -1.0;
  bool random_phase = false;
  synth->add_option("--ckpt", synth_ckpt)->required()->check(CLI::ExistingFile);
  synth->add_option("--input", synth_input, "Lines of id|phonemes|accents")
      ->required()
      ->check(CLI::ExistingFile);
  synth->add_option("--speaker", speaker);
  synth->add_option("--emotion", emotion);
  synth->add_option("--seed", seed);
  synth->add_option("--temperature", temperature, "Prior temperature (default from config)");
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_flag("--random-phase", random_phase, "Random initial sine phase");

  auto* copy = app.add_subcommand("copysynth", "Resynthesise a recording");
  std::string copy_ckpt, copy_wav, copy_out = "copysynth.wav";
  copy->add_option("--ckpt", copy_ckpt)->required()->check(CLI::ExistingFile);
  copy->add_option("--wav", copy_wav)->required()->check(CLI::ExistingFile);
  copy->add_option("--out", copy_out);
  copy->add_option("--speaker", speaker);
  copy->add_option("--emotion", emotion);
  copy->add_option("--seed", seed);

  auto* evalp = app.add_subcommand("eval-pitch", "F0 RMSE and V/UV error between directories");
  std::string ref_dir, syn_dir, report_path, eval_config;
  evalp->add_option("--ref-dir", ref_dir)->required()->check(CLI::ExistingDirectory);
  evalp->add_option("--syn-dir", syn_dir)->required()->check(CLI::ExistingDirectory);
  evalp->add_option("--report", report_path, "Write report here (default: stdout)");
  evalp->add_option("--config", eval_config);

  auto* plot = app.add_subcommand("plot-mel", "Side-by-side log-mel PNG");
  std::vector<std::string> plot_waves;
  std::string plot_out, plot_config;
  plot->add_option("--waves", plot_waves)->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out)->required();
  plot->add_option("--config", plot_config);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*corpus) {
      const auto path = WriteSyntheticCorpus(corpus_out, corpus_cfg);
      std::cout << "wrote " << path.string() << '\n';
    } else if (*pre) {
      const auto summary = Preprocess(manifest, pre_out, LoadConfigOrDefault(pre_config));
      std::cout << "utterances=" << summary.utterances << " repaired=" << summary.repaired
                << " all_unvoiced=" << summary.all_unvoiced
                << " median_log_f0=" << summary.median_log_f0 << '\n';
    } else if (*train) {
      auto config = AppConfig::Load(train_config);
      if (!train_features.empty()) config.data.feature_dir = train_features;
      if (!train_out.empty()) config.data.output_dir = train_out;
      if (train_steps >= 0) config.train.max_steps = train_steps;
      const auto data = Dataset::Load(config.data.feature_dir, config.features);
      Trainer trainer(config);
      if (!resume.empty()) trainer.LoadCheckpoint(resume);
      const std::filesystem::path out_dir = config.data.output_dir;
      std::filesystem::create_directories(out_dir);
      std::ofstream log(out_dir / "train.log", std::ios::app);
      trainer.Fit(data, config.train.max_steps, &log, out_dir);
      std::cout << "step " << trainer.progress().step << ", checkpoint "
                << (out_dir / "latest.pt").string() << '\n';
    } else if (*synth) {
      auto synthesizer = Synthesizer::FromCheckpoint(synth_ckpt);
      SynthesisOptions options;
      options.temperature =
          temperature >= 0 ? temperature : synthesizer.config().synthesis.temperature;
      options.vuv_threshold = synthesizer.config().synthesis.vuv_threshold;
      options.zero_phase = !random_phase;
      std::filesystem::create_directories(synth_out);
      for (const auto& line : ReadSynthInput(synth_input)) {
        auto out = synthesizer.Synthesize(line.phonemes, line.accents, speaker, emotion,
                                          options, seed);
        const auto path = std::filesystem::path(synth_out) / (line.id + ".wav");
        SaveWaveform(path, out.wave);
        std::cout << path.string() << " samples=" << out.wave.samples.size() << '\n';
      }
    } else if (*copy) {
      auto synthesizer = Synthesizer::FromCheckpoint(copy_ckpt);
      const auto wave = LoadWaveform(copy_wav, synthesizer.config().features.sample_rate);
      SaveWaveform(copy_out, synthesizer.CopySynthesize(wave, speaker, emotion, seed));
      std::cout << copy_out << '\n';
    } else if (*evalp) {
      const auto report =
          EvalPitchStabilityDirs(ref_dir, syn_dir, LoadConfigOrDefault(eval_config).pitch);
      const auto text = FormatPitchReport(report);
      if (report_path.empty()) {
        std::cout << text;
      } else {
        std::ofstream(report_path) << text;
        std::cout << FormatPitchStats(report.aggregate) << '\n';
      }
    } else if (*plot) {
      const auto config = LoadConfigOrDefault(plot_config);
      std::vector<Waveform> waves;
      for (const auto& w : plot_waves) waves.push_back(LoadWaveform(w, config.features.sample_rate));
      const auto layout = PlotMelComparison(waves, config.features, plot_out);
      std::cout << plot_out << " " << layout.width << "x" << layout.height << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
