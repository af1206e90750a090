#include "pvits/model/period_vits.h"

#include <algorithm>
#include <stdexcept>

namespace pvits {

PeriodVitsImpl::PeriodVitsImpl(const ModelConfig& model, const FeatureConfig& features)
    : config_(model), features_(features) {
  features_.Validate();
  config_.Validate(features_.hop_samples);
  speaker_emb_ = register_module(
      "speaker_emb", torch::nn::Embedding(config_.num_speakers, config_.condition_channels));
  emotion_emb_ = register_module(
      "emotion_emb", torch::nn::Embedding(config_.num_emotions, config_.condition_channels));
  text_encoder_ = register_module("text_encoder", TextEncoder(config_));
  duration_predictor_ = register_module("duration_predictor", DurationPredictor(config_));
  frame_prior_ = register_module("frame_prior", FramePriorNetwork(config_));
  pitch_predictor_ = register_module("pitch_predictor", PitchPredictor(config_));
  flow_ = register_module("flow", FlowStack(config_));
  posterior_encoder_ =
      register_module("posterior_encoder", PosteriorEncoder(config_, features_.NumBins()));
  decoder_ = register_module("decoder", Generator(config_));
  linear_mean_ = register_buffer("linear_mean", torch::zeros({features_.NumBins()}));
  linear_std_ = register_buffer("linear_std", torch::ones({features_.NumBins()}));
  log_f0_mean_ = register_buffer("log_f0_mean", torch::full({1}, std::log(150.0)));
  log_f0_std_ = register_buffer("log_f0_std", torch::full({1}, 0.25));
}

void PeriodVitsImpl::SetStats(const NormStats& linear, const NormStats& pitch) {
  torch::NoGradGuard no_grad;
  if (linear.dim() != features_.NumBins() || pitch.dim() != 1) {
    throw std::invalid_argument("normalisation stats do not match the model's feature sizes");
  }
  linear_mean_.copy_(linear.mean);
  linear_std_.copy_(linear.std);
  log_f0_mean_.copy_(pitch.mean);
  log_f0_std_.copy_(pitch.std);
  pitch_predictor_->SetStats(pitch.mean.item<double>(), pitch.std.item<double>());
}

torch::Tensor PeriodVitsImpl::NormalizeLinear(const torch::Tensor& linear) const {
  return (linear - linear_mean_.view({1, -1, 1})) / linear_std_.view({1, -1, 1});
}

torch::Tensor PeriodVitsImpl::GlobalCondition(const torch::Tensor& speakers,
                                              const torch::Tensor& emotions) {
  return (speaker_emb_(speakers) + emotion_emb_(emotions)).unsqueeze(2);
}

PriorPath PeriodVitsImpl::EncodePrior(const torch::Tensor& phonemes, const torch::Tensor& accents,
                                      const torch::Tensor& phoneme_lengths,
                                      const torch::Tensor& durations, const torch::Tensor& g,
                                      bool predict_durations) {
  PriorPath p;
  p.phoneme_mask = SequenceMask(phoneme_lengths, phonemes.size(1));
  p.text_hidden = text_encoder_(phonemes, accents, p.phoneme_mask, g);
  p.log_durations = duration_predictor_(p.text_hidden, p.phoneme_mask, g);
  p.durations = predict_durations ? DurationsFromPrediction(p.log_durations, p.phoneme_mask)
                                  : durations;
  auto expanded = ExpandToFrames(p.text_hidden, p.durations);
  p.frame_mask = SequenceMask(expanded.frame_lengths, expanded.frames.size(2));
  p.frame_prior = frame_prior_(expanded.frames, p.frame_mask);
  p.pitch = pitch_predictor_(p.frame_prior.pitch_features, p.frame_mask, g);
  return p;
}

torch::Tensor PeriodVitsImpl::Render(const torch::Tensor& z, const torch::Tensor& log_f0,
                                     const torch::Tensor& vuv, const torch::Tensor& g,
                                     PitchSource source, bool random_phase,
                                     std::optional<at::Generator> gen) {
  if (render_observer_) render_observer_({source, log_f0, vuv});
  DecoderInputs inputs;
  if (config_.UsesExcitation()) {
    const auto options = MakeExcitationOptions(config_, features_.sample_rate,
                                               features_.hop_samples, random_phase);
    inputs.excitation = BuildExcitation(log_f0, vuv, options, gen);
  }
  if (config_.concat_frame_pitch) {
    inputs.frame_pitch = torch::stack({(log_f0 - log_f0_mean_) / log_f0_std_, vuv}, 1).detach();
  }
  return decoder_(z, inputs, g);
}

namespace {

torch::Tensor SliceFrames(const torch::Tensor& x, const torch::Tensor& starts, int64_t length,
                          int64_t scale = 1) {
  // x [B, ..., L]; slices [start * scale, (start + length) * scale) per row.
  std::vector<torch::Tensor> rows;
  for (int64_t b = 0; b < x.size(0); ++b) {
    rows.push_back(x[b].narrow(-1, starts[b].item<int64_t>() * scale, length * scale));
  }
  return torch::stack(rows);
}

}  // namespace

TrainForwardResult PeriodVitsImpl::TrainForward(const Batch& batch, int segment_frames,
                                                at::Generator gen) {
  TrainForwardResult r;
  auto g = GlobalCondition(batch.speakers, batch.emotions);
  auto frame_mask = batch.FrameMask();

  // Posterior path.
  auto q = posterior_encoder_(NormalizeLinear(batch.linear), frame_mask, g);
  auto noise = torch::randn(q.mu.sizes(), gen, q.mu.options());
  auto z = SampleLatent(q, noise, frame_mask);
  auto flowed = flow_(z, frame_mask, g);

  // Prior path, expanded with ground-truth durations.
  auto prior = EncodePrior(batch.phonemes, batch.accents, batch.phoneme_lengths, batch.durations, g);
  if (prior.frame_mask.size(2) != frame_mask.size(2)) {
    throw std::runtime_error("duration sum does not match feature frames in batch");
  }
  const auto fm = frame_mask.squeeze(1);
  r.terms.kl = PriorKl(flowed.z, q.log_sigma, prior.frame_prior.params, flowed.log_det, frame_mask);
  r.terms.pitch = PitchLoss(prior.pitch, batch.log_f0, batch.vuv, fm);
  r.terms.dur = DurationLoss(prior.log_durations, batch.durations, prior.phoneme_mask.squeeze(1));

  // Random frame-aligned segment around a uniformly drawn centre frame. Plain
  // uniform starts almost never cover the first and last frames, and the
  // decoder then saturates on leading and trailing silence.
  const int64_t t_max = frame_mask.size(2);
  const int64_t seg = std::min<int64_t>(segment_frames, t_max);
  auto max_start = (batch.frame_lengths - seg).clamp_min(0);
  auto u = torch::rand({batch.size()}, gen, torch::TensorOptions().dtype(torch::kFloat64));
  auto centre = torch::floor(u * batch.frame_lengths.to(torch::kFloat64)).to(torch::kInt64);
  r.segment_starts = torch::minimum(torch::clamp_min(centre - seg / 2, 0), max_start);
  const int64_t hop = features_.hop_samples;
  auto z_seg = SliceFrames(z, r.segment_starts, seg);
  auto f0_seg = SliceFrames(batch.log_f0, r.segment_starts, seg);
  auto vuv_seg = SliceFrames(batch.vuv, r.segment_starts, seg);
  r.real = SliceFrames(batch.wave, r.segment_starts, seg, hop);
  r.segment_mask = SliceFrames(fm, r.segment_starts, seg);
  r.fake = Render(z_seg, f0_seg, vuv_seg, g, PitchSource::kExtracted, /*random_phase=*/true, gen);
  return r;
}

SynthesisResult PeriodVitsImpl::Synthesize(const torch::Tensor& phonemes,
                                           const torch::Tensor& accents,
                                           const torch::Tensor& phoneme_lengths,
                                           const torch::Tensor& speakers,
                                           const torch::Tensor& emotions,
                                           const SynthesisOptions& options, at::Generator gen) {
  SynthesisResult r;
  auto g = GlobalCondition(speakers, emotions);
  auto prior = EncodePrior(phonemes, accents, phoneme_lengths, {}, g, /*predict_durations=*/true);
  const auto& p = prior.frame_prior.params;
  auto eps = torch::randn(p.mu.sizes(), gen, p.mu.options());
  auto u = (p.mu + eps * torch::exp(p.log_sigma) * options.temperature) * prior.frame_mask;
  auto z = flow_->inverse(u, prior.frame_mask, g);
  const auto fm = prior.frame_mask.squeeze(1);
  r.vuv = (prior.pitch.vuv > options.vuv_threshold).to(torch::kFloat32) * fm;
  r.pitch = prior.pitch;
  r.durations = prior.durations;
  r.frame_lengths = fm.sum(1).to(torch::kInt64);
  // Padded frames hold log_f0 = 0 (1 Hz); replace with a valid value.
  auto log_f0 = torch::where(fm > 0, prior.pitch.log_f0, log_f0_mean_.expand_as(fm));
  r.wave = Render(z, log_f0, r.vuv, g, PitchSource::kPredicted, !options.zero_phase, gen);
  return r;
}

torch::Tensor PeriodVitsImpl::CopySynthesize(const torch::Tensor& linear,
                                             const torch::Tensor& log_f0, const torch::Tensor& vuv,
                                             const torch::Tensor& speakers,
                                             const torch::Tensor& emotions, bool zero_phase,
                                             at::Generator gen) {
  auto g = GlobalCondition(speakers, emotions);
  auto mask = torch::ones({linear.size(0), 1, linear.size(2)});
  auto q = posterior_encoder_(NormalizeLinear(linear), mask, g);
  auto noise = torch::randn(q.mu.sizes(), gen, q.mu.options());
  auto z = SampleLatent(q, noise, mask);
  return Render(z, log_f0, vuv, g, PitchSource::kExtracted, !zero_phase, gen);
}

}  // namespace pvits
