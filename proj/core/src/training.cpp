#include "cmsm/training.hpp"

#include <cmath>
#include <sstream>

namespace cmsm {

void TrainConfig::validate() const {
  if (lambda < 0) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
  if (iterations < 1) throw std::invalid_argument("TrainConfig: iterations must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (log_every < 1 || checkpoint_every < 1) throw std::invalid_argument("TrainConfig: intervals must be >= 1");
  schedule.validate();
}

TrainHistory train(std::span<TrainingView const> data, TrainConfig const &config, Model<float> &model,
                   AdamState<float> &adam, std::int64_t start_iteration, TrainHooks const &hooks) {
  config.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (adam.m.size() != model.params().size()) adam = AdamState<float>(AdamConfig{config.learning_rate}, model.params());
  adam.config.learning_rate = config.learning_rate;

  TrainHistory history;
  LossTape<float> tape;
  float const inv_batch = 1.0f / float(config.batch_size);
  for (std::int64_t it = start_iteration; it < config.iterations; ++it) {
    model.params().zero_grad();
    TrainLogRow row;
    row.iteration = it;
    for (int b = 0; b < config.batch_size; ++b) {
      auto const ub = static_cast<std::uint64_t>(b);
      auto const uit = static_cast<std::uint64_t>(it);
      Rng pick(derive_seed(config.seed, {uit, ub, 0}));
      std::size_t const index = static_cast<std::size_t>(pick.bits() % data.size());
      double const sigma = sample_sigma(config.schedule, derive_seed(config.seed, {uit, ub, 1}));
      auto const &view = data[index];
      KSpace<float> const s_t = perturb(view.s(), sigma, derive_seed(config.seed, {uit, ub, 2}));
      LossTerms const L = total_loss(view.s(), view.s_acs(), s_t, float(sigma), model, config.lambda, &tape);
      if (!std::isfinite(L.total)) {
        std::ostringstream msg;
        msg << "non-finite loss at iteration " << it << " (sigma=" << sigma << ", record " << index << ", msm=" << L.msm
            << ", csm=" << L.csm << ")";
        throw NumericError(msg.str());
      }
      backward(tape, model, inv_batch);
      row.msm += L.msm / config.batch_size;
      row.csm += L.csm / config.batch_size;
      row.total += L.total / config.batch_size;
      row.sigma += sigma / config.batch_size;
    }
    adam_step(model.params(), adam);
    history.push_back(row);
    std::int64_t const done = it + 1;
    if (hooks.on_log && (it % config.log_every == 0 || done == config.iterations)) hooks.on_log(row);
    if (hooks.on_checkpoint && (done % config.checkpoint_every == 0 || done == config.iterations)) {
      hooks.on_checkpoint(done, model, adam);
    }
  }
  return history;
}

}  // namespace cmsm
