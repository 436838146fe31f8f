#include "gstrument/gan.hpp"

#include <cmath>
#include <random>

#include "gstrument/errors.hpp"

namespace gstrument::toy {

void GanConfig::validate() const {
  require(steps >= 1 && batch >= 1 && noise_dim >= 1 && hidden >= 1, "GAN sizes must be positive");
  require(r1_gamma >= 0.0, "r1_gamma must be non-negative");
  require(d_steps >= 1, "d_steps must be at least 1");
  require(g_ema >= 0.0 && g_ema < 1.0, "g_ema must lie in [0, 1)");
  adam.validate();
}

Eigen::VectorXd one_hot(int index, int size) {
  require(index >= 0 && index < size, "pitch " + std::to_string(index) + " out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
  v(index) = 1.0;
  return v;
}

Eigen::MatrixXd stack_condition(const Eigen::MatrixXd& top, const std::vector<int>& pitch, int num_pitches,
                                const Eigen::MatrixXd& features) {
  require(static_cast<std::size_t>(top.cols()) == pitch.size() && features.cols() == top.cols(),
          "conditioning batch sizes differ");
  Eigen::MatrixXd out(top.rows() + num_pitches + features.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.middleRows(top.rows(), num_pitches).setZero();
  for (Eigen::Index c = 0; c < top.cols(); ++c) {
    const int p = pitch[static_cast<std::size_t>(c)];
    require(p >= 0 && p < num_pitches, "pitch " + std::to_string(p) + " out of range");
    out(top.rows() + p, c) = 1.0;
  }
  out.bottomRows(features.rows()) = features;
  return out;
}

GanModel init_gan(std::size_t data_dim, int num_pitches, std::size_t feature_dim, const GanConfig& cfg) {
  cfg.validate();
  require(data_dim >= 1 && num_pitches >= 1, "GAN needs data and pitch dimensions");
  std::mt19937_64 rng(cfg.seed);
  GanModel m;
  m.noise_dim = cfg.noise_dim;
  m.data_dim = data_dim;
  m.feature_dim = feature_dim;
  m.num_pitches = num_pitches;
  const std::size_t cond = static_cast<std::size_t>(num_pitches) + feature_dim;
  m.generator = ToyNet({cfg.noise_dim + cond, cfg.hidden, cfg.hidden, data_dim},
                       {Activation::LeakyRelu, Activation::LeakyRelu, Activation::Softplus}, rng);
  m.discriminator = ToyNet({data_dim + cond, cfg.hidden, cfg.hidden, 1},
                           {cfg.discriminator_activation, cfg.discriminator_activation, Activation::Identity}, rng,
                           /*zero_last=*/true);
  return m;
}

neighborhood::FeatureStore build_store(const ToyNet& extractor, const ToyDataset& data, std::size_t k) {
  data.validate();
  const Eigen::MatrixXd h = extractor.forward(data.x);
  std::vector<neighborhood::Item> items(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& it = items[i];
    it.id = static_cast<std::int64_t>(i);
    it.feature = h.col(static_cast<Eigen::Index>(i));
    it.pitch = data.midi(i);
    it.instrument_id = data.identity[i];
    it.category = data.category[i];
  }
  return neighborhood::FeatureStore(std::move(items), k);
}

double r1_penalty(const ToyNet& discriminator, const Eigen::MatrixXd& d_input, std::size_t data_dim, double gamma,
                  Gradients* grads) {
  require(data_dim <= static_cast<std::size_t>(d_input.rows()), "data_dim exceeds discriminator input");
  const auto n = static_cast<double>(d_input.cols());
  const auto dd = static_cast<Eigen::Index>(data_dim);
  ForwardCache cache;
  const Eigen::MatrixXd out = discriminator.forward(d_input, &cache);
  Eigen::MatrixXd dx = discriminator.backward(cache, Eigen::MatrixXd::Ones(1, out.cols()), nullptr);
  dx.bottomRows(dx.rows() - dd).setZero();
  const double value = 0.5 * gamma * dx.colwise().squaredNorm().sum() / n;
  if (!grads || gamma == 0.0) return value;

  constexpr double kDelta = 1e-4;
  Eigen::VectorXd eps(d_input.cols());
  for (Eigen::Index c = 0; c < d_input.cols(); ++c) {
    const double norm = dx.col(c).norm();
    eps(c) = norm > 0.0 ? kDelta / norm : 0.0;
  }
  Eigen::MatrixXd shift = dx * eps.asDiagonal();
  Eigen::RowVectorXd weight(d_input.cols());
  for (Eigen::Index c = 0; c < d_input.cols(); ++c) weight(c) = eps(c) > 0.0 ? gamma / (n * 2.0 * eps(c)) : 0.0;

  ForwardCache plus, minus;
  discriminator.forward(d_input + shift, &plus);
  discriminator.backward(plus, weight, grads);
  discriminator.forward(d_input - shift, &minus);
  discriminator.backward(minus, -weight, grads);
  return value;
}

Eigen::VectorXd sample_noise(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd z(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = gauss(rng);
  return z;
}

GanRun train_gan(const neighborhood::FeatureStore& store, const ToyDataset& data, const GanConfig& cfg) {
  cfg.validate();
  if (store.empty()) throw InvalidState("cannot train on an empty feature store");
  data.validate();
  require(store.size() == data.size(), "store and dataset sizes differ");

  GanRun run;
  run.model = init_gan(data.dim(), data.num_pitches, store.dim(), cfg);
  GanModel& m = run.model;
  Adam adam_g(m.generator, cfg.adam);
  Adam adam_d(m.discriminator, cfg.adam);
  const auto neighborhoods = neighborhood::all_neighborhoods(store);
  const Eigen::MatrixXd features = store.feature_matrix().transpose();

  std::mt19937_64 rng(cfg.seed ^ 0xa5a5a5a5a5a5a5a5ULL);
  std::uniform_int_distribution<std::size_t> draw(0, store.size() - 1);
  const auto B = static_cast<Eigen::Index>(cfg.batch);
  Eigen::MatrixXd real(data.dim(), B), z(cfg.noise_dim, B), h(store.dim(), B);
  std::vector<int> pitch(cfg.batch);

  Eigen::VectorXd ema = m.generator.flat_params();
  auto draw_batch = [&] {
    for (Eigen::Index b = 0; b < B; ++b) {
      const std::size_t i = draw(rng);
      const auto nb = neighborhood::sample_neighbor(neighborhoods[i], rng);
      const std::size_t j = store.index_of(nb.id);
      real.col(b) = data.x.col(static_cast<Eigen::Index>(j));
      pitch[static_cast<std::size_t>(b)] = nb.pitch - data.base_midi;
      h.col(b) = features.col(static_cast<Eigen::Index>(i));
      z.col(b) = sample_noise(cfg.noise_dim, rng);
    }
  };

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    ForwardCache gc;
    Eigen::MatrixXd fake;
    Eigen::RowVectorXd real_logits;
    for (std::size_t inner = 0; inner < cfg.d_steps; ++inner) {
      draw_batch();
      gc = ForwardCache{};
      fake = m.generator.forward(stack_condition(z, pitch, m.num_pitches, h), &gc);
      const Eigen::MatrixXd d_real_in = stack_condition(real, pitch, m.num_pitches, h);
      ForwardCache rc, fc;
      real_logits = m.discriminator.forward(d_real_in, &rc).row(0);
      const Eigen::RowVectorXd fake_logits =
          m.discriminator.forward(stack_condition(fake, pitch, m.num_pitches, h), &fc).row(0);
      const auto losses = gan_losses_from_logits(real_logits, fake_logits, cfg.generator_loss);
      Gradients gd = m.discriminator.zero_gradients();
      m.discriminator.backward(rc, losses.d_loss_d_real, &gd);
      m.discriminator.backward(fc, losses.d_loss_d_fake, &gd);
      double r1 = 0.0;
      if (cfg.r1_gamma > 0.0) r1 = r1_penalty(m.discriminator, d_real_in, m.data_dim, cfg.r1_gamma, &gd);
      adam_d.step(m.discriminator, gd);
      if (inner == 0) {
        LogRow row;
        row.step = step;
        row.loss_d = losses.discriminator + r1;
        row.loss_g = losses.generator;
        run.log.push_back(row);
      }
    }

    // Generator step on the last batch, against the updated discriminator.
    ForwardCache fc2;
    const Eigen::RowVectorXd logits2 =
        m.discriminator.forward(stack_condition(fake, pitch, m.num_pitches, h), &fc2).row(0);
    const auto g_losses = gan_losses_from_logits(real_logits, logits2, cfg.generator_loss);
    const Eigen::MatrixXd d_in = m.discriminator.backward(fc2, g_losses.g_loss_d_fake, nullptr);
    Gradients gg = m.generator.zero_gradients();
    m.generator.backward(gc, d_in.topRows(static_cast<Eigen::Index>(m.data_dim)), &gg);
    adam_g.step(m.generator, gg);
    if (cfg.g_ema > 0.0) ema = cfg.g_ema * ema + (1.0 - cfg.g_ema) * m.generator.flat_params();
  }
  if (cfg.g_ema > 0.0) m.generator.set_flat_params(ema);
  return run;
}

Eigen::VectorXd generate_from_feature(const GanModel& m, const Eigen::VectorXd& h, int pitch,
                                      const Eigen::VectorXd& z) {
  require(static_cast<std::size_t>(h.size()) == m.feature_dim, "feature dimension mismatch");
  require(static_cast<std::size_t>(z.size()) == m.noise_dim, "noise dimension mismatch");
  return m.generator.forward(stack_condition(Eigen::MatrixXd(z), {pitch}, m.num_pitches, Eigen::MatrixXd(h))).col(0);
}

Eigen::VectorXd generate(const GanModel& m, const ToyNet& extractor, const Eigen::VectorXd& x_input, int pitch,
                         const Eigen::VectorXd& z) {
  require(static_cast<std::size_t>(x_input.size()) == extractor.input_dim(), "input dimension mismatch");
  return generate_from_feature(m, extractor.forward(x_input), pitch, z);
}

Eigen::VectorXd interpolate(const GanModel& m, const Eigen::VectorXd& h_a, const Eigen::VectorXd& h_b, double t,
                            int pitch, const Eigen::VectorXd& z) {
  require(t >= 0.0 && t <= 1.0, "interpolation ratio must lie in [0, 1]");
  require(h_a.size() == h_b.size(), "feature dimensions differ");
  Eigen::VectorXd h;
  if (t == 0.0) h = h_a;
  else if (t == 1.0) h = h_b;
  else h = (1.0 - t) * h_a + t * h_b;
  return generate_from_feature(m, h, pitch, z);
}

}  // namespace gstrument::toy
