// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>
#include <utility>

#include "thermoloop/error.hpp"
#include "thermoloop/plant.hpp"
#include "thermoloop/rng.hpp"
#include "thermoloop/train.hpp"

using namespace thermoloop;
using namespace thermoloop::train;

namespace {

const plant::PhysicalConstants kPhys{};

// Windows with temperatures around 297 K and currents in the actuator range.
std::vector<datagen::SampleWindow> random_windows(std::size_t count, std::size_t n, std::size_t m,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> t(294.0, 300.0), i(-2.0, 2.0);
  std::vector<datagen::SampleWindow> w(count);
  for (auto& x : w) {
    for (std::size_t k = 0; k < n; ++k) x.history_temps.push_back(t(rng));
    for (std::size_t k = 0; k < m; ++k) {
      x.control_currents.push_back(i(rng));
      x.target_temps.push_back(t(rng));
    }
  }
  return w;
}

pigru::ModelParams noisy(const pigru::ModelDims& d, std::uint64_t seed, double scale) {
  auto p = pigru::ModelParams::zeros(d);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  p.for_each([&](std::string_view, pigru::Tensor& t) {
    for (auto& v : t.data) v = u(rng);
  });
  return p;
}

std::vector<std::size_t> all(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

datagen::Dataset tiny_dataset(std::size_t count, std::uint64_t seed) {
  datagen::Dataset ds;
  ds.history_len = 8;
  ds.horizon = 3;
  ds.windows = random_windows(count, 8, 3, seed);
  ds.trajectories = {{0.5, 0, false, count - count / 5, count / 5}};
  ds.normalization = datagen::compute_normalization(ds.windows, ds.train_indices(), {-2, 2});
  return ds;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("data loss") {
    const std::vector<double> a{1, 2, 3};
    CHECK(data_loss(a, a, 1, 3) == 0.0);
    CHECK(data_loss(std::vector<double>{3}, std::vector<double>{1}, 1, 1) == 4.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3, 3);
    std::vector<double> p(10), t(10);
    double ref = 0;
    for (std::size_t i = 0; i < 10; ++i) {
      p[i] = u(rng);
      t[i] = u(rng);
      ref += (p[i] - t[i]) * (p[i] - t[i]);
    }
    CHECK(data_loss(p, t, 2, 5) == doctest::Approx(ref / 10).epsilon(1e-12));
    CHECK_THROWS_AS(data_loss({}, {}, 0, 5), SizingError);
  }

  TEST_CASE("physics residual hand values") {
    const double Th = kPhys.hot_side_temp;
    CHECK(physics_residual(Th, Th, 0.0, kPhys, 0.2) == 0.0);
    // One-step rise of dt kelvin at I = 0: 1 + K dt / (m_e c).
    const double r = 1.0 + kPhys.heat_transfer * 0.2 / kPhys.thermal_mass();
    CHECK(physics_residual(Th, Th + 0.2, 0.0, kPhys, 0.2) == doctest::Approx(r).epsilon(1e-12));
    CHECK(r == doctest::Approx(1.000311).epsilon(1e-6));
    // 1/(B m) over steps 2..m: one residual over a horizon of two.
    const std::vector<double> T{Th, Th + 0.2}, I{0.0, 0.0};
    CHECK(physics_loss(T, I, 1, 2, kPhys, 0.2) == doctest::Approx(r * r / 2).epsilon(1e-12));
    const std::vector<double> flat(5, Th), zero(5, 0.0);
    CHECK(physics_loss(flat, zero, 1, 5, kPhys, 0.2) == 0.0);
    CHECK_THROWS_AS(physics_loss(std::vector<double>{Th}, std::vector<double>{0.0}, 1, 1, kPhys, 0.2),
                    SizingError);
  }

  TEST_CASE("noise-free plant trajectories satisfy the physics loss") {
    plant::PlantConfig cfg;
    cfg.laser_power = 0.0;
    cfg.sensor_noise_std = 0.0;
    const std::vector<double> I{0.5, -1.0, 1.5, 0.0, -0.3, 1.0};
    const auto traj = plant::simulate({296.0, 0}, I, cfg, 1);
    std::vector<double> T;
    for (const auto& s : traj) T.push_back(s.temp_true);
    CHECK(physics_loss(T, I, 1, I.size(), kPhys, 0.2) < 1e-10);
  }

  TEST_CASE("lambda ramp, schedule and loss mix") {
    TrainConfig c;
    CHECK(c.effective_lambda(0) == 0.0);
    CHECK(c.effective_lambda(1) == doctest::Approx(0.001 / 3));
    CHECK(c.effective_lambda(3) == 0.001);
    CHECK(c.effective_lambda(9) == 0.001);
    CHECK(c.learning_rate_at(3) == 0.01);
    CHECK(c.learning_rate_at(4) == 0.005);
    CHECK(c.learning_rate_at(9) == 0.0025);

    const pigru::ModelDims d{8, 3, 4, 3};
    const auto w = random_windows(6, 8, 3, 2);
    const Normalization norm{297.0, 2.0, 2.0};
    const auto data = PreparedWindows::from(w, all(6), norm);
    const Model model{d, norm, noisy(d, 3, 0.4)};
    const auto idx = all(6);

    const auto at3 = total_loss(data, idx, model, c, 3);
    CHECK(at3.lambda_eff == 0.001);
    CHECK(at3.total == doctest::Approx(0.999 * at3.data + 0.001 * at3.physics).epsilon(1e-14));
    const auto at0 = total_loss(data, idx, model, c, 0);
    CHECK(at0.total == at0.data);
    c.lambda = 0.0;
    const auto ablation = total_loss(data, idx, model, c, 5);
    CHECK(ablation.total == ablation.data);
  }

  TEST_CASE("gradients match central differences") {
    const pigru::ModelDims d{8, 3, 4, 3};
    const Normalization norm{297.0, 2.0, 2.0};
    const auto w = random_windows(5, 8, 3, 7);
    const auto data = PreparedWindows::from(w, all(5), norm);
    const auto idx = all(5);
    TrainConfig c;
    c.lambda = 0.3;  // weight the physics path enough to matter
    Model model{d, norm, noisy(d, 8, 0.5)};
    const auto g = gradients(data, idx, model, c, 5);
    CHECK(g.loss.total == doctest::Approx(total_loss(data, idx, model, c, 5).total).epsilon(1e-13));

    std::mt19937_64 rng(9);
    const double h = 1e-5;
    std::size_t checked = 0;
    auto params = model.params.tensors();
    const auto grads = g.grads.tensors();
    for (std::size_t k = 0; k < pigru::ModelParams::kTensorCount; ++k)
      for (std::size_t j = 0; j < params[k]->size(); j += 1 + rng() % 3) {
        const double orig = params[k]->data[j];
        params[k]->data[j] = orig + h;
        const double up = total_loss(data, idx, model, c, 5).total;
        params[k]->data[j] = orig - h;
        const double down = total_loss(data, idx, model, c, 5).total;
        params[k]->data[j] = orig;
        const double fd = (up - down) / (2 * h);
        const double an = grads[k]->data[j];
        CAPTURE(pigru::ModelParams::tensor_names()[k]);
        CAPTURE(j);
        CHECK(std::abs(an - fd) <= 1e-4 * std::max({std::abs(an), std::abs(fd), 1e-6}));
        ++checked;
      }
    CHECK(checked >= 60);

    // Per-sample threads do not change the reduction.
    c.jobs = 3;
    const auto g3 = gradients(data, idx, model, c, 5);
    CHECK(g3.grads == g.grads);
  }

  TEST_CASE("zero-parameter decoder bias gradient") {
    const pigru::ModelDims d{8, 3, 4, 3};
    const Normalization norm{297.0, 2.0, 2.0};
    const auto w = random_windows(4, 8, 3, 5);
    const auto data = PreparedWindows::from(w, all(4), norm);
    TrainConfig c;
    c.lambda = 0.0;
    const Model model{d, norm, pigru::ModelParams::zeros(d)};
    const auto g = gradients(data, all(4), model, c, 0);
    // Prediction is 0 everywhere: dL/db_l = 2/(B m) * sum_b (0 - target_bl).
    for (std::size_t l = 0; l < 3; ++l) {
      double s = 0;
      for (std::size_t b = 0; b < 4; ++b) s += -data.targets_of(b)[l];
      CHECK(g.grads.out_bias(l, 0) == doctest::Approx(2.0 * s / 12.0).epsilon(1e-12));
    }
  }

  TEST_CASE("adam updates") {
    const pigru::ModelDims d{2, 2, 1, 1};
    auto p = noisy(d, 1, 1.0);
    const auto p0 = p;
    auto st = AdamState::for_params(d);
    adam_step(p, pigru::ModelParams::zeros(d), st, 0.1);
    CHECK(p == p0);
    CHECK(st.timestep == 1);

    // First step: bias-corrected m/sqrt(v) = sign(g).
    auto q = p0;
    auto st2 = AdamState::for_params(d);
    auto g = noisy(d, 2, 1.0);
    adam_step(q, g, st2, 0.01);
    const auto qt = std::as_const(q).tensors();
    const auto p0t = p0.tensors();
    const auto gt = std::as_const(g).tensors();
    for (std::size_t k = 0; k < pigru::ModelParams::kTensorCount; ++k)
      for (std::size_t j = 0; j < qt[k]->size(); ++j)
        CHECK(p0t[k]->data[j] - qt[k]->data[j] == doctest::Approx(0.01 * (gt[k]->data[j] > 0 ? 1 : -1)).epsilon(1e-6));

    // Two identical steps against a scalar trace.
    adam_step(q, g, st2, 0.01);
    const double g0 = g.update_in(0, 0), w0 = p0.update_in(0, 0);
    double m = 0, v = 0, w = w0;
    for (int t = 1; t <= 2; ++t) {
      m = 0.9 * m + 0.1 * g0;
      v = 0.999 * v + 0.001 * g0 * g0;
      w -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    }
    CHECK(q.update_in(0, 0) == doctest::Approx(w).epsilon(1e-14));

    auto wrong = pigru::ModelParams::zeros({2, 3, 1, 1});
    CHECK_THROWS_AS(adam_step(q, wrong, st2, 0.01), ConfigError);
  }

  TEST_CASE("fit: zero epochs, determinism, logs") {
    const auto ds = tiny_dataset(40, 3);
    const pigru::ModelDims d{8, 3, 4, 3};
    TrainConfig c;
    c.epochs = 0;
    c.seed = 4;
    auto r0 = fit(ds, d, c);
    CHECK(r0.model.params == pigru::ModelParams::initialized(d, derive_seed(4, 0)));
    CHECK(r0.epochs.empty());

    c.epochs = 2;
    c.batch_size = 8;
    const auto a = fit(ds, d, c);
    c.jobs = 3;
    const auto b = fit(ds, d, c);
    CHECK(a.model.params == b.model.params);
    CHECK(a.batches.size() == 2 * 4);  // 32 training windows in batches of 8
    CHECK(a.epochs.size() == 2);
    CHECK_FALSE(a.model.params == r0.model.params);
    CHECK(training_log_csv(a.batches).rfind("epoch,batch,data_loss,physics_loss,total,lr,lambda_eff\n", 0) == 0);

    c.seed = 5;
    CHECK_FALSE(fit(ds, d, c).model.params == a.model.params);
  }

  TEST_CASE("fit: training actually reduces the loss") {
    // Learnable target: next temperatures equal the last history value.
    auto ds = tiny_dataset(96, 6);
    for (auto& w : ds.windows)
      for (auto& t : w.target_temps) t = w.history_temps.back();
    ds.normalization = datagen::compute_normalization(ds.windows, ds.train_indices(), {-2, 2});
    TrainConfig c;
    c.epochs = 6;
    c.batch_size = 8;
    c.lambda = 0.0;
    const auto r = fit(ds, {8, 3, 8, 4}, c);
    CHECK(r.epochs.back().validation_data_loss < 0.5 * r.initial_validation_data_loss);
  }

  TEST_CASE("fit errors") {
    auto ds = tiny_dataset(20, 1);
    TrainConfig c;
    c.epochs = 1;
    CHECK_THROWS_AS(fit(ds, {9, 3, 4, 3}, c), ConfigError);
    c.batch_size = 0;
    CHECK_THROWS_AS(fit(ds, {8, 3, 4, 3}, c), ConfigError);
    c.batch_size = 4;
    c.learning_rate = 1e300;  // blows up within a few steps
    ds.windows[0].target_temps[0] = 1e6;
    try {
      fit(ds, {8, 3, 4, 3}, c);
      FAIL("expected a numeric fault");
    } catch (const NumericFault& e) {
      CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
    }
  }

  TEST_CASE("config keys round trip") {
    TrainConfig c;
    c.epochs = 3;
    c.lambda = 0.25;
    KeyValueConfig kv;
    write_train_config(kv, c);
    const auto back = train_config_from(kv);
    CHECK(back.epochs == 3);
    CHECK(back.lambda == 0.25);
    CHECK_THROWS_AS(train_config_from(KeyValueConfig::parse("train.epoch = 3\n")), ConfigError);
    pigru::ModelDims d{50, 4, 16, 8};
    KeyValueConfig kd;
    write_model_dims(kd, d);
    CHECK(model_dims_from(kd) == d);
  }
}
