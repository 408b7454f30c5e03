#include <doctest.h>

#include <cmath>

#include "splitbench/model_io.hpp"
#include "splitbench/netsim.hpp"

using namespace splitbench;

TEST_CASE("transmission_delay: zero bytes at zero latency is free") {
  CHECK(transmission_delay(0, {1e6, 0.0}) == 0.0);
}

TEST_CASE("transmission_delay: 1 MB over 1 MB/s with 10 ms latency") {
  CHECK(transmission_delay(1000000, {1000000.0, 0.01}) == doctest::Approx(1.01).epsilon(1e-12));
}

TEST_CASE("transmission_delay: linear in bytes at zero latency") {
  const LinkModel link{5e5, 0.0};
  CHECK(transmission_delay(2000, link) == doctest::Approx(2 * transmission_delay(1000, link)));
}

TEST_CASE("transmission_delay: invalid arguments rejected") {
  CHECK_THROWS_AS(transmission_delay(-1, {1e6, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(transmission_delay(1, {0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(transmission_delay(1, {1e6, -0.1}), std::invalid_argument);
}

TEST_CASE("compute_delay: empty model costs nothing") {
  SequentialModel m("empty", {4}, {});
  CHECK(compute_delay(m, 8, Phase::Forward, {1e-9}) == 0.0);
}

TEST_CASE("compute_delay: dense(2->3) multiply-add count by hand") {
  SequentialModel m("d", {2}, {Layer::dense(2, 3, false)});
  m.init_weights(1);
  // 4 samples x (2 ops x 2 in x 3 out) flops at 1e-6 s/flop
  CHECK(compute_delay(m, 4, Phase::Forward, {1e-6}) == doctest::Approx(4 * 12 * 1e-6));
  CHECK(compute_delay(m, 4, Phase::Backward, {1e-6}) == doctest::Approx(2 * 4 * 12 * 1e-6));
}

TEST_CASE("compute_delay: client cost is non-decreasing in the cut index") {
  SequentialModel m = builtin_model("digits_cnn");
  m.init_weights(1);
  double prev = -1.0;
  for (int d = 0; d <= m.num_layers(); ++d) {
    const double c = compute_delay(cut(m, d).client, 4, Phase::Forward, {1e-9});
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("virtual clock: events pop in (time, entity, seq) order") {
  VirtualClock clock;
  std::vector<int> seen;
  clock.schedule(2.0, 1, [&] { seen.push_back(3); });
  clock.schedule(1.0, 7, [&] { seen.push_back(2); });
  clock.schedule(1.0, 2, [&] { seen.push_back(1); });
  clock.run();
  CHECK(seen == std::vector<int>{1, 2, 3});
  CHECK(clock.now() == 2.0);
}

namespace {

SplitCost uniform_cost() {
  SplitCost c;
  c.client_fwd_s = 0.010;
  c.client_bwd_s = 0.020;
  c.server_fwd_s = 0.030;
  c.server_bwd_s = 0.060;
  c.client_update_s = 0.001;
  c.server_update_s = 0.002;
  c.interm_bytes = 1000;
  c.client_weight_bytes = 800;
  c.server_weight_bytes = 1600;
  return c;
}

SimConfig base_config(Arch arch, int clients, int batches) {
  SimConfig cfg;
  cfg.arch = arch;
  cfg.num_clients = clients;
  cfg.batches_per_client = batches;
  cfg.split_link = {1e6, 0.0};
  cfg.ps_link = {1e6, 0.0};
  return cfg;
}

}  // namespace

TEST_CASE("single pair: FSL and PSL breakdowns coincide") {
  const SplitCost cost = uniform_cost();
  const TimingBreakdown fsl = simulate_epoch(base_config(Arch::FSL, 1, 4), cost, false);
  const TimingBreakdown psl = simulate_epoch(base_config(Arch::PSL, 1, 4), cost, false);
  CHECK(fsl.client_fb == doctest::Approx(psl.client_fb).epsilon(1e-12));
  CHECK(fsl.server_fb == doctest::Approx(psl.server_fb).epsilon(1e-12));
  CHECK(fsl.client_update == doctest::Approx(psl.client_update).epsilon(1e-12));
  CHECK(fsl.server_update == doctest::Approx(psl.server_update).epsilon(1e-12));
}

TEST_CASE("PSL server busy time is the closed-form queue sum N_C * w") {
  const SplitCost cost = uniform_cost();
  const int nc = 20;
  const TimingBreakdown psl = simulate_epoch(base_config(Arch::PSL, nc, 1), cost, false);
  const TimingBreakdown fsl = simulate_epoch(base_config(Arch::FSL, nc, 1), cost, false);
  const double w =
      transmission_delay(cost.interm_bytes, {1e6, 0.0}) + cost.server_fwd_s + cost.server_bwd_s;
  CHECK(fsl.server_fb == doctest::Approx(w).epsilon(1e-12));
  CHECK(psl.server_fb == doctest::Approx(nc * w).epsilon(1e-12));
  CHECK(psl.server_fb >= fsl.server_fb);
}

TEST_CASE("FRC epoch F&B is twice FL's and invariant to the cut") {
  const LayerProfile profile = vgg16_profile();
  std::vector<double> fl_fb, frc_fb, fl_up, frc_up;
  for (int d : {2, 10, 24}) {
    const SplitCost cost = split_cost_from_profile(profile, d, 32, {1e-9}, {1e-9});
    const TimingBreakdown fl = simulate_epoch(base_config(Arch::FL, 4, 2), cost, false);
    const TimingBreakdown frc = simulate_epoch(base_config(Arch::FRC, 4, 2), cost, false);
    CHECK(frc.client_fb == doctest::Approx(2.0 * fl.client_fb).epsilon(1e-12));
    fl_fb.push_back(fl.client_fb);
    frc_fb.push_back(frc.client_fb);
    fl_up.push_back(fl.client_update);
    frc_up.push_back(frc.client_update);
  }
  // invariance across cuts
  for (std::size_t i = 1; i < fl_fb.size(); ++i) {
    CHECK(fl_fb[i] == doctest::Approx(fl_fb[0]).epsilon(1e-12));
    CHECK(frc_fb[i] == doctest::Approx(frc_fb[0]).epsilon(1e-12));
    CHECK(fl_up[i] == doctest::Approx(fl_up[0]).epsilon(1e-12));
    CHECK(frc_up[i] == doctest::Approx(frc_up[0]).epsilon(1e-12));
  }
}

TEST_CASE("FSL epoch span does not grow with homogeneous pairs; PSL server does") {
  const SplitCost cost = uniform_cost();
  const TimingBreakdown fsl1 = simulate_epoch(base_config(Arch::FSL, 1, 3), cost, false);
  const TimingBreakdown fsl8 = simulate_epoch(base_config(Arch::FSL, 8, 3), cost, false);
  CHECK(fsl8.epoch_span == doctest::Approx(fsl1.epoch_span).epsilon(1e-12));

  const TimingBreakdown psl2 = simulate_epoch(base_config(Arch::PSL, 2, 3), cost, false);
  const TimingBreakdown psl8 = simulate_epoch(base_config(Arch::PSL, 8, 3), cost, false);
  CHECK(psl8.server_fb == doctest::Approx(4.0 * psl2.server_fb).epsilon(1e-12));
}

TEST_CASE("determinism: identical configuration gives identical breakdowns") {
  const SplitCost cost = uniform_cost();
  for (Arch arch : {Arch::FL, Arch::SL, Arch::PSL, Arch::FSL, Arch::FRC}) {
    const TimingBreakdown a = simulate_epoch(base_config(arch, 5, 3), cost, true);
    const TimingBreakdown b = simulate_epoch(base_config(arch, 5, 3), cost, true);
    CHECK(a.client_fb == b.client_fb);
    CHECK(a.server_fb == b.server_fb);
    CHECK(a.client_update == b.client_update);
    CHECK(a.server_update == b.server_update);
    CHECK(a.sync == b.sync);
    CHECK(a.epoch_span == b.epoch_span);
  }
}

TEST_CASE("epoch total is the sum of its components") {
  const SplitCost cost = uniform_cost();
  const TimingBreakdown t = simulate_epoch(base_config(Arch::FSL, 3, 2), cost, false);
  CHECK(t.epoch_total() ==
        doctest::Approx(t.client_fb + t.server_fb + t.client_update + t.server_update));
}

TEST_CASE("conservation: busy-interval accounting adds up for PSL") {
  // one shared server: mean server figures times one server equal the sums;
  // clients are homogeneous so mean times count reproduces the totals
  const SplitCost cost = uniform_cost();
  const int nc = 6, batches = 2;
  const TimingBreakdown t = simulate_epoch(base_config(Arch::PSL, nc, batches), cost, false);
  const double tx = transmission_delay(cost.interm_bytes, {1e6, 0.0});
  const double client_busy_total = nc * batches * (cost.client_fwd_s + tx + cost.client_bwd_s);
  const double server_busy_total = nc * batches * (tx + cost.server_fwd_s + cost.server_bwd_s);
  CHECK(nc * t.client_fb == doctest::Approx(client_busy_total).epsilon(1e-12));
  CHECK(t.server_fb == doctest::Approx(server_busy_total).epsilon(1e-12));
  CHECK(nc * t.client_update == doctest::Approx(nc * batches * cost.client_update_s));
  CHECK(t.server_update == doctest::Approx(batches * cost.server_update_s));
}

TEST_CASE("averaging barrier accounts sync work without touching F&B") {
  const SplitCost cost = uniform_cost();
  const TimingBreakdown plain = simulate_epoch(base_config(Arch::FSL, 4, 2), cost, false);
  const TimingBreakdown with = simulate_epoch(base_config(Arch::FSL, 4, 2), cost, true);
  CHECK(with.client_fb == plain.client_fb);
  CHECK(with.server_fb == plain.server_fb);
  CHECK(plain.sync == 0.0);
  // four server uploads to the parameter server plus four broadcasts back
  const double tx = transmission_delay(cost.server_weight_bytes, {1e6, 0.0});
  CHECK(with.sync == doctest::Approx(8.0 * tx).epsilon(1e-12));
  CHECK(with.epoch_span >= plain.epoch_span);
}

TEST_CASE("simulate_epochs: barriers land every avg_every epochs") {
  const SplitCost cost = uniform_cost();
  SimConfig cfg = base_config(Arch::FSL, 2, 1);
  cfg.avg_every = 2;
  const auto epochs = simulate_epochs(cfg, cost, 4);
  REQUIRE(epochs.size() == 4);
  CHECK(epochs[0].sync == 0.0);
  CHECK(epochs[1].sync > 0.0);
  CHECK(epochs[2].sync == 0.0);
  CHECK(epochs[3].sync > 0.0);
}
