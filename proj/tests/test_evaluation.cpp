#include <doctest.h>

#include <cmath>

#include "bp/evaluation.hpp"

using namespace bp;

namespace {

struct Mini {
  BackboneConfig cfg;
  Tokenizer tok{6, 51};
  TextEncoder te{6, 12, 12, 51};
  Backbone net;
  std::vector<PairedSample> data;

  Mini() : cfg(make_cfg()), net(Backbone::random_init(cfg, tok, te)) {
    net.freeze();
    DegradationParams params;
    data = make_paired_dataset(cfg.side, DegradationKind::Veil, params, 8, 61);
  }

  static BackboneConfig make_cfg() {
    BackboneConfig cfg;
    cfg.side = 4;
    cfg.input_dim = 16;
    cfg.hidden_dim = 16;
    cfg.hidden_layers = 0;
    cfg.context_tokens = 3;
    cfg.context_dim = 12;
    cfg.time_dim = 8;
    cfg.attn_dim = 8;
    cfg.seed = 51;
    return cfg;
  }
};

}  // namespace

TEST_CASE("mse/psnr closed-form cases") {
  Tensor target({4}, {0.2, 0.4, 0.6, 0.8});
  Metrics same = mse_psnr(target, target);
  CHECK(same.mse == 0.0);
  CHECK(std::isinf(same.psnr));

  Tensor off(target.shape());
  for (std::size_t i = 0; i < off.size(); ++i) off[i] = target[i] + 0.1;
  Metrics m = mse_psnr(off, target);
  CHECK(m.mse == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(m.psnr == doctest::Approx(20.0).epsilon(1e-9));

  // mse is symmetric (psnr's target-range check aside)
  Tensor a({3}, {0.1, 0.5, 0.9});
  Tensor b({3}, {0.3, 0.2, 0.7});
  CHECK(mse_psnr(a, b).mse == doctest::Approx(mse_psnr(b, a).mse).epsilon(1e-15));

  CHECK_THROWS(mse_psnr(a, Tensor({3}, {0.1, 0.2, 1.5})));
  CHECK_THROWS(mse_psnr(a, Tensor({2}, {0.1, 0.2})));
}

TEST_CASE("t0_score: min-max endpoints on a single higher-better metric") {
  MetricTable t;
  t.rows = {"a", "b"};
  t.columns = {{"m", true}};
  t.values = {{1.0}, {3.0}};
  auto r = t0_score(t);
  CHECK(r.scores[0] == 0.0);
  CHECK(r.scores[1] == 1.0);
  CHECK(r.warnings.empty());
}

TEST_CASE("t0_score: hand-computed 3x2 mixed-orientation table") {
  // col1 higher-better {1,2,3} -> {0, .5, 1}
  // col2 lower-better {4,8,6} -> norm {0,1,.5} -> flipped {1,0,.5}
  // scores: a=(0+1)/2=0.5  b=(.5+0)/2=0.25  c=(1+.5)/2=0.75
  MetricTable t;
  t.rows = {"a", "b", "c"};
  t.columns = {{"up", true}, {"down", false}};
  t.values = {{1.0, 4.0}, {2.0, 8.0}, {3.0, 6.0}};
  auto r = t0_score(t);
  CHECK(r.scores[0] == 0.5);
  CHECK(r.scores[1] == 0.25);
  CHECK(r.scores[2] == 0.75);
}

TEST_CASE("t0_score: dominance implies a higher score") {
  MetricTable t;
  t.rows = {"a", "b", "c"};
  t.columns = {{"up", true}, {"down", false}};
  t.values = {{3.0, 1.0}, {2.0, 2.0}, {1.0, 3.0}};  // a dominates b dominates c
  auto r = t0_score(t);
  CHECK(r.scores[0] > r.scores[1]);
  CHECK(r.scores[1] > r.scores[2]);
}

TEST_CASE("t0_score: affine rescaling of a column leaves scores unchanged") {
  Rng rng(3);
  MetricTable t;
  t.rows = {"r0", "r1", "r2", "r3"};
  t.columns = {{"x", true}, {"y", false}};
  for (int i = 0; i < 4; ++i) t.values.push_back({rng.uniform(0, 5), rng.uniform(0, 5)});
  auto base = t0_score(t);
  MetricTable scaled = t;
  for (auto& row : scaled.values) row[1] = 37.5 * row[1] + 11.0;  // positive affine
  auto after = t0_score(scaled);
  for (std::size_t i = 0; i < base.scores.size(); ++i)
    CHECK(std::abs(base.scores[i] - after.scores[i]) < 1e-12);
}

TEST_CASE("t0_score: constant column contributes 0.5 and warns; argmax unchanged") {
  MetricTable t;
  t.rows = {"a", "b"};
  t.columns = {{"up", true}};
  t.values = {{1.0}, {3.0}};
  auto base = t0_score(t);

  MetricTable padded = t;
  padded.columns.push_back({"const", true});
  padded.values[0].push_back(7.0);
  padded.values[1].push_back(7.0);
  auto r = t0_score(padded);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.scores[0] == doctest::Approx((0.0 + 0.5) / 2).epsilon(1e-15));
  CHECK(r.scores[1] == doctest::Approx((1.0 + 0.5) / 2).epsilon(1e-15));
  // the best row is the same as before the padding
  CHECK((base.scores[1] > base.scores[0]) == (r.scores[1] > r.scores[0]));
}

TEST_CASE("t0_score rejects degenerate tables") {
  MetricTable t;
  t.rows = {"only"};
  t.columns = {{"m", true}};
  t.values = {{1.0}};
  CHECK_THROWS(t0_score(t));
  MetricTable missing;
  missing.rows = {"a", "b"};
  missing.columns = {{"m", true}};
  missing.values = {{1.0}};
  CHECK_THROWS(t0_score(missing));
}

TEST_CASE("training-family self score sits near the half-normal mean") {
  Mini m;
  // noise-dominated time so the mixture is close to gaussian
  const double score =
      marginal_self_score(Trajectory::Naive, m.data, 0.9, 0.4, 1.0, 512, 1234);
  CHECK(score == doctest::Approx(std::sqrt(2.0 / 3.141592653589793)).epsilon(0.07));
}

TEST_CASE("mismatch diagnostic is deterministic and validates draws") {
  Mini m;
  Prompt p = make_embedding_prompt(DegradationKind::Veil, m.net.null_context());
  SamplerConfig sc;
  sc.steps = 3;
  std::vector<PairedSample> subset(m.data.begin(), m.data.begin() + 4);
  DivergenceCurve a =
      mismatch_diagnostic(Trajectory::Ebr, p, m.net, m.tok, m.te, subset, sc, 64, 5);
  DivergenceCurve b =
      mismatch_diagnostic(Trajectory::Ebr, p, m.net, m.tok, m.te, subset, sc, 64, 5);
  CHECK(a.times == b.times);
  CHECK(a.mean_abs_z == b.mean_abs_z);
  CHECK(a.times.size() == 3);
  for (double v : a.mean_abs_z) CHECK(v >= 0.0);
  CHECK_THROWS(mismatch_diagnostic(Trajectory::Ebr, p, m.net, m.tok, m.te, subset, sc, 29, 5));
}

TEST_CASE("equal-budget validation across arms") {
  TrainConfig a, b, c;
  CHECK_NOTHROW(validate_equal_budgets(a, b, c));
  b.iterations += 1;
  CHECK_THROWS(validate_equal_budgets(a, b, c));
  b = a;
  c.learning_rate *= 2;
  CHECK_THROWS(validate_equal_budgets(a, b, c));
}

TEST_CASE("bridge comparison runs the three arms and aggregates") {
  Mini m;
  BridgeCompareConfig cfg;
  cfg.seeds = {1};
  cfg.train.iterations = 10;
  cfg.train.batch_size = 2;
  cfg.train.dataset_size = 6;
  cfg.sampler.steps = 3;
  cfg.test_count = 3;
  BridgeCompareReport r = bridge_comparison(cfg, m.net, m.tok, m.te);
  REQUIRE(r.arms.size() == 3);
  CHECK(r.arms[0].trajectory == Trajectory::Naive);
  CHECK(r.arms[2].trajectory == Trajectory::Ebr);
  for (const auto& arm : r.arms) {
    CHECK(arm.per_seed_mse.size() == 1);
    CHECK(arm.mean_mse > 0.0);
  }
  CHECK(r.per_seed_ebr_better_than_naive.size() == 1);
  // the reference ordering constants express the production-scale ranking
  CHECK(kReferencePsnrNaive < kReferencePsnrDdbm);
  CHECK(kReferencePsnrDdbm < kReferencePsnrEbr);
}
