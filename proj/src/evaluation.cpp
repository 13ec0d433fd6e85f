#include "bp/evaluation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bp {

Metrics mse_psnr(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target))
    throw std::invalid_argument("mse_psnr: shape mismatch " + pred.shape_str() + " vs " +
                                target.shape_str());
  for (std::size_t i = 0; i < target.size(); ++i)
    if (!(target[i] >= 0.0 && target[i] <= 1.0))
      throw std::invalid_argument("mse_psnr: target values must lie in [0,1]");
  Metrics m;
  m.mse = squared_error_sum(pred, target) / static_cast<double>(pred.size());
  m.psnr = m.mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / m.mse);
  return m;
}

void MetricTable::validate() const {
  if (rows.size() < 2) throw std::invalid_argument("MetricTable: need at least 2 rows");
  if (columns.empty()) throw std::invalid_argument("MetricTable: need at least 1 column");
  if (values.size() != rows.size()) throw std::invalid_argument("MetricTable: row count mismatch");
  for (const auto& r : values)
    if (r.size() != columns.size())
      throw std::invalid_argument("MetricTable: missing cells in a row");
}

T0ScoreResult t0_score(const MetricTable& table) {
  table.validate();
  const std::size_t nrows = table.rows.size();
  const std::size_t ncols = table.columns.size();
  T0ScoreResult result;
  result.scores.assign(nrows, 0.0);
  for (std::size_t c = 0; c < ncols; ++c) {
    double lo = table.values[0][c], hi = table.values[0][c];
    for (std::size_t r = 1; r < nrows; ++r) {
      lo = std::min(lo, table.values[r][c]);
      hi = std::max(hi, table.values[r][c]);
    }
    if (lo == hi) {
      // tie rule: a constant column cannot rank the rows
      result.warnings.push_back("column '" + table.columns[c].name +
                                "' is constant; contributing 0.5 to every row");
      for (std::size_t r = 0; r < nrows; ++r) result.scores[r] += 0.5;
      continue;
    }
    for (std::size_t r = 0; r < nrows; ++r) {
      double norm = (table.values[r][c] - lo) / (hi - lo);
      if (!table.columns[c].higher_better) norm = 1.0 - norm;
      result.scores[r] += norm;
    }
  }
  for (auto& s : result.scores) s /= static_cast<double>(ncols);
  return result;
}

namespace {

struct Marginal {
  std::vector<double> mean;
  std::vector<double> var;
};

constexpr double kVarianceFloor = 1e-6;  // guards dims the data pins exactly

Tensor training_state(Trajectory trajectory, const PairedSample& s, double t, const Tensor& eps,
                      const EbrSchedule& ebr, const DdbmSchedule& ddbm) {
  switch (trajectory) {
    case Trajectory::Naive: return naive_state(s.z_deg, t, eps);
    case Trajectory::Ddbm: return ddbm_state(s.z_clean, s.z_deg, t, eps, ddbm).y;
    case Trajectory::Ebr: return ebr_state(s.z_clean, s.z_deg, t, eps, ebr);
  }
  throw std::invalid_argument("training_state: unknown trajectory");
}

Marginal estimate_marginal(Trajectory trajectory, const std::vector<PairedSample>& samples,
                           double t, const EbrSchedule& ebr, const DdbmSchedule& ddbm, int draws,
                           Rng& rng) {
  const std::size_t n = samples[0].z_clean.size();
  Marginal m;
  m.mean.assign(n, 0.0);
  m.var.assign(n, 0.0);
  for (int d = 0; d < draws; ++d) {
    const PairedSample& s = samples[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(samples.size())))];
    Tensor eps = rng.normal_tensor(s.z_clean.shape());
    Tensor st = training_state(trajectory, s, t, eps, ebr, ddbm);
    for (std::size_t i = 0; i < n; ++i) {
      m.mean[i] += st[i];
      m.var[i] += st[i] * st[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    m.mean[i] /= draws;
    m.var[i] = std::max(m.var[i] / draws - m.mean[i] * m.mean[i], 0.0) + kVarianceFloor;
  }
  return m;
}

double mean_abs_z(const Tensor& state, const Marginal& m) {
  double acc = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i)
    acc += std::abs((state[i] - m.mean[i]) / std::sqrt(m.var[i]));
  return acc / static_cast<double>(state.size());
}

void check_draws(int monte_carlo_draws) {
  if (monte_carlo_draws < 30)
    throw std::invalid_argument("mismatch_diagnostic: need >= 30 Monte Carlo draws");
}

}  // namespace

DivergenceCurve mismatch_diagnostic(Trajectory trajectory, const Prompt& prompt,
                                    const Backbone& backbone, const Tokenizer& tok,
                                    const TextEncoder& te,
                                    const std::vector<PairedSample>& samples,
                                    const SamplerConfig& sampler_config, int monte_carlo_draws,
                                    std::uint64_t seed) {
  check_draws(monte_carlo_draws);
  if (samples.empty()) throw std::invalid_argument("mismatch_diagnostic: no samples");
  SamplerConfig cfg = sampler_config;
  cfg.trajectory = trajectory;
  cfg.validate();
  EbrSchedule ebr{cfg.t0};
  DdbmSchedule ddbm{cfg.eta};
  Rng rng(hash_combine(seed, 0xd1a9));

  // visited states per sample
  std::vector<RestoreTrace> traces(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    SamplerConfig per = cfg;
    per.seed = hash_combine(cfg.seed, i);
    (void)restore(samples[i].z_deg, {&prompt}, backbone, tok, te, per, &traces[i]);
  }

  const std::vector<double>& times = traces[0].times;
  DivergenceCurve curve;
  curve.times = times;
  curve.mean_abs_z.reserve(times.size());
  double total = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    // marginal time: DDBM traces are indexed by bridge time t, not sigma
    Marginal m = estimate_marginal(trajectory, samples, times[k], ebr, ddbm, monte_carlo_draws, rng);
    double acc = 0.0;
    for (const auto& tr : traces) acc += mean_abs_z(tr.states[k], m);
    acc /= static_cast<double>(traces.size());
    curve.mean_abs_z.push_back(acc);
    total += acc;
  }
  curve.overall_mean = total / static_cast<double>(times.size());
  return curve;
}

double marginal_self_score(Trajectory trajectory, const std::vector<PairedSample>& samples,
                           double t, double t0, double eta, int monte_carlo_draws,
                           std::uint64_t seed) {
  check_draws(monte_carlo_draws);
  if (samples.empty()) throw std::invalid_argument("marginal_self_score: no samples");
  EbrSchedule ebr{t0};
  DdbmSchedule ddbm{eta};
  Rng rng(hash_combine(seed, 0x5e1f));
  Marginal m = estimate_marginal(trajectory, samples, t, ebr, ddbm, monte_carlo_draws, rng);
  double acc = 0.0;
  for (int d = 0; d < monte_carlo_draws; ++d) {
    const PairedSample& s = samples[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(samples.size())))];
    Tensor eps = rng.normal_tensor(s.z_clean.shape());
    acc += mean_abs_z(training_state(trajectory, s, t, eps, ebr, ddbm), m);
  }
  return acc / monte_carlo_draws;
}

void validate_equal_budgets(const TrainConfig& a, const TrainConfig& b, const TrainConfig& c) {
  auto budget = [](const TrainConfig& t) {
    return std::tuple(t.iterations, t.batch_size, t.learning_rate, t.dataset_size, t.kind);
  };
  if (budget(a) != budget(b) || budget(a) != budget(c))
    throw std::invalid_argument("bridge_comparison: training budgets differ across arms");
}

BridgeCompareReport bridge_comparison(const BridgeCompareConfig& config, const Backbone& backbone,
                                      const Tokenizer& tok, const TextEncoder& te) {
  if (config.seeds.size() < 1) throw std::invalid_argument("bridge_comparison: no seeds");
  if (config.test_count < 1) throw std::invalid_argument("bridge_comparison: test_count must be >= 1");
  const Trajectory arms[] = {Trajectory::Naive, Trajectory::Ddbm, Trajectory::Ebr};

  TrainConfig arm_cfgs[3];
  for (int a = 0; a < 3; ++a) {
    arm_cfgs[a] = config.train;
    arm_cfgs[a].trajectory = arms[a];
  }
  validate_equal_budgets(arm_cfgs[0], arm_cfgs[1], arm_cfgs[2]);

  const int side = backbone.config().side;
  std::vector<PairedSample> test = make_paired_dataset(side, config.train.kind,
                                                       config.degradation, config.test_count,
                                                       config.test_seed);

  BridgeCompareReport report;
  for (int a = 0; a < 3; ++a) report.arms.push_back({arms[a], {}, {}, 0.0, 0.0});

  for (std::uint64_t seed : config.seeds) {
    std::vector<PairedSample> train_data =
        make_paired_dataset(side, config.train.kind, config.degradation, config.train.dataset_size,
                            hash_combine(seed, 0xda7a));
    for (int a = 0; a < 3; ++a) {
      TrainConfig tc = arm_cfgs[a];
      tc.seed = seed;
      PromptBank bank;
      TrainReport tr = train_prompt(tc, bank, backbone, tok, te, train_data);
      SamplerConfig sc = config.sampler;
      sc.trajectory = arms[a];
      double mse_acc = 0.0, psnr_acc = 0.0;
      int psnr_count = 0;
      for (std::size_t i = 0; i < test.size(); ++i) {
        sc.seed = hash_combine(hash_combine(seed, 0xbeef), i);
        Tensor restored = restore(test[i].z_deg, {&tr.final_prompt}, backbone, tok, te, sc);
        Metrics m = mse_psnr(restored, test[i].z_clean);
        mse_acc += m.mse;
        if (std::isfinite(m.psnr)) {
          psnr_acc += m.psnr;
          ++psnr_count;
        }
      }
      report.arms[static_cast<std::size_t>(a)].per_seed_mse.push_back(mse_acc / test.size());
      report.arms[static_cast<std::size_t>(a)].per_seed_psnr.push_back(
          psnr_count ? psnr_acc / psnr_count : std::numeric_limits<double>::infinity());
    }
  }

  for (auto& arm : report.arms) {
    double m = 0.0, p = 0.0;
    for (double v : arm.per_seed_mse) m += v;
    for (double v : arm.per_seed_psnr) p += v;
    arm.mean_mse = m / arm.per_seed_mse.size();
    arm.mean_psnr = p / arm.per_seed_psnr.size();
  }
  report.ebr_better_than_naive = report.arms[2].mean_mse < report.arms[0].mean_mse;
  report.ebr_not_worse_than_ddbm = report.arms[2].mean_mse <= report.arms[1].mean_mse;
  for (std::size_t s = 0; s < config.seeds.size(); ++s)
    report.per_seed_ebr_better_than_naive.push_back(report.arms[2].per_seed_mse[s] <
                                                    report.arms[0].per_seed_mse[s]);
  return report;
}

}  // namespace bp
