#include "clickcode/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include "clickcode/error.hpp"
#include "clickcode/random.hpp"
#include "text_util.hpp"

namespace clickcode {

SplitPlan make_splits(std::size_t N, std::size_t K, double train_fraction, std::uint64_t seed,
                      std::span<const int> groups) {
  if (N < 2) throw ConfigError("make_splits: N must be >= 2");
  if (K < 1) throw ConfigError("make_splits: K must be >= 1");
  if (!(train_fraction > 0 && train_fraction < 1)) throw ConfigError("eval.train_fraction must lie in (0, 1)");
  if (!groups.empty() && groups.size() != N) throw ShapeError("make_splits: group labels do not match N");
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(N)));
  if (n_train == 0 || n_train >= N)
    throw ConfigError("make_splits: train_fraction " + std::to_string(train_fraction) + " leaves an empty " +
                      (n_train == 0 ? "training" : "test") + " set for N = " + std::to_string(N));

  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < N; ++i) members[groups.empty() ? 0 : groups[i]].push_back(i);

  // Largest-remainder allocation of the training budget across groups.
  std::vector<std::vector<std::size_t>*> lists;
  std::vector<std::size_t> quota;
  std::vector<double> remainder;
  std::size_t assigned = 0;
  for (auto& [g, idx] : members) {
    const double ideal = train_fraction * static_cast<double>(idx.size());
    lists.push_back(&idx);
    quota.push_back(static_cast<std::size_t>(std::floor(ideal)));
    remainder.push_back(ideal - std::floor(ideal));
    assigned += quota.back();
  }
  std::vector<std::size_t> order(lists.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b]; });
  for (std::size_t r = 0; assigned < n_train; r = (r + 1) % order.size()) {
    const auto g = order[r];
    if (quota[g] < lists[g]->size()) {
      ++quota[g];
      ++assigned;
    }
  }
  // Keep a test click for every group with at least K members.
  for (std::size_t g = 0; g < lists.size(); ++g) {
    if (lists[g]->size() < std::max<std::size_t>(K, 2) || quota[g] < lists[g]->size()) continue;
    for (std::size_t h = 0; h < lists.size(); ++h) {
      if (h != g && quota[h] + 1 < lists[h]->size()) {
        --quota[g];
        ++quota[h];
        break;
      }
    }
  }

  SplitPlan plan;
  plan.K = K;
  plan.train_fraction = train_fraction;
  plan.seed = seed;
  for (std::size_t r = 0; r < K; ++r) {
    Rng rng(derive_seed(seed, "split/" + std::to_string(r)));
    SplitRound round;
    for (std::size_t g = 0; g < lists.size(); ++g) {
      auto idx = *lists[g];
      std::shuffle(idx.begin(), idx.end(), rng);
      round.train.insert(round.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(quota[g]));
      round.test.insert(round.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(quota[g]), idx.end());
    }
    std::sort(round.train.begin(), round.train.end());
    std::sort(round.test.begin(), round.test.end());
    plan.rounds.push_back(std::move(round));
  }
  return plan;
}

std::string to_string(ArmseMode m) { return m == ArmseMode::literal ? "literal" : "normalized"; }

ArmseMode parse_armse_mode(const std::string& name) {
  if (name == "literal") return ArmseMode::literal;
  if (name == "normalized") return ArmseMode::normalized;
  throw ConfigError("unknown armse mode '" + name + "'");
}

double armse(std::span<const double> truth, std::span<const double> estimates, ArmseMode mode) {
  if (truth.size() != estimates.size()) throw ShapeError("armse: length mismatch");
  if (truth.empty()) throw ShapeError("armse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = truth[i] - estimates[i];
    s += e * e;
  }
  if (mode == ArmseMode::normalized) s /= static_cast<double>(truth.size());
  return std::sqrt(s);
}

EvalReport build_report(Target target, ArmseMode mode, std::span<const int> hydrophone_of,
                        const std::vector<RoundPredictions>& rounds) {
  EvalReport rep;
  rep.target = target;
  rep.mode = mode;
  std::map<int, Eigen::Index> column;
  for (int h : hydrophone_of) column.emplace(h, 0);
  for (auto& [h, col] : column) {
    col = static_cast<Eigen::Index>(rep.hydrophones.size());
    rep.hydrophones.push_back(h);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.per_fold = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(rounds.size()),
                                           static_cast<Eigen::Index>(rep.hydrophones.size()), nan);
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    const auto& rp = rounds[r];
    std::vector<std::vector<double>> truth(rep.hydrophones.size()), est(rep.hydrophones.size());
    for (std::size_t t = 0; t < rp.test.size(); ++t) {
      const auto col = static_cast<std::size_t>(column.at(hydrophone_of[rp.test[t]]));
      truth[col].push_back(rp.truth(static_cast<Eigen::Index>(t)));
      est[col].push_back(rp.estimate(static_cast<Eigen::Index>(t)));
    }
    for (std::size_t h = 0; h < truth.size(); ++h)
      if (!truth[h].empty())
        rep.per_fold(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(h)) = armse(truth[h], est[h], mode);
  }
  double sum = 0.0;
  std::size_t used = 0;
  for (Eigen::Index h = 0; h < rep.per_fold.cols(); ++h) {
    double s = 0.0;
    std::size_t c = 0;
    for (Eigen::Index r = 0; r < rep.per_fold.rows(); ++r)
      if (!std::isnan(rep.per_fold(r, h))) {
        s += rep.per_fold(r, h);
        ++c;
      }
    const double v = c ? s / static_cast<double>(c) : nan;
    rep.per_hydrophone.push_back(v);
    if (c) {
      sum += v;
      ++used;
    }
  }
  rep.global = used ? sum / static_cast<double>(used) : nan;
  return rep;
}

namespace {

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

Eigen::VectorXd entries_of(const Eigen::VectorXd& v, std::span<const std::size_t> idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  return out;
}

double rmse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

}  // namespace

LinearModel fit_target(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, const RegressionConfig& cfg,
                       Target target, std::uint64_t seed) {
  TrainConfig tc = cfg.train;
  if (cfg.C_grid.size() > 1 && features.rows() >= 4) {
    const auto inner = make_splits(static_cast<std::size_t>(features.rows()), 1, 0.7, seed);
    const auto& round = inner.rounds.front();
    const Eigen::MatrixXd xt = rows_of(features, round.train);
    const Eigen::VectorXd yt = entries_of(targets, round.train);
    const Eigen::MatrixXd xv = rows_of(features, round.test);
    const Eigen::VectorXd yv = entries_of(targets, round.test);
    double best = std::numeric_limits<double>::infinity();
    for (double c : cfg.C_grid) {
      TrainConfig trial = cfg.train;
      trial.C = c;
      const auto m = train(xt, yt, trial, target).model;
      const double err = rmse(predict(m, xv), yv);
      if (err < best) {
        best = err;
        tc.C = c;
      }
    }
  } else if (cfg.C_grid.size() == 1) {
    tc.C = cfg.C_grid.front();
  }
  return train(features, targets, tc, target).model;
}

namespace {

// Round r is evaluated on round_features(r); all rounds share labels and hydrophone ids.
FeatureEvaluation evaluate_rounds(const std::function<const Eigen::MatrixXd&(std::size_t)>& round_features,
                                  std::span<const Label> labels, std::span<const int> hydrophone_of,
                                  const SplitPlan& splits, const RegressionConfig& cfg, std::uint64_t seed) {
  const auto n = labels.size();
  if (hydrophone_of.size() != n) throw ShapeError("evaluate: labels and hydrophone ids differ in length");
  FeatureEvaluation out;
  for (Target target : {Target::range, Target::azimuth}) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      y(static_cast<Eigen::Index>(i)) = target == Target::range ? labels[i].range_m : labels[i].azimuth_rad;
    std::vector<RoundPredictions> preds, base;
    TargetResult& tr = target == Target::range ? out.range : out.azimuth;
    for (std::size_t r = 0; r < splits.rounds.size(); ++r) {
      const Eigen::MatrixXd& features = round_features(r);
      if (static_cast<std::size_t>(features.rows()) != n)
        throw ShapeError("evaluate: feature rows do not match label count");
      out.feature_dim = static_cast<std::size_t>(features.cols());
      const auto& round = splits.rounds[r];
      const Eigen::MatrixXd xt = rows_of(features, round.train);
      const Eigen::VectorXd yt = entries_of(y, round.train);
      const auto model =
          fit_target(xt, yt, cfg, target, derive_seed(seed, "select/" + to_string(target) + "/" + std::to_string(r)));
      RoundPredictions p;
      p.test = round.test;
      p.truth = entries_of(y, round.test);
      p.estimate = predict(model, rows_of(features, round.test));
      RoundPredictions b = p;
      b.estimate = Eigen::VectorXd::Constant(p.truth.size(), yt.mean());
      preds.push_back(std::move(p));
      base.push_back(std::move(b));
      tr.models.push_back(model);
    }
    tr.normalized = build_report(target, ArmseMode::normalized, hydrophone_of, preds);
    tr.literal = build_report(target, ArmseMode::literal, hydrophone_of, preds);
    tr.baseline_normalized = build_report(target, ArmseMode::normalized, hydrophone_of, base);
    tr.baseline_literal = build_report(target, ArmseMode::literal, hydrophone_of, base);
  }
  return out;
}

}  // namespace

FeatureEvaluation evaluate_features(const Eigen::MatrixXd& features, std::span<const Label> labels,
                                    std::span<const int> hydrophone_of, const SplitPlan& splits,
                                    const RegressionConfig& cfg, std::uint64_t seed) {
  return evaluate_rounds([&](std::size_t) -> const Eigen::MatrixXd& { return features; }, labels, hydrophone_of,
                         splits, cfg, seed);
}

std::vector<ExperimentResult> run_experiment_multi(const ClickDataset& data, const ExperimentConfig& cfg,
                                                   const SplitPlan& splits, std::span<const double> mus) {
  cfg.features.validate(data.n());
  for (double mu : mus)
    if (mu == 0.0) throw ConfigError("pooling.mu must be nonzero");
  std::vector<Label> labels;
  std::vector<int> hyd;
  for (const auto& c : data.clicks()) {
    labels.push_back({c.range_m, c.azimuth_rad});
    hyd.push_back(c.hydrophone_id);
  }

  // features[q][r]: features of every click for exponent q under round r's coding model.
  std::vector<std::vector<Eigen::MatrixXd>> features(mus.size());
  std::vector<CodingModel> coding;
  for (std::size_t r = 0; r < splits.rounds.size(); ++r) {
    auto model = learn_coding_model(data, splits.rounds[r].train, cfg.features,
                                    derive_seed(cfg.seed, "round/" + std::to_string(r)));
    auto per_mu = encode_dataset(data, model, cfg.features, mus);
    for (std::size_t q = 0; q < mus.size(); ++q) features[q].push_back(std::move(per_mu[q]));
    coding.push_back(std::move(model));
  }

  std::vector<ExperimentResult> results;
  for (std::size_t q = 0; q < mus.size(); ++q) {
    ExperimentResult res;
    res.mu = mus[q];
    res.k = cfg.features.learner.k;
    res.coding_models = coding;
    res.evaluation = evaluate_rounds([&](std::size_t r) -> const Eigen::MatrixXd& { return features[q][r]; }, labels,
                                     hyd, splits, cfg.regression, derive_seed(cfg.seed, "regress"));
    results.push_back(std::move(res));
  }
  return results;
}

ExperimentResult run_experiment(const ClickDataset& data, const ExperimentConfig& cfg, const SplitPlan& splits) {
  const double mus[] = {cfg.features.mu};
  return std::move(run_experiment_multi(data, cfg, splits, mus).front());
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "mu") return SweepAxis::mu;
  if (name == "k") return SweepAxis::k;
  throw ConfigError("unknown sweep axis '" + name + "' (expected mu or k)");
}

std::string to_string(SweepAxis a) { return a == SweepAxis::mu ? "mu" : "k"; }

std::vector<SweepRow> sweep(const ClickDataset& data, const ExperimentConfig& base, SweepAxis axis,
                            std::span<const double> values, const SplitPlan& splits) {
  std::vector<SweepRow> rows;
  if (values.empty()) return rows;
  if (axis == SweepAxis::mu) {
    auto results = run_experiment_multi(data, base, splits, values);
    for (std::size_t i = 0; i < values.size(); ++i) rows.push_back({values[i], std::move(results[i])});
    return rows;
  }
  for (double v : values) {
    if (!(v >= 1) || v != std::floor(v)) throw ConfigError("sweep: k values must be positive integers");
    ExperimentConfig cfg = base;
    cfg.features.learner.k = static_cast<std::size_t>(v);
    rows.push_back({v, run_experiment(data, cfg, splits)});
  }
  return rows;
}

void write_report_csv(std::ostream& os, std::span<const std::pair<std::string, const FeatureEvaluation*>> entries,
                      std::uint64_t seed) {
  using detail::format_double;
  std::vector<int> hyd;
  if (!entries.empty()) hyd = entries.front().second->range.normalized.hydrophones;
  os << "axis_value,target,armse_mode,armse_global";
  for (int h : hyd) os << ",armse_h" << h;
  os << ",fold,seed\n";
  for (const auto& [value, ev] : entries) {
    for (const TargetResult* tr : {&ev->range, &ev->azimuth}) {
      for (const EvalReport* rep : {&tr->normalized, &tr->literal}) {
        const auto prefix = value + ',' + to_string(rep->target) + ',' + to_string(rep->mode) + ',';
        for (Eigen::Index r = 0; r < rep->per_fold.rows(); ++r) {
          double s = 0.0;
          std::size_t c = 0;
          for (Eigen::Index h = 0; h < rep->per_fold.cols(); ++h)
            if (!std::isnan(rep->per_fold(r, h))) {
              s += rep->per_fold(r, h);
              ++c;
            }
          os << prefix << format_double(c ? s / static_cast<double>(c) : std::numeric_limits<double>::quiet_NaN());
          for (Eigen::Index h = 0; h < rep->per_fold.cols(); ++h) os << ',' << format_double(rep->per_fold(r, h));
          os << ',' << r << ',' << seed << '\n';
        }
        os << prefix << format_double(rep->global);
        for (double v : rep->per_hydrophone) os << ',' << format_double(v);
        os << ",mean," << seed << '\n';
      }
    }
  }
}

void write_report_csv(const std::filesystem::path& path,
                      std::span<const std::pair<std::string, const FeatureEvaluation*>> entries, std::uint64_t seed) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  write_report_csv(os, entries, seed);
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

void write_sweep_csv(const std::filesystem::path& path, SweepAxis axis, const std::vector<SweepRow>& rows) {
  using detail::format_double;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << to_string(axis)
     << ",feature_dim,range_armse,azimuth_armse,range_armse_literal,azimuth_armse_literal,range_baseline,"
        "azimuth_baseline\n";
  for (const auto& row : rows) {
    const auto& ev = row.result.evaluation;
    os << format_double(row.value) << ',' << ev.feature_dim << ',' << format_double(ev.range.normalized.global) << ','
       << format_double(ev.azimuth.normalized.global) << ',' << format_double(ev.range.literal.global) << ','
       << format_double(ev.azimuth.literal.global) << ',' << format_double(ev.range.baseline_normalized.global) << ','
       << format_double(ev.azimuth.baseline_normalized.global) << '\n';
  }
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace clickcode
