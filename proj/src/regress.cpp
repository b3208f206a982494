#include "clickcode/regress.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "clickcode/error.hpp"

namespace clickcode {

std::string to_string(Target t) { return t == Target::range ? "range" : "azimuth"; }

Loss parse_loss(const std::string& name) {
  if (name == "logistic") return Loss::logistic;
  if (name == "squared") return Loss::squared;
  throw ConfigError("unknown loss '" + name + "' (expected logistic or squared)");
}

std::string to_string(Loss l) { return l == Loss::logistic ? "logistic" : "squared"; }

void TrainConfig::validate() const {
  if (!(C > 0)) throw ConfigError("regress.C must be > 0");
  if (!(tol > 0)) throw ConfigError("regress.tol must be > 0");
  if (max_iter < 1) throw ConfigError("regress.max_iter must be >= 1");
}

RegressionObjective::RegressionObjective(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels, double C,
                                         Loss loss)
    : x_(features), y_(labels), c_(C), loss_(loss) {
  if (features.rows() != labels.size()) throw ShapeError("RegressionObjective: feature/label count mismatch");
}

Eigen::VectorXd RegressionObjective::margins(const Eigen::VectorXd& theta) const {
  const auto d = x_.cols();
  return (x_ * theta.head(d)).array() + theta(d);
}

namespace {

// log(1 + exp(-z)) without overflow.
double log1pexp_neg(double z) { return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z)); }

// 1 / (1 + exp(z))
double sigmoid_neg(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

double RegressionObjective::value(const Eigen::VectorXd& theta) const {
  const auto d = x_.cols();
  const Eigen::VectorXd t = margins(theta);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (loss_ == Loss::squared) {
      const double r = y_(i) - t(i);
      loss += r * r;
    } else {
      loss += log1pexp_neg(y_(i) * t(i));
    }
  }
  return 0.5 * theta.head(d).squaredNorm() + c_ * loss;
}

Eigen::VectorXd RegressionObjective::gradient(const Eigen::VectorXd& theta) const {
  const auto d = x_.cols();
  const Eigen::VectorXd t = margins(theta);
  Eigen::VectorXd dl(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i)
    dl(i) = loss_ == Loss::squared ? -2.0 * (y_(i) - t(i)) : -y_(i) * sigmoid_neg(y_(i) * t(i));
  Eigen::VectorXd g(d + 1);
  g.head(d) = theta.head(d) + c_ * (x_.transpose() * dl);
  g(d) = c_ * dl.sum();
  return g;
}

Eigen::VectorXd RegressionObjective::curvature(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd t = margins(theta);
  Eigen::VectorXd h(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    if (loss_ == Loss::squared) {
      h(i) = 2.0;
    } else {
      const double z = y_(i) * t(i);
      const double s = sigmoid_neg(z);
      h(i) = y_(i) * y_(i) * s * (1.0 - s);
    }
  }
  return h;
}

Eigen::VectorXd RegressionObjective::hessian_times(const Eigen::VectorXd& curv, const Eigen::VectorXd& v) const {
  const auto d = x_.cols();
  const Eigen::VectorXd q = (x_ * v.head(d)).array() + v(d);
  const Eigen::VectorXd r = c_ * curv.cwiseProduct(q);
  Eigen::VectorXd out(d + 1);
  out.head(d) = v.head(d) + x_.transpose() * r;
  out(d) = r.sum();
  return out;
}

Eigen::VectorXd RegressionObjective::hessian_diagonal(const Eigen::VectorXd& curv) const {
  const auto d = x_.cols();
  Eigen::VectorXd diag(d + 1);
  diag.head(d) = (c_ * (x_.array().square().colwise() * curv.array()).colwise().sum()).transpose().array() + 1.0;
  diag(d) = std::max(c_ * curv.sum(), 1e-12);
  return diag;
}

namespace {

// Preconditioned CG on H s = -g, stopped at ||r|| <= eta ||g||.
Eigen::VectorXd solve_newton_step(const RegressionObjective& obj, const Eigen::VectorXd& curv, const Eigen::VectorXd& g,
                                  double eta) {
  const Eigen::VectorXd minv = obj.hessian_diagonal(curv).cwiseInverse();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(g.size());
  Eigen::VectorXd r = -g;
  Eigen::VectorXd zv = minv.cwiseProduct(r);
  Eigen::VectorXd p = zv;
  double rz = r.dot(zv);
  const double stop = eta * g.norm();
  const auto max_cg = 2 * g.size() + 10;
  for (Eigen::Index it = 0; it < max_cg && r.norm() > stop; ++it) {
    const Eigen::VectorXd hp = obj.hessian_times(curv, p);
    const double php = p.dot(hp);
    if (!(php > 0)) break;
    const double step = rz / php;
    s += step * p;
    r -= step * hp;
    zv = minv.cwiseProduct(r);
    const double rz_new = r.dot(zv);
    p = zv + (rz_new / rz) * p;
    rz = rz_new;
  }
  return s;
}

}  // namespace

TrainResult train(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets, const TrainConfig& cfg,
                  Target target) {
  cfg.validate();
  if (features.rows() != targets.size())
    throw ShapeError("train: " + std::to_string(features.rows()) + " feature rows but " +
                     std::to_string(targets.size()) + " targets");
  if (features.rows() < 2) throw ConfigError("train: at least 2 training samples are required");
  if (!features.allFinite() || !targets.allFinite()) throw NumericError("train: non-finite input");

  TrainResult res;
  LinearModel& model = res.model;
  model.target = target;
  model.C = cfg.C;
  if (cfg.normalize_targets) {
    const double lo = targets.minCoeff();
    const double hi = targets.maxCoeff();
    model.label_scale.offset = 0.5 * (hi + lo);
    model.label_scale.scale = hi > lo ? 0.5 * (hi - lo) : 1.0;
  }
  const Eigen::VectorXd labels =
      (targets.array() - model.label_scale.offset) / model.label_scale.scale;

  const RegressionObjective obj(features, labels, cfg.C, cfg.loss);
  const auto d = features.cols();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  double f = obj.value(theta);
  Eigen::VectorXd g = obj.gradient(theta);
  const double g0 = std::max(1.0, g.norm());
  res.objective_trace.push_back(f);

  for (int it = 0; it < cfg.max_iter; ++it) {
    const double gnorm = g.norm();
    if (gnorm <= cfg.tol * g0) {
      res.converged = true;
      break;
    }
    const Eigen::VectorXd curv = obj.curvature(theta);
    const double eta = std::min(0.5, std::sqrt(gnorm / g0));
    Eigen::VectorXd step = solve_newton_step(obj, curv, g, eta);
    double slope = g.dot(step);
    if (!(slope < 0)) {
      step = -g;
      slope = -gnorm * gnorm;
    }
    double t = 1.0;
    double f_new = obj.value(theta + step);
    while (f_new > f + 1e-4 * t * slope && t > 1e-20) {
      t *= 0.5;
      f_new = obj.value(theta + t * step);
    }
    if (!(f_new <= f)) break;  // no descent possible at floating-point resolution
    theta += t * step;
    f = f_new;
    g = obj.gradient(theta);
    res.objective_trace.push_back(f);
    res.iterations = it + 1;
  }
  if (!res.converged && g.norm() <= cfg.tol * g0) res.converged = true;
  res.gradient_norm = g.norm();
  model.weights = theta.head(d);
  model.bias = theta(d);
  return res;
}

double predict(const LinearModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.weights.size())
    throw ShapeError("predict: feature dimension " + std::to_string(x.size()) + " does not match model " +
                     std::to_string(model.weights.size()));
  return model.label_scale.scale * (model.weights.dot(x) + model.bias) + model.label_scale.offset;
}

Eigen::VectorXd predict(const LinearModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.weights.size())
    throw ShapeError("predict: feature dimension " + std::to_string(features.cols()) + " does not match model " +
                     std::to_string(model.weights.size()));
  return model.label_scale.scale * ((features * model.weights).array() + model.bias) + model.label_scale.offset;
}

namespace {
constexpr std::string_view kModelMagic = "CCM1";
}

void save_model(const LinearModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto os = detail::open_out(path.string());
  detail::write_magic(os, kModelMagic);
  detail::write_u32(os, model.target == Target::range ? 0u : 1u);
  detail::write_u32(os, static_cast<std::uint32_t>(model.weights.size()));
  detail::write_f64s(os, model.weights.data(), static_cast<std::size_t>(model.weights.size()));
  detail::write_f64(os, model.bias);
  detail::write_f64(os, model.label_scale.offset);
  detail::write_f64(os, model.label_scale.scale);
  detail::finish_write(os, path.string());
}

LinearModel load_model(const std::filesystem::path& path) {
  auto is = detail::open_in(path.string());
  const std::string what = path.string();
  detail::expect_magic(is, kModelMagic, what);
  LinearModel m;
  const auto tag = detail::read_u32(is, what);
  if (tag > 1) throw FormatError(what + ": unknown target tag " + std::to_string(tag));
  m.target = tag == 0 ? Target::range : Target::azimuth;
  const auto d = detail::read_u32(is, what);
  m.weights.resize(d);
  detail::read_f64s(is, m.weights.data(), d, what);
  m.bias = detail::read_f64(is, what);
  m.label_scale.offset = detail::read_f64(is, what);
  m.label_scale.scale = detail::read_f64(is, what);
  if (!(m.label_scale.scale > 0)) throw FormatError(what + ": label scale must be > 0");
  m.C = 0.0;  // not persisted
  return m;
}

}  // namespace clickcode
