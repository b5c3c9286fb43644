#include "odm/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

namespace odm {

namespace {

constexpr double kMaxJitter = 1e-2;

Eigen::MatrixXd gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double lengthscale, double signal_variance) {
  // ||a_i - b_j||^2 = |a_i|^2 + |b_j|^2 - 2 a_i.b_j
  const Eigen::VectorXd an = a.rowwise().squaredNorm();
  const Eigen::VectorXd bn = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = (-2.0 * a * b.transpose()).colwise() + an;
  d2.rowwise() += bn.transpose();
  d2 = d2.cwiseMax(0.0);
  return signal_variance * (-d2 / (2.0 * lengthscale * lengthscale)).array().exp().matrix();
}

}  // namespace

DirichletTargets dirichlet_transform(ActionId label, int m, double alpha_eps) {
  if (m < 1 || label.index < 0 || label.index >= m) throw std::out_of_range("label out of range for dirichlet transform");
  if (!(alpha_eps > 0.0)) throw std::invalid_argument("alpha_eps must be positive");
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(m, alpha_eps);
  alpha(label.index) += 1.0;
  DirichletTargets out;
  out.noise_vars = (alpha.cwiseInverse().array() + 1.0).log().matrix();
  out.targets = alpha.array().log().matrix() - 0.5 * out.noise_vars;
  return out;
}

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                  double lengthscale, double signal_variance) {
  return signal_variance * std::exp(-(a - b).squaredNorm() / (2.0 * lengthscale * lengthscale));
}

double median_heuristic(const Eigen::Ref<const Eigen::MatrixXd>& points) {
  const Eigen::Index n = points.rows();
  if (n < 2) return 1.0;
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) dist.push_back((points.row(i) - points.row(j)).norm());
  const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  double med = *mid;
  if (dist.size() % 2 == 0) med = 0.5 * (med + *std::max_element(dist.begin(), mid));
  return med > 0.0 ? med : 1.0;
}

void ModelState::factorize() {
  const Eigen::Index n = inputs_.rows();
  const Eigen::MatrixXd k = gram(inputs_, inputs_, lengthscale_, settings_.signal_variance);
  chol_.assign(static_cast<std::size_t>(m_), Eigen::MatrixXd());
  for (double jitter = settings_.jitter;; jitter *= 100.0) {
    bool ok = true;
    for (int c = 0; c < m_ && ok; ++c) {
      Eigen::MatrixXd a = k;
      a.diagonal().array() += noise_.col(c).array() + jitter;
      Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() != Eigen::Success) {
        ok = false;
      } else {
        chol_[static_cast<std::size_t>(c)] = llt.matrixL();
      }
    }
    if (ok) {
      jitter_ = jitter;
      return;
    }
    if (jitter * 100.0 > kMaxJitter * (1.0 + 1e-9))
      throw FactorizationError("kernel matrix factorization failed for " + std::to_string(n) + " points", jitter);
  }
}

void ModelState::solve_weights() {
  prior_mean_ = targets_.colwise().mean();
  weights_.resize(targets_.rows(), m_);
  for (int c = 0; c < m_; ++c) {
    const auto& l = chol_[static_cast<std::size_t>(c)];
    Eigen::VectorXd r = targets_.col(c).array() - prior_mean_(c);
    l.triangularView<Eigen::Lower>().solveInPlace(r);
    l.triangularView<Eigen::Lower>().transpose().solveInPlace(r);
    weights_.col(c) = r;
  }
}

bool ModelState::try_extend(const LabeledExample& e) {
  const Eigen::Index n = inputs_.rows();
  const Eigen::MatrixXd xrow = e.x.transpose();
  const Eigen::VectorXd kx = gram(inputs_, xrow, lengthscale_, settings_.signal_variance).col(0);
  const double kxx = settings_.signal_variance;
  const DirichletTargets dt = dirichlet_transform(e.y, m_, settings_.alpha_eps);

  std::vector<Eigen::MatrixXd> extended(static_cast<std::size_t>(m_));
  for (int c = 0; c < m_; ++c) {
    const auto& l = chol_[static_cast<std::size_t>(c)];
    Eigen::VectorXd row = l.triangularView<Eigen::Lower>().solve(kx);
    const double d2 = kxx + dt.noise_vars(c) + jitter_ - row.squaredNorm();
    if (!(d2 > 0.0)) return false;
    Eigen::MatrixXd ln = Eigen::MatrixXd::Zero(n + 1, n + 1);
    ln.topLeftCorner(n, n) = l;
    ln.block(n, 0, 1, n) = row.transpose();
    ln(n, n) = std::sqrt(d2);
    extended[static_cast<std::size_t>(c)] = std::move(ln);
  }
  chol_ = std::move(extended);
  inputs_.conservativeResize(n + 1, Eigen::NoChange);
  inputs_.row(n) = e.x.transpose();
  labels_.push_back(e.y);
  targets_.conservativeResize(n + 1, Eigen::NoChange);
  targets_.row(n) = dt.targets.transpose();
  noise_.conservativeResize(n + 1, Eigen::NoChange);
  noise_.row(n) = dt.noise_vars.transpose();
  solve_weights();
  return true;
}

ModelState fit(const Dataset& examples, int m, const KernelSettings& settings) {
  if (m < 2) throw std::invalid_argument("model needs at least two classes");
  if (examples.empty()) throw MissingClassError("missing class: empty training set");
  std::vector<bool> seen(static_cast<std::size_t>(m), false);
  const auto d = examples.front().x.size();
  for (const auto& e : examples) {
    if (e.y.index < 0 || e.y.index >= m) throw std::out_of_range("training label out of range");
    if (e.x.size() != d) throw std::invalid_argument("inconsistent context dimension");
    seen[static_cast<std::size_t>(e.y.index)] = true;
  }
  for (int c = 0; c < m; ++c)
    if (!seen[static_cast<std::size_t>(c)]) throw MissingClassError("missing class " + std::to_string(c));
  if (settings.lengthscale && !(*settings.lengthscale > 0.0)) throw std::invalid_argument("lengthscale must be positive");
  if (!(settings.signal_variance > 0.0) || !(settings.jitter > 0.0))
    throw std::invalid_argument("signal variance and jitter must be positive");

  ModelState s;
  s.m_ = m;
  s.settings_ = settings;
  const auto n = static_cast<Eigen::Index>(examples.size());
  s.inputs_.resize(n, d);
  s.targets_.resize(n, m);
  s.noise_.resize(n, m);
  s.labels_.reserve(examples.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = examples[static_cast<std::size_t>(i)];
    s.inputs_.row(i) = e.x.transpose();
    s.labels_.push_back(e.y);
    const DirichletTargets dt = dirichlet_transform(e.y, m, settings.alpha_eps);
    s.targets_.row(i) = dt.targets.transpose();
    s.noise_.row(i) = dt.noise_vars.transpose();
  }
  s.lengthscale_ = settings.lengthscale.value_or(median_heuristic(s.inputs_));
  s.factorize();
  s.solve_weights();
  return s;
}

ModelState update(const ModelState& state, const LabeledExample& example) {
  if (example.x.size() != state.inputs_.cols()) throw std::invalid_argument("inconsistent context dimension");
  if (state.settings_.lengthscale) {
    ModelState next = state;
    if (next.try_extend(example)) return next;
  }
  Dataset all;
  all.reserve(state.labels_.size() + 1);
  for (Eigen::Index i = 0; i < state.inputs_.rows(); ++i)
    all.push_back({state.inputs_.row(i).transpose(), state.labels_[static_cast<std::size_t>(i)]});
  all.push_back(example);
  return fit(all, state.m_, state.settings_);
}

LatentPosterior ModelState::latent(const Eigen::Ref<const Eigen::MatrixXd>& queries) const {
  const Eigen::MatrixXd kq = gram(inputs_, queries, lengthscale_, settings_.signal_variance);  // N x q
  LatentPosterior out;
  out.mean = (kq.transpose() * weights_).rowwise() + prior_mean_;
  out.var.resize(queries.rows(), m_);
  for (int c = 0; c < m_; ++c) {
    const Eigen::MatrixXd v = chol_[static_cast<std::size_t>(c)].triangularView<Eigen::Lower>().solve(kq);
    out.var.col(c) = (settings_.signal_variance - v.colwise().squaredNorm().array()).matrix().transpose();
  }
  for (Eigen::Index i = 0; i < out.var.size(); ++i) {
    if (out.var.data()[i] < 0.0) {
      out.var.data()[i] = 0.0;
      ++out.clamped;
    }
  }
  return out;
}

PredictiveSampleSet sample_from_latent(const Eigen::Ref<const Eigen::VectorXd>& mean,
                                       const Eigen::Ref<const Eigen::VectorXd>& var, int s, Rng& rng) {
  if (s < 1) throw std::invalid_argument("need at least one posterior sample");
  const auto m = mean.size();
  const Eigen::ArrayXd sd = var.array().max(0.0).sqrt();
  std::normal_distribution<double> gauss(0.0, 1.0);
  PredictiveSampleSet out;
  out.probs.resize(s, m);
  Eigen::ArrayXd f(m);
  for (int i = 0; i < s; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) f(k) = mean(k) + sd(k) * gauss(rng);
    const Eigen::ArrayXd e = (f - f.maxCoeff()).exp();
    out.probs.row(i) = (e / e.sum()).matrix().transpose();
  }
  return out;
}

PredictiveSampleSet sample_predictives(const ModelState& state, const ContextVector& x, int s, Rng& rng) {
  const LatentPosterior lp = state.latent(x.transpose());
  PredictiveSampleSet out = sample_from_latent(lp.mean.row(0).transpose(), lp.var.row(0).transpose(), s, rng);
  out.clamped_variances = lp.clamped;
  return out;
}

Eigen::VectorXd predict_marginal(const ModelState& state, const ContextVector& x, int s, Rng& rng) {
  return sample_predictives(state, x, s, rng).mean();
}

Eigen::MatrixXd predict_marginal_batch(const ModelState& state, const Eigen::Ref<const Eigen::MatrixXd>& queries, int s,
                                       Rng& rng) {
  const LatentPosterior lp = state.latent(queries);
  Eigen::MatrixXd out(queries.rows(), state.num_classes());
  for (Eigen::Index i = 0; i < queries.rows(); ++i)
    out.row(i) = sample_from_latent(lp.mean.row(i).transpose(), lp.var.row(i).transpose(), s, rng).mean().transpose();
  return out;
}

void write_snapshot(std::ostream& out, const ModelState& state) {
  const Eigen::IOFormat fmt(Eigen::FullPrecision, Eigen::DontAlignCols, " ", "\n");
  out << "odm-model-snapshot v1\n";
  out << "classes " << state.m_ << "\n";
  out << "points " << state.inputs_.rows() << " dim " << state.inputs_.cols() << "\n";
  out.precision(17);
  out << "lengthscale " << state.lengthscale_ << " signal_variance " << state.settings_.signal_variance << " jitter "
      << state.jitter_ << " alpha_eps " << state.settings_.alpha_eps << "\n";
  out << "prior_mean\n" << state.prior_mean_.format(fmt) << "\n";
  out << "inputs\n" << state.inputs_.format(fmt) << "\n";
  out << "labels\n";
  for (std::size_t i = 0; i < state.labels_.size(); ++i) out << (i ? " " : "") << state.labels_[i].index;
  out << "\nweights\n" << state.weights_.format(fmt) << "\n";
}

}  // namespace odm
