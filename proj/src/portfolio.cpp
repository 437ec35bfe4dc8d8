#include "fincon/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "fincon/error.hpp"

namespace fincon {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr std::size_t kExhaustiveSubsetLimit = 200000;

MatrixXd to_eigen(const Matrix& m) {
  MatrixXd out(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return out;
}

double objective(const VectorXd& w, const VectorXd& mu, const MatrixXd& sigma) { return w.dot(mu) - w.dot(sigma * w); }

struct Boxes {
  VectorXd lo;
  VectorXd hi;
};

VectorXd project(const VectorXd& w, const Boxes& b) { return w.cwiseMax(b.lo).cwiseMin(b.hi); }

double kkt_residual(const VectorXd& w, const VectorXd& mu, const MatrixXd& sigma, const Boxes& b) {
  const VectorXd g = mu - 2.0 * sigma * w;
  double worst = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (b.lo[i] == b.hi[i]) continue;
    double r = std::abs(g[i]);
    if (w[i] <= b.lo[i]) r = std::max(0.0, g[i]);
    else if (w[i] >= b.hi[i]) r = std::max(0.0, -g[i]);
    worst = std::max(worst, r);
  }
  return worst;
}

// Primal active-set refinement started from a feasible point.
bool polish(VectorXd& w, const VectorXd& mu, const MatrixXd& sigma, const Boxes& b) {
  const Eigen::Index n = w.size();
  std::vector<int> active(static_cast<std::size_t>(n), 0);  // -1 lower, +1 upper, 2 fixed
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& a = active[static_cast<std::size_t>(i)];
    if (b.lo[i] == b.hi[i]) {
      a = 2;
      w[i] = b.lo[i];
    } else if (w[i] - b.lo[i] <= 1e-9) {
      a = -1;
      w[i] = b.lo[i];
    } else if (b.hi[i] - w[i] <= 1e-9) {
      a = 1;
      w[i] = b.hi[i];
    }
  }
  for (int iter = 0; iter < 8 * static_cast<int>(n) + 16; ++iter) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i)
      if (active[static_cast<std::size_t>(i)] == 0) free.push_back(i);
    VectorXd candidate = w;
    if (!free.empty()) {
      const auto f = static_cast<Eigen::Index>(free.size());
      MatrixXd h(f, f);
      VectorXd rhs(f);
      for (Eigen::Index r = 0; r < f; ++r) {
        double fixed = 0;
        for (Eigen::Index j = 0; j < n; ++j)
          if (active[static_cast<std::size_t>(j)] != 0) fixed += sigma(free[r], j) * w[j];
        rhs[r] = mu[free[r]] - 2.0 * fixed;
        for (Eigen::Index c = 0; c < f; ++c) h(r, c) = 2.0 * sigma(free[r], free[c]);
      }
      const VectorXd x = h.completeOrthogonalDecomposition().solve(rhs);
      if ((h * x - rhs).norm() > 1e-9 * std::max(1.0, rhs.norm())) return false;
      for (Eigen::Index r = 0; r < f; ++r) candidate[free[r]] = x[r];
    }
    double step = 1.0;
    Eigen::Index blocking = -1;
    int blocking_side = 0;
    for (auto i : free) {
      const double d = candidate[i] - w[i];
      if (candidate[i] > b.hi[i] && d > 0) {
        const double t = (b.hi[i] - w[i]) / d;
        if (t < step) step = t, blocking = i, blocking_side = 1;
      } else if (candidate[i] < b.lo[i] && d < 0) {
        const double t = (b.lo[i] - w[i]) / d;
        if (t < step) step = t, blocking = i, blocking_side = -1;
      }
    }
    if (blocking >= 0) {
      w = project(w + step * (candidate - w), b);
      w[blocking] = blocking_side > 0 ? b.hi[blocking] : b.lo[blocking];
      active[static_cast<std::size_t>(blocking)] = blocking_side;
      continue;
    }
    w = project(candidate, b);
    const VectorXd g = mu - 2.0 * sigma * w;
    Eigen::Index release = -1;
    double worst = 1e-13;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int a = active[static_cast<std::size_t>(i)];
      const double v = a == -1 ? g[i] : a == 1 ? -g[i] : 0.0;
      if (v > worst) worst = v, release = i;
    }
    if (release < 0) return true;
    active[static_cast<std::size_t>(release)] = 0;
  }
  return false;
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ReturnPanel build_return_panel(const MarketData& data, std::span<const std::string> universe, Date as_of,
                               std::size_t lookback, PriceField field) {
  ReturnPanel panel;
  panel.tickers.assign(universe.begin(), universe.end());
  std::vector<const PriceSeries*> series;
  for (const auto& t : universe) series.push_back(&data.series(t));
  const auto& dates = data.calendar().dates();
  auto end = std::upper_bound(dates.begin(), dates.end(), as_of);
  std::vector<std::pair<Date, std::vector<double>>> rows;
  for (auto it = end; it != dates.begin() && std::prev(it) != dates.begin() && rows.size() < lookback; --it) {
    const Date cur = *std::prev(it);
    const Date prev = *std::prev(it, 2);
    std::vector<double> row;
    for (const auto* s : series) {
      auto i = s->index_of(cur);
      auto j = s->index_of(prev);
      if (!i || !j) break;
      row.push_back(log_return(s->price(*j, field), s->price(*i, field)));
    }
    if (row.size() == series.size()) rows.emplace_back(cur, std::move(row));
  }
  std::reverse(rows.begin(), rows.end());
  panel.returns = Matrix(rows.size(), universe.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    panel.dates.push_back(rows[r].first);
    for (std::size_t c = 0; c < universe.size(); ++c) panel.returns(r, c) = rows[r].second[c];
  }
  return panel;
}

MVInputs shrink_estimates(const ReturnPanel& panel, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) raise(ErrorCode::InvalidArgument, "shrinkage lambda must lie in [0, 1]");
  const std::size_t t = panel.returns.rows;
  const std::size_t n = panel.returns.cols;
  if (t < 2) raise(ErrorCode::InsufficientSamples, "need at least 2 return rows, got " + std::to_string(t));
  if (n == 0) raise(ErrorCode::InvalidArgument, "empty return panel");
  for (double x : panel.returns.data)
    if (!std::isfinite(x)) raise(ErrorCode::InvalidArgument, "non-finite return in panel");

  std::vector<double> mean(n, 0.0);
  for (std::size_t r = 0; r < t; ++r)
    for (std::size_t c = 0; c < n; ++c) mean[c] += panel.returns(r, c);
  for (auto& m : mean) m /= static_cast<double>(t);

  MVInputs out;
  out.sigma = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0;
      for (std::size_t r = 0; r < t; ++r) s += (panel.returns(r, i) - mean[i]) * (panel.returns(r, j) - mean[j]);
      s /= static_cast<double>(t - 1);
      const double v = i == j ? s : (1.0 - lambda) * s;
      out.sigma(i, j) = v;
      out.sigma(j, i) = v;
    }
  }
  const double grand = std::accumulate(mean.begin(), mean.end(), 0.0) / static_cast<double>(n);
  out.mu.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.mu[i] = (1.0 - lambda) * mean[i] + lambda * grand;
  out.directions.assign(n, Direction::Neutral);
  return out;
}

double mv_objective(std::span<const double> w, std::span<const double> mu, const Matrix& sigma) {
  if (w.size() != mu.size() || sigma.rows != w.size() || sigma.cols != w.size())
    raise(ErrorCode::DimensionMismatch, "objective inputs disagree in size");
  double lin = 0;
  double quad = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    lin += w[i] * mu[i];
    for (std::size_t j = 0; j < w.size(); ++j) quad += w[i] * sigma(i, j) * w[j];
  }
  return lin - quad;
}

MVSolution solve_mean_variance(const MVInputs& inputs, const SolverOptions& options) {
  const std::size_t n = inputs.mu.size();
  if (inputs.sigma.rows != n || inputs.sigma.cols != n || inputs.directions.size() != n)
    raise(ErrorCode::DimensionMismatch, "mu, sigma and directions disagree in size");
  for (double x : inputs.mu)
    if (!std::isfinite(x)) raise(ErrorCode::InvalidArgument, "non-finite expected return");
  for (double x : inputs.sigma.data)
    if (!std::isfinite(x)) raise(ErrorCode::InvalidArgument, "non-finite covariance entry");
  MVSolution sol;
  if (n == 0) return sol;

  const MatrixXd sigma = to_eigen(inputs.sigma);
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    raise(ErrorCode::NonPSDMatrix, "covariance matrix is not symmetric");
  const double min_eig = Eigen::SelfAdjointEigenSolver<MatrixXd>(sigma, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  if (min_eig < -1e-10 * scale)
    raise(ErrorCode::NonPSDMatrix, "covariance matrix has eigenvalue " + std::to_string(min_eig));

  const VectorXd mu = Eigen::Map<const VectorXd>(inputs.mu.data(), static_cast<Eigen::Index>(n));
  Boxes b{VectorXd::Zero(static_cast<Eigen::Index>(n)), VectorXd::Zero(static_cast<Eigen::Index>(n))};
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (inputs.directions[i] == Direction::Long) b.hi[k] = 1.0;
    if (inputs.directions[i] == Direction::Short) b.lo[k] = -1.0;
  }

  double bound = 0;
  for (Eigen::Index i = 0; i < sigma.rows(); ++i) bound = std::max(bound, sigma.row(i).cwiseAbs().sum());
  const double step = bound > 0 ? 1.0 / (2.0 * bound) : 1.0;

  VectorXd w = VectorXd::Zero(static_cast<Eigen::Index>(n));
  double obj = objective(w, mu, sigma);
  std::size_t it = 0;
  while (it < options.max_iterations) {
    ++it;
    const VectorXd next = project(w + step * (mu - 2.0 * sigma * w), b);
    const double next_obj = objective(next, mu, sigma);
    const double change = std::abs(next_obj - obj);
    w = next;
    obj = next_obj;
    if (change < options.tolerance) break;
  }

  VectorXd refined = w;
  if (polish(refined, mu, sigma, b)) {
    const double refined_obj = objective(refined, mu, sigma);
    if (refined_obj >= obj - 1e-14 * std::max(1.0, std::abs(obj))) {
      w = refined;
      obj = refined_obj;
    }
  }
  const double residual = kkt_residual(w, mu, sigma, b);
  if (residual > 1e-6 * std::max(1.0, mu.cwiseAbs().maxCoeff()))
    raise(ErrorCode::SolverNonConvergence, "KKT residual " + std::to_string(residual) + " after " +
                                               std::to_string(it) + " iterations");

  sol.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = w[static_cast<Eigen::Index>(i)];
    sol.weights[i] = v == 0.0 ? 0.0 : v;
  }
  sol.objective = mv_objective(sol.weights, inputs.mu, inputs.sigma);
  sol.iterations = it;
  return sol;
}

std::vector<double> scale_to_positions(std::span<const double> weights, double capital, std::span<const double> prices,
                                       bool integer_shares) {
  if (weights.size() != prices.size()) raise(ErrorCode::DimensionMismatch, "weights and prices disagree in size");
  if (!(capital > 0)) raise(ErrorCode::InvalidArgument, "capital must be positive");
  std::vector<double> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(prices[i] > 0)) raise(ErrorCode::NonPositivePrice, "price at position " + std::to_string(i) + " is not positive");
    double v = weights[i] * capital / prices[i];
    if (integer_shares) v = std::trunc(v);
    out[i] = v == 0.0 ? 0.0 : v;
  }
  return out;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) raise(ErrorCode::DimensionMismatch, "return histories differ in length");
  if (a.size() < 2) return 0.0;
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<std::string> select_stocks(std::span<const SelectionCandidate> candidates, std::size_t count,
                                       std::size_t min_news) {
  if (count == 0) raise(ErrorCode::InvalidArgument, "selection count must be positive");
  std::vector<const SelectionCandidate*> pool;
  for (const auto& c : candidates)
    if (c.news_count >= min_news) pool.push_back(&c);
  if (pool.size() < count)
    raise(ErrorCode::InsufficientCandidates, std::to_string(pool.size()) + " candidates pass the news filter, need " +
                                                 std::to_string(count));
  std::sort(pool.begin(), pool.end(), [](auto* x, auto* y) { return x->ticker < y->ticker; });
  const std::size_t m = pool.size();
  std::vector<std::vector<double>> corr(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      corr[i][j] = corr[j][i] = std::abs(pearson_correlation(pool[i]->returns, pool[j]->returns));

  auto names = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(pool[i]->ticker);
    std::sort(out.begin(), out.end());
    return out;
  };

  if (count == 1) {
    std::size_t best = 0;
    double best_score = 0;
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < m; ++j) s += corr[i][j];
      s = m > 1 ? s / static_cast<double>(m - 1) : 0.0;
      if (i == 0 || s < best_score) best = i, best_score = s;
    }
    return {pool[best]->ticker};
  }

  auto mean_corr = [&](const std::vector<std::size_t>& idx) {
    double s = 0;
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b) s += corr[idx[a]][idx[b]];
    return s / static_cast<double>(idx.size() * (idx.size() - 1) / 2);
  };

  // Binomial coefficient with early cut-off.
  double subsets = 1;
  for (std::size_t i = 0; i < count; ++i) subsets = subsets * static_cast<double>(m - i) / static_cast<double>(i + 1);

  if (subsets <= static_cast<double>(kExhaustiveSubsetLimit)) {
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<std::size_t> best = idx;
    double best_score = mean_corr(idx);
    while (true) {
      std::size_t k = count;
      while (k > 0 && idx[k - 1] == m - count + k - 1) --k;
      if (k == 0) break;
      ++idx[k - 1];
      for (std::size_t j = k; j < count; ++j) idx[j] = idx[j - 1] + 1;
      // Lexicographic enumeration over sorted tickers keeps the first best on ties.
      const double s = mean_corr(idx);
      if (s < best_score) best = idx, best_score = s;
    }
    return names(best);
  }

  std::vector<std::size_t> chosen;
  double best_pair = 2.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (corr[i][j] < best_pair) best_pair = corr[i][j], chosen = {i, j};
  std::vector<bool> used(m, false);
  for (auto i : chosen) used[i] = true;
  while (chosen.size() < count) {
    std::size_t best = m;
    double best_score = 0;
    for (std::size_t c = 0; c < m; ++c) {
      if (used[c]) continue;
      double s = 0;
      for (auto i : chosen) s += corr[c][i];
      s /= static_cast<double>(chosen.size());
      if (best == m || s < best_score) best = c, best_score = s;
    }
    used[best] = true;
    chosen.push_back(best);
  }
  return names(chosen);
}

}  // namespace fincon
