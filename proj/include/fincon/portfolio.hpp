#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fincon/agents.hpp"
#include "fincon/data_ingest.hpp"

namespace fincon {

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  static Matrix identity(std::size_t n);

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// T x N daily log returns.
struct ReturnPanel {
  std::vector<std::string> tickers;
  std::vector<Date> dates;
  Matrix returns;
};

/// Log returns of `universe` over the last `lookback` transitions ending at
/// `as_of` (inclusive). Uses only bars dated <= as_of.
ReturnPanel build_return_panel(const MarketData& data, std::span<const std::string> universe, Date as_of,
                               std::size_t lookback, PriceField field = PriceField::Close);

struct MVInputs {
  std::vector<double> mu;
  Matrix sigma;
  std::vector<Direction> directions;
};

inline constexpr double kDefaultShrinkage = 0.3;

/// Sigma = (1-l) S + l diag(S); mu = (1-l) mean + l * grand mean. S uses n-1.
MVInputs shrink_estimates(const ReturnPanel& panel, double lambda = kDefaultShrinkage);

struct SolverOptions {
  std::size_t max_iterations = 10000;
  double tolerance = 1e-10;
};

struct MVSolution {
  std::vector<double> weights;
  double objective = 0;
  std::size_t iterations = 0;
};

/// <w, mu> - <w, Sigma w>
double mv_objective(std::span<const double> w, std::span<const double> mu, const Matrix& sigma);

/// Maximizes the mean-variance objective over the direction boxes
/// long [0,1], short [-1,0], neutral {0}.
MVSolution solve_mean_variance(const MVInputs& inputs, const SolverOptions& options = {});

/// w * capital / price per asset; integer mode rounds toward zero.
std::vector<double> scale_to_positions(std::span<const double> weights, double capital,
                                       std::span<const double> prices, bool integer_shares = false);

struct SelectionCandidate {
  std::string ticker;
  std::size_t news_count = 0;
  std::vector<double> returns;
};

inline constexpr std::size_t kDefaultMinNews = 800;

/// Pearson correlation; 0 when either side has zero variance.
double pearson_correlation(std::span<const double> a, std::span<const double> b);

/// Drops candidates below `min_news`, then picks `count` tickers with the
/// lowest mean pairwise |correlation|. Small pools are searched exhaustively;
/// larger ones grow a set greedily from the least correlated pair. Ties go to
/// the lexicographically smaller ticker list. Result is sorted.
std::vector<std::string> select_stocks(std::span<const SelectionCandidate> candidates, std::size_t count,
                                       std::size_t min_news = kDefaultMinNews);

}  // namespace fincon
