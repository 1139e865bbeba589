#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgmvp/rng.hpp"

namespace dgmvp {

struct MissingTickerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct RaggedDatesError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PriceParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Aligned daily adjusted-close series for one asset.
struct PriceSeries {
  std::string ticker;
  std::vector<std::string> dates;
  std::vector<double> prices;
};

struct CovarianceMatrix {
  std::vector<std::string> tickers;
  Eigen::MatrixXd sigma;

  int dim() const { return static_cast<int>(sigma.rows()); }

  bool is_symmetric(double tol = 0.0) const {
    for (int i = 0; i < dim(); ++i)
      for (int j = i + 1; j < dim(); ++j)
        if (std::abs(sigma(i, j) - sigma(j, i)) > tol) return false;
    return true;
  }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  /// Symmetry as stored plus PSD within tolerance on the smallest eigenvalue.
  bool is_valid() const {
    if (!is_symmetric()) return false;
    for (int i = 0; i < dim(); ++i)
      if (sigma(i, i) < 0.0) return false;
    return min_eigenvalue() >= -1e-9 * sigma.trace();
  }
};

inline nlohmann::json covariance_to_json(const CovarianceMatrix& cov) {
  nlohmann::json j;
  j["tickers"] = cov.tickers;
  auto rows = nlohmann::json::array();
  for (int i = 0; i < cov.dim(); ++i) {
    auto row = nlohmann::json::array();
    for (int k = 0; k < cov.dim(); ++k) row.push_back(cov.sigma(i, k));
    rows.push_back(row);
  }
  j["sigma"] = rows;
  return j;
}

inline CovarianceMatrix covariance_from_json(const nlohmann::json& j) {
  CovarianceMatrix cov;
  cov.tickers = j.at("tickers").get<std::vector<std::string>>();
  const auto& rows = j.at("sigma");
  const int n = static_cast<int>(rows.size());
  cov.sigma.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) cov.sigma(i, k) = rows[i][k].get<double>();
  return cov;
}

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}
}  // namespace detail

/// Load aligned price series from a CSV with header `date,<ticker>,...`.
/// Rows where any requested ticker has an empty cell are dropped from every
/// series, so all returned series share one date axis.
inline std::vector<PriceSeries> load_prices(const std::string& path,
                                            const std::vector<std::string>& tickers) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_prices: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw PriceParseError("load_prices: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  if (header.empty() || header[0] != "date")
    throw PriceParseError("load_prices: header must start with 'date'");

  std::vector<int> cols;
  for (const auto& t : tickers) {
    auto it = std::find(header.begin() + 1, header.end(), t);
    if (it == header.end()) throw MissingTickerError("load_prices: ticker not in file: " + t);
    cols.push_back(static_cast<int>(it - header.begin()));
  }

  std::vector<PriceSeries> out(tickers.size());
  for (std::size_t i = 0; i < tickers.size(); ++i) out[i].ticker = tickers[i];

  std::string prev_date;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw RaggedDatesError("load_prices: row width differs from header");
    const std::string& date = cells[0];
    if (!prev_date.empty() && date <= prev_date)
      throw RaggedDatesError("load_prices: dates not strictly increasing at " + date);
    prev_date = date;

    bool missing = false;
    std::vector<double> row(tickers.size());
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const std::string& cell = cells[cols[i]];
      if (cell.empty()) {
        missing = true;
        break;
      }
      try {
        std::size_t pos = 0;
        row[i] = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw PriceParseError("load_prices: non-numeric price '" + cell + "' for " + tickers[i]);
      }
      if (row[i] <= 0.0)
        throw PriceParseError("load_prices: non-positive price for " + tickers[i] + " at " + date);
    }
    if (missing) continue;  // drop the day from all series
    for (std::size_t i = 0; i < tickers.size(); ++i) {
      out[i].dates.push_back(date);
      out[i].prices.push_back(row[i]);
    }
  }
  return out;
}

enum class CovarianceMode { PriceLevels, Returns };

/// Sample covariance (unbiased, divisor T-1). Default is covariance of price
/// levels; the returns mode is available behind the flag but off by default.
inline CovarianceMatrix compute_covariance(const std::vector<PriceSeries>& series,
                                           CovarianceMode mode = CovarianceMode::PriceLevels) {
  if (series.empty()) throw InsufficientDataError("compute_covariance: no series");
  const std::size_t t_len = series[0].prices.size();
  for (const auto& s : series) {
    if (s.prices.size() != t_len || s.dates != series[0].dates)
      throw RaggedDatesError("compute_covariance: series not aligned");
  }
  const int n = static_cast<int>(series.size());
  std::size_t rows = t_len;
  Eigen::MatrixXd data(t_len, n);
  for (int j = 0; j < n; ++j)
    for (std::size_t i = 0; i < t_len; ++i) data(static_cast<Eigen::Index>(i), j) = series[j].prices[i];

  if (mode == CovarianceMode::Returns) {
    if (t_len < 2) throw InsufficientDataError("compute_covariance: need >= 2 observations");
    Eigen::MatrixXd rets(t_len - 1, n);
    for (int j = 0; j < n; ++j)
      for (std::size_t i = 1; i < t_len; ++i)
        rets(static_cast<Eigen::Index>(i - 1), j) = data(static_cast<Eigen::Index>(i), j) / data(static_cast<Eigen::Index>(i - 1), j) - 1.0;
    data = rets;
    rows = t_len - 1;
  }
  if (rows < 2) throw InsufficientDataError("compute_covariance: need >= 2 observations");

  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  Eigen::MatrixXd sigma = (centered.transpose() * centered) / static_cast<double>(rows - 1);
  sigma = ((sigma + sigma.transpose()) / 2.0).eval();  // exact symmetry as stored

  CovarianceMatrix cov;
  cov.sigma = std::move(sigma);
  cov.tickers.reserve(series.size());
  for (const auto& s : series) cov.tickers.push_back(s.ticker);
  return cov;
}

struct RandomInstance {
  CovarianceMatrix cov;
  std::vector<int> subset;  // indices into the universe, for reproducibility
};

/// Covariance of a uniformly sampled n-subset of the universe.
inline RandomInstance random_instance(Rng& rng, const std::vector<PriceSeries>& universe, int n) {
  const int m = static_cast<int>(universe.size());
  if (n > m) throw std::invalid_argument("random_instance: n exceeds universe size");
  std::vector<int> idx(m);
  for (int i = 0; i < m; ++i) idx[i] = i;
  for (int i = 0; i < n; ++i) {
    const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(m - i)));
    std::swap(idx[i], idx[j]);
  }
  std::vector<int> subset(idx.begin(), idx.begin() + n);
  std::sort(subset.begin(), subset.end());
  std::vector<PriceSeries> chosen;
  chosen.reserve(n);
  for (int i : subset) chosen.push_back(universe[i]);
  return RandomInstance{compute_covariance(chosen), std::move(subset)};
}

/// Synthetic SPD instance from a random factor model, Sigma = F F^T + diag(eps).
/// Keeps stochastic studies independent of market fixtures.
inline CovarianceMatrix synthetic_spd(Rng& rng, int n, int factors = 2, double noise_floor = 0.05) {
  if (n < 1) throw std::invalid_argument("synthetic_spd: n must be >= 1");
  Eigen::MatrixXd f(n, factors);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < factors; ++j) f(i, j) = rng.next_normal();
  Eigen::MatrixXd sigma = f * f.transpose();
  for (int i = 0; i < n; ++i) sigma(i, i) += noise_floor * (1.0 + rng.next_double());
  sigma = ((sigma + sigma.transpose()) / 2.0).eval();
  CovarianceMatrix cov;
  cov.sigma = std::move(sigma);
  for (int i = 0; i < n; ++i) cov.tickers.push_back("SYN" + std::to_string(i + 1));
  return cov;
}

}  // namespace dgmvp
