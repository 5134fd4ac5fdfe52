#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace commute::stats {

// Times are minutes since midnight throughout.
struct GaussianFit {
  double mu = 0.0;
  double sigma = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t n = 0;  // points inside the window
};

inline constexpr std::size_t kMinGaussianPoints = 10;

// Sample mean and (n - 1) standard deviation of the points inside
// [lo, hi]. Throws DataError ("insufficient_data") for fewer than ten points
// in the window or zero spread.
GaussianFit gaussian_fit_window(std::span<const double> sample, double lo, double hi);

// Inverse standard normal CDF (Wichura, AS 241 "PPND16"); relative accuracy
// about 1e-16 over (0, 1).
double inverse_normal_cdf(double p);
double normal_cdf(double z);

struct QqPoint {
  double theoretical = 0.0;
  double empirical = 0.0;
};

// Pairs (mu + sigma * inverse_normal_cdf((i - 0.5) / n), i-th order statistic).
std::vector<QqPoint> qq_points(std::span<const double> sample, const GaussianFit& fit);

// Lower median: order statistic ceil(n / 2). Throws DataError when empty.
double median_peak(std::span<const double> sample);

// Ranks 1..n, ties sharing the mean of their positions.
std::vector<double> midranks(std::span<const double> values);

enum class PValueMethod { exact, approximate };
std::string_view method_name(PValueMethod m);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;  // two-sided
  std::size_t n = 0;
  PValueMethod method = PValueMethod::exact;
};

inline constexpr std::size_t kSpearmanExactMaxN = 10;

// Rank correlation with midranks. The p-value enumerates all n! permutations
// for n <= exact_max_n, otherwise uses the t approximation with n - 2 degrees
// of freedom. Throws DataError for n < 3, mismatched lengths, or a constant
// sequence.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y,
                        std::size_t exact_max_n = kSpearmanExactMaxN);

struct KsResult {
  double d_statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_survival(double lambda);

// Two-sided two-sample test. The p-value uses the asymptotic distribution at
// lambda = sqrt(n1 n2 / (n1 + n2)) * D. Throws DataError on an empty sample.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> values);
// (n - 1) denominator; requires n >= 2.
double sample_stddev(std::span<const double> values);

}  // namespace commute::stats
