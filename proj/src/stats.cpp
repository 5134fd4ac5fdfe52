#include "commute/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "commute/error.hpp"

namespace commute::stats {
namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

double clamp_p(double p) { return std::clamp(p, kTiny, 1.0); }

}  // namespace

double mean(std::span<const double> values) {
  if (values.empty()) throw DataError("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) throw DataError("standard deviation needs at least two values");
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

GaussianFit gaussian_fit_window(std::span<const double> sample, double lo, double hi) {
  std::vector<double> inside;
  for (double v : sample) {
    if (v >= lo && v <= hi) inside.push_back(v);
  }
  if (inside.size() < kMinGaussianPoints) throw DataError("insufficient_data");
  GaussianFit fit;
  fit.mu = mean(inside);
  fit.sigma = sample_stddev(inside);
  fit.window_lo = lo;
  fit.window_hi = hi;
  fit.n = inside.size();
  if (!(fit.sigma > 0.0)) throw DataError("insufficient_data");
  return fit;
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                  0.24178072517745061177) * r + 1.27045825245236838258) * r +
                3.64784832476320460504) * r + 5.7694972214606914055) * r + 4.6303378461565452959) * r +
             1.42343711074968357734) /
            (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                  0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                0.68976733498510000455) * r + 1.6763848301838038494) * r + 2.05319162663775882187) * r +
             1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                0.29656057182850489123) * r + 1.7848265399172913358) * r + 5.4637849111641143699) * r +
             6.6579046435011037772) /
            (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                  1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                0.0148753612908506148525) * r + 0.13692988092273580531) * r + 0.59983220655588793769) * r +
             1.0);
  }
  return q < 0.0 ? -value : value;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

std::vector<QqPoint> qq_points(std::span<const double> sample, const GaussianFit& fit) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<QqPoint> out;
  out.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.5) / n;
    out.push_back(QqPoint{fit.mu + fit.sigma * inverse_normal_cdf(p), sorted[i]});
  }
  return out;
}

double median_peak(std::span<const double> sample) {
  if (sample.empty()) throw DataError("median of an empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  const std::size_t k = (sorted.size() + 1) / 2 - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  return sorted[k];
}

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::string_view method_name(PValueMethod m) {
  return m == PValueMethod::exact ? "exact" : "approximate";
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y, std::size_t exact_max_n) {
  if (x.size() != y.size()) throw DataError("spearman: sequences differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw DataError("spearman: needs at least 3 points");
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  const double mean_rank = (static_cast<double>(n) + 1.0) / 2.0;

  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (rx[i] - mean_rank) * (rx[i] - mean_rank);
    syy += (ry[i] - mean_rank) * (ry[i] - mean_rank);
    sxy += (rx[i] - mean_rank) * (ry[i] - mean_rank);
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("spearman: constant sequence, rho undefined");

  SpearmanResult result;
  result.n = n;
  result.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

  if (n <= exact_max_n) {
    // rho is affine in S = sum rx_i * ry_perm(i), and midranks are multiples
    // of 1/2, so S is exact in floating point. Heap's algorithm changes S by
    // one swap per permutation.
    const double centre = static_cast<double>(n) * mean_rank * mean_rank;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += rx[i] * ry[i];
    const double observed = std::abs(s - centre);

    std::vector<double> perm = ry;
    std::vector<std::size_t> c(n, 0);
    std::uint64_t total = 1, extreme = 1;
    std::size_t i = 1;
    while (i < n) {
      if (c[i] < i) {
        const std::size_t j = (i % 2 == 0) ? 0 : c[i];
        s += (rx[i] - rx[j]) * (perm[j] - perm[i]);
        std::swap(perm[i], perm[j]);
        ++total;
        if (std::abs(s - centre) >= observed - 1e-9) ++extreme;
        ++c[i];
        i = 1;
      } else {
        c[i] = 0;
        ++i;
      }
    }
    result.method = PValueMethod::exact;
    result.p_value = clamp_p(static_cast<double>(extreme) / static_cast<double>(total));
  } else {
    result.method = PValueMethod::approximate;
    const double df = static_cast<double>(n) - 2.0;
    const double r2 = result.rho * result.rho;
    if (r2 >= 1.0) {
      result.p_value = kTiny;
    } else {
      const double t = std::abs(result.rho) * std::sqrt(df / (1.0 - r2));
      const boost::math::students_t dist(df);
      result.p_value = clamp_p(2.0 * boost::math::cdf(boost::math::complement(dist, t)));
    }
  }
  return result;
}

double kolmogorov_survival(double lambda) {
  constexpr double kTermFloor = 1e-12;
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-theta form of the CDF; converges fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double sum = 0.0;
    for (int k = 1;; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * pi2 / (8.0 * lambda * lambda));
      sum += term;
      if (term < kTermFloor) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1;; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < kTermFloor) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DataError("ks test needs two non-empty samples");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double n1 = static_cast<double>(sa.size());
  const double n2 = static_cast<double>(sb.size());

  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  // once one sample is exhausted the gap only shrinks toward 0
  d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));

  KsResult result;
  result.d_statistic = d;
  result.n1 = sa.size();
  result.n2 = sb.size();
  const double effective_n = n1 * n2 / (n1 + n2);
  result.p_value = clamp_p(kolmogorov_survival(std::sqrt(effective_n) * d));
  return result;
}

}  // namespace commute::stats
