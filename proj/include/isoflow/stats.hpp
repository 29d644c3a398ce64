#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace isoflow {

/// Upper quantile of chi-square with `dof` degrees of freedom via the
/// Wilson-Hilferty cube approximation (adequate for dof >= ~5, p near 1).
inline double chi2_quantile(int dof, double p) {
  if (dof < 1) throw std::invalid_argument("chi2_quantile: dof must be positive");
  // inverse standard normal via Acklam's rational approximation
  auto norm_quantile = [](double q) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double x;
    if (q < plow) {
      const double u = std::sqrt(-2 * std::log(q));
      x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
          ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1);
    } else if (q <= phigh) {
      const double u = q - 0.5, r = u * u;
      x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u /
          (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
      const double u = std::sqrt(-2 * std::log(1 - q));
      x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
          ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1);
    }
    return x;
  };
  const double z = norm_quantile(p);
  const double k = static_cast<double>(dof);
  const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
  return k * t * t * t;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LinearFit fit;
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

struct KendallTau {
  double tau = 0.0;
  int comparable_pairs = 0;
  bool all_tied = false;
};

/// Kendall tau over strictly comparable pairs; ties in either coordinate are
/// dropped. If nothing is comparable, tau is 0 with the tie flag raised.
inline KendallTau kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("kendall_tau: size mismatch");
  int concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[i] - a[j], db = b[i] - b[j];
      if (da == 0.0 || db == 0.0) continue;
      if (da * db > 0)
        ++concordant;
      else
        ++discordant;
    }
  KendallTau out;
  out.comparable_pairs = concordant + discordant;
  if (out.comparable_pairs == 0) {
    out.all_tied = true;
    return out;
  }
  out.tau = static_cast<double>(concordant - discordant) / out.comparable_pairs;
  return out;
}

/// Total-variation distance between two histograms after normalization.
inline double tv_distance(const std::vector<double>& h1, const std::vector<double>& h2) {
  if (h1.size() != h2.size()) throw std::invalid_argument("tv_distance: bin mismatch");
  double s1 = 0, s2 = 0;
  for (double v : h1) s1 += v;
  for (double v : h2) s2 += v;
  if (s1 <= 0 || s2 <= 0) throw std::invalid_argument("tv_distance: empty histogram");
  double tv = 0;
  for (std::size_t i = 0; i < h1.size(); ++i) tv += std::abs(h1[i] / s1 - h2[i] / s2);
  return 0.5 * tv;
}

struct ChiSquareReport {
  double statistic = 0.0;
  int dof = 0;
  double critical_99 = 0.0;  // 1% significance threshold
  bool pass = false;
  long total_samples = 0;
};

/// Goodness-of-fit of observed counts against expected proportions (need not
/// be normalized). Bins with tiny expectation are merged into neighbors.
inline ChiSquareReport chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected_prop) {
  if (observed.size() != expected_prop.size() || observed.size() < 2)
    throw std::invalid_argument("chi_square_gof: bad bins");
  double total = 0, ptot = 0;
  for (double v : observed) total += v;
  for (double v : expected_prop) ptot += v;
  if (total <= 0 || ptot <= 0) throw std::invalid_argument("chi_square_gof: empty data");

  // merge bins until every expected count is >= 5
  std::vector<double> obs, exp;
  double co = 0, ce = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    co += observed[i];
    ce += expected_prop[i] / ptot * total;
    if (ce >= 5.0) {
      obs.push_back(co);
      exp.push_back(ce);
      co = ce = 0;
    }
  }
  if (ce > 0 && !obs.empty()) {
    obs.back() += co;
    exp.back() += ce;
  }
  if (obs.size() < 2) throw std::invalid_argument("chi_square_gof: insufficient samples per bin");

  ChiSquareReport rep;
  for (std::size_t i = 0; i < obs.size(); ++i) rep.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
  rep.dof = static_cast<int>(obs.size()) - 1;
  rep.critical_99 = chi2_quantile(rep.dof, 0.99);
  rep.pass = rep.statistic < rep.critical_99;
  rep.total_samples = static_cast<long>(total);
  return rep;
}

}  // namespace isoflow
