#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "toprec/ingest.hpp"
#include "toprec/rng.hpp"

namespace toprec::testing {

inline Interaction make_interaction(const std::string& u, const std::string& i,
                                    double rating = 5.0, const std::string& review = "",
                                    int64_t ts = -1) {
  Interaction x;
  x.user = u;
  x.item = i;
  x.rating = rating;
  x.review = review;
  if (ts >= 0) x.timestamp = ts;
  return x;
}

// Random bipartite interaction set: every user gets between min_deg and
// max_deg distinct items.
inline Dataset random_dataset(int n_users, int n_items, int min_deg, int max_deg,
                              Rng& rng) {
  std::vector<Interaction> inter;
  for (int u = 0; u < n_users; ++u) {
    int deg = min_deg + rng.below_int(max_deg - min_deg + 1);
    std::vector<int> items(n_items);
    for (int i = 0; i < n_items; ++i) items[i] = i;
    rng.shuffle(items);
    for (int j = 0; j < deg && j < n_items; ++j)
      inter.push_back(make_interaction("u" + std::to_string(u),
                                       "i" + std::to_string(items[j]), 5.0, "",
                                       1000 + u * 100 + j));
  }
  return Dataset::from_interactions(std::move(inter));
}

// Adaptive Simpson quadrature, used by the t-distribution oracle.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double eps, int depth = 24) {
  auto simpson = [&](double lo, double hi) {
    double mid = 0.5 * (lo + hi);
    return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi));
  };
  std::function<double(double, double, double, double, int)> rec =
      [&](double lo, double hi, double whole, double tol, int d) -> double {
    double mid = 0.5 * (lo + hi);
    double left = simpson(lo, mid), right = simpson(mid, hi);
    if (d <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
      return left + right + (left + right - whole) / 15.0;
    return rec(lo, mid, left, tol / 2.0, d - 1) + rec(mid, hi, right, tol / 2.0, d - 1);
  };
  return rec(a, b, simpson(a, b), eps, depth);
}

// Independent two-sided p-value for the Student-t statistic: numerical
// integration of the density after the substitution x = sqrt(df) tan(theta),
// which maps the tail onto a bounded trig integral.
inline double t_pvalue_by_integration(double t, double df) {
  double at = std::fabs(t);
  if (at == 0.0) return 1.0;
  double c = std::exp(std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0)) /
             std::sqrt(df * M_PI);
  auto integrand = [&](double theta) {
    return c * std::sqrt(df) * std::pow(std::cos(theta), df - 1.0);
  };
  double lo = std::atan(at / std::sqrt(df));
  double tail = adaptive_simpson(integrand, lo, M_PI / 2.0, 1e-12);
  return 2.0 * tail;
}

}  // namespace toprec::testing
