#pragma once

#include "lmo/core/error.hpp"

#include <cmath>
#include <vector>

namespace lmo {

/// Ordinary least-squares line y = intercept + slope x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;  // standard error of the slope (0 for two points)
  double rms = 0.0;       // root-mean-square residual
  std::size_t count = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("line fit needs at least two paired samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidInput("line fit needs distinct abscissae");
  LineFit f;
  f.count = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  if (x.size() > 2) f.slope_se = std::sqrt(ss / (n - 2) / sxx);
  return f;
}

/// Fit of log y against log x.
inline LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly);
}

}  // namespace lmo
