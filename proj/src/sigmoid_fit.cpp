#include "collact/sigmoid_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "collact/error.hpp"

namespace collact {

namespace {

constexpr double kMaxOffset = 1.0 - 1e-9;

double logistic(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Params {
  double k, m, o;
};

double sse(const Params& p, std::span<const double> a, std::span<const double> s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = p.o + (1.0 - p.o) * logistic(p.k * (a[i] - p.m)) - s[i];
    acc += r * r;
  }
  return acc;
}

// Best offset for fixed (k, m): f is affine in o.
double profile_offset(double k, double m, std::span<const double> a, std::span<const double> s) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double sig = logistic(k * (a[i] - m));
    num += (1.0 - sig) * (s[i] - sig);
    den += (1.0 - sig) * (1.0 - sig);
  }
  if (den <= 0.0) {
    return 0.0;
  }
  return std::clamp(num / den, 0.0, kMaxOffset);
}

}  // namespace

double sigmoid_value(const SigmoidFit& fit, double alpha) {
  return fit.offset + (1.0 - fit.offset) * logistic(fit.slope * (alpha - fit.midpoint));
}

SigmoidFit fit_sigmoid(std::span<const double> a, std::span<const double> s) {
  if (a.size() != s.size()) {
    throw StructuralError("alpha and success columns differ in length");
  }
  if (a.size() < 4) {
    throw StructuralError("sigmoid fit needs at least four points");
  }
  const auto [lo_it, hi_it] = std::minmax_element(s.begin(), s.end());
  if (*hi_it - *lo_it <= 1e-12) {
    SigmoidFit fit;
    fit.offset = *lo_it;
    fit.midpoint = 0.5 * (a.front() + a.back());
    fit.degenerate = true;
    return fit;
  }
  const double amin = *std::min_element(a.begin(), a.end());
  const double amax = *std::max_element(a.begin(), a.end());

  std::vector<double> ks;
  for (int i = 0; i <= 60; ++i) {
    ks.push_back(0.1 * std::pow(10.0, 5.0 * i / 60.0));
  }
  std::vector<double> ms;
  for (int i = 0; i <= 40; ++i) {
    ms.push_back(amin + (amax - amin) * i / 40.0);
  }
  const double glo = std::max(amin, 1e-6 * std::max(amax, 1e-300));
  if (glo > 0.0 && amax > glo) {
    for (int i = 0; i <= 40; ++i) {
      ms.push_back(glo * std::pow(amax / glo, i / 40.0));
    }
  }

  Params best{ks.front(), ms.front(), 0.0};
  double best_sse = INFINITY;
  for (double k : ks) {
    for (double m : ms) {
      const Params p{k, m, profile_offset(k, m, a, s)};
      const double e = sse(p, a, s);
      if (e < best_sse) {
        best_sse = e;
        best = p;
      }
    }
  }

  // Levenberg-damped Gauss-Newton on (k, m, o).
  double damping = 1e-3;
  for (int iter = 0; iter < 500; ++iter) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double sig = logistic(best.k * (a[i] - best.m));
      const double r = best.o + (1.0 - best.o) * sig - s[i];
      const double ds = (1.0 - best.o) * sig * (1.0 - sig);
      const Eigen::Vector3d jrow(ds * (a[i] - best.m), -ds * best.k, 1.0 - sig);
      jtj += jrow * jrow.transpose();
      jtr += jrow * r;
    }
    bool improved = false;
    while (damping < 1e12) {
      Eigen::Matrix3d lhs = jtj;
      for (int d = 0; d < 3; ++d) {
        lhs(d, d) += damping * std::max(jtj(d, d), 1e-12);
      }
      const Eigen::Vector3d step = lhs.ldlt().solve(-jtr);
      Params trial{best.k + step[0], best.m + step[1], std::clamp(best.o + step[2], 0.0, kMaxOffset)};
      if (trial.k < 0.0) {
        trial.k = 0.5 * best.k;
      }
      const double e = sse(trial, a, s);
      if (std::isfinite(e) && e < best_sse) {
        const double gain = best_sse - e;
        best = trial;
        best_sse = e;
        damping = std::max(damping * 0.3, 1e-12);
        improved = gain > 1e-16 * std::max(best_sse, 1e-300);
        break;
      }
      damping *= 10.0;
    }
    if (!improved) {
      break;
    }
  }

  SigmoidFit fit;
  fit.slope = best.k;
  fit.midpoint = best.m;
  fit.offset = best.o;
  fit.rmse = std::sqrt(best_sse / static_cast<double>(a.size()));
  return fit;
}

SigmoidFit fit_sigmoid(const SuccessCurve& curve) {
  std::vector<double> a;
  std::vector<double> s;
  for (const auto& pt : curve.points) {
    a.push_back(pt.alpha);
    s.push_back(pt.success);
  }
  return fit_sigmoid(a, s);
}

}  // namespace collact
