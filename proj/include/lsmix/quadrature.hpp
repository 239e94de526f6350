#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lsmix/errors.hpp"

namespace lsmix {

struct QuadratureSpec {
  double abs_tol = 1e-10;
  double window_sigmas = 12.0;           ///< half-width of the window around each component mean, in sd units
  std::size_t max_subdivisions = 20000;

  void validate() const {
    if (!(abs_tol > 0.0)) throw std::invalid_argument("quadrature abs_tol must be positive");
    if (!(window_sigmas >= 8.0)) throw std::invalid_argument("quadrature window_sigmas must be >= 8");
    if (max_subdivisions < 1) throw std::invalid_argument("quadrature max_subdivisions must be >= 1");
  }
};

/// Adaptive Simpson quadrature on [a, b]. The interval is first cut into
/// `initial_panels` equal pieces so that narrow peaks cannot slip between the
/// first sample points; each panel then refines until its Richardson error
/// estimate falls under its share of abs_tol. Throws QuadratureError (carrying
/// the estimate accumulated so far) once max_subdivisions splits have been made.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double abs_tol, std::size_t max_subdivisions,
                        std::size_t initial_panels = 64) {
  if (!(b > a)) return 0.0;
  struct Segment {
    double a, b, fa, fm, fb, whole, tol;
  };
  auto simpson = [](double a0, double b0, double fa, double fm, double fb) {
    return (b0 - a0) / 6.0 * (fa + 4.0 * fm + fb);
  };

  std::vector<Segment> stack;
  const double width = (b - a) / static_cast<double>(initial_panels);
  for (std::size_t k = initial_panels; k-- > 0;) {
    const double lo = a + width * static_cast<double>(k);
    const double hi = k + 1 == initial_panels ? b : lo + width;
    const double mid = 0.5 * (lo + hi);
    const double flo = f(lo), fmid = f(mid), fhi = f(hi);
    stack.push_back({lo, hi, flo, fmid, fhi, simpson(lo, hi, flo, fmid, fhi),
                     abs_tol / static_cast<double>(initial_panels)});
  }

  double total = 0.0;
  double comp = 0.0;
  auto add = [&](double v) {
    const double t = total + v;
    comp += std::abs(total) >= std::abs(v) ? (total - t) + v : (v - t) + total;
    total = t;
  };

  std::size_t splits = 0;
  while (!stack.empty()) {
    const Segment s = stack.back();
    stack.pop_back();
    const double m = 0.5 * (s.a + s.b);
    const double lm = 0.5 * (s.a + m);
    const double rm = 0.5 * (m + s.b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(s.a, m, s.fa, flm, s.fm);
    const double right = simpson(m, s.b, s.fm, frm, s.fb);
    const double diff = left + right - s.whole;
    if (std::abs(diff) <= 15.0 * s.tol || m <= s.a || m >= s.b) {
      add(left + right + diff / 15.0);
      continue;
    }
    if (++splits > max_subdivisions) {
      double partial = total + comp + left + right;
      for (const auto& rest : stack) partial += rest.whole;
      throw QuadratureError("adaptive Simpson did not reach the requested tolerance within " +
                                std::to_string(max_subdivisions) + " subdivisions",
                            partial);
    }
    stack.push_back({m, s.b, s.fm, frm, s.fb, right, 0.5 * s.tol});
    stack.push_back({s.a, m, s.fa, flm, s.fm, left, 0.5 * s.tol});
  }
  return total + comp;
}

}  // namespace lsmix
