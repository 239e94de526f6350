#pragma once

// Polynomial systems in s = (x1, x2, y1, y2, y3) whose real solution sets govern
// the estimation rates of the mixture: the asymmetric system (0 < pi < 1/2) and
// the symmetric system (pi = 1/2, equalities plus one inequality).
//
// For l = 1..r the l-th equation is
//   w_first  * sum_{a1,a2,b1,b2} k(a1, b1) (-x1)^a1 x2^b1 y2^a2 y3^b2 / (2^{a2+b2} a1! a2! b1! b2!)
// + w_second * sum_{a1,a2}       x1^a1 y1^a2 / (2^a2 a1! a2!)
// with a1 + b1 + 2 a2 + 2 b2 = l, 1 <= a1 + a2 <= r, b1 + b2 <= r - (a1 + a2) in
// the first sum and a1 + 2 a2 = l, 1 <= a1 + a2 <= r in the second.
//   asymmetric: w_first = 1 - pi, w_second = pi, k = c^a1 (c + 1)^b1
//   symmetric:  w_first = w_second = 1,          k = 2^b1

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lsmix/nelder_mead.hpp"
#include "lsmix/parallel.hpp"
#include "lsmix/rng.hpp"

namespace lsmix {

inline constexpr int kMaxSystemOrder = 12;
/// Nontriviality threshold on ||(x1, y1, y2)|| used by the falsification search.
inline constexpr double kTrivialTolerance = 1e-3;
/// Weight of the hinge penalty on negative inequality slack (symmetric system).
inline constexpr double kSlackPenaltyWeight = 1e3;

struct PolyCandidate {
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0, y3 = 0.0;

  /// Euclidean norm of the coordinates that decide triviality.
  double nontrivial_norm() const noexcept { return std::sqrt(x1 * x1 + y1 * y1 + y2 * y2); }
  bool is_trivial(double tol = 0.0) const noexcept {
    return tol == 0.0 ? (x1 == 0.0 && y1 == 0.0 && y2 == 0.0) : nontrivial_norm() <= tol;
  }
  /// s -> (t x1, t x2, t^2 y1, t^2 y2, t^2 y3); the l-th residual picks up a factor t^l.
  PolyCandidate scaled(double t) const noexcept {
    return {t * x1, t * x2, t * t * y1, t * t * y2, t * t * y3};
  }
  std::array<double, 5> as_array() const noexcept { return {x1, x2, y1, y2, y3}; }

  friend bool operator==(const PolyCandidate&, const PolyCandidate&) = default;
};

struct SystemResiduals {
  std::vector<double> equalities;         ///< entry l-1 holds the l-th equation
  std::optional<double> inequality_slack;  ///< RHS - LHS of the inequality; symmetric system only

  double max_abs() const noexcept {
    double m = 0.0;
    for (const double e : equalities) m = std::max(m, std::abs(e));
    return m;
  }
  double norm() const noexcept {
    double s = 0.0;
    for (const double e : equalities) s += e * e;
    return std::sqrt(s);
  }
};

/// (a1, a2, b1, b2)
using FirstIndex = std::array<int, 4>;
/// (a1, a2)
using SecondIndex = std::array<int, 2>;

/// Index tuples of the first (two-component) sum of the l-th equation, order r.
inline std::vector<FirstIndex> first_sum_indices(int l, int r) {
  std::vector<FirstIndex> out;
  for (int a2 = 0; 2 * a2 <= l; ++a2) {
    for (int b2 = 0; 2 * a2 + 2 * b2 <= l; ++b2) {
      for (int a1 = 0; a1 + 2 * a2 + 2 * b2 <= l; ++a1) {
        const int b1 = l - a1 - 2 * a2 - 2 * b2;
        const int alpha = a1 + a2;
        if (alpha >= 1 && alpha <= r && b1 + b2 <= r - alpha) out.push_back({a1, a2, b1, b2});
      }
    }
  }
  return out;
}

inline std::vector<SecondIndex> second_sum_indices(int l, int r) {
  std::vector<SecondIndex> out;
  for (int a2 = 0; 2 * a2 <= l; ++a2) {
    const int a1 = l - 2 * a2;
    if (a1 + a2 >= 1 && a1 + a2 <= r) out.push_back({a1, a2});
  }
  return out;
}

enum class SystemKind { asymmetric, symmetric };

inline std::string_view to_string(SystemKind k) {
  return k == SystemKind::asymmetric ? "asym" : "sym";
}

namespace detail {

inline constexpr std::array<std::uint64_t, kMaxSystemOrder + 1> kFactorials = [] {
  std::array<std::uint64_t, kMaxSystemOrder + 1> f{};
  f[0] = 1;
  for (int i = 1; i <= kMaxSystemOrder; ++i) f[i] = f[i - 1] * static_cast<std::uint64_t>(i);
  return f;
}();

inline double factorial(int k) { return static_cast<double>(kFactorials.at(static_cast<std::size_t>(k))); }

struct Monomial {
  double coef;
  std::array<std::uint8_t, 5> exps;  // powers of x1, x2, y1, y2, y3
};

inline void check_order(int r) {
  if (r < 1 || r > kMaxSystemOrder) {
    throw std::out_of_range("system order r must lie in [1, " + std::to_string(kMaxSystemOrder) + "]");
  }
}

}  // namespace detail

/// Equalities of one system, expanded into monomials once and evaluated many times.
class PolySystem {
 public:
  static PolySystem asymmetric(double pi, int r) {
    if (!(pi > 0.0 && pi < 0.5)) {
      throw std::domain_error("asymmetric system requires pi in (0, 1/2), got " + std::to_string(pi));
    }
    return PolySystem(SystemKind::asymmetric, pi, r);
  }
  static PolySystem symmetric(int r) { return PolySystem(SystemKind::symmetric, 0.5, r); }

  /// Asymmetric weights evaluated at any pi in (0, 1/2], including the pi = 1/2 limit.
  static PolySystem asymmetric_weights(double pi, int r) {
    if (!(pi > 0.0 && pi <= 0.5)) throw std::domain_error("pi must lie in (0, 1/2]");
    return PolySystem(SystemKind::asymmetric, pi, r);
  }

  SystemKind kind() const noexcept { return kind_; }
  double pi() const noexcept { return pi_; }
  int order() const noexcept { return r_; }

  std::vector<double> equalities(const PolyCandidate& s) const {
    std::array<std::array<double, kMaxSystemOrder + 1>, 5> pow{};
    const auto v = s.as_array();
    for (std::size_t k = 0; k < 5; ++k) {
      pow[k][0] = 1.0;
      for (int e = 1; e <= r_; ++e) pow[k][e] = pow[k][e - 1] * v[k];
    }
    std::vector<double> out(static_cast<std::size_t>(r_), 0.0);
    for (int l = 1; l <= r_; ++l) {
      double acc = 0.0;
      for (const auto& m : terms_[static_cast<std::size_t>(l - 1)]) {
        double t = m.coef;
        for (std::size_t k = 0; k < 5; ++k) t *= pow[k][m.exps[k]];
        acc += t;
      }
      out[static_cast<std::size_t>(l - 1)] = acc;
    }
    return out;
  }

  /// RHS - LHS of |x1|^r + |y1|^{r/2} + |y2|^{r/2} <= |2x2 - x1|^r + |y3 - y1|^{r/2} + |y2 + y3|^{r/2}.
  double inequality_slack(const PolyCandidate& s) const {
    const double r = r_;
    const double h = r / 2.0;
    const double rhs = std::pow(std::abs(2.0 * s.x2 - s.x1), r) + std::pow(std::abs(s.y3 - s.y1), h) +
                       std::pow(std::abs(s.y2 + s.y3), h);
    const double lhs = std::pow(std::abs(s.x1), r) + std::pow(std::abs(s.y1), h) + std::pow(std::abs(s.y2), h);
    return rhs - lhs;
  }

  SystemResiduals evaluate(const PolyCandidate& s) const {
    SystemResiduals res{equalities(s), std::nullopt};
    if (kind_ == SystemKind::symmetric) res.inequality_slack = inequality_slack(s);
    return res;
  }

 private:
  PolySystem(SystemKind kind, double pi, int r) : kind_(kind), pi_(pi), r_(r) {
    detail::check_order(r);
    const double c = pi / (1.0 - pi);
    const double w_first = kind == SystemKind::asymmetric ? 1.0 - pi : 1.0;
    const double w_second = kind == SystemKind::asymmetric ? pi : 1.0;
    terms_.resize(static_cast<std::size_t>(r));
    for (int l = 1; l <= r; ++l) {
      auto& row = terms_[static_cast<std::size_t>(l - 1)];
      for (const auto& [a1, a2, b1, b2] : first_sum_indices(l, r)) {
        const double k = kind == SystemKind::asymmetric ? std::pow(c, a1) * std::pow(c + 1.0, b1)
                                                        : std::ldexp(1.0, b1);
        const double sign = (a1 % 2 == 0) ? 1.0 : -1.0;
        const double denom = std::ldexp(1.0, a2 + b2) * detail::factorial(a1) * detail::factorial(a2) *
                             detail::factorial(b1) * detail::factorial(b2);
        row.push_back({w_first * sign * k / denom,
                       {static_cast<std::uint8_t>(a1), static_cast<std::uint8_t>(b1), 0,
                        static_cast<std::uint8_t>(a2), static_cast<std::uint8_t>(b2)}});
      }
      for (const auto& [a1, a2] : second_sum_indices(l, r)) {
        const double denom = std::ldexp(1.0, a2) * detail::factorial(a1) * detail::factorial(a2);
        row.push_back({w_second / denom,
                       {static_cast<std::uint8_t>(a1), 0, static_cast<std::uint8_t>(a2), 0, 0}});
      }
    }
  }

  SystemKind kind_;
  double pi_;
  int r_;
  std::vector<std::vector<detail::Monomial>> terms_;
};

inline SystemResiduals eval_asym_system(const PolyCandidate& s, double pi, int r) {
  return PolySystem::asymmetric(pi, r).evaluate(s);
}

inline SystemResiduals eval_sym_system(const PolyCandidate& s, int r) {
  return PolySystem::symmetric(r).evaluate(s);
}

/// Solution of the asymmetric system at r = 5 with x1 = x2 = 0:
/// y1 = -y2 / c, y3 = -(y2 / 2)(1 + 1 / c).
inline PolyCandidate known_solution_asym_r5(double pi, double y2) {
  if (!(pi > 0.0 && pi < 0.5)) throw std::domain_error("pi must lie in (0, 1/2)");
  if (y2 == 0.0) throw std::invalid_argument("y2 = 0 gives the trivial solution");
  const double c = pi / (1.0 - pi);
  return {0.0, 0.0, -y2 / c, y2, -(y2 / 2.0) * (1.0 + 1.0 / c)};
}

/// (0, 0, t, -t, t): solves every symmetric equality but violates the inequality for t != 0.
inline PolyCandidate symmetric_inequality_violator(double t) { return {0.0, 0.0, t, -t, t}; }

/// (x1, x1, y1, 2 x1^2 - y1, 0): solves the symmetric system at r = 3.
inline PolyCandidate symmetric_r3_solution(double x1, double y1) {
  return {x1, x1, y1, 2.0 * x1 * x1 - y1, 0.0};
}

/// The point used to drive the symmetric simulation path.
inline constexpr PolyCandidate kModelSPoint{1.0, 1.5, 3.5, 0.5, -1.5};

// ---------------------------------------------------------------------------
// Falsification search

struct FalsificationReport {
  SystemKind system = SystemKind::symmetric;
  double pi = 0.5;
  int r = 0;
  std::size_t n_starts = 0;
  std::uint64_t seed = 0;
  double tol = 0.0;

  PolyCandidate best;          ///< lowest-objective candidate, scale-normalised
  double best_residual_norm = std::numeric_limits<double>::infinity();
  std::optional<double> best_slack;
  std::size_t best_start = 0;
  /// Starts ending at a nontrivial, feasible candidate with residual norm < tol.
  std::size_t hits = 0;
  bool found = false;
};

namespace detail {

/// Weighted-homogeneous normalisation putting x1^2 + |y1| + |y2| = 1. The systems
/// are covariant under s -> (t x, t^2 y), so this loses no solutions while
/// keeping the search off the trivial set x1 = y1 = y2 = 0.
inline std::optional<PolyCandidate> normalise(const PolyCandidate& s) {
  const double nu2 = s.x1 * s.x1 + std::abs(s.y1) + std::abs(s.y2);
  if (!(nu2 > 1e-300) || !std::isfinite(nu2)) return std::nullopt;
  return s.scaled(1.0 / std::sqrt(nu2));
}

struct StartOutcome {
  PolyCandidate candidate;
  double objective = std::numeric_limits<double>::infinity();
  double residual_norm = std::numeric_limits<double>::infinity();
  std::optional<double> slack;
  bool hit = false;
};

}  // namespace detail

struct FalsifyOptions {
  double box = 5.0;  ///< starts are uniform in [-box, box]^5
  double trivial_tol = kTrivialTolerance;
  double slack_penalty = kSlackPenaltyWeight;
  std::size_t workers = 1;
  NelderMeadOptions optimizer{};
};

/// Multistart simplex descent on the squared residual norm of the normalised
/// candidate (plus a hinge penalty on negative slack for the symmetric system).
/// Numerical evidence about the solution set, not a proof.
inline FalsificationReport falsify(const PolySystem& system, std::size_t n_starts, std::uint64_t seed,
                                   double tol, const FalsifyOptions& opt = {}) {
  if (n_starts < 1) throw std::invalid_argument("falsify needs at least one start");
  const bool sym = system.kind() == SystemKind::symmetric;

  auto objective = [&](const std::vector<double>& v) {
    const auto s = detail::normalise({v[0], v[1], v[2], v[3], v[4]});
    if (!s) return 1e300;
    double f = 0.0;
    for (const double e : system.equalities(*s)) f += e * e;
    if (sym) f += opt.slack_penalty * std::max(0.0, -system.inequality_slack(*s));
    return std::isfinite(f) ? f : 1e300;
  };

  std::vector<detail::StartOutcome> outcomes(n_starts);
  parallel_for(n_starts, opt.workers, [&](std::size_t i) {
    SplitMix64 rng(derive_seed(seed, i));
    std::vector<double> x0(5);
    for (auto& x : x0) x = rng.uniform(-opt.box, opt.box);
    const auto nm = nelder_mead(objective, x0, opt.optimizer);

    detail::StartOutcome out;
    out.objective = nm.f;
    const auto s = detail::normalise({nm.x[0], nm.x[1], nm.x[2], nm.x[3], nm.x[4]});
    if (!s) {
      outcomes[i] = out;
      return;
    }
    const auto res = system.evaluate(*s);
    out.candidate = *s;
    out.residual_norm = res.norm();
    out.slack = res.inequality_slack;
    const bool feasible = !sym || (res.inequality_slack && *res.inequality_slack >= 0.0);
    out.hit = feasible && out.residual_norm < tol && s->nontrivial_norm() > opt.trivial_tol;
    outcomes[i] = out;
  });

  FalsificationReport rep;
  rep.system = system.kind();
  rep.pi = system.pi();
  rep.r = system.order();
  rep.n_starts = n_starts;
  rep.seed = seed;
  rep.tol = tol;
  double best_obj = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_starts; ++i) {
    const auto& o = outcomes[i];
    if (o.hit) ++rep.hits;
    // Hits outrank non-hits; among equals the lower objective, then the lower index, wins.
    const bool better = (o.hit && !rep.found) || (o.hit == rep.found && o.objective < best_obj);
    if (better) {
      best_obj = o.objective;
      rep.found = rep.found || o.hit;
      rep.best = o.candidate;
      rep.best_residual_norm = o.residual_norm;
      rep.best_slack = o.slack;
      rep.best_start = i;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Closed-form reduction of the symmetric system at r = 4.
//
// With x1 != 0 and (x2, y1, y2, y3) divided by (x1, x1^2, x1^2, x1^2), the l = 2
// and l = 3 equations give x2 = (2 + y1 + y2)/4 and
// y3 = (2 y1 - y1^2 + y2 (y2 - 2))/4, after which the l = 4 equation equals
// (y1 + y1^3 + y2 + y2^3)/24. Since t -> t + t^3 is strictly increasing this
// forces y2 = -y1, i.e. x1 = 2 x2 and y1 = -y2 = y3, a family that always
// violates the inequality.

namespace detail {

/// Unique real root of t + t^3 = target.
inline double solve_odd_cubic(double target) {
  const double bound = std::max(1.0, std::abs(target));
  double lo = -bound, hi = bound;
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (mid + mid * mid * mid < target) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline bool sym_r4_closed_form_check(const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("grid must be nonempty");
  const PolySystem sys = PolySystem::symmetric(4);
  constexpr std::array<double, 5> kScales{-3.0, -0.5, 0.25, 1.0, 2.0};
  constexpr std::array<double, 4> kProbeOffsets{-1.3, -0.4, 0.6, 1.7};

  for (const double t1 : grid) {
    const double cubic1 = t1 + t1 * t1 * t1;
    const double t2 = detail::solve_odd_cubic(-cubic1);
    if (std::abs(t2 + t1) > 1e-12 * (1.0 + std::abs(t1))) return false;

    const double x2 = (2.0 + t1 + t2) / 4.0;
    const double y3 = (2.0 * t1 - t1 * t1 + t2 * (t2 - 2.0)) / 4.0;
    if (std::abs(x2 - 0.5) > 1e-12 || std::abs(y3 - t1) > 1e-12 * (1.0 + t1 * t1)) return false;

    // The elimination itself: on the surface cut out by l = 2, 3 the l = 4
    // residual must be (cubic(y1) + cubic(y2)) / 24 for arbitrary y2.
    for (const double off : kProbeOffsets) {
      const double u = t1 + off;
      const PolyCandidate s{1.0, (2.0 + t1 + u) / 4.0, t1, u, (2.0 * t1 - t1 * t1 + u * (u - 2.0)) / 4.0};
      const auto eq = sys.equalities(s);
      const double expected = (cubic1 + u + u * u * u) / 24.0;
      const double scale = 1.0 + std::abs(expected) + std::pow(std::abs(u) + std::abs(t1), 3);
      if (std::abs(eq[1]) > 1e-12 * scale || std::abs(eq[2]) > 1e-12 * scale ||
          std::abs(eq[3] - expected) > 1e-12 * scale) {
        return false;
      }
    }

    for (const double x1 : kScales) {
      const double sq = x1 * x1;
      const PolyCandidate s{x1, x1 * x2, t1 * sq, t2 * sq, y3 * sq};
      const auto res = sys.evaluate(s);
      for (std::size_t l = 0; l < res.equalities.size(); ++l) {
        const double scale = std::pow(std::abs(x1), static_cast<double>(l + 1)) * (1.0 + t1 * t1);
        if (std::abs(res.equalities[l]) > 1e-12 * scale) return false;
      }
      if (!(res.inequality_slack && *res.inequality_slack < 0.0)) return false;
    }
  }
  return true;
}

}  // namespace lsmix
