#include "stochmech/estimators/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "stochmech/errors.hpp"
#include "stochmech/sde/parallel.hpp"

namespace stochmech::estimators {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMaxExtrapolatedShare = 0.01;

// Per-(group, bin) sums; replicate r < G drops group r, r == G is the full sample.
class GroupedSums {
 public:
  GroupedSums(std::size_t groups, std::size_t bins)
      : G_(groups), B_(bins), n_(groups * bins, 0.0), s_(groups * bins, 0.0),
        x_(groups * bins, 0.0) {}

  void add(std::size_t g, std::size_t j, double x, double v) {
    n_[g * B_ + j] += 1.0;
    s_[g * B_ + j] += v;
    x_[g * B_ + j] += x;
  }

  void finalize() {
    tn_.assign(B_, 0.0);
    ts_.assign(B_, 0.0);
    tx_.assign(B_, 0.0);
    for (std::size_t g = 0; g < G_; ++g)
      for (std::size_t j = 0; j < B_; ++j) {
        tn_[j] += n_[g * B_ + j];
        ts_[j] += s_[g * B_ + j];
        tx_[j] += x_[g * B_ + j];
      }
  }

  std::size_t count(std::size_t j) const { return static_cast<std::size_t>(tn_[j]); }

  double mean(std::size_t r, std::size_t j) const {
    double n = tn_[j], s = ts_[j];
    if (r < G_) {
      n -= n_[r * B_ + j];
      s -= s_[r * B_ + j];
    }
    return n > 0.0 ? s / n : kNaN;
  }

  double x_mean(std::size_t r, std::size_t j) const {
    double n = tn_[j], s = tx_[j];
    if (r < G_) {
      n -= n_[r * B_ + j];
      s -= x_[r * B_ + j];
    }
    return n > 0.0 ? s / n : kNaN;
  }

 private:
  std::size_t G_, B_;
  std::vector<double> n_, s_, x_, tn_, ts_, tx_;
};

struct Replicates {
  std::size_t G, B;
  std::vector<double> values;  // [(G + 1) * B], row G is the full estimate
  double& at(std::size_t r, std::size_t j) { return values[r * B + j]; }
  double at(std::size_t r, std::size_t j) const { return values[r * B + j]; }
};

DerivativeField assemble(const Bins& bins, double t, double delta, const Replicates& rep,
                         const std::vector<std::size_t>& count, std::vector<double> x_mean,
                         std::size_t n_min) {
  DerivativeField f;
  f.bins = bins;
  f.x_mean = std::move(x_mean);
  f.t = t;
  f.delta = delta;
  const std::size_t B = bins.count, G = rep.G;
  f.estimate.resize(B);
  f.stderr_.resize(B);
  f.count = count;
  f.reliable.resize(B);
  f.groups = G;
  f.replicates.assign(rep.values.begin(), rep.values.begin() + static_cast<std::ptrdiff_t>(G * B));
  for (std::size_t j = 0; j < B; ++j) {
    f.estimate[j] = rep.at(G, j);
    double mean = 0.0;
    for (std::size_t r = 0; r < G; ++r) mean += rep.at(r, j);
    mean /= static_cast<double>(G);
    double ss = 0.0;
    for (std::size_t r = 0; r < G; ++r) ss += (rep.at(r, j) - mean) * (rep.at(r, j) - mean);
    f.stderr_[j] = std::sqrt(ss * static_cast<double>(G - 1) / static_cast<double>(G));
    f.reliable[j] = count[j] >= n_min && std::isfinite(f.estimate[j]) && std::isfinite(f.stderr_[j]);
  }
  return f;
}

Replicates from_sums(const GroupedSums& sums, std::size_t G, std::size_t B) {
  Replicates rep{G, B, std::vector<double>((G + 1) * B)};
  for (std::size_t r = 0; r <= G; ++r)
    for (std::size_t j = 0; j < B; ++j) rep.at(r, j) = sums.mean(r, j);
  return rep;
}

// Piecewise-linear lookup through the reliable nodes (x_j, v_j), constant
// beyond the outermost ones. Node j lies inside bin j, so a query only
// needs its own bin and the nearest reliable node on either side.
class NodeTable {
 public:
  NodeTable(const Bins& bins, std::span<const double> xs, std::span<const double> values,
            std::span<const std::uint8_t> ok)
      : bins_(bins), nx_(xs.size()), nv_(xs.size()), left_(xs.size()), right_(xs.size()) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < values.size(); ++j)
      if (ok[j] && std::isfinite(values[j]) && std::isfinite(xs[j])) idx.push_back(j);
    if (idx.empty()) throw InvalidArgument("estimators: no reliable bins for the inner field");
    for (std::size_t j : idx) {
      nx_[j] = xs[j];
      nv_[j] = values[j];
    }
    // Nearest reliable node at or left of / at or right of each bin.
    std::size_t last = npos;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (std::binary_search(idx.begin(), idx.end(), j)) last = j;
      left_[j] = last;
    }
    last = npos;
    for (std::size_t j = xs.size(); j-- > 0;) {
      if (std::binary_search(idx.begin(), idx.end(), j)) last = j;
      right_[j] = last;
    }
    first_ = idx.front();
    final_ = idx.back();
  }

  bool inside(double x) const { return x >= nx_[first_] && x <= nx_[final_]; }

  double operator()(double x) const {
    if (!(x > nx_[first_])) return nv_[first_];
    if (!(x < nx_[final_])) return nv_[final_];
    const double u = (x - bins_.lo) / bins_.width;
    std::size_t j = u < 0.0 ? 0 : static_cast<std::size_t>(u);
    if (j >= nx_.size()) j = nx_.size() - 1;
    std::size_t a = left_[j], b = right_[j];
    // x lies strictly between the first and final nodes, so the bracket exists
    // after at most one shift.
    if (a != npos && x < nx_[a]) {
      b = a;
      a = a > 0 ? left_[a - 1] : npos;
    } else if (b != npos && x >= nx_[b]) {
      a = b;
      b = b + 1 < nx_.size() ? right_[b + 1] : npos;
    }
    if (a == npos) return nv_[b];
    if (b == npos || a == b) return nv_[a];
    return nv_[a] + (x - nx_[a]) * (nv_[b] - nv_[a]) / (nx_[b] - nx_[a]);
  }

 private:
  static constexpr std::size_t npos = Bins::npos;
  Bins bins_;
  std::vector<double> nx_, nv_;
  std::vector<std::size_t> left_, right_;
  std::size_t first_ = 0, final_ = 0;
};

double min_spacing(const sde::TrajectoryEnsemble& ens) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < ens.times.size(); ++i) m = std::min(m, ens.times[i] - ens.times[i - 1]);
  return m;
}

void check_settings(const sde::TrajectoryEnsemble& ens, const DerivativeSettings& s) {
  if (!(s.delta > 0.0) || !std::isfinite(s.delta))
    throw InvalidArgument("estimators: delta must be positive");
  if (s.delta < min_spacing(ens) * (1.0 - 1e-9))
    throw InvalidArgument("estimators: delta below the recorded time step");
  if (s.groups < 2) throw InvalidArgument("estimators: need at least two jackknife groups");
  if (s.particle >= ens.n_particles) throw InvalidArgument("estimators: particle out of range");
}

Bins pick_bins(const DerivativeSettings& s, std::span<const double> xt) {
  if (s.bins) return *s.bins;
  return freedman_diaconis(xt);
}

// One-step quotient field: conditioning on x at `cond`, value (x[hi] − x[lo]) / δ.
DerivativeField one_step(const sde::TrajectoryEnsemble& ens, double t, const DerivativeSettings& s,
                         bool forward) {
  check_settings(ens, s);
  const std::size_t rt = ens.time_index(t);
  const std::size_t ro = ens.time_index(forward ? t + s.delta : t - s.delta);
  const auto xt = ens.positions(rt, s.particle);
  const auto xo = ens.positions(ro, s.particle);
  const Bins bins = pick_bins(s, xt);
  const std::size_t B = bins.count, G = s.groups;
  GroupedSums sums(G, B);
  for (std::size_t i = 0; i < xt.size(); ++i) {
    if (!std::isfinite(xt[i]) || !std::isfinite(xo[i])) continue;
    const std::size_t j = bins.locate(xt[i]);
    if (j == Bins::npos) continue;
    const double q = forward ? (xo[i] - xt[i]) / s.delta : (xt[i] - xo[i]) / s.delta;
    sums.add(i % G, j, xt[i], q);
  }
  sums.finalize();
  std::vector<std::size_t> count(B);
  std::vector<double> xm(B);
  for (std::size_t j = 0; j < B; ++j) {
    count[j] = sums.count(j);
    xm[j] = sums.x_mean(G, j);
  }
  return assemble(bins, t, s.delta, from_sums(sums, G, B), count, std::move(xm), s.n_min);
}

double node_x(const DerivativeField& f, std::size_t j) {
  return j < f.x_mean.size() && std::isfinite(f.x_mean[j]) ? f.x_mean[j] : f.bins.center(j);
}

bool has_replicates(const DerivativeField& f) {
  return f.groups >= 2 && f.replicates.size() == f.groups * f.bins.count;
}

double jackknife_stderr(const std::vector<double>& theta) {
  const double G = static_cast<double>(theta.size());
  double m = 0.0;
  for (double v : theta) m += v;
  m /= G;
  double ss = 0.0;
  for (double v : theta) ss += (v - m) * (v - m);
  return std::sqrt(ss * (G - 1.0) / G);
}

// Density-weighted RMS of values[j] − ref_j over reliable bins.
double weighted_rms(const DerivativeField& f, const double* values, const std::vector<double>& ref) {
  double wsum = 0.0, r2 = 0.0;
  for (std::size_t j = 0; j < f.bins.count; ++j) {
    if (!f.reliable[j]) continue;
    const double w = static_cast<double>(f.count[j]);
    wsum += w;
    r2 += w * (values[j] - ref[j]) * (values[j] - ref[j]);
  }
  return wsum > 0.0 ? std::sqrt(r2 / wsum) : kNaN;
}

}  // namespace

std::size_t DerivativeField::reliable_count() const {
  return static_cast<std::size_t>(std::count(reliable.begin(), reliable.end(), std::uint8_t{1}));
}

double DerivativeField::at(double x) const {
  std::vector<double> xs(bins.count);
  for (std::size_t j = 0; j < bins.count; ++j) xs[j] = node_x(*this, j);
  return NodeTable(bins, xs, estimate, reliable)(x);
}

DerivativeField forward_derivative(const sde::TrajectoryEnsemble& ens, double t,
                                   const DerivativeSettings& s) {
  return one_step(ens, t, s, true);
}

DerivativeField backward_derivative(const sde::TrajectoryEnsemble& ens, double t,
                                    const DerivativeSettings& s) {
  return one_step(ens, t, s, false);
}

AccelerationEstimate stochastic_acceleration(const sde::TrajectoryEnsemble& ens, double t,
                                             const DerivativeSettings& s) {
  check_settings(ens, s);
  const double d = s.delta;
  const auto xm = ens.positions(ens.time_index(t - d), s.particle);
  const auto x0 = ens.positions(ens.time_index(t), s.particle);
  const auto xp = ens.positions(ens.time_index(t + d), s.particle);
  const Bins bins = pick_bins(s, x0);
  const std::size_t B = bins.count, G = s.groups, n = x0.size();

  // Inner fields. All four share the bins chosen at t.
  GroupedSums plus_m(G, B), plus_0(G, B), minus_0(G, B), minus_p(G, B);
  std::vector<std::size_t> jt(n, Bins::npos);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(xm[i]) || !std::isfinite(x0[i]) || !std::isfinite(xp[i])) continue;
    const std::size_t g = i % G;
    const double back = (x0[i] - xm[i]) / d, fwd = (xp[i] - x0[i]) / d;
    if (const std::size_t j = bins.locate(xm[i]); j != Bins::npos) plus_m.add(g, j, xm[i], back);
    if (const std::size_t j = bins.locate(xp[i]); j != Bins::npos) minus_p.add(g, j, xp[i], fwd);
    const std::size_t j = bins.locate(x0[i]);
    if (j == Bins::npos) continue;
    jt[i] = j;
    plus_0.add(g, j, x0[i], fwd);
    minus_0.add(g, j, x0[i], back);
  }
  for (GroupedSums* gs : {&plus_m, &plus_0, &minus_0, &minus_p}) gs->finalize();
  auto mask_of = [&](const GroupedSums& gs) {
    std::vector<std::uint8_t> m(B);
    for (std::size_t j = 0; j < B; ++j) m[j] = gs.count(j) >= s.n_min;
    return m;
  };
  const auto ok_pm = mask_of(plus_m), ok_p0 = mask_of(plus_0), ok_m0 = mask_of(minus_0),
             ok_mp = mask_of(minus_p);

  Replicates mp{G, B, std::vector<double>((G + 1) * B)};
  Replicates pm{G, B, std::vector<double>((G + 1) * B)};
  Replicates sym{G, B, std::vector<double>((G + 1) * B)};
  std::vector<std::size_t> count(B, 0);
  std::vector<double> x_sum(B, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (jt[i] != Bins::npos) {
      ++count[jt[i]];
      x_sum[jt[i]] += x0[i];
    }
  for (std::size_t j = 0; j < B; ++j) x_sum[j] = count[j] ? x_sum[j] / count[j] : kNaN;

  // Outer bins where the inner fields had to be extrapolated for too many
  // samples are not trusted.
  std::vector<std::size_t> outside(B, 0);

  parallel_for(G + 1, resolve_threads(s.threads), [&](std::size_t r) {
    std::vector<double> vals(B), xs(B);
    auto table = [&](const GroupedSums& gs, const std::vector<std::uint8_t>& ok) {
      for (std::size_t j = 0; j < B; ++j) {
        vals[j] = gs.mean(r, j);
        xs[j] = gs.x_mean(r, j);
      }
      return NodeTable(bins, xs, vals, ok);
    };
    const NodeTable b_m = table(plus_m, ok_pm), b_0 = table(plus_0, ok_p0);
    const NodeTable c_0 = table(minus_0, ok_m0), c_p = table(minus_p, ok_mp);
    std::vector<double> n_r(B, 0.0), s_mp(B, 0.0), s_pm(B, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = jt[i];
      if (j == Bins::npos || (r < G && i % G == r)) continue;
      n_r[j] += 1.0;
      s_mp[j] += (b_0(x0[i]) - b_m(xm[i])) / d;
      s_pm[j] += (c_p(xp[i]) - c_0(x0[i])) / d;
      if (r == G && !(b_0.inside(x0[i]) && b_m.inside(xm[i]) && c_p.inside(xp[i]) && c_0.inside(x0[i])))
        ++outside[j];
    }
    for (std::size_t j = 0; j < B; ++j) {
      mp.at(r, j) = n_r[j] > 0.0 ? s_mp[j] / n_r[j] : kNaN;
      pm.at(r, j) = n_r[j] > 0.0 ? s_pm[j] / n_r[j] : kNaN;
      sym.at(r, j) = 0.5 * (mp.at(r, j) + pm.at(r, j));
    }
  });

  AccelerationEstimate out{assemble(bins, t, d, sym, count, x_sum, s.n_min),
                           assemble(bins, t, d, mp, count, x_sum, s.n_min),
                           assemble(bins, t, d, pm, count, x_sum, s.n_min)};
  for (std::size_t j = 0; j < B; ++j)
    if (static_cast<double>(outside[j]) > kMaxExtrapolatedShare * static_cast<double>(count[j]))
      for (DerivativeField* f : {&out.symmetric, &out.minus_of_plus, &out.plus_of_minus})
        f->reliable[j] = 0;
  return out;
}

ResidualReport newton_nelson_residual(const DerivativeField& accel,
                                      const std::function<double(double)>& force) {
  ResidualReport out;
  out.bins = accel.bins;
  out.x_mean = accel.x_mean;
  out.count = accel.count;
  out.reliable = accel.reliable;
  out.stderr_ = accel.stderr_;
  const std::size_t B = accel.bins.count;
  out.residual.resize(B);
  double wsum = 0.0;
  for (std::size_t j = 0; j < B; ++j) {
    out.residual[j] = accel.estimate[j] - force(node_x(accel, j));
    if (accel.reliable[j]) wsum += static_cast<double>(accel.count[j]);
  }
  if (wsum > 0.0) {
    double r2 = 0.0, se2 = 0.0;
    for (std::size_t j = 0; j < B; ++j) {
      if (!accel.reliable[j]) continue;
      const double w = static_cast<double>(accel.count[j]) / wsum;
      r2 += w * out.residual[j] * out.residual[j];
      se2 += w * accel.stderr_[j] * accel.stderr_[j];
    }
    out.norm = std::sqrt(r2);
    out.pooled_stderr = std::sqrt(se2);
  } else {
    out.norm = out.pooled_stderr = kNaN;
  }
  out.norm_stderr = kNaN;
  if (has_replicates(accel) && wsum > 0.0) {
    std::vector<double> ref(B);
    for (std::size_t j = 0; j < B; ++j) ref[j] = force(node_x(accel, j));
    std::vector<double> theta(accel.groups);
    for (std::size_t r = 0; r < accel.groups; ++r)
      theta[r] = weighted_rms(accel, accel.replicates.data() + r * B, ref);
    out.norm_stderr = jackknife_stderr(theta);
  }
  return out;
}

FieldDistance weighted_distance(const DerivativeField& field,
                                const std::function<double(double)>& reference) {
  const auto r = newton_nelson_residual(field, reference);
  return FieldDistance{r.norm, r.pooled_stderr};
}

LineFit fit_line(const DerivativeField& field) {
  const std::size_t B = field.bins.count;
  double S = 0, Sx = 0, Sxx = 0;
  std::vector<double> w(B, 0.0);
  for (std::size_t j = 0; j < B; ++j) {
    if (!field.reliable[j] || !(field.stderr_[j] > 0.0)) continue;
    w[j] = 1.0 / (field.stderr_[j] * field.stderr_[j]);
    const double x = node_x(field, j);
    S += w[j];
    Sx += w[j] * x;
    Sxx += w[j] * x * x;
  }
  const double det = S * Sxx - Sx * Sx;
  if (!(det > 0.0)) throw InvalidArgument("fit_line: fewer than two usable bins");
  auto solve = [&](const double* y) {
    double Sy = 0, Sxy = 0;
    for (std::size_t j = 0; j < B; ++j) {
      if (w[j] == 0.0) continue;
      Sy += w[j] * y[j];
      Sxy += w[j] * node_x(field, j) * y[j];
    }
    return std::pair{(S * Sxy - Sx * Sy) / det, (Sxx * Sy - Sx * Sxy) / det};
  };
  LineFit f;
  std::tie(f.slope, f.intercept) = solve(field.estimate.data());
  if (has_replicates(field)) {
    std::vector<double> sl(field.groups), ic(field.groups);
    for (std::size_t r = 0; r < field.groups; ++r)
      std::tie(sl[r], ic[r]) = solve(field.replicates.data() + r * B);
    f.slope_stderr = jackknife_stderr(sl);
    f.intercept_stderr = jackknife_stderr(ic);
  } else {
    f.slope_stderr = std::sqrt(S / det);
    f.intercept_stderr = std::sqrt(Sxx / det);
  }
  return f;
}

}  // namespace stochmech::estimators
