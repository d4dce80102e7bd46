#include "stochmech/sde/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stochmech/errors.hpp"
#include "stochmech/sde/parallel.hpp"
#include "stochmech/simd/kernels.hpp"

namespace stochmech::sde {

FixedStart::FixedStart(std::vector<double> x, std::vector<double> v)
    : x_(std::move(x)), v_(std::move(v)) {
  if (!v_.empty() && v_.size() != x_.size())
    throw InvalidArgument("FixedStart: x and v sizes differ");
}

void FixedStart::sample(std::uint64_t, std::uint64_t, std::span<double> x,
                        std::span<double> v) const {
  std::copy(x_.begin(), x_.end(), x.begin());
  if (!v_.empty()) std::copy(v_.begin(), v_.end(), v.begin());
}

void ProcessModel::validate(const IntegratorConfig& cfg) const {
  cfg.validate();
  const std::size_t p = particles();
  if (p == 0) throw InvalidArgument("process: at least one particle required");
  if (!field || field->particles() != p) throw InvalidArgument("process: field dimension mismatch");
  if (!init || init->particles() != p) throw InvalidArgument("process: sampler dimension mismatch");
  for (double e : eps)
    if (!(e >= 0.0)) throw InvalidArgument("process: eps must be >= 0");
  if (driving == Driving::colored) {
    if (beta.size() != p) throw InvalidArgument("process: one beta per particle required");
    for (double b : beta) cfg.validate_with_beta(b);
  }
  if (!noise_channels.empty() && noise_channels.size() != p)
    throw InvalidArgument("process: one noise channel per particle required");
}

RecordPlan RecordPlan::every(std::size_t n_steps, std::size_t stride) {
  if (stride == 0) throw InvalidArgument("RecordPlan: stride must be >= 1");
  RecordPlan plan;
  for (std::size_t k = 0; k <= n_steps; k += stride) plan.steps.push_back(k);
  if (plan.steps.back() != n_steps) plan.steps.push_back(n_steps);
  return plan;
}

RecordPlan RecordPlan::at_times(const IntegratorConfig& cfg, std::span<const double> times) {
  RecordPlan plan;
  for (double t : times) {
    const double k = std::round((t - cfg.t0) / cfg.dt);
    if (k < 0.0 || k > static_cast<double>(cfg.n_steps))
      throw InvalidArgument("RecordPlan: time outside the integration horizon");
    plan.steps.push_back(static_cast<std::size_t>(k));
  }
  std::sort(plan.steps.begin(), plan.steps.end());
  plan.steps.erase(std::unique(plan.steps.begin(), plan.steps.end()), plan.steps.end());
  return plan;
}

std::size_t TrajectoryEnsemble::time_index(double t) const {
  const double spacing = times.size() > 1 ? std::abs(times[1] - times[0]) : 1.0;
  const double tol = 1e-9 * std::max(spacing, 1e-12) + 1e-12 * std::abs(t);
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) <= tol) return i;
  // Recorded times are t0 + k·dt; allow for the rounding in that product.
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return i;
  throw InvalidArgument("ensemble: time " + std::to_string(t) + " was not recorded");
}

std::span<const double> TrajectoryEnsemble::positions(std::size_t rec, std::size_t p) const {
  return {x.data() + (rec * n_particles + p) * n_traj, n_traj};
}

std::span<const double> TrajectoryEnsemble::velocities(std::size_t rec, std::size_t p) const {
  if (v.empty()) throw InvalidArgument("ensemble: velocities were not recorded");
  return {v.data() + (rec * n_particles + p) * n_traj, n_traj};
}

std::span<const double> TrajectoryEnsemble::noise(std::size_t rec, std::size_t p) const {
  if (a.empty()) throw InvalidArgument("ensemble: colored noise was not recorded");
  return {a.data() + (rec * n_particles + p) * n_traj, n_traj};
}

std::vector<double> TrajectoryEnsemble::valid_positions(std::size_t rec, std::size_t p) const {
  const auto all = positions(rec, p);
  std::vector<double> out;
  out.reserve(n_traj);
  for (std::size_t i = 0; i < n_traj; ++i)
    if (valid[i]) out.push_back(all[i]);
  return out;
}

namespace {

struct Block {
  std::size_t begin;
  std::size_t size;
};

void run_block(const ProcessModel& model, const IntegratorConfig& cfg, const RecordPlan& plan,
               std::uint64_t seed, Block blk, TrajectoryEnsemble& ens) {
  const std::size_t P = model.particles();
  const std::size_t B = blk.size;
  const auto& k = simd::kernels();
  const bool phase = model.dynamics == Dynamics::phase_space;
  const bool colored = model.driving == Driving::colored;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> x(P * B), v(P * B, 0.0), a(P * B, 0.0), f(P * B), z(B), dw(B);
  std::vector<const double*> xp(P);
  std::vector<double*> xw(P), fp(P);
  for (std::size_t p = 0; p < P; ++p) {
    xp[p] = x.data() + p * B;
    xw[p] = x.data() + p * B;
    fp[p] = f.data() + p * B;
  }
  std::vector<std::uint8_t> alive(B, 1);

  // Normals come in Box-Muller pairs; draw k of a stream uses block k/2, cosine
  // half first. Same sequence as NoiseStream::normal.
  std::vector<std::uint32_t> chan(P);
  for (std::size_t p = 0; p < P; ++p)
    chan[p] = model.noise_channels.empty() ? channel::dynamics(static_cast<std::uint32_t>(p))
                                           : model.noise_channels[p];
  std::vector<double> z_sin(P * B);

  std::vector<OuStep> ou(P, OuStep{0.0, 0.0});
  if (colored)
    for (std::size_t p = 0; p < P; ++p) ou[p] = ou_step(model.beta[p], cfg.dt, cfg.ou_scheme);

  {
    std::vector<double> xs(P), vs(P, 0.0);
    for (std::size_t i = 0; i < B; ++i) {
      std::fill(vs.begin(), vs.end(), 0.0);
      model.init->sample(seed, blk.begin + i, xs, vs);
      for (std::size_t p = 0; p < P; ++p) {
        x[p * B + i] = xs[p];
        v[p * B + i] = vs[p];
        if (colored && model.stationary_colored_start) {
          NoiseStream s(seed, blk.begin + i, channel::colored_start(static_cast<std::uint32_t>(p)));
          a[p * B + i] = std::sqrt(ou_stationary_variance(model.beta[p])) * s.normal();
        }
      }
    }
  }

  const std::size_t n = ens.n_traj;
  auto record = [&](std::size_t rec) {
    for (std::size_t p = 0; p < P; ++p) {
      const std::size_t off = (rec * P + p) * n + blk.begin;
      for (std::size_t i = 0; i < B; ++i) {
        const bool ok = alive[i] != 0;
        ens.x[off + i] = ok ? x[p * B + i] : nan;
        if (phase) ens.v[off + i] = ok ? v[p * B + i] : nan;
        if (colored) ens.a[off + i] = ok ? a[p * B + i] : nan;
      }
    }
  };

  auto check = [&](std::size_t step) {
    (void)step;
    for (std::size_t i = 0; i < B; ++i) {
      if (!alive[i]) continue;
      bool ok = true;
      for (std::size_t p = 0; p < P && ok; ++p) {
        const double xi = x[p * B + i];
        ok = std::isfinite(xi) && xi >= model.lower && xi <= model.upper &&
             std::isfinite(v[p * B + i]);
      }
      if (!ok) {
        alive[i] = 0;
        ens.valid[blk.begin + i] = 0;
        for (std::size_t p = 0; p < P; ++p) {
          x[p * B + i] = 0.0;
          v[p * B + i] = 0.0;
          a[p * B + i] = 0.0;
        }
      }
    }
  };

  check(0);
  std::size_t next_rec = 0;
  if (next_rec < plan.steps.size() && plan.steps[next_rec] == 0) record(next_rec++);

  const double sqrt_dt = std::sqrt(cfg.dt);
  for (std::size_t step = 0; step < cfg.n_steps; ++step) {
    const double t = cfg.time_at(step);
    model.field->evaluate(t, xp, fp, B);
    for (std::size_t p = 0; p < P; ++p) {
      std::span<double> xs{x.data() + p * B, B};
      std::span<double> vs{v.data() + p * B, B};
      std::span<double> as{a.data() + p * B, B};
      std::span<const double> fs{f.data() + p * B, B};
      std::span<double> zs{z_sin.data() + p * B, B};
      if (step % 2 == 0)
        k.philox_normals(seed, blk.begin, chan[p], step / 2, z, zs);
      else
        std::copy(zs.begin(), zs.end(), z.begin());
      const double eps = model.eps[p];
      if (colored) {
        k.euler_update(xs, phase ? std::span<const double>(vs) : fs, as, cfg.dt, eps * cfg.dt);
        k.linear_recurrence(as, z, ou[p].decay, ou[p].scale);
      } else {
        k.scale(dw, z, sqrt_dt);
        k.euler_update(xs, phase ? std::span<const double>(vs) : fs, dw, cfg.dt, eps);
      }
      if (phase) k.axpy(vs, fs, cfg.dt);
    }
    check(step + 1);
    if (next_rec < plan.steps.size() && plan.steps[next_rec] == step + 1) record(next_rec++);
  }
}

}  // namespace

TrajectoryEnsemble run_ensemble(const ProcessModel& model, std::size_t n_traj, std::uint64_t seed,
                                const IntegratorConfig& cfg, const RecordPlan& plan,
                                const RunOptions& options) {
  if (n_traj == 0) throw InvalidArgument("run_ensemble: n_traj must be >= 1");
  model.validate(cfg);
  if (plan.steps.empty()) throw InvalidArgument("run_ensemble: empty record plan");
  if (!std::is_sorted(plan.steps.begin(), plan.steps.end()) || plan.steps.back() > cfg.n_steps)
    throw InvalidArgument("run_ensemble: record steps must be sorted and within n_steps");

  const std::size_t P = model.particles();
  TrajectoryEnsemble ens;
  ens.n_traj = n_traj;
  ens.n_particles = P;
  ens.seed = seed;
  for (std::size_t s : plan.steps) ens.times.push_back(cfg.time_at(s));
  const std::size_t cells = plan.steps.size() * P * n_traj;
  ens.x.assign(cells, 0.0);
  if (model.dynamics == Dynamics::phase_space) ens.v.assign(cells, 0.0);
  if (model.driving == Driving::colored) ens.a.assign(cells, 0.0);
  ens.valid.assign(n_traj, 1);

  const std::size_t block = std::max<std::size_t>(1, options.block);
  const std::size_t n_blocks = (n_traj + block - 1) / block;
  parallel_for(n_blocks, options.threads, [&](std::size_t b) {
    const std::size_t begin = b * block;
    run_block(model, cfg, plan, seed, Block{begin, std::min(block, n_traj - begin)}, ens);
  });

  for (std::size_t i = 0; i < n_traj; ++i) {
    if (!ens.valid[i]) {
      ++ens.invalid_count;
      ens.first_invalid = std::min(ens.first_invalid, i);
    }
  }
  return ens;
}

LinearField::LinearField(std::size_t particles, MatrixFn matrix, OffsetFn offset)
    : particles_(particles), matrix_(std::move(matrix)), offset_(std::move(offset)) {}

std::shared_ptr<LinearField> LinearField::constant(std::vector<double> matrix,
                                                   std::vector<double> offset) {
  const auto p = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(matrix.size()))));
  if (p * p != matrix.size()) throw InvalidArgument("LinearField: matrix must be square");
  if (!offset.empty() && offset.size() != p) throw InvalidArgument("LinearField: offset size");
  OffsetFn off;
  if (!offset.empty()) off = [offset](double) { return offset; };
  return std::make_shared<LinearField>(p, [matrix](double) { return matrix; }, off);
}

void LinearField::evaluate(double t, std::span<const double* const> x,
                           std::span<double* const> out, std::size_t n) const {
  const auto& k = simd::kernels();
  const std::vector<double> m = matrix_(t);
  const std::vector<double> c = offset_ ? offset_(t) : std::vector<double>{};
  for (std::size_t p = 0; p < particles_; ++p) {
    std::span<double> o{out[p], n};
    k.fill(o, c.empty() ? 0.0 : c[p]);
    for (std::size_t q = 0; q < particles_; ++q) {
      const double coef = m[p * particles_ + q];
      if (coef != 0.0) k.axpy(o, std::span<const double>{x[q], n}, coef);
    }
  }
}

CallableField::CallableField(std::size_t particles, Fn fn)
    : particles_(particles), fn_(std::move(fn)) {}

std::shared_ptr<CallableField> CallableField::scalar(std::function<double(double, double)> f) {
  return std::make_shared<CallableField>(
      1, [f = std::move(f)](double t, std::span<const double> x, std::span<double> out) {
        out[0] = f(x[0], t);
      });
}

void CallableField::evaluate(double t, std::span<const double* const> x,
                             std::span<double* const> out, std::size_t n) const {
  std::vector<double> xi(particles_), oi(particles_);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < particles_; ++p) xi[p] = x[p][i];
    fn_(t, xi, oi);
    for (std::size_t p = 0; p < particles_; ++p) out[p][i] = oi[p];
  }
}

}  // namespace stochmech::sde
