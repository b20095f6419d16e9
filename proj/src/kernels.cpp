#include "swept/kernels.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace swept {

namespace {

void check_arity(const Neighborhood& nbhd, std::span<double> out, std::size_t in, std::size_t expected_out,
                 std::string_view kernel) {
  if (nbhd.arity() != in || out.size() != expected_out) {
    throw ContractError(std::string(kernel) + ": arity mismatch (in " + std::to_string(nbhd.arity()) + ", out " +
                        std::to_string(out.size()) + ")");
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

double hashed_uniform(std::uint64_t seed, std::int64_t gi, std::int64_t gj, std::uint64_t component) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(gi));
  h = splitmix64(h ^ static_cast<std::uint64_t>(gj));
  h = splitmix64(h ^ component);
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

// ---------------------------------------------------------------------------

IdentityKernel::IdentityKernel(std::size_t arity) : arity_(arity) {
  if (arity == 0) throw ValidationError("arity", "must be positive");
}

void IdentityKernel::apply(std::int64_t, const Neighborhood& nbhd, std::span<double> out) const {
  check_arity(nbhd, out, arity_, arity_, name());
  const auto c = nbhd.center();
  std::copy(c.begin(), c.end(), out.begin());
}

IncrementKernel::IncrementKernel(std::size_t arity) : arity_(arity) {
  if (arity == 0) throw ValidationError("arity", "must be positive");
}

void IncrementKernel::apply(std::int64_t, const Neighborhood& nbhd, std::span<double> out) const {
  check_arity(nbhd, out, arity_, arity_, name());
  const auto c = nbhd.center();
  for (std::size_t q = 0; q < arity_; ++q) out[q] = c[q] + 1.0;
}

void Average5Kernel::apply(std::int64_t, const Neighborhood& nbhd, std::span<double> out) const {
  check_arity(nbhd, out, 1, 1, name());
  out[0] = (nbhd.center()[0] + nbhd.west()[0] + nbhd.east()[0] + nbhd.north()[0] + nbhd.south()[0]) / 5.0;
}

LinearKernel::LinearKernel(std::uint64_t seed, bool symmetric) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& w : w_) w = dist(rng);
  if (symmetric) {
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = dj + 1; di <= 1; ++di) {
        w_[static_cast<std::size_t>((di + 1) * 3 + (dj + 1))] = w_[static_cast<std::size_t>((dj + 1) * 3 + (di + 1))];
      }
    }
  }
  double total = 0.0;
  for (double w : w_) total += std::abs(w);
  for (double& w : w_) w /= total;
}

void LinearKernel::apply(std::int64_t, const Neighborhood& nbhd, std::span<double> out) const {
  check_arity(nbhd, out, 1, 1, name());
  double acc = 0.0;
  for (int dj = -1; dj <= 1; ++dj) {
    for (int di = -1; di <= 1; ++di) acc += w_[static_cast<std::size_t>((dj + 1) * 3 + (di + 1))] * nbhd.at(di, dj)[0];
  }
  out[0] = acc;
}

// ---------------------------------------------------------------------------

WaveKernel::WaveKernel(WaveConfig config) : config_(config) {
  if (!(config.cfl > 0.0) || config.cfl > 1.0 / std::numbers::sqrt2) {
    throw ValidationError("cfl", "must lie in (0, 1/sqrt(2)] for stability");
  }
}

void WaveKernel::apply(std::int64_t, const Neighborhood& nbhd, std::span<double> out) const {
  check_arity(nbhd, out, 2, 2, name());
  const double u = nbhd.center()[0];
  const double u_prev = nbhd.center()[1];
  const double lap = nbhd.east()[0] + nbhd.west()[0] + nbhd.north()[0] + nbhd.south()[0] - 4.0 * u;
  out[0] = 2.0 * u - u_prev + config_.cfl * config_.cfl * lap;
  out[1] = u;
}

void WideStencilKernel::apply(std::int64_t step, const Neighborhood& nbhd, std::span<double> out) const {
  if (step % 2 == 0) {
    check_arity(nbhd, out, 1, 5, name());
    out[0] = nbhd.center()[0];
    out[1] = nbhd.west()[0];
    out[2] = nbhd.east()[0];
    out[3] = nbhd.north()[0];
    out[4] = nbhd.south()[0];
  } else {
    check_arity(nbhd, out, 5, 1, name());
    out[0] = nbhd.west()[1] + nbhd.east()[2] + nbhd.north()[3] + nbhd.south()[4] - 4.0 * nbhd.center()[0];
  }
}

// ---------------------------------------------------------------------------

void validate(const EulerConfig& c) {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(field, "must be positive and finite");
  };
  positive(c.lx, "lx");
  positive(c.ly, "ly");
  if (c.nx <= 0) throw ValidationError("nx", "must be positive");
  if (c.ny <= 0) throw ValidationError("ny", "must be positive");
  positive(c.dt, "dt");
  positive(c.rho, "rho");
  positive(c.p, "p");
  if (!(c.gamma > 1.0)) throw ValidationError("gamma", "must exceed 1");
  if (!(c.mach >= 0.0) || !std::isfinite(c.mach)) throw ValidationError("mach", "must be non-negative");
  if (!(c.pulse > -1.0 && c.pulse < 1.0)) throw ValidationError("pulse", "must lie in (-1, 1)");
  if (c.obstacle) {
    positive(c.sigma, "sigma");
    positive(c.eta, "eta");
  }
}

EulerKernel::EulerKernel(EulerConfig config) : config_(config) { validate(config_); }

namespace {

struct Primitive {
  double rho, mx, my, e;  // conservative
  double u, v, p, h;      // velocity, pressure, total enthalpy
};

Primitive primitive(std::span<const double> q, double gamma) {
  Primitive s{q[0], q[1], q[2], q[3], 0, 0, 0, 0};
  if (!(s.rho > 0.0)) throw NumericError("non-physical state: density " + std::to_string(s.rho));
  s.u = s.mx / s.rho;
  s.v = s.my / s.rho;
  s.p = (gamma - 1.0) * (s.e - 0.5 * s.rho * (s.u * s.u + s.v * s.v));
  if (!(s.p > 0.0)) throw NumericError("non-physical state: pressure " + std::to_string(s.p));
  s.h = (s.e + s.p) / s.rho;
  return s;
}

// Skew-symmetric convective derivative along one axis for quantity phi carried
// by mass flux m: 1/2 d(m phi) + 1/2 (phi d m + m d phi), central differences.
double skew(double m_lo, double m_c, double m_hi, double phi_lo, double phi_c, double phi_hi, double inv2h) {
  const double d_mphi = (m_hi * phi_hi - m_lo * phi_lo) * inv2h;
  const double d_m = (m_hi - m_lo) * inv2h;
  const double d_phi = (phi_hi - phi_lo) * inv2h;
  return 0.5 * d_mphi + 0.5 * (phi_c * d_m + m_c * d_phi);
}

}  // namespace

void EulerKernel::apply(std::int64_t step, const Neighborhood& nbhd, std::span<double> out) const {
  const std::size_t a = arity(step);
  check_arity(nbhd, out, a, a, name());
  const double g = config_.gamma;
  const auto in = nbhd.center();
  const Primitive c = primitive(in, g);
  const Primitive w = primitive(nbhd.west(), g);
  const Primitive e = primitive(nbhd.east(), g);
  const Primitive n = primitive(nbhd.north(), g);
  const Primitive s = primitive(nbhd.south(), g);
  const double ix = 0.5 / config_.dx();
  const double iy = 0.5 / config_.dy();

  std::array<double, 4> k{};
  k[0] = -((e.mx - w.mx) * ix + (s.my - n.my) * iy);
  k[1] = -(skew(w.mx, c.mx, e.mx, w.u, c.u, e.u, ix) + skew(n.my, c.my, s.my, n.u, c.u, s.u, iy) +
           (e.p - w.p) * ix);
  k[2] = -(skew(w.mx, c.mx, e.mx, w.v, c.v, e.v, ix) + skew(n.my, c.my, s.my, n.v, c.v, s.v, iy) +
           (s.p - n.p) * iy);
  k[3] = -(skew(w.mx, c.mx, e.mx, w.h, c.h, e.h, ix) + skew(n.my, c.my, s.my, n.h, c.h, s.h, iy));
  if (config_.obstacle) {
    const double chi = in[kMask] / config_.eta;
    k[1] -= chi * c.mx;
    k[2] -= chi * c.my;
  }

  const double dt = config_.dt;
  switch (static_cast<int>(((step % 4) + 4) % 4)) {
    case 0:
      for (std::size_t q = 0; q < 4; ++q) {
        out[kBase + q] = in[q];
        out[kAcc + q] = k[q];
        out[q] = in[q] + 0.5 * dt * k[q];
      }
      break;
    case 1:
      for (std::size_t q = 0; q < 4; ++q) {
        out[kBase + q] = in[kBase + q];
        out[kAcc + q] = in[kAcc + q] + 2.0 * k[q];
        out[q] = in[kBase + q] + 0.5 * dt * k[q];
      }
      break;
    case 2:
      for (std::size_t q = 0; q < 4; ++q) {
        out[kBase + q] = in[kBase + q];
        out[kAcc + q] = in[kAcc + q] + 2.0 * k[q];
        out[q] = in[kBase + q] + dt * k[q];
      }
      break;
    default:
      for (std::size_t q = 0; q < 4; ++q) {
        out[q] = in[kBase + q] + dt / 6.0 * (in[kAcc + q] + k[q]);
        out[kBase + q] = out[q];
        out[kAcc + q] = 0.0;
      }
      break;
  }
  if (config_.obstacle) out[kMask] = in[kMask];
}

StateVector EulerKernel::initial_state(std::int64_t gi, std::int64_t gj) const {
  const EulerConfig& cf = config_;
  const double x = (static_cast<double>(gi) + 0.5) * cf.dx() - 0.5 * cf.lx;
  const double y = (static_cast<double>(gj) + 0.5) * cf.dy() - 0.5 * cf.ly;
  const double width = 0.1 * cf.ly;
  const double bump = cf.pulse * std::exp(-(x * x + y * y) / (width * width));
  const double rho = cf.rho * (1.0 + bump);
  const double p = cf.p * (1.0 + bump);
  const double u = cf.mach * std::sqrt(cf.gamma * cf.p / cf.rho);
  StateVector q(arity(0), 0.0);
  q[0] = rho;
  q[1] = rho * u;
  q[2] = 0.0;
  q[3] = p / (cf.gamma - 1.0) + 0.5 * rho * u * u;
  for (std::size_t i = 0; i < 4; ++i) q[kBase + i] = q[i];
  if (cf.obstacle) {
    const double yo = y + 0.25 * cf.ly / cf.nx;
    q[kMask] = std::exp(-cf.sigma * std::pow(x * x + yo * yo, 8));
  }
  return q;
}

// ---------------------------------------------------------------------------
// Registry

const std::vector<std::string>& kernel_names() {
  static const std::vector<std::string> names{"identity", "increment", "average5", "linear",
                                              "wave",     "wide-stencil", "euler"};
  return names;
}

namespace {

InitFn generic_init(const std::string& init, const Topology& topo, std::size_t arity, std::uint64_t seed) {
  const auto width = static_cast<std::int64_t>(topo.width());
  if (init == "zeros") return [arity](std::int64_t, std::int64_t) { return StateVector(arity, 0.0); };
  if (init == "ones") return [arity](std::int64_t, std::int64_t) { return StateVector(arity, 1.0); };
  if (init == "random") {
    return [arity, seed](std::int64_t gi, std::int64_t gj) {
      StateVector v(arity);
      for (std::size_t q = 0; q < arity; ++q) v[q] = hashed_uniform(seed, gi, gj, q);
      return v;
    };
  }
  if (init == "index") {
    return [arity, width](std::int64_t gi, std::int64_t gj) {
      return StateVector(arity, static_cast<double>(gj * width + gi));
    };
  }
  if (init == "delta") {
    return [arity](std::int64_t gi, std::int64_t gj) { return StateVector(arity, gi == 0 && gj == 0 ? 1.0 : 0.0); };
  }
  throw ValidationError("init", "unknown initial condition '" + init + "'");
}

InitFn wave_init(const std::string& init, const Topology& topo, const WaveConfig& cfg, std::uint64_t seed) {
  const double w = topo.width();
  const double h = topo.height();
  if (init == "default" || init == "pulse") {
    const double sigma = std::min(w, h) / 8.0;
    return [w, h, sigma](std::int64_t gi, std::int64_t gj) {
      const double dx = static_cast<double>(gi) - 0.5 * w;
      const double dy = static_cast<double>(gj) - 0.5 * h;
      const double u = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      return StateVector{u, u};
    };
  }
  if (init == "standing") {
    // Exact previous level of the standing wave sin(kx x) sin(ky y) cos(omega t)
    // with unit wave speed, unit spacing and dt = cfl.
    const double kx = 2.0 * std::numbers::pi / w;
    const double ky = 2.0 * std::numbers::pi / h;
    const double damp = std::cos(std::sqrt(kx * kx + ky * ky) * cfg.cfl);
    return [kx, ky, damp](std::int64_t gi, std::int64_t gj) {
      const double u = std::sin(kx * static_cast<double>(gi)) * std::sin(ky * static_cast<double>(gj));
      return StateVector{u, u * damp};
    };
  }
  if (init == "random") {
    return [seed](std::int64_t gi, std::int64_t gj) {
      const double u = hashed_uniform(seed, gi, gj);
      return StateVector{u, u};
    };
  }
  return generic_init(init, topo, 2, seed);
}

}  // namespace

KernelSetup make_kernel(const std::string& name, const Topology& topo, const KernelParams& params) {
  const std::string& init = params.init;
  if (name == "identity") {
    return {std::make_shared<IdentityKernel>(), generic_init(init == "default" ? "random" : init, topo, 1, params.seed)};
  }
  if (name == "increment") {
    return {std::make_shared<IncrementKernel>(), generic_init(init == "default" ? "ones" : init, topo, 1, params.seed)};
  }
  if (name == "average5") {
    return {std::make_shared<Average5Kernel>(), generic_init(init == "default" ? "random" : init, topo, 1, params.seed)};
  }
  if (name == "linear") {
    return {std::make_shared<LinearKernel>(params.seed, params.symmetric),
            generic_init(init == "default" ? "random" : init, topo, 1, params.seed)};
  }
  if (name == "wave") {
    return {std::make_shared<WaveKernel>(params.wave), wave_init(init, topo, params.wave, params.seed)};
  }
  if (name == "wide-stencil") {
    return {std::make_shared<WideStencilKernel>(),
            generic_init(init == "default" ? "random" : init, topo, 1, params.seed)};
  }
  if (name == "euler") {
    if (init != "default" && init != "pulse") {
      throw ValidationError("init", "euler supports only the free-stream initial condition");
    }
    EulerConfig cfg = params.euler;
    cfg.nx = topo.width();
    cfg.ny = topo.height();
    auto kernel = std::make_shared<EulerKernel>(cfg);
    return {kernel, [kernel](std::int64_t gi, std::int64_t gj) { return kernel->initial_state(gi, gj); }};
  }
  throw ValidationError("kernel", "unknown kernel '" + name + "'");
}

}  // namespace swept
