#pragma once

// Stencil programs and their initial conditions.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "swept/grid.hpp"

namespace swept {

/// Copies the center state.
class IdentityKernel final : public StencilProgram {
 public:
  explicit IdentityKernel(std::size_t arity = 1);
  std::string_view name() const override { return "identity"; }
  std::size_t arity(std::int64_t) const override { return arity_; }
  void apply(std::int64_t step, const Neighborhood& nbhd, std::span<double> out) const override;

 private:
  std::size_t arity_;
};

/// u + 1 on every component.
class IncrementKernel final : public StencilProgram {
 public:
  explicit IncrementKernel(std::size_t arity = 1);
  std::string_view name() const override { return "increment"; }
  std::size_t arity(std::int64_t) const override { return arity_; }
  void apply(std::int64_t step, const Neighborhood& nbhd, std::span<double> out) const override;

 private:
  std::size_t arity_;
};

/// Mean of the center and its four face neighbours.
class Average5Kernel final : public StencilProgram {
 public:
  std::string_view name() const override { return "average5"; }
  std::size_t arity(std::int64_t) const override { return 1; }
  void apply(std::int64_t step, const Neighborhood& nbhd, std::span<double> out) const override;
};

/// Seeded random 3x3 weights with sum of magnitudes 1. When `symmetric`, the
/// weight at (di, dj) equals the weight at (dj, di).
class LinearKernel final : public StencilProgram {
 public:
  LinearKernel(std::uint64_t seed, bool symmetric);
  std::string_view name() const override { return "linear"; }
  std::size_t arity(std::int64_t) const override { return 1; }
  void apply(std::int64_t step, const Neighborhood& nbhd, std::span<double> out) const override;

  /// Indexed (dj+1)*3 + (di+1).
  const std::array<double, 9>& weights() const noexcept { return w_; }

 private:
  std::array<double, 9> w_{};
};

struct WaveConfig {
  double cfl = 0.3;
};

/// Leapfrog second-order wave equation on unit spacing. State (u, u_prev).
class WaveKernel final : public StencilProgram {
 public:
  explicit WaveKernel(WaveConfig config = {});
  std::string_view name() const override { return "wave"; }
  std::size_t arity(std::int64_t) const override { return 2; }
  void apply(std::int64_t step, const Neighborhood& nbhd, std::span<double> out) const override;
  const WaveConfig& config() const noexcept { return config_; }

 private:
  WaveConfig config_;
};

/// A 5-wide cross stencil u(i-2)+u(i+2)+u(j-2)+u(j+2)-4u split into two 3x3
/// sub-steps. Even steps push [u, uW, uE, uN, uS]; odd steps combine them.
class WideStencilKernel final : public StencilProgram {
 public:
  std::string_view name() const override { return "wide-stencil"; }
  std::size_t arity(std::int64_t step) const override { return step % 2 == 0 ? 1 : 5; }
  void apply(std::int64_t step, const Neighborhood& nbhd, std::span<double> out) const override;
  int period() const override { return 2; }
};

struct EulerConfig {
  double lx = 50.0;
  double ly = 25.0;
  int nx = 1024;
  int ny = 512;
  double dt = 1e-6;
  double rho = 1.084;
  double mach = 0.2;
  double p = 101325.0;
  double gamma = 1.4;
  /// Relative amplitude of a centered Gaussian density/pressure pulse.
  double pulse = 0.0;
  /// Brinkman penalization of a body centered in the domain.
  bool obstacle = false;
  double sigma = 1.0;
  double eta = 1e-4;

  double dx() const { return lx / nx; }
  double dy() const { return ly / ny; }
};

/// Throws ValidationError naming the offending field.
void validate(const EulerConfig& config);

/// Compressible Euler equations, central differences with skew-symmetric
/// convective terms, classical RK4 with one stage per sub-step.
///
/// State layout: [0,4) conservative (rho, rho*u, rho*v, E), [4,8) stage base,
/// [8,12) stage accumulator, then the obstacle mask when enabled.
class EulerKernel final : public StencilProgram {
 public:
  static constexpr std::size_t kBase = 4;
  static constexpr std::size_t kAcc = 8;
  static constexpr std::size_t kMask = 12;

  explicit EulerKernel(EulerConfig config);
  std::string_view name() const override { return "euler"; }
  std::size_t arity(std::int64_t) const override { return config_.obstacle ? 13 : 12; }
  void apply(std::int64_t step, const Neighborhood& nbhd, std::span<double> out) const override;
  int period() const override { return 4; }
  const EulerConfig& config() const noexcept { return config_; }

  /// Initial state at global point (gi, gj): free stream plus the optional
  /// pulse, stage registers primed, mask filled.
  StateVector initial_state(std::int64_t gi, std::int64_t gj) const;

 private:
  EulerConfig config_;
};

// ---------------------------------------------------------------------------
// Registry

struct KernelParams {
  std::uint64_t seed = 1;
  /// default | zeros | ones | random | index | delta | pulse | standing
  std::string init = "default";
  bool symmetric = false;
  WaveConfig wave;
  EulerConfig euler;
};

struct KernelSetup {
  std::shared_ptr<const StencilProgram> program;
  InitFn init;
};

const std::vector<std::string>& kernel_names();

/// Builds a registered kernel and its initial condition for `topo`. Euler's
/// nx/ny are taken from the topology's global size.
KernelSetup make_kernel(const std::string& name, const Topology& topo, const KernelParams& params = {});

/// Deterministic value in [-1, 1) for a global point.
double hashed_uniform(std::uint64_t seed, std::int64_t gi, std::int64_t gj, std::uint64_t component = 0);

}  // namespace swept
