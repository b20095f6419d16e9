#include "swept/components.hpp"

#include <algorithm>
#include <string>

namespace swept {

namespace {

// Half-open rectangle [i0, i1) x [j0, j1) in a component's frame. Slabs are
// scanned row-major over their rectangle.
struct Rect {
  int i0;
  int i1;
  int j0;
  int j1;

  std::size_t count() const {
    return i1 <= i0 || j1 <= j0 ? 0 : static_cast<std::size_t>(i1 - i0) * static_cast<std::size_t>(j1 - j0);
  }
};

// (side x side) window of state vectors whose lower corner sits at (i0, j0).
class Scratch {
 public:
  Scratch(int i0, int j0, int side) : i0_(i0), j0_(j0), side_(side) {}

  void reset(std::size_t arity) {
    if (arity == arity_) return;
    arity_ = arity;
    buf_.assign(static_cast<std::size_t>(side_) * static_cast<std::size_t>(side_) * arity, 0.0);
  }

  std::size_t arity() const noexcept { return arity_; }

  double* at(int i, int j) { return buf_.data() + offset(i, j); }
  const double* at(int i, int j) const { return buf_.data() + offset(i, j); }

 private:
  std::size_t offset(int i, int j) const {
    return (static_cast<std::size_t>(j - j0_) * static_cast<std::size_t>(side_) + static_cast<std::size_t>(i - i0_)) *
           arity_;
  }

  int i0_;
  int j0_;
  int side_;
  std::size_t arity_ = 0;
  std::vector<double> buf_;
};

Slab extract(const Scratch& d, const Rect& r) {
  Slab slab;
  slab.arity = d.arity();
  slab.values.reserve(r.count() * slab.arity);
  for (int j = r.j0; j < r.j1; ++j) {
    for (int i = r.i0; i < r.i1; ++i) {
      const double* p = d.at(i, j);
      slab.values.insert(slab.values.end(), p, p + slab.arity);
    }
  }
  return slab;
}

void place(Scratch& d, const Rect& r, const Slab& slab) {
  std::size_t idx = 0;
  for (int j = r.j0; j < r.j1; ++j) {
    for (int i = r.i0; i < r.i1; ++i) {
      std::copy_n(slab.values.data() + idx * slab.arity, slab.arity, d.at(i, j));
      ++idx;
    }
  }
}

// One level advance: fills `r` in `u` from the neighborhoods in `d`.
void advance(const StencilProgram& prog, std::int64_t step, int level, const Scratch& d, Scratch& u,
             const Rect& r) {
  u.reset(prog.arity(step + 1));
  const std::size_t out_arity = u.arity();
  for (int j = r.j0; j < r.j1; ++j) {
    for (int i = r.i0; i < r.i1; ++i) {
      const std::array<const double*, 9> pts{
          d.at(i - 1, j - 1), d.at(i, j - 1), d.at(i + 1, j - 1),
          d.at(i - 1, j),     d.at(i, j),     d.at(i + 1, j),
          d.at(i - 1, j + 1), d.at(i, j + 1), d.at(i + 1, j + 1),
      };
      apply_checked(prog, step, Neighborhood(pts, d.arity()), std::span<double>(u.at(i, j), out_arity),
                    {step, level, i, j});
    }
  }
}

Panel make_output(Side side, Orientation orientation, int n, std::int64_t start_step) {
  Panel p;
  p.side = side;
  p.orientation = orientation;
  p.n = n;
  p.start_step = start_step;
  p.levels.reserve(static_cast<std::size_t>(n / 2));
  return p;
}

void check_input(const StencilProgram& prog, const Panel& p, const char* role, Side side,
                 Orientation orientation) {
  const std::string who = std::string(role) + " input";
  if (p.side != side || p.orientation != orientation) {
    throw ContractError(who + " must be a " + to_string(orientation) + " " + to_string(side) + " panel, got " +
                        to_string(p.orientation) + " " + to_string(p.side));
  }
  check_panel_shape(p);
  for (std::size_t k = 0; k < p.levels.size(); ++k) {
    const std::size_t expected = prog.arity(p.start_step + static_cast<std::int64_t>(k));
    if (p.levels[k].arity != expected) {
      throw ContractError(who + " level " + std::to_string(k) + " has arity " + std::to_string(p.levels[k].arity) +
                          ", kernel expects " + std::to_string(expected));
    }
  }
}

void check_pair(const Panel& a, const Panel& b) {
  if (a.n != b.n) throw ContractError("panel side lengths differ");
  if (a.start_step != b.start_step) throw ContractError("panel start steps differ");
}

}  // namespace

PyramidPanels upward_pyramid(const StencilProgram& prog, const Grid& base) {
  const int n = base.n();
  const std::int64_t t0 = base.step();
  if (base.arity() != prog.arity(t0)) {
    throw ContractError("base arity " + std::to_string(base.arity()) + " does not match kernel arity " +
                        std::to_string(prog.arity(t0)) + " at step " + std::to_string(t0));
  }

  PyramidPanels out{make_output(Side::North, Orientation::Upward, n, t0),
                    make_output(Side::South, Orientation::Upward, n, t0),
                    make_output(Side::West, Orientation::Upward, n, t0),
                    make_output(Side::East, Orientation::Upward, n, t0)};

  Scratch d(-1, -1, n + 2);
  Scratch u(-1, -1, n + 2);
  d.reset(base.arity());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const auto p = base.point(i, j);
      std::copy(p.begin(), p.end(), d.at(i, j));
    }
  }

  const int levels = n / 2;
  for (int k = 0; k < levels; ++k) {
    out.north.levels.push_back(extract(d, {k, n - k, k, k + 2}));
    out.south.levels.push_back(extract(d, {k, n - k, n - k - 2, n - k}));
    out.west.levels.push_back(extract(d, {k, k + 2, k, n - k}));
    out.east.levels.push_back(extract(d, {n - k - 2, n - k, k, n - k}));
    if (k + 1 < levels) {
      advance(prog, t0 + k, k, d, u, {k + 1, n - k - 1, k + 1, n - k - 1});
      std::swap(d, u);
    }
  }
  return out;
}

// Frame: the northern pyramid's block is [0,n)^2, the southern one [0,n) x [n,2n).
LongitudinalPanels longitudinal_bridge(const StencilProgram& prog, const Panel& north, const Panel& south) {
  check_pair(north, south);
  check_input(prog, north, "north", Side::South, Orientation::Upward);
  check_input(prog, south, "south", Side::North, Orientation::Upward);
  const int n = north.n;
  const std::int64_t t0 = north.start_step;

  LongitudinalPanels out{make_output(Side::West, Orientation::Downward, n, t0),
                         make_output(Side::East, Orientation::Downward, n, t0)};

  Scratch d(-1, n / 2 - 1, n + 2);
  Scratch u(-1, n / 2 - 1, n + 2);
  d.reset(prog.arity(t0));

  const int levels = n / 2;
  for (int k = 0; k < levels; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    place(d, {k, n - k, n - k - 2, n - k}, north.levels[kk]);
    place(d, {k, n - k, n + k, n + k + 2}, south.levels[kk]);
    out.west.levels.push_back(extract(d, {k, k + 2, n - k, n + k + 2}));
    out.east.levels.push_back(extract(d, {n - k - 2, n - k, n - k - 2, n + k}));
    if (k + 1 < levels) {
      advance(prog, t0 + k, k, d, u, {k + 1, n - k - 1, n - k - 1, n + k + 1});
      std::swap(d, u);
    }
  }
  return out;
}

// Frame: the western pyramid's block is [0,n)^2, the eastern one [n,2n) x [0,n).
LatitudinalPanels latitudinal_bridge(const StencilProgram& prog, const Panel& west, const Panel& east) {
  check_pair(west, east);
  check_input(prog, west, "west", Side::East, Orientation::Upward);
  check_input(prog, east, "east", Side::West, Orientation::Upward);
  const int n = west.n;
  const std::int64_t t0 = west.start_step;

  LatitudinalPanels out{make_output(Side::North, Orientation::Downward, n, t0),
                        make_output(Side::South, Orientation::Downward, n, t0)};

  Scratch d(n / 2 - 1, -1, n + 2);
  Scratch u(n / 2 - 1, -1, n + 2);
  d.reset(prog.arity(t0));

  const int levels = n / 2;
  for (int k = 0; k < levels; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    place(d, {n - k - 2, n - k, k, n - k}, west.levels[kk]);
    place(d, {n + k, n + k + 2, k, n - k}, east.levels[kk]);
    out.north.levels.push_back(extract(d, {n - k - 2, n + k, k, k + 2}));
    out.south.levels.push_back(extract(d, {n - k, n + k + 2, n - k - 2, n - k}));
    if (k + 1 < levels) {
      advance(prog, t0 + k, k, d, u, {n - k - 1, n + k + 1, k + 1, n - k - 1});
      std::swap(d, u);
    }
  }
  return out;
}

// Frame: centered on the shared corner of four pyramids; the output block is
// [-n/2, n/2)^2.
Grid downward_pyramid(const StencilProgram& prog, const Panel& north, const Panel& south, const Panel& west,
                      const Panel& east) {
  check_pair(north, south);
  check_pair(north, west);
  check_pair(north, east);
  check_input(prog, north, "north", Side::South, Orientation::Downward);
  check_input(prog, south, "south", Side::North, Orientation::Downward);
  check_input(prog, west, "west", Side::East, Orientation::Downward);
  check_input(prog, east, "east", Side::West, Orientation::Downward);
  const int n = north.n;
  const int h = n / 2;
  const std::int64_t t0 = north.start_step;

  Scratch d(-h - 1, -h - 1, n + 2);
  Scratch u(-h - 1, -h - 1, n + 2);
  d.reset(prog.arity(t0));

  for (int k = 0; k < h; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    place(d, {-k - 2, -k, -k - 2, k}, west.levels[kk]);
    place(d, {k, k + 2, -k, k + 2}, east.levels[kk]);
    place(d, {-k, k + 2, -k - 2, -k}, north.levels[kk]);
    place(d, {-k - 2, k, k, k + 2}, south.levels[kk]);
    advance(prog, t0 + k, k, d, u, {-k - 1, k + 1, -k - 1, k + 1});
    std::swap(d, u);
  }

  Grid out(n, t0 + h, d.arity());
  for (int lj = 0; lj < n; ++lj) {
    for (int li = 0; li < n; ++li) {
      const double* p = d.at(li - h, lj - h);
      std::copy_n(p, d.arity(), out.point(li, lj).begin());
    }
  }
  return out;
}

}  // namespace swept
