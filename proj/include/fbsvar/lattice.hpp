// Multi-index algebra, rectangular lattices and d-dimensional rectangular
// increments.  A LatticeField is a dense row-major array over a rectangular
// grid; it either carries one value per unit cell ("increments") or one value
// per lattice point.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fbsvar {

using MultiIndex = std::vector<std::int64_t>;
using RealVec = std::vector<double>;

/// Round-trip decimal formatting (17 significant digits).
inline std::string format_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

enum class Anchor : std::int64_t {
  UnitCells = 0,      // one value per cell [i-1, i)
  LatticePoints = 1,  // one value per grid point i
};

class LatticeShape {
 public:
  explicit LatticeShape(std::vector<std::int64_t> extents)
      : extents_(std::move(extents)) {
    if (extents_.empty())
      throw std::invalid_argument("LatticeShape: dimension must be >= 1");
    std::int64_t total = 1;
    for (std::int64_t e : extents_) {
      if (e < 1) throw std::invalid_argument("LatticeShape: extent must be >= 1");
      if (total > std::numeric_limits<std::int64_t>::max() / e)
        throw std::overflow_error("LatticeShape: extent product overflows");
      total *= e;
    }
    total_ = total;
    strides_.assign(extents_.size(), 1);
    for (int nu = static_cast<int>(extents_.size()) - 2; nu >= 0; --nu)
      strides_[nu] = strides_[nu + 1] * extents_[nu + 1];
  }

  int dim() const { return static_cast<int>(extents_.size()); }
  std::int64_t extent(int nu) const { return extents_[nu]; }
  const std::vector<std::int64_t>& extents() const { return extents_; }
  std::int64_t stride(int nu) const { return strides_[nu]; }
  std::int64_t total() const { return total_; }

  bool contains(const MultiIndex& i) const {
    if (static_cast<int>(i.size()) != dim()) return false;
    for (int nu = 0; nu < dim(); ++nu)
      if (i[nu] < 0 || i[nu] >= extents_[nu]) return false;
    return true;
  }

  std::int64_t flatten(const MultiIndex& i) const {
    if (!contains(i)) throw std::out_of_range("LatticeShape: index out of range");
    std::int64_t flat = 0;
    for (int nu = 0; nu < dim(); ++nu) flat += i[nu] * strides_[nu];
    return flat;
  }

  MultiIndex unflatten(std::int64_t flat) const {
    MultiIndex i(dim());
    for (int nu = 0; nu < dim(); ++nu) {
      i[nu] = flat / strides_[nu];
      flat -= i[nu] * strides_[nu];
    }
    return i;
  }

  /// Shape with every extent increased by delta.
  LatticeShape grown(std::int64_t delta) const {
    std::vector<std::int64_t> e = extents_;
    for (auto& v : e) v += delta;
    return LatticeShape(std::move(e));
  }

  bool operator==(const LatticeShape& o) const { return extents_ == o.extents_; }

 private:
  std::vector<std::int64_t> extents_;
  std::vector<std::int64_t> strides_;
  std::int64_t total_ = 0;
};

/// Half-open hyperrectangle [lo, hi).
struct Rect {
  RealVec lo, hi;
  Rect(RealVec lo_, RealVec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size() || lo.empty())
      throw std::invalid_argument("Rect: corner dimensions mismatch");
    for (std::size_t nu = 0; nu < lo.size(); ++nu)
      if (!(lo[nu] <= hi[nu]))
        throw std::invalid_argument("Rect: requires lo <= hi componentwise");
  }
  int dim() const { return static_cast<int>(lo.size()); }
};

class LatticeField {
 public:
  LatticeField(LatticeShape shape, Anchor anchor)
      : shape_(std::move(shape)),
        anchor_(anchor),
        values_(static_cast<std::size_t>(shape_.total()), 0.0) {}

  LatticeField(LatticeShape shape, Anchor anchor, std::vector<double> values)
      : shape_(std::move(shape)), anchor_(anchor), values_(std::move(values)) {
    if (static_cast<std::int64_t>(values_.size()) != shape_.total())
      throw std::invalid_argument("LatticeField: value count does not match shape");
    for (double v : values_)
      if (!std::isfinite(v))
        throw std::invalid_argument("LatticeField: non-finite entry");
  }

  const LatticeShape& shape() const { return shape_; }
  Anchor anchor() const { return anchor_; }
  int dim() const { return shape_.dim(); }

  double operator[](std::int64_t flat) const { return values_[flat]; }
  double& operator[](std::int64_t flat) { return values_[flat]; }
  double at(const MultiIndex& i) const { return values_[shape_.flatten(i)]; }
  double& at(const MultiIndex& i) { return values_[shape_.flatten(i)]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

 private:
  LatticeShape shape_;
  Anchor anchor_;
  std::vector<double> values_;
};

/// Visits all multi-indices of `shape` in lexicographic (row-major) order.
template <class F>
void for_each_index(const LatticeShape& shape, F&& fn) {
  MultiIndex i(shape.dim(), 0);
  for (std::int64_t flat = 0; flat < shape.total(); ++flat) {
    fn(i, flat);
    for (int nu = shape.dim() - 1; nu >= 0; --nu) {
      if (++i[nu] < shape.extent(nu)) break;
      i[nu] = 0;
    }
  }
}

/// Visits all corners of the unit hypercube {0,1}^d.
template <class F>
void for_each_corner(int d, F&& fn) {
  std::vector<int> corner(d, 0);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
    int ones = 0;
    for (int nu = 0; nu < d; ++nu) {
      corner[nu] = static_cast<int>((mask >> nu) & 1u);
      ones += corner[nu];
    }
    fn(std::span<const int>(corner), ones);
  }
}

/// Alternating 2^d-corner sum of h over [lo, hi); the discrete analogue of the
/// mixed partial derivative.  For d = 1 this is h(hi) - h(lo).
inline double rect_increment(const std::function<double(const RealVec&)>& h,
                             const Rect& r) {
  const int d = r.dim();
  double sum = 0.0;
  RealVec corner_point(d);
  for_each_corner(d, [&](std::span<const int> corner, int ones) {
    for (int nu = 0; nu < d; ++nu)
      corner_point[nu] = corner[nu] ? r.hi[nu] : r.lo[nu];
    const double v = h(corner_point);
    if (!std::isfinite(v))
      throw std::domain_error("rect_increment: non-finite corner value");
    sum += ((d - ones) % 2 == 0) ? v : -v;
  });
  return sum;
}

/// Rectangular increment of a point-anchored field over the index box
/// [lo, hi); both corners must be lattice points of g.
inline double rect_increment(const LatticeField& g, const MultiIndex& lo,
                             const MultiIndex& hi) {
  if (g.anchor() != Anchor::LatticePoints)
    throw std::invalid_argument("rect_increment: field must be point-anchored");
  const int d = g.dim();
  if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d)
    throw std::invalid_argument("rect_increment: corner dimension mismatch");
  double sum = 0.0;
  MultiIndex c(d);
  for_each_corner(d, [&](std::span<const int> corner, int ones) {
    for (int nu = 0; nu < d; ++nu) c[nu] = corner[nu] ? hi[nu] : lo[nu];
    if (!g.shape().contains(c))
      throw std::out_of_range("rect_increment: corner off the lattice");
    const double v = g.at(c);
    if (!std::isfinite(v))
      throw std::domain_error("rect_increment: non-finite corner value");
    sum += ((d - ones) % 2 == 0) ? v : -v;
  });
  return sum;
}

/// Same, with real corners: every corner coordinate must coincide exactly with
/// a lattice index of g.
inline double rect_increment(const LatticeField& g, const Rect& r) {
  const int d = r.dim();
  MultiIndex lo(d), hi(d);
  for (int nu = 0; nu < d; ++nu) {
    lo[nu] = static_cast<std::int64_t>(r.lo[nu]);
    hi[nu] = static_cast<std::int64_t>(r.hi[nu]);
    if (static_cast<double>(lo[nu]) != r.lo[nu] ||
        static_cast<double>(hi[nu]) != r.hi[nu])
      throw std::invalid_argument("rect_increment: corner off the lattice");
  }
  return rect_increment(g, lo, hi);
}

/// Componentwise floor of m*t for t in [0,1]^d.  Floors are exact IEEE floors;
/// values within rounding of an integer are not snapped.
inline MultiIndex floor_scale(const RealVec& t, const LatticeShape& m) {
  if (static_cast<int>(t.size()) != m.dim())
    throw std::invalid_argument("floor_scale: dimension mismatch");
  MultiIndex out(t.size());
  for (int nu = 0; nu < m.dim(); ++nu) {
    if (!(t[nu] >= 0.0 && t[nu] <= 1.0))
      throw std::domain_error("floor_scale: t outside [0,1]^d");
    out[nu] = static_cast<std::int64_t>(
        std::floor(static_cast<double>(m.extent(nu)) * t[nu]));
  }
  return out;
}

namespace detail {

// Prefix sums of one strided line with balanced (pairwise) block summation;
// rounding error grows like log(n) instead of n.
inline void tree_prefix_line(double* v, std::int64_t n, std::int64_t stride) {
  if (n <= 32) {
    for (std::int64_t i = 1; i < n; ++i) v[i * stride] += v[(i - 1) * stride];
    return;
  }
  const std::int64_t h = n / 2;
  tree_prefix_line(v, h, stride);
  tree_prefix_line(v + h * stride, n - h, stride);
  const double offset = v[(h - 1) * stride];
  for (std::int64_t i = h; i < n; ++i) v[i * stride] += offset;
}

// Applies fn to every 1-D line of the array along `axis`.
template <class F>
void for_each_line(const LatticeShape& shape, int axis, F&& fn) {
  const std::int64_t n = shape.extent(axis);
  const std::int64_t stride = shape.stride(axis);
  std::int64_t lines = shape.total() / n;
  // Base offsets enumerate all index combinations of the other axes.
  MultiIndex idx(shape.dim(), 0);
  for (std::int64_t line = 0; line < lines; ++line) {
    std::int64_t base = 0;
    for (int nu = 0; nu < shape.dim(); ++nu)
      if (nu != axis) base += idx[nu] * shape.stride(nu);
    fn(base, n, stride);
    for (int nu = shape.dim() - 1; nu >= 0; --nu) {
      if (nu == axis) continue;
      if (++idx[nu] < shape.extent(nu)) break;
      idx[nu] = 0;
    }
  }
}

}  // namespace detail

/// In-place d-dimensional prefix sums (one tree-summed pass per axis).
inline void prefix_sums(LatticeField& f) {
  for (int axis = 0; axis < f.dim(); ++axis) {
    detail::for_each_line(f.shape(), axis, [&](std::int64_t base, std::int64_t n,
                                               std::int64_t stride) {
      detail::tree_prefix_line(f.values().data() + base, n, stride);
    });
  }
}

/// Integrates a cell-anchored increment field into a point-anchored field of
/// shape m+1 per axis.  The output vanishes on every face with a zero index,
/// and its per-cell rectangular increments reproduce the input up to
/// accumulated rounding.
inline LatticeField cumulative_field(const LatticeField& incr) {
  if (incr.anchor() != Anchor::UnitCells)
    throw std::invalid_argument("cumulative_field: input must be cell-anchored");
  const int d = incr.dim();
  LatticeShape out_shape = incr.shape().grown(1);
  LatticeField out(out_shape, Anchor::LatticePoints);
  // Scatter increments to the point grid at index i+1, leaving zero faces.
  for_each_index(incr.shape(), [&](const MultiIndex& i, std::int64_t flat) {
    std::int64_t target = 0;
    for (int nu = 0; nu < d; ++nu) target += (i[nu] + 1) * out_shape.stride(nu);
    out[target] = incr[flat];
  });
  prefix_sums(out);
  return out;
}

// --- serialization ---------------------------------------------------------
//
// Binary layout: 8 little-endian int64 header slots
// (magic, version, d, anchor, extent[0..3]) followed by the row-major values
// as little-endian IEEE doubles.  d <= 4; unused extent slots hold 0.

inline constexpr std::int64_t kFieldMagic = 0x4642535646303146;  // "FBSVF01F"
inline constexpr std::int64_t kFieldVersion = 1;

inline void write_binary(const LatticeField& f, std::ostream& os) {
  if (f.dim() > 4)
    throw std::invalid_argument("write_binary: serialization supports d <= 4");
  std::int64_t header[8] = {kFieldMagic, kFieldVersion, f.dim(),
                            static_cast<std::int64_t>(f.anchor()), 0, 0, 0, 0};
  for (int nu = 0; nu < f.dim(); ++nu) header[4 + nu] = f.shape().extent(nu);
  os.write(reinterpret_cast<const char*>(header), sizeof(header));
  os.write(reinterpret_cast<const char*>(f.values().data()),
           static_cast<std::streamsize>(f.values().size() * sizeof(double)));
  if (!os) throw std::runtime_error("write_binary: stream write failed");
}

inline void write_binary(const LatticeField& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_binary: cannot open " + path);
  write_binary(f, os);
}

inline LatticeField read_binary(std::istream& is) {
  std::int64_t header[8];
  is.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!is || header[0] != kFieldMagic)
    throw std::runtime_error("read_binary: bad magic");
  if (header[1] != kFieldVersion)
    throw std::runtime_error("read_binary: unsupported version");
  const int d = static_cast<int>(header[2]);
  if (d < 1 || d > 4) throw std::runtime_error("read_binary: bad dimension");
  std::vector<std::int64_t> extents(header + 4, header + 4 + d);
  LatticeShape shape(extents);
  std::vector<double> values(static_cast<std::size_t>(shape.total()));
  is.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!is) throw std::runtime_error("read_binary: truncated value block");
  return LatticeField(shape, static_cast<Anchor>(header[3]), std::move(values));
}

inline LatticeField read_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_binary: cannot open " + path);
  return read_binary(is);
}

/// CSV export: one row per multi-index, index columns then the value.
inline void write_csv(const LatticeField& f, std::ostream& os) {
  for (int nu = 0; nu < f.dim(); ++nu) os << "i" << nu << ",";
  os << "value\n";
  for_each_index(f.shape(), [&](const MultiIndex& i, std::int64_t flat) {
    for (int nu = 0; nu < f.dim(); ++nu) os << i[nu] << ",";
    os << format_full(f[flat]) << "\n";
  });
  if (!os) throw std::runtime_error("write_csv: stream write failed");
}

inline void write_csv(const LatticeField& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  write_csv(f, os);
}

}  // namespace fbsvar
