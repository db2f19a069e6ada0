// Copyright 2026 The lavcsel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Boolean input images for the input DMD: an N-bit pie header surrounded by an
// always-ON locking ring, plus seeded sequences of such images.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "lavcsel/error.hpp"
#include "lavcsel/random.hpp"

namespace lavcsel {

using Bits = std::vector<std::uint8_t>;

/// Square pixel raster of the input DMD. Only pixels whose centres fall inside
/// the centred disk of radius `disk_radius_px` can be switched on.
struct Grid {
  int side_px = 64;
  double disk_radius_px = 30.0;

  bool operator==(const Grid&) const = default;

  void validate() const {
    detail::require_domain(side_px >= 1, "grid side_px must be >= 1");
    detail::require_domain(disk_radius_px > 0.0 && disk_radius_px <= side_px / 2.0,
                           "grid disk_radius_px must be in (0, side_px/2]");
  }

  /// Offsets (dx, dy) of in-disk pixel centres from the grid centre, row-major,
  /// y pointing up.
  struct Pixel {
    int row;
    int col;
    double dx;
    double dy;
  };

  std::vector<Pixel> disk_pixels() const {
    validate();
    std::vector<Pixel> out;
    const double c = side_px / 2.0;
    const double r2 = disk_radius_px * disk_radius_px;
    for (int row = 0; row < side_px; ++row) {
      for (int col = 0; col < side_px; ++col) {
        const double dx = col + 0.5 - c;
        const double dy = c - (row + 0.5);
        if (dx * dx + dy * dy <= r2) out.push_back({row, col, dx, dy});
      }
    }
    return out;
  }

  std::size_t disk_pixel_count() const { return disk_pixels().size(); }
};

/// Region assignment of every in-disk pixel: `kRing` for the locking ring,
/// otherwise the index of the header sector.
struct HeaderLayout {
  static constexpr int kRing = -1;

  Grid grid;
  int n_bits = 3;
  double ring_fraction = 0.5;
  std::vector<int> region;  // one entry per in-disk pixel
  std::size_t ring_pixels = 0;

  std::size_t pixel_count() const { return region.size(); }
};

namespace detail {

inline int sector_of(double dx, double dy, int n_bits) {
  const double two_pi = 2.0 * std::numbers::pi;
  double theta = std::atan2(dy, dx);
  if (theta < 0.0) theta += two_pi;
  const double s = theta * n_bits / two_pi;
  const double nearest = std::round(s);
  // A centre lying on a sector boundary goes to the lower-index sector; the
  // 0 / 2*pi boundary therefore belongs to sector 0.
  if (std::abs(s - nearest) < 1e-9) {
    const int b = static_cast<int>(nearest);
    if (b == 0 || b == n_bits) return 0;
    return b - 1;
  }
  return std::clamp(static_cast<int>(std::floor(s)), 0, n_bits - 1);
}

}  // namespace detail

inline HeaderLayout make_layout(const Grid& grid, int n_bits, double ring_fraction) {
  grid.validate();
  detail::require_domain(n_bits >= 1 && n_bits <= 16, "n_bits must be in [1, 16]");
  detail::require_domain(ring_fraction >= 0.0 && ring_fraction <= 1.0,
                         "ring_fraction must be in [0, 1]");
  HeaderLayout layout;
  layout.grid = grid;
  layout.n_bits = n_bits;
  layout.ring_fraction = ring_fraction;

  const auto pixels = grid.disk_pixels();
  const std::size_t p = pixels.size();
  layout.region.resize(p);

  // The ring is the set of round(f * p) outermost pixels, so its area fraction
  // is exact to one pixel. Ties in radius are broken by enumeration order.
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto radius2 = [&](std::size_t i) { return pixels[i].dx * pixels[i].dx + pixels[i].dy * pixels[i].dy; };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return radius2(a) > radius2(b); });
  const auto n_ring = static_cast<std::size_t>(std::llround(ring_fraction * static_cast<double>(p)));
  std::vector<std::uint8_t> is_ring(p, 0);
  for (std::size_t k = 0; k < n_ring; ++k) is_ring[order[k]] = 1;

  for (std::size_t i = 0; i < p; ++i) {
    layout.region[i] = is_ring[i] ? HeaderLayout::kRing : detail::sector_of(pixels[i].dx, pixels[i].dy, n_bits);
  }
  layout.ring_pixels = n_ring;
  return layout;
}

struct InputPattern {
  Grid grid;
  Bits pixels;  // in-disk pixels, row-major enumeration
  int n_bits = 0;
  std::uint32_t class_id = 0;
  double ring_fraction = 0.0;

  std::size_t on_count() const {
    return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
  }
};

inline void check_class_id(int n_bits, std::int64_t class_id) {
  detail::require_domain(class_id >= 0 && class_id < (std::int64_t{1} << n_bits),
                         "class_id " + std::to_string(class_id) + " out of range for " +
                             std::to_string(n_bits) + " bits");
}

inline InputPattern make_header_pattern(const HeaderLayout& layout, std::int64_t class_id) {
  check_class_id(layout.n_bits, class_id);
  InputPattern pat;
  pat.grid = layout.grid;
  pat.n_bits = layout.n_bits;
  pat.class_id = static_cast<std::uint32_t>(class_id);
  pat.ring_fraction = layout.ring_fraction;
  pat.pixels.resize(layout.pixel_count());
  for (std::size_t i = 0; i < layout.region.size(); ++i) {
    const int r = layout.region[i];
    pat.pixels[i] = (r == HeaderLayout::kRing || ((class_id >> r) & 1)) ? 1 : 0;
  }
  return pat;
}

/// Bit j of `class_id` switches on the angular sector [2*pi*j/n, 2*pi*(j+1)/n)
/// of the inner disk; the outer ring is always on.
inline InputPattern make_header_pattern(const Grid& grid, int n_bits, std::int64_t class_id,
                                        double ring_fraction) {
  detail::require_domain(n_bits >= 1 && n_bits <= 16, "n_bits must be in [1, 16]");
  check_class_id(n_bits, class_id);
  return make_header_pattern(make_layout(grid, n_bits, ring_fraction), class_id);
}

struct LabeledSequence {
  std::vector<InputPattern> patterns;
  std::vector<int> labels;
  std::uint64_t seed = 0;
  Grid grid;
  int n_bits = 0;
  double ring_fraction = 0.0;

  std::size_t size() const noexcept { return labels.size(); }
};

inline LabeledSequence make_sequence(const Grid& grid, int n_bits, int length, double ring_fraction,
                                     std::uint64_t seed) {
  detail::require_domain(length >= 1, "sequence length must be >= 1");
  const HeaderLayout layout = make_layout(grid, n_bits, ring_fraction);
  LabeledSequence seq;
  seq.seed = seed;
  seq.grid = grid;
  seq.n_bits = n_bits;
  seq.ring_fraction = ring_fraction;
  seq.patterns.reserve(static_cast<std::size_t>(length));
  seq.labels.reserve(static_cast<std::size_t>(length));

  std::mt19937_64 rng(derive_seed(seed, "sequence"));
  std::uniform_int_distribution<std::int64_t> pick(0, (std::int64_t{1} << n_bits) - 1);
  for (int t = 0; t < length; ++t) {
    const std::int64_t c = pick(rng);
    seq.patterns.push_back(make_header_pattern(layout, c));
    seq.labels.push_back(static_cast<int>(c));
  }
  return seq;
}

/// Input vector u fed to the transmission matrix (row-major over in-disk pixels).
inline Bits pattern_to_vector(const InputPattern& pat) { return pat.pixels; }

/// Plain-text graymap (P2) of the full square raster, for eyeballing patterns.
inline void write_pgm(std::ostream& os, const InputPattern& pat) {
  const int side = pat.grid.side_px;
  std::vector<int> img(static_cast<std::size_t>(side) * side, 0);
  const auto pixels = pat.grid.disk_pixels();
  detail::require_dims(pixels.size() == pat.pixels.size(), "pattern does not match its grid");
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    img[static_cast<std::size_t>(pixels[i].row) * side + pixels[i].col] = pat.pixels[i] ? 255 : 0;
  }
  os << "P2\n" << side << ' ' << side << "\n255\n";
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) os << img[static_cast<std::size_t>(r) * side + c] << (c + 1 < side ? ' ' : '\n');
  }
}

}  // namespace lavcsel
