#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>

#include "semsplit/rng.hpp"
#include "semsplit/semcodec.hpp"

namespace semsplit {

/// Synthetic segmentation-map generator. Class 0 is the background; the
/// remaining classes appear as rectangular patches, mimicking the label
/// imbalance of street-scene segmentation (background dominates).
struct MapGenParams {
  int n_blobs = 12;
  double min_blob_frac = 0.05;  // blob extent as a fraction of each grid dimension
  double max_blob_frac = 0.25;

  void validate() const {
    if (n_blobs < 0) throw std::invalid_argument("MapGenParams: negative blob count");
    if (!(min_blob_frac > 0.0) || !(max_blob_frac >= min_blob_frac) || !(max_blob_frac <= 1.0))
      throw std::invalid_argument("MapGenParams: invalid blob fraction range");
  }
};

inline SemanticMap generate_map(int grid_h, int grid_w, int n_classes, const MapGenParams& p,
                                std::uint64_t seed, std::uint64_t sequence = 0) {
  if (grid_h < 1 || grid_w < 1) throw std::invalid_argument("generate_map: empty grid");
  if (n_classes < 2) throw std::invalid_argument("generate_map: need at least 2 classes");
  p.validate();

  SemanticMap map;
  map.grid_h = grid_h;
  map.grid_w = grid_w;
  map.n_classes = n_classes;
  map.cells.assign(static_cast<std::size_t>(grid_h) * grid_w, 0u);

  PhiloxRng rng(seed, RngStream::kMapGen, sequence);
  auto uniform_int = [&rng](int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(rng.next_double() * (hi - lo + 1));
  };
  auto blob_extent = [&](int dim) {
    const double frac = p.min_blob_frac + rng.next_double() * (p.max_blob_frac - p.min_blob_frac);
    return std::clamp(static_cast<int>(frac * dim + 0.5), 1, dim);
  };
  for (int blob = 0; blob < p.n_blobs; ++blob) {
    const int cls = uniform_int(1, n_classes - 1);
    const int bh = blob_extent(grid_h);
    const int bw = blob_extent(grid_w);
    const int top = uniform_int(0, grid_h - bh);
    const int left = uniform_int(0, grid_w - bw);
    for (int r = top; r < top + bh; ++r)
      for (int c = left; c < left + bw; ++c)
        map.cells[static_cast<std::size_t>(r) * grid_w + c] = static_cast<std::uint8_t>(cls);
  }
  return map;
}

}  // namespace semsplit
