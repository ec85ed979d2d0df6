#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "semsplit/bitchannel.hpp"

namespace semsplit {

/// Grid of class labels, row-major.
struct SemanticMap {
  int grid_h = 0;
  int grid_w = 0;
  int n_classes = 0;
  std::vector<std::uint8_t> cells;

  int cell_count() const { return grid_h * grid_w; }

  void validate() const {
    if (grid_h < 1 || grid_w < 1) throw std::invalid_argument("SemanticMap: empty grid");
    if (n_classes < 2) throw std::invalid_argument("SemanticMap: need at least 2 classes");
    if (static_cast<int>(cells.size()) != cell_count())
      throw std::invalid_argument("SemanticMap: cell count mismatch");
    for (auto c : cells)
      if (c >= n_classes) throw std::invalid_argument("SemanticMap: label out of range");
  }

  /// Fraction of cells carrying each label.
  std::vector<double> class_histogram() const {
    std::vector<double> hist(static_cast<std::size_t>(n_classes), 0.0);
    for (auto c : cells) hist[c] += 1.0;
    for (auto& v : hist) v /= static_cast<double>(cells.size());
    return hist;
  }
};

/// Tiling used by the map codecs: the row-major cell sequence is cut into
/// m_max equal runs; a budget of u units transmits the first u runs.
struct TileGeometry {
  int grid_h = 0;
  int grid_w = 0;
  int n_classes = 0;
  int m_max = 0;

  int cell_count() const { return grid_h * grid_w; }
  int cells_per_tile() const { return cell_count() / m_max; }

  void validate() const {
    if (grid_h < 1 || grid_w < 1 || n_classes < 2 || m_max < 1)
      throw std::invalid_argument("TileGeometry: invalid dimensions");
    if (cell_count() % m_max != 0)
      throw std::invalid_argument("TileGeometry: grid not divisible into m_max tiles");
  }
};

inline TileGeometry geometry_of(const SemanticMap& map, int m_max) {
  TileGeometry g{map.grid_h, map.grid_w, map.n_classes, m_max};
  g.validate();
  return g;
}

/// Decoded map plus per-tile presence flags; cells of untransmitted tiles
/// hold class 0 and are marked absent.
struct DecodedMap {
  SemanticMap map;
  std::vector<bool> tile_present;

  int tiles_present() const {
    int n = 0;
    for (bool p : tile_present) n += p ? 1 : 0;
    return n;
  }
};

/// Extraction budget: n_c common units (map tiles) out of M, and one private
/// unit count (prompt words) out of N per user.
struct SemanticBudget {
  int n_c = 0;
  std::vector<int> n_p;
  int m_max = 0;
  int n_max = 0;

  void validate() const {
    if (n_c < 0 || n_c > m_max) throw std::invalid_argument("SemanticBudget: n_c out of range");
    for (int v : n_p)
      if (v < 0 || v > n_max) throw std::invalid_argument("SemanticBudget: n_p out of range");
  }
};

// ---------------------------------------------------------------------------
// One-hot map codec
// ---------------------------------------------------------------------------

/// Emits the first budget_units tiles, each cell as C bits with the bit at
/// the label's index set. Stream length = budget_units * cells_per_tile * C.
inline Bitstream onehot_encode(const SemanticMap& map, int budget_units, int m_max) {
  map.validate();
  const TileGeometry geom = geometry_of(map, m_max);
  if (budget_units < 0 || budget_units > m_max)
    throw std::invalid_argument("onehot_encode: budget out of range");
  const int n_cells = budget_units * geom.cells_per_tile();
  const int c = map.n_classes;
  Bitstream bits(static_cast<std::size_t>(n_cells) * static_cast<std::size_t>(c), 0u);
  for (int i = 0; i < n_cells; ++i)
    bits[static_cast<std::size_t>(i) * c + map.cells[static_cast<std::size_t>(i)]] = 1u;
  return bits;
}

/// Decodes one C-bit cell: the lowest-index set bit wins (ties between set
/// bits resolve to the lowest class); an all-zero cell decodes to class 0.
inline int onehot_decode_cell(const std::uint8_t* cell_bits, int n_classes) {
  for (int c = 0; c < n_classes; ++c)
    if (cell_bits[c]) return c;
  return 0;
}

inline DecodedMap onehot_decode(const Bitstream& bits, const TileGeometry& geom) {
  geom.validate();
  const int c = geom.n_classes;
  const std::size_t tile_bits = static_cast<std::size_t>(geom.cells_per_tile()) * c;
  if (tile_bits == 0 || bits.size() % tile_bits != 0)
    throw std::invalid_argument("onehot_decode: bitstream length mismatch");
  const int units = static_cast<int>(bits.size() / tile_bits);
  if (units > geom.m_max) throw std::invalid_argument("onehot_decode: more tiles than m_max");

  DecodedMap out;
  out.map.grid_h = geom.grid_h;
  out.map.grid_w = geom.grid_w;
  out.map.n_classes = c;
  out.map.cells.assign(static_cast<std::size_t>(geom.cell_count()), 0u);
  out.tile_present.assign(static_cast<std::size_t>(geom.m_max), false);
  const int n_cells = units * geom.cells_per_tile();
  for (int i = 0; i < n_cells; ++i)
    out.map.cells[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(
        onehot_decode_cell(bits.data() + static_cast<std::size_t>(i) * c, c));
  for (int t = 0; t < units; ++t) out.tile_present[static_cast<std::size_t>(t)] = true;
  return out;
}

/// Exact probability that one one-hot cell with true label `label` decodes
/// correctly after independent bit flips with probability flip_p.
inline double onehot_cell_success(double flip_p, int n_classes, int label) {
  if (!(flip_p >= 0.0) || !(flip_p <= 1.0))
    throw std::domain_error("onehot_cell_success: flip_p out of range");
  if (label < 0 || label >= n_classes)
    throw std::invalid_argument("onehot_cell_success: label out of range");
  const double q = 1.0 - flip_p;
  if (label == 0) {
    // Own bit survives, or the whole cell is erased to all-zero.
    return q + flip_p * std::pow(q, n_classes - 1);
  }
  // Own bit and every lower-index bit must survive.
  return std::pow(q, label + 1);
}

/// Label-distribution-weighted cell success probability.
inline double cell_success_probability(double flip_p, int n_classes,
                                       const std::vector<double>& class_probs) {
  if (static_cast<int>(class_probs.size()) != n_classes)
    throw std::invalid_argument("cell_success_probability: class_probs size mismatch");
  double acc = 0.0;
  for (int t = 0; t < n_classes; ++t)
    acc += class_probs[static_cast<std::size_t>(t)] * onehot_cell_success(flip_p, n_classes, t);
  return acc;
}

// ---------------------------------------------------------------------------
// Binary-label map codec (segmentation-map baseline)
// ---------------------------------------------------------------------------

inline int bits_per_label(int n_classes) {
  int bits = 0;
  while ((1 << bits) < n_classes) ++bits;
  return bits;
}

/// Same tiling as the one-hot codec but each cell is the ceil(log2 C)-bit
/// class index, MSB first. No redundancy: any flip changes the index.
inline Bitstream label_binary_encode(const SemanticMap& map, int budget_units, int m_max) {
  map.validate();
  const TileGeometry geom = geometry_of(map, m_max);
  if (budget_units < 0 || budget_units > m_max)
    throw std::invalid_argument("label_binary_encode: budget out of range");
  const int n_cells = budget_units * geom.cells_per_tile();
  const int width = bits_per_label(map.n_classes);
  Bitstream bits;
  bits.reserve(static_cast<std::size_t>(n_cells) * width);
  for (int i = 0; i < n_cells; ++i) {
    const int label = map.cells[static_cast<std::size_t>(i)];
    for (int b = width - 1; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((label >> b) & 1));
  }
  return bits;
}

inline DecodedMap label_binary_decode(const Bitstream& bits, const TileGeometry& geom) {
  geom.validate();
  const int width = bits_per_label(geom.n_classes);
  const std::size_t tile_bits = static_cast<std::size_t>(geom.cells_per_tile()) * width;
  if (tile_bits == 0 || bits.size() % tile_bits != 0)
    throw std::invalid_argument("label_binary_decode: bitstream length mismatch");
  const int units = static_cast<int>(bits.size() / tile_bits);
  if (units > geom.m_max) throw std::invalid_argument("label_binary_decode: more tiles than m_max");

  DecodedMap out;
  out.map.grid_h = geom.grid_h;
  out.map.grid_w = geom.grid_w;
  out.map.n_classes = geom.n_classes;
  out.map.cells.assign(static_cast<std::size_t>(geom.cell_count()), 0u);
  out.tile_present.assign(static_cast<std::size_t>(geom.m_max), false);
  const int n_cells = units * geom.cells_per_tile();
  std::size_t pos = 0;
  for (int i = 0; i < n_cells; ++i) {
    int label = 0;
    for (int b = 0; b < width; ++b) label = (label << 1) | bits[pos++];
    if (label >= geom.n_classes) label = geom.n_classes - 1;  // only reachable when C is not a power of two
    out.map.cells[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(label);
  }
  for (int t = 0; t < units; ++t) out.tile_present[static_cast<std::size_t>(t)] = true;
  return out;
}

// ---------------------------------------------------------------------------
// Text codec
// ---------------------------------------------------------------------------

/// A prompt carried as plain text; one private unit is one whitespace
/// delimited word.
struct TextUnit {
  std::string text;
};

inline std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

/// Word lengths of the first budget_units words; this is the side geometry
/// a decoder needs to re-segment the character stream.
inline std::vector<int> text_geometry(const TextUnit& t, int budget_units) {
  if (budget_units < 0) throw std::invalid_argument("text_geometry: negative budget");
  const auto words = split_words(t.text);
  if (budget_units > 0 && words.empty())
    throw std::invalid_argument("text_geometry: text is empty");
  if (budget_units > static_cast<int>(words.size()))
    throw std::invalid_argument("text_geometry: budget exceeds word count");
  std::vector<int> lengths;
  lengths.reserve(static_cast<std::size_t>(budget_units));
  for (int i = 0; i < budget_units; ++i)
    lengths.push_back(static_cast<int>(words[static_cast<std::size_t>(i)].size()));
  return lengths;
}

/// Encodes the first budget_units words at 8 bits per character, MSB first.
/// Separators are not transmitted; word lengths travel as geometry.
inline Bitstream text_encode(const TextUnit& t, int budget_units) {
  if (budget_units < 0) throw std::invalid_argument("text_encode: negative budget");
  const auto words = split_words(t.text);
  if (budget_units > 0 && words.empty())
    throw std::invalid_argument("text_encode: text is empty");
  if (budget_units > static_cast<int>(words.size()))
    throw std::invalid_argument("text_encode: budget exceeds word count");
  Bitstream bits;
  for (int i = 0; i < budget_units; ++i) {
    for (unsigned char ch : words[static_cast<std::size_t>(i)]) {
      for (int b = 7; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((ch >> b) & 1));
    }
  }
  return bits;
}

/// Rebuilds the word list from 8-bit groups using the length geometry; any
/// byte outside printable ASCII becomes '?'. Word boundaries come from the
/// geometry, never from the (possibly corrupted) character values.
inline std::vector<std::string> text_decode_words(const Bitstream& bits,
                                                  const std::vector<int>& word_lengths) {
  std::size_t total_chars = 0;
  for (int len : word_lengths) {
    if (len < 1) throw std::invalid_argument("text_decode: word length must be >= 1");
    total_chars += static_cast<std::size_t>(len);
  }
  if (bits.size() != total_chars * 8)
    throw std::invalid_argument("text_decode: bitstream length mismatch");
  std::vector<std::string> words;
  words.reserve(word_lengths.size());
  std::size_t pos = 0;
  for (int len : word_lengths) {
    std::string w;
    for (int i = 0; i < len; ++i) {
      unsigned ch = 0;
      for (int b = 0; b < 8; ++b) ch = (ch << 1) | bits[pos++];
      w.push_back(ch >= 0x20 && ch <= 0x7E ? static_cast<char>(ch) : '?');
    }
    words.push_back(std::move(w));
  }
  return words;
}

inline TextUnit text_decode(const Bitstream& bits, const std::vector<int>& word_lengths) {
  TextUnit out;
  const auto words = text_decode_words(bits, word_lengths);
  for (std::size_t w = 0; w < words.size(); ++w) {
    if (w > 0) out.text.push_back(' ');
    out.text += words[w];
  }
  return out;
}

}  // namespace semsplit
