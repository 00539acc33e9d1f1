#pragma once

#include <cstdint>
#include <vector>

namespace qtmtt {

// Dense row-major 2-D plane.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : w_(width), h_(height), cells_(static_cast<size_t>(width) * height, fill) {}

  int width() const { return w_; }
  int height() const { return h_; }
  bool empty() const { return cells_.empty(); }

  T& at(int x, int y) { return cells_[static_cast<size_t>(y) * w_ + x]; }
  const T& at(int x, int y) const { return cells_[static_cast<size_t>(y) * w_ + x]; }

  T* row(int y) { return cells_.data() + static_cast<size_t>(y) * w_; }
  const T* row(int y) const { return cells_.data() + static_cast<size_t>(y) * w_; }

  std::vector<T>& cells() { return cells_; }
  const std::vector<T>& cells() const { return cells_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int w_ = 0;
  int h_ = 0;
  std::vector<T> cells_;
};

// Pixel offset (used for CTU origins inside a frame).
struct Point {
  int x = 0;
  int y = 0;
};

// A single 8-bit luma plane.
struct Frame {
  Grid<uint8_t> luma;

  int width() const { return luma.width(); }
  int height() const { return luma.height(); }
};

// Pads right/bottom to the next multiple of `block` by edge replication.
// Returns the input unchanged when already aligned.
Frame pad_to_multiple(const Frame& f, int block);

// Mean squared error over the top-left width x height window of both planes.
double region_mse(const Grid<uint8_t>& a, const Grid<uint8_t>& b, int width, int height);

}  // namespace qtmtt
