#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace maskval {

// Row-major width x height grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw std::invalid_argument("grid dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  // (x, y) = (column, row).
  T& at(int x, int y) { return data_[Index(x, y)]; }
  const T& at(int x, int y) const { return data_[Index(x, y)]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool SameShape(const Grid& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool operator==(const Grid&) const = default;

 private:
  std::size_t Index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Camera-z depth per pixel in meters, 0 for background.
using DepthMap = Grid<double>;

// Entries are 0 or 1.
class BinaryMask : public Grid<std::uint8_t> {
 public:
  using Grid::Grid;

  std::int64_t Count() const {
    std::int64_t n = 0;
    for (auto v : data()) n += v;
    return n;
  }
};

}  // namespace maskval
