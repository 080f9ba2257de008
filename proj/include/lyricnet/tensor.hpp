#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lyricnet/errors.hpp"

namespace lyricnet {

#ifdef LYRICNET_REAL_FLOAT
using Real = float;
#else
using Real = double;
#endif

// dense row-major array; rank 1 (vectors, scalars as {1}) and rank 2 cover the op set
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<Real> data);

    static Tensor scalar(Real v) { return Tensor({1}, {v}); }
    static Tensor vec(std::vector<Real> v);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<Real> d);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // rank-2 accessors
    std::size_t rows() const { return shape_[0]; }
    std::size_t cols() const { return shape_[1]; }
    Real& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    Real at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    Real& operator[](std::size_t i) { return data_[i]; }
    Real operator[](std::size_t i) const { return data_[i]; }

    std::vector<Real>& data() { return data_; }
    const std::vector<Real>& data() const { return data_; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    void fill(Real v);

    std::string shape_str() const;  // e.g. "[3x4]"

  private:
    std::vector<std::size_t> shape_;
    std::vector<Real> data_;
};

std::size_t shape_count(const std::vector<std::size_t>& shape);
bool all_finite(const Tensor& t);

// throws DimensionError naming both shapes
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

}  // namespace lyricnet
