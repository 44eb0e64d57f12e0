#ifndef SUPERFACE_TENSOR_HPP
#define SUPERFACE_TENSOR_HPP

// Dense row-major tensor. Deliberately minimal: shape + flat storage plus the
// few helpers the autograd ops need. No views, no strides; every tensor owns
// contiguous memory.

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sf {

using Shape = std::vector<int64_t>;

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& m) : std::runtime_error("ShapeMismatch: " + m) {}
};

template <class T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(static_cast<size_t>(numel(shape_)), T(0)) {}
  Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(static_cast<size_t>(numel(shape_)), fill) {}
  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != numel(shape_))
      throw ShapeMismatch("data size != " + shape_str(shape_));
  }

  static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor full(Shape s, T v) { return Tensor(std::move(s), v); }
  static Tensor scalar(T v) { return Tensor(Shape{1}, std::vector<T>{v}); }

  const Shape& shape() const { return shape_; }
  int64_t dim(size_t i) const { return shape_.at(i); }
  size_t ndim() const { return shape_.size(); }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  template <class... Ix>
  T& at(Ix... ix) {
    return data_[flat_index(ix...)];
  }
  template <class... Ix>
  const T& at(Ix... ix) const {
    return data_[flat_index(ix...)];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor reshaped(Shape s) const {
    if (numel(s) != size()) throw ShapeMismatch("reshape " + shape_str(shape_) + " -> " + shape_str(s));
    Tensor out = *this;
    out.shape_ = std::move(s);
    return out;
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (int64_t i = 0; i < size(); ++i) out[i] = static_cast<U>(data_[static_cast<size_t>(i)]);
    return out;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

 private:
  template <class... Ix>
  size_t flat_index(Ix... ix) const {
    const int64_t idx[] = {static_cast<int64_t>(ix)...};
    constexpr size_t n = sizeof...(Ix);
    size_t f = 0;
    for (size_t i = 0; i < n; ++i) f = f * static_cast<size_t>(shape_[i]) + static_cast<size_t>(idx[i]);
    return f;
  }

  Shape shape_;
  std::vector<T> data_;
};

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeMismatch(std::string(op) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace sf

#endif
