#pragma once

#include "maverick/types.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace maverick {

// Flat tensor used at serialization boundaries: extents plus a row-major
// 32-bit float payload.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }

  void validate() const {
    check(element_count() == data.size(), "tensor: dims do not match payload size");
    for (float v : data)
      check(std::isfinite(v), "tensor: non-finite value");
  }
};

template <class S>
Tensor to_tensor(const MatX<S>& m) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.data.resize(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      t.data[static_cast<std::size_t>(r * m.cols() + c)] = static_cast<float>(m(r, c));
  return t;
}

template <class S>
MatX<S> from_tensor(const Tensor& t) {
  t.validate();
  check(t.dims.size() == 1 || t.dims.size() == 2, "tensor: rank must be 1 or 2");
  Index rows = t.dims.size() == 2 ? Index(t.dims[0]) : Index(t.dims[0]);
  Index cols = t.dims.size() == 2 ? Index(t.dims[1]) : 1;
  MatX<S> m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      m(r, c) = static_cast<S>(t.data[static_cast<std::size_t>(r * cols + c)]);
  return m;
}

// Every learnable tensor of the model, addressable by dotted path.
template <class S>
struct ModelParams {
  std::map<std::string, MatX<S>> tensors;
  std::uint64_t rng_seed = 0;

  bool has(const std::string& name) const { return tensors.count(name) != 0; }

  const MatX<S>& at(const std::string& name) const {
    auto it = tensors.find(name);
    check(it != tensors.end(), "unknown parameter: " + name);
    return it->second;
  }

  MatX<S>& at(const std::string& name) {
    auto it = tensors.find(name);
    check(it != tensors.end(), "unknown parameter: " + name);
    return it->second;
  }

  void add(const std::string& name, MatX<S> value) {
    check(!has(name), "duplicate parameter: " + name);
    tensors.emplace(name, std::move(value));
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [k, v] : tensors) n += static_cast<std::size_t>(v.size());
    return n;
  }
};

template <class To, class From>
ModelParams<To> cast_params(const ModelParams<From>& in) {
  ModelParams<To> out;
  out.rng_seed = in.rng_seed;
  for (const auto& [name, m] : in.tensors) out.tensors.emplace(name, m.template cast<To>());
  return out;
}

// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], drawn in row-major order.
template <class S>
MatX<S> uniform_init(Index rows, Index cols, Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  MatX<S> m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      m(r, c) = static_cast<S>(rng.uniform(-bound, bound));
  return m;
}

}  // namespace maverick
