#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "segdms/matrix.hpp"
#include "segdms/rng.hpp"

namespace segdms {

// Named parameter matrices in stable insertion order, each with a gradient
// buffer of the same shape.
template <typename T>
class ParamStore {
  public:
    int add(const std::string& name, Matrix<T> value);
    bool contains(const std::string& name) const { return by_name_.count(name) != 0; }
    int index_of(const std::string& name) const;  // throws ConfigError when absent

    int count() const { return static_cast<int>(values_.size()); }
    const std::string& name(int idx) const { return names_[static_cast<std::size_t>(idx)]; }
    Matrix<T>& value(int idx) { return values_[static_cast<std::size_t>(idx)]; }
    const Matrix<T>& value(int idx) const { return values_[static_cast<std::size_t>(idx)]; }
    Matrix<T>& value(const std::string& name) { return value(index_of(name)); }
    const Matrix<T>& value(const std::string& name) const { return value(index_of(name)); }
    Matrix<T>& grad(int idx) { return grads_[static_cast<std::size_t>(idx)]; }
    const Matrix<T>& grad(int idx) const { return grads_[static_cast<std::size_t>(idx)]; }
    Matrix<T>& grad(const std::string& name) { return grad(index_of(name)); }

    void zero_grads();
    std::size_t scalar_count() const;

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (int i = 0; i < count(); ++i) out.add(name(i), value(i).template cast<U>());
        return out;
    }

  private:
    std::vector<std::string> names_;
    std::vector<Matrix<T>> values_;
    std::vector<Matrix<T>> grads_;
    std::unordered_map<std::string, int> by_name_;
};

template <typename T>
struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<Matrix<T>> m;
    std::vector<Matrix<T>> v;
};

// Standard bias-corrected Adam update; zeroes gradients and bumps the step.
// Moment buffers are created on first use and must keep matching shapes.
template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state);

// weight init: uniform(-a, a), a = sqrt(6 / (fan_in + fan_out))
template <typename T>
Matrix<T> xavier_uniform(int rows, int cols, Rng& rng);

using ParamHeader = std::map<std::string, std::string>;

// Binary parameter file: magic "DMS1", a format version byte, a
// length-prefixed key=value header, then per-parameter records (name, shape,
// little-endian 32-bit reals) in store order.
void save_params(const ParamStore<float>& params, const std::string& path,
                 const ParamHeader& header);

struct LoadedParams {
    ParamStore<float> params;
    ParamHeader header;
};

LoadedParams load_params(const std::string& path);

}  // namespace segdms
