#include "segdms/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "segdms/errors.hpp"

namespace segdms {

template <typename T>
int ParamStore<T>::add(const std::string& name, Matrix<T> value) {
    if (name.empty()) throw ConfigError("parameter name must be non-empty");
    if (by_name_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    const int idx = count();
    grads_.emplace_back(value.rows(), value.cols());
    names_.push_back(name);
    values_.push_back(std::move(value));
    by_name_.emplace(name, idx);
    return idx;
}

template <typename T>
int ParamStore<T>::index_of(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
}

template <typename T>
void ParamStore<T>::zero_grads() {
    for (Matrix<T>& g : grads_) g.fill(T(0));
}

template <typename T>
std::size_t ParamStore<T>::scalar_count() const {
    std::size_t n = 0;
    for (const Matrix<T>& v : values_) n += v.size();
    return n;
}

template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state) {
    if (state.m.empty()) {
        for (int i = 0; i < params.count(); ++i) {
            state.m.emplace_back(params.value(i).rows(), params.value(i).cols());
            state.v.emplace_back(params.value(i).rows(), params.value(i).cols());
        }
    }
    if (static_cast<int>(state.m.size()) != params.count()) {
        throw NumericError("optimizer tracks " + std::to_string(state.m.size()) +
                           " parameters but the store has " + std::to_string(params.count()));
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (int i = 0; i < params.count(); ++i) {
        Matrix<T>& p = params.value(i);
        Matrix<T>& g = params.grad(i);
        Matrix<T>& m = state.m[static_cast<std::size_t>(i)];
        Matrix<T>& v = state.v[static_cast<std::size_t>(i)];
        if (m.rows() != p.rows() || m.cols() != p.cols()) {
            throw NumericError("optimizer state shape drifted for parameter '" + params.name(i) +
                               "'");
        }
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double gk = static_cast<double>(g.data()[k]);
            const double mk = state.beta1 * m.data()[k] + (1.0 - state.beta1) * gk;
            const double vk = state.beta2 * v.data()[k] + (1.0 - state.beta2) * gk * gk;
            m.data()[k] = static_cast<T>(mk);
            v.data()[k] = static_cast<T>(vk);
            const double update = state.lr * (mk / bc1) / (std::sqrt(vk / bc2) + state.eps);
            p.data()[k] = static_cast<T>(p.data()[k] - update);
        }
        check_finite(p, "adam_step");
    }
    params.zero_grads();
}

template <typename T>
Matrix<T> xavier_uniform(int rows, int cols, Rng& rng) {
    const double a = std::sqrt(6.0 / (static_cast<double>(rows) + static_cast<double>(cols)));
    Matrix<T> out(rows, cols);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out.data()[k] = static_cast<T>((2.0 * rng.next_real() - 1.0) * a);
    }
    return out;
}

template class ParamStore<float>;
template class ParamStore<double>;
template void adam_step<float>(ParamStore<float>&, AdamState<float>&);
template void adam_step<double>(ParamStore<double>&, AdamState<double>&);
template Matrix<float> xavier_uniform<float>(int, int, Rng&);
template Matrix<double> xavier_uniform<double>(int, int, Rng&);

namespace {

constexpr char kMagic[4] = {'D', 'M', 'S', '1'};
constexpr unsigned char kFormatVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw DataError("parameter file '" + path + "' is truncated");
    }
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

static_assert(sizeof(float) == 4, "serialization assumes 32-bit floats");

void write_f32(std::ostream& out, const float* data, std::size_t n) {
    std::uint32_t bits;
    for (std::size_t i = 0; i < n; ++i) {
        std::memcpy(&bits, data + i, 4);
        write_u32(out, bits);
    }
}

void read_f32(std::istream& in, float* data, std::size_t n, const std::string& path) {
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t bits = read_u32(in, path);
        std::memcpy(data + i, &bits, 4);
    }
}

}  // namespace

void save_params(const ParamStore<float>& params, const std::string& path,
                 const ParamHeader& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out.write(kMagic, 4);
    out.put(static_cast<char>(kFormatVersion));
    std::string header_text;
    for (const auto& [key, value] : header) {
        if (key.find('=') != std::string::npos || key.find('\n') != std::string::npos ||
            value.find('\n') != std::string::npos) {
            throw ConfigError("header entry '" + key + "' contains a reserved character");
        }
        header_text += key + "=" + value + "\n";
    }
    write_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    write_u32(out, static_cast<std::uint32_t>(params.count()));
    for (int i = 0; i < params.count(); ++i) {
        const std::string& name = params.name(i);
        const Matrix<float>& m = params.value(i);
        write_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(out, static_cast<std::uint32_t>(m.rows()));
        write_u32(out, static_cast<std::uint32_t>(m.cols()));
        write_f32(out, m.data(), m.size());
    }
    if (!out) throw DataError("write to '" + path + "' failed");
}

LoadedParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open parameter file '" + path + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("'" + path + "' is not a parameter file (bad magic)");
    }
    const int version = in.get();
    if (version != kFormatVersion) {
        throw DataError("'" + path + "' has unsupported format version " +
                        std::to_string(version));
    }
    const std::uint32_t header_len = read_u32(in, path);
    std::string header_text(header_len, '\0');
    if (!in.read(header_text.data(), header_len)) {
        throw DataError("parameter file '" + path + "' is truncated");
    }
    LoadedParams loaded;
    std::size_t pos = 0;
    while (pos < header_text.size()) {
        std::size_t nl = header_text.find('\n', pos);
        if (nl == std::string::npos) nl = header_text.size();
        const std::string line = header_text.substr(pos, nl - pos);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw DataError("malformed header line '" + line + "'");
        loaded.header[line.substr(0, eq)] = line.substr(eq + 1);
        pos = nl + 1;
    }
    const std::uint32_t count = read_u32(in, path);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(in, path);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) {
            throw DataError("parameter file '" + path + "' is truncated");
        }
        const std::uint32_t rows = read_u32(in, path);
        const std::uint32_t cols = read_u32(in, path);
        if (rows > (1u << 24) || cols > (1u << 24)) {
            throw DataError("parameter '" + name + "' in '" + path +
                            "' declares an implausible shape");
        }
        Matrix<float> m(static_cast<int>(rows), static_cast<int>(cols));
        read_f32(in, m.data(), m.size(), path);
        loaded.params.add(name, std::move(m));
    }
    return loaded;
}

}  // namespace segdms
