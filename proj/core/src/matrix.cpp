#include "segdms/matrix.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "segdms/errors.hpp"

namespace segdms {

namespace {

template <typename T>
using EigenRowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
Eigen::Map<const EigenRowMajor<T>> map(const Matrix<T>& m) {
    return {m.data(), m.rows(), m.cols()};
}

template <typename T>
Eigen::Map<EigenRowMajor<T>> map(Matrix<T>& m) {
    return {m.data(), m.rows(), m.cols()};
}

std::string shape_str(int r, int c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

[[noreturn]] void shape_fail(const char* op, int ar, int ac, int br, int bc) {
    throw NumericError(std::string(op) + ": incompatible shapes " + shape_str(ar, ac) + " and " +
                       shape_str(br, bc));
}

}  // namespace

template <typename T>
std::size_t Matrix<T>::check_shape(int rows, int cols) {
    if (rows < 0 || cols < 0 || (rows == 0) != (cols == 0)) {
        throw NumericError("bad matrix shape " + shape_str(rows, cols));
    }
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
}

template <typename T>
Matrix<T> Matrix<T>::from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r ? static_cast<int>(rows.begin()->size()) : 0;
    Matrix out(r, c);
    int i = 0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c) {
            throw NumericError("ragged initializer: row " + std::to_string(i) + " has " +
                               std::to_string(row.size()) + " entries, expected " +
                               std::to_string(c));
        }
        int j = 0;
        for (T v : row) out(i, j++) = v;
        ++i;
    }
    return out;
}

template <typename T>
bool all_finite(const Matrix<T>& m) {
    return map(m).allFinite();
}

template <typename T>
void check_finite(const Matrix<T>& m, const char* what) {
    if (!all_finite(m)) {
        throw NumericError(std::string(what) + " produced a non-finite value");
    }
}

template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b, bool trans_a, bool trans_b) {
    const int ar = trans_a ? a.cols() : a.rows();
    const int ac = trans_a ? a.rows() : a.cols();
    const int br = trans_b ? b.cols() : b.rows();
    const int bc = trans_b ? b.rows() : b.cols();
    if (ac != br) shape_fail("matmul", ar, ac, br, bc);
    Matrix<T> out(ar, bc);
    add_matmul(out, a, b, trans_a, trans_b);
    return out;
}

template <typename T>
void add_matmul(Matrix<T>& acc, const Matrix<T>& a, const Matrix<T>& b, bool trans_a,
                bool trans_b) {
    const int ar = trans_a ? a.cols() : a.rows();
    const int ac = trans_a ? a.rows() : a.cols();
    const int br = trans_b ? b.cols() : b.rows();
    const int bc = trans_b ? b.rows() : b.cols();
    if (ac != br) shape_fail("matmul", ar, ac, br, bc);
    if (acc.rows() != ar || acc.cols() != bc) {
        shape_fail("matmul accumulator", acc.rows(), acc.cols(), ar, bc);
    }
    auto out = map(acc);
    if (!trans_a && !trans_b) {
        out.noalias() += map(a) * map(b);
    } else if (trans_a && !trans_b) {
        out.noalias() += map(a).transpose() * map(b);
    } else if (!trans_a && trans_b) {
        out.noalias() += map(a) * map(b).transpose();
    } else {
        out.noalias() += map(a).transpose() * map(b).transpose();
    }
}

template <typename T>
Matrix<T> add(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        shape_fail("add", a.rows(), a.cols(), b.rows(), b.cols());
    }
    Matrix<T> out = a;
    map(out) += map(b);
    return out;
}

template <typename T>
void add_in_place(Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        shape_fail("add", a.rows(), a.cols(), b.rows(), b.cols());
    }
    map(a) += map(b);
}

template <typename T>
Matrix<T> scale(const Matrix<T>& a, T s) {
    Matrix<T> out = a;
    map(out) *= s;
    return out;
}

template <typename T>
Matrix<T> add_row(const Matrix<T>& a, const Matrix<T>& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        shape_fail("add_row", a.rows(), a.cols(), row.rows(), row.cols());
    }
    Matrix<T> out = a;
    map(out).rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(row.data(),
                                                                                row.cols());
    return out;
}

template <typename T>
Matrix<T> relu(const Matrix<T>& a) {
    Matrix<T> out = a;
    map(out) = map(out).cwiseMax(T(0));
    return out;
}

template <typename T>
Matrix<T> row_softmax(const Matrix<T>& a) {
    Matrix<T> out = a;
    auto m = map(out);
    for (int r = 0; r < out.rows(); ++r) {
        auto row = m.row(r);
        row = (row.array() - row.maxCoeff()).exp();
        row /= row.sum();
    }
    return out;
}

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& a, const Matrix<T>& gain, const Matrix<T>& bias, T eps,
                     std::vector<T>* mean_out, std::vector<T>* inv_std_out) {
    if (gain.rows() != 1 || gain.cols() != a.cols() || bias.rows() != 1 ||
        bias.cols() != a.cols()) {
        shape_fail("layer_norm", a.rows(), a.cols(), gain.rows(), gain.cols());
    }
    Matrix<T> out(a.rows(), a.cols());
    if (mean_out) mean_out->resize(static_cast<std::size_t>(a.rows()));
    if (inv_std_out) inv_std_out->resize(static_cast<std::size_t>(a.rows()));
    const T inv_n = T(1) / static_cast<T>(a.cols());
    for (int r = 0; r < a.rows(); ++r) {
        T mean = 0;
        for (int c = 0; c < a.cols(); ++c) mean += a(r, c);
        mean *= inv_n;
        T var = 0;
        for (int c = 0; c < a.cols(); ++c) {
            const T d = a(r, c) - mean;
            var += d * d;
        }
        var *= inv_n;
        const T inv_std = T(1) / std::sqrt(var + eps);
        for (int c = 0; c < a.cols(); ++c) {
            out(r, c) = (a(r, c) - mean) * inv_std * gain(0, c) + bias(0, c);
        }
        if (mean_out) (*mean_out)[static_cast<std::size_t>(r)] = mean;
        if (inv_std_out) (*inv_std_out)[static_cast<std::size_t>(r)] = inv_std;
    }
    return out;
}

template <typename T>
Matrix<T> mean_rows(const Matrix<T>& a) {
    if (a.rows() == 0) throw NumericError("mean_rows of an empty matrix");
    Matrix<T> out(1, a.cols());
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(out.data(), a.cols()) =
        map(a).colwise().mean();
    return out;
}

template <typename T>
Matrix<T> slice_cols(const Matrix<T>& a, int c0, int c1) {
    if (c0 < 0 || c1 > a.cols() || c0 >= c1) {
        throw NumericError("slice_cols [" + std::to_string(c0) + "," + std::to_string(c1) +
                           ") out of range for " + shape_str(a.rows(), a.cols()));
    }
    Matrix<T> out(a.rows(), c1 - c0);
    map(out) = map(a).middleCols(c0, c1 - c0);
    return out;
}

template <typename T>
Matrix<T> concat_cols(const std::vector<Matrix<T>>& parts) {
    if (parts.empty()) throw NumericError("concat_cols of zero parts");
    int cols = 0;
    for (const Matrix<T>& p : parts) {
        if (p.rows() != parts.front().rows()) {
            shape_fail("concat_cols", parts.front().rows(), parts.front().cols(), p.rows(),
                       p.cols());
        }
        cols += p.cols();
    }
    Matrix<T> out(parts.front().rows(), cols);
    int at = 0;
    for (const Matrix<T>& p : parts) {
        map(out).middleCols(at, p.cols()) = map(p);
        at += p.cols();
    }
    return out;
}

// float drives training; double drives the finite-difference checking mode
#define SEGDMS_INSTANTIATE(T)                                                                  \
    template class Matrix<T>;                                                                  \
    template bool all_finite<T>(const Matrix<T>&);                                             \
    template void check_finite<T>(const Matrix<T>&, const char*);                              \
    template Matrix<T> matmul<T>(const Matrix<T>&, const Matrix<T>&, bool, bool);              \
    template void add_matmul<T>(Matrix<T>&, const Matrix<T>&, const Matrix<T>&, bool, bool);   \
    template Matrix<T> add<T>(const Matrix<T>&, const Matrix<T>&);                             \
    template void add_in_place<T>(Matrix<T>&, const Matrix<T>&);                               \
    template Matrix<T> scale<T>(const Matrix<T>&, T);                                          \
    template Matrix<T> add_row<T>(const Matrix<T>&, const Matrix<T>&);                         \
    template Matrix<T> relu<T>(const Matrix<T>&);                                              \
    template Matrix<T> row_softmax<T>(const Matrix<T>&);                                       \
    template Matrix<T> layer_norm<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&, T,  \
                                     std::vector<T>*, std::vector<T>*);                        \
    template Matrix<T> mean_rows<T>(const Matrix<T>&);                                         \
    template Matrix<T> slice_cols<T>(const Matrix<T>&, int, int);                              \
    template Matrix<T> concat_cols<T>(const std::vector<Matrix<T>>&);

SEGDMS_INSTANTIATE(float)
SEGDMS_INSTANTIATE(double)

#undef SEGDMS_INSTANTIATE

}  // namespace segdms
