#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <vector>

namespace segdms {

// 64-byte-aligned storage: vectorized kernels peel an unaligned head before
// the packet body, so reduction order (and hence low result bits) would vary
// with the heap address. A fixed alignment pins one code path per shape and
// keeps every run bit-reproducible.
template <typename T>
struct AlignedAlloc {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAlloc() = default;
    template <typename U>
    AlignedAlloc(const AlignedAlloc<U>&) {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }

    friend bool operator==(const AlignedAlloc&, const AlignedAlloc&) { return true; }
};

// Dense row-major 2-D array. float carries training arithmetic; double backs
// the gradient-checking mode. Heavy kernels live in matrix.cpp (Eigen-backed).
template <typename T>
class Matrix {
  public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(check_shape(rows, cols), T(0)) {}
    Matrix(int rows, int cols, T fill)
        : rows_(rows), cols_(cols), data_(check_shape(rows, cols), fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<T>> rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    const T& operator()(int r, int c) const {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }

    void fill(T v) { data_.assign(data_.size(), v); }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

    // converts between the training and checking precisions
    template <typename U>
    Matrix<U> cast() const {
        Matrix<U> out(rows_, cols_);
        for (std::size_t i = 0; i < data_.size(); ++i) out.data()[i] = static_cast<U>(data_[i]);
        return out;
    }

  private:
    static std::size_t check_shape(int rows, int cols);

    int rows_ = 0;
    int cols_ = 0;
    std::vector<T, AlignedAlloc<T>> data_;
};

using MatF = Matrix<float>;
using MatD = Matrix<double>;

// Throws NumericError naming `what` if any entry is NaN or infinite.
template <typename T>
void check_finite(const Matrix<T>& m, const char* what);

template <typename T>
bool all_finite(const Matrix<T>& m);

// out = op_a(a) * op_b(b) where op is optional transposition.
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b, bool trans_a = false,
                 bool trans_b = false);

// acc += op_a(a) * op_b(b); the workhorse of backward accumulation.
template <typename T>
void add_matmul(Matrix<T>& acc, const Matrix<T>& a, const Matrix<T>& b, bool trans_a = false,
                bool trans_b = false);

template <typename T>
Matrix<T> add(const Matrix<T>& a, const Matrix<T>& b);

template <typename T>
void add_in_place(Matrix<T>& a, const Matrix<T>& b);

template <typename T>
Matrix<T> scale(const Matrix<T>& a, T s);

// broadcast-add a 1×cols row to every row of a
template <typename T>
Matrix<T> add_row(const Matrix<T>& a, const Matrix<T>& row);

template <typename T>
Matrix<T> relu(const Matrix<T>& a);

// numerically guarded: subtracts the row max before exponentiating
template <typename T>
Matrix<T> row_softmax(const Matrix<T>& a);

// per-row mean/variance normalization; gain/bias are 1×cols. When mean_out /
// inv_std_out are non-null they receive one entry per row (used by backward).
template <typename T>
Matrix<T> layer_norm(const Matrix<T>& a, const Matrix<T>& gain, const Matrix<T>& bias, T eps,
                     std::vector<T>* mean_out = nullptr, std::vector<T>* inv_std_out = nullptr);

template <typename T>
Matrix<T> mean_rows(const Matrix<T>& a);

// columns [c0, c1) of a
template <typename T>
Matrix<T> slice_cols(const Matrix<T>& a, int c0, int c1);

template <typename T>
Matrix<T> concat_cols(const std::vector<Matrix<T>>& parts);

}  // namespace segdms
