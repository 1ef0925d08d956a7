#include "segdms/length_conversion.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "segdms/errors.hpp"

namespace segdms {

namespace {

// raw scores q[t,t'] before the row softmax
template <typename T>
Matrix<T> conversion_scores(int src_len, int dst_len, T sigma) {
    if (src_len < 1 || dst_len < 1) {
        throw NumericError("length conversion needs positive lengths, got " +
                           std::to_string(src_len) + " -> " + std::to_string(dst_len));
    }
    if (!(sigma > T(0))) throw NumericError("length conversion needs sigma > 0");
    const double ratio = static_cast<double>(src_len) / static_cast<double>(dst_len);
    const double inv_two_sigma_sq = 1.0 / (2.0 * static_cast<double>(sigma) * sigma);
    Matrix<T> q(dst_len, src_len);
    for (int t = 0; t < dst_len; ++t) {
        for (int s = 0; s < src_len; ++s) {
            const double d = s - ratio * t;
            q(t, s) = static_cast<T>(-d * d * inv_two_sigma_sq);
        }
    }
    return q;
}

}  // namespace

template <typename T>
Matrix<T> conversion_weights(int src_len, int dst_len, T sigma) {
    return row_softmax(conversion_scores(src_len, dst_len, sigma));
}

template <typename T>
Matrix<T> convert_hidden(const Matrix<T>& h, int dst_len, T sigma) {
    return matmul(conversion_weights(h.rows(), dst_len, sigma), h);
}

namespace {

template <typename T>
class LengthConvertOp final : public CustomOp<T> {
  public:
    explicit LengthConvertOp(int dst_len) : dst_len_(dst_len) {}

    const char* name() const override { return "length_convert"; }

    Matrix<T> forward(const std::vector<const Matrix<T>*>& inputs) override {
        const Matrix<T>& h = *inputs[0];
        const Matrix<T>& u = *inputs[1];
        if (u.rows() != 1 || u.cols() != 1) {
            throw NumericError("length_convert expects u as a 1x1 matrix");
        }
        const T sigma = std::exp(u(0, 0));
        q_ = conversion_scores(h.rows(), dst_len_, sigma);
        w_ = row_softmax(q_);
        return matmul(w_, h);
    }

    void backward(const Matrix<T>& out_grad, const std::vector<const Matrix<T>*>& inputs,
                  std::vector<Matrix<T>*>& input_grads) override {
        const Matrix<T>& h = *inputs[0];
        // dh += W^T dz
        add_matmul(*input_grads[0], w_, out_grad, true, false);
        // dW = dz h^T, back through the row softmax, then through
        // q = c * exp(-2u) which gives dq/du = -2q, so du = -2 sum(dq ⊙ q)
        Matrix<T> dw = matmul(out_grad, h, false, true);
        T du = 0;
        for (int r = 0; r < w_.rows(); ++r) {
            T dot = 0;
            for (int c = 0; c < w_.cols(); ++c) dot += dw(r, c) * w_(r, c);
            for (int c = 0; c < w_.cols(); ++c) {
                const T dq = w_(r, c) * (dw(r, c) - dot);
                du += dq * (T(-2) * q_(r, c));
            }
        }
        (*input_grads[1])(0, 0) += du;
    }

  private:
    int dst_len_;
    Matrix<T> q_, w_;
};

}  // namespace

template <typename T>
Var length_convert(Tape<T>& tape, Var h, Var u, int dst_len) {
    return tape.custom(std::make_shared<LengthConvertOp<T>>(dst_len), {h, u});
}

template <typename T>
int pick_class(const Matrix<T>& logits, PickMode mode, Rng* rng) {
    if (logits.rows() != 1 || logits.cols() < 1) {
        throw NumericError("class picking expects a single logit row");
    }
    if (mode == PickMode::kArgmax) {
        int best = 0;
        for (int c = 1; c < logits.cols(); ++c) {
            if (logits(0, c) > logits(0, best)) best = c;
        }
        return best;
    }
    if (!rng) throw ConfigError("sampled class picking needs an rng");
    double mx = static_cast<double>(logits(0, 0));
    for (int c = 1; c < logits.cols(); ++c) mx = std::max(mx, static_cast<double>(logits(0, c)));
    std::vector<double> p(static_cast<std::size_t>(logits.cols()));
    double z = 0;
    for (int c = 0; c < logits.cols(); ++c) {
        p[static_cast<std::size_t>(c)] = std::exp(static_cast<double>(logits(0, c)) - mx);
        z += p[static_cast<std::size_t>(c)];
    }
    for (double& v : p) v /= z;
    return static_cast<int>(rng->next_categorical(p));
}

#define SEGDMS_INSTANTIATE(T)                                                 \
    template Matrix<T> conversion_weights<T>(int, int, T);                    \
    template Matrix<T> convert_hidden<T>(const Matrix<T>&, int, T);           \
    template Var length_convert<T>(Tape<T>&, Var, Var, int);                  \
    template int pick_class<T>(const Matrix<T>&, PickMode, Rng*);

SEGDMS_INSTANTIATE(float)
SEGDMS_INSTANTIATE(double)

#undef SEGDMS_INSTANTIATE

}  // namespace segdms
