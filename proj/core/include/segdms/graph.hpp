#pragma once

#include <memory>
#include <string>
#include <vector>

#include "segdms/matrix.hpp"
#include "segdms/params.hpp"

namespace segdms {

// Handle to a node on a Tape. Only meaningful for the tape that produced it.
struct Var {
    int id = -1;
};

// Extension point for ops whose forward/backward pair is owned by another
// module (CRF likelihood, length conversion). One instance backs one node and
// may keep forward-pass state for its backward.
template <typename T>
class CustomOp {
  public:
    virtual ~CustomOp() = default;
    virtual const char* name() const = 0;
    virtual Matrix<T> forward(const std::vector<const Matrix<T>*>& inputs) = 0;
    // input_grads[i] is pre-sized to inputs[i]'s shape; accumulate into it.
    virtual void backward(const Matrix<T>& out_grad, const std::vector<const Matrix<T>*>& inputs,
                          std::vector<Matrix<T>*>& input_grads) = 0;
};

// Reverse-mode autodiff over a linear record of ops. Nodes are created in
// topological order; backward() walks them in reverse and accumulates
// parameter gradients into the bound ParamStore. Every op checks its output
// for NaN/Inf and fails hard on the first non-finite value.
template <typename T>
class Tape {
  public:
    explicit Tape(ParamStore<T>* params = nullptr) : params_(params) {}

    Var param(const std::string& name);
    Var constant(Matrix<T> value);

    Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
    Var add(Var a, Var b);
    Var add_row(Var a, Var row);
    Var scale(Var a, T s);
    Var relu(Var a);
    Var row_softmax(Var a);
    Var layer_norm(Var x, Var gain, Var bias);
    Var mean_rows(Var a);
    Var embed(Var table, const std::vector<int>& ids);
    Var slice_cols(Var a, int c0, int c1);
    Var concat_cols(const std::vector<Var>& parts);
    // sum over rows of -log softmax(logits)[row, target[row]]; returns 1x1
    Var softmax_cross_entropy(Var logits, const std::vector<int>& targets);
    Var custom(std::shared_ptr<CustomOp<T>> op, const std::vector<Var>& inputs);

    const Matrix<T>& value(Var v) const;
    // Seeds d(loss)=1 (loss must be 1x1) and accumulates parameter gradients.
    void backward(Var loss);

    int node_count() const { return static_cast<int>(nodes_.size()); }
    static constexpr T layer_norm_eps() { return T(1e-5); }

  private:
    enum class Op {
        kConst,
        kParam,
        kMatmul,
        kAdd,
        kAddRow,
        kScale,
        kRelu,
        kRowSoftmax,
        kLayerNorm,
        kMeanRows,
        kEmbed,
        kSliceCols,
        kConcatCols,
        kSoftmaxXent,
        kCustom,
    };

    struct Node {
        Op op;
        Matrix<T> value;
        const Matrix<T>* ref = nullptr;  // kParam aliases the store instead of copying
        Matrix<T> grad;                  // sized on demand during backward
        std::vector<int> inputs;
        std::vector<int> int_args;   // transpose flags / ids / slice bounds / targets
        T scalar_arg = T(0);
        std::vector<T> saved_a, saved_b;  // layer_norm row stats
        Matrix<T> saved_mat;              // softmax cache for cross-entropy
        std::shared_ptr<CustomOp<T>> custom;
        int param_index = -1;

        const Matrix<T>& out() const { return ref ? *ref : value; }
    };

    Var push(Node node, const char* what);
    const Matrix<T>& val(Var v) const;
    Matrix<T>& grad_of(int id);
    void check_var(Var v) const;

    ParamStore<T>* params_ = nullptr;
    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

using TapeF = Tape<float>;
using TapeD = Tape<double>;

}  // namespace segdms
