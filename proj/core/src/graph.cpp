#include "segdms/graph.hpp"

#include <cmath>
#include <string>

#include "segdms/errors.hpp"

namespace segdms {

template <typename T>
void Tape<T>::check_var(Var v) const {
    if (v.id < 0 || v.id >= node_count()) {
        throw NumericError("variable handle " + std::to_string(v.id) +
                           " does not belong to this tape");
    }
}

template <typename T>
const Matrix<T>& Tape<T>::val(Var v) const {
    check_var(v);
    return nodes_[static_cast<std::size_t>(v.id)].out();
}

template <typename T>
const Matrix<T>& Tape<T>::value(Var v) const {
    return val(v);
}

template <typename T>
Matrix<T>& Tape<T>::grad_of(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty()) n.grad = Matrix<T>(n.out().rows(), n.out().cols());
    return n.grad;
}

template <typename T>
Var Tape<T>::push(Node node, const char* what) {
    if (!node.ref) check_finite(node.value, what);
    nodes_.push_back(std::move(node));
    return Var{node_count() - 1};
}

template <typename T>
Var Tape<T>::param(const std::string& name) {
    if (!params_) throw ConfigError("tape has no parameter store bound");
    Node n;
    n.op = Op::kParam;
    n.param_index = params_->index_of(name);
    // aliased, not copied: the store must outlive the tape and stay unmodified
    // until backward has run (the optimizer step happens after tapes retire)
    n.ref = &params_->value(n.param_index);
    return push(std::move(n), "param");
}

template <typename T>
Var Tape<T>::constant(Matrix<T> value) {
    Node n;
    n.op = Op::kConst;
    n.value = std::move(value);
    return push(std::move(n), "constant");
}

template <typename T>
Var Tape<T>::matmul(Var a, Var b, bool trans_a, bool trans_b) {
    Node n;
    n.op = Op::kMatmul;
    n.inputs = {a.id, b.id};
    n.int_args = {trans_a ? 1 : 0, trans_b ? 1 : 0};
    n.value = segdms::matmul(val(a), val(b), trans_a, trans_b);
    return push(std::move(n), "matmul");
}

template <typename T>
Var Tape<T>::add(Var a, Var b) {
    Node n;
    n.op = Op::kAdd;
    n.inputs = {a.id, b.id};
    n.value = segdms::add(val(a), val(b));
    return push(std::move(n), "add");
}

template <typename T>
Var Tape<T>::add_row(Var a, Var row) {
    Node n;
    n.op = Op::kAddRow;
    n.inputs = {a.id, row.id};
    n.value = segdms::add_row(val(a), val(row));
    return push(std::move(n), "add_row");
}

template <typename T>
Var Tape<T>::scale(Var a, T s) {
    Node n;
    n.op = Op::kScale;
    n.inputs = {a.id};
    n.scalar_arg = s;
    n.value = segdms::scale(val(a), s);
    return push(std::move(n), "scale");
}

template <typename T>
Var Tape<T>::relu(Var a) {
    Node n;
    n.op = Op::kRelu;
    n.inputs = {a.id};
    n.value = segdms::relu(val(a));
    return push(std::move(n), "relu");
}

template <typename T>
Var Tape<T>::row_softmax(Var a) {
    Node n;
    n.op = Op::kRowSoftmax;
    n.inputs = {a.id};
    n.value = segdms::row_softmax(val(a));
    return push(std::move(n), "row_softmax");
}

template <typename T>
Var Tape<T>::layer_norm(Var x, Var gain, Var bias) {
    Node n;
    n.op = Op::kLayerNorm;
    n.inputs = {x.id, gain.id, bias.id};
    n.value = segdms::layer_norm(val(x), val(gain), val(bias), layer_norm_eps(), &n.saved_a,
                                 &n.saved_b);
    return push(std::move(n), "layer_norm");
}

template <typename T>
Var Tape<T>::mean_rows(Var a) {
    Node n;
    n.op = Op::kMeanRows;
    n.inputs = {a.id};
    n.value = segdms::mean_rows(val(a));
    return push(std::move(n), "mean_rows");
}

template <typename T>
Var Tape<T>::embed(Var table, const std::vector<int>& ids) {
    const Matrix<T>& tab = val(table);
    if (ids.empty()) throw NumericError("embed of an empty id list");
    Node n;
    n.op = Op::kEmbed;
    n.inputs = {table.id};
    n.value = Matrix<T>(static_cast<int>(ids.size()), tab.cols());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const int id = ids[r];
        if (id < 0 || id >= tab.rows()) {
            throw NumericError("embed id " + std::to_string(id) + " outside table of " +
                               std::to_string(tab.rows()) + " rows");
        }
        n.int_args.push_back(id);
        for (int c = 0; c < tab.cols(); ++c) n.value(static_cast<int>(r), c) = tab(id, c);
    }
    return push(std::move(n), "embed");
}

template <typename T>
Var Tape<T>::slice_cols(Var a, int c0, int c1) {
    Node n;
    n.op = Op::kSliceCols;
    n.inputs = {a.id};
    n.int_args = {c0, c1};
    n.value = segdms::slice_cols(val(a), c0, c1);
    return push(std::move(n), "slice_cols");
}

template <typename T>
Var Tape<T>::concat_cols(const std::vector<Var>& parts) {
    Node n;
    n.op = Op::kConcatCols;
    std::vector<Matrix<T>> values;
    for (Var p : parts) {
        n.inputs.push_back(p.id);
        values.push_back(val(p));
    }
    n.value = segdms::concat_cols(values);
    return push(std::move(n), "concat_cols");
}

template <typename T>
Var Tape<T>::softmax_cross_entropy(Var logits, const std::vector<int>& targets) {
    const Matrix<T>& l = val(logits);
    if (static_cast<int>(targets.size()) != l.rows()) {
        throw NumericError("cross-entropy got " + std::to_string(targets.size()) +
                           " targets for " + std::to_string(l.rows()) + " rows");
    }
    Node n;
    n.op = Op::kSoftmaxXent;
    n.inputs = {logits.id};
    n.saved_mat = segdms::row_softmax(l);
    T nll = 0;
    for (int r = 0; r < l.rows(); ++r) {
        const int t = targets[static_cast<std::size_t>(r)];
        if (t < 0 || t >= l.cols()) {
            throw NumericError("cross-entropy target " + std::to_string(t) + " outside " +
                               std::to_string(l.cols()) + " classes");
        }
        n.int_args.push_back(t);
        // -log softmax via the stable log-sum-exp, not log of the cached probs
        T mx = l(r, 0);
        for (int c = 1; c < l.cols(); ++c) mx = std::max(mx, l(r, c));
        T lse = 0;
        for (int c = 0; c < l.cols(); ++c) lse += std::exp(l(r, c) - mx);
        nll += (mx + std::log(lse)) - l(r, t);
    }
    n.value = Matrix<T>(1, 1);
    n.value(0, 0) = nll;
    return push(std::move(n), "softmax_cross_entropy");
}

template <typename T>
Var Tape<T>::custom(std::shared_ptr<CustomOp<T>> op, const std::vector<Var>& inputs) {
    Node n;
    n.op = Op::kCustom;
    std::vector<const Matrix<T>*> in_values;
    for (Var v : inputs) {
        n.inputs.push_back(v.id);
        in_values.push_back(&val(v));
    }
    const char* what = op->name();
    n.custom = std::move(op);
    n.value = n.custom->forward(in_values);
    return push(std::move(n), what);
}

template <typename T>
void Tape<T>::backward(Var loss) {
    check_var(loss);
    if (backward_done_) throw NumericError("backward already ran on this tape");
    backward_done_ = true;
    const Matrix<T>& l = nodes_[static_cast<std::size_t>(loss.id)].out();
    if (l.rows() != 1 || l.cols() != 1) {
        throw NumericError("backward needs a scalar loss, got " + std::to_string(l.rows()) + "x" +
                           std::to_string(l.cols()));
    }
    grad_of(loss.id)(0, 0) = T(1);

    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.grad.empty()) continue;  // not reachable from the loss
        const Matrix<T>& g = n.grad;
        switch (n.op) {
            case Op::kConst:
                break;
            case Op::kParam:
                add_in_place(params_->grad(n.param_index), g);
                break;
            case Op::kMatmul: {
                const bool ta = n.int_args[0] != 0;
                const bool tb = n.int_args[1] != 0;
                const Matrix<T>& a = nodes_[static_cast<std::size_t>(n.inputs[0])].out();
                const Matrix<T>& b = nodes_[static_cast<std::size_t>(n.inputs[1])].out();
                Matrix<T>& ga = grad_of(n.inputs[0]);
                Matrix<T>& gb = grad_of(n.inputs[1]);
                if (!ta && !tb) {
                    add_matmul(ga, g, b, false, true);
                    add_matmul(gb, a, g, true, false);
                } else if (ta && !tb) {
                    add_matmul(ga, b, g, false, true);
                    add_matmul(gb, a, g, false, false);
                } else if (!ta && tb) {
                    add_matmul(ga, g, b, false, false);
                    add_matmul(gb, g, a, true, false);
                } else {
                    add_matmul(ga, b, g, true, true);
                    add_matmul(gb, g, a, true, true);
                }
                break;
            }
            case Op::kAdd:
                add_in_place(grad_of(n.inputs[0]), g);
                add_in_place(grad_of(n.inputs[1]), g);
                break;
            case Op::kAddRow: {
                add_in_place(grad_of(n.inputs[0]), g);
                Matrix<T>& gr = grad_of(n.inputs[1]);
                for (int r = 0; r < g.rows(); ++r) {
                    for (int c = 0; c < g.cols(); ++c) gr(0, c) += g(r, c);
                }
                break;
            }
            case Op::kScale:
                add_in_place(grad_of(n.inputs[0]), segdms::scale(g, n.scalar_arg));
                break;
            case Op::kRelu: {
                Matrix<T>& ga = grad_of(n.inputs[0]);
                for (std::size_t k = 0; k < g.size(); ++k) {
                    if (n.value.data()[k] > T(0)) ga.data()[k] += g.data()[k];
                }
                break;
            }
            case Op::kRowSoftmax: {
                Matrix<T>& ga = grad_of(n.inputs[0]);
                const Matrix<T>& y = n.value;
                for (int r = 0; r < y.rows(); ++r) {
                    T dot = 0;
                    for (int c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
                    for (int c = 0; c < y.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - dot);
                }
                break;
            }
            case Op::kLayerNorm: {
                const Matrix<T>& x = nodes_[static_cast<std::size_t>(n.inputs[0])].out();
                const Matrix<T>& gain = nodes_[static_cast<std::size_t>(n.inputs[1])].out();
                Matrix<T>& gx = grad_of(n.inputs[0]);
                Matrix<T>& gg = grad_of(n.inputs[1]);
                Matrix<T>& gb = grad_of(n.inputs[2]);
                const int cols = x.cols();
                const T inv_n = T(1) / static_cast<T>(cols);
                for (int r = 0; r < x.rows(); ++r) {
                    const T mean = n.saved_a[static_cast<std::size_t>(r)];
                    const T inv_std = n.saved_b[static_cast<std::size_t>(r)];
                    T mean_dxhat = 0, mean_dxhat_xhat = 0;
                    for (int c = 0; c < cols; ++c) {
                        const T xhat = (x(r, c) - mean) * inv_std;
                        const T dxhat = g(r, c) * gain(0, c);
                        gg(0, c) += g(r, c) * xhat;
                        gb(0, c) += g(r, c);
                        mean_dxhat += dxhat;
                        mean_dxhat_xhat += dxhat * xhat;
                    }
                    mean_dxhat *= inv_n;
                    mean_dxhat_xhat *= inv_n;
                    for (int c = 0; c < cols; ++c) {
                        const T xhat = (x(r, c) - mean) * inv_std;
                        const T dxhat = g(r, c) * gain(0, c);
                        gx(r, c) += inv_std * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
                    }
                }
                break;
            }
            case Op::kMeanRows: {
                Matrix<T>& ga = grad_of(n.inputs[0]);
                const T inv_n = T(1) / static_cast<T>(ga.rows());
                for (int r = 0; r < ga.rows(); ++r) {
                    for (int c = 0; c < ga.cols(); ++c) ga(r, c) += g(0, c) * inv_n;
                }
                break;
            }
            case Op::kEmbed: {
                Matrix<T>& gt = grad_of(n.inputs[0]);
                for (std::size_t r = 0; r < n.int_args.size(); ++r) {
                    const int id_row = n.int_args[r];
                    for (int c = 0; c < gt.cols(); ++c) {
                        gt(id_row, c) += g(static_cast<int>(r), c);
                    }
                }
                break;
            }
            case Op::kSliceCols: {
                Matrix<T>& ga = grad_of(n.inputs[0]);
                const int c0 = n.int_args[0];
                for (int r = 0; r < g.rows(); ++r) {
                    for (int c = 0; c < g.cols(); ++c) ga(r, c0 + c) += g(r, c);
                }
                break;
            }
            case Op::kConcatCols: {
                int at = 0;
                for (int input : n.inputs) {
                    Matrix<T>& gp = grad_of(input);
                    for (int r = 0; r < gp.rows(); ++r) {
                        for (int c = 0; c < gp.cols(); ++c) gp(r, c) += g(r, at + c);
                    }
                    at += gp.cols();
                }
                break;
            }
            case Op::kSoftmaxXent: {
                Matrix<T>& ga = grad_of(n.inputs[0]);
                const Matrix<T>& p = n.saved_mat;
                const T go = g(0, 0);
                for (int r = 0; r < p.rows(); ++r) {
                    for (int c = 0; c < p.cols(); ++c) ga(r, c) += go * p(r, c);
                    ga(r, n.int_args[static_cast<std::size_t>(r)]) -= go;
                }
                break;
            }
            case Op::kCustom: {
                std::vector<const Matrix<T>*> in_values;
                std::vector<Matrix<T>*> in_grads;
                for (int input : n.inputs) {
                    in_values.push_back(&nodes_[static_cast<std::size_t>(input)].out());
                    in_grads.push_back(&grad_of(input));
                }
                n.custom->backward(g, in_values, in_grads);
                break;
            }
        }
    }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace segdms
