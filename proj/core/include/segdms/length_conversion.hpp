#pragma once

#include <memory>

#include "segdms/graph.hpp"
#include "segdms/matrix.hpp"
#include "segdms/rng.hpp"

namespace segdms {

// Length conversion: resamples a hidden set of src_len rows into dst_len rows
// using position-based softmax weights
//   W[t,t'] = softmax over t' of  -(t' - (src_len/dst_len)*t)^2 / (2*sigma^2)
// so each output vector is a convex combination of the inputs. sigma is a
// learned positive scalar stored as its log (parameter u, sigma = exp(u)).

// dst_len x src_len row-stochastic weight matrix
template <typename T>
Matrix<T> conversion_weights(int src_len, int dst_len, T sigma);

// plain forward resampling (sampling path; no gradients)
template <typename T>
Matrix<T> convert_hidden(const Matrix<T>& h, int dst_len, T sigma);

// tape node: inputs are the hidden set h (src_len x d) and u (1x1, sigma =
// exp(u)); gradients flow to both
template <typename T>
Var length_convert(Tape<T>& tape, Var h, Var u, int dst_len);

// class k of a (2*delta_max+1)-way head encodes a length change of k - delta_max
constexpr int kDefaultDeltaMax = 8;

inline int length_class_count(int delta_max) { return 2 * delta_max + 1; }
inline int length_change_to_class(int delta, int delta_max) { return delta + delta_max; }
inline int class_to_length_change(int cls, int delta_max) { return cls - delta_max; }

enum class PickMode { kArgmax, kSample };

// argmax (lowest index wins ties) or a softmax draw over a 1xC logit row
template <typename T>
int pick_class(const Matrix<T>& logits, PickMode mode, Rng* rng);

}  // namespace segdms
