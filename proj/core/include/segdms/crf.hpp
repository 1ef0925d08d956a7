#pragma once

#include <string>
#include <vector>

#include "segdms/graph.hpp"
#include "segdms/matrix.hpp"
#include "segdms/params.hpp"
#include "segdms/rng.hpp"

namespace segdms {

// Linear-chain CRF over K labels: path score = start[y0] + sum_t e[t,yt] +
// sum_t trans[yt,yt+1] + end[yL-1]. Emissions are an L×K score matrix; the
// recursions run in log space with 64-bit accumulation regardless of T.

template <typename T>
void check_crf_shapes(const Matrix<T>& emissions, const Matrix<T>& trans, const Matrix<T>& start,
                      const Matrix<T>& end);

template <typename T>
double crf_log_partition(const Matrix<T>& emissions, const Matrix<T>& trans,
                         const Matrix<T>& start, const Matrix<T>& end);

template <typename T>
double crf_path_score(const Matrix<T>& emissions, const Matrix<T>& trans, const Matrix<T>& start,
                      const Matrix<T>& end, const std::vector<int>& path);

template <typename T>
double crf_nll(const Matrix<T>& emissions, const Matrix<T>& trans, const Matrix<T>& start,
               const Matrix<T>& end, const std::vector<int>& path);

// max-score path; ties break toward the lowest label id
template <typename T>
std::vector<int> crf_viterbi(const Matrix<T>& emissions, const Matrix<T>& trans,
                             const Matrix<T>& start, const Matrix<T>& end);

// exact draw from the path distribution (forward filtering, backward sampling)
template <typename T>
std::vector<int> crf_posterior_sample(const Matrix<T>& emissions, const Matrix<T>& trans,
                                      const Matrix<T>& start, const Matrix<T>& end, Rng& rng);

// registers "{prefix}.trans" (K×K), "{prefix}.start", "{prefix}.end" (1×K),
// all zero-initialized
template <typename T>
void add_crf_params(ParamStore<T>& store, const std::string& prefix, int label_count);

// NLL tape node over (emissions, trans, start, end); the backward pass uses
// forward-backward marginals
template <typename T>
Var crf_nll_node(Tape<T>& tape, Var emissions, const std::string& prefix,
                 const std::vector<int>& gold);

}  // namespace segdms
