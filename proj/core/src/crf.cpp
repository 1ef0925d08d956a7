#include "segdms/crf.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "segdms/errors.hpp"

namespace segdms {

namespace {

double logsumexp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    double s = 0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

// forward messages alpha[t][v] = log sum over prefixes ending in label v
template <typename T>
Matrix<double> crf_forward(const Matrix<T>& e, const Matrix<T>& trans, const Matrix<T>& start) {
    const int len = e.rows();
    const int k = e.cols();
    Matrix<double> alpha(len, k);
    for (int v = 0; v < k; ++v) alpha(0, v) = static_cast<double>(start(0, v)) + e(0, v);
    std::vector<double> acc(static_cast<std::size_t>(k));
    for (int t = 1; t < len; ++t) {
        for (int v = 0; v < k; ++v) {
            for (int u = 0; u < k; ++u) {
                acc[static_cast<std::size_t>(u)] = alpha(t - 1, u) + static_cast<double>(trans(u, v));
            }
            alpha(t, v) = logsumexp(acc) + static_cast<double>(e(t, v));
        }
    }
    return alpha;
}

template <typename T>
Matrix<double> crf_backward_messages(const Matrix<T>& e, const Matrix<T>& trans,
                                     const Matrix<T>& end) {
    const int len = e.rows();
    const int k = e.cols();
    Matrix<double> beta(len, k);
    for (int v = 0; v < k; ++v) beta(len - 1, v) = static_cast<double>(end(0, v));
    std::vector<double> acc(static_cast<std::size_t>(k));
    for (int t = len - 2; t >= 0; --t) {
        for (int v = 0; v < k; ++v) {
            for (int u = 0; u < k; ++u) {
                acc[static_cast<std::size_t>(u)] = static_cast<double>(trans(v, u)) +
                                                   static_cast<double>(e(t + 1, u)) +
                                                   beta(t + 1, u);
            }
            beta(t, v) = logsumexp(acc);
        }
    }
    return beta;
}

}  // namespace

template <typename T>
void check_crf_shapes(const Matrix<T>& emissions, const Matrix<T>& trans, const Matrix<T>& start,
                      const Matrix<T>& end) {
    if (emissions.rows() < 1) throw NumericError("crf got an empty emission sequence");
    const int k = emissions.cols();
    if (trans.rows() != k || trans.cols() != k || start.rows() != 1 || start.cols() != k ||
        end.rows() != 1 || end.cols() != k) {
        throw NumericError("crf parameter shapes do not match " + std::to_string(k) + " labels");
    }
}

template <typename T>
double crf_log_partition(const Matrix<T>& emissions, const Matrix<T>& trans,
                         const Matrix<T>& start, const Matrix<T>& end) {
    check_crf_shapes(emissions, trans, start, end);
    const Matrix<double> alpha = crf_forward(emissions, trans, start);
    const int last = emissions.rows() - 1;
    std::vector<double> fin(static_cast<std::size_t>(emissions.cols()));
    for (int v = 0; v < emissions.cols(); ++v) {
        fin[static_cast<std::size_t>(v)] = alpha(last, v) + static_cast<double>(end(0, v));
    }
    return logsumexp(fin);
}

template <typename T>
double crf_path_score(const Matrix<T>& emissions, const Matrix<T>& trans, const Matrix<T>& start,
                      const Matrix<T>& end, const std::vector<int>& path) {
    check_crf_shapes(emissions, trans, start, end);
    if (static_cast<int>(path.size()) != emissions.rows()) {
        throw NumericError("crf path has " + std::to_string(path.size()) + " labels for " +
                           std::to_string(emissions.rows()) + " positions");
    }
    for (int y : path) {
        if (y < 0 || y >= emissions.cols()) {
            throw NumericError("crf path label " + std::to_string(y) + " outside " +
                               std::to_string(emissions.cols()) + " labels");
        }
    }
    double score = static_cast<double>(start(0, path.front())) +
                   static_cast<double>(end(0, path.back()));
    for (int t = 0; t < emissions.rows(); ++t) {
        score += static_cast<double>(emissions(t, path[static_cast<std::size_t>(t)]));
        if (t > 0) {
            score += static_cast<double>(
                trans(path[static_cast<std::size_t>(t - 1)], path[static_cast<std::size_t>(t)]));
        }
    }
    return score;
}

template <typename T>
double crf_nll(const Matrix<T>& emissions, const Matrix<T>& trans, const Matrix<T>& start,
               const Matrix<T>& end, const std::vector<int>& path) {
    return crf_log_partition(emissions, trans, start, end) -
           crf_path_score(emissions, trans, start, end, path);
}

template <typename T>
std::vector<int> crf_viterbi(const Matrix<T>& emissions, const Matrix<T>& trans,
                             const Matrix<T>& start, const Matrix<T>& end) {
    check_crf_shapes(emissions, trans, start, end);
    const int len = emissions.rows();
    const int k = emissions.cols();
    Matrix<double> delta(len, k);
    Matrix<double> back(len, k);
    for (int v = 0; v < k; ++v) {
        delta(0, v) = static_cast<double>(start(0, v)) + static_cast<double>(emissions(0, v));
    }
    for (int t = 1; t < len; ++t) {
        for (int v = 0; v < k; ++v) {
            int best_u = 0;
            double best = delta(t - 1, 0) + static_cast<double>(trans(0, v));
            for (int u = 1; u < k; ++u) {
                const double cand = delta(t - 1, u) + static_cast<double>(trans(u, v));
                if (cand > best) {  // strict: ties keep the lowest label id
                    best = cand;
                    best_u = u;
                }
            }
            delta(t, v) = best + static_cast<double>(emissions(t, v));
            back(t, v) = best_u;
        }
    }
    int best_v = 0;
    double best = delta(len - 1, 0) + static_cast<double>(end(0, 0));
    for (int v = 1; v < k; ++v) {
        const double cand = delta(len - 1, v) + static_cast<double>(end(0, v));
        if (cand > best) {
            best = cand;
            best_v = v;
        }
    }
    std::vector<int> path(static_cast<std::size_t>(len));
    path[static_cast<std::size_t>(len - 1)] = best_v;
    for (int t = len - 1; t > 0; --t) {
        path[static_cast<std::size_t>(t - 1)] =
            static_cast<int>(back(t, path[static_cast<std::size_t>(t)]));
    }
    return path;
}

template <typename T>
std::vector<int> crf_posterior_sample(const Matrix<T>& emissions, const Matrix<T>& trans,
                                      const Matrix<T>& start, const Matrix<T>& end, Rng& rng) {
    check_crf_shapes(emissions, trans, start, end);
    const int len = emissions.rows();
    const int k = emissions.cols();
    const Matrix<double> alpha = crf_forward(emissions, trans, start);
    std::vector<int> path(static_cast<std::size_t>(len));
    std::vector<double> w(static_cast<std::size_t>(k));

    auto draw = [&](auto&& score_of) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int v = 0; v < k; ++v) mx = std::max(mx, score_of(v));
        for (int v = 0; v < k; ++v) w[static_cast<std::size_t>(v)] = std::exp(score_of(v) - mx);
        return rng.next_categorical(w);
    };

    path[static_cast<std::size_t>(len - 1)] =
        draw([&](int v) { return alpha(len - 1, v) + static_cast<double>(end(0, v)); });
    for (int t = len - 2; t >= 0; --t) {
        const int next = path[static_cast<std::size_t>(t + 1)];
        path[static_cast<std::size_t>(t)] =
            draw([&](int v) { return alpha(t, v) + static_cast<double>(trans(v, next)); });
    }
    return path;
}

template <typename T>
void add_crf_params(ParamStore<T>& store, const std::string& prefix, int label_count) {
    if (label_count < 1) throw ConfigError("crf needs at least one label");
    store.add(prefix + ".trans", Matrix<T>(label_count, label_count));
    store.add(prefix + ".start", Matrix<T>(1, label_count));
    store.add(prefix + ".end", Matrix<T>(1, label_count));
}

namespace {

// NLL node; gradient of logZ is the marginal expectation of each score, so
// d nll = marginals - gold indicators, for emissions and all three parameter
// blocks alike.
template <typename T>
class CrfNllOp final : public CustomOp<T> {
  public:
    explicit CrfNllOp(std::vector<int> gold) : gold_(std::move(gold)) {}

    const char* name() const override { return "crf_nll"; }

    Matrix<T> forward(const std::vector<const Matrix<T>*>& inputs) override {
        const double nll = crf_nll(*inputs[0], *inputs[1], *inputs[2], *inputs[3], gold_);
        Matrix<T> out(1, 1);
        out(0, 0) = static_cast<T>(nll);
        return out;
    }

    void backward(const Matrix<T>& out_grad, const std::vector<const Matrix<T>*>& inputs,
                  std::vector<Matrix<T>*>& input_grads) override {
        const Matrix<T>& e = *inputs[0];
        const Matrix<T>& trans = *inputs[1];
        const Matrix<T>& start = *inputs[2];
        const Matrix<T>& end = *inputs[3];
        const int len = e.rows();
        const int k = e.cols();
        const double go = static_cast<double>(out_grad(0, 0));

        const Matrix<double> alpha = crf_forward(e, trans, start);
        const Matrix<double> beta = crf_backward_messages(e, trans, end);
        std::vector<double> fin(static_cast<std::size_t>(k));
        for (int v = 0; v < k; ++v) {
            fin[static_cast<std::size_t>(v)] = alpha(len - 1, v) + static_cast<double>(end(0, v));
        }
        const double log_z = logsumexp(fin);

        Matrix<T>& ge = *input_grads[0];
        Matrix<T>& gt = *input_grads[1];
        Matrix<T>& gs = *input_grads[2];
        Matrix<T>& gn = *input_grads[3];

        for (int t = 0; t < len; ++t) {
            for (int v = 0; v < k; ++v) {
                const double marginal = std::exp(alpha(t, v) + beta(t, v) - log_z);
                double d = marginal - (gold_[static_cast<std::size_t>(t)] == v ? 1.0 : 0.0);
                ge(t, v) += static_cast<T>(go * d);
                if (t == 0) gs(0, v) += static_cast<T>(go * d);
                if (t == len - 1) gn(0, v) += static_cast<T>(go * d);
            }
        }
        for (int t = 0; t + 1 < len; ++t) {
            for (int u = 0; u < k; ++u) {
                for (int v = 0; v < k; ++v) {
                    const double pair =
                        std::exp(alpha(t, u) + static_cast<double>(trans(u, v)) +
                                 static_cast<double>(e(t + 1, v)) + beta(t + 1, v) - log_z);
                    const bool gold_pair = gold_[static_cast<std::size_t>(t)] == u &&
                                           gold_[static_cast<std::size_t>(t + 1)] == v;
                    gt(u, v) += static_cast<T>(go * (pair - (gold_pair ? 1.0 : 0.0)));
                }
            }
        }
    }

  private:
    std::vector<int> gold_;
};

}  // namespace

template <typename T>
Var crf_nll_node(Tape<T>& tape, Var emissions, const std::string& prefix,
                 const std::vector<int>& gold) {
    Var trans = tape.param(prefix + ".trans");
    Var start = tape.param(prefix + ".start");
    Var end = tape.param(prefix + ".end");
    return tape.custom(std::make_shared<CrfNllOp<T>>(gold), {emissions, trans, start, end});
}

#define SEGDMS_INSTANTIATE(T)                                                                  \
    template void check_crf_shapes<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&,    \
                                      const Matrix<T>&);                                       \
    template double crf_log_partition<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&, \
                                         const Matrix<T>&);                                    \
    template double crf_path_score<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&,    \
                                      const Matrix<T>&, const std::vector<int>&);              \
    template double crf_nll<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&,           \
                               const Matrix<T>&, const std::vector<int>&);                     \
    template std::vector<int> crf_viterbi<T>(const Matrix<T>&, const Matrix<T>&,               \
                                             const Matrix<T>&, const Matrix<T>&);              \
    template std::vector<int> crf_posterior_sample<T>(const Matrix<T>&, const Matrix<T>&,      \
                                                      const Matrix<T>&, const Matrix<T>&,      \
                                                      Rng&);                                   \
    template void add_crf_params<T>(ParamStore<T>&, const std::string&, int);                  \
    template Var crf_nll_node<T>(Tape<T>&, Var, const std::string&, const std::vector<int>&);

SEGDMS_INSTANTIATE(float)
SEGDMS_INSTANTIATE(double)

#undef SEGDMS_INSTANTIATE

}  // namespace segdms
