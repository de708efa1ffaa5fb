#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpo/common.hpp"
#include "bpo/rng.hpp"

// Dependency-free neural numerics shared by the anomaly detector and the
// scheduler: dense layers, stacked LSTM with BPTT, additive attention,
// softmax/cross-entropy, Adam, and finite-difference gradient verification.
// Everything is 64-bit; sizes are desk scale, so the kernels are plain loops.

namespace bpo::nn {

using Vec = std::vector<double>;

struct Matrix {
    int rows = 0;
    int cols = 0;
    Vec a; // row-major

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
};

Vec matvec(const Matrix& W, const Vec& x);               // W x
Vec matvec_transposed(const Matrix& W, const Vec& y);    // Wᵀ y
void add_outer(Matrix& A, const Vec& u, const Vec& v);   // A += u vᵀ
void add_scaled(Vec& y, const Vec& x, double s = 1.0);

Vec softmax(const Vec& logits);
// Numerically stable −log softmax(logits)[target]; fills dlogits = p − onehot
// when non-null.
double cross_entropy_from_logits(const Vec& logits, int target, Vec* dlogits);

// ---------------------------------------------------------------------------
// Dense / MLP

struct Dense {
    Matrix W;
    Vec b;
};

Dense make_dense(int in, int out, Rng& rng);

struct Mlp {
    std::vector<Dense> layers; // tanh between layers, linear output
};

Mlp make_mlp(const std::vector<int>& sizes, Rng& rng);

struct MlpCache {
    std::vector<Vec> pre;  // pre-activation per layer
    std::vector<Vec> post; // input + post-activation per layer
};

Vec mlp_forward(const Mlp& net, const Vec& x, MlpCache* cache = nullptr);
// dy is dL/d(output); returns dL/dx and accumulates parameter grads.
Vec mlp_backward(const Mlp& net, const MlpCache& cache, const Vec& dy, Mlp& grads);

// ---------------------------------------------------------------------------
// LSTM stack

struct LstmLayerParams {
    int input_size = 0;
    int hidden_size = 0;
    Matrix Wi, Wf, Wo, Wg; // hidden × input
    Matrix Ui, Uf, Uo, Ug; // hidden × hidden
    Vec bi, bf, bo, bg;
};

struct LstmStack {
    std::vector<LstmLayerParams> layers;
};

// Uniform ±1/√fan_in init, forget-gate bias 1.
LstmStack make_lstm_stack(int input_size, int hidden_size, int num_layers, Rng& rng);

struct LstmStepCache {
    Vec x, i, f, o, g, c, h, tanh_c, c_prev, h_prev;
};

struct LstmCache {
    std::vector<std::vector<LstmStepCache>> steps; // [layer][t]
};

struct LstmForwardResult {
    std::vector<Vec> top_hidden;        // hidden of the top layer per step
    std::vector<Vec> final_h, final_c;  // per layer
};

LstmForwardResult lstm_forward(const LstmStack& stack, const std::vector<Vec>& inputs,
                               LstmCache* cache = nullptr);

struct LstmGrads {
    LstmStack params;             // same shapes, gradient values
    std::vector<Vec> dinputs;     // per step
};

// dtop[t] = dL/d(top hidden at step t); requires the forward cache.
LstmGrads lstm_backward(const LstmStack& stack, const LstmCache& cache,
                        const std::vector<Vec>& dtop);

// ---------------------------------------------------------------------------
// Additive attention: score_t = v·tanh(W h_t), weights = softmax, context = Σ w_t h_t

struct Attention {
    Matrix W;
    Vec v;
};

Attention make_attention(int hidden_size, Rng& rng);

struct AttnCache {
    std::vector<Vec> tanh_wh;
    Vec scores;
    Vec weights;
};

struct AttnResult {
    Vec context;
    Vec weights;
};

AttnResult attention_forward(const Attention& att, std::span<const Vec> hidden,
                             AttnCache* cache = nullptr);
// Accumulates parameter grads into `grads` and per-step hidden grads into dhidden.
void attention_backward(const Attention& att, const AttnCache& cache,
                        std::span<const Vec> hidden, const Vec& dcontext, Attention& grads,
                        std::vector<Vec>& dhidden);

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long t = 0;
    Vec m, v;
};

AdamState make_adam(std::size_t n, double lr = 0.001);
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

// ---------------------------------------------------------------------------
// Parameter registry: flat view over named tensors for Adam, checkpoints and
// gradient checking.

struct ParamRegistry {
    struct Entry {
        std::string name;
        double* data;
        std::size_t size;
        std::vector<int> shape;
    };
    std::vector<Entry> entries;

    void add(const std::string& name, Matrix& m);
    void add(const std::string& name, Vec& v);
    void add_stack(const std::string& prefix, LstmStack& stack);
    void add_mlp(const std::string& prefix, Mlp& net);
    std::size_t total() const;
    void gather(Vec& out) const;
    void scatter(const Vec& in);

    nlohmann::ordered_json to_json() const;
    void from_json(const nlohmann::json& j); // shapes must match
};

// Central finite differences against the analytic gradient; returns the max
// relative error with denominator max(|a|, |n|, 1e-8). `loss_with_grads` must
// recompute both the loss and the gradient buffers registered in `grads`.
double grad_check(const std::function<double()>& loss_with_grads, ParamRegistry& params,
                  const ParamRegistry& grads, double step = 1e-5);

} // namespace bpo::nn
