#include "bpo/neural.hpp"

#include <algorithm>
#include <cmath>

namespace bpo::nn {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check(bool ok, const char* what) {
    if (!ok) fail(ErrorCode::Runtime, std::string("ShapeMismatch: ") + what);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void init_uniform(Matrix& m, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& w : m.a) w = rng.uniform(-bound, bound);
}

} // namespace

Vec matvec(const Matrix& W, const Vec& x) {
    check(static_cast<int>(x.size()) == W.cols, "matvec dimensions");
    Vec y(static_cast<std::size_t>(W.rows), 0.0);
    for (int r = 0; r < W.rows; ++r) {
        double acc = 0.0;
        const double* row = &W.a[static_cast<std::size_t>(r) * W.cols];
        for (int c = 0; c < W.cols; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
        y[static_cast<std::size_t>(r)] = acc;
    }
    return y;
}

Vec matvec_transposed(const Matrix& W, const Vec& y) {
    check(static_cast<int>(y.size()) == W.rows, "matvec_transposed dimensions");
    Vec x(static_cast<std::size_t>(W.cols), 0.0);
    for (int r = 0; r < W.rows; ++r) {
        const double yr = y[static_cast<std::size_t>(r)];
        const double* row = &W.a[static_cast<std::size_t>(r) * W.cols];
        for (int c = 0; c < W.cols; ++c) x[static_cast<std::size_t>(c)] += row[c] * yr;
    }
    return x;
}

void add_outer(Matrix& A, const Vec& u, const Vec& v) {
    check(static_cast<int>(u.size()) == A.rows && static_cast<int>(v.size()) == A.cols,
          "add_outer dimensions");
    for (int r = 0; r < A.rows; ++r) {
        double* row = &A.a[static_cast<std::size_t>(r) * A.cols];
        const double ur = u[static_cast<std::size_t>(r)];
        for (int c = 0; c < A.cols; ++c) row[c] += ur * v[static_cast<std::size_t>(c)];
    }
}

void add_scaled(Vec& y, const Vec& x, double s) {
    check(x.size() == y.size(), "add_scaled dimensions");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

Vec softmax(const Vec& logits) {
    check(!logits.empty(), "softmax on empty vector");
    const double m = *std::max_element(logits.begin(), logits.end());
    Vec p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (auto& v : p) v /= sum;
    return p;
}

double cross_entropy_from_logits(const Vec& logits, int target, Vec* dlogits) {
    check(target >= 0 && target < static_cast<int>(logits.size()), "cross-entropy target");
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - m);
    const double log_z = m + std::log(sum);
    const double loss = log_z - logits[static_cast<std::size_t>(target)];
    if (dlogits) {
        dlogits->resize(logits.size());
        for (std::size_t i = 0; i < logits.size(); ++i)
            (*dlogits)[i] = std::exp(logits[i] - log_z);
        (*dlogits)[static_cast<std::size_t>(target)] -= 1.0;
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Dense / MLP

Dense make_dense(int in, int out, Rng& rng) {
    Dense d;
    d.W = Matrix(out, in);
    init_uniform(d.W, in, rng);
    d.b.assign(static_cast<std::size_t>(out), 0.0);
    return d;
}

Mlp make_mlp(const std::vector<int>& sizes, Rng& rng) {
    check(sizes.size() >= 2, "mlp needs at least input and output sizes");
    Mlp net;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
        net.layers.push_back(make_dense(sizes[i], sizes[i + 1], rng));
    return net;
}

Vec mlp_forward(const Mlp& net, const Vec& x, MlpCache* cache) {
    Vec cur = x;
    if (cache) {
        cache->pre.clear();
        cache->post.clear();
        cache->post.push_back(cur);
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        Vec z = matvec(net.layers[l].W, cur);
        add_scaled(z, net.layers[l].b);
        if (cache) cache->pre.push_back(z);
        if (l + 1 < net.layers.size())
            for (auto& v : z) v = std::tanh(v);
        cur = std::move(z);
        if (cache) cache->post.push_back(cur);
    }
    return cur;
}

Vec mlp_backward(const Mlp& net, const MlpCache& cache, const Vec& dy, Mlp& grads) {
    check(grads.layers.size() == net.layers.size(), "mlp grads layout");
    Vec d = dy;
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        if (l + 1 < net.layers.size()) {
            // undo tanh: post[l+1] holds tanh(pre[l])
            const Vec& act = cache.post[l + 1];
            for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - act[i] * act[i];
        }
        add_outer(grads.layers[l].W, d, cache.post[l]);
        add_scaled(grads.layers[l].b, d);
        d = matvec_transposed(net.layers[l].W, d);
    }
    return d;
}

// ---------------------------------------------------------------------------
// LSTM

LstmStack make_lstm_stack(int input_size, int hidden_size, int num_layers, Rng& rng) {
    check(input_size > 0 && hidden_size > 0 && num_layers > 0, "lstm stack sizes");
    LstmStack stack;
    int in = input_size;
    for (int l = 0; l < num_layers; ++l) {
        LstmLayerParams p;
        p.input_size = in;
        p.hidden_size = hidden_size;
        for (Matrix* m : {&p.Wi, &p.Wf, &p.Wo, &p.Wg}) {
            *m = Matrix(hidden_size, in);
            init_uniform(*m, in, rng);
        }
        for (Matrix* m : {&p.Ui, &p.Uf, &p.Uo, &p.Ug}) {
            *m = Matrix(hidden_size, hidden_size);
            init_uniform(*m, hidden_size, rng);
        }
        p.bi.assign(static_cast<std::size_t>(hidden_size), 0.0);
        p.bf.assign(static_cast<std::size_t>(hidden_size), 1.0); // standard forget-gate bias
        p.bo.assign(static_cast<std::size_t>(hidden_size), 0.0);
        p.bg.assign(static_cast<std::size_t>(hidden_size), 0.0);
        stack.layers.push_back(std::move(p));
        in = hidden_size;
    }
    return stack;
}

LstmForwardResult lstm_forward(const LstmStack& stack, const std::vector<Vec>& inputs,
                               LstmCache* cache) {
    check(!stack.layers.empty(), "empty lstm stack");
    const std::size_t T = inputs.size();
    const std::size_t L = stack.layers.size();
    for (std::size_t l = 1; l < L; ++l)
        check(stack.layers[l].input_size == stack.layers[l - 1].hidden_size,
              "stacked layer widths");

    if (cache) {
        cache->steps.assign(L, {});
        for (auto& s : cache->steps) s.resize(T);
    }

    LstmForwardResult out;
    out.final_h.resize(L);
    out.final_c.resize(L);
    std::vector<Vec> h(L), c(L);
    for (std::size_t l = 0; l < L; ++l) {
        h[l].assign(static_cast<std::size_t>(stack.layers[l].hidden_size), 0.0);
        c[l].assign(static_cast<std::size_t>(stack.layers[l].hidden_size), 0.0);
    }

    for (std::size_t t = 0; t < T; ++t) {
        Vec x = inputs[t];
        for (std::size_t l = 0; l < L; ++l) {
            const auto& p = stack.layers[l];
            check(static_cast<int>(x.size()) == p.input_size, "lstm input width");
            const std::size_t H = static_cast<std::size_t>(p.hidden_size);

            Vec zi = matvec(p.Wi, x), zf = matvec(p.Wf, x), zo = matvec(p.Wo, x),
                zg = matvec(p.Wg, x);
            add_scaled(zi, matvec(p.Ui, h[l]));
            add_scaled(zf, matvec(p.Uf, h[l]));
            add_scaled(zo, matvec(p.Uo, h[l]));
            add_scaled(zg, matvec(p.Ug, h[l]));
            add_scaled(zi, p.bi);
            add_scaled(zf, p.bf);
            add_scaled(zo, p.bo);
            add_scaled(zg, p.bg);

            Vec i(H), f(H), o(H), g(H), cn(H), hn(H), tc(H);
            for (std::size_t k = 0; k < H; ++k) {
                i[k] = sigmoid(zi[k]);
                f[k] = sigmoid(zf[k]);
                o[k] = sigmoid(zo[k]);
                g[k] = std::tanh(zg[k]);
                cn[k] = f[k] * c[l][k] + i[k] * g[k];
                tc[k] = std::tanh(cn[k]);
                hn[k] = o[k] * tc[k];
            }

            if (cache) {
                auto& sc = cache->steps[l][t];
                sc.x = x;
                sc.i = i;
                sc.f = f;
                sc.o = o;
                sc.g = g;
                sc.c = cn;
                sc.h = hn;
                sc.tanh_c = tc;
                sc.c_prev = c[l];
                sc.h_prev = h[l];
            }

            c[l] = std::move(cn);
            h[l] = hn;
            x = std::move(hn);
        }
        out.top_hidden.push_back(h[L - 1]);
    }

    out.final_h = h;
    out.final_c = c;
    return out;
}

LstmGrads lstm_backward(const LstmStack& stack, const LstmCache& cache,
                        const std::vector<Vec>& dtop) {
    const std::size_t L = stack.layers.size();
    check(cache.steps.size() == L, "lstm cache layout");
    const std::size_t T = cache.steps.empty() ? 0 : cache.steps[0].size();
    check(dtop.size() == T, "upstream gradient count");

    LstmGrads out;
    out.params.layers.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        const auto& p = stack.layers[l];
        auto& g = out.params.layers[l];
        g.input_size = p.input_size;
        g.hidden_size = p.hidden_size;
        g.Wi = Matrix(p.hidden_size, p.input_size);
        g.Wf = Matrix(p.hidden_size, p.input_size);
        g.Wo = Matrix(p.hidden_size, p.input_size);
        g.Wg = Matrix(p.hidden_size, p.input_size);
        g.Ui = Matrix(p.hidden_size, p.hidden_size);
        g.Uf = Matrix(p.hidden_size, p.hidden_size);
        g.Uo = Matrix(p.hidden_size, p.hidden_size);
        g.Ug = Matrix(p.hidden_size, p.hidden_size);
        g.bi.assign(static_cast<std::size_t>(p.hidden_size), 0.0);
        g.bf.assign(static_cast<std::size_t>(p.hidden_size), 0.0);
        g.bo.assign(static_cast<std::size_t>(p.hidden_size), 0.0);
        g.bg.assign(static_cast<std::size_t>(p.hidden_size), 0.0);
    }
    out.dinputs.assign(T, {});

    // dx accumulated from the layer above, per step.
    std::vector<std::vector<Vec>> dx_from_above(L);
    for (std::size_t l = 0; l < L; ++l) dx_from_above[l].assign(T, {});

    for (std::size_t l = L; l-- > 0;) {
        const auto& p = stack.layers[l];
        auto& g = out.params.layers[l];
        const std::size_t H = static_cast<std::size_t>(p.hidden_size);
        Vec dh_next(H, 0.0), dc_next(H, 0.0);

        for (std::size_t t = T; t-- > 0;) {
            const auto& sc = cache.steps[l][t];
            Vec dh = dh_next;
            if (l == L - 1 && !dtop[t].empty()) {
                check(dtop[t].size() == H, "upstream gradient width");
                add_scaled(dh, dtop[t]);
            }
            if (l < L - 1 && !dx_from_above[l][t].empty()) add_scaled(dh, dx_from_above[l][t]);

            Vec dc = dc_next;
            Vec di(H), df(H), do_(H), dg(H);
            for (std::size_t k = 0; k < H; ++k) {
                const double tc = sc.tanh_c[k];
                do_[k] = dh[k] * tc * sc.o[k] * (1.0 - sc.o[k]);
                dc[k] += dh[k] * sc.o[k] * (1.0 - tc * tc);
                di[k] = dc[k] * sc.g[k] * sc.i[k] * (1.0 - sc.i[k]);
                df[k] = dc[k] * sc.c_prev[k] * sc.f[k] * (1.0 - sc.f[k]);
                dg[k] = dc[k] * sc.i[k] * (1.0 - sc.g[k] * sc.g[k]);
            }

            add_outer(g.Wi, di, sc.x);
            add_outer(g.Wf, df, sc.x);
            add_outer(g.Wo, do_, sc.x);
            add_outer(g.Wg, dg, sc.x);
            add_outer(g.Ui, di, sc.h_prev);
            add_outer(g.Uf, df, sc.h_prev);
            add_outer(g.Uo, do_, sc.h_prev);
            add_outer(g.Ug, dg, sc.h_prev);
            add_scaled(g.bi, di);
            add_scaled(g.bf, df);
            add_scaled(g.bo, do_);
            add_scaled(g.bg, dg);

            Vec dx = matvec_transposed(p.Wi, di);
            add_scaled(dx, matvec_transposed(p.Wf, df));
            add_scaled(dx, matvec_transposed(p.Wo, do_));
            add_scaled(dx, matvec_transposed(p.Wg, dg));

            dh_next = matvec_transposed(p.Ui, di);
            add_scaled(dh_next, matvec_transposed(p.Uf, df));
            add_scaled(dh_next, matvec_transposed(p.Uo, do_));
            add_scaled(dh_next, matvec_transposed(p.Ug, dg));

            for (std::size_t k = 0; k < H; ++k) dc_next[k] = dc[k] * sc.f[k];

            if (l > 0) dx_from_above[l - 1][t] = std::move(dx);
            else out.dinputs[t] = std::move(dx);
        }
    }

    return out;
}

// ---------------------------------------------------------------------------
// Attention

Attention make_attention(int hidden_size, Rng& rng) {
    Attention att;
    att.W = Matrix(hidden_size, hidden_size);
    init_uniform(att.W, hidden_size, rng);
    att.v.assign(static_cast<std::size_t>(hidden_size), 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    for (auto& w : att.v) w = rng.uniform(-bound, bound);
    return att;
}

AttnResult attention_forward(const Attention& att, std::span<const Vec> hidden,
                             AttnCache* cache) {
    if (hidden.empty()) fail(ErrorCode::Runtime, "EmptySequence: attention needs >= 1 state");
    const std::size_t T = hidden.size();
    const std::size_t H = static_cast<std::size_t>(att.W.rows);

    std::vector<Vec> tanh_wh(T);
    Vec scores(T);
    for (std::size_t t = 0; t < T; ++t) {
        Vec z = matvec(att.W, hidden[t]);
        for (auto& v : z) v = std::tanh(v);
        double s = 0.0;
        for (std::size_t k = 0; k < H; ++k) s += att.v[k] * z[k];
        scores[t] = s;
        tanh_wh[t] = std::move(z);
    }

    AttnResult res;
    res.weights = softmax(scores);
    res.context.assign(H, 0.0);
    for (std::size_t t = 0; t < T; ++t) add_scaled(res.context, hidden[t], res.weights[t]);

    if (cache) {
        cache->tanh_wh = std::move(tanh_wh);
        cache->scores = std::move(scores);
        cache->weights = res.weights;
    }
    return res;
}

void attention_backward(const Attention& att, const AttnCache& cache,
                        std::span<const Vec> hidden, const Vec& dcontext, Attention& grads,
                        std::vector<Vec>& dhidden) {
    const std::size_t T = hidden.size();
    const std::size_t H = static_cast<std::size_t>(att.W.rows);
    check(dhidden.size() >= T, "attention dhidden size");

    // context = Σ w_t h_t
    Vec dweights(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        double acc = 0.0;
        for (std::size_t k = 0; k < H; ++k) acc += dcontext[k] * hidden[t][k];
        dweights[t] = acc;
        if (dhidden[t].empty()) dhidden[t].assign(H, 0.0);
        add_scaled(dhidden[t], dcontext, cache.weights[t]);
    }

    // softmax backward: ds_t = w_t (dw_t − Σ_j w_j dw_j)
    double dot = 0.0;
    for (std::size_t t = 0; t < T; ++t) dot += cache.weights[t] * dweights[t];
    Vec dscores(T);
    for (std::size_t t = 0; t < T; ++t) dscores[t] = cache.weights[t] * (dweights[t] - dot);

    for (std::size_t t = 0; t < T; ++t) {
        // score_t = v·tanh(W h_t)
        Vec dz(H);
        for (std::size_t k = 0; k < H; ++k) {
            grads.v[k] += dscores[t] * cache.tanh_wh[t][k];
            dz[k] = dscores[t] * att.v[k] * (1.0 - cache.tanh_wh[t][k] * cache.tanh_wh[t][k]);
        }
        add_outer(grads.W, dz, hidden[t]);
        add_scaled(dhidden[t], matvec_transposed(att.W, dz));
    }
}

// ---------------------------------------------------------------------------
// Adam

AdamState make_adam(std::size_t n, double lr) {
    AdamState st;
    st.lr = lr;
    st.m.assign(n, 0.0);
    st.v.assign(n, 0.0);
    return st;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    check(params.size() == grads.size() && params.size() == state.m.size(),
          "adam buffer sizes");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * grads[k];
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * grads[k] * grads[k];
        const double mhat = state.m[k] / bc1;
        const double vhat = state.v[k] / bc2;
        params[k] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

// ---------------------------------------------------------------------------
// Registry + gradient check

void ParamRegistry::add(const std::string& name, Matrix& m) {
    entries.push_back({name, m.a.data(), m.a.size(), {m.rows, m.cols}});
}

void ParamRegistry::add(const std::string& name, Vec& v) {
    entries.push_back({name, v.data(), v.size(), {static_cast<int>(v.size())}});
}

void ParamRegistry::add_stack(const std::string& prefix, LstmStack& stack) {
    for (std::size_t l = 0; l < stack.layers.size(); ++l) {
        auto& p = stack.layers[l];
        const std::string base = prefix + ".l" + std::to_string(l) + ".";
        add(base + "Wi", p.Wi);
        add(base + "Wf", p.Wf);
        add(base + "Wo", p.Wo);
        add(base + "Wg", p.Wg);
        add(base + "Ui", p.Ui);
        add(base + "Uf", p.Uf);
        add(base + "Uo", p.Uo);
        add(base + "Ug", p.Ug);
        add(base + "bi", p.bi);
        add(base + "bf", p.bf);
        add(base + "bo", p.bo);
        add(base + "bg", p.bg);
    }
}

void ParamRegistry::add_mlp(const std::string& prefix, Mlp& net) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        add(prefix + ".l" + std::to_string(l) + ".W", net.layers[l].W);
        add(prefix + ".l" + std::to_string(l) + ".b", net.layers[l].b);
    }
}

std::size_t ParamRegistry::total() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.size;
    return n;
}

void ParamRegistry::gather(Vec& out) const {
    out.resize(total());
    std::size_t k = 0;
    for (const auto& e : entries)
        for (std::size_t i = 0; i < e.size; ++i) out[k++] = e.data[i];
}

void ParamRegistry::scatter(const Vec& in) {
    check(in.size() == total(), "registry scatter size");
    std::size_t k = 0;
    for (auto& e : entries)
        for (std::size_t i = 0; i < e.size; ++i) e.data[i] = in[k++];
}

ordered_json ParamRegistry::to_json() const {
    ordered_json params = ordered_json::object();
    for (const auto& e : entries) {
        ordered_json t;
        t["shape"] = e.shape;
        t["data"] = std::vector<double>(e.data, e.data + e.size);
        params[e.name] = std::move(t);
    }
    return params;
}

void ParamRegistry::from_json(const json& j) {
    for (auto& e : entries) {
        if (!j.contains(e.name))
            fail(ErrorCode::Syntax, "SyntaxError: checkpoint missing tensor '" + e.name + "'");
        const auto& t = j.at(e.name);
        const auto shape = t.at("shape").get<std::vector<int>>();
        if (shape != e.shape)
            fail(ErrorCode::Syntax, "SyntaxError: checkpoint shape mismatch for '" + e.name + "'");
        const auto data = t.at("data").get<std::vector<double>>();
        if (data.size() != e.size)
            fail(ErrorCode::Syntax, "SyntaxError: checkpoint size mismatch for '" + e.name + "'");
        std::copy(data.begin(), data.end(), e.data);
    }
}

double grad_check(const std::function<double()>& loss_with_grads, ParamRegistry& params,
                  const ParamRegistry& grads, double step) {
    const double center = loss_with_grads();
    if (!std::isfinite(center)) fail(ErrorCode::Runtime, "NonFiniteLoss: loss is not finite");
    Vec analytic;
    grads.gather(analytic);

    double max_rel = 0.0;
    std::size_t coord = 0;
    for (auto& e : params.entries) {
        for (std::size_t i = 0; i < e.size; ++i, ++coord) {
            const double save = e.data[i];
            e.data[i] = save + step;
            const double plus = loss_with_grads();
            e.data[i] = save - step;
            const double minus = loss_with_grads();
            e.data[i] = save;
            if (!std::isfinite(plus) || !std::isfinite(minus))
                fail(ErrorCode::Runtime, "NonFiniteLoss: perturbed loss is not finite");
            const double numeric = (plus - minus) / (2.0 * step);
            const double a = analytic[coord];
            const double rel =
                std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            max_rel = std::max(max_rel, rel);
        }
    }
    // restore analytic gradients for the caller
    loss_with_grads();
    return max_rel;
}

} // namespace bpo::nn
