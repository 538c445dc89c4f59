// The repo-wide gradient audit behind the grad-check CLI subcommand and the
// acceptance suite: every layer's hand-written backward against central
// differences at seeded random points.
#include <cmath>

#include "eev/gradcheck.hpp"
#include "eev/losses.hpp"
#include "eev/model.hpp"
#include "eev/rng.hpp"

namespace eev {

namespace {

Matrix rand_mat(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                double hi = 1.0) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

double sum_of(const Matrix& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += m.data()[i];
    return s;
}

std::vector<Matrix*> cell_mats(GruCellParams& c) {
    return {&c.W_z, &c.U_z, &c.b_z, &c.W_r, &c.U_r, &c.b_r, &c.W_h, &c.U_h, &c.b_h};
}

void randomize_cell(GruCellParams& c, Rng& rng) {
    for (Matrix* m : cell_mats(c)) *m = rand_mat(m->rows(), m->cols(), rng);
}

GradSuiteEntry check_gru_cell(Rng& rng, double eps) {
    const std::size_t D = 4, H = 3;
    GruCellParams p = GruCellParams::shaped(D, H);
    randomize_cell(p, rng);
    Matrix x = rand_mat(D, 1, rng);
    Matrix h_prev = rand_mat(H, 1, rng);

    GruCellCache cache;
    gru_cell_forward(x, h_prev, p, cache);
    const Matrix ones(H, 1, 1.0);
    GruCellGrad g = gru_cell_backward(x, h_prev, p, cache, ones);

    std::vector<GradVar> vars;
    auto pm = cell_mats(p);
    auto gm = cell_mats(g.d_params);
    for (std::size_t i = 0; i < pm.size(); ++i) vars.push_back({pm[i], gm[i]});
    vars.push_back({&x, &g.d_x});
    vars.push_back({&h_prev, &g.d_h_prev});

    auto forward = [&] { return sum_of(gru_cell_forward(x, h_prev, p)); };
    return {"gru-cell", grad_check(forward, vars, eps)};
}

GradSuiteEntry check_bigru_stack(Rng& rng, double eps) {
    const std::size_t D = 3, H = 2, T = 4;
    BiGruStackParams p = BiGruStackParams::shaped(D, H);
    for (auto& layer : p.layers) {
        randomize_cell(layer.fwd, rng);
        randomize_cell(layer.bwd, rng);
    }
    Matrix seq = rand_mat(T, D, rng);

    BiGruStackCache cache;
    bigru_stack_forward(seq, p, cache);
    BiGruStackParams grads = BiGruStackParams::shaped(D, H);
    for (auto& layer : grads.layers) {
        for (Matrix* m : cell_mats(layer.fwd)) m->fill(0.0);
        for (Matrix* m : cell_mats(layer.bwd)) m->fill(0.0);
    }
    const Matrix ones(T, 2 * H, 1.0);
    Matrix d_seq = bigru_stack_backward(p, cache, ones, grads);

    std::vector<GradVar> vars;
    for (int layer = 0; layer < 2; ++layer) {
        auto pf = cell_mats(p.layers[layer].fwd);
        auto gf = cell_mats(grads.layers[layer].fwd);
        auto pb = cell_mats(p.layers[layer].bwd);
        auto gb = cell_mats(grads.layers[layer].bwd);
        for (std::size_t i = 0; i < pf.size(); ++i) {
            vars.push_back({pf[i], gf[i]});
            vars.push_back({pb[i], gb[i]});
        }
    }
    vars.push_back({&seq, &d_seq});

    auto forward = [&] { return sum_of(bigru_stack_forward(seq, p)); };
    return {"bigru-stack", grad_check(forward, vars, eps)};
}

GradSuiteEntry check_context_gate(const char* name, std::size_t dim, std::size_t rows, Rng& rng,
                                  double eps) {
    Matrix x = rand_mat(rows, dim, rng);
    Matrix W = rand_mat(dim, dim, rng);
    Matrix b = rand_mat(dim, 1, rng);

    Matrix gate;
    context_gate_rows(x, W, b, gate);
    Matrix dW(dim, dim), db(dim, 1);
    const Matrix ones(rows, dim, 1.0);
    Matrix dx = context_gate_rows_backward(x, W, gate, ones, dW, db);

    std::vector<GradVar> vars{{&x, &dx}, {&W, &dW}, {&b, &db}};
    auto forward = [&] {
        Matrix g;
        return sum_of(context_gate_rows(x, W, b, g));
    };
    return {name, grad_check(forward, vars, eps)};
}

GradSuiteEntry check_projection(Rng& rng, double eps) {
    const std::size_t T = 3, F = 5, E = 15;
    Matrix x = rand_mat(T, F, rng);
    Matrix W = rand_mat(E, F, rng);
    Matrix b = rand_mat(E, 1, rng);

    // The projection backward is these exact kernel calls in model_backward.
    const Matrix ones(T, E, 1.0);
    Matrix dx = mat_mul(ones, W);
    Matrix dW = mat_mul_tn(ones, x);
    Matrix db = col_sum(ones);

    std::vector<GradVar> vars{{&x, &dx}, {&W, &dW}, {&b, &db}};
    auto forward = [&] {
        Matrix out = mat_mul_nt(x, W);
        add_row_broadcast(out, b);
        return sum_of(out);
    };
    return {"projection", grad_check(forward, vars, eps)};
}

GradSuiteEntry check_sigmoid_head(Rng& rng, double eps) {
    Matrix x = rand_mat(4, 15, rng, -2.0, 2.0);
    const Matrix y = sigmoid(x);
    Matrix dx(x.rows(), x.cols());
    for (std::size_t i = 0; i < dx.size(); ++i) {
        const double v = y.data()[i];
        dx.data()[i] = v * (1.0 - v);
    }
    std::vector<GradVar> vars{{&x, &dx}};
    auto forward = [&] { return sum_of(sigmoid(x)); };
    return {"sigmoid-head", grad_check(forward, vars, eps)};
}

GradSuiteEntry check_loss(const char* name, LossKind kind, Rng& rng, double eps) {
    const std::size_t T = 5, C = 15;
    Matrix pred = rand_mat(T, C, rng, 0.15, 0.85);
    Matrix label = rand_mat(T, C, rng, 0.1, 0.9);
    // Keep the L1 check away from its |.| ties.
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (std::abs(pred.data()[i] - label.data()[i]) < 1e-4) label.data()[i] += 0.05;
    }
    LossReport report = compute_loss(kind, pred, label);
    std::vector<GradVar> vars{{&pred, &report.d_pred}};
    auto forward = [&] { return compute_loss(kind, pred, label).value; };
    return {name, grad_check(forward, vars, eps)};
}

GradSuiteEntry check_model(Rng& rng, double eps) {
    ModelConfig config;
    config.visual_dim = 6;
    config.audio_dim = 4;
    config.hidden_dim = 3;
    config.init_seed = rng.next_u64();
    ModelParams p = init_params(config);
    // Move the biases off their zero init so the check point is generic.
    for (auto& [name, m] : param_list(p)) {
        if (m->cols() == 1) *m = rand_mat(m->rows(), 1, rng, -0.5, 0.5);
    }
    const std::size_t T = 5;
    Matrix visual = rand_mat(T, config.visual_dim, rng);
    Matrix audio = rand_mat(T, config.audio_dim, rng);

    ModelCache cache;
    model_forward(visual, audio, p, cache);
    const Matrix ones(T, 15, 1.0);
    ModelBackwardResult back = model_backward(cache, p, ones);

    std::vector<GradVar> vars;
    auto pm = param_list(p);
    auto gm = param_list(back.grads);
    for (std::size_t i = 0; i < pm.size(); ++i) {
        vars.push_back({pm[i].second, gm[i].second});
    }
    vars.push_back({&visual, &back.d_visual});
    vars.push_back({&audio, &back.d_audio});

    auto forward = [&] { return sum_of(model_forward(visual, audio, p)); };
    return {"model", grad_check(forward, vars, eps)};
}

}  // namespace

std::vector<GradSuiteEntry> run_gradient_suite(std::uint64_t seed, double epsilon) {
    Rng rng(seed);
    std::vector<GradSuiteEntry> entries;
    entries.push_back(check_gru_cell(rng, epsilon));
    entries.push_back(check_bigru_stack(rng, epsilon));
    entries.push_back(check_context_gate("context-gate-fused", 5, 3, rng, epsilon));
    entries.push_back(check_context_gate("context-gate-logits", 15, 2, rng, epsilon));
    entries.push_back(check_projection(rng, epsilon));
    entries.push_back(check_sigmoid_head(rng, epsilon));
    entries.push_back(check_loss("loss-l1", LossKind::L1, rng, epsilon));
    entries.push_back(check_loss("loss-kl", LossKind::KL, rng, epsilon));
    entries.push_back(check_loss("loss-ccc", LossKind::CCC, rng, epsilon));
    entries.push_back(check_model(rng, epsilon));
    return entries;
}

}  // namespace eev
