#include "eev/model.hpp"

#include <algorithm>
#include <cmath>

#include "eev/rng.hpp"

namespace eev {

namespace {

// y += W x, raw vectors. The per-step recurrence stays serial; batched
// matmuls carry the input-dimension work.
void matvec_acc(const Matrix& w, const double* x, double* y) {
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double* wrow = w.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < w.cols(); ++j) acc += wrow[j] * x[j];
        y[i] += acc;
    }
}

// y += W^T x, raw vectors.
void mattvec_acc(const Matrix& w, const double* x, double* y) {
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double* wrow = w.row(i);
        const double xi = x[i];
        for (std::size_t j = 0; j < w.cols(); ++j) y[j] += wrow[j] * xi;
    }
}

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-s, s);
    return m;
}

void cell_param_list(const std::string& prefix, GruCellParams& c,
                     std::vector<std::pair<std::string, Matrix*>>& out) {
    out.emplace_back(prefix + ".W_z", &c.W_z);
    out.emplace_back(prefix + ".U_z", &c.U_z);
    out.emplace_back(prefix + ".b_z", &c.b_z);
    out.emplace_back(prefix + ".W_r", &c.W_r);
    out.emplace_back(prefix + ".U_r", &c.U_r);
    out.emplace_back(prefix + ".b_r", &c.b_r);
    out.emplace_back(prefix + ".W_h", &c.W_h);
    out.emplace_back(prefix + ".U_h", &c.U_h);
    out.emplace_back(prefix + ".b_h", &c.b_h);
}

}  // namespace

GruCellParams GruCellParams::shaped(std::size_t input_dim, std::size_t hidden_dim) {
    GruCellParams p;
    p.W_z = Matrix(hidden_dim, input_dim);
    p.U_z = Matrix(hidden_dim, hidden_dim);
    p.b_z = Matrix(hidden_dim, 1);
    p.W_r = Matrix(hidden_dim, input_dim);
    p.U_r = Matrix(hidden_dim, hidden_dim);
    p.b_r = Matrix(hidden_dim, 1);
    p.W_h = Matrix(hidden_dim, input_dim);
    p.U_h = Matrix(hidden_dim, hidden_dim);
    p.b_h = Matrix(hidden_dim, 1);
    return p;
}

BiGruStackParams BiGruStackParams::shaped(std::size_t input_dim, std::size_t hidden_dim) {
    BiGruStackParams p;
    p.layers[0].fwd = GruCellParams::shaped(input_dim, hidden_dim);
    p.layers[0].bwd = GruCellParams::shaped(input_dim, hidden_dim);
    p.layers[1].fwd = GruCellParams::shaped(2 * hidden_dim, hidden_dim);
    p.layers[1].bwd = GruCellParams::shaped(2 * hidden_dim, hidden_dim);
    return p;
}

FusionHeadParams FusionHeadParams::shaped(std::size_t fused_dim, std::size_t emotions) {
    FusionHeadParams p;
    p.cg1_W = Matrix(fused_dim, fused_dim);
    p.cg1_b = Matrix(fused_dim, 1);
    p.proj_W = Matrix(emotions, fused_dim);
    p.proj_b = Matrix(emotions, 1);
    p.cg2_W = Matrix(emotions, emotions);
    p.cg2_b = Matrix(emotions, 1);
    return p;
}

ModelParams init_params(const ModelConfig& config) {
    if (config.visual_dim == 0 || config.audio_dim == 0 || config.hidden_dim == 0) {
        throw InputError("init_params: all model dimensions must be positive");
    }
    if (config.emotions != 15) {
        throw InputError("init_params: emotions must be 15, got " +
                         std::to_string(config.emotions));
    }
    ModelParams p;
    p.config = config;
    p.visual = BiGruStackParams::shaped(config.visual_dim, config.hidden_dim);
    p.audio = BiGruStackParams::shaped(config.audio_dim, config.hidden_dim);
    p.head = FusionHeadParams::shaped(p.fused_dim(), config.emotions);

    Rng rng(config.init_seed);
    for (auto& [name, mat] : param_list(p)) {
        if (mat->cols() == 1) continue;  // biases stay zero
        *mat = glorot_uniform(mat->rows(), mat->cols(), rng);
    }
    return p;
}

ModelParams zeros_like(const ModelParams& p) {
    ModelParams z;
    z.config = p.config;
    z.visual = BiGruStackParams::shaped(p.config.visual_dim, p.config.hidden_dim);
    z.audio = BiGruStackParams::shaped(p.config.audio_dim, p.config.hidden_dim);
    z.head = FusionHeadParams::shaped(p.fused_dim(), p.config.emotions);
    return z;
}

std::vector<std::pair<std::string, Matrix*>> param_list(ModelParams& p) {
    std::vector<std::pair<std::string, Matrix*>> out;
    out.reserve(4 * 2 * 9 + 6);
    const char* stacks[] = {"visual", "audio"};
    BiGruStackParams* sp[] = {&p.visual, &p.audio};
    for (int s = 0; s < 2; ++s) {
        for (int layer = 0; layer < 2; ++layer) {
            const std::string base =
                std::string(stacks[s]) + ".l" + std::to_string(layer + 1);
            cell_param_list(base + ".fwd", sp[s]->layers[layer].fwd, out);
            cell_param_list(base + ".bwd", sp[s]->layers[layer].bwd, out);
        }
    }
    out.emplace_back("head.cg1_W", &p.head.cg1_W);
    out.emplace_back("head.cg1_b", &p.head.cg1_b);
    out.emplace_back("head.proj_W", &p.head.proj_W);
    out.emplace_back("head.proj_b", &p.head.proj_b);
    out.emplace_back("head.cg2_W", &p.head.cg2_W);
    out.emplace_back("head.cg2_b", &p.head.cg2_b);
    return out;
}

std::vector<std::pair<std::string, const Matrix*>> param_list(const ModelParams& p) {
    auto mut = param_list(const_cast<ModelParams&>(p));
    std::vector<std::pair<std::string, const Matrix*>> out;
    out.reserve(mut.size());
    for (auto& [name, m] : mut) out.emplace_back(std::move(name), m);
    return out;
}

std::size_t param_count(const ModelConfig& config) {
    ModelParams p;
    p.config = config;
    p.visual = BiGruStackParams::shaped(config.visual_dim, config.hidden_dim);
    p.audio = BiGruStackParams::shaped(config.audio_dim, config.hidden_dim);
    p.head = FusionHeadParams::shaped(p.fused_dim(), config.emotions);
    std::size_t n = 0;
    for (const auto& [name, m] : param_list(p)) n += m->size();
    return n;
}

Matrix gru_cell_forward(const Matrix& x, const Matrix& h_prev, const GruCellParams& p) {
    GruCellCache cache;
    return gru_cell_forward(x, h_prev, p, cache);
}

Matrix gru_cell_forward(const Matrix& x, const Matrix& h_prev, const GruCellParams& p,
                        GruCellCache& cache) {
    if (x.cols() != 1 || x.rows() != p.input_dim()) {
        throw DimensionError("gru_cell_forward: input " + x.shape_str() +
                             " does not match W_z " + p.W_z.shape_str());
    }
    if (h_prev.cols() != 1 || h_prev.rows() != p.hidden_dim()) {
        throw DimensionError("gru_cell_forward: state " + h_prev.shape_str() +
                             " does not match hidden dim " +
                             std::to_string(p.hidden_dim()));
    }
    cache.z = sigmoid(add(add(mat_vec(p.W_z, x), mat_vec(p.U_z, h_prev)), p.b_z));
    cache.r = sigmoid(add(add(mat_vec(p.W_r, x), mat_vec(p.U_r, h_prev)), p.b_r));
    const Matrix rh = hadamard(cache.r, h_prev);
    cache.htilde = tanh(add(add(mat_vec(p.W_h, x), mat_vec(p.U_h, rh)), p.b_h));
    Matrix h(p.hidden_dim(), 1);
    for (std::size_t i = 0; i < h.size(); ++i) {
        h.data()[i] = (1.0 - cache.z.data()[i]) * h_prev.data()[i] +
                      cache.z.data()[i] * cache.htilde.data()[i];
    }
    return h;
}

Matrix context_gate(const Matrix& x, const Matrix& W, const Matrix& b) {
    if (x.cols() != 1 || W.cols() != x.rows() || b.rows() != W.rows() || b.cols() != 1) {
        throw DimensionError("context_gate: incompatible shapes " + W.shape_str() + ", " +
                             x.shape_str() + ", " + b.shape_str());
    }
    const Matrix gate = sigmoid(add(mat_vec(W, x), b));
    return hadamard(gate, x);
}

namespace {

// Single-step core of the GRU backward, shared by the cell-level API and
// the sequence BPTT. Fills the three pre-activation cotangents and
// overwrites dh_prev; drh is an H-sized scratch buffer.
void cell_step_core(const GruCellParams& p, const double* dh, const double* z, const double* r,
                    const double* htilde, const double* h_prev, double* daz, double* dar,
                    double* dah, double* dh_prev, double* drh) {
    const std::size_t H = p.hidden_dim();
    for (std::size_t i = 0; i < H; ++i) {
        const double dz = dh[i] * (htilde[i] - h_prev[i]);
        const double dhtilde = dh[i] * z[i];
        dh_prev[i] = dh[i] * (1.0 - z[i]);
        dah[i] = dhtilde * (1.0 - htilde[i] * htilde[i]);
        daz[i] = dz * z[i] * (1.0 - z[i]);
    }
    std::fill(drh, drh + H, 0.0);
    mattvec_acc(p.U_h, dah, drh);
    for (std::size_t i = 0; i < H; ++i) {
        const double dr = drh[i] * h_prev[i];
        dar[i] = dr * r[i] * (1.0 - r[i]);
        dh_prev[i] += drh[i] * r[i];
    }
    mattvec_acc(p.U_z, daz, dh_prev);
    mattvec_acc(p.U_r, dar, dh_prev);
}

}  // namespace

GruCellGrad gru_cell_backward(const Matrix& x, const Matrix& h_prev, const GruCellParams& p,
                              const GruCellCache& cache, const Matrix& d_h) {
    const std::size_t H = p.hidden_dim();
    const std::size_t D = p.input_dim();
    if (d_h.cols() != 1 || d_h.rows() != H) {
        throw DimensionError("gru_cell_backward: cotangent " + d_h.shape_str() +
                             " does not match hidden dim " + std::to_string(H));
    }
    GruCellGrad g;
    g.d_params = GruCellParams::shaped(D, H);
    g.d_x = Matrix(D, 1);
    g.d_h_prev = Matrix(H, 1);

    std::vector<double> daz(H), dar(H), dah(H), drh(H);
    cell_step_core(p, d_h.data(), cache.z.data(), cache.r.data(), cache.htilde.data(),
                   h_prev.data(), daz.data(), dar.data(), dah.data(), g.d_h_prev.data(),
                   drh.data());

    const Matrix rh = hadamard(cache.r, h_prev);
    for (std::size_t i = 0; i < H; ++i) {
        g.d_params.b_z.data()[i] = daz[i];
        g.d_params.b_r.data()[i] = dar[i];
        g.d_params.b_h.data()[i] = dah[i];
        for (std::size_t j = 0; j < D; ++j) {
            g.d_params.W_z.at(i, j) = daz[i] * x.data()[j];
            g.d_params.W_r.at(i, j) = dar[i] * x.data()[j];
            g.d_params.W_h.at(i, j) = dah[i] * x.data()[j];
        }
        for (std::size_t j = 0; j < H; ++j) {
            g.d_params.U_z.at(i, j) = daz[i] * h_prev.data()[j];
            g.d_params.U_r.at(i, j) = dar[i] * h_prev.data()[j];
            g.d_params.U_h.at(i, j) = dah[i] * rh.data()[j];
        }
    }
    mattvec_acc(p.W_z, daz.data(), g.d_x.data());
    mattvec_acc(p.W_r, dar.data(), g.d_x.data());
    mattvec_acc(p.W_h, dah.data(), g.d_x.data());
    return g;
}

namespace {

// One direction of one layer. reverse=false scans t=0..T-1; reverse=true
// scans t=T-1..0. States are stored at the time index they belong to.
void gru_direction_forward(const Matrix& seq, const GruCellParams& p, bool reverse,
                           GruDirectionCache& c) {
    const std::size_t T = seq.rows();
    const std::size_t H = p.hidden_dim();
    Matrix xz = mat_mul_nt(seq, p.W_z);
    add_row_broadcast(xz, p.b_z);
    Matrix xr = mat_mul_nt(seq, p.W_r);
    add_row_broadcast(xr, p.b_r);
    Matrix xh = mat_mul_nt(seq, p.W_h);
    add_row_broadcast(xh, p.b_h);

    c.Z = Matrix(T, H);
    c.R = Matrix(T, H);
    c.Htilde = Matrix(T, H);
    c.H = Matrix(T, H);
    c.RH = Matrix(T, H);

    std::vector<double> h_prev(H, 0.0), az(H), ar(H), ah(H);
    for (std::size_t step = 0; step < T; ++step) {
        const std::size_t t = reverse ? T - 1 - step : step;
        std::copy(xz.row(t), xz.row(t) + H, az.begin());
        matvec_acc(p.U_z, h_prev.data(), az.data());
        std::copy(xr.row(t), xr.row(t) + H, ar.begin());
        matvec_acc(p.U_r, h_prev.data(), ar.data());

        double* z = c.Z.row(t);
        double* r = c.R.row(t);
        double* rh = c.RH.row(t);
        for (std::size_t i = 0; i < H; ++i) {
            z[i] = sigmoid(az[i]);
            r[i] = sigmoid(ar[i]);
            rh[i] = r[i] * h_prev[i];
        }

        std::copy(xh.row(t), xh.row(t) + H, ah.begin());
        matvec_acc(p.U_h, rh, ah.data());

        double* ht = c.Htilde.row(t);
        double* h = c.H.row(t);
        for (std::size_t i = 0; i < H; ++i) {
            ht[i] = std::tanh(ah[i]);
            h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * ht[i];
            h_prev[i] = h[i];
        }
    }
}

// BPTT for one direction. d_h is the T x H cotangent of this direction's
// states; gradients accumulate into g; returns d(seq).
Matrix gru_direction_backward(const Matrix& seq, const GruCellParams& p,
                              const GruDirectionCache& c, const Matrix& d_h, bool reverse,
                              GruCellParams& g) {
    const std::size_t T = seq.rows();
    const std::size_t H = p.hidden_dim();
    Matrix daz(T, H), dar(T, H), dah(T, H);
    Matrix hprev(T, H);  // row t = state preceding step t in scan order

    const std::vector<double> zeros(H, 0.0);
    std::vector<double> carry(H, 0.0), dh(H), dhp(H), drh(H);
    for (std::size_t step = 0; step < T; ++step) {
        // Reverse of the forward scan order.
        const std::size_t t = reverse ? step : T - 1 - step;
        const double* hp = zeros.data();
        if (!reverse && t > 0) hp = c.H.row(t - 1);
        if (reverse && t + 1 < T) hp = c.H.row(t + 1);
        std::copy(hp, hp + H, hprev.row(t));

        for (std::size_t i = 0; i < H; ++i) dh[i] = d_h.at(t, i) + carry[i];
        cell_step_core(p, dh.data(), c.Z.row(t), c.R.row(t), c.Htilde.row(t), hp, daz.row(t),
                       dar.row(t), dah.row(t), dhp.data(), drh.data());
        carry = dhp;
    }

    add_inplace(g.W_z, mat_mul_tn(daz, seq));
    add_inplace(g.U_z, mat_mul_tn(daz, hprev));
    add_inplace(g.b_z, col_sum(daz));
    add_inplace(g.W_r, mat_mul_tn(dar, seq));
    add_inplace(g.U_r, mat_mul_tn(dar, hprev));
    add_inplace(g.b_r, col_sum(dar));
    add_inplace(g.W_h, mat_mul_tn(dah, seq));
    add_inplace(g.U_h, mat_mul_tn(dah, c.RH));
    add_inplace(g.b_h, col_sum(dah));

    Matrix d_seq = mat_mul(daz, p.W_z);
    add_inplace(d_seq, mat_mul(dar, p.W_r));
    add_inplace(d_seq, mat_mul(dah, p.W_h));
    return d_seq;
}

}  // namespace

Matrix bigru_stack_forward(const Matrix& seq, const BiGruStackParams& p,
                           BiGruStackCache& cache) {
    if (seq.cols() != p.layers[0].fwd.input_dim()) {
        throw DimensionError("bigru_stack_forward: input " + seq.shape_str() +
                             " does not match stack input dim " +
                             std::to_string(p.layers[0].fwd.input_dim()));
    }
    const std::size_t H = p.hidden_dim();
    Matrix input = seq;
    for (int layer = 0; layer < 2; ++layer) {
        BiGruLayerCache& lc = cache.layers[layer];
        lc.input = input;
        gru_direction_forward(input, p.layers[layer].fwd, false, lc.fwd);
        gru_direction_forward(input, p.layers[layer].bwd, true, lc.bwd);
        Matrix out(input.rows(), 2 * H);
        for (std::size_t t = 0; t < out.rows(); ++t) {
            std::copy(lc.fwd.H.row(t), lc.fwd.H.row(t) + H, out.row(t));
            std::copy(lc.bwd.H.row(t), lc.bwd.H.row(t) + H, out.row(t) + H);
        }
        input = std::move(out);
    }
    cache.output = input;
    return cache.output;
}

Matrix bigru_stack_backward(const BiGruStackParams& p, const BiGruStackCache& cache,
                            const Matrix& d_out, BiGruStackParams& g) {
    const std::size_t H = p.hidden_dim();
    Matrix d = d_out;
    for (int layer = 1; layer >= 0; --layer) {
        const BiGruLayerCache& lc = cache.layers[layer];
        const std::size_t T = lc.input.rows();
        Matrix d_fwd(T, H), d_bwd(T, H);
        for (std::size_t t = 0; t < T; ++t) {
            std::copy(d.row(t), d.row(t) + H, d_fwd.row(t));
            std::copy(d.row(t) + H, d.row(t) + 2 * H, d_bwd.row(t));
        }
        Matrix d_input = gru_direction_backward(lc.input, p.layers[layer].fwd, lc.fwd, d_fwd,
                                                false, g.layers[layer].fwd);
        add_inplace(d_input, gru_direction_backward(lc.input, p.layers[layer].bwd, lc.bwd,
                                                    d_bwd, true, g.layers[layer].bwd));
        d = std::move(d_input);
    }
    return d;
}

Matrix context_gate_rows(const Matrix& x, const Matrix& W, const Matrix& b, Matrix& gate_out) {
    Matrix a = mat_mul_nt(x, W);
    add_row_broadcast(a, b);
    gate_out = sigmoid(a);
    return hadamard(gate_out, x);
}

Matrix context_gate_rows_backward(const Matrix& x, const Matrix& W, const Matrix& gate,
                                  const Matrix& d_gated, Matrix& dW, Matrix& db) {
    Matrix da = d_gated;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double gv = gate.data()[i];
        da.data()[i] *= x.data()[i] * gv * (1.0 - gv);
    }
    Matrix dx = hadamard(d_gated, gate);
    add_inplace(dx, mat_mul(da, W));
    add_inplace(dW, mat_mul_tn(da, x));
    add_inplace(db, col_sum(da));
    return dx;
}

Matrix bigru_stack_forward(const Matrix& seq, const BiGruStackParams& p) {
    BiGruStackCache cache;
    return bigru_stack_forward(seq, p, cache);
}

Matrix model_forward(const Matrix& visual, const Matrix& audio, const ModelParams& p) {
    ModelCache cache;
    return model_forward(visual, audio, p, cache);
}

Matrix model_forward(const Matrix& visual, const Matrix& audio, const ModelParams& p,
                     ModelCache& cache) {
    if (visual.rows() != audio.rows()) {
        throw DimensionError("model_forward: modality alignment error, visual has " +
                             std::to_string(visual.rows()) + " rows but audio has " +
                             std::to_string(audio.rows()));
    }
    if (visual.cols() != p.config.visual_dim || audio.cols() != p.config.audio_dim) {
        throw DimensionError("model_forward: feature dims " + visual.shape_str() + "/" +
                             audio.shape_str() + " do not match config");
    }
    const std::size_t T = visual.rows();
    const Matrix v_out = bigru_stack_forward(visual, p.visual, cache.visual);
    const Matrix a_out = bigru_stack_forward(audio, p.audio, cache.audio);

    const std::size_t fv = v_out.cols();
    const std::size_t fa = a_out.cols();
    cache.fused = Matrix(T, fv + fa);
    for (std::size_t t = 0; t < T; ++t) {
        std::copy(v_out.row(t), v_out.row(t) + fv, cache.fused.row(t));
        std::copy(a_out.row(t), a_out.row(t) + fa, cache.fused.row(t) + fv);
    }

    cache.gated1 = context_gate_rows(cache.fused, p.head.cg1_W, p.head.cg1_b, cache.gate1);
    cache.logits = mat_mul_nt(cache.gated1, p.head.proj_W);
    add_row_broadcast(cache.logits, p.head.proj_b);
    cache.gated2 = context_gate_rows(cache.logits, p.head.cg2_W, p.head.cg2_b, cache.gate2);
    cache.output = sigmoid(cache.gated2);
    return cache.output;
}

ModelBackwardResult model_backward(const ModelCache& cache, const ModelParams& p,
                                   const Matrix& d_output) {
    if (!d_output.same_shape(cache.output)) {
        throw DimensionError("model_backward: cotangent " + d_output.shape_str() +
                             " does not match cached output " + cache.output.shape_str());
    }
    ModelBackwardResult res{zeros_like(p), Matrix(), Matrix()};
    ModelParams& g = res.grads;

    // sigmoid head
    Matrix d_gated2 = d_output;
    for (std::size_t i = 0; i < d_gated2.size(); ++i) {
        const double o = cache.output.data()[i];
        d_gated2.data()[i] *= o * (1.0 - o);
    }
    // second context gate
    Matrix d_logits = context_gate_rows_backward(cache.logits, p.head.cg2_W, cache.gate2, d_gated2,
                                    g.head.cg2_W, g.head.cg2_b);
    // projection
    Matrix d_gated1 = mat_mul(d_logits, p.head.proj_W);
    add_inplace(g.head.proj_W, mat_mul_tn(d_logits, cache.gated1));
    add_inplace(g.head.proj_b, col_sum(d_logits));
    // first context gate
    Matrix d_fused = context_gate_rows_backward(cache.fused, p.head.cg1_W, cache.gate1, d_gated1,
                                   g.head.cg1_W, g.head.cg1_b);
    // un-concat
    const std::size_t T = d_fused.rows();
    const std::size_t fv = cache.visual.output.cols();
    const std::size_t fa = cache.audio.output.cols();
    Matrix d_v(T, fv), d_a(T, fa);
    for (std::size_t t = 0; t < T; ++t) {
        std::copy(d_fused.row(t), d_fused.row(t) + fv, d_v.row(t));
        std::copy(d_fused.row(t) + fv, d_fused.row(t) + fv + fa, d_a.row(t));
    }
    res.d_visual = bigru_stack_backward(p.visual, cache.visual, d_v, g.visual);
    res.d_audio = bigru_stack_backward(p.audio, cache.audio, d_a, g.audio);
    return res;
}

}  // namespace eev
