// Per-modality 2-layer bidirectional GRU stacks, concatenation late fusion,
// two context gates around a 15-way projection, sigmoid output. Backward is
// hand-written reverse mode (BPTT through both directions of both layers);
// gradcheck.hpp verifies it against central differences.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eev/matrix.hpp"

namespace eev {

struct ModelConfig {
    std::size_t visual_dim = 1536;
    std::size_t audio_dim = 128;
    std::size_t hidden_dim = 256;
    std::size_t emotions = 15;  // fixed by the label format
    std::uint64_t init_seed = 0;
};

struct GruCellParams {
    Matrix W_z, U_z, b_z, W_r, U_r, b_r, W_h, U_h, b_h;

    static GruCellParams shaped(std::size_t input_dim, std::size_t hidden_dim);
    std::size_t input_dim() const { return W_z.cols(); }
    std::size_t hidden_dim() const { return W_z.rows(); }
};

struct BiGruLayerParams {
    GruCellParams fwd, bwd;
};

// Two bidirectional layers; layer 2 consumes layer 1's concatenated output.
struct BiGruStackParams {
    std::array<BiGruLayerParams, 2> layers;

    static BiGruStackParams shaped(std::size_t input_dim, std::size_t hidden_dim);
    std::size_t hidden_dim() const { return layers[0].fwd.hidden_dim(); }
};

struct FusionHeadParams {
    Matrix cg1_W, cg1_b;  // F x F gate on the fused vector
    Matrix proj_W, proj_b;  // 15 x F projection
    Matrix cg2_W, cg2_b;  // 15 x 15 gate on the logits

    static FusionHeadParams shaped(std::size_t fused_dim, std::size_t emotions);
};

// Also used as the gradient container: model_backward returns a ModelParams
// whose matrices hold d(loss)/d(param) in the same shapes.
struct ModelParams {
    BiGruStackParams visual, audio;
    FusionHeadParams head;
    ModelConfig config;

    std::size_t fused_dim() const { return 2 * visual.hidden_dim() + 2 * audio.hidden_dim(); }
};

// Glorot-uniform weights, zero biases, deterministic in config.init_seed.
ModelParams init_params(const ModelConfig& config);

ModelParams zeros_like(const ModelParams& p);

// Canonical parameter enumeration. The order is the contract for weight
// serialization, initialization draws, and optimizer state:
// visual stack layer1-fwd (W_z,U_z,b_z,W_r,U_r,b_r,W_h,U_h,b_h), layer1-bwd,
// layer2-fwd, layer2-bwd, audio stack likewise, then head cg1/proj/cg2.
std::vector<std::pair<std::string, Matrix*>> param_list(ModelParams& p);
std::vector<std::pair<std::string, const Matrix*>> param_list(const ModelParams& p);

std::size_t param_count(const ModelConfig& config);

// One GRU step: x (D x 1), h_prev (H x 1) -> h (H x 1).
Matrix gru_cell_forward(const Matrix& x, const Matrix& h_prev, const GruCellParams& p);

struct GruCellCache {
    Matrix z, r, htilde;  // H x 1 activations of one step
};
Matrix gru_cell_forward(const Matrix& x, const Matrix& h_prev, const GruCellParams& p,
                        GruCellCache& cache);

struct GruCellGrad {
    GruCellParams d_params;
    Matrix d_x, d_h_prev;
};
// Single-step reverse mode; shares its core with the sequence BPTT.
GruCellGrad gru_cell_backward(const Matrix& x, const Matrix& h_prev, const GruCellParams& p,
                              const GruCellCache& cache, const Matrix& d_h);

// seq (T x D) -> (T x 2H); forward scan starts from h=0, backward scan ends
// there; row t is [h_fwd_t || h_bwd_t].
Matrix bigru_stack_forward(const Matrix& seq, const BiGruStackParams& p);

// y = sigmoid(W x + b) .* x for a column vector x.
Matrix context_gate(const Matrix& x, const Matrix& W, const Matrix& b);

// Row-batched context gate as used inside the fusion head; gate_out receives
// the sigmoid activations needed by the backward.
Matrix context_gate_rows(const Matrix& x, const Matrix& W, const Matrix& b, Matrix& gate_out);

// Returns d_x; accumulates into dW and db.
Matrix context_gate_rows_backward(const Matrix& x, const Matrix& W, const Matrix& gate,
                                  const Matrix& d_gated, Matrix& dW, Matrix& db);

// Everything backward needs, captured by the caching forward overload.
struct GruDirectionCache {
    Matrix Z, R, Htilde, H, RH;  // each T x H; RH row t is r .* h_prev
};
struct BiGruLayerCache {
    Matrix input;  // T x D as seen by this layer
    GruDirectionCache fwd, bwd;
};
struct BiGruStackCache {
    std::array<BiGruLayerCache, 2> layers;
    Matrix output;  // T x 2H
};
struct ModelCache {
    BiGruStackCache visual, audio;
    Matrix fused;    // T x F
    Matrix gate1;    // T x F, sigmoid activations of the first context gate
    Matrix gated1;   // T x F
    Matrix logits;   // T x 15
    Matrix gate2;    // T x 15
    Matrix gated2;   // T x 15, pre-sigmoid
    Matrix output;   // T x 15
};

Matrix bigru_stack_forward(const Matrix& seq, const BiGruStackParams& p,
                           BiGruStackCache& cache);

// Returns d_seq; accumulates parameter gradients into grads.
Matrix bigru_stack_backward(const BiGruStackParams& p, const BiGruStackCache& cache,
                            const Matrix& d_out, BiGruStackParams& grads);

Matrix model_forward(const Matrix& visual, const Matrix& audio, const ModelParams& p);
Matrix model_forward(const Matrix& visual, const Matrix& audio, const ModelParams& p,
                     ModelCache& cache);

struct ModelBackwardResult {
    ModelParams grads;  // d(scalar)/d(param), same shapes as the params
    Matrix d_visual;    // T x visual_dim
    Matrix d_audio;     // T x audio_dim
};

// Reverse mode through the cached forward; d_output is T x 15.
ModelBackwardResult model_backward(const ModelCache& cache, const ModelParams& p,
                                   const Matrix& d_output);

}  // namespace eev
