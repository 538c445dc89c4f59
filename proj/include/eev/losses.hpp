// The three training objectives, each returning its value together with the
// analytic gradient w.r.t. the prediction.
#pragma once

#include "eev/matrix.hpp"

namespace eev {

struct LossReport {
    double value = 0.0;
    Matrix d_pred;  // same shape as the prediction
};

// Mean over all entries of |pred - label|; subgradient 0 at ties.
LossReport l1_loss(const Matrix& pred, const Matrix& label);

// Per-entry Bernoulli KL(label || pred) with pred clamped to [eps, 1-eps]
// and 0*ln(0) == 0; mean over entries. The 15 scores do not form a
// distribution across emotions, so each entry is treated as its own
// Bernoulli parameter.
LossReport kl_loss(const Matrix& pred, const Matrix& label, double eps = 1e-6);

// Mean over channels of (1 - concordance correlation), population moments.
// Channels with (near-)zero variance on either side contribute 1 with zero
// gradient. Requires at least 2 rows.
LossReport ccc_loss(const Matrix& pred, const Matrix& label);

enum class LossKind { L1, KL, CCC };

LossKind parse_loss_kind(const std::string& s);
std::string loss_kind_name(LossKind k);

LossReport compute_loss(LossKind kind, const Matrix& pred, const Matrix& label);

}  // namespace eev
