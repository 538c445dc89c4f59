#include "eev/losses.hpp"

#include <cmath>

#include "eev/metrics.hpp"

namespace eev {

namespace {

void require_same_shape(const Matrix& pred, const Matrix& label, const char* op) {
    if (!pred.same_shape(label)) {
        throw DimensionError(std::string(op) + ": prediction " + pred.shape_str() +
                             " vs label " + label.shape_str());
    }
}

}  // namespace

LossReport l1_loss(const Matrix& pred, const Matrix& label) {
    require_same_shape(pred, label, "l1_loss");
    LossReport report;
    report.d_pred = Matrix(pred.rows(), pred.cols());
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred.data()[i] - label.data()[i];
        report.value += std::abs(d);
        report.d_pred.data()[i] = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0);
    }
    report.value *= inv_n;
    return report;
}

LossReport kl_loss(const Matrix& pred, const Matrix& label, double eps) {
    require_same_shape(pred, label, "kl_loss");
    if (!(eps > 0.0 && eps <= 1e-3)) {
        throw InputError("kl_loss: eps must be in (0, 1e-3], got " + std::to_string(eps));
    }
    LossReport report;
    report.d_pred = Matrix(pred.rows(), pred.cols());
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double y = label.data()[i];
        const double raw = pred.data()[i];
        const double q = std::min(std::max(raw, eps), 1.0 - eps);
        double term = 0.0;
        if (y > 0.0) term += y * std::log(y / q);
        if (y < 1.0) term += (1.0 - y) * std::log((1.0 - y) / (1.0 - q));
        report.value += term;
        // The clamp makes the loss locally constant outside [eps, 1-eps].
        const bool clamped = raw < eps || raw > 1.0 - eps;
        report.d_pred.data()[i] = clamped ? 0.0 : (-y / q + (1.0 - y) / (1.0 - q)) * inv_n;
    }
    report.value *= inv_n;
    return report;
}

LossReport ccc_loss(const Matrix& pred, const Matrix& label) {
    require_same_shape(pred, label, "ccc_loss");
    const std::size_t T = pred.rows();
    const std::size_t C = pred.cols();
    if (T < 2) {
        throw InputError("ccc_loss: need at least 2 rows, got " + std::to_string(T));
    }
    LossReport report;
    report.d_pred = Matrix(T, C);
    const double inv_t = 1.0 / static_cast<double>(T);
    const double inv_c = 1.0 / static_cast<double>(C);
    std::vector<double> x(T), y(T);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t t = 0; t < T; ++t) {
            x[t] = pred.at(t, c);
            y[t] = label.at(t, c);
        }
        const MomentSummary m = compute_moments(x, y);
        if (degenerate_variance(m.var_x, m.mean_x) || degenerate_variance(m.var_y, m.mean_y)) {
            report.value += 1.0;  // rho_c = 0, gradient 0
            continue;
        }
        const double md = m.mean_x - m.mean_y;
        const double denom = m.var_x + m.var_y + md * md;
        const double rho_c = 2.0 * m.cov_xy / denom;
        report.value += 1.0 - rho_c;
        for (std::size_t t = 0; t < T; ++t) {
            const double d_cov = (y[t] - m.mean_y) * inv_t;
            const double d_denom = 2.0 * (x[t] - m.mean_x) * inv_t + 2.0 * md * inv_t;
            const double d_rho = (2.0 * d_cov - rho_c * d_denom) / denom;
            report.d_pred.at(t, c) = -d_rho * inv_c;
        }
    }
    report.value *= inv_c;
    return report;
}

LossKind parse_loss_kind(const std::string& s) {
    if (s == "l1") return LossKind::L1;
    if (s == "kl") return LossKind::KL;
    if (s == "ccc") return LossKind::CCC;
    throw InputError("unknown loss kind '" + s + "', expected l1|kl|ccc");
}

std::string loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::L1: return "l1";
        case LossKind::KL: return "kl";
        case LossKind::CCC: return "ccc";
    }
    return "?";
}

LossReport compute_loss(LossKind kind, const Matrix& pred, const Matrix& label) {
    switch (kind) {
        case LossKind::L1: return l1_loss(pred, label);
        case LossKind::KL: return kl_loss(pred, label);
        case LossKind::CCC: return ccc_loss(pred, label);
    }
    throw InputError("compute_loss: bad loss kind");
}

}  // namespace eev
