#include "eev/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "eev/metrics.hpp"
#include "eev/rng.hpp"
#include "eev/threading.hpp"

namespace eev {

PredictionStrategy parse_strategy(const std::string& s) {
    if (s == "dense-6hz-10s") return PredictionStrategy::Dense6Hz10s;
    if (s == "dense-6hz-60s") return PredictionStrategy::Dense6Hz60s;
    if (s == "sparse-1hz-interp") return PredictionStrategy::Sparse1HzInterp;
    throw InputError("unknown strategy '" + s +
                     "', expected dense-6hz-10s|dense-6hz-60s|sparse-1hz-interp");
}

std::string strategy_name(PredictionStrategy s) {
    switch (s) {
        case PredictionStrategy::Dense6Hz10s: return "dense-6hz-10s";
        case PredictionStrategy::Dense6Hz60s: return "dense-6hz-60s";
        case PredictionStrategy::Sparse1HzInterp: return "sparse-1hz-interp";
    }
    return "?";
}

double strategy_sample_rate_hz(PredictionStrategy s) {
    return s == PredictionStrategy::Sparse1HzInterp ? 1.0 : 6.0;
}

double strategy_clip_seconds(PredictionStrategy s) {
    return s == PredictionStrategy::Dense6Hz10s ? 10.0 : 60.0;
}

AdamState AdamState::for_params(const ModelParams& params) {
    AdamState st;
    st.m = zeros_like(params);
    st.v = zeros_like(params);
    st.step = 0;
    return st;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const TrainConfig& cfg) {
    auto p_list = param_list(params);
    auto g_list = param_list(grads);
    auto m_list = param_list(state.m);
    auto v_list = param_list(state.v);

    double sq_norm = 0.0;
    for (std::size_t k = 0; k < g_list.size(); ++k) {
        const Matrix& g = *g_list[k].second;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double gv = g.data()[i];
            if (!std::isfinite(gv)) {
                throw NumericError("adam_step: non-finite gradient in " + g_list[k].first +
                                   " at step " + std::to_string(state.step + 1));
            }
            sq_norm += gv * gv;
        }
    }
    const double norm = std::sqrt(sq_norm);
    const double clip_scale =
        (cfg.grad_clip_norm > 0.0 && norm > cfg.grad_clip_norm) ? cfg.grad_clip_norm / norm : 1.0;

    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < p_list.size(); ++k) {
        Matrix& p = *p_list[k].second;
        const Matrix& g = *g_list[k].second;
        Matrix& m = *m_list[k].second;
        Matrix& v = *v_list[k].second;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gv = g.data()[i] * clip_scale;
            m.data()[i] = cfg.adam_beta1 * m.data()[i] + (1.0 - cfg.adam_beta1) * gv;
            v.data()[i] = cfg.adam_beta2 * v.data()[i] + (1.0 - cfg.adam_beta2) * gv * gv;
            const double m_hat = m.data()[i] / bc1;
            const double v_hat = v.data()[i] / bc2;
            p.data()[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        }
    }
}

namespace {

struct TrainClip {
    Matrix visual;  // T x visual_dim
    Matrix audio;   // T x audio_dim
    Matrix label;   // T x 15
};

// Resamples one video to the training rate and cuts aligned clips.
void make_clips(const VideoSample& video, double sample_rate_hz, double clip_seconds,
                std::vector<TrainClip>& out) {
    SampledTrack vis = downsample(visual_track(video.features), sample_rate_hz);
    SampledTrack aud = downsample(audio_track(video.features), sample_rate_hz);
    SampledTrack lab = downsample(video.labels.values, sample_rate_hz);

    std::size_t T = std::min({vis.frames(), aud.frames(), lab.frames()});
    if (T != vis.frames() || T != lab.frames()) {
        std::fprintf(stderr, "[eev] train: %s: aligning %zu feature / %zu label frames to %zu\n",
                     video.features.video_id.c_str(), vis.frames(), lab.frames(), T);
    }
    auto truncate = [T](SampledTrack& t) {
        if (t.frames() == T) return;
        Matrix m(T, t.channels());
        for (std::size_t r = 0; r < T; ++r) {
            std::copy(t.values.row(r), t.values.row(r) + t.channels(), m.row(r));
        }
        t.values = std::move(m);
    };
    truncate(vis);
    truncate(aud);
    truncate(lab);

    auto vis_clips = segment_clips(vis, clip_seconds);
    auto aud_clips = segment_clips(aud, clip_seconds);
    auto lab_clips = segment_clips(lab, clip_seconds);
    for (std::size_t i = 0; i < vis_clips.size(); ++i) {
        out.push_back(TrainClip{std::move(vis_clips[i].values), std::move(aud_clips[i].values),
                                std::move(lab_clips[i].values)});
    }
}

struct ClipGrad {
    ModelParams grads;
    double loss = 0.0;
};

ClipGrad clip_gradient(const TrainClip& clip, const ModelParams& params, LossKind loss_kind) {
    ModelCache cache;
    const Matrix pred = model_forward(clip.visual, clip.audio, params, cache);
    LossReport report = compute_loss(loss_kind, pred, clip.label);
    ModelBackwardResult back = model_backward(cache, params, report.d_pred);
    return ClipGrad{std::move(back.grads), report.value};
}

double validation_score(const std::vector<const VideoSample*>& videos,
                        const ModelParams& params, PredictionStrategy strategy) {
    std::vector<ScoreReport> reports(videos.size());
    const int nt = threads();
    const auto n = static_cast<long long>(videos.size());
    ParallelErrors errors(videos.size());
#pragma omp parallel for num_threads(nt) if (nt > 1 && n > 1) schedule(dynamic)
    for (long long i = 0; i < n; ++i) {
        const auto slot = static_cast<std::size_t>(i);
        try {
            const SampledTrack pred = predict_video(videos[slot]->features, params, strategy);
            reports[slot] = score_video(pred, videos[slot]->labels.values);
        } catch (...) {
            errors.capture(slot);
        }
    }
    errors.rethrow_first();
    return score_dataset(reports);
}

}  // namespace

TrainResult train(const std::vector<VideoSample>& dataset, const TrainConfig& cfg) {
    if (dataset.empty()) {
        throw InputError("train: empty dataset");
    }
    if (!(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0)) {
        throw InputError("train: validation_fraction must be in (0,1)");
    }
    if (cfg.learning_rate <= 0.0 || cfg.sample_rate_hz <= 0.0 || cfg.clip_seconds <= 0.0 ||
        cfg.batch_clips == 0 || cfg.hidden_dim == 0) {
        throw InputError("train: config values must be positive");
    }

    // Whole-video split; when it would leave nothing to train on (or nothing
    // to validate on), validation falls back to the training videos.
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng split_rng(Rng::mix(cfg.seed, 0x5eed5ULL << 40));
    split_rng.shuffle(order);
    const auto n_val = static_cast<std::size_t>(cfg.validation_fraction *
                                                static_cast<double>(dataset.size()));
    std::vector<const VideoSample*> train_videos, val_videos;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < order.size() - n_val) {
            train_videos.push_back(&dataset[order[i]]);
        } else {
            val_videos.push_back(&dataset[order[i]]);
        }
    }
    if (val_videos.empty()) val_videos = train_videos;

    ModelConfig mc;
    mc.visual_dim = dataset[0].features.visual.cols();
    mc.audio_dim = dataset[0].features.audio.cols();
    mc.hidden_dim = cfg.hidden_dim;
    mc.init_seed = cfg.seed;
    ModelParams params = init_params(mc);

    std::vector<TrainClip> clips;
    for (const VideoSample* video : train_videos) {
        make_clips(*video, cfg.sample_rate_hz, cfg.clip_seconds, clips);
    }
    if (clips.empty()) {
        throw InputError("train: no usable clips (videos shorter than 2 samples?)");
    }

    AdamState adam = AdamState::for_params(params);
    TrainHistory history;
    ModelParams best_params = params;
    double best_score = -2.0;

    std::vector<std::size_t> clip_order(clips.size());
    for (std::size_t i = 0; i < clip_order.size(); ++i) clip_order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng epoch_rng(Rng::mix(cfg.seed, (0xe90c4ULL << 40) + epoch));
        epoch_rng.shuffle(clip_order);

        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < clip_order.size(); begin += cfg.batch_clips) {
            const std::size_t count = std::min(cfg.batch_clips, clip_order.size() - begin);
            std::vector<ClipGrad> slots(count);
            const int nt = threads();
            ParallelErrors errors(count);
#pragma omp parallel for num_threads(nt) if (nt > 1 && count > 1) schedule(dynamic)
            for (long long i = 0; i < static_cast<long long>(count); ++i) {
                const auto slot = static_cast<std::size_t>(i);
                try {
                    slots[slot] =
                        clip_gradient(clips[clip_order[begin + slot]], params, cfg.loss_kind);
                } catch (...) {
                    errors.capture(slot);
                }
            }
            errors.rethrow_first();
            // Fixed-order reduction keeps multithreaded runs bit-identical.
            ModelParams batch_grads = std::move(slots[0].grads);
            epoch_loss += slots[0].loss;
            for (std::size_t i = 1; i < count; ++i) {
                auto acc = param_list(batch_grads);
                auto add = param_list(slots[i].grads);
                for (std::size_t k = 0; k < acc.size(); ++k) {
                    add_inplace(*acc[k].second, *add[k].second);
                }
                epoch_loss += slots[i].loss;
            }
            if (count > 1) {
                for (auto& [name, g] : param_list(batch_grads)) {
                    scale_inplace(*g, 1.0 / static_cast<double>(count));
                }
            }
            adam_step(params, batch_grads, adam, cfg);
        }
        epoch_loss /= static_cast<double>(clips.size());
        if (!std::isfinite(epoch_loss)) {
            throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
        }
        history.train_loss.push_back(epoch_loss);

        const double score = validation_score(val_videos, params, cfg.validation_strategy);
        history.val_pearson.push_back(score);
        if (score > best_score) {
            best_score = score;
            best_params = params;
            history.best_epoch = epoch;
        }
    }

    std::map<std::string, std::string> meta;
    meta["loss"] = loss_kind_name(cfg.loss_kind);
    meta["epochs"] = std::to_string(cfg.epochs);
    meta["seed"] = std::to_string(cfg.seed);
    meta["sample_rate_hz"] = std::to_string(cfg.sample_rate_hz);
    meta["clip_seconds"] = std::to_string(cfg.clip_seconds);
    meta["validation_strategy"] = strategy_name(cfg.validation_strategy);
    if (!history.val_pearson.empty()) {
        meta["best_epoch"] = std::to_string(history.best_epoch);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.9g", history.val_pearson[history.best_epoch]);
        meta["best_val_pearson"] = buf;
    }

    TrainResult result;
    result.checkpoint =
        checkpoint_from_params(cfg.epochs == 0 ? params : best_params, std::move(meta));
    result.history = std::move(history);
    return result;
}

SampledTrack predict_video(const FeatureSequence& features, const ModelParams& params,
                           PredictionStrategy strategy) {
    if (features.frames() < 2) {
        throw InputError("predict_video: need at least 2 feature frames");
    }
    const double native_rate = feature_rate_hz(features);
    const double span_s = static_cast<double>(features.frames() - 1) / native_rate;
    if (span_s < 2.0) {
        throw InputError("predict_video: features must cover at least 2 seconds, got " +
                         std::to_string(span_s));
    }
    const auto out_frames = static_cast<std::size_t>(std::floor(span_s * 6.0 + 1e-9)) + 1;

    const double model_rate = strategy_sample_rate_hz(strategy);
    std::size_t window = strategy == PredictionStrategy::Dense6Hz60s ? 360 : 60;

    const SampledTrack vis = downsample(visual_track(features), model_rate);
    const SampledTrack aud = downsample(audio_track(features), model_rate);
    const std::size_t T = vis.frames();
    if (window > T) {
        std::fprintf(stderr, "[eev] predict: %s: shrinking %zu-frame window to %zu frames\n",
                     features.video_id.c_str(), window, T);
        window = T;
    }

    Matrix pred(T, 15);
    const std::size_t n_windows = (T + window - 1) / window;
    const int nt = threads();
    ParallelErrors errors(n_windows);
#pragma omp parallel for num_threads(nt) if (nt > 1 && n_windows > 1) schedule(dynamic)
    for (long long wi = 0; wi < static_cast<long long>(n_windows); ++wi) {
        try {
            const std::size_t begin = static_cast<std::size_t>(wi) * window;
            const std::size_t len = std::min(window, T - begin);
            Matrix v(len, vis.channels()), a(len, aud.channels());
            for (std::size_t t = 0; t < len; ++t) {
                std::copy(vis.values.row(begin + t), vis.values.row(begin + t) + vis.channels(),
                          v.row(t));
                std::copy(aud.values.row(begin + t), aud.values.row(begin + t) + aud.channels(),
                          a.row(t));
            }
            const Matrix out = model_forward(v, a, params);
            for (std::size_t t = 0; t < len; ++t) {
                std::copy(out.row(t), out.row(t) + 15, pred.row(begin + t));
            }
        } catch (...) {
            errors.capture(static_cast<std::size_t>(wi));
        }
    }
    errors.rethrow_first();

    SampledTrack track{model_rate,
                       static_cast<double>(features.timestamps_ms.front()) / 1000.0,
                       std::move(pred)};
    if (strategy == PredictionStrategy::Sparse1HzInterp) {
        return linear_interpolate(track, 6.0, out_frames);
    }
    if (track.frames() != out_frames) {
        return linear_interpolate(track, 6.0, out_frames);  // rounding tail: clamp rule
    }
    return track;
}

SampledTrack ensemble(const std::vector<SampledTrack>& predictions) {
    if (predictions.empty()) {
        throw InputError("ensemble: empty prediction list");
    }
    std::size_t T = predictions[0].frames();
    const std::size_t C = predictions[0].channels();
    for (const SampledTrack& p : predictions) {
        if (p.channels() != C) {
            throw DimensionError("ensemble: channel mismatch, " + std::to_string(p.channels()) +
                                 " vs " + std::to_string(C));
        }
        T = std::min(T, p.frames());
    }
    for (const SampledTrack& p : predictions) {
        if (p.frames() != T) {
            std::fprintf(stderr, "[eev] ensemble: truncating %zu frames to %zu\n", p.frames(), T);
            break;
        }
    }
    SampledTrack out;
    out.rate_hz = predictions[0].rate_hz;
    out.start_time_s = predictions[0].start_time_s;
    out.values = Matrix(T, C);
    const double inv_n = 1.0 / static_cast<double>(predictions.size());
    for (std::size_t t = 0; t < T; ++t) {
        double* orow = out.values.row(t);
        for (const SampledTrack& p : predictions) {
            const double* prow = p.values.row(t);
            for (std::size_t c = 0; c < C; ++c) orow[c] += prow[c];
        }
        for (std::size_t c = 0; c < C; ++c) orow[c] *= inv_n;
    }
    return out;
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) {
        throw InputError("write_history_csv: cannot open " + path);
    }
    std::fputs("epoch,train_loss,val_pearson,is_best\n", f);
    for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
        std::fprintf(f, "%zu,%.9g,%.9g,%d\n", e, history.train_loss[e], history.val_pearson[e],
                     e == history.best_epoch ? 1 : 0);
    }
    if (std::fclose(f) != 0) {
        throw InputError("write_history_csv: failed to flush " + path);
    }
}

}  // namespace eev
