// eev — batch CLI for the evoked-expression prediction pipeline.
// Subcommands: gen-data, train, predict, evaluate, filter, interpolate,
// ensemble, grad-check. Exit codes: 0 success, 1 usage, 2 data/format,
// 3 numeric failure.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eev/dataio.hpp"
#include "eev/gradcheck.hpp"
#include "eev/manifest.hpp"
#include "eev/metrics.hpp"
#include "eev/signal.hpp"
#include "eev/synthetic.hpp"
#include "eev/threading.hpp"
#include "eev/trainer.hpp"
#include "eev/version.hpp"

namespace fs = std::filesystem;

namespace {

std::string version_string() {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "eev %s (formats: EEVF v%d, EEVM v%d, label-csv v%d)",
                  eev::kToolVersion, eev::kFeatureFormatVersion, eev::kCheckpointFormatVersion,
                  eev::kLabelCsvSchemaVersion);
    return buf;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct GenDataArgs {
    std::string out_dir;
    eev::SyntheticSpec spec;
    bool emit_clean = false;
};

int run_gen_data(const GenDataArgs& args) {
    Timer timer;
    fs::create_directories(args.out_dir);
    const auto videos = eev::generate_synthetic(args.spec);
    std::vector<std::string> outputs;
    for (const auto& video : videos) {
        const fs::path base = fs::path(args.out_dir) / video.features.video_id;
        eev::write_features(base.string() + ".eevf", video.features);
        eev::write_labels(base.string() + ".csv", video.labels);
        outputs.push_back(base.string() + ".eevf");
        outputs.push_back(base.string() + ".csv");
        if (args.emit_clean) {
            eev::write_labels(base.string() + ".clean.csv", video.clean_labels);
            outputs.push_back(base.string() + ".clean.csv");
        }
    }
    eev::RunManifest manifest;
    manifest.command = "gen-data";
    manifest.tool_version = eev::kToolVersion;
    manifest.config = {{"n_videos", std::to_string(args.spec.n_videos)},
                       {"duration_s", fmt(args.spec.duration_s)},
                       {"visual_dim", std::to_string(args.spec.visual_dim)},
                       {"audio_dim", std::to_string(args.spec.audio_dim)},
                       {"label_smoothness", fmt(args.spec.label_smoothness)},
                       {"noise_amp", fmt(args.spec.noise_amp)},
                       {"dropout_prob", fmt(args.spec.dropout_prob)},
                       {"emit_clean", args.emit_clean ? "1" : "0"}};
    manifest.outputs = outputs;
    manifest.seed = args.spec.seed;
    manifest.threads = eev::threads();
    manifest.duration_s = timer.seconds();
    eev::write_manifest(eev::manifest_path_for(args.out_dir), manifest);
    return 0;
}

struct TrainArgs {
    std::string data_dir;
    std::string out_path;
    std::string history_path;  // defaults to <out>.history.csv
    std::string loss = "l1";
    std::string val_strategy = "sparse-1hz-interp";
    eev::TrainConfig cfg;
};

int run_train(TrainArgs& args) {
    Timer timer;
    args.cfg.loss_kind = eev::parse_loss_kind(args.loss);
    args.cfg.validation_strategy = eev::parse_strategy(args.val_strategy);
    if (args.history_path.empty()) args.history_path = args.out_path + ".history.csv";

    const auto dataset = eev::load_dataset(args.data_dir);
    eev::TrainResult result = eev::train(dataset, args.cfg);
    eev::save_checkpoint(args.out_path, result.checkpoint);
    eev::write_history_csv(args.history_path, result.history);

    eev::RunManifest manifest;
    manifest.command = "train";
    manifest.tool_version = eev::kToolVersion;
    manifest.config = {{"loss", args.loss},
                       {"learning_rate", fmt(args.cfg.learning_rate)},
                       {"epochs", std::to_string(args.cfg.epochs)},
                       {"clip_seconds", fmt(args.cfg.clip_seconds)},
                       {"sample_rate_hz", fmt(args.cfg.sample_rate_hz)},
                       {"batch_clips", std::to_string(args.cfg.batch_clips)},
                       {"adam_beta1", fmt(args.cfg.adam_beta1)},
                       {"adam_beta2", fmt(args.cfg.adam_beta2)},
                       {"adam_eps", fmt(args.cfg.adam_eps)},
                       {"grad_clip_norm", fmt(args.cfg.grad_clip_norm)},
                       {"validation_fraction", fmt(args.cfg.validation_fraction)},
                       {"hidden_dim", std::to_string(args.cfg.hidden_dim)},
                       {"validation_strategy", args.val_strategy}};
    manifest.inputs = {args.data_dir};
    manifest.outputs = {args.out_path, args.history_path};
    manifest.seed = args.cfg.seed;
    manifest.threads = eev::threads();
    manifest.duration_s = timer.seconds();
    eev::write_manifest(eev::manifest_path_for(args.out_path), manifest);
    return 0;
}

struct PredictArgs {
    std::string checkpoint_path;
    std::string features_path;
    std::string out_path;
    std::string strategy = "sparse-1hz-interp";
};

int run_predict(const PredictArgs& args) {
    Timer timer;
    const eev::PredictionStrategy strategy = eev::parse_strategy(args.strategy);
    const eev::Checkpoint cp = eev::load_checkpoint(args.checkpoint_path);
    const eev::ModelParams params = eev::params_from_checkpoint(cp);

    std::vector<std::string> feature_files;
    const bool dir_mode = fs::is_directory(args.features_path);
    if (dir_mode) {
        for (const auto& entry : fs::directory_iterator(args.features_path)) {
            if (entry.path().extension() == ".eevf") {
                feature_files.push_back(entry.path().string());
            }
        }
        std::sort(feature_files.begin(), feature_files.end());
        if (feature_files.empty()) {
            throw eev::InputError("predict: no .eevf files under " + args.features_path);
        }
        fs::create_directories(args.out_path);
    } else {
        feature_files.push_back(args.features_path);
    }

    std::vector<std::string> outputs;
    for (const std::string& file : feature_files) {
        const eev::FeatureSequence features = eev::read_features(file);
        eev::LabelTrack pred;
        pred.video_id = features.video_id;
        pred.values = eev::predict_video(features, params, strategy);
        const std::string out_file =
            dir_mode ? (fs::path(args.out_path) / (fs::path(file).stem().string() + ".csv")).string()
                     : args.out_path;
        eev::write_labels(out_file, pred);
        outputs.push_back(out_file);
    }

    eev::RunManifest manifest;
    manifest.command = "predict";
    manifest.tool_version = eev::kToolVersion;
    manifest.config = {{"strategy", args.strategy}};
    manifest.inputs = {args.checkpoint_path, args.features_path};
    manifest.outputs = outputs;
    manifest.threads = eev::threads();
    manifest.duration_s = timer.seconds();
    eev::write_manifest(eev::manifest_path_for(args.out_path), manifest);
    return 0;
}

struct EvaluateArgs {
    std::string pred_path;
    std::string label_path;
    std::string out_path;
};

int run_evaluate(const EvaluateArgs& args) {
    Timer timer;
    std::vector<std::pair<std::string, std::string>> pairs;  // (pred, label)
    std::vector<std::string> ids;
    if (fs::is_directory(args.pred_path) != fs::is_directory(args.label_path)) {
        throw eev::InputError("evaluate: prediction and label paths must both be files or "
                              "both be directories");
    }
    if (fs::is_directory(args.pred_path)) {
        std::vector<std::string> stems;
        for (const auto& entry : fs::directory_iterator(args.pred_path)) {
            if (entry.path().extension() == ".csv") {
                stems.push_back(entry.path().stem().string());
            }
        }
        std::sort(stems.begin(), stems.end());
        if (stems.empty()) {
            throw eev::InputError("evaluate: no .csv files under " + args.pred_path);
        }
        for (const std::string& stem : stems) {
            const std::string label_file =
                (fs::path(args.label_path) / (stem + ".csv")).string();
            if (!fs::exists(label_file)) {
                throw eev::InputError("evaluate: missing labels " + label_file);
            }
            pairs.emplace_back((fs::path(args.pred_path) / (stem + ".csv")).string(), label_file);
            ids.push_back(stem);
        }
    } else {
        pairs.emplace_back(args.pred_path, args.label_path);
        ids.push_back(fs::path(args.pred_path).stem().string());
    }

    std::vector<eev::ScoreReport> reports(pairs.size());
    const int nt = eev::threads();
    const auto n = static_cast<long long>(pairs.size());
    eev::ParallelErrors errors(pairs.size());
#pragma omp parallel for num_threads(nt) if (nt > 1 && n > 1) schedule(dynamic)
    for (long long i = 0; i < n; ++i) {
        const auto slot = static_cast<std::size_t>(i);
        try {
            const eev::LabelTrack pred = eev::read_labels(pairs[slot].first);
            const eev::LabelTrack label = eev::read_labels(pairs[slot].second);
            reports[slot] = eev::score_video(pred.values, label.values);
        } catch (...) {
            errors.capture(slot);
        }
    }
    errors.rethrow_first();
    const double dataset_mean = eev::score_dataset(reports);

    std::FILE* f = std::fopen(args.out_path.c_str(), "w");
    if (!f) {
        throw eev::InputError("evaluate: cannot open " + args.out_path);
    }
    std::fputs("video_id", f);
    for (int e = 1; e <= 15; ++e) std::fprintf(f, ",e%02d", e);
    std::fputs(",mean\n", f);
    std::array<double, 15> emotion_mean{};
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::fprintf(f, "%s", ids[i].c_str());
        for (std::size_t e = 0; e < 15; ++e) {
            std::fprintf(f, ",%.6f", reports[i].per_emotion[e]);
            emotion_mean[e] += reports[i].per_emotion[e];
        }
        std::fprintf(f, ",%.6f\n", reports[i].per_video_mean);
    }
    std::fputs("dataset_mean", f);
    for (std::size_t e = 0; e < 15; ++e) {
        std::fprintf(f, ",%.6f", emotion_mean[e] / static_cast<double>(reports.size()));
    }
    std::fprintf(f, ",%.6f\n", dataset_mean);
    std::fclose(f);
    std::printf("%.6f\n", dataset_mean);

    eev::RunManifest manifest;
    manifest.command = "evaluate";
    manifest.tool_version = eev::kToolVersion;
    manifest.inputs = {args.pred_path, args.label_path};
    manifest.outputs = {args.out_path};
    manifest.threads = eev::threads();
    manifest.duration_s = timer.seconds();
    eev::write_manifest(eev::manifest_path_for(args.out_path), manifest);
    return 0;
}

struct FilterArgs {
    std::string in_path, out_path;
    std::string kind;
    double cutoff = 0.1;
    int order = 2;
    int window = 5;
    double sigma = 3.0;
};

int run_filter(const FilterArgs& args) {
    Timer timer;
    eev::LabelTrack track = eev::read_labels(args.in_path);
    eev::SampledTrack filtered;
    if (args.kind == "butterworth") {
        filtered = eev::butterworth_filter(track.values, args.cutoff, args.order);
    } else if (args.kind == "median") {
        filtered = eev::median_filter(track.values, args.window);
    } else if (args.kind == "gaussian") {
        filtered = eev::gaussian_filter(track.values, args.sigma);
    } else {
        throw eev::InputError("filter: unknown kind '" + args.kind +
                              "', expected butterworth|median|gaussian");
    }
    // Smoothing can overshoot slightly (Butterworth); the CSV range is [0,1].
    for (std::size_t i = 0; i < filtered.values.size(); ++i) {
        filtered.values.data()[i] = std::clamp(filtered.values.data()[i], 0.0, 1.0);
    }
    eev::LabelTrack out;
    out.video_id = track.video_id;
    out.values = std::move(filtered);
    eev::write_labels(args.out_path, out);

    eev::RunManifest manifest;
    manifest.command = "filter";
    manifest.tool_version = eev::kToolVersion;
    manifest.config = {{"kind", args.kind},
                       {"cutoff", fmt(args.cutoff)},
                       {"order", std::to_string(args.order)},
                       {"window", std::to_string(args.window)},
                       {"sigma", fmt(args.sigma)}};
    manifest.inputs = {args.in_path};
    manifest.outputs = {args.out_path};
    manifest.threads = eev::threads();
    manifest.duration_s = timer.seconds();
    eev::write_manifest(eev::manifest_path_for(args.out_path), manifest);
    return 0;
}

struct InterpolateArgs {
    std::string in_path, out_path;
    double target_hz = 6.0;
};

int run_interpolate(const InterpolateArgs& args) {
    Timer timer;
    eev::LabelTrack track = eev::read_labels(args.in_path);
    eev::LabelTrack out;
    out.video_id = track.video_id;
    out.values = eev::linear_interpolate(track.values, args.target_hz);
    eev::write_labels(args.out_path, out);

    eev::RunManifest manifest;
    manifest.command = "interpolate";
    manifest.tool_version = eev::kToolVersion;
    manifest.config = {{"target_hz", fmt(args.target_hz)}};
    manifest.inputs = {args.in_path};
    manifest.outputs = {args.out_path};
    manifest.threads = eev::threads();
    manifest.duration_s = timer.seconds();
    eev::write_manifest(eev::manifest_path_for(args.out_path), manifest);
    return 0;
}

struct EnsembleArgs {
    std::vector<std::string> inputs;
    std::string out_path;
};

int run_ensemble(const EnsembleArgs& args) {
    Timer timer;
    bool dir_mode = fs::is_directory(args.inputs.front());
    for (const std::string& input : args.inputs) {
        if (fs::is_directory(input) != dir_mode) {
            throw eev::InputError("ensemble: inputs must be all files or all directories");
        }
    }
    std::vector<std::string> outputs;
    if (!dir_mode) {
        std::vector<eev::SampledTrack> tracks;
        for (const std::string& input : args.inputs) {
            tracks.push_back(eev::read_labels(input).values);
        }
        eev::LabelTrack out;
        out.video_id = fs::path(args.out_path).stem().string();
        out.values = eev::ensemble(tracks);
        eev::write_labels(args.out_path, out);
        outputs.push_back(args.out_path);
    } else {
        std::vector<std::string> stems;
        for (const auto& entry : fs::directory_iterator(args.inputs.front())) {
            if (entry.path().extension() == ".csv") {
                stems.push_back(entry.path().stem().string());
            }
        }
        std::sort(stems.begin(), stems.end());
        fs::create_directories(args.out_path);
        for (const std::string& stem : stems) {
            std::vector<eev::SampledTrack> tracks;
            for (const std::string& input : args.inputs) {
                const std::string file = (fs::path(input) / (stem + ".csv")).string();
                if (!fs::exists(file)) {
                    throw eev::InputError("ensemble: missing " + file);
                }
                tracks.push_back(eev::read_labels(file).values);
            }
            eev::LabelTrack out;
            out.video_id = stem;
            out.values = eev::ensemble(tracks);
            const std::string out_file = (fs::path(args.out_path) / (stem + ".csv")).string();
            eev::write_labels(out_file, out);
            outputs.push_back(out_file);
        }
    }

    eev::RunManifest manifest;
    manifest.command = "ensemble";
    manifest.tool_version = eev::kToolVersion;
    manifest.inputs = args.inputs;
    manifest.outputs = outputs;
    manifest.threads = eev::threads();
    manifest.duration_s = timer.seconds();
    eev::write_manifest(eev::manifest_path_for(args.out_path), manifest);
    return 0;
}

struct GradCheckArgs {
    std::uint64_t seed = 7;
    double epsilon = 1e-4;
};

int run_grad_check(const GradCheckArgs& args) {
    const auto entries = eev::run_gradient_suite(args.seed, args.epsilon);
    bool all_ok = true;
    for (const auto& entry : entries) {
        const bool ok = entry.max_rel_err < 1e-4;
        all_ok = all_ok && ok;
        std::printf("%-20s %.3e %s\n", entry.name.c_str(), entry.max_rel_err,
                    ok ? "ok" : "FAIL");
    }
    return all_ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evoked-expression prediction pipeline"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);
    app.fallthrough();

    int threads = 1;
    app.add_option("--threads", threads,
                   "cap for parallel sections; 1 is the serial reference and all values "
                   "produce identical bytes");
    // Precedence: flags > config file > built-in defaults.
    app.set_config("--config", "", "read defaults from a TOML/INI file");

    GenDataArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    gen->add_option("--out", gen_args.out_dir, "output directory")->required();
    gen->add_option("--n-videos", gen_args.spec.n_videos, "number of videos");
    gen->add_option("--duration-s", gen_args.spec.duration_s, "seconds per video");
    gen->add_option("--visual-dim", gen_args.spec.visual_dim, "visual feature width");
    gen->add_option("--audio-dim", gen_args.spec.audio_dim, "audio feature width");
    gen->add_option("--label-smoothness", gen_args.spec.label_smoothness,
                    "label window length in seconds");
    gen->add_option("--noise-amp", gen_args.spec.noise_amp, "uniform label noise amplitude");
    gen->add_option("--dropout-prob", gen_args.spec.dropout_prob,
                    "per-second probability of a zeroed second");
    gen->add_option("--seed", gen_args.spec.seed, "generator seed");
    gen->add_flag("--emit-clean", gen_args.emit_clean, "also write <id>.clean.csv");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train a model on a dataset directory");
    train->add_option("--data", train_args.data_dir, "dataset directory")->required();
    train->add_option("--out", train_args.out_path, "checkpoint output path")->required();
    train->add_option("--history", train_args.history_path,
                      "history CSV path (default <out>.history.csv)");
    train->add_option("--loss", train_args.loss, "l1|kl|ccc");
    train->add_option("--lr", train_args.cfg.learning_rate, "Adam learning rate");
    train->add_option("--epochs", train_args.cfg.epochs, "training epochs");
    train->add_option("--clip-seconds", train_args.cfg.clip_seconds, "training clip length");
    train->add_option("--sample-rate-hz", train_args.cfg.sample_rate_hz, "training sample rate");
    train->add_option("--batch-clips", train_args.cfg.batch_clips, "clips per Adam step");
    train->add_option("--beta1", train_args.cfg.adam_beta1, "Adam beta1");
    train->add_option("--beta2", train_args.cfg.adam_beta2, "Adam beta2");
    train->add_option("--adam-eps", train_args.cfg.adam_eps, "Adam epsilon");
    train->add_option("--grad-clip-norm", train_args.cfg.grad_clip_norm,
                      "global gradient norm cap");
    train->add_option("--seed", train_args.cfg.seed, "training seed");
    train->add_option("--val-fraction", train_args.cfg.validation_fraction,
                      "whole-video validation fraction");
    train->add_option("--hidden-dim", train_args.cfg.hidden_dim, "GRU hidden width");
    train->add_option("--val-strategy", train_args.val_strategy,
                      "validation prediction strategy");

    PredictArgs predict_args;
    CLI::App* predict = app.add_subcommand("predict", "dense 6 Hz predictions from a checkpoint");
    predict->add_option("--checkpoint", predict_args.checkpoint_path, "model checkpoint")
        ->required();
    predict->add_option("--features", predict_args.features_path, ".eevf file or directory")
        ->required();
    predict->add_option("--out", predict_args.out_path, "output CSV or directory")->required();
    predict->add_option("--strategy", predict_args.strategy,
                        "dense-6hz-10s|dense-6hz-60s|sparse-1hz-interp");

    EvaluateArgs eval_args;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions against labels");
    evaluate->add_option("predictions", eval_args.pred_path, "prediction CSV or directory")
        ->required();
    evaluate->add_option("labels", eval_args.label_path, "label CSV or directory")->required();
    evaluate->add_option("--out", eval_args.out_path, "report CSV path")->required();

    FilterArgs filter_args;
    CLI::App* filter = app.add_subcommand("filter", "low-pass filter a label CSV");
    filter->add_option("--in", filter_args.in_path, "input CSV")->required();
    filter->add_option("--out", filter_args.out_path, "output CSV")->required();
    filter->add_option("--kind", filter_args.kind, "butterworth|median|gaussian")->required();
    filter->add_option("--cutoff", filter_args.cutoff, "Butterworth cutoff (fraction of Nyquist)");
    filter->add_option("--order", filter_args.order, "Butterworth order (1 or 2)");
    filter->add_option("--window", filter_args.window, "median window (odd)");
    filter->add_option("--sigma", filter_args.sigma, "Gaussian sigma in samples");

    InterpolateArgs interp_args;
    CLI::App* interpolate = app.add_subcommand("interpolate", "resample a label CSV upward");
    interpolate->add_option("--in", interp_args.in_path, "input CSV")->required();
    interpolate->add_option("--out", interp_args.out_path, "output CSV")->required();
    interpolate->add_option("--target-hz", interp_args.target_hz, "target rate");

    EnsembleArgs ensemble_args;
    CLI::App* ens = app.add_subcommand("ensemble", "average prediction CSVs or directories");
    ens->add_option("--out", ensemble_args.out_path, "output CSV or directory")->required();
    ens->add_option("inputs", ensemble_args.inputs, "prediction CSVs or directories")
        ->required()
        ->expected(-1);

    GradCheckArgs grad_args;
    CLI::App* grad = app.add_subcommand("grad-check", "audit every hand-written gradient");
    grad->add_option("--seed", grad_args.seed, "random test point seed");
    grad->add_option("--epsilon", grad_args.epsilon, "central difference step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the usage message
        return 1;
    }

    eev::set_threads(threads);
    try {
        if (gen->parsed()) return run_gen_data(gen_args);
        if (train->parsed()) return run_train(train_args);
        if (predict->parsed()) return run_predict(predict_args);
        if (evaluate->parsed()) return run_evaluate(eval_args);
        if (filter->parsed()) return run_filter(filter_args);
        if (interpolate->parsed()) return run_interpolate(interp_args);
        if (ens->parsed()) return run_ensemble(ensemble_args);
        if (grad->parsed()) return run_grad_check(grad_args);
    } catch (const eev::NumericError& e) {
        std::fprintf(stderr, "eev: numeric failure: %s\n", e.what());
        return 3;
    } catch (const eev::Error& e) {
        std::fprintf(stderr, "eev: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "eev: %s\n", e.what());
        return 2;
    }
    return 0;
}
