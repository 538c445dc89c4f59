#include "eev/dataio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace eev {

namespace {

constexpr char kFeatureMagic[4] = {'E', 'E', 'V', 'F'};
constexpr char kCheckpointMagic[4] = {'E', 'E', 'V', 'M'};
constexpr std::uint32_t kFeatureVersion = 1;
constexpr std::uint32_t kCheckpointVersion = 1;

class Reader {
public:
    Reader(const std::string& path, const char* what) : path_(path), what_(what) {
        in_.open(path, std::ios::binary);
        if (!in_) {
            throw FormatError(std::string(what) + ": cannot open " + path);
        }
    }

    void read_raw(void* dst, std::size_t n) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw FormatError(std::string(what_) + ": " + path_ + " truncated at byte " +
                              std::to_string(offset_ + static_cast<std::size_t>(in_.gcount())));
        }
        offset_ += n;
    }

    template <typename T>
    T read() {
        T v;
        read_raw(&v, sizeof(T));
        return v;
    }

    std::string read_string(std::size_t n) {
        std::string s(n, '\0');
        read_raw(s.data(), n);
        return s;
    }

    bool at_eof() {
        return in_.peek() == std::char_traits<char>::eof();
    }

    // Reads up to n bytes; returns the count actually read.
    std::size_t read_some(void* dst, std::size_t n) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        const auto got = static_cast<std::size_t>(in_.gcount());
        offset_ += got;
        return got;
    }

    std::size_t offset() const { return offset_; }

private:
    std::string path_;
    const char* what_;
    std::ifstream in_;
    std::size_t offset_ = 0;
};

class Writer {
public:
    Writer(const std::string& path, const char* what) : path_(path) {
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) {
            throw InputError(std::string(what) + ": cannot open " + path + " for writing");
        }
    }

    void write_raw(const void* src, std::size_t n) {
        out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
    }

    template <typename T>
    void write(T v) {
        write_raw(&v, sizeof(T));
    }

    void close() {
        out_.close();
        if (!out_) {
            throw InputError("failed to flush " + path_);
        }
    }

private:
    std::string path_;
    std::ofstream out_;
};

}  // namespace

void write_features(const std::string& path, const FeatureSequence& seq) {
    const std::size_t T = seq.frames();
    if (T == 0 || seq.visual.rows() != T || seq.audio.rows() != T) {
        throw InputError("write_features: inconsistent row counts in " + seq.video_id);
    }
    if (seq.video_id.size() > 0xffff) {
        throw InputError("write_features: video id longer than 65535 bytes");
    }
    Writer w(path, "write_features");
    w.write_raw(kFeatureMagic, 4);
    w.write<std::uint32_t>(kFeatureVersion);
    w.write<std::uint16_t>(static_cast<std::uint16_t>(seq.video_id.size()));
    w.write_raw(seq.video_id.data(), seq.video_id.size());
    w.write<std::uint32_t>(static_cast<std::uint32_t>(T));
    w.write<std::uint32_t>(static_cast<std::uint32_t>(seq.visual.cols()));
    w.write<std::uint32_t>(static_cast<std::uint32_t>(seq.audio.cols()));
    std::vector<float> row;
    for (std::size_t t = 0; t < T; ++t) {
        w.write<std::int64_t>(seq.timestamps_ms[t]);
        row.resize(seq.visual.cols());
        for (std::size_t j = 0; j < seq.visual.cols(); ++j) {
            row[j] = static_cast<float>(seq.visual.at(t, j));
        }
        w.write_raw(row.data(), row.size() * sizeof(float));
        row.resize(seq.audio.cols());
        for (std::size_t j = 0; j < seq.audio.cols(); ++j) {
            row[j] = static_cast<float>(seq.audio.at(t, j));
        }
        w.write_raw(row.data(), row.size() * sizeof(float));
    }
    w.close();
}

FeatureSequence read_features(const std::string& path) {
    Reader r(path, "read_features");
    char magic[4];
    r.read_raw(magic, 4);
    if (std::memcmp(magic, kFeatureMagic, 4) != 0) {
        throw FormatError("read_features: " + path + " has bad magic, expected EEVF");
    }
    const auto version = r.read<std::uint32_t>();
    if (version != kFeatureVersion) {
        throw FormatError("read_features: " + path + " has unsupported version " +
                          std::to_string(version));
    }
    const auto id_len = r.read<std::uint16_t>();
    FeatureSequence seq;
    seq.video_id = r.read_string(id_len);
    const auto T = r.read<std::uint32_t>();
    const auto vd = r.read<std::uint32_t>();
    const auto ad = r.read<std::uint32_t>();
    if (T == 0 || vd == 0 || ad == 0) {
        throw FormatError("read_features: " + path + " declares an empty sequence");
    }
    seq.timestamps_ms.resize(T);
    seq.visual = Matrix(T, vd);
    seq.audio = Matrix(T, ad);
    std::vector<float> row(std::max(vd, ad));
    for (std::uint32_t t = 0; t < T; ++t) {
        seq.timestamps_ms[t] = r.read<std::int64_t>();
        if (t > 0 && seq.timestamps_ms[t] <= seq.timestamps_ms[t - 1]) {
            throw FormatError("read_features: " + path + " timestamps not ascending at row " +
                              std::to_string(t));
        }
        r.read_raw(row.data(), vd * sizeof(float));
        for (std::uint32_t j = 0; j < vd; ++j) seq.visual.at(t, j) = row[j];
        r.read_raw(row.data(), ad * sizeof(float));
        for (std::uint32_t j = 0; j < ad; ++j) seq.audio.at(t, j) = row[j];
    }
    if (!r.at_eof()) {
        throw FormatError("read_features: " + path + " has trailing bytes after record " +
                          std::to_string(T));
    }
    return seq;
}

void write_labels(const std::string& path, const LabelTrack& track) {
    const std::size_t T = track.values.frames();
    if (T == 0 || track.values.channels() != 15) {
        throw InputError("write_labels: need a non-empty 15-channel track");
    }
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) {
        throw InputError("write_labels: cannot open " + path + " for writing");
    }
    std::fputs("timestamp_ms", f);
    for (int e = 1; e <= 15; ++e) std::fprintf(f, ",e%02d", e);
    std::fputc('\n', f);
    for (std::size_t t = 0; t < T; ++t) {
        const double time_s = track.values.start_time_s +
                              static_cast<double>(t) / track.values.rate_hz;
        std::fprintf(f, "%lld", static_cast<long long>(std::llround(time_s * 1000.0)));
        for (std::size_t e = 0; e < 15; ++e) {
            std::fprintf(f, ",%.6f", track.values.values.at(t, e));
        }
        std::fputc('\n', f);
    }
    if (std::fclose(f) != 0) {
        throw InputError("write_labels: failed to flush " + path);
    }
}

namespace {

double parse_cell(const std::string& cell, const std::string& path, std::size_t row) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &pos);
    } catch (const std::exception&) {
        throw FormatError("read_labels: " + path + " row " + std::to_string(row) +
                          ": non-numeric cell '" + cell + "'");
    }
    if (pos != cell.size()) {
        throw FormatError("read_labels: " + path + " row " + std::to_string(row) +
                          ": non-numeric cell '" + cell + "'");
    }
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

}  // namespace

LabelTrack read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("read_labels: cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError("read_labels: " + path + " is empty");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string expected_header = "timestamp_ms";
    for (int e = 1; e <= 15; ++e) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), ",e%02d", e);
        expected_header += buf;
    }
    if (line != expected_header) {
        throw FormatError("read_labels: " + path + " has unexpected header '" + line + "'");
    }
    std::vector<std::int64_t> ts;
    std::vector<double> values;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 16) {
            throw FormatError("read_labels: " + path + " row " + std::to_string(row) +
                              ": expected 16 cells, got " + std::to_string(cells.size()));
        }
        const double ts_val = parse_cell(cells[0], path, row);
        const auto ts_ms = static_cast<std::int64_t>(std::llround(ts_val));
        if (!ts.empty() && ts_ms <= ts.back()) {
            throw FormatError("read_labels: " + path + " row " + std::to_string(row) +
                              ": timestamps not ascending");
        }
        ts.push_back(ts_ms);
        for (std::size_t e = 1; e < 16; ++e) {
            const double v = parse_cell(cells[e], path, row);
            if (v < 0.0 || v > 1.0) {
                throw FormatError("read_labels: " + path + " row " + std::to_string(row) +
                                  ": value " + cells[e] + " out of [0,1]");
            }
            values.push_back(v);
        }
    }
    if (ts.empty()) {
        throw InputError("read_labels: " + path + " has no data rows");
    }
    LabelTrack track;
    track.video_id = std::filesystem::path(path).stem().string();
    track.values.start_time_s = static_cast<double>(ts.front()) / 1000.0;
    if (ts.size() >= 2) {
        const double span_ms = static_cast<double>(ts.back() - ts.front());
        double rate = static_cast<double>(ts.size() - 1) * 1000.0 / span_ms;
        const double snapped = std::round(rate);
        // Millisecond timestamps cannot represent 6 Hz exactly; snap back.
        if (snapped >= 1.0 && std::abs(rate - snapped) <= 0.02 * snapped) rate = snapped;
        track.values.rate_hz = rate;
    } else {
        track.values.rate_hz = 6.0;  // the format's native rate
    }
    track.values.values = Matrix(ts.size(), 15, std::move(values));
    return track;
}

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
    nlohmann::json meta;
    meta["config"] = {
        {"visual_dim", cp.config.visual_dim}, {"audio_dim", cp.config.audio_dim},
        {"hidden_dim", cp.config.hidden_dim}, {"emotions", cp.config.emotions},
        {"init_seed", cp.config.init_seed},
    };
    meta["training_meta"] = cp.training_meta;
    const std::string json = meta.dump();

    if (cp.weights.size() != param_count(cp.config)) {
        throw IntegrityError("save_checkpoint: weight count " + std::to_string(cp.weights.size()) +
                             " does not match config (" +
                             std::to_string(param_count(cp.config)) + ")");
    }
    Writer w(path, "save_checkpoint");
    w.write_raw(kCheckpointMagic, 4);
    w.write<std::uint32_t>(cp.format_version);
    w.write<std::uint32_t>(static_cast<std::uint32_t>(json.size()));
    w.write_raw(json.data(), json.size());
    w.write_raw(cp.weights.data(), cp.weights.size() * sizeof(float));
    w.close();
}

Checkpoint load_checkpoint(const std::string& path) {
    Reader r(path, "load_checkpoint");
    char magic[4];
    r.read_raw(magic, 4);
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw FormatError("load_checkpoint: " + path + " has bad magic, expected EEVM");
    }
    Checkpoint cp;
    cp.format_version = r.read<std::uint32_t>();
    if (cp.format_version != kCheckpointVersion) {
        throw FormatError("load_checkpoint: " + path + " has unsupported version " +
                          std::to_string(cp.format_version));
    }
    const auto json_len = r.read<std::uint32_t>();
    const std::string json_text = r.read_string(json_len);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(json_text);
        cp.config.visual_dim = meta.at("config").at("visual_dim").get<std::size_t>();
        cp.config.audio_dim = meta.at("config").at("audio_dim").get<std::size_t>();
        cp.config.hidden_dim = meta.at("config").at("hidden_dim").get<std::size_t>();
        cp.config.emotions = meta.at("config").at("emotions").get<std::size_t>();
        cp.config.init_seed = meta.at("config").at("init_seed").get<std::uint64_t>();
        if (meta.contains("training_meta")) {
            cp.training_meta =
                meta.at("training_meta").get<std::map<std::string, std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("load_checkpoint: " + path + " has bad metadata JSON: " + e.what());
    }
    // Read whatever weight payload is present, then judge it against the
    // config so an edited config reports an integrity error, not truncation.
    std::vector<char> payload;
    char chunk[4096];
    std::size_t got = 0;
    while ((got = r.read_some(chunk, sizeof(chunk))) > 0) {
        payload.insert(payload.end(), chunk, chunk + got);
    }
    if (payload.size() % sizeof(float) != 0) {
        throw FormatError("load_checkpoint: " + path + " truncated mid-weight at byte " +
                          std::to_string(r.offset()));
    }
    const std::size_t expected = param_count(cp.config);
    const std::size_t actual = payload.size() / sizeof(float);
    if (actual != expected) {
        throw IntegrityError("load_checkpoint: " + path + " holds " + std::to_string(actual) +
                             " weights but its config implies " + std::to_string(expected));
    }
    cp.weights.resize(actual);
    std::memcpy(cp.weights.data(), payload.data(), payload.size());
    return cp;
}

Checkpoint checkpoint_from_params(const ModelParams& params,
                                  std::map<std::string, std::string> training_meta) {
    Checkpoint cp;
    cp.config = params.config;
    cp.training_meta = std::move(training_meta);
    cp.weights.reserve(param_count(params.config));
    for (const auto& [name, m] : param_list(params)) {
        for (std::size_t i = 0; i < m->size(); ++i) {
            cp.weights.push_back(static_cast<float>(m->data()[i]));
        }
    }
    return cp;
}

ModelParams params_from_checkpoint(const Checkpoint& cp) {
    if (cp.weights.size() != param_count(cp.config)) {
        throw IntegrityError("params_from_checkpoint: weight count " +
                             std::to_string(cp.weights.size()) + " does not match config (" +
                             std::to_string(param_count(cp.config)) + ")");
    }
    ModelParams p;
    p.config = cp.config;
    p.visual = BiGruStackParams::shaped(cp.config.visual_dim, cp.config.hidden_dim);
    p.audio = BiGruStackParams::shaped(cp.config.audio_dim, cp.config.hidden_dim);
    p.head = FusionHeadParams::shaped(p.fused_dim(), cp.config.emotions);
    std::size_t k = 0;
    for (auto& [name, m] : param_list(p)) {
        for (std::size_t i = 0; i < m->size(); ++i) {
            m->data()[i] = static_cast<double>(cp.weights[k++]);
        }
    }
    return p;
}

double feature_rate_hz(const FeatureSequence& seq) {
    if (seq.frames() < 2) {
        throw InputError("feature_rate_hz: need at least 2 frames");
    }
    const double span_ms =
        static_cast<double>(seq.timestamps_ms.back() - seq.timestamps_ms.front());
    double rate = static_cast<double>(seq.frames() - 1) * 1000.0 / span_ms;
    const double snapped = std::round(rate);
    if (snapped >= 1.0 && std::abs(rate - snapped) <= 0.02 * snapped) rate = snapped;
    return rate;
}

SampledTrack visual_track(const FeatureSequence& seq) {
    SampledTrack t;
    t.rate_hz = feature_rate_hz(seq);
    t.start_time_s = static_cast<double>(seq.timestamps_ms.front()) / 1000.0;
    t.values = seq.visual;
    return t;
}

SampledTrack audio_track(const FeatureSequence& seq) {
    SampledTrack t;
    t.rate_hz = feature_rate_hz(seq);
    t.start_time_s = static_cast<double>(seq.timestamps_ms.front()) / 1000.0;
    t.values = seq.audio;
    return t;
}

std::vector<VideoSample> load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw InputError("load_dataset: " + dir + " is not a directory");
    }
    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".eevf") {
            stems.push_back(entry.path().stem().string());
        }
    }
    std::sort(stems.begin(), stems.end());
    std::vector<VideoSample> out;
    for (const std::string& stem : stems) {
        const fs::path base = fs::path(dir) / stem;
        const std::string label_path = base.string() + ".csv";
        if (!fs::exists(label_path)) {
            throw InputError("load_dataset: missing labels " + label_path);
        }
        VideoSample sample;
        sample.features = read_features(base.string() + ".eevf");
        sample.labels = read_labels(label_path);
        out.push_back(std::move(sample));
    }
    if (out.empty()) {
        throw InputError("load_dataset: no .eevf files under " + dir);
    }
    return out;
}

}  // namespace eev
