#include "eev/manifest.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "eev/errors.hpp"

namespace eev {

void write_manifest(const std::string& path, const RunManifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["tool_version"] = m.tool_version;
    j["config"] = m.config;
    j["inputs"] = m.inputs;
    j["outputs"] = m.outputs;
    j["seed"] = m.seed;
    j["threads"] = m.threads;
    j["duration_s"] = m.duration_s;
    std::ofstream out(path);
    if (!out) {
        throw InputError("write_manifest: cannot open " + path);
    }
    out << j.dump(2) << "\n";
}

std::string manifest_path_for(const std::string& output_path) {
    if (std::filesystem::is_directory(output_path)) {
        return (std::filesystem::path(output_path) / "manifest.json").string();
    }
    return output_path + ".manifest.json";
}

}  // namespace eev
