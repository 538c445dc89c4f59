// Run manifest written next to every mutating subcommand's output: the
// resolved configuration plus inputs/outputs, enough to reproduce the run
// byte for byte.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace eev {

struct RunManifest {
    std::string command;
    std::string tool_version;
    std::map<std::string, std::string> config;  // resolved flag values
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    int threads = 1;
    double duration_s = 0.0;
};

void write_manifest(const std::string& path, const RunManifest& m);

// Manifest path convention: <file>.manifest.json next to a file output, or
// manifest.json inside a directory output.
std::string manifest_path_for(const std::string& output_path);

}  // namespace eev
