#pragma once

#include "hatax/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hatax::cli {

inline constexpr const char* kVersion = "0.1.0";

// exit codes
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kSolverError = 3;
inline constexpr int kInfeasibleMix = 4;

struct RunManifest {
    std::string command;
    std::string config_path; // empty: built-in defaults
    std::string out_dir = ".";
    std::uint64_t seed = 20240817;
    int threads = 0; // 0: hardware default
    std::vector<std::pair<std::string, std::string>> overrides;
    // command-specific arguments (sweep parameter, figure id, ...)
    std::vector<std::pair<std::string, std::string>> args;
    std::string version = kVersion;
};

// FNV-1a over the canonical manifest serialization; stamped on all outputs.
std::string manifest_hash(const RunManifest& manifest, const config::Config& cfg);

// Dispatch; writes artifacts under manifest.out_dir. Returns an exit code and
// never throws.
int run(const RunManifest& manifest);

} // namespace hatax::cli
