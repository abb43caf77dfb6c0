#pragma once

#include "hatax/calibration.hpp"
#include "hatax/types.hpp"

#include <map>
#include <set>
#include <string>

namespace hatax::config {

// Flat key = value configuration with # comments. Keys mirror the calibration
// table plus dotted solver settings.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);
    static Config defaults();

    bool has(const std::string& key) const;
    double get(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    void set(const std::string& key, const std::string& value); // throws on unknown key

    // sorted key=value lines; input to the manifest hash
    std::string canonical() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

const std::set<std::string>& known_keys();

ModelParams model_params(const Config& cfg);
calib::CalibrationTargets calibration_targets(const Config& cfg);

} // namespace hatax::config
