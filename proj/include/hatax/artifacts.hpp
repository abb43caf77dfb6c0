#pragma once

#include "hatax/equilibrium.hpp"
#include "hatax/tax_optimizer.hpp"
#include "hatax/transition.hpp"
#include "hatax/wealth_law.hpp"

#include <json.hpp> // vendored nlohmann/json

#include <string>
#include <vector>

namespace hatax::artifacts {

using json = nlohmann::json;

json equilibrium_summary(const equilibrium::StationaryEquilibrium& eq);
json ability_process(const AbilityProcess& proc, const calib::Discretization& disc);
json optimum_summary(const taxopt::FullOptimum& full,
                     const equilibrium::StationaryEquilibrium& baseline);
json frontier_summary(const taxopt::FrontierResult& fr);
json sweep_summary(const taxopt::SweepResult& sr);
json transition_summary(const transition::TransitionPath& path);
json share_table(const wealth::ShareTable& shares);

// CSV helpers: every file starts with "# manifest_hash=..." then a header row.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& manifest_hash,
              const std::vector<std::string>& header);
    ~CsvWriter();
    void row(const std::vector<double>& values);
    void row_mixed(const std::vector<std::string>& values);

private:
    struct Impl;
    Impl* impl_;
};

void write_json(const std::string& path, const json& j, const std::string& manifest_hash);

// distribution export: wealth (financial), exceedance, source column
void write_distribution_csv(const std::string& path, const wealth::WealthDistribution& dist,
                            const std::string& manifest_hash, double s_max = 1e6,
                            bool conditionals = false);

void write_frontier_csv(const std::string& path, const taxopt::FrontierResult& fr,
                        const std::string& manifest_hash);

void write_surface_csv(const std::string& path, const taxopt::FullOptimum& full,
                       const std::string& manifest_hash);

void write_sweep_csv(const std::string& path, const taxopt::SweepResult& sr,
                     const std::string& manifest_hash);

void write_transition_csv(const std::string& path, const transition::TransitionPath& tr,
                          const std::string& manifest_hash);

} // namespace hatax::artifacts
