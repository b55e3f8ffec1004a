#pragma once

#include <string>
#include <vector>

#include "qstruct/config.hpp"
#include "qstruct/parallel.hpp"

namespace qstruct {

struct CheckResult {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string cmp;  // "<=" or ">="
    bool pass = false;
};

struct ScenarioOutcome {
    int exit_code = 0;  // 0 all checks pass, 2 violations
    std::vector<CheckResult> checks;
    std::string summary_path;
    std::vector<std::string> warnings;

    std::vector<std::string> violations() const {
        std::vector<std::string> out;
        for (const auto& c : checks)
            if (!c.pass)
                out.push_back(c.name + " = " + std::to_string(c.value) + " (want " + c.cmp + " " +
                              std::to_string(c.threshold) + ")");
        return out;
    }
};

// Runs one scenario end to end, writing its artifacts (CSV/JSON) plus
// summary.json into cfg.output_dir. Throws IOError if the directory cannot
// be created or written.
ScenarioOutcome run_scenario(const ScenarioConfig& cfg, ExecMode mode = ExecMode::Serial);

}  // namespace qstruct
