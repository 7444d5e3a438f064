#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpesr/drive.hpp"
#include "mpesr/liouville.hpp"
#include "mpesr/synthesis.hpp"

namespace mpesr {

struct SimulateConfig {
    std::vector<double> b1_mT{1.0, 1.75, 2.5, 3.25, 4.0};
    std::vector<double> theta_deg{90.0};
    FieldGrid grid;
    double noise_sigma = 0.0;
    LinearBaseline baseline;
    int steps_per_period = 200;
    int max_periods = 10000;
    double field_floor_mT = 0.020;
};

struct LocateConfig {
    std::vector<int> orders{1, 2, 3};
    std::vector<double> b1_mT{0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0};
    std::vector<double> theta_deg{90.0};
    double field_tol_mT = 1e-5;
    double convergence_tol = 1e-9;
    int max_truncation = 192;
};

struct AnalyzeConfig {
    std::vector<std::string> inputs;   ///< files or directories (*.csv)
    std::vector<int> orders{1, 2, 3};
    double expected_linewidth_mT = 0.05;
    double window_factor = 3.0;        ///< window half width in linewidths
    /// Lower edge of the window below n w/g when B1 is unknown.
    double max_shift_mT = 1.0;
    int field_sign = +1;               ///< analyze the lines at positive or negative B0
    std::map<int, std::string> polarity;      ///< per order; "maximum" when absent
    std::map<int, double> min_drive_proxy;    ///< per order strong-drive cut
    int smoothing_width = 5;
    int max_extrema = 3;
    double relative_threshold = 0.5;
    std::optional<double> field_floor_mT;     ///< overrides spectrum metadata
    std::optional<std::string> calibration_file;
    std::size_t min_baseline_points = 10;
};

struct AngularConfig {
    int order = 3;
    std::optional<double> b1_mT;       ///< 0.1 w/g when absent
    double theta_start_deg = 65.0;
    double theta_stop_deg = 90.0;
    double theta_step_deg = 6.0;
    double gap_floor = 1e-7;           ///< rad/us
    double field_tol_mT = 1e-5;
    double convergence_tol = 1e-9;
    int max_truncation = 192;
};

/// Everything a run needs. A run is reproducible from this document alone.
struct RunConfig {
    std::string command;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = "out";
    double freq_MHz = 100.0;
    double gamma_MHz_per_mT = default_gamma();
    RelaxationParams relax;
    SimulateConfig simulate;
    LocateConfig locate;
    AnalyzeConfig analyze;
    AngularConfig angular;

    /// Drive with the series-wide frequency and gamma; B1 and theta at defaults.
    DriveParams base_drive() const;
    /// Throws ValidationError on any inconsistent field.
    void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Missing keys take defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);
/// Canonical text: two-space indent, sorted keys, trailing newline.
std::string serialize_config(const RunConfig& c);
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace mpesr
