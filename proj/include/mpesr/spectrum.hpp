#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpesr/drive.hpp"
#include "mpesr/liouville.hpp"

namespace mpesr {

/// Affine correction b_true = scale * b_measured + offset.
struct FieldCalibration {
    double scale = 1.0;
    double offset_mT = 0.0;

    double apply(double b) const { return scale * b + offset_mT; }
};

/// Provenance of a spectrum. Serialized as `# key = value` lines.
struct SpectrumMeta {
    std::optional<DriveParams> drive;
    std::optional<RelaxationParams> relax;
    std::optional<std::uint64_t> seed;
    bool synthesized = false;
    double noise_sigma = 0.0;
    double baseline_intercept = 0.0;
    double baseline_slope = 0.0;
    /// B1 or a stand-in such as the monitor current; pairs lines across orders.
    std::optional<double> drive_proxy;
    /// Systematic field-scale uncertainty (mT); 0.020 for 20 Hz, 0.150 for 1 kHz modulation.
    double field_floor_mT = 0.020;
    std::optional<FieldCalibration> calibration;
    std::map<std::string, std::string> extra;

    /// drive_proxy, or B1 when no proxy was recorded.
    std::optional<double> effective_drive_proxy() const;
};

/// A B0-swept trace. Non-finite signal values mark grid points where the
/// solver failed.
struct Spectrum {
    std::vector<double> field_mT;
    std::vector<double> signal;
    SpectrumMeta meta;

    std::size_t size() const { return field_mT.size(); }
    bool valid_point(std::size_t i) const;
    /// Mean grid spacing (mT).
    double spacing() const;
    /// Throws ValidationError unless sizes match and the grid strictly increases.
    void validate() const;
};

/// Shortest decimal text that parses back to exactly v.
std::string format_double(double v);
double parse_double(const std::string& text);

void write_spectrum_csv(std::ostream& os, const Spectrum& s);
void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s);
/// Throws IoError on unreadable or malformed input.
Spectrum read_spectrum_csv(std::istream& is, const std::string& source = "<stream>");
Spectrum read_spectrum_csv(const std::filesystem::path& path);

}  // namespace mpesr
