#include "mpesr/spectrum.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "mpesr/errors.hpp"

namespace mpesr {

std::optional<double> SpectrumMeta::effective_drive_proxy() const
{
    if (drive_proxy) {
        return drive_proxy;
    }
    if (drive) {
        return drive->b1_mT;
    }
    return std::nullopt;
}

bool Spectrum::valid_point(std::size_t i) const { return std::isfinite(signal[i]); }

double Spectrum::spacing() const
{
    if (size() < 2) {
        return 0.0;
    }
    return (field_mT.back() - field_mT.front()) / static_cast<double>(size() - 1);
}

void Spectrum::validate() const
{
    if (field_mT.size() != signal.size()) {
        throw ValidationError(fmt::format("spectrum has {} field points but {} signal values",
                                          field_mT.size(), signal.size()));
    }
    for (std::size_t i = 1; i < field_mT.size(); ++i) {
        if (!(field_mT[i] > field_mT[i - 1])) {
            throw ValidationError(
                fmt::format("field grid not strictly increasing at index {}", i));
        }
    }
}

std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text)
{
    std::size_t b = text.find_first_not_of(" \t\r");
    std::size_t e = text.find_last_not_of(" \t\r");
    if (b == std::string::npos) {
        throw ValidationError("empty numeric field");
    }
    const std::string_view t(text.data() + b, e - b + 1);
    if (t == "nan") {
        return std::nan("");
    }
    double v = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (*first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ValidationError(fmt::format("not a number: '{}'", t));
    }
    return v;
}

namespace {

using Pairs = std::vector<std::pair<std::string, std::string>>;

Pairs meta_pairs(const SpectrumMeta& m)
{
    Pairs p;
    p.emplace_back("source", m.synthesized ? "synthesized" : "ingested");
    if (m.drive) {
        p.emplace_back("b1_mT", format_double(m.drive->b1_mT));
        p.emplace_back("freq_MHz", format_double(m.drive->freq_MHz));
        p.emplace_back("theta_deg", format_double(m.drive->theta_deg));
        p.emplace_back("gamma_MHz_per_mT", format_double(m.drive->gamma_MHz_per_mT));
    }
    if (m.relax) {
        p.emplace_back("t1_us", format_double(m.relax->t1_us));
        p.emplace_back("t2_us", format_double(m.relax->t2_us));
        p.emplace_back("p0", format_double(m.relax->p0));
    }
    if (m.seed) {
        p.emplace_back("seed", std::to_string(*m.seed));
    }
    p.emplace_back("noise_sigma", format_double(m.noise_sigma));
    p.emplace_back("baseline_intercept", format_double(m.baseline_intercept));
    p.emplace_back("baseline_slope", format_double(m.baseline_slope));
    if (m.drive_proxy) {
        p.emplace_back("drive_proxy", format_double(*m.drive_proxy));
    }
    p.emplace_back("field_floor_mT", format_double(m.field_floor_mT));
    if (m.calibration) {
        p.emplace_back("calibration_scale", format_double(m.calibration->scale));
        p.emplace_back("calibration_offset_mT", format_double(m.calibration->offset_mT));
    }
    for (const auto& [k, v] : m.extra) {
        p.emplace_back(k, v);
    }
    return p;
}

SpectrumMeta meta_from_pairs(const std::map<std::string, std::string>& kv)
{
    SpectrumMeta m;
    auto take = [&](const char* key) -> std::optional<double> {
        auto it = kv.find(key);
        if (it == kv.end()) {
            return std::nullopt;
        }
        return parse_double(it->second);
    };
    const auto b1 = take("b1_mT");
    const auto freq = take("freq_MHz");
    const auto theta = take("theta_deg");
    const auto gamma = take("gamma_MHz_per_mT");
    if (freq || gamma || b1 || theta) {
        DriveParams d;
        d.b1_mT = b1.value_or(0.0);
        d.freq_MHz = freq.value_or(d.freq_MHz);
        d.theta_deg = theta.value_or(d.theta_deg);
        d.gamma_MHz_per_mT = gamma.value_or(d.gamma_MHz_per_mT);
        m.drive = d;
    }
    const auto t1 = take("t1_us");
    const auto t2 = take("t2_us");
    const auto p0 = take("p0");
    if (t1 || t2 || p0) {
        RelaxationParams r;
        r.t1_us = t1.value_or(r.t1_us);
        r.t2_us = t2.value_or(r.t2_us);
        r.p0 = p0.value_or(r.p0);
        m.relax = r;
    }
    if (auto it = kv.find("seed"); it != kv.end()) {
        m.seed = std::stoull(it->second);
    }
    if (auto it = kv.find("source"); it != kv.end()) {
        m.synthesized = it->second == "synthesized";
    }
    m.noise_sigma = take("noise_sigma").value_or(0.0);
    m.baseline_intercept = take("baseline_intercept").value_or(0.0);
    m.baseline_slope = take("baseline_slope").value_or(0.0);
    m.drive_proxy = take("drive_proxy");
    m.field_floor_mT = take("field_floor_mT").value_or(m.field_floor_mT);
    const auto scale = take("calibration_scale");
    const auto offset = take("calibration_offset_mT");
    if (scale || offset) {
        m.calibration = FieldCalibration{scale.value_or(1.0), offset.value_or(0.0)};
    }
    static const char* known[] = {"source", "b1_mT", "freq_MHz", "theta_deg", "gamma_MHz_per_mT",
                                  "t1_us", "t2_us", "p0", "seed", "noise_sigma",
                                  "baseline_intercept", "baseline_slope", "drive_proxy",
                                  "field_floor_mT", "calibration_scale",
                                  "calibration_offset_mT"};
    for (const auto& [k, v] : kv) {
        if (std::find(std::begin(known), std::end(known), k) == std::end(known)) {
            m.extra[k] = v;
        }
    }
    return m;
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

void write_spectrum_csv(std::ostream& os, const Spectrum& s)
{
    s.validate();
    for (const auto& [k, v] : meta_pairs(s.meta)) {
        os << "# " << k << " = " << v << '\n';
    }
    os << "b0_mT,signal\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        os << format_double(s.field_mT[i]) << ',' << format_double(s.signal[i]) << '\n';
    }
}

void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    }
    write_spectrum_csv(os, s);
    if (!os) {
        throw IoError(fmt::format("write to '{}' failed", path.string()));
    }
}

Spectrum read_spectrum_csv(std::istream& is, const std::string& source)
{
    std::map<std::string, std::string> kv;
    Spectrum s;
    std::string line;
    bool header_seen = false;
    std::size_t line_no = 0;
    try {
        while (std::getline(is, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (line.empty()) {
                continue;
            }
            if (line.front() == '#') {
                const auto eq = line.find('=');
                if (!header_seen && eq != std::string::npos) {
                    kv[trim(line.substr(1, eq - 1))] = trim(line.substr(eq + 1));
                }
                continue;
            }
            if (!header_seen) {
                if (trim(line) != "b0_mT,signal") {
                    throw ValidationError(fmt::format("expected header 'b0_mT,signal', got '{}'",
                                                      line));
                }
                header_seen = true;
                continue;
            }
            const auto comma = line.find(',');
            if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
                throw ValidationError("expected two comma-separated columns");
            }
            s.field_mT.push_back(parse_double(line.substr(0, comma)));
            s.signal.push_back(parse_double(line.substr(comma + 1)));
        }
        if (!header_seen) {
            throw ValidationError("missing 'b0_mT,signal' header");
        }
        s.meta = meta_from_pairs(kv);
        s.validate();
    } catch (const ValidationError& e) {
        throw IoError(fmt::format("{}:{}: {}", source, line_no, e.what()));
    } catch (const std::logic_error& e) {
        throw IoError(fmt::format("{}:{}: malformed metadata ({})", source, line_no, e.what()));
    }
    return s;
}

Spectrum read_spectrum_csv(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError(fmt::format("cannot open '{}'", path.string()));
    }
    return read_spectrum_csv(is, path.string());
}

}  // namespace mpesr
