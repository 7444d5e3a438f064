#include "mpesr/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "mpesr/errors.hpp"

namespace mpesr {

using nlohmann::json;

namespace {

// Reads optional keys from one JSON object and rejects any key never asked for.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name))
    {
        if (!j_.is_object()) {
            throw ValidationError(fmt::format("config section '{}' must be an object", name_));
        }
    }

    template <class T>
    void get(const char* key, T& out)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) {
            return;
        }
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ValidationError(
                fmt::format("config key '{}.{}' has the wrong type", name_, key));
        }
    }

    template <class T>
    void get(const char* key, std::optional<T>& out)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end() || it->is_null()) {
            return;
        }
        T v{};
        get(key, v);
        out = v;
    }

    template <class T>
    void get_int_map(const char* key, std::map<int, T>& out)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) {
            return;
        }
        if (!it->is_object()) {
            throw ValidationError(fmt::format("config key '{}.{}' must be an object", name_, key));
        }
        out.clear();
        for (const auto& [k, v] : it->items()) {
            int order = 0;
            try {
                std::size_t pos = 0;
                order = std::stoi(k, &pos);
                if (pos != k.size()) {
                    throw std::invalid_argument(k);
                }
                out[order] = v.template get<T>();
            } catch (const std::exception&) {
                throw ValidationError(
                    fmt::format("config key '{}.{}' has a bad entry '{}'", name_, key, k));
            }
        }
    }

    Section sub(const char* key)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        static const json empty = json::object();
        return Section(it == j_.end() ? empty : *it, name_ + "." + key);
    }

    void finish() const
    {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) {
                throw ValidationError(fmt::format("unknown config key '{}.{}'", name_, k));
            }
        }
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

template <class T>
json int_map_json(const std::map<int, T>& m)
{
    json out = json::object();
    for (const auto& [k, v] : m) {
        out[std::to_string(k)] = v;
    }
    return out;
}

void require(bool ok, const std::string& msg)
{
    if (!ok) {
        throw ValidationError(msg);
    }
}

void check_orders(const std::vector<int>& orders, const char* where)
{
    require(!orders.empty(), fmt::format("{}.orders must not be empty", where));
    for (int n : orders) {
        require(n >= 1, fmt::format("{}.orders entries must be >= 1, got {}", where, n));
    }
}

void check_thetas(const std::vector<double>& thetas, const char* where)
{
    require(!thetas.empty(), fmt::format("{}.theta_deg must not be empty", where));
    for (double t : thetas) {
        require(t >= 0.0 && t <= 90.0,
                fmt::format("{}.theta_deg entries must lie in [0, 90], got {}", where, t));
    }
}

void check_b1(const std::vector<double>& b1, const char* where)
{
    require(!b1.empty(), fmt::format("{}.b1_mT must not be empty", where));
    for (double b : b1) {
        require(std::isfinite(b) && b >= 0.0,
                fmt::format("{}.b1_mT entries must be >= 0, got {}", where, b));
    }
}

}  // namespace

DriveParams RunConfig::base_drive() const
{
    DriveParams d;
    d.freq_MHz = freq_MHz;
    d.gamma_MHz_per_mT = gamma_MHz_per_mT;
    return d;
}

void RunConfig::validate() const
{
    require(threads >= 1, fmt::format("threads must be >= 1, got {}", threads));
    require(!out_dir.empty(), "out_dir must not be empty");
    base_drive().validate();
    relax.validate();

    check_b1(simulate.b1_mT, "simulate");
    check_thetas(simulate.theta_deg, "simulate");
    simulate.grid.validate();
    require(simulate.noise_sigma >= 0.0, "simulate.noise_sigma must be >= 0");
    require(simulate.steps_per_period >= kMinStepsPerPeriod,
            fmt::format("simulate.steps_per_period must be >= {}", kMinStepsPerPeriod));
    require(simulate.max_periods >= 1, "simulate.max_periods must be >= 1");
    require(simulate.field_floor_mT >= 0.0, "simulate.field_floor_mT must be >= 0");

    check_orders(locate.orders, "locate");
    check_b1(locate.b1_mT, "locate");
    check_thetas(locate.theta_deg, "locate");
    require(locate.field_tol_mT > 0.0, "locate.field_tol_mT must be > 0");
    require(locate.convergence_tol > 0.0, "locate.convergence_tol must be > 0");
    require(locate.max_truncation >= 1, "locate.max_truncation must be >= 1");

    check_orders(analyze.orders, "analyze");
    require(analyze.expected_linewidth_mT > 0.0, "analyze.expected_linewidth_mT must be > 0");
    require(analyze.window_factor > 0.0, "analyze.window_factor must be > 0");
    require(analyze.max_shift_mT >= 0.0, "analyze.max_shift_mT must be >= 0");
    require(analyze.field_sign == 1 || analyze.field_sign == -1,
            "analyze.field_sign must be +1 or -1");
    for (const auto& [n, p] : analyze.polarity) {
        require(p == "maximum" || p == "minimum",
                fmt::format("analyze.polarity.{} must be maximum or minimum", n));
    }
    require(analyze.smoothing_width >= 1, "analyze.smoothing_width must be >= 1");
    require(analyze.max_extrema >= 1, "analyze.max_extrema must be >= 1");
    require(analyze.relative_threshold >= 0.0 && analyze.relative_threshold <= 1.0,
            "analyze.relative_threshold must lie in [0, 1]");
    require(!analyze.field_floor_mT || *analyze.field_floor_mT >= 0.0,
            "analyze.field_floor_mT must be >= 0");
    require(analyze.min_baseline_points >= 2, "analyze.min_baseline_points must be >= 2");

    require(angular.order >= 1, "angular.order must be >= 1");
    require(!angular.b1_mT || *angular.b1_mT > 0.0, "angular.b1_mT must be > 0");
    require(angular.theta_start_deg >= 0.0 && angular.theta_stop_deg <= 90.0 &&
                angular.theta_start_deg < angular.theta_stop_deg && angular.theta_step_deg > 0.0,
            "angular theta grid must satisfy 0 <= start < stop <= 90 and step > 0");
    require(angular.gap_floor >= 0.0, "angular.gap_floor must be >= 0");
    require(angular.field_tol_mT > 0.0, "angular.field_tol_mT must be > 0");
    require(angular.convergence_tol > 0.0, "angular.convergence_tol must be > 0");
    require(angular.max_truncation >= 1, "angular.max_truncation must be >= 1");
}

json to_json(const RunConfig& c)
{
    json j;
    j["command"] = c.command;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["out_dir"] = c.out_dir;
    j["drive"] = {{"freq_MHz", c.freq_MHz}, {"gamma_MHz_per_mT", c.gamma_MHz_per_mT}};
    j["relaxation"] = {{"t1_us", c.relax.t1_us}, {"t2_us", c.relax.t2_us}, {"p0", c.relax.p0}};

    const SimulateConfig& s = c.simulate;
    j["simulate"] = {{"b1_mT", s.b1_mT},
                     {"theta_deg", s.theta_deg},
                     {"grid",
                      {{"start_mT", s.grid.start_mT},
                       {"stop_mT", s.grid.stop_mT},
                       {"step_mT", s.grid.step_mT}}},
                     {"noise_sigma", s.noise_sigma},
                     {"baseline", {{"intercept", s.baseline.intercept}, {"slope", s.baseline.slope}}},
                     {"steps_per_period", s.steps_per_period},
                     {"max_periods", s.max_periods},
                     {"field_floor_mT", s.field_floor_mT}};

    const LocateConfig& l = c.locate;
    j["locate"] = {{"orders", l.orders},
                   {"b1_mT", l.b1_mT},
                   {"theta_deg", l.theta_deg},
                   {"field_tol_mT", l.field_tol_mT},
                   {"convergence_tol", l.convergence_tol},
                   {"max_truncation", l.max_truncation}};

    const AnalyzeConfig& a = c.analyze;
    json aj = {{"inputs", a.inputs},
               {"orders", a.orders},
               {"expected_linewidth_mT", a.expected_linewidth_mT},
               {"window_factor", a.window_factor},
               {"max_shift_mT", a.max_shift_mT},
               {"field_sign", a.field_sign},
               {"polarity", int_map_json(a.polarity)},
               {"min_drive_proxy", int_map_json(a.min_drive_proxy)},
               {"smoothing_width", a.smoothing_width},
               {"max_extrema", a.max_extrema},
               {"relative_threshold", a.relative_threshold},
               {"min_baseline_points", a.min_baseline_points}};
    aj["field_floor_mT"] = a.field_floor_mT ? json(*a.field_floor_mT) : json(nullptr);
    aj["calibration_file"] = a.calibration_file ? json(*a.calibration_file) : json(nullptr);
    j["analyze"] = aj;

    const AngularConfig& g = c.angular;
    j["angular"] = {{"order", g.order},
                    {"b1_mT", g.b1_mT ? json(*g.b1_mT) : json(nullptr)},
                    {"theta_start_deg", g.theta_start_deg},
                    {"theta_stop_deg", g.theta_stop_deg},
                    {"theta_step_deg", g.theta_step_deg},
                    {"gap_floor", g.gap_floor},
                    {"field_tol_mT", g.field_tol_mT},
                    {"convergence_tol", g.convergence_tol},
                    {"max_truncation", g.max_truncation}};
    return j;
}

RunConfig config_from_json(const json& j)
{
    RunConfig c;
    Section top(j, "config");
    top.get("command", c.command);
    top.get("seed", c.seed);
    top.get("threads", c.threads);
    top.get("out_dir", c.out_dir);
    {
        Section d = top.sub("drive");
        d.get("freq_MHz", c.freq_MHz);
        d.get("gamma_MHz_per_mT", c.gamma_MHz_per_mT);
        d.finish();
    }
    {
        Section r = top.sub("relaxation");
        r.get("t1_us", c.relax.t1_us);
        r.get("t2_us", c.relax.t2_us);
        r.get("p0", c.relax.p0);
        r.finish();
    }
    {
        SimulateConfig& s = c.simulate;
        Section sj = top.sub("simulate");
        sj.get("b1_mT", s.b1_mT);
        sj.get("theta_deg", s.theta_deg);
        Section g = sj.sub("grid");
        g.get("start_mT", s.grid.start_mT);
        g.get("stop_mT", s.grid.stop_mT);
        g.get("step_mT", s.grid.step_mT);
        g.finish();
        sj.get("noise_sigma", s.noise_sigma);
        Section b = sj.sub("baseline");
        b.get("intercept", s.baseline.intercept);
        b.get("slope", s.baseline.slope);
        b.finish();
        sj.get("steps_per_period", s.steps_per_period);
        sj.get("max_periods", s.max_periods);
        sj.get("field_floor_mT", s.field_floor_mT);
        sj.finish();
    }
    {
        LocateConfig& l = c.locate;
        Section lj = top.sub("locate");
        lj.get("orders", l.orders);
        lj.get("b1_mT", l.b1_mT);
        lj.get("theta_deg", l.theta_deg);
        lj.get("field_tol_mT", l.field_tol_mT);
        lj.get("convergence_tol", l.convergence_tol);
        lj.get("max_truncation", l.max_truncation);
        lj.finish();
    }
    {
        AnalyzeConfig& a = c.analyze;
        Section aj = top.sub("analyze");
        aj.get("inputs", a.inputs);
        aj.get("orders", a.orders);
        aj.get("expected_linewidth_mT", a.expected_linewidth_mT);
        aj.get("window_factor", a.window_factor);
        aj.get("max_shift_mT", a.max_shift_mT);
        aj.get("field_sign", a.field_sign);
        aj.get_int_map("polarity", a.polarity);
        aj.get_int_map("min_drive_proxy", a.min_drive_proxy);
        aj.get("smoothing_width", a.smoothing_width);
        aj.get("max_extrema", a.max_extrema);
        aj.get("relative_threshold", a.relative_threshold);
        aj.get("min_baseline_points", a.min_baseline_points);
        aj.get("field_floor_mT", a.field_floor_mT);
        aj.get("calibration_file", a.calibration_file);
        aj.finish();
    }
    {
        AngularConfig& g = c.angular;
        Section gj = top.sub("angular");
        gj.get("order", g.order);
        gj.get("b1_mT", g.b1_mT);
        gj.get("theta_start_deg", g.theta_start_deg);
        gj.get("theta_stop_deg", g.theta_stop_deg);
        gj.get("theta_step_deg", g.theta_step_deg);
        gj.get("gap_floor", g.gap_floor);
        gj.get("field_tol_mT", g.field_tol_mT);
        gj.get("convergence_tol", g.convergence_tol);
        gj.get("max_truncation", g.max_truncation);
        gj.finish();
    }
    top.finish();
    return c;
}

std::string serialize_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

RunConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(fmt::format("config is not valid JSON: {}", e.what()));
    }
    return config_from_json(j);
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError(fmt::format("cannot open config '{}'", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace mpesr
