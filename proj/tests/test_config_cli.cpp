#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "mpesr/analytic.hpp"
#include "mpesr/commands.hpp"
#include "mpesr/config.hpp"
#include "mpesr/errors.hpp"
#include "mpesr/spectrum.hpp"
#include "mpesr/synthesis.hpp"

using namespace mpesr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / fmt::format("mpesr_{}_{}", getpid(), name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run_cli(const std::string& args, const fs::path& dir)
{
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = fmt::format("{} {} > {} 2> {}", MPESR_CLI_PATH, args, out.string(), err.string());
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

RunConfig small_simulation(const fs::path& out)
{
    RunConfig c;
    c.out_dir = out.string();
    c.simulate.b1_mT = {1.0, 2.0};
    c.simulate.theta_deg = {90.0, 69.0};
    c.simulate.grid = {10.3, 10.8, 0.01};
    c.simulate.noise_sigma = 1e-5;
    c.seed = 42;
    return c;
}

}  // namespace

TEST_SUITE("config_cli")
{
    TEST_CASE("config serialization round trip is byte identical")
    {
        RunConfig c;
        const std::string a = serialize_config(c);
        CHECK(serialize_config(parse_config(a)) == a);

        c.seed = 123456789012345ULL;
        c.simulate.b1_mT = {0.1, 1.0 / 3.0, 2.5e-7};
        c.analyze.polarity = {{1, "minimum"}, {3, "maximum"}};
        c.analyze.min_drive_proxy = {{1, 0.75}};
        c.analyze.field_floor_mT = 0.15;
        c.analyze.calibration_file = "low.csv";
        c.angular.b1_mT = 0.4;
        c.relax.p0 = -1e-3;
        const std::string b = serialize_config(c);
        const RunConfig back = parse_config(b);
        CHECK(serialize_config(back) == b);
        CHECK(back.simulate.b1_mT[1] == 1.0 / 3.0);
        CHECK(back.analyze.polarity.at(1) == "minimum");
        CHECK(back.analyze.calibration_file == "low.csv");
        CHECK(back.seed == c.seed);
    }

    TEST_CASE("partial documents take defaults")
    {
        const RunConfig c = parse_config(R"({"seed": 7, "locate": {"orders": [3]}})");
        CHECK(c.seed == 7);
        CHECK(c.locate.orders == std::vector<int>{3});
        CHECK(c.locate.b1_mT.size() == 12);
        CHECK(c.freq_MHz == 100.0);
    }

    TEST_CASE("bad documents are rejected")
    {
        CHECK_THROWS_AS(parse_config("{"), ValidationError);
        CHECK_THROWS_AS(parse_config(R"({"sed": 1})"), ValidationError);
        CHECK_THROWS_AS(parse_config(R"({"simulate": {"grid": {"stepp": 1}}})"), ValidationError);
        CHECK_THROWS_AS(parse_config(R"({"threads": "four"})"), ValidationError);
        CHECK_THROWS_AS(parse_config(R"({"analyze": {"polarity": {"x": "minimum"}}})"), ValidationError);
        CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);

        RunConfig c;
        c.simulate.b1_mT.clear();
        CHECK_THROWS_AS(c.validate(), ValidationError);
        c = RunConfig{};
        c.locate.theta_deg = {95};
        CHECK_THROWS_AS(c.validate(), ValidationError);
        c = RunConfig{};
        c.analyze.polarity[2] = "sideways";
        CHECK_THROWS_AS(c.validate(), ValidationError);
        c = RunConfig{};
        c.relax.t2_us = 50;
        CHECK_THROWS_AS(c.validate(), ValidationError);
    }

    TEST_CASE("derived seeds differ per spectrum and are stable")
    {
        CHECK(derive_seed(1, 0) != derive_seed(1, 1));
        CHECK(derive_seed(1, 0) != derive_seed(2, 0));
        CHECK(derive_seed(1, 5) == derive_seed(1, 5));
    }

    TEST_CASE("simulate writes one spectrum per setting, reproducibly")
    {
        const fs::path dir = scratch("sim");
        std::ostringstream log;
        RunConfig c = small_simulation(dir / "a");
        const CommandResult r = cmd_simulate(c, log);
        CHECK(r.exit_code == kExitOk);
        CHECK(r.files.size() == 5);
        c.out_dir = (dir / "b").string();
        cmd_simulate(c, log);
        for (const fs::path& f : r.files) {
            CAPTURE(f);
            if (f == "manifest.json") {
                continue;
            }
            CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
            const Spectrum s = read_spectrum_csv(dir / "a" / f);
            CHECK(s.meta.synthesized);
            CHECK(s.meta.drive_proxy);
        }
        const nlohmann::json m = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
        CHECK(m.at("files").size() == 4);
        CHECK(m.at("config").at("seed") == 42);
        // the manifest config regenerates the run
        RunConfig again = config_from_json(m.at("config"));
        again.out_dir = (dir / "c").string();
        cmd_simulate(again, log);
        CHECK(slurp(dir / "c" / r.files[0]) == slurp(dir / "a" / r.files[0]));

        RunConfig empty = small_simulation(dir / "d");
        empty.simulate.b1_mT.clear();
        CHECK_THROWS_AS(cmd_simulate(empty, log), ValidationError);
        fs::remove_all(dir);
    }

    TEST_CASE("locate table")
    {
        const fs::path dir = scratch("loc");
        RunConfig c;
        c.out_dir = dir.string();
        c.locate.orders = {3};
        c.locate.b1_mT = {0.001, 0.5, 1.0, 1.5};
        c.locate.theta_deg = {90, 0};
        std::ostringstream log;
        const CommandResult r = cmd_locate(c, log);
        CHECK(r.warnings == 4);
        std::istringstream in(slurp(dir / "resonances.csv"));
        std::string line;
        std::getline(in, line);
        CHECK(line == "n,b1_mT,theta_deg,center_mT,gap,analytic_center_mT,shift_mT,status");
        std::vector<double> centers;
        int no_resonance = 0;
        while (std::getline(in, line)) {
            std::vector<std::string> cells;
            std::stringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) {
                cells.push_back(cell);
            }
            if (line.back() == ',') {
                cells.emplace_back();
            }
            REQUIRE(cells.size() == 8);
            if (cells[2] == "90") {
                CHECK(cells[7] == "ok");
                centers.push_back(parse_double(cells[3]));
            } else {
                CHECK(cells[7] == "no_resonance");
                CHECK(cells[3].empty());
                ++no_resonance;
            }
        }
        CHECK(no_resonance == 4);
        REQUIRE(centers.size() == 4);
        CHECK(centers[0] == doctest::Approx(10.705).epsilon(1e-6));
        for (std::size_t i = 1; i < centers.size(); ++i) {
            CHECK(centers[i] < centers[i - 1]);
        }
        fs::remove_all(dir);
    }

    TEST_CASE("analyze survives a corrupt file and flags it")
    {
        const fs::path dir = scratch("ana");
        fs::create_directories(dir / "in");
        const DriveParams base;
        const double ref = base.reference_field();
        for (double r : {0.3, 0.5, 0.7}) {
            const DriveParams d = base.with_b1(r * ref);
            std::vector<LineShape> lines;
            for (int n : {1, 2, 3}) {
                lines.push_back({analytic_center(n, d), 0.02, 1.0});
            }
            Spectrum s = synthesize_line_spectrum(lines, FieldGrid{2.5, 11.5, 0.002}, {});
            s.meta.drive = d;
            write_spectrum_csv(dir / "in" / fmt::format("s{}.csv", r), s);
        }
        std::ofstream(dir / "in" / "broken.csv") << "b0_mT,signal\n1,2\nthree,4\n";

        RunConfig c;
        c.out_dir = (dir / "out").string();
        c.analyze.inputs = {(dir / "in").string()};
        c.analyze.field_floor_mT = 0.002;
        std::ostringstream out;
        std::ostringstream log;
        const CommandResult r = cmd_analyze(c, out, log);
        CHECK(r.exit_code == kExitPartial);
        CHECK(log.str().find("broken.csv") != std::string::npos);
        const nlohmann::json ratios = nlohmann::json::parse(slurp(dir / "out" / "ratios.json"));
        REQUIRE(ratios.at("ratios").size() == 3);
        for (const auto& rep : ratios.at("ratios")) {
            CHECK(rep.at("slope").get<double>() ==
                  doctest::Approx(rep.at("predicted").at("value").get<double>()).epsilon(0.02));
            CHECK(rep.at("point_count") == 3);
        }
        CHECK(out.str().find("9/16") != std::string::npos);
        const nlohmann::json peaks = nlohmann::json::parse(slurp(dir / "out" / "peaks.json"));
        CHECK(peaks.at("peaks").size() == 9);
        CHECK(peaks.at("failures").size() == 1);
        CHECK(fs::exists(dir / "out" / "shifts.csv"));

        RunConfig none = c;
        none.analyze.inputs.clear();
        CHECK_THROWS_AS(cmd_analyze(none, out, log), ValidationError);
        fs::create_directories(dir / "empty");
        none.analyze.inputs = {(dir / "empty").string()};
        CHECK_THROWS_AS(cmd_analyze(none, out, log), ValidationError);
        fs::remove_all(dir);
    }

    TEST_CASE("angular command")
    {
        const fs::path dir = scratch("ang");
        RunConfig c;
        c.out_dir = dir.string();
        std::ostringstream out;
        std::ostringstream log;
        cmd_angular(c, out, log);
        std::istringstream in(slurp(dir / "angular.csv"));
        std::string line;
        int rows = 0;
        std::getline(in, line);
        CHECK(line == "theta_deg,x,intensity,center_mT,flagged");
        while (std::getline(in, line)) {
            ++rows;
        }
        CHECK(rows == 6);
        const nlohmann::json fit = nlohmann::json::parse(slurp(dir / "angular_fit.json"));
        CHECK(fit.at("fit").at("goodness").get<double>() >= 0.99);
        CHECK(fit.at("factor_ratio_90_over_69").get<double>() == doctest::Approx(6.87).epsilon(1e-3));
        fs::remove_all(dir);
    }

    TEST_CASE("command line exit codes and error lines")
    {
        const fs::path dir = scratch("cli");
        CHECK(run_cli("--help", dir).code == 0);
        CHECK(run_cli("", dir).code == kExitValidation);
        CHECK(run_cli("frobnicate", dir).code == kExitValidation);

        Run r = run_cli("locate --config /nonexistent/c.json", dir);
        CHECK(r.code == kExitIo);
        const nlohmann::json e = nlohmann::json::parse(r.err.substr(r.err.rfind('{')));
        CHECK(e.at("error") == "io");
        CHECK(e.at("exit_code") == kExitIo);

        std::ofstream(dir / "bad.json") << R"({"simulate": {"b1_mT": []}})";
        r = run_cli(fmt::format("simulate --config {}", (dir / "bad.json").string()), dir);
        CHECK(r.code == kExitValidation);
        CHECK(r.err.find("\"validation\"") != std::string::npos);

        r = run_cli(fmt::format("analyze --out {}", (dir / "o").string()), dir);
        CHECK(r.code == kExitValidation);

        r = run_cli("locate --seed 5 --threads 2 --print-config", dir);
        CHECK(r.code == 0);
        const RunConfig printed = parse_config(r.out);
        CHECK(printed.seed == 5);
        CHECK(printed.threads == 2);
        CHECK(printed.command == "locate");

        std::ofstream(dir / "loc.json") << R"({"locate": {"orders": [3], "b1_mT": [0.5, 1.0]}})";
        r = run_cli(fmt::format("locate --config {} --out {}", (dir / "loc.json").string(),
                                (dir / "lo").string()),
                    dir);
        CHECK(r.code == 0);
        CHECK(r.out.empty());
        CHECK(fs::exists(dir / "lo" / "resonances.csv"));
        fs::remove_all(dir);
    }
}
