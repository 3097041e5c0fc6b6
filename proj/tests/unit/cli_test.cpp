#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "outbreak/outbreak.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(OUTBREAK_CLI) + ' ' + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string fixture(const std::string& name) { return (outbreak::data_dir() / "fixtures" / name).string(); }

std::string scan_args() {
    return "scan --counts " + fixture("counts_small.csv") + " --geometry " + fixture("geometry_small.csv") +
           " --k-max 2 --window 4 --d-max 2 --replicates 99 --pool-depth 2";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Cli, EmptyRangeGivesEmptyOutput) {
    const auto r = run("detect --counts " + fixture("counts_small.csv") + " --method ears --from 2008-09 --to 2008-08");
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
    const auto a = run(scan_args() + " --seed 7");
    const auto b = run(scan_args() + " --seed 7");
    ASSERT_EQ(a.code, 0);
    EXPECT_FALSE(a.out.empty());
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, WorkerCountDoesNotChangeOutput) {
    for (const char* method : {"kulldorff", "permutation", "bayes"}) {
        const auto a = run(scan_args() + " --method " + method + " --workers 1");
        const auto b = run(scan_args() + " --method " + method + " --workers 8");
        ASSERT_EQ(a.code, 0) << method;
        EXPECT_EQ(a.out, b.out) << method;
    }
}

TEST(Cli, OneJsonRecordPerAnalysis) {
    const auto r = run(scan_args() + " --from 2008-05 --to 2008-10");
    ASSERT_EQ(r.code, 0);
    std::istringstream lines(r.out);
    std::string line;
    std::int64_t expect = 4;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        EXPECT_EQ(j["time_index"], expect++);
        EXPECT_TRUE(j.contains("alarm"));
    }
    EXPECT_EQ(expect, 10);
}

TEST(Cli, AlarmsOnlyChangeExitCodeOnRequest) {
    const auto base = "detect --counts " + fixture("counts_small.csv") + " --method ears --from 2008-10";
    const auto plain = run(base);
    ASSERT_EQ(plain.code, 0);
    EXPECT_NE(plain.out.find("\"alarm\":true"), std::string::npos);
    EXPECT_EQ(run(base + " --fail-on-alarm").code, 1);
}

TEST(Cli, ConfigurationErrorsAreNonzero) {
    EXPECT_EQ(run(scan_args() + " --method nope").code, 2);
    EXPECT_EQ(run("detect --counts " + fixture("nope.csv")).code, 2);
    EXPECT_EQ(run("detect --counts " + fixture("counts_small.csv") + " --from 2030-01").code, 2);
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("--version").code, 0);
}

TEST(Cli, ConfigFileIsMirroredByFlagsAndFlagsWin) {
    const auto cfg = fs::temp_directory_path() / "outbreak_cli_test.toml";
    std::ofstream(cfg) << "[detect]\nmethod = \"ears\"\nears-multiplier = 100\n";
    const auto base = "--config " + cfg.string() + " detect --counts " + fixture("counts_small.csv") + " --from 2008-10";
    const auto from_file = run(base);
    ASSERT_EQ(from_file.code, 0);
    EXPECT_NE(from_file.out.find("\"method\":\"ears\""), std::string::npos);
    EXPECT_NE(from_file.out.find("\"alarm\":false"), std::string::npos);
    const auto flag = run(base + " --ears-multiplier 3");
    EXPECT_NE(flag.out.find("\"alarm\":true"), std::string::npos);
    fs::remove(cfg);
}

TEST(Cli, WritesCsvAndSvgArtifacts) {
    const auto dir = fs::temp_directory_path() / "outbreak_cli_artifacts";
    fs::create_directories(dir);
    const auto r = run(scan_args() + " --csv " + (dir / "r.csv").string() + " --plot " + (dir / "r.svg").string() +
                       " --map " + (dir / "m.svg").string());
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(slurp(dir / "r.csv").rfind("time_index,time,statistic", 0), 0u);
    EXPECT_NE(slurp(dir / "r.svg").find("stroke-dasharray"), std::string::npos);
    EXPECT_NE(slurp(dir / "m.svg").find("</svg>"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Cli, StcdEvalAndSimulate) {
    const auto st = run("stcd --events " + fixture("events_small.csv") + " --rho 5 --epsilon 0.5 --arl 1000");
    ASSERT_EQ(st.code, 0);
    EXPECT_EQ(std::count(st.out.begin(), st.out.end(), '\n'), 7);

    const auto ev = run("eval --scenario " + fixture("scenario.toml") + " --reps 4 --detector kulldorff,ears");
    ASSERT_EQ(ev.code, 0);
    EXPECT_EQ(ev.out.rfind("detector,scenario,replicates,arl", 0), 0u);
    EXPECT_NE(ev.out.find("\nkulldorff,grid-q3,4,"), std::string::npos);
    EXPECT_NE(ev.out.find("\nears,grid-q3,4,"), std::string::npos);

    const auto a = run("simulate --scenario " + fixture("scenario.toml") + " --replicate 2");
    const auto b = run("simulate --scenario " + fixture("scenario.toml") + " --replicate 2");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    std::istringstream in(a.out);
    const auto panel = outbreak::ingest_count_panel(in);
    EXPECT_EQ(panel.regions(), 9u);
    EXPECT_EQ(panel.steps(), 24u);
}
