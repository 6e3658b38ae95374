#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "longmix/report.hpp"

#ifndef LONGMIX_CLI_PATH
#error "LONGMIX_CLI_PATH must point at the built binary"
#endif

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / "longmix_cli_test";
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(LONGMIX_CLI_PATH) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

long count_lines(const std::string& text) {
    long n = 0;
    for (char c : text) {
        if (c == '\n') ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("cli pipeline end to end") {
    TempDir tmp;
    const std::string sim = tmp.file("sim.csv");
    REQUIRE(run_cli("simulate --seed 9 --out " + sim) == 0);
    CHECK(count_lines(slurp(sim)) == 373);  // header + 372 records

    SUBCASE("fit emits a parseable model document") {
        const std::string out = tmp.file("fit.json");
        REQUIRE(run_cli("fit " + sim + " --model m3 --structure ri --method ml --out " + out) ==
                0);
        const auto j = nlohmann::json::parse(slurp(out));
        for (const char* key : {"model", "method", "beta", "se", "cov_beta", "theta", "loglik",
                                "aic", "bic", "k", "N", "M", "df_outer", "df_inner",
                                "converged", "boundary"}) {
            CHECK(j.contains(key));
        }
        CHECK(j["model"] == "weight ~ tw + grp + tw:grp3");
        CHECK(j["method"] == "ML");
        CHECK(j["N"] == 372);
        CHECK(j["M"] == 31);
        CHECK(j["k"] == 7);
        CHECK(j["df_outer"] == 28);
        CHECK(j["df_inner"] == 339);
        CHECK(j["converged"].get<bool>());
        CHECK(std::isfinite(j["loglik"].get<double>()));
        CHECK(j["beta"].size() == 5);
        CHECK(j["cov_beta"].size() == 5);
        CHECK(j["theta"]["structure"] == "ri");

        // Variance parameters serialize per structure.
        const std::string hv_out = tmp.file("fit_hv.json");
        REQUIRE(run_cli("fit " + sim + " --structure ri+hv --out " + hv_out) == 0);
        const auto jh = nlohmann::json::parse(slurp(hv_out));
        CHECK(jh["theta"]["structure"] == "ri+hv");
        CHECK(jh["theta"]["ratios"].size() == 2);
        CHECK(jh["k"] == 9);
    }

    SUBCASE("compare writes the requested set") {
        const std::string out = tmp.file("compare.csv");
        REQUIRE(run_cli("compare " + sim + " --set main --out " + out) == 0);
        const std::string text = slurp(out);
        CHECK(count_lines(text) == 4);
        CHECK(text.rfind("Model,AIC,BIC,logLik,k\n", 0) == 0);
        REQUIRE(run_cli("compare " + sim + " --set sensitivity --out " + out) == 0);
        CHECK(count_lines(slurp(out)) == 5);
    }

    SUBCASE("contrasts and gains headers match the published tables") {
        const std::string weekly = tmp.file("weekly.csv");
        REQUIRE(run_cli("contrasts " + sim + " --out " + weekly) == 0);
        const std::string wtext = slurp(weekly);
        CHECK(wtext.rfind("contrast_label,week,Estimate,Std_Error,Lower_95CI,Upper_95CI,p_value\n",
                          0) == 0);
        CHECK(count_lines(wtext) == 37);

        const std::string gains = tmp.file("gains.csv");
        REQUIRE(run_cli("gains " + sim + " --out " + gains) == 0);
        const std::string gtext = slurp(gains);
        CHECK(gtext.rfind("Group,Estimate,Std_Error,Lower_95CI,Upper_95CI\n", 0) == 0);
        CHECK(count_lines(gtext) == 5);
    }

    SUBCASE("diagnose writes the full file set") {
        const std::string outdir = tmp.file("diag");
        REQUIRE(run_cli("diagnose " + sim + " --outdir " + outdir) == 0);
        for (const char* name : {"diagnostics.csv", "ranef.csv", "qq_resid.csv", "qq_ranef.csv",
                                 "resid_by_week.csv"}) {
            CHECK(fs::exists(fs::path(outdir) / name));
        }
        CHECK(count_lines(slurp((fs::path(outdir) / "diagnostics.csv").string())) == 373);
    }

    SUBCASE("report is byte-identical across reruns") {
        const std::string dir1 = tmp.file("rep1");
        const std::string dir2 = tmp.file("rep2");
        REQUIRE(run_cli("report " + sim + " --outdir " + dir1) == 0);
        REQUIRE(run_cli("report " + sim + " --outdir " + dir2) == 0);
        const std::string a = slurp((fs::path(dir1) / "report.md").string());
        CHECK(!a.empty());
        CHECK(a == slurp((fs::path(dir2) / "report.md").string()));
    }

    SUBCASE("reshape round trips through eda") {
        // Build a wide file from the simulated one by hand.
        const std::string wide = tmp.file("wide.csv");
        {
            std::ofstream out(wide);
            out << "mouseid,grp,bw1,bw2,bw3\n"
                << "A,1,10,11,12\n"
                << "B,2,20,21,22\n";
        }
        const std::string long_path = tmp.file("long.csv");
        REQUIRE(run_cli("reshape " + wide + " --out " + long_path) == 0);
        const std::string text = slurp(long_path);
        CHECK(text.rfind("mouseid,grp,tw,weight\n", 0) == 0);
        CHECK(count_lines(text) == 7);

        const std::string means = tmp.file("means.csv");
        REQUIRE(run_cli("eda " + long_path + " --out " + means) == 0);
        CHECK(slurp(means).rfind("grp,tw,mean_weight,count\n", 0) == 0);
    }
}

TEST_CASE("cli oracle check passes") {
    CHECK(run_cli("oracle-check --seed 7 --trials 5 > /dev/null") == 0);
}

TEST_CASE("empty report inputs produce stubs") {
    longmix::ReportInputs inputs;
    std::ostringstream out;
    longmix::emit_report(inputs, out);
    const std::string text = out.str();
    CHECK(text.find("no results") != std::string::npos);
    CHECK(text.find("Model comparison") != std::string::npos);
    CHECK(text.find("12-week gains") != std::string::npos);
}

TEST_CASE("cli exit codes") {
    TempDir tmp;
    CHECK(run_cli("no-such-command") == 2);
    CHECK(run_cli("fit") == 2);
    CHECK(run_cli("fit /nonexistent/file.csv") == 3);

    const std::string bad = tmp.file("bad.csv");
    {
        std::ofstream out(bad);
        out << "mouseid,grp,tw,weight\nM1,1,1,10\nM1,1,1,11\n";  // duplicate mouse-week
    }
    CHECK(run_cli("fit " + bad) == 3);

    const std::string wrong = tmp.file("wrong.csv");
    {
        std::ofstream out(wrong);
        out << "id,value\n1,2\n";
    }
    CHECK(run_cli("eda " + wrong) == 3);
}
