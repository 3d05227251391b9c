#include "cgs/report.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

using namespace cgs;

TEST_CASE("check records")
{
    const CheckRecord a = make_check("a", 1.0 + 1e-9, 1.0, 1e-8);
    CHECK(a.pass);
    CHECK(a.rel_error == doctest::Approx(1e-9).epsilon(1e-6));
    const CheckRecord b = make_check("b", 2.0, 1.0, 0.5);
    CHECK_FALSE(b.pass);
    const CheckRecord c = make_check("c", 1e-12, 0.0, 1e-10, 1.0);
    CHECK(c.pass);
    const CheckRecord n = make_check("n", std::numeric_limits<double>::quiet_NaN(), 1.0, 1.0);
    CHECK_FALSE(n.pass);
}

TEST_CASE("first failure skips skipped records")
{
    Report r;
    r.checks.push_back(make_check("ok", 1.0, 1.0, 0.0));
    CheckRecord skipped = make_check("undefined", 1.0, 2.0, 0.0);
    skipped.skipped = true;
    r.checks.push_back(skipped);
    CHECK(r.all_pass());
    r.checks.push_back(make_check("bad", 1.0, 2.0, 0.1));
    REQUIRE(r.first_failure() != nullptr);
    CHECK(r.first_failure()->name == "bad");
}

TEST_CASE("JSON and CSV carry the same content")
{
    Report r;
    r.command = "sweep";
    r.config["d"] = 3;
    r.config["label"] = "a,b";
    r.checks.push_back(make_check("x", 0.5, 0.25, 2.0));
    r.checks.push_back(make_check("inf", std::numeric_limits<double>::infinity(), 1.0, 1.0));
    r.records.push_back({{"t", 0.01}, {"tau", 1e-3}});
    r.records.push_back({{"t", 0.001}, {"error", "diverged"}});
    r.summary["slope"] = 0.5;

    const nlohmann::ordered_json j = to_json(r);
    CHECK(j["schema"] == report_schema);
    CHECK(j["command"] == "sweep");
    CHECK(j["checks"].size() == 2);
    CHECK(j["checks"][0]["rel_error"].get<double>() == doctest::Approx(1.0));
    CHECK(j["checks"][1]["lhs"] == "inf");
    CHECK(j["pass"] == false);
    CHECK(nlohmann::ordered_json::parse(j.dump()) == j);

    const std::string csv = to_csv(r);
    CHECK(csv.find("schema,cgs-report/1\n") == 0);
    CHECK(csv.find("config,label,\"a,b\"\n") != std::string::npos);
    CHECK(csv.find("\nt,tau,error\n") != std::string::npos);
    CHECK(csv.find("\n0.001,,diverged\n") != std::string::npos);
    CHECK(csv.find("slope,0.5\n") != std::string::npos);
    CHECK(csv.find("\npass,false\n") != std::string::npos);

    // One CSV check row per JSON check.
    std::istringstream in(csv);
    std::string line;
    int rows = -1;
    bool in_checks = false;
    while (std::getline(in, line)) {
        if (line.rfind("check,", 0) == 0) {
            in_checks = true;
            rows = 0;
        } else if (in_checks && line.empty()) {
            in_checks = false;
        } else if (in_checks) {
            ++rows;
        }
    }
    CHECK(rows == 2);
}

TEST_CASE("slope fit")
{
    CHECK(fit_slope({1, 2, 3}, {2, 4, 6}) == doctest::Approx(2.0));
    CHECK(fit_slope({0, 1, 2, 3}, {1, 0, 1, 0}) == doctest::Approx(-0.2));
}

TEST_CASE("Fourier ball quadrature matches the closed form")
{
    for (int d : {3, 4})
        for (double s : {0.25, 1.0, 4.0})
            CHECK(std::abs(fourier_ball_quadrature(d, s) / fourier_ball_integral(d, s) - 1) < 1e-6);
}

TEST_CASE("identity suite on the default grid and on a coarse grid")
{
    for (const ModelParams& m : {ModelParams::make(3, 4.0), ModelParams::make(4, 2.0)}) {
        const std::vector<CheckRecord> fine = identity_suite(m, GridSpec{});
        bool all = true;
        for (const CheckRecord& c : fine)
            all = all && (c.pass || c.skipped);
        CHECK(all);
        CHECK(fine.size() > 10);
    }
    const std::vector<CheckRecord> coarse = identity_suite(ModelParams::make(3, 4.0), GridSpec{16, 2048, 0});
    bool residual_failed = false;
    for (const CheckRecord& c : coarse)
        if (c.name.find("laplacian_W") != std::string::npos && !c.pass)
            residual_failed = true;
    CHECK(residual_failed);
}
