// Acceptance harness: one line per shipped guarantee, fixed seeds, fixed
// tolerances. Exit status is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "freeprob/scenarios.hpp"

namespace {

using freeprob::cli::json;

struct Outcome {
    bool ok = false;
    std::string detail;
    double seconds = 0.0;
};

json run_config(const char* text) {
    return freeprob::cli::run_scenario(json::parse(text), {}).report;
}

bool report_pass(const json& rep) { return rep.value("pass", false); }

const json* find_row(const json& rep, const std::string& name) {
    if (!rep.contains("criteria")) return nullptr;
    for (const auto& row : rep["criteria"])
        if (row.value("name", "") == name) return &row;
    return nullptr;
}

bool row_pass(const json& rep, const std::string& name) {
    const json* row = find_row(rep, name);
    return row != nullptr && row->value("pass", false);
}

double row_value(const json& rep, const std::string& name) {
    const json* row = find_row(rep, name);
    return row ? row->value("value", 0.0) : -1.0;
}

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

Outcome timed(const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = f();
    } catch (const std::exception& e) {
        o.ok = false;
        o.detail = std::string("exception: ") + e.what();
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return o;
}

} // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;

    criteria.emplace_back("noncrossing-counts", [] {
        json rep = run_config(R"({"scenario": "nc", "n": 10})");
        Outcome o;
        o.ok = report_pass(rep) && rep["metrics"]["count"] == 16796;
        o.detail = "sizes 1..10 exact, |NC(10)| = " +
                   std::to_string(rep["metrics"]["count"].get<long long>());
        return o;
    });

    criteria.emplace_back("moment-cumulant-roundtrip", [] {
        json rep = run_config(
            R"({"scenario": "cumulants", "check": "roundtrip", "count": 100, "order": 8,
                "seed": 1})");
        Outcome o;
        o.ok = report_pass(rep);
        o.detail = std::to_string(rep["metrics"]["moments_compared"].get<long long>()) +
                   " moments on 100 random functionals, exact";
        return o;
    });

    criteria.emplace_back("free-poisson-moments", [] {
        json rep = run_config(R"({"scenario": "cumulants", "c": 2, "order": 4})");
        json want = json::array({"2", "6", "22", "90"});
        Outcome o;
        o.ok = report_pass(rep) && rep["metrics"]["moments"] == want;
        o.detail = "c=2 gives " + rep["metrics"]["moments"].dump();
        return o;
    });

    criteria.emplace_back("cumulant-cyclicity", [] {
        json rep = run_config(R"({"scenario": "cumulants", "check": "cyclicity", "order": 6})");
        Outcome o;
        o.ok = report_pass(rep);
        o.detail = std::to_string(rep["metrics"]["rotations_checked"].get<long long>()) +
                   " rotations, exact";
        return o;
    });

    criteria.emplace_back("krawczyk-speicher-products", [] {
        json rep = run_config(
            R"({"scenario": "cumulants", "check": "products", "count": 50, "order": 6,
                "seed": 1})");
        Outcome o;
        o.ok = report_pass(rep);
        o.detail = "50 random regroupings, exact";
        return o;
    });

    criteria.emplace_back("zs-inverts-zr", [] {
        json rep = run_config(R"({"scenario": "transforms", "check": "rs-identity",
                                  "order": 8})");
        Outcome o;
        o.ok = report_pass(rep);
        o.detail = "order 8, free-poisson(1), free-poisson(2), two-atom, exact";
        return o;
    });

    criteria.emplace_back("s-transform-multiplicativity", [] {
        json mp = run_config(R"({
            "scenario": "verify-smult", "order": 6,
            "a": {"law": "free-poisson", "c": 1}, "b": {"law": "free-poisson", "c": 1}})");
        json dl = run_config(R"({
            "scenario": "verify-smult", "order": 6,
            "a": {"law": "delta", "at": 2},
            "b": {"law": "discrete", "atoms": [1, 2], "weights": [1, 1]}})");
        json ta = run_config(R"({
            "scenario": "verify-smult", "order": 6,
            "a": {"law": "discrete", "atoms": [1, 2], "weights": [1, 1]},
            "b": {"law": "discrete", "atoms": [1, 3], "weights": ["1/4", "3/4"]}})");
        Outcome o;
        bool heads = mp["metrics"]["product_moments"][0] == "1" &&
                     mp["metrics"]["product_moments"][1] == "3";
        o.ok = report_pass(mp) && report_pass(dl) && report_pass(ta) && heads;
        o.detail = "MP(1) x MP(1) -> m1=" + mp["metrics"]["product_moments"][0].dump() +
                   ", m2=" + mp["metrics"]["product_moments"][1].dump() +
                   "; delta and two-atom cases exact to order 6";
        return o;
    });

    criteria.emplace_back("s-at-minus-one-mean-inverse", [] {
        json rep = run_config(R"({"scenario": "transforms", "check": "s-at-minus-one"})");
        Outcome o;
        o.ok = report_pass(rep);
        o.detail = "limit " + num(rep["metrics"]["two-atom-half"]["limit"].get<double>()) +
                   " vs 3/4 within 1e-8; atom at 0 diverges";
        return o;
    });

    criteria.emplace_back("inverse-law-identities", [] {
        json rep = run_config(R"({"scenario": "transforms", "check": "inverse-symmetry"})");
        Outcome o;
        o.ok = report_pass(rep);
        o.detail = "psi and S reciprocal identities on s in {0.1..0.9}, error <= 1e-8";
        return o;
    });

    criteria.emplace_back("r-diagonality-checker", [] {
        json rep = run_config(R"({"scenario": "cumulants", "check": "rdiagonal", "order": 8})");
        Outcome o;
        o.ok = report_pass(rep);
        o.detail = "haar passes to order 8, u+1 flagged at order 1, circular passes";
        return o;
    });

    criteria.emplace_back("balanced-word-freeness", [] {
        json rep = run_config(
            R"({"scenario": "cumulants", "check": "balanced-freeness", "order": 6})");
        Outcome o;
        o.ok = report_pass(rep);
        o.detail = "mixed cumulants vanish to order 6, haar and circular";
        return o;
    });

    criteria.emplace_back("matrix-cumulant-lift", [] {
        json rep = run_config(
            R"({"scenario": "cumulants", "check": "matrix-lift", "N": 2, "order": 3,
                "count": 20, "seed": 1})");
        Outcome o;
        o.ok = report_pass(rep);
        o.detail = "20 random decorated words, N=2, order <= 3, exact";
        return o;
    });

    criteria.emplace_back("entry-cumulant-trichotomy", [] {
        json rep = run_config(R"({"scenario": "verify-dh", "check": "entry-rule"})");
        Outcome o;
        o.ok = report_pass(rep);
        o.detail = std::to_string(rep["metrics"]["cases"].get<long long>()) +
                   " constrained sums, N <= 3, n <= 3, c in {1,2}, exact";
        return o;
    });

    criteria.emplace_back("triangular-square-root", [] {
        json rep = run_config(
            R"({"scenario": "verify-dh", "check": "tri-sqrt", "count": 50, "seed": 1})");
        Outcome o;
        o.ok = report_pass(rep);
        o.detail = "residual " + num(rep["metrics"]["max_relative_residual"].get<double>()) +
                   " <= 1e-10 on " + std::to_string(rep["metrics"]["instances"].get<long long>()) +
                   " instances; zeros exact; hand case matches";
        return o;
    });

    criteria.emplace_back("dykema-haagerup-moments", [] {
        json rep = run_config(
            R"({"scenario": "verify-dh", "c": 1, "N": 2, "m": 256, "trials": 20, "seed": 7})");
        Outcome o;
        o.ok = report_pass(rep);
        o.detail = "trace moments vs 1,2,5,14 within 3 SE at c=1, N=2, m=256";
        return o;
    });

    // one matrix batch feeds the next three lines
    criteria.emplace_back("circular-law-radial-ks", [] {
        json rep = run_config(
            R"({"scenario": "verify-annuli", "ensemble": "ginibre", "m": 512, "trials": 20,
                "seed": 1, "ks_threshold": 0.03})");
        Outcome o;
        o.ok = row_pass(rep, "radial-ks");
        o.detail = "KS " + num(row_value(rep, "radial-ks")) + " <= 0.03 at m=512";
        return o;
    });

    auto ring = std::make_shared<json>();
    criteria.emplace_back("single-ring-radial-law", [ring] {
        *ring = run_config(
            R"({"scenario": "verify-annuli", "ensemble": "biinvariant",
                "xx": {"law": "free-poisson", "c": 2}, "m": 512, "trials": 20, "seed": 1,
                "projection": true})");
        Outcome o;
        o.ok = row_pass(*ring, "radial-ks") && row_pass(*ring, "inner-radius") &&
               row_pass(*ring, "outer-radius");
        o.detail = "KS " + num(row_value(*ring, "radial-ks")) + " <= 0.05; radii off by (" +
                   num(row_value(*ring, "inner-radius")) + ", " +
                   num(row_value(*ring, "outer-radius")) + ") <= 0.05 of (1, sqrt 2)";
        return o;
    });

    criteria.emplace_back("annuli-projection-split", [ring] {
        Outcome o;
        if (ring->is_null()) {
            o.detail = "skipped: single-ring batch unavailable";
            return o;
        }
        bool rank_ok = row_pass(*ring, "rank-fraction-at-first-cut");
        bool stray_ok = row_pass(*ring, "stray-fraction");
        o.ok = rank_ok && stray_ok;
        o.detail = "rank fraction off by " +
                   num(row_value(*ring, "rank-fraction-at-first-cut")) +
                   " <= 0.05 at R1 = sqrt 1.5; strays " +
                   num(100.0 * row_value(*ring, "stray-fraction")) + "% vs <= 2%";
        return o;
    });

    criteria.emplace_back("freeness-trend", [] {
        json rep = run_config(
            R"({"scenario": "freeness-mc", "c": 2, "m": 64, "m2": 256, "trials": 20,
                "order": 3, "bootstrap": 200, "seed": 1})");
        Outcome o;
        o.ok = report_pass(rep);
        const json& d = rep["metrics"]["diagnostics"];
        o.detail = "max mixed cumulant " + num(d[0]["max_abs_mixed_cumulant"].get<double>()) +
                   " at m=64 -> " + num(d[1]["max_abs_mixed_cumulant"].get<double>()) +
                   " at m=256";
        return o;
    });

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o = timed(criteria[i].second);
        if (!o.ok) ++failed;
        std::printf("[%s] %02zu %s: %s (%.1f s)\n", o.ok ? "PASS" : "FAIL", i + 1,
                    criteria[i].first.c_str(), o.detail.c_str(), o.seconds);
        std::fflush(stdout);
    }
    std::printf("acceptance: %zu/%zu criteria passed\n", criteria.size() - failed,
                criteria.size());
    return failed;
}
