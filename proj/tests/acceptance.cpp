// Acceptance runner: `acceptance <criterion>` (1-5) or no argument for all.
// Prints one PASS/FAIL line per criterion, preceded by its detail lines.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "steinshrink/cli.hpp"
#include "steinshrink/reftable.hpp"
#include "steinshrink/verify.hpp"

using namespace steinshrink;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20241016;

bool report_suite(const SuiteResult& res) {
    for (const auto& c : res.checks) {
        std::cout << fmt::format("    {} {}: {}\n", c.pass ? "ok  " : "FAIL", c.name, c.detail);
    }
    return res.pass();
}

bool criterion_exact_risk() {
    const std::pair<long, double> reference[] = {{50, 37.096}, {100, 72.0995}, {150, 106.959}};
    bool ok = true;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& [n, expected] : reference) {
        std::ostringstream out;
        std::ostringstream err;
        const int rc = cli::cmd_exact_risk(n, n, out, err);
        const auto pos = out.str().find("JS ");
        const double got = pos == std::string::npos ? NAN : std::stod(out.str().substr(pos + 3));
        const bool pass = rc == 0 && std::abs(got - expected) <= 5e-3;
        std::cout << fmt::format("    {} n = r = {}: JS {} (reference {})\n", pass ? "ok  " : "FAIL", n, got,
                                 expected);
        ok = ok && pass;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << fmt::format("    {} runtime {:.2g} s (limit 1 s)\n", secs < 1.0 ? "ok  " : "FAIL", secs);
    return ok && secs < 1.0;
}

bool criterion_reference_table() {
    const auto rows = reference_table_suite(select_reference_cells("desk"), 2000, kSeed, 1);
    std::size_t passed = 0;
    for (const auto& r : rows) {
        const double tol = 4.0 * (r.ref_se + r.se) + 0.05;
        std::cout << fmt::format("    {} case {} p={} n={} {:<10} ours {:>9.4f} ({:.3f})  reference {:>6.1f} ({:.2f})"
                                 "  |diff| {:.3f} tol {:.3f}\n",
                                 r.pass ? "ok  " : "FAIL", r.case_id, r.p, r.n, r.estimator, r.mean, r.se,
                                 r.ref_mean, r.ref_se, std::abs(r.mean - r.ref_mean), tol);
        passed += r.pass;
    }
    std::cout << fmt::format("    {}/{} cells within tolerance\n", passed, rows.size());
    return passed == rows.size();
}

bool criterion_dominance() { return report_suite(run_suite("dominance", kSeed)); }

bool criterion_properties() {
    bool ok = true;
    for (const char* name : {"pinv", "lambda", "pade", "lq-moments", "steinhaff", "digamma", "equivariance"}) {
        const SuiteResult res = run_suite(name, kSeed);
        std::cout << fmt::format("  suite {}: {}\n", name, res.pass() ? "PASS" : "FAIL");
        ok = report_suite(res) && ok;
    }
    return ok;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

bool criterion_determinism() {
    const fs::path dir = fs::temp_directory_path() / "steinshrink_acceptance";
    fs::create_directories(dir);
    const std::vector<std::pair<std::string, std::string>> configs = {
        {"case2", R"json({"scenario": "case2", "p": 50, "n": 15, "replications": 2000, "seed": 4242,
            "estimators": ["EB(b0)", "mST(b0)", "EB(b1)", "mST(b1)", "EB(bstar)", "SH(b0)", "mJS(b0)"]})json"},
        {"singular", R"json({"scenario": "singular", "r": 8, "factor_seed": 3, "p": 12, "n": 3,
            "replications": 2000, "seed": 99, "estimators": ["BC", "JS", "ST", "EB(b0)", "SH(b0)", "mST(b1)"]})json"},
    };
    bool ok = true;
    for (const auto& [name, text] : configs) {
        const fs::path cfg = dir / (name + ".json");
        std::ofstream(cfg, std::ios::binary) << text;
        std::vector<std::string> outputs;
        for (unsigned workers : {1u, 8u}) {
            for (int run = 0; run < 2; ++run) {
                const fs::path out = dir / fmt::format("{}_w{}_{}.csv", name, workers, run);
                cli::SimulateOptions opts;
                opts.config_path = cfg.string();
                opts.out = out.string();
                opts.workers = workers;
                std::ostringstream sink;
                std::ostringstream err;
                if (cli::cmd_simulate(opts, sink, err) != cli::kOk) {
                    std::cout << "    FAIL " << name << ": " << err.str();
                    return false;
                }
                outputs.push_back(slurp(out));
            }
        }
        bool same = !outputs.front().empty();
        for (const auto& o : outputs) same = same && o == outputs.front();
        std::cout << fmt::format("    {} {}: 4 runs (1 and 8 workers, twice each), {} bytes, {}\n",
                                 same ? "ok  " : "FAIL", name, outputs.front().size(),
                                 same ? "byte-identical" : "outputs differ");
        ok = ok && same;
    }
    return ok;
}

struct Criterion {
    int id;
    const char* title;
    bool (*run)();
};

const Criterion kCriteria[] = {
    {1, "exact JS risk at n = r = 50, 100, 150 within 5e-3", criterion_exact_risk},
    {2, "reference risk table, nine desk cells x five estimators", criterion_reference_table},
    {3, "dominance verdicts from paired differences", criterion_dominance},
    {4, "property suites", criterion_properties},
    {5, "byte-identical CSV at 1 and 8 workers", criterion_determinism},
};

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) {
        only = std::atoi(argv[1]);
        if (only < 1 || only > 5) {
            std::cerr << "usage: acceptance [1-5]\n";
            return 64;
        }
    }
    bool all = true;
    for (const auto& c : kCriteria) {
        if (only && c.id != only) continue;
        std::cout << "criterion " << c.id << ": " << c.title << '\n';
        const auto start = std::chrono::steady_clock::now();
        const bool pass = c.run();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << fmt::format("[{}] criterion {}: {} ({:.1f} s)\n", pass ? "PASS" : "FAIL", c.id, c.title, secs);
        all = all && pass;
    }
    return all ? 0 : 1;
}
