#include "steinshrink/reftable.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "steinshrink/errors.hpp"
#include "steinshrink/risksim.hpp"

namespace steinshrink {

namespace {

ReferenceCell cell(int c, Index p, Index n, std::array<double, 10> v) {
    ReferenceCell out{c, p, n, {}, {}};
    for (std::size_t k = 0; k < 5; ++k) {
        out.mean[k] = v[2 * k];
        out.se[k] = v[2 * k + 1];
    }
    return out;
}

}  // namespace

const std::vector<ReferenceCell>& reference_cells() {
    // mean, se pairs in kReferenceEstimators order
    static const std::vector<ReferenceCell> cells = {
        cell(1, 50, 5, {28.6, 0.07, 28.5, 0.08, 18.4, 0.08, 18.2, 0.09, 113.4, 0.10}),
        cell(1, 50, 15, {5.0, 0.01, 2.7, 0.02, 4.8, 0.01, 2.0, 0.02, 86.2, 0.06}),
        cell(1, 50, 25, {24.3, 0.08, 8.7, 0.02, 26.5, 0.10, 9.6, 0.03, 67.3, 0.06}),
        cell(1, 100, 5, {115.8, 0.13, 115.8, 0.13, 82.4, 0.16, 82.3, 0.16, 301.1, 0.14}),
        cell(1, 100, 25, {13.3, 0.02, 10.8, 0.03, 10.4, 0.02, 7.3, 0.03, 228.7, 0.07}),
        cell(1, 100, 50, {41.2, 0.08, 14.1, 0.02, 44.3, 0.09, 15.4, 0.02, 165.3, 0.06}),
        cell(1, 150, 5, {230.7, 0.16, 230.7, 0.16, 170.9, 0.22, 170.9, 0.22, 516.7, 0.18}),
        cell(1, 150, 40, {18.0, 0.02, 13.7, 0.03, 14.9, 0.01, 9.6, 0.03, 377.5, 0.06}),
        cell(1, 150, 75, {59.0, 0.07, 19.9, 0.02, 63.1, 0.08, 21.5, 0.02, 276.1, 0.06}),
        cell(2, 50, 5, {26.0, 0.07, 25.9, 0.08, 19.1, 0.07, 18.9, 0.08, 105.6, 0.12}),
        cell(2, 50, 15, {13.3, 0.02, 11.0, 0.01, 14.4, 0.03, 11.6, 0.02, 81.7, 0.07}),
        cell(2, 50, 25, {44.2, 0.13, 27.6, 0.06, 46.3, 0.14, 28.9, 0.07, 65.1, 0.06}),
        cell(2, 100, 5, {103.0, 0.14, 102.9, 0.14, 75.4, 0.17, 75.3, 0.17, 282.9, 0.17}),
        cell(2, 100, 25, {23.7, 0.01, 21.3, 0.01, 23.7, 0.01, 20.8, 0.01, 217.6, 0.08}),
        cell(2, 100, 50, {76.7, 0.12, 48.2, 0.06, 79.5, 0.13, 49.9, 0.06, 160.5, 0.06}),
        cell(2, 150, 5, {207.4, 0.18, 207.4, 0.18, 155.4, 0.23, 155.4, 0.23, 488.0, 0.21}),
        cell(2, 150, 40, {35.6, 0.01, 31.3, 0.01, 36.1, 0.01, 31.1, 0.01, 361.2, 0.08}),
        cell(2, 150, 75, {110.7, 0.11, 69.6, 0.06, 114.5, 0.12, 71.9, 0.06, 268.6, 0.06}),
        cell(3, 50, 5, {35.7, 0.02, 35.6, 0.02, 38.4, 0.08, 38.2, 0.07, 87.1, 0.14}),
        cell(3, 50, 15, {61.9, 0.17, 59.2, 0.16, 65.1, 0.20, 62.2, 0.18, 70.8, 0.09}),
        cell(3, 50, 25, {125.6, 0.33, 105.7, 0.27, 127.5, 0.34, 107.2, 0.28, 59.8, 0.07}),
        cell(3, 100, 5, {87.4, 0.11, 87.4, 0.11, 77.2, 0.08, 77.2, 0.08, 237.3, 0.21}),
        cell(3, 100, 25, {99.4, 0.12, 96.7, 0.12, 104.7, 0.15, 101.8, 0.14, 188.8, 0.10}),
        cell(3, 100, 50, {219.5, 0.31, 186.2, 0.25, 221.8, 0.32, 188.1, 0.26, 148.2, 0.07}),
        cell(3, 150, 5, {165.1, 0.18, 165.1, 0.18, 135.9, 0.17, 135.9, 0.17, 415.0, 0.26}),
        cell(3, 150, 40, {154.4, 0.13, 149.7, 0.12, 161.3, 0.16, 156.1, 0.14, 318.2, 0.10}),
        cell(3, 150, 75, {317.2, 0.31, 269.7, 0.25, 320.3, 0.31, 272.2, 0.26, 249.2, 0.07}),
    };
    return cells;
}

std::vector<ReferenceCell> select_reference_cells(const std::string& selector) {
    const auto& all = reference_cells();
    if (selector == "all") return all;
    std::vector<ReferenceCell> out;
    const auto find = [&](int c, Index p, Index n) {
        for (const auto& cell : all) {
            if (cell.case_id == c && cell.p == p && cell.n == n) return cell;
        }
        throw ValidationError(fmt::format("no reference cell case {} p={} n={}", c, p, n));
    };
    if (selector == "desk") {
        for (int c = 1; c <= 3; ++c) {
            out.push_back(find(c, 50, 15));
            out.push_back(find(c, 50, 25));
            out.push_back(find(c, 100, 25));
        }
        return out;
    }
    std::stringstream list(selector);
    std::string item;
    while (std::getline(list, item, ',')) {
        int c = 0;
        long p = 0;
        long n = 0;
        char tail = 0;
        if (std::sscanf(item.c_str(), "%d:%ld:%ld%c", &c, &p, &n, &tail) != 3) {
            throw ValidationError("bad cell selector '" + item + "' (want case:p:n)");
        }
        out.push_back(find(c, p, n));
    }
    if (out.empty()) throw ValidationError("empty cell selector");
    return out;
}

bool within_reference_tolerance(double ref_mean, double ref_se, double mean, double se) {
    return std::isfinite(mean) && std::abs(mean - ref_mean) <= 4.0 * (ref_se + se) + 0.05;
}

std::vector<ReferenceRow> reference_table_suite(const std::vector<ReferenceCell>& cells, Index replications,
                                    std::uint64_t seed, unsigned workers) {
    std::vector<ReferenceRow> rows;
    for (const auto& c : cells) {
        ExperimentConfig config;
        config.scenario = ScenarioSpec::benchmark(c.case_id);
        config.p = c.p;
        config.n = c.n;
        config.replications = replications;
        config.master_seed = seed;
        config.workers = workers;
        config.estimators.assign(kReferenceEstimators.begin(), kReferenceEstimators.end());
        const RiskReport report = simulate_risk(config);
        for (std::size_t k = 0; k < kReferenceEstimators.size(); ++k) {
            const EstimatorRisk& risk = report.estimators[k];
            ReferenceRow row;
            row.case_id = c.case_id;
            row.p = c.p;
            row.n = c.n;
            row.estimator = risk.label;
            row.ref_mean = c.mean[k];
            row.ref_se = c.se[k];
            row.mean = risk.mean_loss;
            row.se = risk.std_err;
            row.failures = risk.failures;
            row.pass = within_reference_tolerance(row.ref_mean, row.ref_se, row.mean, row.se);
            rows.push_back(row);
        }
    }
    return rows;
}

void write_reference_csv(const std::vector<ReferenceRow>& rows, std::ostream& out) {
    out << "case,p,n,estimator,ref_mean,ref_se,mean_loss,std_err,failures,verdict\n";
    for (const auto& r : rows) {
        out << r.case_id << ',' << r.p << ',' << r.n << ',' << r.estimator << ','
            << format_sig6(r.ref_mean) << ',' << format_sig6(r.ref_se) << ','
            << format_sig6(r.mean) << ',' << format_sig6(r.se) << ',' << r.failures << ','
            << (r.pass ? "PASS" : "FAIL") << '\n';
    }
}

}  // namespace steinshrink
