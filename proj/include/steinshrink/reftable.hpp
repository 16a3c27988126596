#pragma once

// Published simulated risks (Stein loss, 2000 replications) for the three
// diagonal scenarios, and a driver that re-simulates cells beside them.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "steinshrink/matdecomp.hpp"

namespace steinshrink {

inline constexpr std::array<const char*, 5> kReferenceEstimators = {
    "EB(b0)", "mST(b0)", "EB(b1)", "mST(b1)", "EB(bstar)"};

struct ReferenceCell {
    int case_id = 1;
    Index p = 0;
    Index n = 0;
    std::array<double, 5> mean{};
    std::array<double, 5> se{};
};

/// All 27 reference cells.
const std::vector<ReferenceCell>& reference_cells();

/// Selector: "desk" (cases 1-3 at (50,15), (50,25), (100,25)), "all", or a
/// comma-separated list of case:p:n triples. Throws ValidationError.
std::vector<ReferenceCell> select_reference_cells(const std::string& selector);

struct ReferenceRow {
    int case_id = 1;
    Index p = 0;
    Index n = 0;
    std::string estimator;
    double ref_mean = 0.0;
    double ref_se = 0.0;
    double mean = 0.0;
    double se = 0.0;
    Index failures = 0;
    bool pass = false;
};

/// |ours - reference| <= 4 (reference SE + our SE) + 0.05.
bool within_reference_tolerance(double ref_mean, double ref_se, double mean, double se);

std::vector<ReferenceRow> reference_table_suite(const std::vector<ReferenceCell>& cells, Index replications,
                                    std::uint64_t seed, unsigned workers = 1);

/// case,p,n,estimator,ref_mean,ref_se,mean_loss,std_err,failures,verdict
void write_reference_csv(const std::vector<ReferenceRow>& rows, std::ostream& out);

}  // namespace steinshrink
