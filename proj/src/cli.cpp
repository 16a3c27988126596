#include "steinshrink/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "steinshrink/errors.hpp"
#include "steinshrink/loss.hpp"
#include "steinshrink/reftable.hpp"
#include "steinshrink/verify.hpp"

namespace steinshrink::cli {

namespace {

using nlohmann::json;

std::uint64_t parse_seed(const std::string& text, const char* what) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
        v = std::stoull(text, &used, 0);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) {
        throw ConfigError(fmt::format("{}: '{}' is not an unsigned 64-bit integer", what, text));
    }
    return v;
}

template <class T>
T get_as(const json& doc, const char* key) {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(fmt::format("config key '{}' has the wrong type", key));
    }
}

Index get_positive(const json& doc, const char* key) {
    const json& v = doc.at(key);
    if (!v.is_number_integer()) throw ConfigError(fmt::format("config key '{}' must be an integer", key));
    const auto i = v.get<long long>();
    if (i < 1) throw ConfigError(fmt::format("config key '{}' must be >= 1", key));
    return static_cast<Index>(i);
}

// Opens `path` for writing, or returns the fallback stream for "" and "-".
class Sink {
public:
    Sink(const std::optional<std::string>& path, std::ostream& fallback) : out_(&fallback) {
        if (path && !path->empty() && *path != "-") {
            file_.open(*path, std::ios::binary | std::ios::trunc);
            if (!file_) throw std::ios_base::failure("cannot open '" + *path + "' for writing");
            out_ = &file_;
        }
    }
    std::ostream& stream() { return *out_; }
    void finish(const std::string& what) {
        out_->flush();
        if (!*out_) throw std::ios_base::failure("write failed for " + what);
    }

private:
    std::ofstream file_;
    std::ostream* out_;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::ios_base::failure("cannot read '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::optional<std::string>& seed_override) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    static const std::set<std::string> known = {
        "scenario", "r", "factor_seed", "p", "n", "replications", "seed", "estimators",
        "solver_tol", "solver_max_iter", "loss", "out", "format", "workers"};
    for (const auto& item : doc.items()) {
        if (!known.count(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");
    }
    for (const char* key : {"scenario", "p", "n", "seed", "estimators"}) {
        if (!doc.contains(key)) throw ConfigError(fmt::format("config key '{}' is required", key));
    }

    RunConfig rc;
    ExperimentConfig& ex = rc.experiment;
    const auto scenario = get_as<std::string>(doc, "scenario");
    if (scenario == "case1" || scenario == "case2" || scenario == "case3") {
        if (doc.contains("r") || doc.contains("factor_seed")) {
            throw ConfigError("'r' and 'factor_seed' apply only to the singular scenario");
        }
        ex.scenario = ScenarioSpec::benchmark(scenario.back() - '0');
    } else if (scenario == "singular") {
        if (!doc.contains("r")) throw ConfigError("singular scenario needs 'r'");
        std::uint64_t factor_seed = 0;
        if (doc.contains("factor_seed")) {
            if (!doc["factor_seed"].is_number_unsigned()) throw ConfigError("'factor_seed' must be unsigned");
            factor_seed = doc["factor_seed"].get<std::uint64_t>();
        }
        ex.scenario = ScenarioSpec::singular(get_positive(doc, "r"), factor_seed);
    } else {
        throw ConfigError("unknown scenario '" + scenario + "' (case1|case2|case3|singular)");
    }
    ex.p = get_positive(doc, "p");
    ex.n = get_positive(doc, "n");
    if (doc.contains("replications")) {
        if (!doc["replications"].is_number_integer()) throw ConfigError("'replications' must be an integer");
        const auto reps = doc["replications"].get<long long>();
        if (reps < 2) throw ConfigError(fmt::format("replications must be >= 2 (got {})", reps));
        ex.replications = static_cast<Index>(reps);
    }
    if (!doc["seed"].is_number_unsigned()) throw ConfigError("'seed' must be an unsigned integer");
    ex.master_seed = doc["seed"].get<std::uint64_t>();
    if (seed_override) ex.master_seed = parse_seed(*seed_override, "STEINSHRINK_SEED");

    if (!doc["estimators"].is_array()) throw ConfigError("'estimators' must be an array of labels");
    for (const auto& e : doc["estimators"]) {
        if (!e.is_string()) throw ConfigError("'estimators' must be an array of labels");
        ex.estimators.push_back(e.get<std::string>());
    }
    if (doc.contains("solver_tol")) {
        if (!doc["solver_tol"].is_number()) throw ConfigError("'solver_tol' must be a number");
        ex.solver_tol = doc["solver_tol"].get<double>();
    }
    if (doc.contains("solver_max_iter")) ex.solver_max_iter = static_cast<int>(get_positive(doc, "solver_max_iter"));

    ex.loss = scenario == "singular" ? LossEvaluator::Mode::Singular : LossEvaluator::Mode::Full;
    if (doc.contains("loss")) {
        const auto loss = get_as<std::string>(doc, "loss");
        if (loss == "full") {
            ex.loss = LossEvaluator::Mode::Full;
        } else if (loss == "singular") {
            ex.loss = LossEvaluator::Mode::Singular;
        } else {
            throw ConfigError("loss must be 'full' or 'singular'");
        }
    }
    if (doc.contains("out")) rc.out = get_as<std::string>(doc, "out");
    if (doc.contains("format")) rc.format = get_as<std::string>(doc, "format");
    if (rc.format != "csv" && rc.format != "json") throw ConfigError("format must be 'csv' or 'json'");
    if (doc.contains("workers")) ex.workers = static_cast<unsigned>(get_positive(doc, "workers"));

    validate_config(ex);
    return rc;
}

int cmd_simulate(const SimulateOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        std::optional<std::string> seed_env;
        if (const char* env = std::getenv("STEINSHRINK_SEED")) seed_env = env;
        RunConfig rc = parse_run_config(read_file(opts.config_path), seed_env);
        if (opts.out) rc.out = *opts.out;
        if (opts.format) {
            if (*opts.format != "csv" && *opts.format != "json") {
                err << "error: --format must be csv or json\n";
                return kUsageError;
            }
            rc.format = *opts.format;
        }
        if (opts.workers) {
            if (*opts.workers < 1) {
                err << "error: --workers must be >= 1\n";
                return kUsageError;
            }
            rc.experiment.workers = *opts.workers;
        }
        const RiskReport report = simulate_risk(rc.experiment);
        Sink sink(rc.out, out);
        if (rc.format == "json") {
            write_json(report, sink.stream(), opts.timing);
        } else {
            write_csv(report, sink.stream());
        }
        sink.finish(rc.out.empty() ? "stdout" : rc.out);
        if (!report.valid) {
            err << "warning: an estimator failed on 1% or more of the replications; report marked invalid\n";
        }
        return kOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const SimulationError& e) {
        err << "simulation error: " << e.what() << '\n';
        return kSimulationError;
    } catch (const std::ios_base::failure& e) {
        err << "i/o error: " << e.what() << '\n';
        return kDataError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
}

int cmd_exact_risk(long n, long r, std::ostream& out, std::ostream& err) {
    if (n < 1 || r < 1) {
        err << "error: --n and --r must be >= 1\n";
        return kUsageError;
    }
    const ExactRisk bc = exact_risk_bc(static_cast<int>(n), static_cast<int>(r));
    const ExactRisk js = exact_risk_js(static_cast<int>(n), static_cast<int>(r));
    out << "n=" << n << " r=" << r << " q=" << bc.q << " m=" << bc.m << '\n';
    out << "BC " << format_sig6(bc.value) << '\n';
    out << "JS " << format_sig6(js.value) << '\n';
    return kOk;
}

Matrix read_matrix_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream fields(line);
        std::string field;
        std::size_t col_no = 0;
        while (std::getline(fields, field, ',')) {
            ++col_no;
            const auto first = field.find_first_not_of(" \t");
            const auto last = field.find_last_not_of(" \t");
            const std::string token = first == std::string::npos ? "" : field.substr(first, last - first + 1);
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(token, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (token.empty() || used != token.size() || !std::isfinite(v)) {
                throw ValidationError(fmt::format("row {}, column {}: '{}' is not a finite number", row_no,
                                                  col_no, token));
            }
            row.push_back(v);
        }
        if (line.back() == ',') {
            throw ValidationError(fmt::format("row {}, column {}: empty field", row_no, col_no + 1));
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ValidationError(fmt::format("row {}: expected {} columns, found {}", row_no,
                                              rows.front().size(), row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError("data file has no rows");
    Matrix x(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index j = 0; j < x.cols(); ++j) x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return x;
}

int cmd_estimate(const EstimateOptions& opts, std::ostream& out, std::ostream& err) {
    std::string label = opts.estimator;
    if (opts.b) {
        if (label.find('(') != std::string::npos) {
            err << "error: --b given but the estimator label already carries an argument\n";
            return kUsageError;
        }
        label += "(" + *opts.b + ")";
    }
    EstimatorId id;
    try {
        id = parse_estimator(label);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }

    Matrix x;
    try {
        std::ifstream in(opts.data_path);
        if (!in) throw std::ios_base::failure("cannot read '" + opts.data_path + "'");
        x = read_matrix_csv(in);
    } catch (const ValidationError& e) {
        err << "parse error in " << opts.data_path << ": " << e.what() << '\n';
        return kDataError;
    } catch (const std::ios_base::failure& e) {
        err << "i/o error: " << e.what() << '\n';
        return kDataError;
    }

    const Index p = x.rows();
    const Index n = x.cols();
    const Index r = opts.rank ? static_cast<Index>(*opts.rank) : p;
    if (r < 1 || r > p) {
        err << fmt::format("error: --rank must lie in [1, p = {}]\n", p);
        return kUsageError;
    }
    try {
        check_estimator_preconditions(id, p, n, r);
        const SampleContext ctx = make_context(std::move(x), r);
        const Estimate est = evaluate(id, ctx);

        Sink sink(opts.out, out);
        const Matrix& m = est.matrix.matrix();
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j) {
                if (j) sink.stream() << ',';
                sink.stream() << fmt::format("{:.17g}", m(i, j));
            }
            sink.stream() << '\n';
        }
        sink.finish(opts.out.value_or("stdout"));

        nlohmann::ordered_json diag;
        diag["estimator"] = est.label;
        diag["p"] = p;
        diag["n"] = n;
        diag["r"] = r;
        diag["declared_rank"] = est.declared_rank;
        diag["b"] = est.b ? json(*est.b) : json(nullptr);
        diag["lambda"] = est.lambda ? json(*est.lambda) : json(nullptr);
        diag["warnings"] = est.warnings;
        err << diag.dump() << '\n';
        return kOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::ios_base::failure& e) {
        err << "i/o error: " << e.what() << '\n';
        return kDataError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
}

int cmd_verify(const std::string& suite, std::uint64_t seed, std::ostream& out, std::ostream& err) {
    std::vector<std::string> names;
    if (suite == "all") {
        names = suite_names();
    } else {
        bool known = false;
        for (const auto& s : suite_names()) known = known || s == suite;
        if (!known) {
            err << "error: unknown suite '" << suite << "'; available: all";
            for (const auto& s : suite_names()) err << ' ' << s;
            err << '\n';
            return kUsageError;
        }
        names.push_back(suite);
    }
    bool all_pass = true;
    for (const auto& name : names) {
        const SuiteResult res = run_suite(name, seed);
        out << (res.pass() ? "PASS " : "FAIL ") << name << '\n';
        for (const auto& c : res.checks) {
            out << (c.pass ? "  ok    " : "  FAIL  ") << c.name;
            if (!c.detail.empty()) out << " | " << c.detail;
            out << '\n';
        }
        all_pass = all_pass && res.pass();
    }
    return all_pass ? kOk : kCheckFailed;
}

int cmd_ref_table(const std::string& selector, long replications, std::uint64_t seed, unsigned workers,
               std::ostream& out, std::ostream& err) {
    if (replications < 2 || workers < 1) {
        err << "error: --replications must be >= 2 and --workers >= 1\n";
        return kUsageError;
    }
    std::vector<ReferenceCell> cells;
    try {
        cells = select_reference_cells(selector);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
    try {
        const auto rows = reference_table_suite(cells, replications, seed, workers);
        write_reference_csv(rows, out);
        std::size_t passed = 0;
        for (const auto& r : rows) passed += r.pass;
        err << passed << "/" << rows.size() << " within tolerance\n";
        return passed == rows.size() ? kOk : kCheckFailed;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const SimulationError& e) {
        err << "simulation error: " << e.what() << '\n';
        return kSimulationError;
    }
}

}  // namespace steinshrink::cli
