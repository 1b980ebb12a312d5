#include "cirlab/campaign_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace cirlab {

using nlohmann::json;

namespace {

std::string iso8601(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm utc{};
    gmtime_r(&t, &utc);
    std::ostringstream os;
    os << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::string_view functional_name(ErrorFunctional f) {
    return f == ErrorFunctional::Terminal ? "terminal" : "max_over_nodes";
}

std::string_view reference_name(ReferenceKind r) {
    return r == ReferenceKind::MilsteinFine ? "milstein" : "exact_sampler";
}

template <class T>
T get_or(const json& doc, const char* key, T fallback) {
    if (!doc.contains(key)) return fallback;
    return doc.at(key).get<T>();
}

Candidate parse_candidate(const json& entry, const json& controllers) {
    if (entry.is_string()) {
        const SchemeId id = parse_scheme(entry.get<std::string>());
        const auto name = std::string(to_string(id));
        if (controllers.contains(name)) {
            return make_candidate(id, parse_controller(controllers.at(name).get<std::string>()));
        }
        return make_candidate(id);
    }
    if (!entry.is_object() || !entry.contains("scheme")) {
        throw std::invalid_argument("schemes entries must be names or objects with \"scheme\"");
    }
    const SchemeId id = parse_scheme(entry.at("scheme").get<std::string>());
    Candidate c = entry.contains("controller")
                      ? make_candidate(id, parse_controller(entry.at("controller").get<std::string>()))
                      : make_candidate(id);
    if (entry.contains("label")) c.label = entry.at("label").get<std::string>();
    return c;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string results_csv(std::span<const ErrorRow> rows) {
    std::string out = std::string(kResultsHeader) + "\n";
    for (const ErrorRow& r : rows) {
        out += r.scheme + "," + format_double(r.sigma) + "," + format_double(r.dt_max) + "," +
               format_double(r.l1) + "," + format_double(r.l1_stderr) + "," +
               format_double(r.l2) + "," + format_double(r.l2_stderr) + "," +
               format_double(r.avg_dt) + "," + format_double(r.soft_zero_fraction) + "," +
               std::to_string(r.num_paths) + "," + r.status + "\n";
    }
    return out;
}

std::string rates_csv(std::span<const RateRow> rates) {
    std::string out = std::string(kRatesHeader) + "\n";
    for (const RateRow& r : rates) {
        out += r.scheme + "," + format_double(r.sigma) + "," + r.norm + "," +
               format_double(r.fit.slope) + "," + format_double(r.fit.slope_stderr) + "," +
               format_double(r.fit.intercept) + "\n";
    }
    return out;
}

ExperimentConfig config_from_json(const json& doc) {
    static const char* const kKnown[] = {
        "params",    "sigma_list",  "schemes", "controllers",      "dt_ladder",
        "dt_ref",    "num_paths",   "num_batches", "seed",         "rho",
        "output",    "error_functional", "reference", "average_step_mode", "max_steps",
        "preset"};
    if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
            throw std::invalid_argument("unknown config field: " + key);
        }
    }

    try {
        ExperimentConfig cfg;
        const std::string preset = get_or<std::string>(doc, "preset", "desk");
        cfg.dt_ref = preset_dt_ref(preset);
        cfg.dt_ladder = preset_ladder(preset);

        if (doc.contains("params")) {
            const json& p = doc.at("params");
            cfg.params.kappa = get_or(p, "kappa", cfg.params.kappa);
            cfg.params.theta = get_or(p, "theta", cfg.params.theta);
            cfg.params.sigma = get_or(p, "sigma", cfg.params.sigma);
            cfg.params.x0 = get_or(p, "x0", cfg.params.x0);
            cfg.params.horizon = get_or(p, "horizon", cfg.params.horizon);
        }
        cfg.sigma_list = get_or(doc, "sigma_list", cfg.sigma_list);
        const json controllers = doc.value("controllers", json::object());
        if (doc.contains("schemes")) {
            for (const json& entry : doc.at("schemes")) {
                cfg.candidates.push_back(parse_candidate(entry, controllers));
            }
        }
        cfg.dt_ladder = get_or(doc, "dt_ladder", cfg.dt_ladder);
        cfg.dt_ref = get_or(doc, "dt_ref", cfg.dt_ref);
        cfg.num_paths = get_or(doc, "num_paths", cfg.num_paths);
        cfg.num_batches = get_or(doc, "num_batches", cfg.num_batches);
        cfg.seed = get_or(doc, "seed", cfg.seed);
        cfg.rho = get_or(doc, "rho", cfg.rho);
        cfg.output = get_or(doc, "output", cfg.output);
        cfg.average_step_mode = get_or(doc, "average_step_mode", cfg.average_step_mode);
        cfg.max_steps = get_or(doc, "max_steps", cfg.max_steps);

        const std::string functional = get_or<std::string>(doc, "error_functional", "terminal");
        if (functional == "terminal") {
            cfg.functional = ErrorFunctional::Terminal;
        } else if (functional == "max_over_nodes") {
            cfg.functional = ErrorFunctional::MaxOverNodes;
        } else {
            throw std::invalid_argument("unknown error_functional: " + functional);
        }
        const std::string reference = get_or<std::string>(doc, "reference", "milstein");
        if (reference == "milstein") {
            cfg.reference = ReferenceKind::MilsteinFine;
        } else if (reference == "exact_sampler") {
            cfg.reference = ReferenceKind::ExactSampler;
        } else {
            throw std::invalid_argument("unknown reference: " + reference);
        }
        return cfg;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("malformed config: ") + e.what());
    }
}

json config_to_json(const ExperimentConfig& cfg) {
    json schemes = json::array();
    for (const Candidate& c : cfg.candidates) {
        schemes.push_back({{"scheme", to_string(c.scheme)},
                           {"controller", to_string(c.controller)},
                           {"label", c.label}});
    }
    return {
        {"params",
         {{"kappa", cfg.params.kappa},
          {"theta", cfg.params.theta},
          {"sigma", cfg.params.sigma},
          {"x0", cfg.params.x0},
          {"horizon", cfg.params.horizon}}},
        {"sigma_list", cfg.sigma_list},
        {"schemes", schemes},
        {"dt_ladder", cfg.dt_ladder},
        {"dt_ref", cfg.dt_ref},
        {"num_paths", cfg.num_paths},
        {"num_batches", cfg.num_batches},
        {"seed", cfg.seed},
        {"rho", cfg.rho},
        {"output", cfg.output},
        {"error_functional", functional_name(cfg.functional)},
        {"reference", reference_name(cfg.reference)},
        {"average_step_mode", cfg.average_step_mode},
        {"max_steps", cfg.max_steps},
    };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::invalid_argument("cannot parse " + path.string() + ": " + e.what());
    }
    return config_from_json(doc);
}

std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char ch : config_to_json(cfg).dump()) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json manifest_json(const ExperimentConfig& cfg, const CampaignResult& result,
                   const RunClock& clock, int threads) {
    const double wall =
        std::chrono::duration<double>(clock.finished - clock.started).count();
    return {
        {"tool", "cirlab"},
        {"version", CIRLAB_VERSION},
        {"compiler", __VERSION__},
        {"seed", cfg.seed},
        {"config_hash", config_hash(cfg)},
        {"config", config_to_json(cfg)},
        {"started_at", iso8601(clock.started)},
        {"finished_at", iso8601(clock.finished)},
        {"wall_seconds", wall},
        {"threads", threads},
        {"rows", result.rows.size()},
        {"rate_rows", result.rates.size()},
        {"warnings", result.warnings},
        {"annotations", result.annotations},
    };
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

CampaignFiles write_campaign(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                             const CampaignResult& result, const RunClock& clock, int threads) {
    std::filesystem::create_directories(dir);
    CampaignFiles files{dir / "results.csv", dir / "rates.csv", dir / "manifest.json"};
    write_text_file(files.results, results_csv(result.rows));
    write_text_file(files.rates, rates_csv(result.rates));
    write_text_file(files.manifest, manifest_json(cfg, result, clock, threads).dump(2) + "\n");
    return files;
}

}  // namespace cirlab
