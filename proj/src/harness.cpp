#include "mots/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

namespace mots {

namespace {

std::string format_double(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

std::vector<double> parse_numbers(const std::string& value, const std::string& key) {
    std::istringstream is(value);
    std::vector<double> out;
    double v = 0.0;
    while (is >> v) out.push_back(v);
    if (out.empty()) throw ConfigError("config: no numeric value for key " + key);
    return out;
}

double parse_number(const std::string& value, const std::string& key) {
    const auto numbers = parse_numbers(value, key);
    if (numbers.size() != 1) throw ConfigError("config: expected one value for key " + key);
    return numbers.front();
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config: expected true/false for key " + key);
}

}  // namespace

CampaignConfig::CampaignConfig() {
    gospa.position_dims = {0, 2};
    tgospa.position_dims = {0, 2};
}

void CampaignConfig::validate() const {
    scenario.validate();
    if (runs < 1) throw ConfigError("config: runs must be >= 1");
    if (smoother.particle_count < 1) throw ConfigError("config: particles must be >= 1");
    if (smoother.max_hypotheses < 1) throw ConfigError("config: max hypotheses must be >= 1");
    if (filter.max_components < 1) throw ConfigError("config: max components must be >= 1");
    if (filter.prune_threshold < 0.0 || filter.merge_threshold < 0.0) {
        throw ConfigError("config: reduction thresholds must be >= 0");
    }
}

CampaignConfig parse_config_text(const std::string& text) {
    std::map<std::string, std::string> entries;
    std::istringstream is(text);
    std::string line;
    int line_number = 0;
    while (std::getline(is, line)) {
        ++line_number;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: missing '=' on line " + std::to_string(line_number));
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("config: empty key or value on line " + std::to_string(line_number));
        }
        entries[key] = value;
    }

    CampaignConfig config;
    auto take = [&](const std::string& key) {
        auto it = entries.find(key);
        if (it == entries.end()) return std::optional<std::string>{};
        std::optional<std::string> value = it->second;
        entries.erase(it);
        return value;
    };

    // Birth mixture first: its size bounds the indexed keys below.
    if (auto v = take("scenario.birth_weights")) {
        const auto weights = parse_numbers(*v, "scenario.birth_weights");
        const GaussianComponent base = config.scenario.birth_intensity.components.front();
        config.scenario.birth_intensity.components.assign(weights.size(), base);
        for (std::size_t i = 0; i < weights.size(); ++i) {
            config.scenario.birth_intensity.components[i].weight = weights[i];
        }
    }
    if (auto v = take("scenario.birth_cov_diag")) {
        const auto diag = parse_numbers(*v, "scenario.birth_cov_diag");
        const Eigen::VectorXd d =
            Eigen::Map<const Eigen::VectorXd>(diag.data(), static_cast<Eigen::Index>(diag.size()));
        for (auto& c : config.scenario.birth_intensity.components) {
            c.covariance = d.asDiagonal();
            c.mean = Eigen::VectorXd::Zero(d.size());
        }
    }
    for (std::size_t i = 0; i < config.scenario.birth_intensity.size(); ++i) {
        if (auto v = take("scenario.birth_mean_" + std::to_string(i))) {
            const auto mean = parse_numbers(*v, "scenario.birth_mean");
            if (static_cast<Eigen::Index>(mean.size()) !=
                config.scenario.birth_intensity.components[i].mean.size()) {
                throw ConfigError("config: birth mean dimension mismatch");
            }
            config.scenario.birth_intensity.components[i].mean =
                Eigen::Map<const Eigen::VectorXd>(mean.data(),
                                                  static_cast<Eigen::Index>(mean.size()));
        }
    }

    if (auto v = take("scenario.object_count")) {
        const auto count = static_cast<std::size_t>(parse_number(*v, "scenario.object_count"));
        config.scenario.objects.resize(count);
    }
    for (std::size_t i = 0; i < config.scenario.objects.size(); ++i) {
        if (auto v = take("scenario.object_" + std::to_string(i))) {
            const auto numbers = parse_numbers(*v, "scenario.object");
            if (numbers.size() != 3) {
                throw ConfigError("config: object entries are 'birth death component'");
            }
            config.scenario.objects[i] = ObjectSpec{static_cast<int>(numbers[0]),
                                                    static_cast<int>(numbers[1]),
                                                    static_cast<int>(numbers[2])};
        }
    }

    if (auto v = take("scenario.steps")) config.scenario.steps = static_cast<int>(parse_number(*v, "scenario.steps"));
    if (auto v = take("scenario.sampling_period")) config.scenario.sampling_period = parse_number(*v, "scenario.sampling_period");
    if (auto v = take("scenario.process_noise_std")) config.scenario.sigma_q = parse_number(*v, "scenario.process_noise_std");
    if (auto v = take("scenario.survival_probability")) config.scenario.survival_probability = parse_number(*v, "scenario.survival_probability");
    if (auto v = take("scenario.measurement_noise_std")) config.scenario.sigma_r = parse_number(*v, "scenario.measurement_noise_std");
    if (auto v = take("scenario.detection_probability")) config.scenario.detection_probability = parse_number(*v, "scenario.detection_probability");
    if (auto v = take("scenario.clutter_rate")) config.scenario.clutter_rate = parse_number(*v, "scenario.clutter_rate");
    if (auto v = take("scenario.region")) {
        const auto box = parse_numbers(*v, "scenario.region");
        if (box.size() % 2 != 0 || box.empty()) {
            throw ConfigError("config: region is 'min_x max_x min_y max_y ...'");
        }
        const auto dims = static_cast<Eigen::Index>(box.size() / 2);
        config.scenario.region.lo.resize(dims);
        config.scenario.region.hi.resize(dims);
        for (Eigen::Index d = 0; d < dims; ++d) {
            config.scenario.region.lo(d) = box[static_cast<std::size_t>(2 * d)];
            config.scenario.region.hi(d) = box[static_cast<std::size_t>(2 * d + 1)];
        }
    }

    if (auto v = take("filter.prune_threshold")) config.filter.prune_threshold = parse_number(*v, "filter.prune_threshold");
    if (auto v = take("filter.merge_threshold")) config.filter.merge_threshold = parse_number(*v, "filter.merge_threshold");
    if (auto v = take("filter.max_components")) config.filter.max_components = static_cast<std::size_t>(parse_number(*v, "filter.max_components"));
    if (auto v = take("filter.gate_probability")) config.filter.gate_probability = parse_number(*v, "filter.gate_probability");

    if (auto v = take("smoother.particles")) config.smoother.particle_count = static_cast<std::size_t>(parse_number(*v, "smoother.particles"));
    if (auto v = take("smoother.max_hypotheses")) config.smoother.max_hypotheses = static_cast<std::size_t>(parse_number(*v, "smoother.max_hypotheses"));
    if (auto v = take("smoother.gate_probability")) config.smoother.gate_probability = parse_number(*v, "smoother.gate_probability");
    if (auto v = take("smoother.sample_undetected_ppp")) config.smoother.sample_undetected_ppp = parse_bool(*v, "smoother.sample_undetected_ppp");
    if (auto v = take("smoother.estimator_radius")) config.smoother.estimator_radius = parse_number(*v, "smoother.estimator_radius");

    if (auto v = take("metrics.gospa_cutoff")) config.gospa.cutoff = parse_number(*v, "metrics.gospa_cutoff");
    if (auto v = take("metrics.gospa_order")) config.gospa.order = parse_number(*v, "metrics.gospa_order");
    if (auto v = take("metrics.gospa_alpha")) config.gospa.alpha = parse_number(*v, "metrics.gospa_alpha");
    if (auto v = take("metrics.tgospa_cutoff")) config.tgospa.cutoff = parse_number(*v, "metrics.tgospa_cutoff");
    if (auto v = take("metrics.tgospa_order")) config.tgospa.order = parse_number(*v, "metrics.tgospa_order");
    if (auto v = take("metrics.tgospa_switch_cost")) config.tgospa.switch_cost = parse_number(*v, "metrics.tgospa_switch_cost");

    if (auto v = take("harness.runs")) config.runs = static_cast<std::size_t>(parse_number(*v, "harness.runs"));
    if (auto v = take("harness.seed")) config.seed = static_cast<std::uint64_t>(parse_number(*v, "harness.seed"));
    if (auto v = take("harness.workers")) config.workers = static_cast<std::size_t>(parse_number(*v, "harness.workers"));
    if (auto v = take("harness.variant")) config.variant = *v;
    if (auto v = take("harness.output_dir")) config.output_dir = *v;

    if (!entries.empty()) {
        throw ConfigError("config: unknown key '" + entries.begin()->first + "'");
    }
    return config;
}

CampaignConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::ostringstream buffer;
    buffer << is.rdbuf();
    return parse_config_text(buffer.str());
}

void apply_variant(CampaignConfig& config, const std::string& tag) {
    config.variant = tag;
    if (tag == "no-change") return;
    if (tag == "clutter-10") {
        config.scenario.clutter_rate = 10.0;
    } else if (tag == "clutter-100") {
        config.scenario.clutter_rate = 100.0;
    } else if (tag == "pd-098") {
        config.scenario.detection_probability = 0.98;
    } else if (tag == "pd-08") {
        config.scenario.detection_probability = 0.8;
    } else {
        throw ConfigError("config: unknown variant '" + tag + "'");
    }
}

RunResult run_single(const CampaignConfig& config, std::size_t run_index, bool keep_artifacts) {
    RunResult result;
    try {
        const MotionModel motion = config.scenario.motion();
        const MeasurementModel meas = config.scenario.measurement();
        const BirthModel birth = config.scenario.birth();
        const ClutterModel clutter = config.scenario.clutter();

        const RandomStream base(config.seed);
        const RandomStream run_stream = base.child(run_index);
        RandomStream scenario_stream = run_stream.child(0);
        RandomStream smoother_stream = run_stream.child(1);

        const GroundTruth truth = build_nominal_scenario(config.scenario, scenario_stream);
        const auto measurements = simulate_measurements(truth, meas, clutter, scenario_stream);
        const ForwardRecord record =
            run_forward(measurements, motion, meas, birth, clutter, config.filter);
        const auto particles =
            backward_simulate(record, motion, birth, config.smoother, smoother_stream);
        const auto estimate = estimate_trajectories(particles, config.smoother.estimator_radius);

        const int horizon = truth.steps;
        result.phd_gospa.reserve(static_cast<std::size_t>(horizon));
        result.hybrid_gospa.reserve(static_cast<std::size_t>(horizon));
        for (int k = 1; k <= horizon; ++k) {
            const auto truth_k = truth_states_at(truth, k);
            result.phd_gospa.push_back(gospa(record.at_step(k).estimates, truth_k, config.gospa));
            result.hybrid_gospa.push_back(
                gospa(trajectories_states_at(estimate, k), truth_k, config.gospa));
        }
        const TgospaResult tg = tgospa(estimate, truth.trajectories, config.tgospa, horizon);
        const double scale = 1.0 / static_cast<double>(horizon);
        result.hybrid_tgospa = {tg.total * scale, tg.localization * scale, tg.missed * scale,
                                tg.false_detection * scale, tg.track_switch * scale};
        if (keep_artifacts) {
            result.truth = truth.trajectories;
            result.estimate = estimate;
        }
        result.ok = true;
    } catch (const std::exception& e) {
        result.ok = false;
        result.error = e.what();
    }
    return result;
}

namespace {

GospaResult mean_over_steps(const std::vector<GospaResult>& steps) {
    GospaResult mean;
    for (const auto& g : steps) {
        mean.total += g.total;
        mean.localization += g.localization;
        mean.missed += g.missed;
        mean.false_detection += g.false_detection;
    }
    const double n = steps.empty() ? 1.0 : static_cast<double>(steps.size());
    mean.total /= n;
    mean.localization /= n;
    mean.missed /= n;
    mean.false_detection /= n;
    return mean;
}

double standard_error(const std::vector<double>& values) {
    if (values.size() < 2) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double variance = 0.0;
    for (double v : values) variance += (v - mean) * (v - mean);
    variance /= static_cast<double>(values.size() - 1);
    return std::sqrt(variance / static_cast<double>(values.size()));
}

}  // namespace

CampaignResult run_campaign(const CampaignConfig& config) {
    config.validate();
    CampaignResult result;
    result.runs.resize(config.runs);

    const std::size_t hardware = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers =
        std::min(config.runs, config.workers > 0 ? config.workers : hardware);

    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t r = next.fetch_add(1);
            if (r >= config.runs) return;
            result.runs[r] = run_single(config, r, r == 0);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::vector<double> phd_totals;
    std::vector<double> hybrid_totals;
    std::vector<double> tgospa_totals;
    for (const auto& run : result.runs) {
        if (!run.ok) continue;
        ++result.completed;
        const GospaResult phd = mean_over_steps(run.phd_gospa);
        const GospaResult hybrid = mean_over_steps(run.hybrid_gospa);
        result.phd_mean.total += phd.total;
        result.phd_mean.localization += phd.localization;
        result.phd_mean.missed += phd.missed;
        result.phd_mean.false_detection += phd.false_detection;
        result.hybrid_mean.total += hybrid.total;
        result.hybrid_mean.localization += hybrid.localization;
        result.hybrid_mean.missed += hybrid.missed;
        result.hybrid_mean.false_detection += hybrid.false_detection;
        result.tgospa_mean.total += run.hybrid_tgospa.total;
        result.tgospa_mean.localization += run.hybrid_tgospa.localization;
        result.tgospa_mean.missed += run.hybrid_tgospa.missed;
        result.tgospa_mean.false_detection += run.hybrid_tgospa.false_detection;
        result.tgospa_mean.track_switch += run.hybrid_tgospa.track_switch;
        phd_totals.push_back(phd.total);
        hybrid_totals.push_back(hybrid.total);
        tgospa_totals.push_back(run.hybrid_tgospa.total);
    }
    if (result.completed > 0) {
        const double n = static_cast<double>(result.completed);
        result.phd_mean.total /= n;
        result.phd_mean.localization /= n;
        result.phd_mean.missed /= n;
        result.phd_mean.false_detection /= n;
        result.hybrid_mean.total /= n;
        result.hybrid_mean.localization /= n;
        result.hybrid_mean.missed /= n;
        result.hybrid_mean.false_detection /= n;
        result.tgospa_mean.total /= n;
        result.tgospa_mean.localization /= n;
        result.tgospa_mean.missed /= n;
        result.tgospa_mean.false_detection /= n;
        result.tgospa_mean.track_switch /= n;
    }
    result.phd_total_stderr = standard_error(phd_totals);
    result.hybrid_total_stderr = standard_error(hybrid_totals);
    result.tgospa_total_stderr = standard_error(tgospa_totals);
    result.failed = static_cast<double>(config.runs - result.completed) >
                    0.1 * static_cast<double>(config.runs);
    return result;
}

void emit_outputs(const CampaignResult& result, const CampaignConfig& config,
                  const std::string& directory) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw std::runtime_error("emit_outputs: cannot create directory " + directory);

    auto open = [&](const std::string& name) {
        std::ofstream os(fs::path(directory) / name, std::ios::binary);
        if (!os) throw std::runtime_error("emit_outputs: cannot write " + (fs::path(directory) / name).string());
        return os;
    };

    {
        auto os = open("gospa_timeseries.csv");
        os << "method,run,k,total,localization,missed,false\n";
        for (std::size_t r = 0; r < result.runs.size(); ++r) {
            const auto& run = result.runs[r];
            if (!run.ok) continue;
            for (const char* method : {"phd", "hybrid"}) {
                const auto& series =
                    std::string(method) == "phd" ? run.phd_gospa : run.hybrid_gospa;
                for (std::size_t k = 0; k < series.size(); ++k) {
                    const auto& g = series[k];
                    os << method << ',' << r << ',' << k + 1 << ',' << format_double(g.total)
                       << ',' << format_double(g.localization) << ',' << format_double(g.missed)
                       << ',' << format_double(g.false_detection) << '\n';
                }
            }
        }
    }

    {
        auto os = open("tgospa_summary.csv");
        os << "method,run,total,localization,missed,false,switch\n";
        for (std::size_t r = 0; r < result.runs.size(); ++r) {
            const auto& run = result.runs[r];
            if (!run.ok) continue;
            const auto& t = run.hybrid_tgospa;
            os << "hybrid," << r << ',' << format_double(t.total) << ','
               << format_double(t.localization) << ',' << format_double(t.missed) << ','
               << format_double(t.false_detection) << ',' << format_double(t.track_switch)
               << '\n';
        }
    }

    {
        nlohmann::json summary;
        summary["variant"] = config.variant;
        summary["runs"] = result.runs.size();
        summary["completed_runs"] = result.completed;
        summary["failed"] = result.failed;
        nlohmann::json failures = nlohmann::json::array();
        for (std::size_t r = 0; r < result.runs.size(); ++r) {
            if (!result.runs[r].ok) {
                failures.push_back({{"run", r}, {"error", result.runs[r].error}});
            }
        }
        summary["failed_runs"] = std::move(failures);
        summary["phd_gospa"] = {{"total", result.phd_mean.total},
                                {"localization", result.phd_mean.localization},
                                {"missed", result.phd_mean.missed},
                                {"false", result.phd_mean.false_detection},
                                {"total_stderr", result.phd_total_stderr}};
        summary["hybrid_gospa"] = {{"total", result.hybrid_mean.total},
                                   {"localization", result.hybrid_mean.localization},
                                   {"missed", result.hybrid_mean.missed},
                                   {"false", result.hybrid_mean.false_detection},
                                   {"total_stderr", result.hybrid_total_stderr}};
        summary["hybrid_tgospa"] = {{"total", result.tgospa_mean.total},
                                    {"localization", result.tgospa_mean.localization},
                                    {"missed", result.tgospa_mean.missed},
                                    {"false", result.tgospa_mean.false_detection},
                                    {"switch", result.tgospa_mean.track_switch},
                                    {"total_stderr", result.tgospa_total_stderr}};
        auto os = open("summary.json");
        os << summary.dump(2) << '\n';
    }

    {
        auto os = open("trajectories_run0.jsonl");
        const RunResult* first = result.runs.empty() ? nullptr : &result.runs.front();
        if (first != nullptr && first->ok) {
            auto write_set = [&os](const std::vector<Trajectory>& set, const char* kind) {
                for (std::size_t i = 0; i < set.size(); ++i) {
                    nlohmann::json line;
                    line["kind"] = kind;
                    line["id"] = i;
                    line["start"] = set[i].start;
                    auto& states = line["states"] = nlohmann::json::array();
                    for (const auto& x : set[i].states) {
                        states.push_back(std::vector<double>(x.data(), x.data() + x.size()));
                    }
                    os << line.dump() << '\n';
                }
            };
            write_set(first->truth, "truth");
            write_set(first->estimate, "estimate");
        }
    }
}

}  // namespace mots
