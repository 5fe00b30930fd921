#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "morallens/analysis.hpp"
#include "morallens/harness.hpp"
#include "morallens/metrics.hpp"
#include "morallens/mock_models.hpp"
#include "morallens/scenario.hpp"
#include "morallens/store.hpp"
#include "morallens/taxonomy.hpp"
#include "morallens/transport.hpp"

namespace morallens {

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

inline ordered_json provider_profile_to_json(const ProviderProfile& p) {
    ordered_json j;
    j["name"] = p.name;
    j["endpoint"] = p.endpoint;
    j["model_id"] = p.model_id;
    j["auth_env"] = p.auth_env;  // variable name only; the value never leaves the environment
    j["temperature"] = p.temperature;
    j["reasoning_mode"] = p.reasoning_mode;
    j["rate_limit"] = p.rate_limit;
    j["burst"] = p.burst;
    j["request_timeout"] = p.request_timeout;
    j["transport_retries"] = p.transport_retries;
    j["parallelism"] = p.parallelism;
    return j;
}

inline ProviderProfile provider_profile_from_json(const ordered_json& j) {
    ProviderProfile p;
    p.name = j.value("name", "");
    p.endpoint = j.value("endpoint", "");
    p.model_id = j.value("model_id", "");
    p.auth_env = j.value("auth_env", "");
    p.temperature = j.value("temperature", 1.0);
    p.reasoning_mode = j.value("reasoning_mode", false);
    p.rate_limit = j.value("rate_limit", 2.0);
    p.burst = j.value("burst", 1.0);
    p.request_timeout = j.value("request_timeout", 30.0);
    p.transport_retries = j.value("transport_retries", 2);
    p.parallelism = j.value("parallelism", 4);
    return p;
}

struct RunConfig {
    GenerationConfig generation;
    std::vector<ProviderProfile> models;
    ProviderProfile judge;
    WeightingScheme scheme = WeightingScheme::inverse_rank;
    std::vector<PromptOrder> orders = {PromptOrder::reason_then_decide,
                                       PromptOrder::decide_then_reason};
    int samples = kDefaultSamples;
    std::map<std::string, std::string> capability_aliases;
};

inline ordered_json run_config_to_json(const RunConfig& cfg) {
    ordered_json j;
    j["generation"] = generation_config_to_json(cfg.generation);
    ordered_json models = ordered_json::array();
    for (const auto& m : cfg.models) models.push_back(provider_profile_to_json(m));
    j["models"] = models;
    j["judge"] = provider_profile_to_json(cfg.judge);
    j["scheme"] = to_string(cfg.scheme);
    ordered_json orders = ordered_json::array();
    for (auto o : cfg.orders) orders.push_back(to_string(o));
    j["orders"] = orders;
    j["samples"] = cfg.samples;
    j["capability_aliases"] = cfg.capability_aliases;
    return j;
}

inline RunConfig run_config_from_json(const ordered_json& j) {
    RunConfig cfg;
    if (j.contains("generation")) cfg.generation = generation_config_from_json(j.at("generation"));
    if (j.contains("models")) {
        cfg.models.clear();
        for (const auto& m : j.at("models")) cfg.models.push_back(provider_profile_from_json(m));
    }
    if (j.contains("judge")) cfg.judge = provider_profile_from_json(j.at("judge"));
    if (j.contains("scheme")) cfg.scheme = weighting_scheme_from_string(j.at("scheme"));
    if (j.contains("orders")) {
        cfg.orders.clear();
        for (const auto& o : j.at("orders"))
            cfg.orders.push_back(prompt_order_from_string(o.get<std::string>()));
    }
    if (j.contains("samples")) cfg.samples = j.at("samples").get<int>();
    if (j.contains("capability_aliases"))
        cfg.capability_aliases =
            j.at("capability_aliases").get<std::map<std::string, std::string>>();
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config: " + path.string());
    return run_config_from_json(ordered_json::parse(in));
}

inline std::string config_hash(const RunConfig& cfg) {
    return hex64(fnv1a64(run_config_to_json(cfg).dump()));
}

// ---------------------------------------------------------------------------
// Store layout and manifest
// ---------------------------------------------------------------------------

struct StoreLayout {
    std::filesystem::path root;

    std::filesystem::path manifest_file() const { return root / "manifest.json"; }
    std::filesystem::path scenarios_file() const { return root / "scenarios.jsonl"; }
    std::filesystem::path ledger_file() const { return root / "ledger.jsonl"; }
    std::filesystem::path judged_file() const { return root / "judged.jsonl"; }
    std::filesystem::path reports_dir() const { return root / "reports"; }
    std::filesystem::path scores_file() const { return root / "reports" / "scores.jsonl"; }
    std::filesystem::path response_rate_file() const { return root / "response_rate.tsv"; }
    std::filesystem::path warnings_file() const { return root / "reports" / "warnings.txt"; }
};

struct StageFlags {
    bool generated = false;
    bool ran = false;
    bool judged = false;
    bool scored = false;
};

struct RunManifest {
    int version = 1;
    std::string created_at;
    std::string updated_at;
    RunConfig config;
    std::string cfg_hash;
    std::string scenario_set_hash;
    StageFlags stages;

    static RunManifest fresh(RunConfig cfg) {
        RunManifest m;
        m.config = std::move(cfg);
        m.cfg_hash = config_hash(m.config);
        m.created_at = iso8601_now();
        m.updated_at = m.created_at;
        return m;
    }

    // Stage flags only ever move forward.
    void mark_generated() { stages.generated = true; }
    void mark_ran() { stages.ran = true; }
    void mark_judged() { stages.judged = true; }
    void mark_scored() { stages.scored = true; }

    void save(const StoreLayout& layout) {
        updated_at = iso8601_now();
        ordered_json j;
        j["version"] = version;
        j["created_at"] = created_at;
        j["updated_at"] = updated_at;
        j["config"] = run_config_to_json(config);
        j["config_hash"] = cfg_hash;
        j["scenario_set_hash"] = scenario_set_hash;
        j["stages"] = {{"generated", stages.generated},
                       {"ran", stages.ran},
                       {"judged", stages.judged},
                       {"scored", stages.scored}};
        std::filesystem::create_directories(layout.root);
        std::ofstream out(layout.manifest_file());
        if (!out) throw std::runtime_error("cannot write manifest");
        out << j.dump(2) << "\n";
    }

    static RunManifest load(const StoreLayout& layout) {
        std::ifstream in(layout.manifest_file());
        if (!in) throw std::runtime_error("no manifest in " + layout.root.string());
        const auto j = ordered_json::parse(in);
        RunManifest m;
        m.version = j.at("version").get<int>();
        m.created_at = j.at("created_at").get<std::string>();
        m.updated_at = j.at("updated_at").get<std::string>();
        m.config = run_config_from_json(j.at("config"));
        m.cfg_hash = j.at("config_hash").get<std::string>();
        m.scenario_set_hash = j.at("scenario_set_hash").get<std::string>();
        m.stages.generated = j.at("stages").at("generated").get<bool>();
        m.stages.ran = j.at("stages").at("ran").get<bool>();
        m.stages.judged = j.at("stages").at("judged").get<bool>();
        m.stages.scored = j.at("stages").at("scored").get<bool>();

        if (config_hash(m.config) != m.cfg_hash)
            throw std::runtime_error("manifest config hash mismatch (corrupt manifest?)");
        auto require_file = [&](bool flag, const std::filesystem::path& p) {
            if (flag && !std::filesystem::exists(p))
                throw std::runtime_error("manifest marks a stage complete but " + p.string() +
                                         " is missing");
        };
        require_file(m.stages.generated, layout.scenarios_file());
        require_file(m.stages.ran, layout.ledger_file());
        require_file(m.stages.judged, layout.judged_file());
        require_file(m.stages.scored, layout.scores_file());
        return m;
    }
};

// ---------------------------------------------------------------------------
// Ordered parallel fan-out: tasks run on a small pool, results are consumed
// in task order so stage files stay byte-deterministic.
// ---------------------------------------------------------------------------

template <typename Result, typename TaskFn, typename ConsumeFn>
void ordered_parallel_for(size_t n_tasks, unsigned workers, TaskFn task, ConsumeFn consume) {
    if (n_tasks == 0) return;
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_tasks)));

    std::vector<std::optional<Result>> results(n_tasks);
    std::mutex mutex;
    std::condition_variable ready;
    std::atomic<size_t> next{0};

    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= n_tasks) return;
            Result r = task(i);
            {
                std::lock_guard<std::mutex> lock(mutex);
                results[i] = std::move(r);
            }
            ready.notify_all();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);

    for (size_t i = 0; i < n_tasks; ++i) {
        std::unique_lock<std::mutex> lock(mutex);
        ready.wait(lock, [&] { return results[i].has_value(); });
        Result r = std::move(*results[i]);
        results[i].reset();
        lock.unlock();
        consume(i, std::move(r));
    }
    for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// generate: write the scenario file and record its hash. Rerunning with an
/// unchanged config verifies and no-ops; a changed config needs force.
inline RunManifest cmd_generate(const StoreLayout& layout, const RunConfig& config,
                                bool force = false) {
    std::filesystem::create_directories(layout.root);
    std::optional<RunManifest> existing;
    if (std::filesystem::exists(layout.manifest_file())) existing = RunManifest::load(layout);

    if (existing && existing->cfg_hash != config_hash(config)) {
        if (!force)
            throw std::runtime_error(
                "run directory was generated from a different config; pass force to regenerate");
        existing.reset();
        std::filesystem::remove(layout.scenarios_file());
    }

    const ScenarioSet set = generate(config.generation);

    if (existing && existing->stages.generated) {
        if (existing->scenario_set_hash != set.content_hash)
            throw std::runtime_error("scenario file hash does not match this config (corrupt?)");
        return *existing;  // verified no-op
    }

    std::ofstream out(layout.scenarios_file());
    if (!out) throw std::runtime_error("cannot write " + layout.scenarios_file().string());
    write_scenarios(set, out);
    out.close();

    RunManifest manifest = existing ? *existing : RunManifest::fresh(config);
    manifest.scenario_set_hash = set.content_hash;
    manifest.mark_generated();
    manifest.save(layout);
    return manifest;
}

inline ScenarioSet load_scenarios(const StoreLayout& layout) {
    std::ifstream in(layout.scenarios_file());
    if (!in) throw std::runtime_error("no scenario file; run generate first");
    return read_scenarios(in);
}

inline std::vector<RunRecord> load_ledger(const StoreLayout& layout) {
    JsonlStore store(layout.ledger_file());
    std::vector<RunRecord> out;
    for (const auto& j : store.load()) out.push_back(run_record_from_json(j));
    return out;
}

inline std::vector<JudgeRecord> load_judged(const StoreLayout& layout) {
    JsonlStore store(layout.judged_file());
    std::vector<JudgeRecord> out;
    for (const auto& j : store.load()) out.push_back(judge_record_from_json(j));
    return out;
}

inline void write_response_rate_summary(const StoreLayout& layout,
                                        const std::vector<RunRecord>& records) {
    std::map<std::pair<std::string, PromptOrder>, std::vector<RunRecord>> by_cell;
    for (const auto& r : records) by_cell[{r.model_id, r.order}].push_back(r);
    std::string out = "model\torder";
    for (int i = 1; i <= kMaxAttempts; ++i) out += "\tattempt_" + std::to_string(i);
    out += "\n";
    for (const auto& [key, recs] : by_cell) {
        out += key.first + "\t" + to_string(key.second);
        for (double v : response_rate(recs)) {
            std::ostringstream os;
            os << std::setprecision(4) << std::fixed << v;
            out += "\t" + os.str();
        }
        out += "\n";
    }
    std::ofstream f(layout.response_rate_file());
    f << out;
}

struct RunStats {
    size_t appended = 0;
    size_t skipped = 0;
    std::map<std::string, size_t> transport_failures;  // per model
};

/// run: sample every (model, order, vignette, sample) cell not already in the
/// ledger. Requests fan out per model under its parallelism budget; appends
/// stay in canonical order through a single writer.
inline RunStats cmd_run(const StoreLayout& layout, RunManifest& manifest,
                        const std::vector<std::string>& model_filter,
                        const std::vector<PromptOrder>& orders, int samples, bool mock) {
    if (!manifest.stages.generated) throw std::runtime_error("run requires generated scenarios");
    if (samples < 1) throw std::invalid_argument("samples must be >= 1");
    const ScenarioSet set = load_scenarios(layout);
    if (set.content_hash != manifest.scenario_set_hash)
        throw std::runtime_error("scenario file does not match manifest hash");

    std::vector<ProviderProfile> profiles;
    for (const auto& m : manifest.config.models) {
        if (!model_filter.empty()) {
            bool wanted = false;
            for (const auto& f : model_filter)
                wanted = wanted || f == m.display_name() || f == m.model_id;
            if (!wanted) continue;
        }
        ProviderProfile p = m;
        if (mock) p.endpoint = "mock:decision";
        profiles.push_back(p);
    }
    if (profiles.empty()) throw std::runtime_error("no models selected");

    JsonlStore store(layout.ledger_file());
    std::set<std::string> seen =
        store.existing_keys([](const ordered_json& j) { return run_record_from_json(j).key(); });

    RunStats stats;
    struct Task {
        const Vignette* vignette;
        PromptOrder order;
        int sample;
    };
    struct TaskResult {
        std::optional<RunRecord> record;
        std::optional<std::string> transport_error;
    };

    for (const auto& profile : profiles) {
        auto provider = make_provider(profile);
        std::vector<Task> tasks;
        for (const auto order : orders) {
            for (const auto& v : set.vignettes) {
                for (int s = 0; s < samples; ++s) {
                    RunRecord probe;
                    probe.model_id = profile.display_name();
                    probe.vignette_id = v.id;
                    probe.sample_index = s;
                    probe.order = order;
                    if (seen.count(probe.key())) {
                        stats.skipped += 1;
                        continue;
                    }
                    tasks.push_back({&v, order, s});
                }
            }
        }
        ordered_parallel_for<TaskResult>(
            tasks.size(), static_cast<unsigned>(std::max(1, profile.parallelism)),
            [&](size_t i) -> TaskResult {
                const Task& t = tasks[i];
                try {
                    return {run_sample(*provider, *t.vignette, t.order, t.sample), std::nullopt};
                } catch (const TransportException& e) {
                    return {std::nullopt, e.what()};
                }
            },
            [&](size_t, TaskResult&& r) {
                if (r.record) {
                    store.append(run_record_to_json(*r.record));
                    stats.appended += 1;
                } else {
                    stats.transport_failures[profile.display_name()] += 1;
                }
            });
    }

    write_response_rate_summary(layout, load_ledger(layout));
    if (stats.transport_failures.empty()) manifest.mark_ran();
    manifest.save(layout);
    return stats;
}

struct JudgeStats {
    size_t judged = 0;
    size_t skipped = 0;
    size_t flagged = 0;
    size_t transport_failures = 0;
};

/// judge: one classification per non-failed ledger record with reasoning,
/// resumable by record key.
inline JudgeStats cmd_judge(const StoreLayout& layout, RunManifest& manifest, bool mock) {
    const auto records = load_ledger(layout);
    if (records.empty()) throw std::runtime_error("no ledger; run the decision stage first");

    std::vector<const RunRecord*> judgeable;
    for (const auto& r : records)
        if (!r.failed && !strutil::trim(r.reasoning_text).empty()) judgeable.push_back(&r);
    if (judgeable.empty()) throw std::runtime_error("nothing to judge (no usable records)");

    ProviderProfile judge_profile = manifest.config.judge;
    if (mock) {
        judge_profile.endpoint = "mock:judge";
        judge_profile.temperature = 0.0;
    }
    if (judge_profile.endpoint.empty())
        throw std::runtime_error("no judge configured (set judge in config or use mock)");
    if (judge_profile.temperature != 0.0)
        throw std::runtime_error("judge must run at temperature 0");
    auto judge = make_provider(judge_profile);

    JsonlStore store(layout.judged_file());
    std::set<std::string> seen =
        store.existing_keys([](const ordered_json& j) { return judge_record_from_json(j).key(); });

    std::vector<const RunRecord*> pending;
    for (const auto* r : judgeable)
        if (!seen.count(r->key())) pending.push_back(r);

    JudgeStats stats;
    stats.skipped = judgeable.size() - pending.size();
    struct TaskResult {
        std::optional<JudgeRecord> record;
        bool transport_error = false;
    };
    ordered_parallel_for<TaskResult>(
        pending.size(), static_cast<unsigned>(std::max(1, judge_profile.parallelism)),
        [&](size_t i) -> TaskResult {
            try {
                return {judge_one(*judge, *pending[i]), false};
            } catch (const TransportException&) {
                return {std::nullopt, true};
            }
        },
        [&](size_t, TaskResult&& r) {
            if (r.record) {
                store.append(judge_record_to_json(*r.record));
                stats.judged += 1;
                if (r.record->flagged) stats.flagged += 1;
            } else {
                stats.transport_failures += 1;
            }
        });

    if (stats.transport_failures == 0) manifest.mark_judged();
    manifest.save(layout);
    return stats;
}

// ---------------------------------------------------------------------------
// Scoring and reporting
// ---------------------------------------------------------------------------

inline ordered_json score_report_to_json(const ScoreReport& r) {
    ordered_json j;
    j["model"] = r.facet.model_id ? ordered_json(*r.facet.model_id) : ordered_json(nullptr);
    j["dimension"] =
        r.facet.dimension ? ordered_json(to_string(*r.facet.dimension)) : ordered_json(nullptr);
    j["size_class"] = r.facet.size_class_filter
                          ? ordered_json(to_string(*r.facet.size_class_filter))
                          : ordered_json(nullptr);
    j["order"] = r.facet.order ? ordered_json(to_string(*r.facet.order)) : ordered_json(nullptr);
    j["sample"] =
        r.facet.sample_index ? ordered_json(*r.facet.sample_index) : ordered_json(nullptr);
    j["scheme"] = to_string(r.scheme);
    j["n_records"] = r.n_records;
    j["n_failed_excluded"] = r.n_failed_excluded;
    auto opt = [](const std::optional<double>& v) {
        return v ? ordered_json(*v) : ordered_json(nullptr);
    };
    j["cdgap"] = opt(r.cdgap_value);
    j["cdgap_ci"] = r.cdgap_ci ? ordered_json({r.cdgap_ci->lo, r.cdgap_ci->hi})
                               : ordered_json(nullptr);
    j["utility"] = opt(r.utility_value);
    j["utility_ci"] = r.utility_ci ? ordered_json({r.utility_ci->lo, r.utility_ci->hi})
                                   : ordered_json(nullptr);
    j["consistency"] = opt(r.consistency_value);
    return j;
}

inline ScoreReport score_report_from_json(const ordered_json& j) {
    ScoreReport r;
    if (!j.at("model").is_null()) r.facet.model_id = j.at("model").get<std::string>();
    if (!j.at("dimension").is_null())
        r.facet.dimension = dimension_from_string(j.at("dimension").get<std::string>());
    if (!j.at("size_class").is_null())
        r.facet.size_class_filter = j.at("size_class").get<std::string>() == "balanced"
                                        ? SizeClass::balanced
                                        : SizeClass::imbalanced;
    if (!j.at("order").is_null())
        r.facet.order = prompt_order_from_string(j.at("order").get<std::string>());
    if (!j.at("sample").is_null()) r.facet.sample_index = j.at("sample").get<int>();
    r.scheme = weighting_scheme_from_string(j.at("scheme").get<std::string>());
    r.n_records = j.at("n_records").get<size_t>();
    r.n_failed_excluded = j.at("n_failed_excluded").get<size_t>();
    if (!j.at("cdgap").is_null()) r.cdgap_value = j.at("cdgap").get<double>();
    if (!j.at("cdgap_ci").is_null())
        r.cdgap_ci = Interval{j.at("cdgap_ci").at(0).get<double>(),
                              j.at("cdgap_ci").at(1).get<double>()};
    if (!j.at("utility").is_null()) r.utility_value = j.at("utility").get<double>();
    if (!j.at("utility_ci").is_null())
        r.utility_ci = Interval{j.at("utility_ci").at(0).get<double>(),
                                j.at("utility_ci").at(1).get<double>()};
    if (!j.at("consistency").is_null()) r.consistency_value = j.at("consistency").get<double>();
    return r;
}

/// Default facet sweep: per model x per order, overall plus one facet per
/// dimension and per size class, plus the all-models overall per order.
inline std::vector<FacetKey> default_facets(const std::vector<RunRecord>& records,
                                            const VignetteIndex& index) {
    std::set<std::string> models;
    std::set<PromptOrder> orders;
    std::set<Dimension> dimensions;
    for (const auto& r : records) {
        models.insert(r.model_id);
        orders.insert(r.order);
        dimensions.insert(index.at(r.vignette_id).dimension);
    }
    std::vector<FacetKey> facets;
    for (const auto& order : orders) {
        FacetKey all_models;
        all_models.order = order;
        facets.push_back(all_models);
        for (const auto& model : models) {
            FacetKey base;
            base.model_id = model;
            base.order = order;
            facets.push_back(base);
            for (const auto& dim : dimensions) {
                FacetKey f = base;
                f.dimension = dim;
                facets.push_back(f);
            }
            for (const auto sc : {SizeClass::balanced, SizeClass::imbalanced}) {
                FacetKey f = base;
                f.size_class_filter = sc;
                facets.push_back(f);
            }
        }
    }
    return facets;
}

/// score: deterministic ScoreReports for the judged ledger; scheme recorded
/// in the emitted header.
inline std::vector<ScoreReport> cmd_score(const StoreLayout& layout, RunManifest& manifest,
                                          std::optional<WeightingScheme> scheme_override,
                                          const std::vector<FacetKey>& extra_facets = {}) {
    const auto records = load_ledger(layout);
    const auto judged = load_judged(layout);
    if (judged.empty()) throw std::runtime_error("no judged ledger; run judge first");
    const WeightingScheme scheme = scheme_override.value_or(manifest.config.scheme);

    const ScenarioSet set = load_scenarios(layout);
    const VignetteIndex index(set);
    const auto ledger = JudgedLedger::join(records, judged);

    std::vector<FacetKey> facets = default_facets(records, index);
    const size_t n_default = facets.size();
    for (const auto& f : extra_facets) facets.push_back(f);

    std::vector<ScoreReport> reports;
    for (size_t i = 0; i < facets.size(); ++i) {
        try {
            reports.push_back(score_facet(ledger, index, scheme, facets[i]));
        } catch (const std::invalid_argument&) {
            // Default facets that match nothing (an unused order, say) are
            // dropped; explicitly requested facets must match.
            if (i >= n_default) throw;
        }
    }

    std::filesystem::create_directories(layout.reports_dir());
    {
        std::ofstream out(layout.scores_file());
        for (const auto& r : reports) out << score_report_to_json(r).dump() << "\n";
    }
    detail::write_file(layout.reports_dir() / "metrics_by_facet.tsv",
                       "# scheme: " + to_string(scheme) + "\n" + render_metrics_table(reports));
    detail::write_file(layout.reports_dir() / "summary_table.tsv", render_summary_table(reports));

    manifest.mark_scored();
    manifest.save(layout);
    return reports;
}

/// Per-model overall metric values for one order, used by the test builders
/// and the capability join.
inline std::vector<std::pair<std::string, double>> per_model_metric(
    const std::vector<ScoreReport>& reports, PromptOrder order, bool want_cdgap) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& r : reports) {
        if (!r.facet.model_id || r.facet.dimension || r.facet.size_class_filter ||
            r.facet.sample_index)
            continue;
        if (r.facet.order != std::optional<PromptOrder>(order)) continue;
        const auto& v = want_cdgap ? r.cdgap_value : r.utility_value;
        if (v) out.emplace_back(*r.facet.model_id, *v);
    }
    return out;
}

struct ReportResult {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> warnings;
};

/// report: emit tables, test results, and plot data; optionally joins an
/// external capability file for the correlation figures and a human
/// annotation file for judge-agreement scores.
inline ReportResult cmd_report(const StoreLayout& layout, RunManifest& manifest,
                               std::optional<std::filesystem::path> capability_file,
                               std::optional<std::filesystem::path> annotations_file = std::nullopt) {
    if (!std::filesystem::exists(layout.scores_file()))
        throw std::runtime_error("no scores; run score first");

    ReportInputs inputs;
    inputs.scheme = manifest.config.scheme;
    {
        JsonlStore store(layout.scores_file());
        for (const auto& j : store.load()) inputs.reports.push_back(score_report_from_json(j));
    }
    const auto records = load_ledger(layout);
    const auto judged = load_judged(layout);
    const ScenarioSet set = load_scenarios(layout);
    const VignetteIndex index(set);
    const auto ledger = JudgedLedger::join(records, judged);

    // Statistical comparisons across models, mirroring the headline analyses.
    auto values_of = [](const std::vector<std::pair<std::string, double>>& rows) {
        std::vector<double> v;
        for (const auto& [_, x] : rows) v.push_back(x);
        return v;
    };
    const auto pre_gaps = per_model_metric(inputs.reports, PromptOrder::reason_then_decide, true);
    const auto post_gaps = per_model_metric(inputs.reports, PromptOrder::decide_then_reason, true);
    if (pre_gaps.size() >= 2 && post_gaps.size() >= 2) {
        inputs.tests.push_back(
            {"cdgap_pre_vs_post_t", stats::t_test(values_of(pre_gaps), values_of(post_gaps))});
    }

    // Size-balanced vs size-imbalanced CDgap, per model (pre-decision order).
    {
        std::map<SizeClass, std::vector<double>> by_class;
        for (const auto& r : inputs.reports) {
            if (!r.facet.model_id || !r.facet.size_class_filter || !r.cdgap_value) continue;
            if (r.facet.order != std::optional<PromptOrder>(PromptOrder::reason_then_decide))
                continue;
            by_class[*r.facet.size_class_filter].push_back(*r.cdgap_value);
        }
        if (by_class[SizeClass::balanced].size() >= 2 &&
            by_class[SizeClass::imbalanced].size() >= 2) {
            inputs.tests.push_back({"cdgap_balanced_vs_imbalanced_t",
                                    stats::t_test(by_class[SizeClass::balanced],
                                                  by_class[SizeClass::imbalanced])});
        }
    }

    // CDgap across the four demographic dimensions (per-model cells).
    {
        std::map<Dimension, std::vector<double>> by_dim;
        for (const auto& r : inputs.reports) {
            if (!r.facet.model_id || !r.facet.dimension || !r.cdgap_value) continue;
            if (r.facet.order != std::optional<PromptOrder>(PromptOrder::reason_then_decide))
                continue;
            by_dim[*r.facet.dimension].push_back(*r.cdgap_value);
        }
        std::vector<std::vector<double>> groups;
        for (const auto& [dim, xs] : by_dim) {
            if (dim == Dimension::mixed) continue;
            if (xs.size() >= 2) groups.push_back(xs);
        }
        if (groups.size() >= 2)
            inputs.tests.push_back({"cdgap_across_dimensions_anova", stats::anova(groups)});
    }

    inputs.rationale_rows =
        rationale_utility_correlations(ledger, index, manifest.config.scheme);

    std::map<std::pair<std::string, PromptOrder>, std::vector<RunRecord>> rate_cells;
    for (const auto& r : records) rate_cells[{r.model_id, r.order}].push_back(r);
    for (const auto& [key, recs] : rate_cells)
        inputs.response_rates[key] = response_rate(recs);

    ReportResult result;
    if (capability_file) {
        std::ifstream cap_in(*capability_file);
        if (!cap_in)
            throw std::runtime_error("cannot read capability file: " + capability_file->string());
        const auto capability =
            parse_capability_table(cap_in, manifest.config.capability_aliases);
        for (const auto order : {PromptOrder::reason_then_decide, PromptOrder::decide_then_reason}) {
            const auto gaps = per_model_metric(inputs.reports, order, true);
            const auto utils = per_model_metric(inputs.reports, order, false);
            std::map<std::string, double> util_by_model(utils.begin(), utils.end());
            for (const auto& [model, gap] : gaps) {
                auto it = capability.find(model);
                if (it == capability.end()) {
                    result.warnings.push_back("no capability score for model: " + model);
                    continue;
                }
                CapabilityPoint pt;
                pt.model = model;
                pt.order = order;
                pt.capability = it->second;
                pt.cdgap = gap;
                if (auto u = util_by_model.find(model); u != util_by_model.end())
                    pt.utility = u->second;
                inputs.capability_points.push_back(pt);
            }
            try {
                const auto join = capability_join(gaps, capability);
                inputs.tests.push_back(
                    {"capability_vs_cdgap_pearson_" + to_string(order), pearson(join.series)});
            } catch (const std::invalid_argument&) {
                // fewer than 2 matched or degenerate; skip the test row
            }
            try {
                const auto join = capability_join(utils, capability);
                inputs.tests.push_back(
                    {"capability_vs_utility_pearson_" + to_string(order), pearson(join.series)});
            } catch (const std::invalid_argument&) {
            }
        }
    }

    result.files = emit_report(inputs, layout.reports_dir());

    // Taxonomy as a flat data file next to the tables it explains.
    detail::write_file(layout.reports_dir() / "taxonomy.tsv", taxonomy_table_tsv());
    result.files.push_back(layout.reports_dir() / "taxonomy.tsv");

    if (annotations_file) {
        std::ifstream ann_in(*annotations_file);
        if (!ann_in)
            throw std::runtime_error("cannot read annotation file: " + annotations_file->string());
        const auto gold = parse_annotation_file(ann_in);
        std::map<std::string, Classification> judged_by_key;
        for (const auto& j : judged) judged_by_key[j.key()] = j.classification;
        std::vector<Classification> predicted_aligned, gold_aligned;
        for (const auto& [key, c] : gold) {
            auto it = judged_by_key.find(key);
            if (it == judged_by_key.end()) {
                result.warnings.push_back("annotation key not in judged ledger: " + key);
                continue;
            }
            predicted_aligned.push_back(it->second);
            gold_aligned.push_back(c);
        }
        if (predicted_aligned.empty())
            throw std::runtime_error("no annotation keys matched the judged ledger");
        const auto scores = agreement(predicted_aligned, gold_aligned);
        const double kappa = cohen_kappa(predicted_aligned, gold_aligned);
        std::ostringstream os;
        os << "n\tprecision\trecall\tf1\tkappa\n"
           << predicted_aligned.size() << "\t" << detail::fmt(scores.precision) << "\t"
           << detail::fmt(scores.recall) << "\t" << detail::fmt(scores.f1) << "\t"
           << detail::fmt(kappa) << "\n";
        detail::write_file(layout.reports_dir() / "agreement.tsv", os.str());
        result.files.push_back(layout.reports_dir() / "agreement.tsv");
    }

    if (!result.warnings.empty()) {
        std::string w;
        for (const auto& s : result.warnings) w += s + "\n";
        detail::write_file(layout.warnings_file(), w);
        result.files.push_back(layout.warnings_file());
    }
    manifest.save(layout);
    return result;
}

}  // namespace morallens
