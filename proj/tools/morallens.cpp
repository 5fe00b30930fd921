// morallens: trolley-dilemma moral-reasoning evaluation pipeline.
//
//   morallens generate --dir RUN [--config cfg.json] [--force]
//   morallens run      --dir RUN [--models a,b] [--order both] [--samples 5] [--mock]
//   morallens judge    --dir RUN [--mock]
//   morallens score    --dir RUN [--scheme inverse_rank]
//   morallens report   --dir RUN [--capability-file scores.tsv]

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <morallens/runctl.hpp>

namespace {

using namespace morallens;

std::vector<PromptOrder> parse_orders(const std::string& text) {
    if (text == "both") return {PromptOrder::reason_then_decide, PromptOrder::decide_then_reason};
    if (text == "pre" || text == "reason_then_decide") return {PromptOrder::reason_then_decide};
    if (text == "post" || text == "decide_then_reason") return {PromptOrder::decide_then_reason};
    if (text == "decision_only") return {PromptOrder::decision_only};
    throw CLI::ValidationError("--order", "expected both|pre|post|decision_only");
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& piece : strutil::split(text, ',')) {
        const auto t = strutil::trim(piece);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

RunConfig resolve_config(const std::string& config_path, bool mock) {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    if (mock && cfg.models.empty()) {
        ProviderProfile decider;
        decider.name = "mock-decider";
        decider.model_id = "mock-decider";
        decider.endpoint = "mock:decision";
        cfg.models.push_back(decider);
    }
    if (mock && cfg.judge.endpoint.empty()) {
        cfg.judge.name = "mock-judge";
        cfg.judge.model_id = "mock-judge";
        cfg.judge.endpoint = "mock:judge";
        cfg.judge.temperature = 0.0;
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"morallens: moral-reasoning evaluation pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may appear after the subcommand

    std::string dir;
    std::string config_path;
    std::string scheme_text;
    std::string order_text = "both";
    std::string models_text;
    std::string capability_path;
    int samples = kDefaultSamples;
    bool mock = false;
    bool force = false;

    app.add_option("--dir,-d", dir, "run directory")->required();
    app.add_option("--config,-c", config_path, "config file (json)");
    app.add_option("--scheme", scheme_text,
                   "weighting scheme (equal|uniform|first_bias|inverse_rank|first_only)");
    app.add_option("--order", order_text, "prompt orders: both|pre|post|decision_only");
    app.add_option("--samples", samples, "samples per (vignette, order) cell");
    app.add_option("--models", models_text, "comma-separated model selection");
    app.add_flag("--mock", mock, "use the built-in offline providers");

    auto* gen = app.add_subcommand("generate", "generate the vignette dataset");
    gen->add_flag("--force", force, "regenerate even if the config changed");
    auto* run = app.add_subcommand("run", "collect model decisions");
    auto* judge = app.add_subcommand("judge", "classify reasoning traces");
    auto* score = app.add_subcommand("score", "compute metrics per facet");
    auto* report = app.add_subcommand("report", "emit tables and plot data");
    std::string annotations_path;
    report->add_option("--capability-file", capability_path,
                       "two-column model/score file for capability correlations");
    report->add_option("--annotations", annotations_path,
                       "human annotation file (record key TAB semicolon-separated labels)");

    CLI11_PARSE(app, argc, argv);

    try {
        StoreLayout layout{dir};
        if (gen->parsed()) {
            RunConfig cfg = resolve_config(config_path, mock);
            if (!scheme_text.empty()) cfg.scheme = weighting_scheme_from_string(scheme_text);
            const auto manifest = cmd_generate(layout, cfg, force);
            const auto set = load_scenarios(layout);
            std::cout << "generated " << set.manifest.total << " vignettes (hash "
                      << manifest.scenario_set_hash << ") in " << layout.scenarios_file() << "\n";
            for (const auto& [dim, n] : set.manifest.by_dimension)
                std::cout << "  " << dim << ": " << n << "\n";
            return 0;
        }

        auto manifest = RunManifest::load(layout);

        if (run->parsed()) {
            const auto stats = cmd_run(layout, manifest, split_csv(models_text),
                                       parse_orders(order_text), samples, mock);
            std::cout << "run: appended " << stats.appended << ", skipped (resume) "
                      << stats.skipped << "\n";
            for (const auto& [model, n] : stats.transport_failures)
                std::cerr << "  transport failures for " << model << ": " << n << "\n";
            return stats.transport_failures.empty() ? 0 : 2;
        }
        if (judge->parsed()) {
            const auto stats = cmd_judge(layout, manifest, mock);
            std::cout << "judge: classified " << stats.judged << ", skipped (resume) "
                      << stats.skipped << ", flagged " << stats.flagged << "\n";
            if (stats.transport_failures > 0) {
                std::cerr << "  transport failures: " << stats.transport_failures << "\n";
                return 2;
            }
            return 0;
        }
        if (score->parsed()) {
            std::optional<WeightingScheme> scheme_override;
            if (!scheme_text.empty()) scheme_override = weighting_scheme_from_string(scheme_text);
            const auto reports = cmd_score(layout, manifest, scheme_override);
            std::cout << "score: " << reports.size() << " facets -> "
                      << (layout.reports_dir() / "metrics_by_facet.tsv").string() << "\n";
            return 0;
        }
        if (report->parsed()) {
            std::optional<std::filesystem::path> cap;
            if (!capability_path.empty()) cap = capability_path;
            std::optional<std::filesystem::path> ann;
            if (!annotations_path.empty()) ann = annotations_path;
            const auto result = cmd_report(layout, manifest, cap, ann);
            std::cout << "report: wrote " << result.files.size() << " files under "
                      << layout.reports_dir().string() << "\n";
            for (const auto& w : result.warnings) std::cerr << "  warning: " << w << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
