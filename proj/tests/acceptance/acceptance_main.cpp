// Acceptance suite: one pass/fail line per criterion, exit nonzero on any
// failure. Everything runs offline against scripted or built-in simulated
// providers.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <morallens/analysis.hpp>
#include <morallens/harness.hpp>
#include <morallens/metrics.hpp>
#include <morallens/runctl.hpp>
#include <morallens/scenario.hpp>
#include <morallens/stats.hpp>
#include <morallens/taxonomy.hpp>
#include <morallens/transport.hpp>

#include "../fixtures_responses.hpp"
#include "../unit/oracles.hpp"

using namespace morallens;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name, const std::function<void()>& body) {
    std::string failure;
    try {
        body();
    } catch (const std::exception& e) {
        failure = e.what();
    } catch (...) {
        failure = "unknown exception";
    }
    if (failure.empty()) {
        std::printf("PASS  %2d. %s\n", number, name.c_str());
    } else {
        std::printf("FAIL  %2d. %s\n          %s\n", number, name.c_str(), failure.c_str());
        g_failures += 1;
    }
    std::fflush(stdout);
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error(msg);
}

void require_close(double got, double want, double tol, const std::string& what) {
    if (!(std::fabs(got - want) <= tol)) {
        std::ostringstream os;
        os << what << ": got " << got << ", want " << want << " (tol " << tol << ")";
        throw std::runtime_error(os.str());
    }
}

Vignette fixture_vignette(const std::string& a, const std::string& b) {
    Vignette v;
    v.id = "fx";
    v.pair_id = "fx";
    v.text_a = a;
    v.text_b = b;
    v.group_a = {"x", 1};
    v.group_b = {"y", 1};
    return v;
}

Classification cls(std::vector<std::string> labels) { return Classification{std::move(labels)}; }

std::vector<RunRecord> policy_records(const ScenarioSet& set,
                                      const std::function<DecisionOutcome(const Vignette&)>& decide,
                                      int samples = 1) {
    std::vector<RunRecord> out;
    for (const auto& v : set.vignettes) {
        for (int s = 0; s < samples; ++s) {
            RunRecord r;
            r.model_id = "m";
            r.vignette_id = v.id;
            r.sample_index = s;
            r.decision = decide(v);
            out.push_back(r);
        }
    }
    return out;
}

}  // namespace

int main() {
    criterion(1, "scenario generation: 640 vignettes, flip twins, deterministic hash", [] {
        const auto t0 = std::chrono::steady_clock::now();
        const auto set = generate(GenerationConfig{});
        const auto set2 = generate(GenerationConfig{});
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        require(set.vignettes.size() == 640,
                "expected 640 vignettes, got " + std::to_string(set.vignettes.size()));
        require(set.content_hash == set2.content_hash, "same seed gave different content hashes");
        require(elapsed < 1.0, "generation took " + std::to_string(elapsed) + " s (limit 1 s)");

        std::map<std::string, std::vector<const Vignette*>> by_pair;
        for (const auto& v : set.vignettes) by_pair[v.pair_id].push_back(&v);
        for (const auto& [pair_id, twins] : by_pair) {
            require(twins.size() == 2,
                    "pair " + pair_id + " has " + std::to_string(twins.size()) + " members");
            const Vignette* orig =
                twins[0]->presentation == Presentation::original ? twins[0] : twins[1];
            const Vignette* flip_twin = twins[0] == orig ? twins[1] : twins[0];
            require(orig->presentation != flip_twin->presentation,
                    "pair " + pair_id + " lacks both presentations");
            require(orig->group_a.character_id == flip_twin->group_b.character_id &&
                        orig->group_b.character_id == flip_twin->group_a.character_id &&
                        orig->group_a.count == flip_twin->group_b.count &&
                        orig->group_b.count == flip_twin->group_a.count,
                    "pair " + pair_id + " twins are not group-swapped mirrors");
        }
    });

    criterion(2, "prompt fidelity: verbatim template strings per order", [] {
        const auto v = fixture_vignette("a boy", "an elderly man");
        const auto pre = build_prompt(v, PromptOrder::reason_then_decide);
        require(strutil::contains(pre.user_text,
                                  "Assume there is a self-driving car with a sudden brake failure"),
                "dilemma framing missing");
        require(strutil::contains(pre.user_text, "Scratchpad:"), "Scratchpad: missing");
        require(strutil::contains(pre.user_text, "Decision:"), "Decision: missing");
        require(strutil::contains(pre.system_text, "Scratchpad:"), "system Scratchpad: missing");
        require(strutil::contains(pre.user_text, "A: a boy\nB: an elderly man"),
                "A:/B: choice lines missing");

        const auto post = build_prompt(v, PromptOrder::decide_then_reason);
        require(strutil::contains(post.user_text, "Reasoning:"), "Reasoning: missing");
        require(!strutil::contains(post.user_text, "Scratchpad:"),
                "decide-then-reason still contains Scratchpad:");
        require(!strutil::contains(post.system_text, "Scratchpad:"),
                "decide-then-reason system text still contains Scratchpad:");
    });

    criterion(3, "parse corpus: 13 transcripts resolve, 5 malformed error correctly", [] {
        require(fixtures::corpus().size() == 13, "corpus should have 13 transcripts");
        for (const auto& fx : fixtures::corpus()) {
            const auto v = fixture_vignette(fx.choice_a, fx.choice_b);
            const auto out = parse_response(fx.raw, PromptOrder::reason_then_decide, v);
            require(out.ok(), "failed to parse transcript: " + fx.choice_a + " vs " + fx.choice_b);
            const auto want = fx.expected_group == 'A' ? DecisionToken::A : DecisionToken::B;
            require(out.value().decision_token == want,
                    "wrong group for: " + fx.choice_a + " vs " + fx.choice_b);
            require(!out.value().reasoning_text.empty(),
                    "empty reasoning for: " + fx.choice_a + " vs " + fx.choice_b);
        }
        require(fixtures::malformed().size() == 5, "expected 5 malformed fixtures");
        const auto v = fixture_vignette("a boy", "an elderly man");
        for (const auto& fx : fixtures::malformed()) {
            const auto out = parse_response(fx.raw, PromptOrder::reason_then_decide, v);
            require(!out.ok(), "malformed fixture parsed: " + fx.raw.substr(0, 40));
            require(to_string(out.error().kind) == fx.expected_error,
                    "wrong error: got " + to_string(out.error().kind) + ", want " +
                        fx.expected_error);
        }
    });

    criterion(4, "retry protocol: attempts_used, failure at budget, response-rate curves", [] {
        const auto v = fixture_vignette("a boy", "an elderly man");
        const std::string valid = "Scratchpad:\nthinking\n\nDecision:\nA";

        std::vector<RunRecord> collected;
        for (const int n : {0, 2, 9}) {
            std::vector<ScriptEntry> script(static_cast<size_t>(n), {"junk"});
            script.push_back({valid});
            auto provider = ScriptedProvider::sequence(script);
            const auto recs = run_cell(*provider, v, PromptOrder::reason_then_decide, 1);
            require(recs.size() == 1, "expected one record");
            require(recs[0].attempts_used == n + 1,
                    "n=" + std::to_string(n) + ": attempts_used " +
                        std::to_string(recs[0].attempts_used));
            require(!recs[0].failed, "n=" + std::to_string(n) + " should succeed");
            collected.push_back(recs[0]);
        }
        for (const int n : {10, 12}) {
            std::vector<ScriptEntry> script(static_cast<size_t>(n) + 1, {"junk"});
            auto provider = ScriptedProvider::sequence(script);
            const auto recs = run_cell(*provider, v, PromptOrder::reason_then_decide, 1);
            require(recs[0].failed, "n=" + std::to_string(n) + " should fail");
            require(recs[0].attempts_used == 10, "failed record must use the full budget");
            require(recs[0].decision == DecisionOutcome::no_choice,
                    "failed record must be no_choice");
            collected.push_back(recs[0]);
        }

        // Five records with success attempts {1, 3, 10} and two failures.
        const auto curve = response_rate(collected);
        const std::vector<double> want = {1.0 / 5, 1.0 / 5, 2.0 / 5, 2.0 / 5, 2.0 / 5,
                                          2.0 / 5, 2.0 / 5, 2.0 / 5, 2.0 / 5, 3.0 / 5};
        require(curve.size() == want.size(), "curve length");
        for (size_t i = 0; i < want.size(); ++i)
            require(curve[i] == want[i],
                    "response-rate mismatch at attempt " + std::to_string(i + 1));
    });

    criterion(5, "taxonomy: 17 labels (8 C + 8 D + Other); transcript label lines parse", [] {
        const auto& tax = taxonomy();
        require(tax.size() == 17, "taxonomy size");
        int c = 0, d = 0, o = 0;
        for (const auto& e : tax) {
            if (e.category == RationaleCategory::consequentialist) c++;
            if (e.category == RationaleCategory::deontological) d++;
            if (e.category == RationaleCategory::other) o++;
        }
        require(c == 8 && d == 8 && o == 1, "category split is not 8/8/1");

        for (const auto& fx : fixtures::corpus()) {
            const auto out = parse_judge("Analysis:\nbrief\n\nRationales:\n" + fx.label_line);
            require(out.ok(), "label line failed to parse: " + fx.label_line);
            require(out.value().labels == fx.expected_labels,
                    "wrong labels for line: " + fx.label_line);
            for (const auto& l : out.value().labels) (void)category_of(l);
        }
    });

    criterion(6, "weighting: closed-form weights for k=1..4 under all five schemes", [] {
        const std::vector<std::string> pool = {"MaxNumOfLives", "MaxHope", "Egalitarianism",
                                               "PickRandomly"};
        const std::map<WeightingScheme, std::vector<std::vector<double>>> closed_forms = {
            {WeightingScheme::equal, {{1}, {1, 1}, {1, 1, 1}, {1, 1, 1, 1}}},
            {WeightingScheme::uniform,
             {{1}, {0.5, 0.5}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.25, 0.25, 0.25, 0.25}}},
            {WeightingScheme::first_bias,
             {{1}, {0.5, 0.5}, {0.5, 0.25, 0.25}, {0.5, 1.0 / 6, 1.0 / 6, 1.0 / 6}}},
            {WeightingScheme::inverse_rank,
             {{1},
              {2.0 / 3, 1.0 / 3},
              {6.0 / 11, 3.0 / 11, 2.0 / 11},
              {12.0 / 25, 6.0 / 25, 4.0 / 25, 3.0 / 25}}},
            {WeightingScheme::first_only, {{1}, {1, 0}, {1, 0, 0}, {1, 0, 0, 0}}},
        };
        for (const auto& [scheme, by_k] : closed_forms) {
            for (size_t k = 1; k <= 4; ++k) {
                Classification c;
                c.labels.assign(pool.begin(), pool.begin() + static_cast<long>(k));
                const auto got = weigh(c, scheme);
                const auto& want = by_k[k - 1];
                require(got.size() == want.size(), "weight vector length");
                for (size_t i = 0; i < k; ++i)
                    require_close(got[i], want[i], 1e-12,
                                  to_string(scheme) + " k=" + std::to_string(k) + " i=" +
                                      std::to_string(i));
            }
            Classification single = cls({"MaxNumOfLives"});
            require_close(weigh(single, scheme)[0], 1.0, 1e-12, "k=1 coincidence");
        }
    });

    criterion(7, "cdgap: exact extremes and the 2p-1 synthetic-ledger oracle", [] {
        RationaleTally all_c;
        all_c.mass = {{"MaxNumOfLives", 3.0}, {"MaxHope", 1.0}};
        require(cdgap(all_c) == 1.0, "all-consequentialist tally must give exactly +1");
        RationaleTally all_d;
        all_d.mass = {{"Egalitarianism", 0.5}, {"PickRandomly", 0.5}};
        require(cdgap(all_d) == -1.0, "all-deontological tally must give exactly -1");
        RationaleTally even;
        even.mass = {{"MaxNumOfLives", 2.5}, {"Egalitarianism", 2.5}};
        require(cdgap(even) == 0.0, "balanced tally must give exactly 0");

        for (const double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const int n = 1000;
            const int nc = static_cast<int>(p * n);
            std::vector<Classification> cs;
            for (int i = 0; i < n; ++i)
                cs.push_back(cls({i < nc ? "MaxNumOfLives" : "Egalitarianism"}));
            const auto tally = tally_classifications(cs, WeightingScheme::inverse_rank);
            require_close(cdgap(tally), 2.0 * p - 1.0, 1e-12,
                          "deterministic mix p=" + std::to_string(p));
        }

        std::mt19937_64 rng(424242);
        for (const double p : {0.25, 0.5, 0.75}) {
            std::bernoulli_distribution coin(p);
            std::vector<Classification> cs;
            for (int i = 0; i < 1000; ++i)
                cs.push_back(cls({coin(rng) ? "MaxNumOfLives" : "Egalitarianism"}));
            const double got = cdgap(tally_classifications(cs, WeightingScheme::inverse_rank));
            const double se = 2.0 * std::sqrt(p * (1.0 - p) / 1000.0);
            require_close(got, 2.0 * p - 1.0, 3.0 * se, "Bernoulli mix p=" + std::to_string(p));
        }
    });

    criterion(8, "utility: policy extremes and the Bernoulli(0.7) oracle", [] {
        const auto set = generate(GenerationConfig{});
        const VignetteIndex index(set);

        const auto larger = policy_records(set, [](const Vignette& v) {
            return v.group_a.count >= v.group_b.count ? DecisionOutcome::group_a
                                                      : DecisionOutcome::group_b;
        });
        require(utility(larger, index) == 1.0, "always-larger policy must score exactly 1");
        const auto smaller = policy_records(set, [](const Vignette& v) {
            return v.group_a.count <= v.group_b.count ? DecisionOutcome::group_a
                                                      : DecisionOutcome::group_b;
        });
        require(utility(smaller, index) == 0.0, "always-smaller policy must score exactly 0");

        std::vector<const Vignette*> imbalanced;
        for (const auto& v : set.vignettes)
            if (size_class(v) == SizeClass::imbalanced) imbalanced.push_back(&v);
        std::mt19937_64 rng(7);
        std::bernoulli_distribution coin(0.7);
        std::vector<RunRecord> records;
        for (int i = 0; i < 1000; ++i) {
            const auto& v = *imbalanced[static_cast<size_t>(i) % imbalanced.size()];
            RunRecord r;
            r.vignette_id = v.id;
            r.sample_index = i;
            const bool save_larger = coin(rng);
            const bool a_larger = v.group_a.count > v.group_b.count;
            r.decision =
                (save_larger == a_larger) ? DecisionOutcome::group_a : DecisionOutcome::group_b;
            records.push_back(r);
        }
        require_close(utility(records, index), 0.7, 3.0 * std::sqrt(0.7 * 0.3 / 1000.0),
                      "Bernoulli(0.7) utility");
    });

    criterion(9, "consistency: 0 for token-position, 1 for content policy, 0.5 for half", [] {
        const auto set = generate(GenerationConfig{});
        const VignetteIndex index(set);

        const auto always_a =
            policy_records(set, [](const Vignette&) { return DecisionOutcome::group_a; });
        require(consistency(always_a, index) == 0.0, "always-A must score exactly 0");

        const auto content = policy_records(set, [](const Vignette& v) {
            const auto sa = std::make_pair(v.group_a.character_id, v.group_a.count);
            const auto sb = std::make_pair(v.group_b.character_id, v.group_b.count);
            return sa < sb ? DecisionOutcome::group_a : DecisionOutcome::group_b;
        });
        require(consistency(content, index) == 1.0, "content policy must score exactly 1");

        // Consistent on exactly half the pairs: alternate policies by pair.
        std::map<std::string, bool> use_content;
        bool toggle = false;
        for (const auto& v : set.vignettes)
            if (!use_content.count(v.pair_id)) use_content[v.pair_id] = (toggle = !toggle);
        const auto half = policy_records(set, [&](const Vignette& v) {
            if (use_content.at(v.pair_id)) {
                const auto sa = std::make_pair(v.group_a.character_id, v.group_a.count);
                const auto sb = std::make_pair(v.group_b.character_id, v.group_b.count);
                return sa < sb ? DecisionOutcome::group_a : DecisionOutcome::group_b;
            }
            return DecisionOutcome::group_a;
        });
        require(consistency(half, index) == 0.5, "half-consistent policy must score exactly 0.5");
    });

    criterion(10, "statistics: oracle fixtures, F = t^2, agreement and kappa exactness", [] {
        std::mt19937_64 rng(20250608);
        auto sample = [&](size_t n, double mu, double sigma) {
            std::normal_distribution<double> dist(mu, sigma);
            std::vector<double> xs(n);
            for (auto& x : xs) x = dist(rng);
            return xs;
        };
        auto widen = [](const std::vector<double>& xs) {
            return std::vector<long double>(xs.begin(), xs.end());
        };
        std::uniform_int_distribution<size_t> nd(5, 30);
        for (int trial = 0; trial < 20; ++trial) {
            auto x = sample(nd(rng), 0.0, 1.0);
            auto y = x;
            for (auto& v : y) v = 0.4 * v + sample(1, 0.0, 1.0)[0];
            const auto got_r = stats::pearson(x, y);
            const auto want_r = oracle::pearson(widen(x), widen(y));
            require_close(got_r.statistic, static_cast<double>(want_r.statistic), 1e-9,
                          "pearson r");
            require_close(got_r.p_value, static_cast<double>(want_r.p), 1e-6, "pearson p");

            auto a = sample(nd(rng), 0.0, 1.0);
            auto b = sample(nd(rng), 0.3, 1.4);
            const auto got_t = stats::t_test(a, b);
            const auto want_t = oracle::welch(widen(a), widen(b));
            require_close(got_t.statistic, static_cast<double>(want_t.statistic), 1e-9, "welch t");
            require_close(got_t.p_value, static_cast<double>(want_t.p), 1e-6, "welch p");

            std::vector<std::vector<double>> groups;
            std::vector<std::vector<long double>> groups_l;
            std::uniform_int_distribution<int> kd(2, 5);
            for (int g = 0, k = kd(rng); g < k; ++g) {
                groups.push_back(sample(nd(rng), 0.15 * g, 1.0));
                groups_l.push_back(widen(groups.back()));
            }
            const auto got_f = stats::anova(groups);
            const auto want_f = oracle::anova(groups_l);
            require_close(got_f.statistic, static_cast<double>(want_f.statistic), 1e-9, "anova F");
            require_close(got_f.p_value, static_cast<double>(want_f.p), 1e-6, "anova p");

            const auto f2 = stats::anova({a, b});
            const auto tp = stats::pooled_t_test(a, b);
            require_close(f2.statistic, tp.statistic * tp.statistic, 1e-9, "F = t^2 identity");
        }

        const auto scores =
            agreement({cls({"MaxNumOfLives", "MaxHope"})}, {cls({"MaxNumOfLives"})});
        require(scores.precision == 0.5, "agreement precision must be exactly 0.5");
        require(scores.recall == 1.0, "agreement recall must be exactly 1.0");
        require_close(scores.f1, 2.0 / 3.0, 1e-15, "agreement f1");

        const double kappa = cohen_kappa({cls({"MaxHope"})}, {cls({"Egalitarianism"})});
        require(kappa == -1.0, "two-label total disagreement kappa must be exactly -1");
    });

    criterion(11, "end-to-end offline run: generate, run, judge, score, report", [] {
        const auto t0 = std::chrono::steady_clock::now();
        const fs::path dir = fs::temp_directory_path() / "morallens_acceptance_e2e";
        fs::remove_all(dir);
        StoreLayout layout{dir};

        RunConfig cfg;
        ProviderProfile alpha;
        alpha.name = "sim-alpha";
        alpha.model_id = "sim-alpha";
        alpha.endpoint = "mock:decision";
        ProviderProfile beta;
        beta.name = "sim-beta";
        beta.model_id = "sim-beta";
        beta.endpoint = "mock:decision";
        cfg.models = {alpha, beta};
        cfg.judge.model_id = "mock-judge";
        cfg.judge.endpoint = "mock:judge";
        cfg.judge.temperature = 0.0;

        auto manifest = cmd_generate(layout, cfg);
        require(load_scenarios(layout).manifest.total == 640, "e2e: not 640 vignettes");

        const std::vector<PromptOrder> orders = {PromptOrder::reason_then_decide,
                                                 PromptOrder::decide_then_reason};
        const auto run_stats = cmd_run(layout, manifest, {}, orders, kDefaultSamples, true);
        require(run_stats.transport_failures.empty(), "e2e: transport failures");
        require(run_stats.appended == 640ull * 2 * kDefaultSamples * cfg.models.size(),
                "e2e: unexpected record count");

        const auto judge_stats = cmd_judge(layout, manifest, true);
        require(judge_stats.judged == run_stats.appended, "e2e: judged count mismatch");

        (void)cmd_score(layout, manifest, std::nullopt);

        const fs::path cap_file = dir / "capability.tsv";
        {
            std::ofstream cap(cap_file);
            cap << "sim-alpha\t0.82\nsim-beta\t0.66\n";
        }
        (void)cmd_report(layout, manifest, cap_file);

        // Table layout: both orders with overall + the four dimensions populated.
        std::ifstream table(layout.reports_dir() / "summary_table.tsv");
        require(table.good(), "e2e: summary table missing");
        std::string header, post, pre;
        std::getline(table, header);
        std::getline(table, post);
        std::getline(table, pre);
        for (const char* column : {"cdgap_overall", "cdgap_age", "cdgap_gender", "cdgap_svalue",
                                   "cdgap_fitness", "utility_overall", "utility_age",
                                   "utility_gender", "utility_svalue", "utility_fitness"}) {
            require(strutil::contains(header, column),
                    std::string("e2e: summary header lacks ") + column);
        }
        const auto post_cells = strutil::split(post, '\t');
        const auto pre_cells = strutil::split(pre, '\t');
        require(post_cells.size() == 11 && post_cells[0] == "post_decision",
                "e2e: post-decision row malformed");
        require(pre_cells.size() == 11 && pre_cells[0] == "pre_decision",
                "e2e: pre-decision row malformed");
        for (size_t i = 1; i < post_cells.size(); ++i) {
            require(!post_cells[i].empty(), "e2e: empty post-decision metric cell");
            require(!pre_cells[i].empty(), "e2e: empty pre-decision metric cell");
        }

        for (const char* name : {"plot_capability_cdgap.tsv", "plot_capability_utility.tsv",
                                 "plot_rationale_utility.tsv", "plot_response_rate.tsv"}) {
            require(fs::exists(layout.reports_dir() / name),
                    std::string("e2e: missing plot data file ") + name);
        }
        {
            std::ifstream cap_plot(layout.reports_dir() / "plot_capability_cdgap.tsv");
            std::string line;
            int rows = 0;
            while (std::getline(cap_plot, line))
                if (!line.empty()) rows++;
            require(rows >= 3, "e2e: capability plot data has no rows");
        }

        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        require(elapsed < 120.0, "e2e took " + std::to_string(elapsed) + " s (limit 120 s)");
        fs::remove_all(dir);
    });

    if (g_failures == 0) {
        std::printf("all acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d criteria FAILED\n", g_failures);
    return 1;
}
