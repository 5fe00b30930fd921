#include <doctest.h>

#include <random>
#include <set>

#include <morallens/taxonomy.hpp>

#include "../fixtures_responses.hpp"

using namespace morallens;

namespace {

Classification cls(std::vector<std::string> labels) { return Classification{std::move(labels)}; }

RunRecord record_with_reasoning(const std::string& reasoning, int sample = 0) {
    RunRecord r;
    r.model_id = "m";
    r.vignette_id = "v";
    r.sample_index = sample;
    r.reasoning_text = reasoning;
    r.raw_text = reasoning;
    r.decision = DecisionOutcome::group_a;
    return r;
}

std::string judge_reply(const std::string& labels) {
    return "Analysis:\nA brief step-by-step analysis.\n\nRationales:\n" + labels;
}

ProviderProfile judge_profile() {
    ProviderProfile p;
    p.model_id = "scripted-judge";
    p.temperature = 0.0;
    return p;
}

}  // namespace

TEST_CASE("taxonomy: 17 labels, 8 consequentialist + 8 deontological + Other") {
    const auto& tax = taxonomy();
    CHECK(tax.size() == 17);
    int c = 0, d = 0, o = 0;
    std::set<std::string> unique;
    for (const auto& e : tax) {
        CHECK(unique.insert(e.label).second);
        CHECK(!e.description.empty());
        switch (e.category) {
            case RationaleCategory::consequentialist: c++; break;
            case RationaleCategory::deontological: d++; break;
            case RationaleCategory::other: o++; break;
        }
    }
    CHECK(c == 8);
    CHECK(d == 8);
    CHECK(o == 1);
    CHECK(category_of("Egalitarianism") == RationaleCategory::deontological);
    CHECK(category_of("MaxNumOfLives") == RationaleCategory::consequentialist);
    CHECK(category_of("PickRandomly") == RationaleCategory::deontological);
    CHECK(category_of("SaveTheStrong") == RationaleCategory::consequentialist);
    CHECK_THROWS_AS((void)category_of("NotALabel"), std::invalid_argument);

    // Stable order across calls.
    CHECK(taxonomy()[0].label == tax[0].label);
    CHECK(taxonomy().back().label == "Other");
}

TEST_CASE("taxonomy export carries one row per label") {
    const auto tsv = taxonomy_table_tsv();
    size_t rows = 0;
    for (char ch : tsv)
        if (ch == '\n') rows++;
    CHECK(rows == 18);  // header + 17 labels
    CHECK(strutil::contains(tsv, "MaxNumOfLives\tconsequentialist"));
    CHECK(strutil::contains(tsv, "AppealToLaw\tdeontological"));
}

TEST_CASE("build_judge_prompt: template fidelity") {
    const auto [sys, user] = build_judge_prompt("Some chain of thought.");
    CHECK(strutil::contains(sys, "You are a moral reasoning classifier"));
    CHECK(strutil::contains(sys, "Use a semicolon (;) to separate"));
    CHECK(strutil::contains(user, "Scratchpad:\nSome chain of thought."));
    CHECK(strutil::contains(user, "RATIONALES:"));
    CHECK(strutil::contains(user, "Label1; Label2; Label3; ..."));
    CHECK(strutil::contains(user, "Analysis:"));
    // Every taxonomy label and description is embedded.
    for (const auto& e : taxonomy()) {
        CHECK(strutil::contains(user, e.label + ": " + e.description));
    }
    CHECK_THROWS_AS((void)build_judge_prompt("   "), std::invalid_argument);
}

TEST_CASE("build_judge_prompt depends only on the reasoning text") {
    const auto a = build_judge_prompt("identical trace");
    const auto b = build_judge_prompt("identical trace");
    CHECK(a.user_text == b.user_text);
    CHECK(a.system_text == b.system_text);
}

TEST_CASE("parse_judge: canonical and case-insensitive matching") {
    auto r = parse_judge(judge_reply("MaxNumOfLives; MaxHope"));
    REQUIRE(r.ok());
    CHECK(r.value().labels == std::vector<std::string>{"MaxNumOfLives", "MaxHope"});

    auto r2 = parse_judge(judge_reply("Retributivejustice; PickRandomly"));
    REQUIRE(r2.ok());
    CHECK(r2.value().labels == std::vector<std::string>{"RetributiveJustice", "PickRandomly"});

    auto r3 = parse_judge(judge_reply("max number of lives"));
    REQUIRE(r3.ok());
    CHECK(r3.value().labels == std::vector<std::string>{"MaxNumOfLives"});

    auto dup = parse_judge(judge_reply("MaxHope; maxhope; MaxHope."));
    REQUIRE(dup.ok());
    CHECK(dup.value().labels == std::vector<std::string>{"MaxHope"});
}

TEST_CASE("parse_judge: error paths") {
    auto missing = parse_judge("Analysis:\nNo final section.");
    REQUIRE(!missing.ok());
    CHECK(missing.error().kind == JudgeError::Kind::missing_rationales_section);

    auto invalid = parse_judge(judge_reply("FooBar"));
    REQUIRE(!invalid.ok());
    CHECK(invalid.error().kind == JudgeError::Kind::no_valid_labels);
}

TEST_CASE("parse_judge: uses the final Rationales: section and stops at blank lines") {
    const std::string text =
        "Analysis:\nThe word Rationales: appears here too.\n\n"
        "Rationales:\nEgalitarianism; SaveTheVulnerable\n\nNote: trailing prose ignored.";
    auto r = parse_judge(text);
    REQUIRE(r.ok());
    CHECK(r.value().labels == std::vector<std::string>{"Egalitarianism", "SaveTheVulnerable"});
}

TEST_CASE("parse_judge: Other alongside concrete labels is dropped") {
    auto r = parse_judge(judge_reply("Other; MaxNumOfLives"));
    REQUIRE(r.ok());
    CHECK(r.value().labels == std::vector<std::string>{"MaxNumOfLives"});

    auto solo = parse_judge(judge_reply("Other"));
    REQUIRE(solo.ok());
    CHECK(solo.value().labels == std::vector<std::string>{"Other"});
}

TEST_CASE("every corpus transcript's label line parses to canonical labels") {
    for (const auto& fx : fixtures::corpus()) {
        auto r = parse_judge(judge_reply(fx.label_line));
        REQUIRE_MESSAGE(r.ok(), "label line: ", fx.label_line);
        CHECK(r.value().labels == fx.expected_labels);
        r.value().validate();
    }
}

TEST_CASE("parse_judge inverts Classification::render") {
    std::mt19937_64 rng(11);
    const auto& tax = taxonomy();
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> pool;
        for (const auto& e : tax)
            if (e.label != "Other") pool.push_back(e.label);
        std::shuffle(pool.begin(), pool.end(), rng);
        const size_t k = 1 + rng() % 4;
        Classification c;
        c.labels.assign(pool.begin(), pool.begin() + static_cast<long>(k));
        c.validate();
        const auto round = parse_judge(judge_reply(c.render()));
        REQUIRE(round.ok());
        CHECK(round.value().labels == c.labels);
    }
}

TEST_CASE("classification invariants enforced") {
    CHECK_THROWS_AS(cls({}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(cls({"MaxHope", "MaxHope"}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(cls({"Other", "MaxHope"}).validate(), std::invalid_argument);
    CHECK_NOTHROW(cls({"Other"}).validate());
    CHECK_NOTHROW(cls({"MaxHope", "Egalitarianism"}).validate());
}

TEST_CASE("classify: scripted judge echoes valid labels") {
    std::vector<RunRecord> records = {record_with_reasoning("save more lives", 0),
                                      record_with_reasoning("treat everyone equally", 1)};
    auto judge = ScriptedProvider::sequence(
        {{judge_reply("MaxNumOfLives")}, {judge_reply("Egalitarianism")}}, judge_profile());
    const auto out = classify(records, *judge);
    REQUIRE(out.size() == 2);
    CHECK(out[0].classification.labels == std::vector<std::string>{"MaxNumOfLives"});
    CHECK(out[1].classification.labels == std::vector<std::string>{"Egalitarianism"});
    CHECK(out[0].judge_attempts == 1);
    CHECK(!out[0].flagged);
}

TEST_CASE("classify: invalid then valid consumes two judge attempts") {
    std::vector<RunRecord> records = {record_with_reasoning("some trace")};
    auto judge = ScriptedProvider::sequence({{"no sections here"}, {judge_reply("MaxHope")}},
                                            judge_profile());
    const auto out = classify(records, *judge);
    REQUIRE(out.size() == 1);
    CHECK(out[0].judge_attempts == 2);
    CHECK(out[0].classification.labels == std::vector<std::string>{"MaxHope"});
    CHECK(!out[0].flagged);
}

TEST_CASE("classify: persistently invalid judge falls back to Other with a flag") {
    std::vector<RunRecord> records = {record_with_reasoning("some trace")};
    auto judge =
        ScriptedProvider::sequence({{"nope"}, {"still nope"}, {"unused"}}, judge_profile());
    const auto out = classify(records, *judge);
    REQUIRE(out.size() == 1);
    CHECK(out[0].classification.labels == std::vector<std::string>{"Other"});
    CHECK(out[0].flagged);
    CHECK(out[0].judge_attempts == 2);
}

TEST_CASE("classify: skips failed and deliberation-free records, requires temp 0") {
    RunRecord failed = record_with_reasoning("anything");
    failed.failed = true;
    RunRecord empty = record_with_reasoning("");
    std::vector<RunRecord> records = {failed, empty};
    auto judge = ScriptedProvider::sequence({{judge_reply("MaxHope")}}, judge_profile());
    CHECK(classify(records, *judge).empty());

    ProviderProfile warm = judge_profile();
    warm.temperature = 1.0;
    auto hot_judge = ScriptedProvider::sequence({{judge_reply("MaxHope")}}, warm);
    CHECK_THROWS_AS((void)classify(records, *hot_judge), std::invalid_argument);
}

TEST_CASE("classify never emits an empty label list") {
    std::vector<RunRecord> records;
    for (int i = 0; i < 6; ++i) records.push_back(record_with_reasoning("trace", i));
    auto judge = ScriptedProvider::sequence(
        {{judge_reply("MaxHope")}, {"bad"}, {"bad"}, {judge_reply("FooBar")}, {"bad"},
         {judge_reply("Egalitarianism; MaxNumOfLives")}, {"x"}, {"x"}, {"x"}, {"x"}, {"x"}, {"x"}},
        judge_profile());
    const auto out = classify(records, *judge);
    for (const auto& jr : out) {
        CHECK(!jr.classification.labels.empty());
        jr.classification.validate();
    }
}

TEST_CASE("agreement: worked examples") {
    auto perfect = agreement({cls({"MaxHope", "MaxNumOfLives"})}, {cls({"MaxNumOfLives", "MaxHope"})});
    CHECK(perfect.precision == doctest::Approx(1.0));
    CHECK(perfect.recall == doctest::Approx(1.0));
    CHECK(perfect.f1 == doctest::Approx(1.0));

    auto partial = agreement({cls({"MaxHope", "MaxNumOfLives"})}, {cls({"MaxHope"})});
    CHECK(partial.precision == doctest::Approx(0.5));
    CHECK(partial.recall == doctest::Approx(1.0));
    CHECK(partial.f1 == doctest::Approx(2.0 / 3.0));

    auto disjoint = agreement({cls({"MaxHope"})}, {cls({"Egalitarianism"})});
    CHECK(disjoint.precision == doctest::Approx(0.0));
    CHECK(disjoint.recall == doctest::Approx(0.0));
    CHECK(disjoint.f1 == doctest::Approx(0.0));

    CHECK_THROWS_AS((void)agreement({cls({"MaxHope"})}, {}), std::invalid_argument);
    CHECK_THROWS_AS((void)agreement({}, {}), std::invalid_argument);
}

TEST_CASE("agreement: swapping predicted and gold swaps precision and recall") {
    std::mt19937_64 rng(5);
    const auto& tax = taxonomy();
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Classification> a, b;
        for (int i = 0; i < 8; ++i) {
            std::vector<std::string> pool;
            for (const auto& e : tax)
                if (e.label != "Other") pool.push_back(e.label);
            std::shuffle(pool.begin(), pool.end(), rng);
            a.push_back(cls({pool.begin(), pool.begin() + 1 + static_cast<long>(rng() % 3)}));
            std::shuffle(pool.begin(), pool.end(), rng);
            b.push_back(cls({pool.begin(), pool.begin() + 1 + static_cast<long>(rng() % 3)}));
        }
        const auto ab = agreement(a, b);
        const auto ba = agreement(b, a);
        CHECK(ab.precision == doctest::Approx(ba.recall).epsilon(1e-12));
        CHECK(ab.recall == doctest::Approx(ba.precision).epsilon(1e-12));
    }
}

TEST_CASE("cohen_kappa: identical annotations give 1") {
    std::vector<Classification> a = {cls({"MaxHope"}), cls({"Egalitarianism", "PickRandomly"})};
    CHECK(cohen_kappa(a, a) == doctest::Approx(1.0));
}

TEST_CASE("cohen_kappa: total disagreement over a two-label universe gives -1") {
    const double k = cohen_kappa({cls({"MaxHope"})}, {cls({"Egalitarianism"})});
    CHECK(k == doctest::Approx(-1.0));
}

TEST_CASE("cohen_kappa: independent annotators with matched marginals are near 0") {
    std::mt19937_64 rng(314159);
    std::bernoulli_distribution coin(0.4);
    const std::vector<std::string> pool = {"MaxHope", "MaxNumOfLives", "Egalitarianism",
                                           "PickRandomly"};
    std::vector<Classification> a, b;
    for (int i = 0; i < 20000; ++i) {
        Classification ca, cb;
        for (const auto& l : pool) {
            if (coin(rng)) ca.labels.push_back(l);
            if (coin(rng)) cb.labels.push_back(l);
        }
        a.push_back(ca);
        b.push_back(cb);
    }
    CHECK(std::fabs(cohen_kappa(a, b)) < 0.05);
}

TEST_CASE("cohen_kappa: errors on misaligned or empty input") {
    CHECK_THROWS_AS((void)cohen_kappa({}, {}), std::invalid_argument);
    CHECK_THROWS_AS((void)cohen_kappa({cls({"MaxHope"})}, {}), std::invalid_argument);
}

TEST_CASE("annotation file import: keys, label normalization, errors") {
    std::istringstream in(
        "# gold annotations\n"
        "m|v1|0|reason_then_decide\tMaxNumOfLives; MaxHope\n"
        "m|v2|0|reason_then_decide\tRetributivejustice\n");
    const auto rows = parse_annotation_file(in);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].first == "m|v1|0|reason_then_decide");
    CHECK(rows[0].second.labels == std::vector<std::string>{"MaxNumOfLives", "MaxHope"});
    CHECK(rows[1].second.labels == std::vector<std::string>{"RetributiveJustice"});

    std::istringstream dup("k\tMaxHope\nk\tMaxHope\n");
    CHECK_THROWS_AS((void)parse_annotation_file(dup), std::invalid_argument);
    std::istringstream unknown("k\tNotALabel\n");
    CHECK_THROWS_AS((void)parse_annotation_file(unknown), std::invalid_argument);
    std::istringstream no_tab("k MaxHope\n");
    CHECK_THROWS_AS((void)parse_annotation_file(no_tab), std::invalid_argument);
}
