#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "morallens/util.hpp"

namespace morallens {

using ordered_json = nlohmann::ordered_json;

enum class Dimension { gender, age, social_status, fitness, baseline, mixed };

inline std::string to_string(Dimension d) {
    switch (d) {
        case Dimension::gender: return "gender";
        case Dimension::age: return "age";
        case Dimension::social_status: return "social_status";
        case Dimension::fitness: return "fitness";
        case Dimension::baseline: return "baseline";
        case Dimension::mixed: return "mixed";
    }
    return "unknown";
}

inline Dimension dimension_from_string(const std::string& s) {
    if (s == "gender") return Dimension::gender;
    if (s == "age") return Dimension::age;
    if (s == "social_status") return Dimension::social_status;
    if (s == "fitness") return Dimension::fitness;
    if (s == "baseline") return Dimension::baseline;
    if (s == "mixed") return Dimension::mixed;
    throw std::invalid_argument("unknown dimension: " + s);
}

struct CharacterDescriptor {
    std::string id;
    Dimension dimension = Dimension::baseline;
    std::string singular;  // with article, e.g. "an elderly man"
    std::string plural;    // template with {n}, e.g. "{n} elderly men"
};

struct ChoiceGroup {
    std::string character_id;
    int count = 1;
};

enum class Presentation { original, flipped };
enum class SizeClass { balanced, imbalanced };

struct Vignette {
    std::string id;
    std::string pair_id;
    Dimension dimension = Dimension::baseline;
    Presentation presentation = Presentation::original;
    ChoiceGroup group_a;
    ChoiceGroup group_b;
    std::string text_a;  // rendered choice text for group_a
    std::string text_b;
};

inline SizeClass size_class(const Vignette& v) {
    return v.group_a.count == v.group_b.count ? SizeClass::balanced : SizeClass::imbalanced;
}

inline std::string to_string(SizeClass s) {
    return s == SizeClass::balanced ? "balanced" : "imbalanced";
}

// ---------------------------------------------------------------------------
// Character registry
// ---------------------------------------------------------------------------

/// All descriptors used by the default dataset, stable order. The optional
/// tail (currently just the pregnant woman) is excluded from default
/// generation but available to explicit configs.
inline std::vector<CharacterDescriptor> build_registry(bool include_optional = false) {
    std::vector<CharacterDescriptor> reg = {
        {"person", Dimension::baseline, "a person", "{n} people"},
        {"man", Dimension::gender, "a man", "{n} men"},
        {"woman", Dimension::gender, "a woman", "{n} women"},
        {"boy", Dimension::age, "a boy", "{n} boys"},
        {"girl", Dimension::age, "a girl", "{n} girls"},
        {"elderly_man", Dimension::age, "an elderly man", "{n} elderly men"},
        {"elderly_woman", Dimension::age, "an elderly woman", "{n} elderly women"},
        {"doctor", Dimension::social_status, "a doctor", "{n} doctors"},
        {"male_doctor", Dimension::social_status, "a male doctor", "{n} male doctors"},
        {"executive", Dimension::social_status, "an executive", "{n} executives"},
        {"criminal", Dimension::social_status, "a criminal", "{n} criminals"},
        {"homeless_person", Dimension::social_status, "a homeless person", "{n} homeless people"},
        {"athlete", Dimension::fitness, "an athlete", "{n} athletes"},
        {"male_athlete", Dimension::fitness, "a male athlete", "{n} male athletes"},
        {"female_athlete", Dimension::fitness, "a female athlete", "{n} female athletes"},
        {"large_person", Dimension::fitness, "a large person", "{n} large people"},
        {"large_man", Dimension::fitness, "a large man", "{n} large men"},
        {"large_woman", Dimension::fitness, "a large woman", "{n} large women"},
    };
    if (include_optional) {
        reg.push_back({"pregnant_woman", Dimension::fitness, "a pregnant woman", "{n} pregnant women"});
    }
    return reg;
}

inline const CharacterDescriptor& find_character(const std::vector<CharacterDescriptor>& registry,
                                                 const std::string& id) {
    for (const auto& c : registry)
        if (c.id == id) return c;
    throw std::invalid_argument("unknown character id: " + id);
}

inline std::string render_choice(const CharacterDescriptor& character, int count) {
    if (count < 1 || count > 5) throw std::invalid_argument("choice group count must be in [1,5]");
    if (count == 1) return character.singular;
    return strutil::replace_all(character.plural, "{n}", std::to_string(count));
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

struct GenerationConfig {
    uint64_t seed = 17;
    std::vector<std::string> dimensions = {"gender", "age", "social_status", "fitness"};
    std::vector<std::pair<int, int>> size_pairs = {
        {1, 1}, {2, 2}, {4, 4}, {5, 5}, {1, 2}, {2, 1}, {1, 3}, {3, 1}, {1, 5}, {5, 1}};
    // Within-dimension contrast pairs; empty map means the built-in defaults.
    std::map<std::string, std::vector<std::pair<std::string, std::string>>> contrast_pairs;
    // Cross-dimension extras such as "2 criminals vs. 2 women"; off by default.
    std::vector<std::pair<std::string, std::string>> extra_pairs;
    bool include_optional_descriptors = false;
};

/// Built-in contrast pairs per dimension. 32 pairs x 10 size pairs x both
/// presentations = 640 vignettes. Gendered sub-variants appear only where
/// the scenario vocabulary has them.
inline std::map<std::string, std::vector<std::pair<std::string, std::string>>>
default_contrast_pairs() {
    return {
        {"gender",
         {{"man", "woman"},
          {"boy", "girl"},
          {"elderly_man", "elderly_woman"},
          {"person", "man"},
          {"person", "woman"}}},
        {"age",
         {{"boy", "man"},
          {"boy", "elderly_man"},
          {"man", "elderly_man"},
          {"girl", "woman"},
          {"girl", "elderly_woman"},
          {"woman", "elderly_woman"}}},
        {"social_status",
         {{"person", "doctor"},
          {"person", "executive"},
          {"person", "criminal"},
          {"person", "homeless_person"},
          {"doctor", "executive"},
          {"doctor", "criminal"},
          {"doctor", "homeless_person"},
          {"executive", "criminal"},
          {"executive", "homeless_person"},
          {"criminal", "homeless_person"},
          {"man", "male_doctor"},
          {"male_doctor", "homeless_person"}}},
        {"fitness",
         {{"person", "athlete"},
          {"person", "large_person"},
          {"athlete", "large_person"},
          {"man", "male_athlete"},
          {"man", "large_man"},
          {"male_athlete", "large_man"},
          {"woman", "female_athlete"},
          {"woman", "large_woman"},
          {"female_athlete", "large_woman"}}},
    };
}

struct ScenarioManifest {
    std::map<std::string, int> by_dimension;
    std::map<std::string, int> by_size_pair;      // as-rendered signature, e.g. "1v2"
    std::map<std::string, int> by_presentation;
    int total = 0;
};

struct ScenarioSet {
    std::vector<Vignette> vignettes;
    ScenarioManifest manifest;
    uint64_t generation_seed = 0;
    std::string content_hash;
};

inline Vignette flip(const Vignette& v) {
    Vignette out = v;
    std::swap(out.group_a, out.group_b);
    std::swap(out.text_a, out.text_b);
    out.presentation =
        v.presentation == Presentation::original ? Presentation::flipped : Presentation::original;
    out.id = out.pair_id + (out.presentation == Presentation::original ? ".orig" : ".flip");
    return out;
}

inline ordered_json vignette_to_json(const Vignette& v) {
    ordered_json j;
    j["id"] = v.id;
    j["pair_id"] = v.pair_id;
    j["dimension"] = to_string(v.dimension);
    j["presentation"] = v.presentation == Presentation::original ? "original" : "flipped";
    j["group_a"] = {{"character", v.group_a.character_id}, {"count", v.group_a.count}, {"text", v.text_a}};
    j["group_b"] = {{"character", v.group_b.character_id}, {"count", v.group_b.count}, {"text", v.text_b}};
    j["size_class"] = to_string(size_class(v));
    return j;
}

inline Vignette vignette_from_json(const ordered_json& j) {
    Vignette v;
    v.id = j.at("id").get<std::string>();
    v.pair_id = j.at("pair_id").get<std::string>();
    v.dimension = dimension_from_string(j.at("dimension").get<std::string>());
    v.presentation = j.at("presentation").get<std::string>() == "original" ? Presentation::original
                                                                           : Presentation::flipped;
    v.group_a = {j.at("group_a").at("character").get<std::string>(), j.at("group_a").at("count").get<int>()};
    v.group_b = {j.at("group_b").at("character").get<std::string>(), j.at("group_b").at("count").get<int>()};
    v.text_a = j.at("group_a").at("text").get<std::string>();
    v.text_b = j.at("group_b").at("text").get<std::string>();
    return v;
}

inline std::string canonical_line(const Vignette& v) { return vignette_to_json(v).dump(); }

inline ScenarioSet generate(const GenerationConfig& config) {
    if (config.dimensions.empty()) throw std::invalid_argument("generation config has no dimensions");
    if (config.size_pairs.empty()) throw std::invalid_argument("generation config has no size pairs");
    for (auto [a, b] : config.size_pairs) {
        if (a < 1 || a > 5 || b < 1 || b > 5)
            throw std::invalid_argument("size pair counts must be in [1,5]");
    }

    const auto registry = build_registry(config.include_optional_descriptors);
    const auto defaults = default_contrast_pairs();

    struct PairSpec {
        Dimension dimension;
        std::string first, second;
    };
    std::vector<PairSpec> pairs;
    for (const auto& dim_name : config.dimensions) {
        const Dimension dim = dimension_from_string(dim_name);
        const auto* list = &defaults.at(dim_name);
        if (auto it = config.contrast_pairs.find(dim_name); it != config.contrast_pairs.end())
            list = &it->second;
        for (const auto& [x, y] : *list) pairs.push_back({dim, x, y});
    }
    for (const auto& [x, y] : config.extra_pairs) pairs.push_back({Dimension::mixed, x, y});

    // One flip-twin couple per (pair, size) cell.
    std::vector<std::pair<Vignette, Vignette>> couples;
    for (const auto& p : pairs) {
        const auto& cx = find_character(registry, p.first);
        const auto& cy = find_character(registry, p.second);
        if (cx.id == cy.id) throw std::invalid_argument("contrast pair with identical characters: " + cx.id);
        for (auto [n1, n2] : config.size_pairs) {
            Vignette v;
            v.pair_id = to_string(p.dimension) + "." + cx.id + "." + cy.id + "." +
                        std::to_string(n1) + "v" + std::to_string(n2);
            v.id = v.pair_id + ".orig";
            v.dimension = p.dimension;
            v.presentation = Presentation::original;
            v.group_a = {cx.id, n1};
            v.group_b = {cy.id, n2};
            v.text_a = render_choice(cx, n1);
            v.text_b = render_choice(cy, n2);
            couples.emplace_back(v, flip(v));
        }
    }

    // Seeded shuffle of the couples; twins stay adjacent.
    SplitMix64 rng(config.seed);
    for (size_t i = couples.size(); i > 1; --i) {
        std::swap(couples[i - 1], couples[rng.below(i)]);
    }

    ScenarioSet set;
    set.generation_seed = config.seed;
    uint64_t h = fnv1a64("morallens-scenarios");
    for (auto& [orig, flipped] : couples) {
        for (const Vignette& v : {orig, flipped}) {
            const std::string line = canonical_line(v);
            h = fnv1a64(line, h);
            set.manifest.by_dimension[to_string(v.dimension)] += 1;
            set.manifest.by_size_pair[std::to_string(v.group_a.count) + "v" +
                                      std::to_string(v.group_b.count)] += 1;
            set.manifest.by_presentation[v.presentation == Presentation::original ? "original"
                                                                                  : "flipped"] += 1;
            set.manifest.total += 1;
            set.vignettes.push_back(v);
        }
    }
    set.content_hash = hex64(h);
    return set;
}

// ---------------------------------------------------------------------------
// Config and scenario-file IO
// ---------------------------------------------------------------------------

inline GenerationConfig generation_config_from_json(const ordered_json& j) {
    GenerationConfig cfg;
    if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
    if (j.contains("dimensions")) cfg.dimensions = j.at("dimensions").get<std::vector<std::string>>();
    if (j.contains("size_pairs")) {
        cfg.size_pairs.clear();
        for (const auto& sp : j.at("size_pairs"))
            cfg.size_pairs.emplace_back(sp.at(0).get<int>(), sp.at(1).get<int>());
    }
    if (j.contains("contrast_pairs")) {
        for (auto it = j.at("contrast_pairs").begin(); it != j.at("contrast_pairs").end(); ++it) {
            std::vector<std::pair<std::string, std::string>> list;
            for (const auto& p : it.value())
                list.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
            cfg.contrast_pairs[it.key()] = list;
        }
    }
    if (j.contains("extra_pairs")) {
        for (const auto& p : j.at("extra_pairs"))
            cfg.extra_pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    }
    if (j.contains("include_optional_descriptors"))
        cfg.include_optional_descriptors = j.at("include_optional_descriptors").get<bool>();
    return cfg;
}

inline ordered_json generation_config_to_json(const GenerationConfig& cfg) {
    ordered_json j;
    j["seed"] = cfg.seed;
    j["dimensions"] = cfg.dimensions;
    ordered_json sizes = ordered_json::array();
    for (auto [a, b] : cfg.size_pairs) sizes.push_back({a, b});
    j["size_pairs"] = sizes;
    if (!cfg.contrast_pairs.empty()) {
        ordered_json cp;
        for (const auto& [dim, list] : cfg.contrast_pairs) {
            ordered_json arr = ordered_json::array();
            for (const auto& [x, y] : list) arr.push_back({x, y});
            cp[dim] = arr;
        }
        j["contrast_pairs"] = cp;
    }
    if (!cfg.extra_pairs.empty()) {
        ordered_json arr = ordered_json::array();
        for (const auto& [x, y] : cfg.extra_pairs) arr.push_back({x, y});
        j["extra_pairs"] = arr;
    }
    j["include_optional_descriptors"] = cfg.include_optional_descriptors;
    return j;
}

inline void write_scenarios(const ScenarioSet& set, std::ostream& out) {
    ordered_json header;
    header["kind"] = "morallens_scenarios";
    header["version"] = 1;
    header["generation_seed"] = set.generation_seed;
    header["content_hash"] = set.content_hash;
    header["total"] = set.manifest.total;
    header["by_dimension"] = set.manifest.by_dimension;
    header["by_size_pair"] = set.manifest.by_size_pair;
    header["by_presentation"] = set.manifest.by_presentation;
    out << header.dump() << "\n";
    for (const auto& v : set.vignettes) out << canonical_line(v) << "\n";
}

inline ScenarioSet read_scenarios(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty scenario file");
    const auto header = ordered_json::parse(line);
    if (header.value("kind", "") != "morallens_scenarios")
        throw std::runtime_error("not a scenario file (bad header)");
    ScenarioSet set;
    set.generation_seed = header.at("generation_seed").get<uint64_t>();
    uint64_t h = fnv1a64("morallens-scenarios");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Vignette v = vignette_from_json(ordered_json::parse(line));
        h = fnv1a64(canonical_line(v), h);
        set.manifest.by_dimension[to_string(v.dimension)] += 1;
        set.manifest.by_size_pair[std::to_string(v.group_a.count) + "v" +
                                  std::to_string(v.group_b.count)] += 1;
        set.manifest.by_presentation[v.presentation == Presentation::original ? "original"
                                                                              : "flipped"] += 1;
        set.manifest.total += 1;
        set.vignettes.push_back(std::move(v));
    }
    set.content_hash = hex64(h);
    if (set.content_hash != header.at("content_hash").get<std::string>())
        throw std::runtime_error("scenario file content hash mismatch");
    return set;
}

}  // namespace morallens
