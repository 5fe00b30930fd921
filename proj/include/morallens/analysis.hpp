#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "morallens/metrics.hpp"
#include "morallens/stats.hpp"
#include "morallens/util.hpp"

namespace morallens {

struct PairedSeries {
    std::vector<std::string> labels;
    std::vector<double> x;
    std::vector<double> y;

    void validate() const {
        if (labels.size() != x.size() || x.size() != y.size())
            throw std::invalid_argument("paired series: length mismatch");
        if (labels.size() < 2) throw std::invalid_argument("paired series: need n >= 2");
        std::set<std::string> seen(labels.begin(), labels.end());
        if (seen.size() != labels.size())
            throw std::invalid_argument("paired series: duplicate labels");
    }
};

inline stats::TestResult pearson(const PairedSeries& series) {
    series.validate();
    return stats::pearson(series.x, series.y);
}

// ---------------------------------------------------------------------------
// Capability ingestion (external MMLU-style scores)
// ---------------------------------------------------------------------------

/// Two-column delimited text: model id, score in [0,1]. '#' starts a comment.
/// Aliases map external ids onto provider ids before the join.
inline std::map<std::string, double> parse_capability_table(
    std::istream& in, const std::map<std::string, std::string>& aliases = {}) {
    std::map<std::string, double> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string trimmed = strutil::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        // Split on the last run of whitespace/comma/tab so ids may contain spaces.
        const size_t sep = trimmed.find_last_of(" \t,");
        if (sep == std::string::npos)
            throw std::invalid_argument("capability file line " + std::to_string(lineno) +
                                        ": expected <model id> <score>");
        std::string id = strutil::trim(trimmed.substr(0, sep));
        while (!id.empty() && (id.back() == ',' || id.back() == '\t')) id.pop_back();
        const std::string score_text = strutil::trim(trimmed.substr(sep + 1));
        double score = 0.0;
        try {
            score = std::stod(score_text);
        } catch (const std::exception&) {
            throw std::invalid_argument("capability file line " + std::to_string(lineno) +
                                        ": bad score '" + score_text + "'");
        }
        if (score < 0.0 || score > 1.0)
            throw std::invalid_argument("capability score out of [0,1]: " + score_text);
        if (auto it = aliases.find(id); it != aliases.end()) id = it->second;
        if (!out.emplace(id, score).second)
            throw std::invalid_argument("duplicate model id in capability file: " + id);
    }
    return out;
}

struct CapabilityJoin {
    PairedSeries series;                  // x = capability, y = metric
    std::vector<std::string> unmatched;   // models without a capability score
};

/// Inner join of per-model metric values with capability scores.
inline CapabilityJoin capability_join(const std::vector<std::pair<std::string, double>>& metric_by_model,
                                      const std::map<std::string, double>& capability) {
    CapabilityJoin out;
    for (const auto& [model, value] : metric_by_model) {
        auto it = capability.find(model);
        if (it == capability.end()) {
            out.unmatched.push_back(model);
            continue;
        }
        out.series.labels.push_back(model);
        out.series.x.push_back(it->second);
        out.series.y.push_back(value);
    }
    if (out.series.labels.size() < 2)
        throw std::invalid_argument("capability join: fewer than 2 matched models");
    out.series.validate();
    return out;
}

// ---------------------------------------------------------------------------
// Rationale-vs-utility correlations
// ---------------------------------------------------------------------------

struct RationaleCorrelationRow {
    std::string label;
    std::optional<double> r_pre;   // reason_then_decide
    std::optional<double> r_post;  // decide_then_reason
};

/// Per taxonomy label: Pearson r between each model's proportion of that
/// rationale and its utility, separately per prompt order. Requires at least
/// three models with variance on both sides; blank otherwise.
inline std::vector<RationaleCorrelationRow> rationale_utility_correlations(
    const JudgedLedger& ledger, const VignetteIndex& index, WeightingScheme scheme) {
    struct Cell {
        RationaleTally tally;
        std::vector<RunRecord> records;
    };
    std::map<std::pair<std::string, PromptOrder>, Cell> cells;
    for (const auto& r : ledger.records) {
        auto& cell = cells[{r.model_id, r.order}];
        cell.tally.scheme = scheme;
        cell.records.push_back(r);
        if (r.failed) continue;
        if (auto it = ledger.classification_by_key.find(r.key());
            it != ledger.classification_by_key.end())
            cell.tally.add(it->second);
    }

    // Per (model, order): utility and per-label mass fraction.
    struct ModelPoint {
        double utility = 0.0;
        std::map<std::string, double> proportion;
    };
    std::map<PromptOrder, std::vector<ModelPoint>> by_order;
    for (auto& [key, cell] : cells) {
        const double total = cell.tally.total();
        if (total <= 0.0) continue;
        ModelPoint pt;
        try {
            pt.utility = utility(cell.records, index);
        } catch (const std::invalid_argument&) {
            continue;  // no imbalanced decisions for this model/order
        }
        for (const auto& e : taxonomy()) {
            const auto it = cell.tally.mass.find(e.label);
            pt.proportion[e.label] = it == cell.tally.mass.end() ? 0.0 : it->second / total;
        }
        by_order[key.second].push_back(std::move(pt));
    }

    auto corr_for = [&](PromptOrder order, const std::string& label) -> std::optional<double> {
        const auto it = by_order.find(order);
        if (it == by_order.end() || it->second.size() < 3) return std::nullopt;
        std::vector<double> xs, ys;
        for (const auto& pt : it->second) {
            xs.push_back(pt.proportion.at(label));
            ys.push_back(pt.utility);
        }
        try {
            return stats::pearson(xs, ys).statistic;
        } catch (const std::invalid_argument&) {
            return std::nullopt;  // degenerate variance
        }
    };

    std::vector<RationaleCorrelationRow> rows;
    for (const auto& e : taxonomy()) {
        RationaleCorrelationRow row;
        row.label = e.label;
        row.r_pre = corr_for(PromptOrder::reason_then_decide, e.label);
        row.r_post = corr_for(PromptOrder::decide_then_reason, e.label);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Report emission: delimited tables and per-figure plot data
// ---------------------------------------------------------------------------

struct NamedTest {
    std::string name;
    stats::TestResult result;
};

struct CapabilityPoint {
    std::string model;
    PromptOrder order;
    double capability;
    std::optional<double> cdgap;
    std::optional<double> utility;
};

struct ReportInputs {
    std::vector<ScoreReport> reports;
    std::vector<NamedTest> tests;
    std::vector<RationaleCorrelationRow> rationale_rows;
    std::vector<CapabilityPoint> capability_points;
    // key: model, order
    std::map<std::pair<std::string, PromptOrder>, std::vector<double>> response_rates;
    WeightingScheme scheme = WeightingScheme::inverse_rank;
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << std::fixed << v;
    return os.str();
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out.good()) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace detail

/// The headline table layout: one row per prompt order, metric columns
/// Overall + the four dimensions, values averaged across models.
inline std::string render_summary_table(const std::vector<ScoreReport>& reports) {
    const std::vector<std::pair<std::string, std::optional<Dimension>>> columns = {
        {"overall", std::nullopt},
        {"age", Dimension::age},
        {"gender", Dimension::gender},
        {"svalue", Dimension::social_status},
        {"fitness", Dimension::fitness},
    };
    const std::vector<std::pair<std::string, PromptOrder>> rows = {
        {"post_decision", PromptOrder::decide_then_reason},
        {"pre_decision", PromptOrder::reason_then_decide},
    };

    auto cell_mean = [&](PromptOrder order, std::optional<Dimension> dim,
                         bool want_cdgap) -> std::optional<double> {
        double sum = 0.0;
        size_t n = 0;
        for (const auto& r : reports) {
            if (!r.facet.model_id) continue;  // per-model facets only
            if (r.facet.order != std::optional<PromptOrder>(order)) continue;
            if (r.facet.dimension != dim) continue;
            if (r.facet.size_class_filter || r.facet.sample_index) continue;
            const auto& v = want_cdgap ? r.cdgap_value : r.utility_value;
            if (!v) continue;
            sum += *v;
            n += 1;
        }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    };

    std::string out = "order";
    for (const char* metric : {"cdgap", "utility"})
        for (const auto& [name, _] : columns) out += std::string("\t") + metric + "_" + name;
    out += "\n";
    for (const auto& [row_name, order] : rows) {
        out += row_name;
        for (bool want_cdgap : {true, false})
            for (const auto& [_, dim] : columns)
                out += "\t" + detail::fmt(cell_mean(order, dim, want_cdgap));
        out += "\n";
    }
    return out;
}

inline std::string render_metrics_table(const std::vector<ScoreReport>& reports) {
    std::string out =
        "model\tdimension\tsize_class\torder\tsample\tscheme\tn_records\tn_failed_excluded"
        "\tcdgap\tcdgap_lo\tcdgap_hi\tutility\tutility_lo\tutility_hi\tconsistency\n";
    auto or_all = [](const auto& opt, auto to_text) {
        return opt ? to_text(*opt) : std::string("all");
    };
    for (const auto& r : reports) {
        out += or_all(r.facet.model_id, [](const std::string& s) { return s; });
        out += "\t" + or_all(r.facet.dimension, [](Dimension d) { return to_string(d); });
        out += "\t" + or_all(r.facet.size_class_filter, [](SizeClass s) { return to_string(s); });
        out += "\t" + or_all(r.facet.order, [](PromptOrder o) { return to_string(o); });
        out += "\t" + or_all(r.facet.sample_index, [](int i) { return std::to_string(i); });
        out += "\t" + to_string(r.scheme);
        out += "\t" + std::to_string(r.n_records);
        out += "\t" + std::to_string(r.n_failed_excluded);
        out += "\t" + detail::fmt(r.cdgap_value);
        out += "\t" + detail::fmt(r.cdgap_ci ? std::optional<double>(r.cdgap_ci->lo) : std::nullopt);
        out += "\t" + detail::fmt(r.cdgap_ci ? std::optional<double>(r.cdgap_ci->hi) : std::nullopt);
        out += "\t" + detail::fmt(r.utility_value);
        out +=
            "\t" + detail::fmt(r.utility_ci ? std::optional<double>(r.utility_ci->lo) : std::nullopt);
        out +=
            "\t" + detail::fmt(r.utility_ci ? std::optional<double>(r.utility_ci->hi) : std::nullopt);
        out += "\t" + detail::fmt(r.consistency_value);
        out += "\n";
    }
    return out;
}

/// Writes the faceted metric table, the headline summary, test results, and
/// per-figure plot data files into the destination directory.
inline std::vector<std::filesystem::path> emit_report(const ReportInputs& inputs,
                                                      const std::filesystem::path& destination) {
    if (inputs.reports.empty()) throw std::invalid_argument("emit_report: no reports");
    std::filesystem::create_directories(destination);
    std::vector<std::filesystem::path> written;

    auto emit = [&](const std::string& name, const std::string& content) {
        const auto path = destination / name;
        detail::write_file(path, content);
        written.push_back(path);
    };

    emit("metrics_by_facet.tsv",
         "# scheme: " + to_string(inputs.scheme) + "\n" + render_metrics_table(inputs.reports));
    emit("summary_table.tsv", render_summary_table(inputs.reports));

    {
        std::string t = "name\tstatistic\tdf1\tdf2\tp_value\tnote\n";
        for (const auto& [name, res] : inputs.tests) {
            t += name + "\t" + detail::fmt(res.statistic) + "\t" + detail::fmt(res.df1) + "\t" +
                 detail::fmt(res.df2) + "\t" + detail::fmt(res.p_value) + "\t" + res.note + "\n";
        }
        emit("tests.tsv", t);
    }

    {
        std::string c = "model\torder\tcapability\tcdgap\n";
        std::string u = "model\torder\tcapability\tutility\n";
        for (const auto& p : inputs.capability_points) {
            const std::string prefix =
                p.model + "\t" + to_string(p.order) + "\t" + detail::fmt(p.capability) + "\t";
            if (p.cdgap) c += prefix + detail::fmt(*p.cdgap) + "\n";
            if (p.utility) u += prefix + detail::fmt(*p.utility) + "\n";
        }
        emit("plot_capability_cdgap.tsv", c);
        emit("plot_capability_utility.tsv", u);
    }

    {
        std::string r = "label\tr_reason_then_decide\tr_decide_then_reason\n";
        for (const auto& row : inputs.rationale_rows)
            r += row.label + "\t" + detail::fmt(row.r_pre) + "\t" + detail::fmt(row.r_post) + "\n";
        emit("plot_rationale_utility.tsv", r);
    }

    {
        std::string h = "model\torder";
        for (int i = 1; i <= kMaxAttempts; ++i) h += "\tattempt_" + std::to_string(i);
        h += "\n";
        for (const auto& [key, curve] : inputs.response_rates) {
            h += key.first + "\t" + to_string(key.second);
            for (double v : curve) h += "\t" + detail::fmt(v);
            h += "\n";
        }
        emit("plot_response_rate.tsv", h);
    }

    return written;
}

}  // namespace morallens
