#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace morallens {

/// Append-only line-delimited JSON record file. One record per line, flushed
/// per append, so an interrupted run loses at most the line in flight and a
/// rerun resumes by key.
class JsonlStore {
public:
    explicit JsonlStore(std::filesystem::path path) : path_(std::move(path)) {}

    const std::filesystem::path& path() const { return path_; }
    bool exists() const { return std::filesystem::exists(path_); }

    std::vector<nlohmann::ordered_json> load() const {
        std::vector<nlohmann::ordered_json> out;
        std::ifstream in(path_);
        if (!in) return out;
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            try {
                out.push_back(nlohmann::ordered_json::parse(line));
            } catch (const std::exception& e) {
                throw std::runtime_error(path_.string() + ":" + std::to_string(lineno) +
                                         ": bad record: " + e.what());
            }
        }
        return out;
    }

    /// Keys already present, read via the given field extractor.
    template <typename KeyFn>
    std::set<std::string> existing_keys(KeyFn key_of) const {
        std::set<std::string> keys;
        for (const auto& rec : load()) keys.insert(key_of(rec));
        return keys;
    }

    void append(const nlohmann::ordered_json& record) {
        std::ofstream out(path_, std::ios::app);
        if (!out) throw std::runtime_error("cannot open for append: " + path_.string());
        out << record.dump() << "\n";
        out.flush();
        if (!out.good()) throw std::runtime_error("append failed: " + path_.string());
    }

private:
    std::filesystem::path path_;
};

}  // namespace morallens
