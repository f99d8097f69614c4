#pragma once

// Collection workspace: one directory whose lsd.json manifest is the source
// of truth for every artifact (path + SHA-256), plus the echoed config.

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lsd/error.hpp"
#include "lsd/io/container.hpp"
#include "lsd/io/hash.hpp"

namespace lsd::io
{

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kManifestName = "lsd.json";

/** @brief Tolerances and dimensions for the whole pipeline */
struct Config {
    Index k{60};
    Index m{40};
    Index dense_limit{2000};
    double cluster_gap{1e-8};
    double landmark_radius{0.05};
    double tikhonov{1e-12};
    double regularizer{1e-3};
    double within_weight{1.0};
    double max_condition{1e8};
    double gap_warning{1e-10};

    json to_json() const
    {
        return {{"k", k},
                {"m", m},
                {"dense_limit", dense_limit},
                {"cluster_gap", cluster_gap},
                {"landmark_radius", landmark_radius},
                {"tikhonov", tikhonov},
                {"regularizer", regularizer},
                {"within_weight", within_weight},
                {"max_condition", max_condition},
                {"gap_warning", gap_warning}};
    }

    static Config from_json(const json& j)
    {
        Config c;
        for (const auto& [key, value] : j.items()) {
            if (key == "k") {
                c.k = value.get<Index>();
            } else if (key == "m") {
                c.m = value.get<Index>();
            } else if (key == "dense_limit") {
                c.dense_limit = value.get<Index>();
            } else if (key == "cluster_gap") {
                c.cluster_gap = value.get<double>();
            } else if (key == "landmark_radius") {
                c.landmark_radius = value.get<double>();
            } else if (key == "tikhonov") {
                c.tikhonov = value.get<double>();
            } else if (key == "regularizer") {
                c.regularizer = value.get<double>();
            } else if (key == "within_weight") {
                c.within_weight = value.get<double>();
            } else if (key == "max_condition") {
                c.max_condition = value.get<double>();
            } else if (key == "gap_warning") {
                c.gap_warning = value.get<double>();
            } else {
                fail(ErrorCode::ParseError, "unknown config key '" + key + "'");
            }
        }
        return c;
    }
};

inline json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

class Workspace
{
public:
    explicit Workspace(std::filesystem::path root) : root_(std::move(root))
    {
        if (std::filesystem::exists(manifest_path())) {
            manifest_ = read_json(manifest_path());
        } else {
            manifest_ = {{"tool", "lsd"}, {"version", kToolVersion}};
        }
    }

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path manifest_path() const { return root_ / kManifestName; }
    json& manifest() { return manifest_; }
    const json& manifest() const { return manifest_; }

    std::filesystem::path resolve(const std::string& rel) const
    {
        const std::filesystem::path p(rel);
        return p.is_absolute() ? p : root_ / p;
    }

    /// Writes a matrix artifact and returns its manifest entry.
    json put_matrix(const std::string& rel, const Mat& m) const
    {
        const auto bytes = encode_matrix(m);
        write_atomic(resolve(rel), bytes.data(), bytes.size());
        return {{"path", rel}, {"sha256", sha256_hex(bytes.data(), bytes.size())}};
    }

    json put_text(const std::string& rel, const std::string& text) const
    {
        write_atomic(resolve(rel), text);
        return {{"path", rel}, {"sha256", sha256_hex(text)}};
    }

    Mat get_matrix(const json& entry) const
    {
        check_entry(entry);
        return read_matrix(resolve(entry.at("path").get<std::string>()));
    }

    Vec get_vector(const json& entry) const
    {
        const Mat m = get_matrix(entry);
        require(m.cols() == 1, ErrorCode::DimensionMismatch, "expected a column vector artifact");
        return m.col(0);
    }

    void check_entry(const json& entry) const
    {
        const std::string rel = entry.at("path").get<std::string>();
        const auto path = resolve(rel);
        if (!std::filesystem::exists(path)) {
            fail(ErrorCode::IntegrityError, "manifest references missing file " + rel);
        }
        if (sha256_file(path) != entry.at("sha256").get<std::string>()) {
            fail(ErrorCode::IntegrityError, "hash mismatch for " + rel);
        }
    }

    /// Checks every {path, sha256} entry reachable from the manifest.
    void verify_all() const { verify_node(manifest_); }

    void save() { write_json(manifest_path(), manifest_); }

    Config config() const
    {
        return manifest_.contains("config") ? Config::from_json(manifest_.at("config")) : Config{};
    }

private:
    void verify_node(const json& node) const
    {
        if (node.is_object()) {
            if (node.contains("path") && node.contains("sha256")) {
                check_entry(node);
                return;
            }
            for (const auto& [key, value] : node.items()) {
                verify_node(value);
            }
        } else if (node.is_array()) {
            for (const auto& value : node) {
                verify_node(value);
            }
        }
    }

    std::filesystem::path root_;
    json manifest_;
};

}  // namespace lsd::io
