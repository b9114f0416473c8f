#pragma once

#include "regret_lab/errors.hpp"
#include "regret_lab/mdp.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace regret_lab {

// MDP file: {"S", "A", "H", "s0", "rewards": H x S x A, "kernel": (H-1) x S x A x S}.

namespace detail {

inline std::size_t require_count(const nlohmann::json& doc, const char* key) {
    if (!doc.contains(key))
        throw ModelError(std::string("MDP file: missing field '") + key + "'");
    const auto& v = doc.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ModelError(std::string("MDP file: field '") + key +
                         "' must be a non-negative integer");
    return v.get<std::size_t>();
}

inline const nlohmann::json& require_array(const nlohmann::json& node, std::size_t size,
                                           const std::string& where) {
    if (!node.is_array() || node.size() != size)
        throw ModelError("MDP file: " + where + " must be an array of length " +
                         std::to_string(size));
    return node;
}

inline double require_number(const nlohmann::json& node, const std::string& where) {
    if (!node.is_number())
        throw ModelError("MDP file: " + where + " must be a number");
    return node.get<double>();
}

inline std::string index_path(const char* name, std::initializer_list<std::size_t> idx) {
    std::string out = name;
    for (auto i : idx)
        out += "[" + std::to_string(i) + "]";
    return out;
}

} // namespace detail

inline nlohmann::json mdp_to_json(const TabularMDP& mdp) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), H = mdp.horizon();
    nlohmann::json rewards = nlohmann::json::array();
    for (std::size_t h = 0; h < H; ++h) {
        nlohmann::json stage = nlohmann::json::array();
        for (std::size_t s = 0; s < S; ++s) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t a = 0; a < A; ++a)
                row.push_back(mdp.reward(h, s, a));
            stage.push_back(std::move(row));
        }
        rewards.push_back(std::move(stage));
    }
    nlohmann::json kernel = nlohmann::json::array();
    for (std::size_t h = 0; h + 1 < H; ++h) {
        nlohmann::json stage = nlohmann::json::array();
        for (std::size_t s = 0; s < S; ++s) {
            nlohmann::json per_action = nlohmann::json::array();
            for (std::size_t a = 0; a < A; ++a) {
                const auto p = mdp.row(h, s, a);
                per_action.push_back(nlohmann::json(std::vector<double>(p.begin(), p.end())));
            }
            stage.push_back(std::move(per_action));
        }
        kernel.push_back(std::move(stage));
    }
    return {{"S", S},          {"A", A},          {"H", H}, {"s0", mdp.initial_state()},
            {"rewards", rewards}, {"kernel", kernel}};
}

/// Builds and validates a model; throws ModelError on the first violation.
inline TabularMDP mdp_from_json(const nlohmann::json& doc) {
    if (!doc.is_object())
        throw ModelError("MDP file: top level must be an object");
    const std::size_t S = detail::require_count(doc, "S");
    const std::size_t A = detail::require_count(doc, "A");
    const std::size_t H = detail::require_count(doc, "H");
    const std::size_t s0 = detail::require_count(doc, "s0");
    if (!doc.contains("rewards") || !doc.contains("kernel"))
        throw ModelError("MDP file: missing field 'rewards' or 'kernel'");

    TabularMDP mdp(S, A, H, s0);
    const auto& rewards = detail::require_array(doc.at("rewards"), H, "rewards");
    for (std::size_t h = 0; h < H; ++h) {
        const auto& stage = detail::require_array(rewards[h], S, detail::index_path("rewards", {h}));
        for (std::size_t s = 0; s < S; ++s) {
            const auto& row =
                detail::require_array(stage[s], A, detail::index_path("rewards", {h, s}));
            for (std::size_t a = 0; a < A; ++a)
                mdp.reward(h, s, a) =
                    detail::require_number(row[a], detail::index_path("rewards", {h, s, a}));
        }
    }
    const auto& kernel = detail::require_array(doc.at("kernel"), H - 1, "kernel");
    for (std::size_t h = 0; h + 1 < H; ++h) {
        const auto& stage = detail::require_array(kernel[h], S, detail::index_path("kernel", {h}));
        for (std::size_t s = 0; s < S; ++s) {
            const auto& per_action =
                detail::require_array(stage[s], A, detail::index_path("kernel", {h, s}));
            for (std::size_t a = 0; a < A; ++a) {
                const auto& probs = detail::require_array(
                    per_action[a], S, detail::index_path("kernel", {h, s, a}));
                auto row = mdp.row(h, s, a);
                for (std::size_t n = 0; n < S; ++n)
                    row[n] = detail::require_number(probs[n],
                                                    detail::index_path("kernel", {h, s, a, n}));
            }
        }
    }
    mdp.validate();
    return mdp;
}

inline TabularMDP load_mdp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open MDP file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelError("MDP file " + path.string() + ": " + e.what());
    }
    return mdp_from_json(doc);
}

inline void save_mdp(const TabularMDP& mdp, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write MDP file " + path.string());
    out << mdp_to_json(mdp).dump(2) << '\n';
    if (!out)
        throw IoError("write failed for " + path.string());
}

} // namespace regret_lab
