#pragma once
// Output formats for selection results and reports: the plain index list,
// the provenance JSON, and small helpers shared with the CLI. Every file is
// self-describing: '#' comment headers (or a "config" JSON object) carry the
// producing configuration.

#include "bilaf/boundary_select.hpp"
#include "bilaf/common.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace bilaf {

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline const char* denoise_name(DenoiseStrategy s) {
    switch (s) {
        case DenoiseStrategy::idc: return "idc";
        case DenoiseStrategy::density_based: return "db";
        case DenoiseStrategy::distance_guide: return "dg";
        case DenoiseStrategy::none: return "none";
    }
    return "?";
}

inline DenoiseStrategy parse_denoise(const std::string& s) {
    if (s == "idc") return DenoiseStrategy::idc;
    if (s == "db") return DenoiseStrategy::density_based;
    if (s == "dg") return DenoiseStrategy::distance_guide;
    if (s == "none") return DenoiseStrategy::none;
    throw config_error("unknown denoise strategy \"" + s + "\" (expected idc|db|dg|none)");
}

inline const char* criterion_name(SelectionCriterion c) {
    return c == SelectionCriterion::boundary_score ? "bs" : "bd";
}

inline SelectionCriterion parse_criterion(const std::string& s) {
    if (s == "bs") return SelectionCriterion::boundary_score;
    if (s == "bd") return SelectionCriterion::basic_distance;
    throw config_error("unknown criterion \"" + s + "\" (expected bs|bd)");
}

inline const char* process_name(SelectionProcess p) {
    return p == SelectionProcess::iterative_removal ? "isr" : "os";
}

inline SelectionProcess parse_process(const std::string& s) {
    if (s == "isr") return SelectionProcess::iterative_removal;
    if (s == "os") return SelectionProcess::one_shot;
    throw config_error("unknown process \"" + s + "\" (expected isr|os)");
}

inline const char* stage_name(PickStage s) { return s == PickStage::core ? "core" : "boundary"; }

// Ordered key=value pairs describing the producing run; rendered into '#'
// headers and the JSON "config" object.
using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

inline ConfigEcho echo_selection_config(const SelectionConfig& cfg) {
    return {
        {"budget", std::to_string(cfg.budget)},
        {"cores", std::to_string(cfg.core_count)},
        {"knn_k", std::to_string(cfg.knn_k)},
        {"removal_ratio", fmt_g(cfg.removal_ratio)},
        {"include_fraction", fmt_g(cfg.include_fraction)},
        {"delta", fmt_g(cfg.opponent_delta)},
        {"denoise", denoise_name(cfg.denoise)},
        {"criterion", criterion_name(cfg.criterion)},
        {"process", process_name(cfg.process)},
        {"opponent_penalty", cfg.use_opponent_penalty ? "on" : "off"},
        {"seed", std::to_string(cfg.seed)},
    };
}

inline void write_indices_txt(const std::filesystem::path& path,
                              const std::vector<std::size_t>& indices, const ConfigEcho& echo) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out << "# bilaf selected indices\n";
    for (const auto& [key, value] : echo) out << "# " << key << " = " << value << "\n";
    for (std::size_t idx : indices) out << idx << "\n";
    if (!out) throw io_error("write failed: " + path.string());
}

inline std::vector<std::size_t> read_indices_txt(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open selection file: " + path.string());
    std::vector<std::size_t> indices;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        try {
            indices.push_back(std::stoull(line));
        } catch (const std::exception&) {
            throw format_error(path.string() + ": line " + std::to_string(line_no) +
                               ": expected a sample index, got \"" + line + "\"");
        }
    }
    if (indices.empty()) throw format_error(path.string() + ": no indices found");
    return indices;
}

inline nlohmann::json selection_to_json(const SelectionResult& result, const ConfigEcho& echo) {
    nlohmann::json j;
    nlohmann::json config = nlohmann::json::object();
    for (const auto& [key, value] : echo) config[key] = value;
    j["config"] = config;
    j["per_cluster_budget"] = result.per_cluster_budget;
    j["center_indices"] = result.center_indices;
    nlohmann::json picks = nlohmann::json::array();
    for (const SelectionPick& p : result.selected) {
        nlohmann::json rec;
        rec["index"] = p.index;
        rec["pseudo_class"] = p.pseudo_class;
        rec["stage"] = stage_name(p.stage);
        if (p.boundary_score_at_pick) rec["boundary_score"] = *p.boundary_score_at_pick;
        if (p.opponent_class) rec["opponent_class"] = *p.opponent_class;
        picks.push_back(std::move(rec));
    }
    j["selected"] = std::move(picks);
    return j;
}

inline void write_selection_json(const std::filesystem::path& path, const SelectionResult& result,
                                 const ConfigEcho& echo) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out << selection_to_json(result, echo).dump(2) << "\n";
    if (!out) throw io_error("write failed: " + path.string());
}

// Denoise report as JSON, for the external visualization path.
inline nlohmann::json denoise_to_json(const DenoiseReport& report) {
    return {{"kept", report.kept},
            {"removed", report.removed},
            {"inclusion_order", report.inclusion_order}};
}

} // namespace bilaf
