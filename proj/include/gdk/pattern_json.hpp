#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

#include "gdk/io.hpp"
#include "gdk/pattern.hpp"

namespace gdk {

using ordered_json = nlohmann::ordered_json;

// Canonical files carry at most 9 significant digits; rounding before dump
// keeps save(load(file)) byte-stable.
inline double round_sig9(double v) {
    if (v == 0.0 || !std::isfinite(v)) return v == 0.0 ? 0.0 : v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

inline ordered_json pattern_to_json(const Pattern& p) {
    ordered_json root;
    root["name"] = p.name;
    root["panels"] = ordered_json::array();
    for (const Panel& panel : p.panels) {
        ordered_json jp;
        jp["name"] = panel.name;
        jp["rotation"] = {round_sig9(panel.rotation_deg.x), round_sig9(panel.rotation_deg.y),
                          round_sig9(panel.rotation_deg.z)};
        jp["translation"] = {round_sig9(panel.translation.x), round_sig9(panel.translation.y),
                             round_sig9(panel.translation.z)};
        jp["edges"] = ordered_json::array();
        for (const Edge2D& e : panel.edges) {
            ordered_json je;
            je["start"] = {round_sig9(e.start.x), round_sig9(e.start.y)};
            je["control_points"] = ordered_json::array();
            for (Vec2 c : e.control_points)
                je["control_points"].push_back({round_sig9(c.x), round_sig9(c.y)});
            if (e.arc) {
                je["arc"] = {{"radius", round_sig9(e.arc->radius)},
                             {"large_arc", e.arc->large_arc},
                             {"ccw", e.arc->ccw}};
            } else {
                je["arc"] = nullptr;
            }
            jp["edges"].push_back(std::move(je));
        }
        root["panels"].push_back(std::move(jp));
    }
    root["stitches"] = ordered_json::array();
    for (const Stitch& s : p.stitches) {
        root["stitches"].push_back(
            {{s.first.panel, s.first.edge}, {s.second.panel, s.second.edge}});
    }
    return root;
}

inline Pattern pattern_from_json(const ordered_json& root) {
    Pattern p;
    try {
        p.name = root.at("name").get<std::string>();
        for (const auto& jp : root.at("panels")) {
            Panel panel;
            panel.name = jp.at("name").get<std::string>();
            const auto& rot = jp.at("rotation");
            panel.rotation_deg = {rot.at(0).get<double>(), rot.at(1).get<double>(),
                                  rot.at(2).get<double>()};
            const auto& tr = jp.at("translation");
            panel.translation = {tr.at(0).get<double>(), tr.at(1).get<double>(),
                                 tr.at(2).get<double>()};
            for (const auto& je : jp.at("edges")) {
                Edge2D e;
                e.start = {je.at("start").at(0).get<double>(), je.at("start").at(1).get<double>()};
                for (const auto& jc : je.at("control_points"))
                    e.control_points.push_back({jc.at(0).get<double>(), jc.at(1).get<double>()});
                if (je.contains("arc") && !je.at("arc").is_null()) {
                    const auto& ja = je.at("arc");
                    e.arc = ArcParams{ja.at("radius").get<double>(),
                                      ja.at("large_arc").get<bool>(), ja.at("ccw").get<bool>()};
                }
                panel.edges.push_back(std::move(e));
            }
            p.panels.push_back(std::move(panel));
        }
        for (const auto& js : root.at("stitches")) {
            Stitch s;
            s.first = {js.at(0).at(0).get<int>(), js.at(0).at(1).get<int>()};
            s.second = {js.at(1).at(0).get<int>(), js.at(1).at(1).get<int>()};
            p.stitches.push_back(s);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed pattern JSON: ") + e.what());
    }
    validate_pattern(p);
    return p;
}

inline std::string pattern_to_string(const Pattern& p) {
    return pattern_to_json(p).dump(2) + "\n";
}

inline Pattern load_pattern(const std::string& path) {
    ordered_json root;
    try {
        root = ordered_json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("cannot parse " + path + ": " + e.what());
    }
    return pattern_from_json(root);
}

inline void save_pattern(const Pattern& p, const std::string& path) {
    write_text_file(path, pattern_to_string(p));
}

}  // namespace gdk
