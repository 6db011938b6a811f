#pragma once

#include "json.hpp"
#include "rsum/cases.hpp"
#include "rsum/numerics.hpp"
#include "rsum/rational.hpp"
#include "rsum/surd.hpp"

#include <fstream>
#include <string>

namespace rsum {

using json = nlohmann::json;

enum class Verdict { verified, violated, error };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::verified: return "verified";
        case Verdict::violated: return "violated";
        default: return "error";
    }
}

inline Verdict verdict_from(const std::string& s) {
    if (s == "verified") return Verdict::verified;
    if (s == "violated") return Verdict::violated;
    if (s == "error") return Verdict::error;
    throw ParseError("unknown verdict '" + s + "'");
}

// exact values travel as strings, never as floats
inline json jq(const Rational& r) { return r.get_str(); }
inline json jsurd(const SurdValue& s) { return json{{"exact", s.str()}, {"approx", s.to_double()}}; }
inline json jencl(const RigorousValue& v) { return json::array({v.lower(), v.upper()}); }
inline Rational q_from(const json& j) { return parse_rational(j.get<std::string>()); }

struct Report {
    std::string command;
    json inputs = json::object();
    Verdict verdict = Verdict::error;
    json details = json::object();
    double wall_time = 0;

    json to_json() const {
        return json{{"command", command},
                    {"inputs", inputs},
                    {"verdict", verdict_name(verdict)},
                    {"details", details},
                    {"wall_time", wall_time}};
    }
    static Report from_json(const json& j) {
        Report r;
        r.command = j.at("command").get<std::string>();
        r.inputs = j.at("inputs");
        r.verdict = verdict_from(j.at("verdict").get<std::string>());
        r.details = j.at("details");
        r.wall_time = j.at("wall_time").get<double>();
        return r;
    }
    friend bool operator==(const Report& a, const Report& b) {
        return a.command == b.command && a.inputs == b.inputs && a.verdict == b.verdict && a.details == b.details &&
               a.wall_time == b.wall_time;
    }
};

inline json case_report_json(const CaseReport& r) {
    json steps = json::array();
    for (const auto& s : r.steps) {
        json vals = json::array();
        for (const auto& v : s.values) {
            json e{{"name", v.name}, {"approx", v.approx}};
            if (!v.exact.empty()) e["exact"] = v.exact;
            vals.push_back(e);
        }
        json st{{"id", s.id}, {"label", s.label}, {"kind", step_kind_name(s.kind)}, {"verdict", s.passed}, {"values", vals}};
        if (!s.note.empty()) st["note"] = s.note;
        steps.push_back(st);
    }
    return json{{"instance", r.instance},
                {"case", r.label.index},
                {"description", r.label.description},
                {"subcase", r.subcase},
                {"predicates", {{"a1", r.label.a1}, {"a1+a2", r.label.a12}, {"a1+a2+a3", r.label.a123}}},
                {"steps", steps},
                {"verdict", r.verdict}};
}

inline void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

}  // namespace rsum
