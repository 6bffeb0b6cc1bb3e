#pragma once

#include <iomanip>
#include <nlohmann/json.hpp>
#include <ostream>

#include "analyzer.hpp"

namespace cellscope {

inline constexpr const char* tool_version = "0.1.0";
inline constexpr const char* report_schema = "cellscope-report/1";

struct report_row {
    std::string file;
    int line = 0;
    int col = 0;
    point_id point = 0;
    alarm_kind kind = alarm_kind::overflow;
    std::string expr;
    std::string message;

    auto key() const { return std::tie(file, line, kind, col, point, expr, message); }
    bool operator<(const report_row& o) const { return key() < o.key(); }
};

inline std::vector<report_row> report_rows(const cfg& g, const analysis_result& res) {
    std::vector<report_row> rows;
    for (const alarm_record& a : res.alarms)
        rows.push_back({g.file, a.loc.line, a.loc.col, a.point, a.kind, a.expr, a.detail});
    std::sort(rows.begin(), rows.end());
    return rows;
}

inline std::string abi_summary(const abi& ab) {
    std::string s = ab.endian == endianness::little ? "little-endian" : "big-endian";
    for (scalar_type t : {scalar_type::sint, scalar_type::slong, scalar_type::sllong,
                          scalar_type::ptr}) {
        s += ' ';
        s += scalar_name(t);
        s += '=';
        s += std::to_string(ab.sizeof_(t));
    }
    return s;
}

// Timing never enters the JSON: equal inputs must serialize to equal bytes.
inline nlohmann::ordered_json report_json(const cfg& g, const abi& ab,
                                          const analysis_result& res) {
    nlohmann::ordered_json j;
    j["schema"] = report_schema;
    j["tool_version"] = tool_version;
    j["abi"] = abi_summary(ab);
    j["wall_time_ms"] = nullptr;

    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    std::map<std::string, uint32_t> counts;
    for (const report_row& r : report_rows(g, res)) {
        nlohmann::ordered_json a;
        a["file"] = r.file;
        a["line"] = r.line;
        a["column"] = r.col;
        a["point"] = r.point;
        a["kind"] = alarm_name(r.kind);
        a["expression"] = r.expr;
        a["message"] = r.message;
        list.push_back(a);
        ++counts[alarm_name(r.kind)];
    }
    j["alarms"] = list;
    nlohmann::ordered_json c;
    for (auto& [k, n] : counts) c[k] = n;
    j["counts"] = c;
    j["total"] = list.size();
    j["iterations"] = res.iterations;
    j["capped"] = res.capped;
    j["postfix_ok"] = res.postfix_ok;
    return j;
}

inline void print_report(std::ostream& os, const cfg& g, const analysis_result& res,
                         const std::vector<std::string>& src_lines) {
    std::vector<report_row> rows = report_rows(g, res);
    if (res.capped) os << "warning: iteration cap exceeded, result incomplete\n";
    if (!res.postfix_ok) os << "warning: post-fixpoint check failed\n";
    if (rows.empty()) {
        os << "no alarms\n";
        return;
    }
    std::string last_file;
    int last_line = -1;
    for (const report_row& r : rows) {
        if (r.file != last_file || r.line != last_line) {
            last_file = r.file;
            last_line = r.line;
            os << r.file << ':' << r.line << ":\n";
            if (r.line >= 1 && size_t(r.line) <= src_lines.size()) {
                std::string ex = src_lines[r.line - 1];
                size_t b = ex.find_first_not_of(" \t");
                os << "  | " << (b == std::string::npos ? ex : ex.substr(b)) << "\n";
            }
        }
        os << "  " << alarm_name(r.kind) << " at point " << r.point << ": " << r.message
           << "  [" << r.expr << "]\n";
    }
    os << rows.size() << " alarm" << (rows.size() == 1 ? "" : "s") << "\n";
}

inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char ch : text) {
        if (ch == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else
            cur += ch;
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

} // namespace cellscope
