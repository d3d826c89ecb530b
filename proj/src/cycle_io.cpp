#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "flexamg/cycle.hpp"
#include "flexamg/errors.hpp"

namespace flexamg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr const char* header = "flexamg-cycle 1";

std::string alpha_text(double a)
{
    char buf[32];
    if (std::round(a * 100.0) / 100.0 != a) {
        std::snprintf(buf, sizeof buf, "%.17g", a);
        return buf;
    }
    std::snprintf(buf, sizeof buf, "%.2f", a);
    std::string s = buf;
    if (s.size() > 3 && s.back() == '0') s.pop_back();
    return s;
}

std::string step_line(const Step& step)
{
    return std::visit(
        overloaded{
            [](const Smooth& s) { return "smooth " + std::to_string(s.level) + " " + to_token(s.smoother); },
            [](const Restrict& r) {
                return "restrict " + std::to_string(r.level) + " " + std::to_string(r.level + 1);
            },
            [](const CorrectProlong& c) {
                return "correct " + std::to_string(c.level + 1) + " " + std::to_string(c.level) +
                       " alpha=" + alpha_text(c.alpha);
            },
            [](const TailSolve& t) { return "tail-solve " + std::to_string(t.level); },
            [](const CoarseSolve& c) { return "coarse-solve " + std::to_string(c.level); },
        },
        step);
}

std::vector<std::string> ir_lines(const CycleIR& ir)
{
    std::vector<std::string> lines{header, "n_flex " + std::to_string(ir.n_flex),
                                   "tail " + to_token(ir.tail_smoother)};
    for (const Step& s : ir.ops) lines.push_back(step_line(s));
    return lines;
}

Index parse_level(const std::string& word, std::size_t line_no)
{
    try {
        std::size_t pos = 0;
        long long v = std::stoll(word, &pos);
        if (pos != word.size() || v < 0) throw std::invalid_argument("");
        return static_cast<Index>(v);
    } catch (const std::exception&) {
        throw ParseError("cycle line " + std::to_string(line_no) + ": bad level '" + word + "'");
    }
}

} // namespace

std::string to_text(const CycleIR& ir)
{
    std::string out;
    for (const auto& l : ir_lines(ir)) out += l + "\n";
    return out;
}

std::string to_compact(const CycleIR& ir)
{
    std::string out;
    for (const auto& l : ir_lines(ir)) {
        if (!out.empty()) out += "; ";
        out += l;
    }
    return out;
}

CycleIR parse_cycle_text(const std::string& text)
{
    std::string normalized = text;
    for (char& c : normalized)
        if (c == ';') c = '\n';
    std::istringstream in(normalized);
    CycleIR ir;
    bool seen_header = false;
    bool seen_nflex = false;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::vector<std::string> w;
        for (std::string word; ls >> word;) w.push_back(word);
        if (w.empty()) continue;
        auto bad = [&](const std::string& why) {
            return ParseError("cycle line " + std::to_string(line_no) + ": " + why);
        };
        if (!seen_header) {
            if (w.size() != 2 || w[0] != "flexamg-cycle" || w[1] != "1")
                throw bad("expected header 'flexamg-cycle 1'");
            seen_header = true;
            continue;
        }
        const std::string& op = w[0];
        try {
            if (op == "n_flex" && w.size() == 2) {
                ir.n_flex = parse_level(w[1], line_no);
                seen_nflex = true;
            } else if (op == "tail" && w.size() == 2) {
                ir.tail_smoother = parse_smoother_token(w[1]);
            } else if (op == "smooth" && w.size() == 3) {
                ir.ops.push_back(Smooth{parse_level(w[1], line_no), parse_smoother_token(w[2])});
            } else if (op == "restrict" && w.size() == 3) {
                const Index from = parse_level(w[1], line_no);
                if (parse_level(w[2], line_no) != from + 1) throw bad("restrict must go to the next level");
                ir.ops.push_back(Restrict{from});
            } else if (op == "correct" && w.size() == 4) {
                const Index from = parse_level(w[1], line_no);
                const Index to = parse_level(w[2], line_no);
                if (from != to + 1) throw bad("correct must go to the previous level");
                if (w[3].rfind("alpha=", 0) != 0) throw bad("expected alpha=<value>");
                std::size_t pos = 0;
                const std::string num = w[3].substr(6);
                double alpha = 0;
                try {
                    alpha = std::stod(num, &pos);
                } catch (const std::exception&) {
                    pos = std::string::npos;
                }
                if (pos != num.size()) throw bad("bad alpha '" + num + "'");
                ir.ops.push_back(CorrectProlong{to, alpha});
            } else if (op == "tail-solve" && w.size() == 2) {
                ir.ops.push_back(TailSolve{parse_level(w[1], line_no)});
            } else if (op == "coarse-solve" && w.size() == 2) {
                ir.ops.push_back(CoarseSolve{parse_level(w[1], line_no)});
            } else {
                throw bad("unrecognized step '" + line + "'");
            }
        } catch (const ParseError& e) {
            const std::string msg = e.what();
            if (msg.rfind("cycle line", 0) == 0) throw;
            throw bad(msg);
        }
    }
    if (!seen_header) throw ParseError("cycle text: missing 'flexamg-cycle 1' header");
    if (!seen_nflex) throw ParseError("cycle text: missing n_flex line");
    return ir;
}

std::string to_json(const CycleIR& ir)
{
    nlohmann::json j;
    j["format"] = "flexamg-cycle";
    j["version"] = 1;
    j["n_flex"] = ir.n_flex;
    j["tail"] = to_token(ir.tail_smoother);
    j["ops"] = nlohmann::json::array();
    for (const Step& step : ir.ops) {
        std::visit(overloaded{
                       [&](const Smooth& s) {
                           j["ops"].push_back({{"op", "smooth"}, {"level", s.level},
                                               {"smoother", to_token(s.smoother)}});
                       },
                       [&](const Restrict& r) { j["ops"].push_back({{"op", "restrict"}, {"level", r.level}}); },
                       [&](const CorrectProlong& c) {
                           j["ops"].push_back({{"op", "correct"}, {"level", c.level}, {"alpha", c.alpha}});
                       },
                       [&](const TailSolve& t) { j["ops"].push_back({{"op", "tail-solve"}, {"level", t.level}}); },
                       [&](const CoarseSolve& c) {
                           j["ops"].push_back({{"op", "coarse-solve"}, {"level", c.level}});
                       },
                   },
                   step);
    }
    return j.dump();
}

CycleIR parse_cycle_json(const std::string& json_text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("cycle json: ") + e.what());
    }
    try {
        CycleIR ir;
        ir.n_flex = j.at("n_flex").get<Index>();
        ir.tail_smoother = parse_smoother_token(j.at("tail").get<std::string>());
        std::size_t k = 0;
        for (const auto& op : j.at("ops")) {
            const auto name = op.at("op").get<std::string>();
            const auto level = op.at("level").get<Index>();
            if (name == "smooth")
                ir.ops.push_back(Smooth{level, parse_smoother_token(op.at("smoother").get<std::string>())});
            else if (name == "restrict")
                ir.ops.push_back(Restrict{level});
            else if (name == "correct")
                ir.ops.push_back(CorrectProlong{level, op.at("alpha").get<double>()});
            else if (name == "tail-solve")
                ir.ops.push_back(TailSolve{level});
            else if (name == "coarse-solve")
                ir.ops.push_back(CoarseSolve{level});
            else
                throw ParseError("cycle json: op " + std::to_string(k) + " has unknown kind '" + name + "'");
            ++k;
        }
        return ir;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("cycle json: ") + e.what());
    }
}

std::string trace_table(const CycleIR& ir)
{
    std::string out = "step,level,op,detail\n";
    Index level = 0;
    out += "0,0,start,\n";
    Index k = 1;
    for (const Step& step : ir.ops) {
        std::string op, detail;
        std::visit(overloaded{
                       [&](const Smooth& s) {
                           op = "smooth";
                           detail = to_token(s.smoother);
                           level = s.level;
                       },
                       [&](const Restrict& r) {
                           op = "restrict";
                           level = r.level + 1;
                       },
                       [&](const CorrectProlong& c) {
                           op = "correct";
                           detail = "alpha=" + alpha_text(c.alpha);
                           level = c.level;
                       },
                       [&](const TailSolve& t) {
                           op = "tail-solve";
                           level = t.level;
                       },
                       [&](const CoarseSolve& c) {
                           op = "coarse-solve";
                           level = c.level;
                       },
                   },
                   step);
        out += std::to_string(k++) + "," + std::to_string(level) + "," + op + "," + detail + "\n";
    }
    return out;
}

} // namespace flexamg
