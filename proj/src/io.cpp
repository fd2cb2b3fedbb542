#include "rankprior/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <unordered_set>

#include "rankprior/errors.hpp"
#include "rankprior/format.hpp"

namespace rankprior {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string lower(std::string_view s) {
    std::string out(trim(s));
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Column positions for the two row shapes.
struct Layout {
    InputFormat format = InputFormat::Auto;
    std::size_t id = 0;
    std::size_t c1 = 1;  // estimate | odds_ratio
    std::size_t c2 = 2;  // stderr | ci_low
    std::size_t c3 = 3;  // ci_high
    std::size_t width = 3;
};

std::optional<std::size_t> find_column(const std::vector<std::string>& names,
                                       std::initializer_list<std::string_view> aliases) {
    for (std::size_t i = 0; i < names.size(); ++i)
        for (auto a : aliases)
            if (names[i] == a) return i;
    return std::nullopt;
}

Layout layout_from_header(const std::vector<std::string>& raw, InputFormat want) {
    std::vector<std::string> names;
    for (const auto& r : raw) names.push_back(lower(r));
    Layout l;
    auto id = find_column(names, {"id", "unit", "name", "snp", "rsid"});
    auto est = find_column(names, {"estimate", "x", "beta", "log_or", "effect"});
    auto se = find_column(names, {"stderr", "se", "sigma", "standard_error"});
    auto orc = find_column(names, {"odds_ratio", "or"});
    auto lo = find_column(names, {"ci_low", "lower", "ci_lower", "or_lower"});
    auto hi = find_column(names, {"ci_high", "upper", "ci_upper", "or_upper"});
    l.id = id.value_or(0);
    const bool has_est = est && se;
    const bool has_or = orc && lo && hi;
    if ((want == InputFormat::Estimate || (want == InputFormat::Auto && has_est)) && has_est) {
        l.format = InputFormat::Estimate;
        l.c1 = *est;
        l.c2 = *se;
    } else if ((want == InputFormat::OddsRatio || want == InputFormat::Auto) && has_or) {
        l.format = InputFormat::OddsRatio;
        l.c1 = *orc;
        l.c2 = *lo;
        l.c3 = *hi;
    } else {
        throw ArgumentError("header names neither (estimate, stderr) nor (odds_ratio, ci_low, ci_high) columns");
    }
    l.width = std::max({l.id, l.c1, l.c2, l.format == InputFormat::OddsRatio ? l.c3 : 0}) + 1;
    return l;
}

Layout layout_from_width(std::size_t width, InputFormat want) {
    Layout l;
    InputFormat f = want;
    if (f == InputFormat::Auto) {
        if (width == 3) f = InputFormat::Estimate;
        else if (width == 4) f = InputFormat::OddsRatio;
        else throw ArgumentError("cannot infer the row format from " + std::to_string(width) + " columns");
    }
    l.format = f;
    l.width = f == InputFormat::Estimate ? 3 : 4;
    return l;
}

bool looks_like_header(const std::vector<std::string>& fields) {
    for (std::size_t i = 1; i < fields.size(); ++i)
        if (!parse_number(fields[i])) return true;
    return false;
}

}  // namespace

InputFormat parse_input_format(std::string_view s) {
    if (s == "auto") return InputFormat::Auto;
    if (s == "estimate") return InputFormat::Estimate;
    if (s == "odds-ratio" || s == "odds_ratio") return InputFormat::OddsRatio;
    throw ArgumentError("unknown input format '" + std::string(s) + "'");
}

Observation odds_ratio_observation(double odds_ratio, double ci_low, double ci_high) {
    if (!(odds_ratio > 0.0)) throw ArgumentError("odds ratio must be positive");
    if (!(ci_low > 0.0)) throw ArgumentError("ci_low must be positive");
    if (!(ci_high > ci_low)) throw ArgumentError("ci_high must exceed ci_low");
    return {std::log(odds_ratio), (std::log(ci_high) - std::log(ci_low)) / 4.0};
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::string(trim(cur)));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(std::string(trim(cur)));
    return out;
}

Dataset read_dataset(std::istream& in, InputFormat format) {
    Dataset d;
    std::optional<Layout> layout;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split_csv_line(t);
        if (!layout) {
            if (looks_like_header(fields)) {
                layout = layout_from_header(fields, format);
                continue;
            }
            layout = layout_from_width(fields.size(), format);
        }
        auto reject = [&](std::string why) { d.rejects.push_back({lineno, std::move(why)}); };
        if (fields.size() < layout->width) {
            reject("expected " + std::to_string(layout->width) + " columns, found " + std::to_string(fields.size()));
            continue;
        }
        Unit u;
        u.id = fields[layout->id];
        if (u.id.empty()) {
            reject("empty id");
            continue;
        }
        auto v1 = parse_number(fields[layout->c1]);
        auto v2 = parse_number(fields[layout->c2]);
        if (!v1 || !v2) {
            reject("non-numeric value");
            continue;
        }
        if (layout->format == InputFormat::Estimate) {
            if (!(*v2 > 0.0)) {
                reject("stderr must be positive");
                continue;
            }
            u.obs = {*v1, *v2};
        } else {
            auto v3 = parse_number(fields[layout->c3]);
            if (!v3) {
                reject("non-numeric value");
                continue;
            }
            try {
                u.obs = odds_ratio_observation(*v1, *v2, *v3);
            } catch (const ArgumentError& e) {
                reject(e.what());
                continue;
            }
        }
        if (!seen.insert(u.id).second) {
            reject("duplicate id '" + u.id + "'");
            continue;
        }
        d.units.push_back(std::move(u));
    }
    if (layout) d.format = layout->format;
    if (d.units.empty()) throw ArgumentError("dataset has no valid rows");
    return d;
}

Dataset load_dataset(const std::string& path, InputFormat format) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open '" + path + "'");
    return read_dataset(in, format);
}

std::vector<Observation> observations(const Dataset& d) {
    std::vector<Observation> out;
    out.reserve(d.units.size());
    for (const auto& u : d.units) out.push_back(u.obs);
    return out;
}

double naive_normal_variance(std::span<const Observation> obs) {
    if (obs.empty()) throw ArgumentError("naive_normal_variance: no observations");
    double xx = 0.0;
    double ss = 0.0;
    for (const auto& o : obs) {
        xx += o.x * o.x;
        ss += o.sigma * o.sigma;
    }
    const double n = static_cast<double>(obs.size());
    return std::max(xx / n - ss / n, 1e-12);
}

void write_ranking_csv(std::ostream& os, const std::vector<Unit>& units, const RankedList& ranking) {
    os << "id,x,sigma,posterior_mean,rank\n";
    for (std::size_t k = 0; k < ranking.size(); ++k) {
        const auto& u = units[ranking.order[k]];
        std::string id = u.id;
        if (id.find_first_of(",\"") != std::string::npos) {
            std::string q = "\"";
            for (char c : id) q += c == '"' ? std::string("\"\"") : std::string(1, c);
            id = q + "\"";
        }
        os << id << ',' << format_double(u.obs.x) << ',' << format_double(u.obs.sigma) << ','
           << format_double(ranking.scores[k]) << ',' << (k + 1) << '\n';
    }
}

nlohmann::json ranking_json(const std::vector<Unit>& units, const RankedList& ranking) {
    auto rows = nlohmann::json::array();
    for (std::size_t k = 0; k < ranking.size(); ++k) {
        const auto& u = units[ranking.order[k]];
        rows.push_back({{"id", u.id},
                        {"x", u.obs.x},
                        {"sigma", u.obs.sigma},
                        {"posterior_mean", ranking.scores[k]},
                        {"rank", k + 1}});
    }
    return rows;
}

void write_rejects(std::ostream& os, const std::vector<RowReject>& rejects) {
    for (const auto& r : rejects) os << "line " << r.line << ": " << r.reason << '\n';
}

}  // namespace rankprior
