#include "oracles.hpp"

#include <algorithm>
#include <functional>
#include <regex>

#include "kernforge/kern.hpp"

namespace kftest {

using kernforge::Rational;

std::size_t dp_levenshtein(const std::u32string& a, const std::u32string& b) {
    std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t best = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            best = std::min(best, d[i - 1][j] + 1);
            best = std::min(best, d[i][j - 1] + 1);
            d[i][j] = best;
        }
    }
    return d[a.size()][b.size()];
}

Rational duration_sum(int digits_value, int dots) {
    // Value of the undotted note, then halve it once per dot.
    Rational part = digits_value == 0 ? Rational(2) : Rational(1, digits_value);
    Rational total(0);
    for (int i = 0; i <= dots; ++i) {
        total += part;
        part = part * Rational(1, 2);
    }
    return total;
}

std::string rank_table_sort(std::string_view token) {
    // Class table in emission order. Digits, pitch letters and rests keep
    // their written order; every other class is emitted by rank.
    static const std::vector<std::string> ranked = {
        "#-n", "[_]", ")", "'`~^;", "LJKk", "/\\", "(",
    };
    std::string digits, dots, grace, pitch, rest, residue;
    std::vector<std::string> buckets(ranked.size());
    for (char c : token) {
        if (c >= '0' && c <= '9') {
            digits += c;
        } else if (c == '.') {
            dots += c;
        } else if (c == 'q' || c == 'Q') {
            grace += c;
        } else if ((c >= 'a' && c <= 'g') || (c >= 'A' && c <= 'G')) {
            pitch += c;
        } else if (c == 'r') {
            rest += c;
        } else {
            bool placed = false;
            for (std::size_t k = 0; k < ranked.size() && !placed; ++k) {
                if (ranked[k].find(c) != std::string::npos) {
                    buckets[k] += c;
                    placed = true;
                }
            }
            if (!placed) residue += c;
        }
    }
    std::string out = digits + dots + grace + pitch + rest;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        std::string remaining = buckets[k];
        while (!remaining.empty()) {
            std::size_t pick = 0;
            for (std::size_t i = 1; i < remaining.size(); ++i) {
                if (ranked[k].find(remaining[i]) < ranked[k].find(remaining[pick])) pick = i;
            }
            out += remaining[pick];
            remaining.erase(pick, 1);
        }
    }
    return out + residue;
}

std::size_t brute_period(std::span<const int> tokens) {
    const std::size_t n = tokens.size();
    for (std::size_t p = 1; 3 * p <= n; ++p) {
        std::vector<int> a(tokens.end() - 3 * p, tokens.end() - 2 * p);
        std::vector<int> b(tokens.end() - 2 * p, tokens.end() - p);
        std::vector<int> c(tokens.end() - p, tokens.end());
        if (a == b && b == c) return p;
    }
    return 0;
}

std::map<std::pair<std::string, std::string>, long long> brute_pair_counts(const std::vector<std::string>& words) {
    std::map<std::pair<std::string, std::string>, long long> counts;
    auto boundary = [](char c) { return c == ' ' || c == '\t' || c == '\n'; };
    for (const std::string& w : words) {
        for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            if (boundary(w[i]) || boundary(w[i + 1])) continue;
            ++counts[{std::string(1, w[i]), std::string(1, w[i + 1])}];
        }
    }
    return counts;
}

namespace {

enum class Kind { Exclusive, Interp, Barline, Data, Other };

Kind kind_of(std::string_view cell) {
    if (cell.starts_with("**")) return Kind::Exclusive;
    if (cell.starts_with("*")) return Kind::Interp;
    if (cell.starts_with("=")) return Kind::Barline;
    if (cell.starts_with("!") || cell.empty()) return Kind::Other;
    return Kind::Data;
}

const std::regex& interp_re() {
    static const std::regex re(R"(^\*([!-)+-~][ -~]*)?$)");
    return re;
}

const std::regex& barline_re() {
    static const std::regex re(R"(^=[!-~]*$)");
    return re;
}

const std::regex& data_re() {
    static const std::string post = R"(\)*'*`*~*\^*;*L*J*K*k*[/\\]?\(*)";
    static const std::string dur = R"((?:0|[1-9][0-9]{0,2})\.{0,3})";
    static const std::string note = "(?:" + dur + "(?:qq?|Q)?|qq?|Q)" +
                                    "(?:a{1,5}|b{1,5}|c{1,5}|d{1,5}|e{1,5}|f{1,5}|g{1,5}|"
                                    "A{1,5}|B{1,5}|C{1,5}|D{1,5}|E{1,5}|F{1,5}|G{1,5})" +
                                    R"((?:nn?|##?|--?)?[\[_\]]?)" + post;
    static const std::string rest = dur + "rr?" + post;
    static const std::string member = "(?:" + note + "|" + rest + ")";
    static const std::regex re("^(?:\\.|" + member + "(?: " + member + ")*)$");
    return re;
}

bool cell_ok(Kind k, std::string_view cell) {
    if (kind_of(cell) != k) return false;
    std::string s(cell);
    switch (k) {
        case Kind::Exclusive: return cell == "**kern";
        case Kind::Interp: return std::regex_match(s, interp_re());
        case Kind::Barline: return std::regex_match(s, barline_re());
        case Kind::Data: return std::regex_match(s, data_re());
        case Kind::Other: return false;
    }
    return false;
}

bool bytes_ok(std::string_view text) {
    return std::all_of(text.begin(), text.end(), [](char ch) {
        auto c = static_cast<unsigned char>(ch);
        return c == '\t' || c == '\n' || (c >= 0x20 && c < 0x7F);
    });
}

std::vector<std::string_view> split_tabs(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find('\t', start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

// Checks the per-cell spelling of an already parsed document. Returns the
// number of open spines, or -1 when the document breaks a language rule.
long checked_open_spines(std::string_view text) {
    kernforge::KernDocument doc;
    try {
        doc = kernforge::parse_document(text);
    } catch (const kernforge::KernError&) {
        return -1;
    }
    if (doc.records.empty()) return -1;
    for (std::size_t r = 0; r < doc.records.size(); ++r) {
        const auto& rec = doc.records[r];
        if (rec.kind == kernforge::RecordKind::Comment) return -1;
        if ((r == 0) != (rec.kind == kernforge::RecordKind::ExclusiveInterp)) return -1;
        for (const auto& cell : rec.cells) {
            if (!cell_ok(kind_of(rec.cells.front().text), cell.text)) return -1;
        }
    }
    return static_cast<long>(doc.open_spines);
}

std::string terminator_line(long width) {
    std::string line;
    for (long i = 0; i < width; ++i) line += i == 0 ? "*-" : "\t*-";
    return line + "\n";
}

// A complete record appended to a checked prefix: does the result either
// end the document or leave a width that one all-"*-" record can close?
bool closes(const std::string& text) {
    long open = checked_open_spines(text);
    if (open < 0) return false;
    if (open == 0) return true;
    return checked_open_spines(text + terminator_line(open)) == 0;
}

const std::vector<std::string>& cell_suffixes() {
    static const std::vector<std::string> s = {
        "", "c", "4c", "n", "rn", "ern", "kern", "*kern", "**kern", "a", "v", "^", "-", "*", "*v", "*-", "*^", "*a", "=", ".",
    };
    return s;
}

std::vector<std::string> fillers(Kind k, std::size_t remaining) {
    switch (k) {
        case Kind::Interp:
            if (remaining <= 4) return {"*", "*v", "*-", "*^", "*a"};
            return {"*", "*v", "*-"};
        case Kind::Data:
            if (remaining <= 3) return {".", "4c"};
            return {"."};
        case Kind::Barline: return {"="};
        default: return {};
    }
}

}  // namespace

bool in_language(std::string_view text) {
    if (text.empty() || text.back() != '\n' || !bytes_ok(text)) return false;
    return checked_open_spines(text) == 0;
}

bool has_completion(std::string_view text) {
    if (!bytes_ok(text)) return false;
    const std::size_t cut = text.rfind('\n');
    const std::string head(cut == std::string_view::npos ? std::string_view{} : text.substr(0, cut + 1));
    const std::string_view line = cut == std::string_view::npos ? text : text.substr(cut + 1);

    const bool in_header = head.empty();
    long width = 0;
    if (!in_header) {
        width = checked_open_spines(head);
        if (width < 0) return false;
        if (width == 0) return line.empty();
    }

    std::vector<std::string_view> cells = split_tabs(line);
    const std::string_view open_cell = cells.back();
    cells.pop_back();
    if (!in_header && static_cast<long>(cells.size()) + 1 > width) return false;

    for (const std::string& suffix : cell_suffixes()) {
        std::string last = std::string(open_cell) + suffix;
        const Kind k = in_header ? Kind::Exclusive : kind_of(cells.empty() ? std::string_view(last) : cells.front());
        if (in_header && k != Kind::Exclusive) continue;
        bool prefix_ok = cell_ok(k, last);
        for (std::string_view c : cells) prefix_ok = prefix_ok && cell_ok(k, c);
        if (!prefix_ok) continue;

        std::string record;
        for (std::string_view c : cells) record.append(c).push_back('\t');
        record += last;

        if (in_header) {
            for (int extra = 0; extra <= 2; ++extra) {
                std::string r = record;
                for (int i = 0; i < extra; ++i) r += "\t**kern";
                if (closes(r + "\n")) return true;
            }
            continue;
        }

        const std::size_t remaining = static_cast<std::size_t>(width) - cells.size() - 1;
        const std::vector<std::string> options = fillers(k, remaining);
        if (remaining > 0 && options.empty()) continue;
        std::vector<std::size_t> pick(remaining, 0);
        while (true) {
            std::string r = record;
            for (std::size_t i = 0; i < remaining; ++i) r += "\t" + options[pick[i]];
            if (closes(head + r + "\n")) return true;
            std::size_t i = 0;
            while (i < remaining && ++pick[i] == options.size()) pick[i++] = 0;
            if (i == remaining) break;
        }
    }
    return false;
}

}  // namespace kftest
