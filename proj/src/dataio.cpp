#include "longmix/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "longmix/error.hpp"

namespace longmix {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (end == text.size()) break;
        start = end + 1;
    }
    // Drop a trailing empty line from a final newline.
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t end = line.find(',', start);
        if (end == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, end - start));
        start = end + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

double parse_double_field(std::string_view raw, const std::string& context) {
    std::string_view s = trim(raw);
    if (s.empty()) {
        throw Error(Errc::BadNumber, "missing numeric value in " + context);
    }
    double value = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw Error(Errc::BadNumber,
                    "cannot parse '" + std::string(s) + "' as a number in " + context);
    }
    return value;
}

int parse_int_field(std::string_view raw, const std::string& context) {
    std::string_view s = trim(raw);
    int value = 0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || s.empty()) {
        throw Error(Errc::BadNumber,
                    "cannot parse '" + std::string(s) + "' as an integer in " + context);
    }
    return value;
}

// bw<k> -> k, or -1 when the name is not a weight column.
int bw_index(std::string_view name) {
    if (name.size() < 3 || name.substr(0, 2) != "bw") return -1;
    int value = 0;
    const auto* first = name.data() + 2;
    const auto* last = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || value < 1) return -1;
    return value;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void format_double(std::ostream& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, ptr - buf);
    (void)ec;
}

}  // namespace

LongDataset make_long_dataset(std::vector<LongRecord> records) {
    std::sort(records.begin(), records.end(), [](const LongRecord& a, const LongRecord& b) {
        if (a.mouse_id != b.mouse_id) return a.mouse_id < b.mouse_id;
        return a.tw < b.tw;
    });
    LongDataset d;
    d.records = std::move(records);
    d.n_obs = static_cast<long>(d.records.size());
    std::set<std::string> mice;
    for (const auto& r : d.records) mice.insert(r.mouse_id);
    d.n_mice = static_cast<int>(mice.size());
    return d;
}

WideDataset parse_wide(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw Error(Errc::MissingColumn, "empty input: no header line");

    const auto header = split_fields(lines[0]);
    int id_col = -1, grp_col = -1;
    std::map<int, int> bw_cols;  // week -> column index
    WideDataset out;
    for (std::size_t j = 0; j < header.size(); ++j) {
        const std::string_view name = trim(header[j]);
        if (name == "mouseid") {
            id_col = static_cast<int>(j);
        } else if (name == "grp") {
            grp_col = static_cast<int>(j);
        } else {
            const int k = bw_index(name);
            if (k > 0) {
                bw_cols[k] = static_cast<int>(j);
            } else {
                out.warnings.push_back("ignoring column '" + std::string(name) + "'");
            }
        }
    }
    if (id_col < 0) throw Error(Errc::MissingColumn, "required column 'mouseid' not found");
    if (grp_col < 0) throw Error(Errc::MissingColumn, "required column 'grp' not found");
    if (bw_cols.empty()) throw Error(Errc::MissingColumn, "no weight columns bw1..bwW found");

    // Weight columns must cover 1..W without gaps.
    int expected = 1;
    for (const auto& [week, col] : bw_cols) {
        if (week != expected) {
            throw Error(Errc::NonContiguousWeeks,
                        "weight columns must be contiguous from bw1; missing bw" +
                            std::to_string(expected));
        }
        ++expected;
    }
    out.weeks = static_cast<int>(bw_cols.size());

    std::set<std::string> seen_ids;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) continue;
        const auto fields = split_fields(lines[li]);
        if (fields.size() < header.size()) {
            throw Error(Errc::BadNumber,
                        "row " + std::to_string(li + 1) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(header.size()));
        }
        WideRow row;
        row.mouse_id = std::string(trim(fields[id_col]));
        if (row.mouse_id.empty()) {
            throw Error(Errc::BadNumber, "empty mouseid on row " + std::to_string(li + 1));
        }
        if (!seen_ids.insert(row.mouse_id).second) {
            throw Error(Errc::DuplicateId, "duplicate mouseid '" + row.mouse_id + "'");
        }
        row.group = parse_int_field(fields[grp_col], "grp of " + row.mouse_id);
        row.weights.reserve(out.weeks);
        for (int k = 1; k <= out.weeks; ++k) {
            row.weights.push_back(
                parse_double_field(fields[bw_cols.at(k)],
                                   "bw" + std::to_string(k) + " of " + row.mouse_id));
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

LongDataset pivot_longer(const WideDataset& w) {
    std::vector<LongRecord> records;
    records.reserve(static_cast<std::size_t>(w.n_mice()) * w.weeks);
    for (const auto& row : w.rows) {
        for (int k = 1; k <= w.weeks; ++k) {
            records.push_back({row.mouse_id, row.group, k, row.weights[k - 1]});
        }
    }
    return make_long_dataset(std::move(records));
}

ValidationReport validate_long(const LongDataset& d) {
    ValidationReport report;
    std::map<std::string, int> group_of;
    std::set<std::pair<std::string, int>> seen;
    for (const auto& r : d.records) {
        if (!seen.insert({r.mouse_id, r.tw}).second) {
            report.findings.push_back({FindingKind::DuplicateObservation, r.mouse_id, r.tw,
                                       "duplicate observation for mouse " + r.mouse_id +
                                           " at week " + std::to_string(r.tw)});
        }
        auto [it, inserted] = group_of.try_emplace(r.mouse_id, r.group);
        if (!inserted && it->second != r.group) {
            report.findings.push_back({FindingKind::GroupSwitch, r.mouse_id, r.tw,
                                       "mouse " + r.mouse_id + " switches group " +
                                           std::to_string(it->second) + " -> " +
                                           std::to_string(r.group)});
        }
        if (!std::isfinite(r.weight)) {
            report.findings.push_back({FindingKind::NonFiniteWeight, r.mouse_id, r.tw,
                                       "non-finite weight for mouse " + r.mouse_id});
        } else if (r.weight <= 0.0) {
            report.findings.push_back({FindingKind::NonPositiveWeight, r.mouse_id, r.tw,
                                       "nonpositive weight for mouse " + r.mouse_id +
                                           " at week " + std::to_string(r.tw)});
        }
    }
    return report;
}

GroupWeekMeans group_week_means(const LongDataset& d) {
    std::map<std::pair<int, int>, std::pair<double, long>> acc;  // (group, tw) -> (sum, count)
    for (const auto& r : d.records) {
        auto& cell = acc[{r.group, r.tw}];
        cell.first += r.weight;
        cell.second += 1;
    }
    GroupWeekMeans out;
    out.cells.reserve(acc.size());
    for (const auto& [key, cell] : acc) {
        out.cells.push_back({key.first, key.second, cell.first / static_cast<double>(cell.second),
                             cell.second});
    }
    return out;
}

WideDataset read_wide_csv(const std::string& path) { return parse_wide(read_file(path)); }

LongDataset parse_long(std::string_view text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw Error(Errc::MissingColumn, "empty input: no header line");
    const auto header = split_fields(lines[0]);
    int id_col = -1, grp_col = -1, tw_col = -1, w_col = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        const std::string_view name = trim(header[j]);
        if (name == "mouseid") id_col = static_cast<int>(j);
        else if (name == "grp") grp_col = static_cast<int>(j);
        else if (name == "tw") tw_col = static_cast<int>(j);
        else if (name == "weight") w_col = static_cast<int>(j);
    }
    if (id_col < 0 || grp_col < 0 || tw_col < 0 || w_col < 0) {
        throw Error(Errc::MissingColumn, "long file needs header mouseid,grp,tw,weight");
    }
    std::vector<LongRecord> records;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) continue;
        const auto fields = split_fields(lines[li]);
        if (fields.size() < header.size()) {
            throw Error(Errc::BadNumber, "row " + std::to_string(li + 1) + " is short");
        }
        LongRecord r;
        r.mouse_id = std::string(trim(fields[id_col]));
        r.group = parse_int_field(fields[grp_col], "grp");
        r.tw = parse_int_field(fields[tw_col], "tw");
        r.weight = parse_double_field(fields[w_col], "weight");
        records.push_back(std::move(r));
    }
    return make_long_dataset(std::move(records));
}

LongDataset read_long_csv(const std::string& path) { return parse_long(read_file(path)); }

LongDataset load_dataset(const std::string& path) {
    const std::string text = read_file(path);
    const auto lines = split_lines(text);
    if (lines.empty()) throw Error(Errc::MissingColumn, "empty input: no header line");
    for (const auto field : split_fields(lines[0])) {
        if (bw_index(trim(field)) > 0) return pivot_longer(parse_wide(text));
    }
    return parse_long(text);
}

void write_long_csv(const LongDataset& d, std::ostream& out) {
    out << "mouseid,grp,tw,weight\n";
    for (const auto& r : d.records) {
        out << r.mouse_id << ',' << r.group << ',' << r.tw << ',';
        format_double(out, r.weight);
        out << '\n';
    }
}

void write_long_csv(const LongDataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    write_long_csv(d, out);
}

void write_means_csv(const GroupWeekMeans& m, std::ostream& out) {
    out << "grp,tw,mean_weight,count\n";
    for (const auto& c : m.cells) {
        out << c.group << ',' << c.tw << ',';
        format_double(out, c.mean);
        out << ',' << c.count << '\n';
    }
}

void write_means_csv(const GroupWeekMeans& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    write_means_csv(m, out);
}

}  // namespace longmix
