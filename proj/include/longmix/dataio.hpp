#ifndef LONGMIX_DATAIO_HPP
#define LONGMIX_DATAIO_HPP

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace longmix {

// One mouse in the wide layout: id, group label, weights for weeks 1..W.
struct WideRow {
    std::string mouse_id;
    int group = 0;
    std::vector<double> weights;
};

struct WideDataset {
    std::vector<WideRow> rows;
    int weeks = 0;
    std::vector<std::string> warnings;  // ignored extra columns etc.

    int n_mice() const { return static_cast<int>(rows.size()); }
};

// One observation in the long layout.
struct LongRecord {
    std::string mouse_id;
    int group = 0;
    int tw = 0;       // week index
    double weight = 0.0;  // grams
};

// Records sorted by (mouse_id, tw) with cached totals.
struct LongDataset {
    std::vector<LongRecord> records;
    long n_obs = 0;
    int n_mice = 0;
};

LongDataset make_long_dataset(std::vector<LongRecord> records);

struct GroupWeekCell {
    int group = 0;
    int tw = 0;
    double mean = 0.0;
    long count = 0;
};

struct GroupWeekMeans {
    std::vector<GroupWeekCell> cells;  // ordered (group asc, tw asc)
};

enum class FindingKind { DuplicateObservation, GroupSwitch, NonPositiveWeight, NonFiniteWeight };

struct Finding {
    FindingKind kind;
    std::string mouse_id;
    int tw = 0;
    std::string message;
};

struct ValidationReport {
    std::vector<Finding> findings;
    bool ok() const { return findings.empty(); }
};

// Parse a delimited wide table. Header must contain `mouseid`, `grp` and
// weight columns `bw1..bwW` with contiguous indices; other columns are
// ignored with a warning. Accepts LF or CRLF, comma separated, decimal '.'.
WideDataset parse_wide(std::string_view text);

// Wide -> long reshape; tw is the integer suffix of each bw column.
LongDataset pivot_longer(const WideDataset& w);

ValidationReport validate_long(const LongDataset& d);

GroupWeekMeans group_week_means(const LongDataset& d);

// File I/O. Long files carry the header `mouseid,grp,tw,weight`.
WideDataset read_wide_csv(const std::string& path);
LongDataset read_long_csv(const std::string& path);
LongDataset parse_long(std::string_view text);
// Sniffs the header: a wide file is reshaped on the fly.
LongDataset load_dataset(const std::string& path);

void write_long_csv(const LongDataset& d, std::ostream& out);
void write_long_csv(const LongDataset& d, const std::string& path);
void write_means_csv(const GroupWeekMeans& m, std::ostream& out);
void write_means_csv(const GroupWeekMeans& m, const std::string& path);

}  // namespace longmix

#endif  // LONGMIX_DATAIO_HPP
