#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace avcap::ingest {

struct CarFollowRecord {
  std::string case_id;
  double t = 0.0;
  double gap = 0.0;
  double v_lead = 0.0;
  double v_follow = 0.0;
  double a_follow = 0.0;

  bool operator==(const CarFollowRecord&) const = default;
};

/// Malformed input. line is 1-based (header = line 1), 0 when not line-specific.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line) : std::runtime_error(what), line(line) {}
  std::size_t line;
};

/// Header lacks a required column.
class MissingColumn : public ParseError {
 public:
  MissingColumn(const std::string& column)
      : ParseError("missing column '" + column + "'", 1), column(column) {}
  std::string column;
};

struct CaseRejection {
  std::string case_id;
  std::string reason;
};

struct LoadResult {
  std::vector<CarFollowRecord> records;  // grouped by case, first-seen order
  std::vector<CaseRejection> rejected;
};

inline const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols{"case_id", "t", "gap", "v_lead", "v_follow", "a_follow"};
  return cols;
}

LoadResult read_records(std::istream& in);
LoadResult load_records(const std::string& path);

/// Values written in shortest round-trip form so load(export(x)) == x.
void write_records(std::ostream& out, const std::vector<CarFollowRecord>& records);

struct FilterSpec {
  double v_lead_target = 20.2;
  double v_lead_tol = 0.2;
  double dv_max = 1.0;

  void validate() const;
};

enum class FilterMode {
  DropSample,  // a |dv| violation removes only that sample
  DropCase     // a |dv| violation removes the whole case
};

struct FilterSummary {
  std::size_t input_records = 0;
  std::size_t retained_records = 0;
  std::size_t input_cases = 0;
  std::size_t retained_cases = 0;
  std::size_t cases_dropped_leader_speed = 0;
  std::size_t records_dropped_leader_speed = 0;
  std::size_t cases_dropped_dv = 0;
  std::size_t records_dropped_dv = 0;
};

struct FilterResult {
  std::vector<CarFollowRecord> records;
  FilterSummary summary;
};

FilterResult filter_stable(const std::vector<CarFollowRecord>& records, const FilterSpec& spec,
                           FilterMode mode = FilterMode::DropSample);

struct NormalizeResult {
  std::vector<double> samples;
  std::vector<std::string> cases_used;
  std::vector<CaseRejection> dropped;
};

/// Per-case (x - mean) / population sd. Cases with < min_samples or zero variance are dropped.
NormalizeResult normalize_gaps(const std::vector<CarFollowRecord>& records,
                               std::size_t min_samples = 10);

}  // namespace avcap::ingest
