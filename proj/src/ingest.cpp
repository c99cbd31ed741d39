#include "avcap/ingest.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <string_view>
#include <unordered_map>

#include "avcap/io.hpp"

namespace avcap::ingest {

namespace {

// Indices into records, per case, in first-seen order.
std::vector<std::vector<std::size_t>> group_by_case(const std::vector<CarFollowRecord>& records) {
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = slot.try_emplace(records[i].case_id, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

}  // namespace

LoadResult read_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty input (no header)", 1);
  const auto header = io::split_csv_line(line);
  const auto& want = record_columns();
  std::vector<std::size_t> col(want.size());
  for (std::size_t k = 0; k < want.size(); ++k) {
    std::size_t found = header.size();
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == want[k]) found = j;
    }
    if (found == header.size()) throw MissingColumn(want[k]);
    col[k] = found;
  }

  std::vector<CarFollowRecord> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(header.size()) + " fields, got " +
                           std::to_string(cells.size()),
                       line_no);
    }
    CarFollowRecord r;
    r.case_id = cells[col[0]];
    if (r.case_id.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty case_id", line_no);
    double* fields[] = {&r.t, &r.gap, &r.v_lead, &r.v_follow, &r.a_follow};
    for (std::size_t k = 0; k < 5; ++k) {
      try {
        *fields[k] = io::parse_double(cells[col[k + 1]]);
      } catch (const std::invalid_argument& e) {
        throw ParseError("line " + std::to_string(line_no) + ", column " + want[k + 1] + ": " + e.what(),
                         line_no);
      }
      if (!std::isfinite(*fields[k])) {
        throw ParseError("line " + std::to_string(line_no) + ", column " + want[k + 1] + ": not finite",
                         line_no);
      }
    }
    if (!(r.gap > 0.0)) {
      throw ParseError("line " + std::to_string(line_no) + ": gap must be > 0", line_no);
    }
    rows.push_back(std::move(r));
  }

  LoadResult out;
  for (const auto& idx : group_by_case(rows)) {
    bool monotone = true;
    for (std::size_t k = 1; k < idx.size(); ++k) {
      if (rows[idx[k]].t < rows[idx[k - 1]].t) monotone = false;
    }
    if (!monotone) {
      out.rejected.push_back({rows[idx.front()].case_id, "time decreases within case"});
      continue;
    }
    for (std::size_t i : idx) out.records.push_back(rows[i]);
  }
  return out;
}

LoadResult load_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_records(in);
}

void write_records(std::ostream& out, const std::vector<CarFollowRecord>& records) {
  for (std::size_t k = 0; k < record_columns().size(); ++k) out << (k ? "," : "") << record_columns()[k];
  out << '\n';
  for (const auto& r : records) {
    out << r.case_id << ',' << io::fmt_exact(r.t) << ',' << io::fmt_exact(r.gap) << ','
        << io::fmt_exact(r.v_lead) << ',' << io::fmt_exact(r.v_follow) << ','
        << io::fmt_exact(r.a_follow) << '\n';
  }
}

void FilterSpec::validate() const {
  if (!(v_lead_tol > 0.0) || !(dv_max > 0.0) || !std::isfinite(v_lead_target)) {
    throw std::invalid_argument("FilterSpec: tolerances must be > 0");
  }
}

FilterResult filter_stable(const std::vector<CarFollowRecord>& records, const FilterSpec& spec,
                           FilterMode mode) {
  spec.validate();
  FilterResult out;
  auto& s = out.summary;
  s.input_records = records.size();
  const auto groups = group_by_case(records);
  s.input_cases = groups.size();
  for (const auto& idx : groups) {
    bool leader_ok = true;
    for (std::size_t i : idx) {
      if (std::abs(records[i].v_lead - spec.v_lead_target) > spec.v_lead_tol) leader_ok = false;
    }
    if (!leader_ok) {
      ++s.cases_dropped_leader_speed;
      s.records_dropped_leader_speed += idx.size();
      continue;
    }
    std::vector<std::size_t> keep;
    for (std::size_t i : idx) {
      if (std::abs(records[i].v_lead - records[i].v_follow) <= spec.dv_max) keep.push_back(i);
    }
    const std::size_t violations = idx.size() - keep.size();
    if (violations > 0 && mode == FilterMode::DropCase) {
      ++s.cases_dropped_dv;
      s.records_dropped_dv += idx.size();
      continue;
    }
    s.records_dropped_dv += violations;
    if (keep.empty()) {
      ++s.cases_dropped_dv;
      continue;
    }
    ++s.retained_cases;
    for (std::size_t i : keep) out.records.push_back(records[i]);
  }
  s.retained_records = out.records.size();
  return out;
}

NormalizeResult normalize_gaps(const std::vector<CarFollowRecord>& records, std::size_t min_samples) {
  NormalizeResult out;
  for (const auto& idx : group_by_case(records)) {
    const std::string& id = records[idx.front()].case_id;
    if (idx.size() < min_samples) {
      out.dropped.push_back({id, "fewer than " + std::to_string(min_samples) + " samples"});
      continue;
    }
    const double n = static_cast<double>(idx.size());
    double mean = 0.0;
    for (std::size_t i : idx) mean += records[i].gap;
    mean /= n;
    double ss = 0.0;
    for (std::size_t i : idx) ss += (records[i].gap - mean) * (records[i].gap - mean);
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) {
      out.dropped.push_back({id, "zero variance"});
      continue;
    }
    const std::size_t first = out.samples.size();
    for (std::size_t i : idx) out.samples.push_back((records[i].gap - mean) / sd);
    // Second pass removes the residual mean left by rounding in the first.
    double resid = 0.0;
    for (std::size_t k = first; k < out.samples.size(); ++k) resid += out.samples[k];
    resid /= n;
    for (std::size_t k = first; k < out.samples.size(); ++k) out.samples[k] -= resid;
    out.cases_used.push_back(id);
  }
  return out;
}

}  // namespace avcap::ingest
