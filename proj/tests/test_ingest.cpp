#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "avcap/ingest.hpp"
#include "avcap/stats.hpp"

using namespace avcap;
using ingest::CarFollowRecord;

namespace {

const char* kHeader = "case_id,t,gap,v_lead,v_follow,a_follow\n";

ingest::LoadResult parse(const std::string& body) {
  std::istringstream in(body);
  return ingest::read_records(in);
}

std::vector<CarFollowRecord> stable_case(const std::string& id, int n, double gap_mean, double gap_sd,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(gap_mean, gap_sd);
  std::vector<CarFollowRecord> out;
  for (int i = 0; i < n; ++i) out.push_back({id, 0.1 * i, g(rng), 20.2, 20.1, 0.0});
  return out;
}

}  // namespace

TEST_CASE("loading: empty, round trip, invalid rows") {
  CHECK(parse(kHeader).records.empty());
  const std::string body = std::string(kHeader) +
                           "a,0,20.5,20.2,20.1,0.01\n"
                           "a,0.1,20.40000000000001,20.2,20.15,-0.02\n"
                           "b,0,19,20.25,20.3,0\n";
  const auto r = parse(body);
  REQUIRE(r.records.size() == 3);
  std::ostringstream out;
  ingest::write_records(out, r.records);
  CHECK(parse(out.str()).records == r.records);

  try {
    parse(std::string(kHeader) + "a,0,20,20.2,20.1,0\na,0.1,-1,20.2,20.1,0\n");
    FAIL("expected ParseError");
  } catch (const ingest::ParseError& e) {
    CHECK(e.line == 3);
  }
  CHECK_THROWS_AS(parse(std::string(kHeader) + "a,0,x,20.2,20.1,0\n"), ingest::ParseError);
  try {
    parse("case_id,t,gap,v_lead,v_follow\n");
    FAIL("expected MissingColumn");
  } catch (const ingest::MissingColumn& e) {
    CHECK(e.column == "a_follow");
  }
}

TEST_CASE("non-monotone time rejects the case with a reason") {
  const auto r = parse(std::string(kHeader) +
                       "a,0,20,20.2,20.1,0\na,0.2,20,20.2,20.1,0\na,0.1,20,20.2,20.1,0\n"
                       "b,0,20,20.2,20.1,0\n");
  REQUIRE(r.rejected.size() == 1);
  CHECK(r.rejected[0].case_id == "a");
  CHECK_FALSE(r.rejected[0].reason.empty());
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].case_id == "b");
}

TEST_CASE("stable-following filter") {
  std::vector<CarFollowRecord> recs = stable_case("a", 20, 20.0, 1.0, 1);
  recs[5].v_follow = recs[5].v_lead - 1.5;
  auto drift = stable_case("b", 20, 20.0, 1.0, 2);
  drift[10].v_lead = 20.5;  // 0.3 m/s from target
  drift[10].v_follow = 20.5;
  recs.insert(recs.end(), drift.begin(), drift.end());

  const auto f = ingest::filter_stable(recs, ingest::FilterSpec{});
  CHECK(f.records.size() == 19);
  CHECK(f.summary.records_dropped_dv == 1);
  CHECK(f.summary.cases_dropped_leader_speed == 1);
  for (const auto& r : f.records) CHECK(r.case_id == "a");

  const auto strict = ingest::filter_stable(recs, ingest::FilterSpec{}, ingest::FilterMode::DropCase);
  CHECK(strict.records.empty());

  const auto twice = ingest::filter_stable(f.records, ingest::FilterSpec{});
  CHECK(twice.records == f.records);
  const auto clean = stable_case("c", 15, 20.0, 1.0, 3);
  CHECK(ingest::filter_stable(clean, ingest::FilterSpec{}).records == clean);
}

TEST_CASE("per-case standardization with population std") {
  std::vector<CarFollowRecord> recs;
  for (int i = 0; i < 3; ++i) recs.push_back({"a", 0.1 * i, 1.0 + i, 20.2, 20.2, 0});
  const auto n = ingest::normalize_gaps(recs, 3);
  REQUIRE(n.samples.size() == 3);
  CHECK(n.samples[0] == doctest::Approx(-1.224744871391589));
  CHECK(n.samples[1] == doctest::Approx(0.0).scale(1.0));
  CHECK(n.samples[2] == doctest::Approx(1.224744871391589));

  std::vector<CarFollowRecord> flat;
  for (int i = 0; i < 12; ++i) flat.push_back({"z", 0.1 * i, 5.0, 20.2, 20.2, 0});
  const auto d = ingest::normalize_gaps(flat);
  CHECK(d.samples.empty());
  REQUIRE(d.dropped.size() == 1);
  CHECK(d.dropped[0].case_id == "z");
}

TEST_CASE("normalization: zero mean, unit variance, affine invariance") {
  std::vector<CarFollowRecord> recs;
  for (int c = 0; c < 6; ++c) {
    auto cs = stable_case("c" + std::to_string(c), 200 + 37 * c, 15.0 + 3.0 * c, 0.5 + 0.2 * c,
                          static_cast<std::uint64_t>(100 + c));
    recs.insert(recs.end(), cs.begin(), cs.end());
  }
  const auto n = ingest::normalize_gaps(recs);
  std::size_t off = 0;
  for (int c = 0; c < 6; ++c) {
    const std::size_t len = static_cast<std::size_t>(200 + 37 * c);
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < len; ++i) m += n.samples[off + i];
    m /= static_cast<double>(len);
    for (std::size_t i = 0; i < len; ++i) v += (n.samples[off + i] - m) * (n.samples[off + i] - m);
    v /= static_cast<double>(len);
    CHECK(std::abs(m) <= 1e-9);
    CHECK(std::abs(v - 1.0) <= 1e-6);
    off += len;
  }
  auto moved = recs;
  for (auto& r : moved) r.gap = 3.0 * r.gap + 7.0;
  const auto n2 = ingest::normalize_gaps(moved);
  REQUIRE(n2.samples.size() == n.samples.size());
  for (std::size_t i = 0; i < n.samples.size(); ++i) {
    CHECK(n2.samples[i] == doctest::Approx(n.samples[i]).epsilon(1e-9).scale(1.0));
  }
  const auto fit = stats::fit_gaussian(n.samples);
  CHECK(std::abs(fit.mu) <= 1e-9);
  CHECK(fit.var == doctest::Approx(1.0).epsilon(0.01));
}
