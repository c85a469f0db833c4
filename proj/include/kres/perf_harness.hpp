#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kres/config.hpp"
#include "kres/public_suffix.hpp"
#include "kres/query_log.hpp"

namespace kres {

struct QueryTiming {
  std::string qname;
  int recursor_index = -1;  // -1 = unknown (no config supplied)
  double rtt_ms = 0.0;
  QueryOutcome outcome = QueryOutcome::Ok;
};

// One repetition of one page visit: the parent lookup plus its subresource
// lookups, issued sequentially.
struct PageVisitRecord {
  std::string parent;
  std::uint32_t repetition = 0;
  std::vector<QueryTiming> queries;
  bool partial = false;  // some query failed; kept, not discarded
};

struct VisitPlan {
  std::string parent;
  std::vector<std::string> subresources;
};

// CSV: parent,sub1,sub2,... one visit per line.
std::vector<VisitPlan> load_visits(const std::string& path);

struct BenchOptions {
  std::string endpoint_host = "127.0.0.1";
  std::uint16_t endpoint_port = 5353;
  std::uint32_t repetitions = 3;
  int timeout_ms = 5000;
  // When set, FLUSH_CACHE is sent between repetitions so every repetition
  // measures a cold proxy cache.
  std::optional<std::pair<std::string, std::uint16_t>> control;
  // When set, each query is labeled offline with the recursor index its
  // visit's parent hashes to (the proxy resolves every query of a visit via
  // the parent's recursor).
  const ProxyConfig* config = nullptr;
  const SuffixRules* rules = nullptr;
};

// Issues the parent query then the subresources, sequentially, once per
// repetition. Throws NetError if the endpoint is unreachable before any
// record is produced; later failures mark the record partial instead.
std::vector<PageVisitRecord> run_visit(const VisitPlan& plan, const BenchOptions& options);

struct StatsSummary {
  std::vector<double> per_visit_total_ms;        // sorted ascending (CDF vector)
  std::vector<double> per_query_ms;              // sorted ascending (CDF vector)
  double per_query_mean_ms = 0.0;
  std::map<int, double> per_recursor_median_ms;  // lower-middle median
};

// Permutation-invariant over records. Throws std::invalid_argument on empty
// input or when no queries were recorded.
StatsSummary summarize(const std::vector<PageVisitRecord>& records);

// CSV "value_ms,cumulative_fraction" with fraction i/N at the i-th sorted
// value; the last row is always 1.0. Throws std::invalid_argument on empty
// input, std::runtime_error on write failure.
void export_cdf(std::vector<double> values, const std::string& path);

void write_queries_csv(const std::vector<PageVisitRecord>& records, const std::string& path);
void write_bench_summary_csv(const StatsSummary& summary, const std::string& path);

}  // namespace kres
