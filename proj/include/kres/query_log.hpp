#pragma once

#include <fstream>
#include <mutex>
#include <string>
#include <vector>

namespace kres {

enum class QueryOutcome { Ok, ServFail, Timeout, FormErr };

std::string to_string(QueryOutcome o);

// One line per handled query. recursor_index is a pool index rendered as
// text, "cache" for cache hits, or "-" when no upstream was involved
// (malformed input).
struct QueryLogRecord {
  std::string wall_time;  // ISO 8601 UTC, millisecond precision
  std::string client_id;
  std::string qname;
  std::string assignment_domain;
  std::string recursor_index;
  double rtt_ms = 0.0;
  bool cache_hit = false;
  QueryOutcome outcome = QueryOutcome::Ok;
};

std::string iso8601_now();

// Append-only CSV writer; a header line is emitted when the file is created
// or empty. Appends are serialized and each record is flushed whole, so a
// shutdown mid-traffic never leaves a partial line.
class QueryLog {
 public:
  explicit QueryLog(const std::string& path);  // throws std::runtime_error on open failure

  void append(const QueryLogRecord& record);
  void flush();
  const std::string& path() const { return path_; }

  static constexpr const char* kHeader =
      "wall_time,client_id,qname,assignment_domain,recursor_index,rtt_ms,cache_hit,outcome";

  // Parses a file written by this class (tooling and tests).
  static std::vector<QueryLogRecord> read(const std::string& path);

 private:
  std::string path_;
  std::mutex mutex_;
  std::ofstream out_;
};

}  // namespace kres
