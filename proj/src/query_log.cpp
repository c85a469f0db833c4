#include "kres/query_log.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

namespace kres {

std::string to_string(QueryOutcome o) {
  switch (o) {
    case QueryOutcome::Ok: return "ok";
    case QueryOutcome::ServFail: return "servfail";
    case QueryOutcome::Timeout: return "timeout";
    case QueryOutcome::FormErr: return "formerr";
  }
  return "unknown";
}

namespace {
QueryOutcome outcome_from_string(const std::string& s) {
  if (s == "ok") return QueryOutcome::Ok;
  if (s == "servfail") return QueryOutcome::ServFail;
  if (s == "timeout") return QueryOutcome::Timeout;
  if (s == "formerr") return QueryOutcome::FormErr;
  throw std::runtime_error("query log: unknown outcome \"" + s + "\"");
}
}  // namespace

std::string iso8601_now() {
  using namespace std::chrono;
  auto now = system_clock::now();
  auto secs = system_clock::to_time_t(now);
  auto millis = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(millis));
  return buf;
}

QueryLog::QueryLog(const std::string& path) : path_(path) {
  bool needs_header = true;
  std::error_code ec;
  auto existing = std::filesystem::file_size(path, ec);
  if (!ec && existing > 0) needs_header = false;
  out_.open(path, std::ios::app);
  if (!out_.is_open()) throw std::runtime_error("cannot open query log: " + path);
  if (needs_header) out_ << kHeader << "\n" << std::flush;
}

void QueryLog::append(const QueryLogRecord& r) {
  std::ostringstream line;
  line << r.wall_time << ',' << r.client_id << ',' << r.qname << ',' << r.assignment_domain
       << ',' << r.recursor_index << ',' << r.rtt_ms << ',' << (r.cache_hit ? "true" : "false")
       << ',' << to_string(r.outcome) << '\n';
  std::lock_guard<std::mutex> lock(mutex_);
  out_ << line.str() << std::flush;
}

void QueryLog::flush() {
  std::lock_guard<std::mutex> lock(mutex_);
  out_.flush();
}

std::vector<QueryLogRecord> QueryLog::read(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw std::runtime_error("cannot open query log: " + path);
  std::vector<QueryLogRecord> records;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (first) {
      first = false;
      if (line == kHeader) continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      auto comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 8) {
      throw std::runtime_error("query log line " + std::to_string(lineno) +
                               ": expected 8 fields, got " + std::to_string(fields.size()));
    }
    QueryLogRecord r;
    r.wall_time = fields[0];
    r.client_id = fields[1];
    r.qname = fields[2];
    r.assignment_domain = fields[3];
    r.recursor_index = fields[4];
    r.rtt_ms = std::stod(fields[5]);
    r.cache_hit = fields[6] == "true";
    r.outcome = outcome_from_string(fields[7]);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace kres
