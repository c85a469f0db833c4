#include "kres/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace kres {

using nlohmann::json;

std::string to_string(HttpMethod m) { return m == HttpMethod::Get ? "GET" : "POST"; }

const Salt& ProxyConfig::require_salt() const {
  if (!salt) {
    throw ConfigError(
        "config has no salt; generate one with `kresolver salt --config <path>` "
        "or run serve with --generate");
  }
  return *salt;
}

namespace {

struct UrlParts {
  std::string scheme;
  std::string host;
};

UrlParts split_url(const std::string& url) {
  UrlParts parts;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) return parts;
  parts.scheme = url.substr(0, scheme_end);
  auto rest = url.substr(scheme_end + 3);
  auto host_end = rest.find_first_of("/:?");
  parts.host = rest.substr(0, host_end);
  return parts;
}

bool is_loopback_host(const std::string& host) {
  return host == "localhost" || host == "::1" || host.rfind("127.", 0) == 0;
}

void validate_recursor(const RecursorSpec& spec, const std::string& where) {
  if (spec.name.empty()) throw ConfigError(where + ": name must be non-empty");
  auto parts = split_url(spec.url);
  if (parts.host.empty()) throw ConfigError(where + ": url has no host: " + spec.url);
  if (parts.scheme == "https") return;
  // Plain http is tolerated for loopback upstreams only (hermetic tests);
  // anything reachable over a network must be https.
  if (parts.scheme == "http" && is_loopback_host(parts.host)) return;
  throw ConfigError(where + ": url scheme must be https: " + spec.url);
}

HttpMethod parse_method(const std::string& text, const std::string& where) {
  std::string upper = text;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "GET") return HttpMethod::Get;
  if (upper == "POST") return HttpMethod::Post;
  throw ConfigError(where + ": method must be GET or POST, got \"" + text + "\"");
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

RecursorSpec parse_recursor(const json& item, const std::string& where) {
  if (!item.is_object()) throw ConfigError(where + ": recursor entry must be an object");
  RecursorSpec spec;
  spec.name = get_or<std::string>(item, "name", "", where);
  spec.url = get_or<std::string>(item, "url", "", where);
  if (item.contains("method")) {
    spec.method = parse_method(item.at("method").get<std::string>(), where);
  }
  spec.anycast = get_or<bool>(item, "anycast", false, where);
  spec.location = get_or<std::string>(item, "location", spec.anycast ? "anycast" : "", where);
  spec.filtering = get_or<bool>(item, "filtering", false, where);
  spec.enabled = get_or<bool>(item, "enabled", true, where);
  validate_recursor(spec, where);
  return spec;
}

}  // namespace

ResolverPool curate_pool(const std::vector<RecursorSpec>& raw) {
  ResolverPool pool;
  for (const auto& spec : raw) {
    if (spec.enabled && !spec.filtering) pool.recursors.push_back(spec);
  }
  if (pool.recursors.empty()) {
    throw ConfigError("pool is empty after curation (every entry is disabled or filtering)");
  }
  return pool;
}

ProxyConfig load_config(const std::string& path, SaltPolicy salt_policy) {
  std::ifstream in(path);
  if (!in.is_open()) throw ConfigError("cannot open config file: " + path);

  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    // nlohmann reports the byte position; surface it as-is.
    throw ConfigError(path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(path + ": top level must be an object");

  ProxyConfig cfg;
  cfg.listen_address = get_or<std::string>(doc, "listen_address", cfg.listen_address, "config");
  cfg.control_address =
      get_or<std::string>(doc, "control_address", cfg.control_address, "config");
  cfg.cache_max_ttl_s = get_or<std::int64_t>(doc, "cache_max_ttl_s", 300, "config");
  cfg.query_timeout_ms = get_or<std::int64_t>(doc, "query_timeout_ms", 5000, "config");
  cfg.log_path = get_or<std::string>(doc, "log_path", cfg.log_path, "config");
  cfg.cache_capacity = get_or<std::size_t>(doc, "cache_capacity", cfg.cache_capacity, "config");
  cfg.suffix_list_path =
      get_or<std::string>(doc, "suffix_list_path", cfg.suffix_list_path, "config");

  if (cfg.query_timeout_ms <= 0) throw ConfigError("config.query_timeout_ms: must be > 0");
  if (cfg.cache_max_ttl_s < 1) throw ConfigError("config.cache_max_ttl_s: must be >= 1");

  std::string failover = get_or<std::string>(doc, "failover_mode", "strict", "config");
  if (failover == "strict") {
    cfg.failover_mode = FailoverMode::Strict;
  } else if (failover == "relaxed") {
    cfg.failover_mode = FailoverMode::Relaxed;
  } else {
    throw ConfigError("config.failover_mode: must be strict or relaxed, got \"" + failover +
                      "\"");
  }

  if (doc.contains("attribution")) {
    const auto& attr = doc.at("attribution");
    cfg.attribution.t_idle_ms =
        get_or<std::int64_t>(attr, "t_idle_ms", cfg.attribution.t_idle_ms, "config.attribution");
    cfg.attribution.w_max_ms =
        get_or<std::int64_t>(attr, "w_max_ms", cfg.attribution.w_max_ms, "config.attribution");
  }
  if (cfg.attribution.t_idle_ms <= 0 || cfg.attribution.t_idle_ms > cfg.attribution.w_max_ms) {
    throw ConfigError("config.attribution: requires 0 < t_idle_ms <= w_max_ms");
  }

  if (!doc.contains("pool") || !doc.at("pool").is_object() ||
      !doc.at("pool").contains("recursors") || !doc.at("pool").at("recursors").is_array()) {
    throw ConfigError("config.pool.recursors: required array is missing");
  }
  std::vector<RecursorSpec> raw;
  std::set<std::string> seen;
  const auto& arr = doc.at("pool").at("recursors");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    auto spec = parse_recursor(arr[i], "config.pool.recursors[" + std::to_string(i) + "]");
    if (!seen.insert(spec.name).second) {
      throw ConfigError("config.pool.recursors: duplicate recursor name \"" + spec.name + "\"");
    }
    raw.push_back(std::move(spec));
  }
  if (raw.empty()) throw ConfigError("config.pool.recursors: must not be empty");
  cfg.pool = curate_pool(raw);

  if (doc.contains("salt")) {
    auto hex = doc.at("salt").get<std::string>();
    auto salt = Salt::from_hex(hex);
    if (!salt) {
      throw ConfigError("config.salt: must be exactly 32 hex characters, got \"" + hex + "\"");
    }
    cfg.salt = *salt;
  } else if (salt_policy == SaltPolicy::Required) {
    cfg.require_salt();  // throws with the remediation hint
  }

  return cfg;
}

Salt write_salt_to_config(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw ConfigError("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  in.close();
  if (doc.contains("salt")) {
    throw ConfigError(path + ": already has a salt; refusing to overwrite " +
                      "(a new salt would reassign every domain)");
  }
  Salt salt = generate_salt();
  doc["salt"] = salt.to_hex();
  std::ofstream out(path, std::ios::trunc);
  if (!out.is_open()) throw ConfigError("cannot write config file: " + path);
  out << doc.dump(2) << "\n";
  return salt;
}

}  // namespace kres
