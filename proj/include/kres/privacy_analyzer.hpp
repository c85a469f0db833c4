#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "kres/salt.hpp"

namespace kres {

// Popularity-ranked domain list (rank,domain CSV). Ranks must run 1..N with
// no gaps; domains must be unique.
struct TopList {
  std::vector<std::string> domains;  // index i holds rank i+1

  std::size_t size() const { return domains.size(); }
};

TopList load_toplist(const std::string& path);  // throws std::runtime_error with line number

// Synthetic user: n unique registrable domains plus a private salt
// (distinct users never share a salt, so their assignments decorrelate).
struct UserProfile {
  std::uint32_t profile_id = 0;
  std::vector<std::string> domains;
  Salt salt;
};

// Rank-weighted sampling without replacement inside each profile,
// weight(rank) = 1/rank. Deterministic for a given seed; per-profile salts
// are derived from the seed as well.
std::vector<UserProfile> sample_profiles(const TopList& toplist, std::uint32_t p_profiles,
                                         std::uint32_t n_domains, std::uint64_t seed);

inline constexpr const char* kWeightingDescription = "1/rank (zipf s=1)";

// Per-profile, per-recursor domain counts with the aggregate shape metrics.
struct DistributionReport {
  std::uint32_t k = 0;
  std::uint32_t n = 0;
  std::uint64_t seed = 0;
  std::string weighting = kWeightingDescription;
  std::vector<std::vector<std::uint32_t>> counts;  // [profile][recursor]
  std::vector<std::uint64_t> histogram;            // histogram[c] = cells with count c
  double empty_fraction = 0.0;
  double mode_band_fraction = 0.0;  // count in {3,4}
  double heavy_fraction = 0.0;      // count in [8,14]
};

DistributionReport simulate_assignments(const std::vector<UserProfile>& profiles,
                                        std::uint32_t k);

// Exact Binomial(n, 1/k) pmf by direct product recurrence; no normal or
// Poisson approximation. pmf[0] = ((k-1)/k)^n.
std::vector<double> empty_fraction_oracle(std::uint32_t n, std::uint32_t k);

// domain -> category, plus the set of categories considered sensitive.
struct CategoryMap {
  std::unordered_map<std::string, std::string> category;
  std::set<std::string> sensitive;

  static CategoryMap load(const std::string& path);  // CSV domain,category
  static const std::set<std::string>& default_sensitive_categories();

  // Uncategorized domains are non-sensitive.
  bool is_sensitive(const std::string& domain) const;
};

struct SensitivityReport {
  struct ProfileDetail {
    std::uint32_t profile_id = 0;
    std::uint32_t sensitive_count = 0;
    bool colocated = false;           // some recursor got >= 2 sensitive domains
    std::uint32_t max_same_bucket = 0;
  };

  std::vector<ProfileDetail> details;
  std::uint64_t profiles_with_sensitive = 0;
  std::uint64_t profiles_all_distinct = 0;  // includes single-sensitive profiles
  std::uint64_t profiles_with_colocation = 0;
};

SensitivityReport colocation_report(const std::vector<UserProfile>& profiles, std::uint32_t k,
                                    const CategoryMap& categories);

// CSV outputs behind the analyze subcommand; formats are stable so runs are
// byte-comparable.
void write_distribution_csv(const DistributionReport& report, const std::string& path);
void write_histogram_csv(const DistributionReport& report, const std::string& path);
void write_sensitivity_csv(const SensitivityReport& report, const std::string& path);
void write_analysis_summary_csv(const DistributionReport& dist, const SensitivityReport* sens,
                                const std::string& path);

}  // namespace kres
