#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "amt/score.hpp"

namespace amt {

inline constexpr double kOnsetTolerance = 0.050;

struct MatchCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const MatchCounts&) const = default;
};

struct Metrics {
  double tpr = 0.0;
  double ppv = 0.0;
  double f_measure = 0.0;
};

// Greedy one-to-one onset matching. Pairs of equal pitch with
// |onset_est - onset_ref| <= tol are taken in increasing distance; ties go to
// the earlier reference, then the earlier estimate. Offsets are ignored.
MatchCounts match_notes(std::span<const NoteEvent> estimated, std::span<const NoteEvent> reference,
                        double tol = kOnsetTolerance);

// Empty versus empty scores 1 everywhere; any other zero denominator scores 0.
Metrics compute_metrics(const MatchCounts& counts);

struct SequenceScore {
  std::string id;
  MatchCounts counts;
  Metrics metrics;
};

struct EvalReport {
  std::string system;
  MatchCounts totals;
  Metrics pooled;  // counts summed over sequences before dividing
  Metrics mean;    // per-sequence metrics averaged
  std::vector<SequenceScore> sequences;

  void add(std::string id, const MatchCounts& counts);
  nlohmann::json to_json() const;
};

// Plain-text table with TPR / PPV / F-measure columns in percent, one row per report.
std::string format_table(std::span<const EvalReport> reports);

}  // namespace amt
