#include "amt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

namespace amt {
namespace {

constexpr double kOnsetSlack = 1e-9;

double ratio(long num, long den, bool empty_is_perfect) {
  if (den == 0) return empty_is_perfect ? 1.0 : 0.0;
  return double(num) / double(den);
}

}  // namespace

MatchCounts match_notes(std::span<const NoteEvent> estimated, std::span<const NoteEvent> reference,
                        double tol) {
  struct Pair {
    double distance;
    double ref_onset;
    size_t ref;
    double est_onset;
    size_t est;
  };
  std::vector<Pair> pairs;
  for (size_t r = 0; r < reference.size(); ++r) {
    for (size_t e = 0; e < estimated.size(); ++e) {
      if (estimated[e].pitch != reference[r].pitch) continue;
      const double d = std::abs(estimated[e].onset - reference[r].onset);
      if (d <= tol + kOnsetSlack) pairs.push_back({d, reference[r].onset, r, estimated[e].onset, e});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.distance, a.ref_onset, a.ref, a.est_onset, a.est) <
           std::tie(b.distance, b.ref_onset, b.ref, b.est_onset, b.est);
  });

  std::vector<bool> ref_used(reference.size(), false), est_used(estimated.size(), false);
  MatchCounts counts;
  for (const auto& p : pairs) {
    if (ref_used[p.ref] || est_used[p.est]) continue;
    ref_used[p.ref] = est_used[p.est] = true;
    ++counts.tp;
  }
  counts.fp = long(estimated.size()) - counts.tp;
  counts.fn = long(reference.size()) - counts.tp;
  return counts;
}

Metrics compute_metrics(const MatchCounts& c) {
  Metrics m;
  const bool empty = c.tp == 0 && c.fp == 0 && c.fn == 0;
  m.tpr = ratio(c.tp, c.tp + c.fn, empty);
  m.ppv = ratio(c.tp, c.tp + c.fp, empty);
  if (empty) {
    m.f_measure = 1.0;
  } else {
    // Harmonic mean of ppv and tpr, written over the counts to round once.
    m.f_measure = c.tp > 0 ? 2.0 * double(c.tp) / double(2 * c.tp + c.fp + c.fn) : 0.0;
  }
  return m;
}

void EvalReport::add(std::string id, const MatchCounts& counts) {
  sequences.push_back({std::move(id), counts, compute_metrics(counts)});
  totals += counts;
  pooled = compute_metrics(totals);
  mean = {};
  for (const auto& s : sequences) {
    mean.tpr += s.metrics.tpr;
    mean.ppv += s.metrics.ppv;
    mean.f_measure += s.metrics.f_measure;
  }
  const double n = double(sequences.size());
  mean.tpr /= n;
  mean.ppv /= n;
  mean.f_measure /= n;
}

nlohmann::json EvalReport::to_json() const {
  auto metrics = [](const Metrics& m) {
    return nlohmann::json{{"tpr", m.tpr}, {"ppv", m.ppv}, {"f_measure", m.f_measure}};
  };
  nlohmann::json per = nlohmann::json::array();
  for (const auto& s : sequences) {
    per.push_back({{"id", s.id},
                   {"tp", s.counts.tp},
                   {"fp", s.counts.fp},
                   {"fn", s.counts.fn},
                   {"metrics", metrics(s.metrics)}});
  }
  return {{"system", system},
          {"tp", totals.tp},
          {"fp", totals.fp},
          {"fn", totals.fn},
          {"pooled", metrics(pooled)},
          {"mean", metrics(mean)},
          {"sequences", per}};
}

std::string format_table(std::span<const EvalReport> reports) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s | %6s | %6s | %9s\n", "AMT system", "TPR", "PPV", "F-measure");
  out += line;
  out += std::string(16, '-') + "-+--------+--------+-----------\n";
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-16s | %6.1f | %6.1f | %9.1f\n", r.system.c_str(),
                  100.0 * r.pooled.tpr, 100.0 * r.pooled.ppv, 100.0 * r.pooled.f_measure);
    out += line;
  }
  return out;
}

}  // namespace amt
