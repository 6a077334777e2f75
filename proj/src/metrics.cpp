#include "markersim/metrics.hpp"

#include <algorithm>
#include <map>

#include "markersim/errors.hpp"

namespace markersim {

std::string_view to_string(OutcomeClass c) {
  switch (c) {
    case OutcomeClass::Success: return "Success";
    case OutcomeClass::Fail: return "Fail";
    case OutcomeClass::FalseDetection: return "FD";
  }
  return "?";
}

EpisodeOutcome classify(const EpisodeRecord& record, const Vec3& marker) {
  if (record.trajectory.empty()) throw DataError("record '" + record.scenario_id + "': empty trajectory");
  EpisodeOutcome out;
  out.collided = record.termination == Termination::Collision;
  if (record.detection) {
    out.nav_error = distance(record.detection->reported_position, marker);
    out.cls = out.nav_error <= kSuccessDistance ? OutcomeClass::Success : OutcomeClass::FalseDetection;
  } else {
    out.nav_error = distance(record.trajectory.back(), marker);
    out.cls = OutcomeClass::Fail;
  }
  out.spl_term = spl_term(record, marker);
  return out;
}

double spl_term(const EpisodeRecord& record, const Vec3& marker) {
  if (!record.detection || distance(record.detection->reported_position, marker) > kSuccessDistance) {
    return 0.0;
  }
  const auto k = static_cast<std::size_t>(record.detection->step_index);
  if (k >= record.trajectory.size()) {
    throw DataError("record '" + record.scenario_id + "': detection step beyond trajectory");
  }
  const std::vector<Vec3> prefix(record.trajectory.begin(),
                                 record.trajectory.begin() + static_cast<std::ptrdiff_t>(k) + 1);
  const double l = xy_distance(record.trajectory.front(), record.trajectory[k]);
  const double p = trajectory_xy_length(prefix);
  if (l == 0.0) return 1.0;
  return l / std::max(l, p);
}

namespace {

struct Accumulator {
  int n = 0;
  int success = 0;
  int collided = 0;
  int false_det = 0;
  double ne = 0.0;
  double spl = 0.0;

  void add(const EpisodeOutcome& o) {
    ++n;
    success += o.cls == OutcomeClass::Success ? 1 : 0;
    false_det += o.cls == OutcomeClass::FalseDetection ? 1 : 0;
    collided += o.collided ? 1 : 0;
    ne += o.nav_error;
    spl += o.spl_term;
  }

  MetricsSummary finish(const std::string& method, const std::string& map) const {
    const double pct = 100.0 / n;
    return {method, map, n, success * pct, ne / n, spl * pct, collided * pct, false_det * pct};
  }
};

}  // namespace

std::vector<MetricsSummary> summarize(const std::vector<ScoredEpisode>& episodes) {
  if (episodes.empty()) throw DataError("summarize: no episodes");
  std::map<std::string, std::map<std::string, Accumulator>> groups;
  for (const auto& e : episodes) groups[e.method][e.map].add(e.outcome);
  std::vector<MetricsSummary> rows;
  for (const auto& [method, maps] : groups) {
    Accumulator all;
    for (const auto& [map, acc] : maps) {
      rows.push_back(acc.finish(method, map));
      all.n += acc.n;
      all.success += acc.success;
      all.collided += acc.collided;
      all.false_det += acc.false_det;
      all.ne += acc.ne;
      all.spl += acc.spl;
    }
    rows.push_back(all.finish(method, kAvgRow));
  }
  return rows;
}

FactorReport factor_report(const std::string& method, const std::vector<FactorSample>& samples,
                           const FactorConfig& config) {
  FactorReport report;
  report.method = method;
  for (const OutcomeClass cls :
       {OutcomeClass::Success, OutcomeClass::Fail, OutcomeClass::FalseDetection}) {
    FactorRow row;
    row.cls = cls;
    int sunny = 0;
    int severity_n = 0;
    double severity = 0.0;
    for (const auto& s : samples) {
      if (s.cls != cls) continue;
      ++row.n_episodes;
      row.mean_height += s.initial_height;
      row.mean_time += s.time_of_day;
      const bool is_sunny = s.weather.kind == WeatherKind::Sunny;
      sunny += is_sunny ? 1 : 0;
      if (is_sunny && !config.sunny_counts_as_zero) continue;
      severity += is_sunny ? 0.0 : s.weather.severity;
      ++severity_n;
    }
    if (row.n_episodes == 0) continue;
    row.mean_height /= row.n_episodes;
    row.mean_time /= row.n_episodes;
    row.sunny_pct = 100.0 * sunny / row.n_episodes;
    row.severity_pct = severity_n == 0 ? 0.0 : 100.0 * severity / severity_n;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace markersim
