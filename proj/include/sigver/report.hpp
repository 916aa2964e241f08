#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "sigver/evaluation.hpp"

namespace sigver {

namespace report_detail {

inline std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw Error(ErrorCode::kIoError, "cannot write " + p.string());
  return os;
}

}  // namespace report_detail

inline void write_det_csv(const std::filesystem::path& path, const DetCurve& det) {
  auto os = report_detail::open(path);
  os << "threshold,far,frr\n";
  for (const auto& p : det.points)
    os << report_detail::num(p.threshold) << ',' << report_detail::num(p.far) << ','
       << report_detail::num(p.frr) << '\n';
}

inline void write_scores_csv(const std::filesystem::path& path, const std::vector<ScoreRow>& rows) {
  using report_detail::num;
  auto os = report_detail::open(path);
  os << "user_id,signature_id,label,d_ged,d_neural,score_ged,score_neural,score_mcs\n";
  for (const auto& r : rows) {
    os << r.user_id << ',' << r.signature_id << ',' << to_string(r.label) << ',' << num(r.d_ged) << ','
       << num(r.d_neural) << ',' << num(r.score_ged) << ',' << num(r.score_neural) << ',' << num(r.score_mcs)
       << '\n';
  }
}

inline nlohmann::json eer_json(const EvalResult& r, const Protocol& p, SystemKind system, const EvalSettings& s) {
  nlohmann::json j;
  j["system"] = to_string(system);
  j["protocol"] = "r" + std::to_string(p.reference_count);
  j["forgeries"] = p.forgery_mode == ForgeryMode::kSkilled ? "sf" : "rf";
  j["reference_selection"] = p.selection == ReferenceSelection::kFirstK ? "first" : "random";
  j["runs"] = p.runs;
  j["seed"] = p.seed;
  j["eer"] = r.eer;
  j["run_eers"] = r.run_eers;
  j["threshold"] = r.threshold;
  j["user_normalization"] = s.user_normalization;
  j["c_node"] = s.costs.c_node;
  j["c_edge"] = s.costs.c_edge;
  j["sampling_d"] = s.extraction.sampling_d;
  j["references"] = r.counts.references;
  j["genuine_tests"] = r.counts.genuine_tests;
  j["forgery_tests"] = r.counts.forgeries;
  return j;
}

inline void write_eer_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto os = report_detail::open(path);
  os << j.dump(2) << '\n';
}

inline void write_grid_csv(const std::filesystem::path& path, const GridResult& g) {
  auto os = report_detail::open(path);
  os << "c_node,c_edge,eer\n";
  for (const auto& e : g.entries)
    os << report_detail::num(e.c_node) << ',' << report_detail::num(e.c_edge) << ','
       << report_detail::num(e.eer) << '\n';
}

}  // namespace sigver
