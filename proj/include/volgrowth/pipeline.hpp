#pragma once

// End-to-end construction: growth function -> normalized w -> ends layout -> parameter
// schedule -> trunk intervals -> admissible tree -> assembled plan -> discrete growth.

#include "volgrowth/assembly.hpp"
#include "volgrowth/growth.hpp"
#include "volgrowth/pieces.hpp"
#include "volgrowth/tree.hpp"

#include <optional>

namespace volgrowth {

struct PipelineConfig {
  GrowthFunction v;
  bool normalize = true;          // false: v is used as w verbatim
  NormalizeOptions normalize_options;
  RootedTreeDescription ends_tree = ray_tree(1);
  std::optional<int> degree_bound;
  PieceCatalog catalog = PieceCatalog::standard();
  int trunks = 1;
  SelectionConfig selection;
  int horizon = 0;                // tree levels
};

struct PipelineResult {
  GrowthFunction w;
  std::optional<NormalizeResult> normalized;
  EndsLayout layout;
  ParamSchedule schedule;
  LevelSet S;
  AdmissibleTree tree;
  AssemblyPlan plan;
  DiscreteGrowth z;
};

inline GrowthFunction pipeline_w(const PipelineConfig& cfg, std::optional<NormalizeResult>* keep = nullptr) {
  if (!cfg.normalize) return cfg.v;
  auto nr = normalize(cfg.v, cfg.normalize_options);
  GrowthFunction w = nr.w;
  if (keep) *keep = std::move(nr);
  return w;
}

inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  if (cfg.horizon < 1) throw DomainError("pipeline horizon must be positive");
  PipelineResult r;
  r.w = pipeline_w(cfg, &r.normalized);
  if (r.w.horizon() < cfg.horizon) throw HorizonTooSmall("w is shorter than the pipeline horizon");
  r.w = r.w.truncated(cfg.horizon);
  r.layout = layout_from_tree(cfg.ends_tree, cfg.degree_bound);
  r.schedule = synthesize_params(cfg.catalog, r.layout, cfg.trunks);
  r.S = choose_nj(r.schedule, r.w, cfg.selection, cfg.horizon);
  r.tree = build_tree(r.w, r.S, cfg.horizon, cfg.trunks);
  r.plan = assemble(r.tree, r.S, r.schedule, cfg.catalog, r.layout);
  r.plan.mode = cfg.selection.mode;
  r.z = discrete_growth(r.plan);
  return r;
}

}  // namespace volgrowth
