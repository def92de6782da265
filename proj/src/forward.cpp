// src/forward.cpp

#include "lfmmi/forward.hpp"

#include <cmath>
#include <sstream>

namespace lfmmi {

namespace {

void check_labels(const Fsa& g, const EmissionMatrix& e) {
  for (const Arc& a : g.arcs) {
    if (a.label >= static_cast<uint32_t>(e.units()))
      throw std::invalid_argument("forward: arc label " + std::to_string(a.label) +
                                  " out of range for P = " + std::to_string(e.units()));
  }
}

// One forward pass; alphas[t] holds the state scores after t frames.
// The arc iteration order is the stored order, so truncating the emissions
// and re-running reproduces every prefix bit-exactly.
std::vector<std::vector<double>> forward_alphas(const Fsa& g, const EmissionMatrix& e) {
  const int T = e.frames();
  std::vector<std::vector<double>> alphas(T + 1,
                                          std::vector<double>(g.num_states, kLogZero));
  alphas[0][g.start_state] = 0.0;
  for (int t = 0; t < T; ++t) {
    const auto& prev = alphas[t];
    auto& next = alphas[t + 1];
    for (const Arc& a : g.arcs) {
      if (prev[a.src] == kLogZero) continue;
      double w = prev[a.src] + a.weight + e.at(t, static_cast<int>(a.label));
      next[a.dst] = log_add(next[a.dst], w);
    }
  }
  return alphas;
}

double final_reduction(const Fsa& g, const std::vector<double>& alpha) {
  double score = kLogZero;
  for (uint32_t s = 0; s < g.num_states; ++s) {
    if (g.final_weights[s] != kLogZero)
      score = log_add(score, alpha[s] + g.final_weights[s]);
  }
  return score;
}

}  // namespace

double empty_path_score(const Fsa& g) { return g.final_weights[g.start_state]; }

std::vector<double> forward_prefix_series(const Fsa& g, const EmissionMatrix& e) {
  check_labels(g, e);
  auto alphas = forward_alphas(g, e);
  std::vector<double> series(e.frames());
  for (int t = 1; t <= e.frames(); ++t) series[t - 1] = final_reduction(g, alphas[t]);
  return series;
}

double forward_score(const Fsa& g, const EmissionMatrix& e) {
  if (e.frames() == 0) {
    check_labels(g, e);
    return empty_path_score(g);
  }
  return forward_prefix_series(g, e).back();
}

std::vector<double> occupation_posteriors(const Fsa& g, const EmissionMatrix& e) {
  check_labels(g, e);
  const int T = e.frames();
  const int P = e.units();

  auto alphas = forward_alphas(g, e);
  double log_total = final_reduction(g, alphas[T]);
  if (log_total == kLogZero)
    throw InfeasibleError("graph", "occupation: graph admits no path on these emissions");

  std::vector<std::vector<double>> betas(T + 1,
                                         std::vector<double>(g.num_states, kLogZero));
  betas[T] = g.final_weights;
  for (int t = T - 1; t >= 0; --t) {
    const auto& next = betas[t + 1];
    auto& cur = betas[t];
    for (const Arc& a : g.arcs) {
      if (next[a.dst] == kLogZero) continue;
      double w = a.weight + e.at(t, static_cast<int>(a.label)) + next[a.dst];
      cur[a.src] = log_add(cur[a.src], w);
    }
  }

  std::vector<double> posterior(static_cast<size_t>(T) * P, 0.0);
  for (int t = 0; t < T; ++t) {
    for (const Arc& a : g.arcs) {
      double occ = alphas[t][a.src] + a.weight + e.at(t, static_cast<int>(a.label)) +
                   betas[t + 1][a.dst];
      if (occ == kLogZero) continue;
      posterior[static_cast<size_t>(t) * P + a.label] += std::exp(occ - log_total);
    }
  }
  return posterior;
}

LfmmiResult lfmmi_objective_and_grad(const Fsa& g_num, const Fsa& g_den,
                                     const EmissionMatrix& e) {
  double num_score = forward_score(g_num, e);
  if (num_score == kLogZero)
    throw InfeasibleError("numerator",
                          "lfmmi: numerator graph admits no path (transcript/emission "
                          "length mismatch?)");
  double den_score = forward_score(g_den, e);
  if (den_score == kLogZero)
    throw InfeasibleError("denominator", "lfmmi: denominator graph admits no path");

  LfmmiResult result;
  result.objective = num_score - den_score;
  result.gradient = occupation_posteriors(g_num, e);
  std::vector<double> den_post = occupation_posteriors(g_den, e);
  for (size_t i = 0; i < result.gradient.size(); ++i) result.gradient[i] -= den_post[i];
  return result;
}

double combine_training_objectives(ObjectiveKind kind, double alpha,
                                   const std::map<std::string, double>& parts) {
  auto require = [&](const char* name) {
    auto it = parts.find(name);
    if (it == parts.end())
      throw std::invalid_argument(std::string("combine: missing component `") + name +
                                  "`");
    return it->second;
  };
  for (const auto& [name, value] : parts) {
    (void)value;
    if (name != "ce" && name != "ctc" && name != "mmi" && name != "nt")
      throw std::invalid_argument("combine: unknown component `" + name + "`");
  }
  const bool with_ctc = parts.count("ctc") > 0;

  if (kind == ObjectiveKind::kAed) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("combine: AED alpha must satisfy 0 < alpha < 1");
    if (parts.count("nt"))
      throw std::invalid_argument("combine: unknown component `nt` for AED");
    double ce = require("ce");
    double mmi = require("mmi");
    if (with_ctc)
      return alpha * ce + (1.0 - alpha) * parts.at("ctc") + (1.0 - alpha) * mmi;
    return alpha * ce + (1.0 - alpha) * mmi;
  }

  if (!std::isfinite(alpha))
    throw std::invalid_argument("combine: NT alpha must be finite");
  if (parts.count("ce"))
    throw std::invalid_argument("combine: unknown component `ce` for NT");
  double nt = require("nt");
  double mmi = require("mmi");
  if (with_ctc) return nt + alpha * parts.at("ctc") + alpha * mmi;
  return nt + alpha * mmi;
}

double combine_training_objectives(ObjectiveKind kind,
                                   const std::map<std::string, double>& parts) {
  return combine_training_objectives(
      kind, kind == ObjectiveKind::kAed ? kDefaultAedAlpha : kDefaultNtAlpha, parts);
}

}  // namespace lfmmi
