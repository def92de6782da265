// include/lfmmi/forward.hpp
//
// Log-semiring forward and forward-backward over an FSA and an emission
// matrix. All computation is in the log domain with 64-bit floats; the
// backward pass is explicit so the gradient identity (occupation posteriors
// equal the analytic gradient of the log forward score) is testable.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "lfmmi/emission.hpp"
#include "lfmmi/fsa.hpp"

namespace lfmmi {

// log P(O_1^T | G): logsumexp over all accepted length-T label paths of
// (arc weights + emissions + final weight). kLogZero when no path exists.
double forward_score(const Fsa& g, const EmissionMatrix& e);

// Entry t (0-based) equals forward_score(g, e.truncated(t + 1)), bit-exactly:
// the per-frame snapshots use the same reduction order as a fresh forward
// pass on truncated emissions. One forward pass total.
std::vector<double> forward_prefix_series(const Fsa& g, const EmissionMatrix& e);

// Zero-frame score: the start state's final weight (kLogZero if non-final).
double empty_path_score(const Fsa& g);

// T x P row-major matrix; entry (t, p) is the posterior probability that an
// accepted path uses label p at frame t. Rows sum to 1; equals
// d log P(O|G) / d e[t][p]. Throws InfeasibleError when no path is accepted.
std::vector<double> occupation_posteriors(const Fsa& g, const EmissionMatrix& e);

struct LfmmiResult {
  double objective = 0.0;           // log P(O|G_num) - log P(O|G_den)
  std::vector<double> gradient;     // T x P row-major, numerator - denominator
};

// LF-MMI objective and its gradient with respect to the emissions.
// Throws InfeasibleError naming the side ("numerator" / "denominator") that
// admits no path.
LfmmiResult lfmmi_objective_and_grad(const Fsa& g_num, const Fsa& g_den,
                                     const EmissionMatrix& e);

enum class ObjectiveKind { kAed, kNt };

inline constexpr double kDefaultAedAlpha = 0.3;
inline constexpr double kDefaultNtAlpha = 0.5;

// Interpolated training objective over externally supplied component losses.
//   AED:  alpha*ce + (1-alpha)*ctc + (1-alpha)*mmi   (ctc optional)
//   NT:   nt + alpha*ctc + alpha*mmi                 (ctc optional)
// parts keys: "ce", "ctc", "mmi", "nt". Missing or unknown components and
// (for AED) alpha outside (0, 1) throw std::invalid_argument naming them.
double combine_training_objectives(ObjectiveKind kind, double alpha,
                                   const std::map<std::string, double>& parts);
double combine_training_objectives(ObjectiveKind kind,
                                   const std::map<std::string, double>& parts);

}  // namespace lfmmi
