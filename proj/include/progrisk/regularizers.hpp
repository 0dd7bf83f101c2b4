#pragma once

// Soft versions of the non-decreasing-risk constraint, added on top of the
// independent-sigmoid (Baseline) BCE for knees that have two scans:
//
//   ConReg   L_cont = y_siam |h2 - h1|^2 + (1 - y_siam) max(0, m - |h2 - h1|)^2
//   RiskReg  L_reg  = max(0, log s(f1) - log s(f2) + m)
//   total    BCE(y1, s(f1)) + BCE(y2, s(f2)) + gamma * penalty
//
// Hinges use the zero subgradient at the kink.

#include <span>
#include <string>
#include <vector>

#include "progrisk/gradnet.hpp"
#include "progrisk/riskform.hpp"

namespace progrisk::regularizers {

enum class Kind { ConReg, RiskReg, Both };

std::string to_string(Kind k);

struct RegConfig {
  Kind kind = Kind::RiskReg;
  double gamma = 1.0;
  double riskreg_margin = 2.0;
  double conreg_margin = 1.0;

  void validate() const;
};

struct ContrastiveResult {
  double loss = 0.0;
  std::vector<double> dh1;
  std::vector<double> dh2;
};

ContrastiveResult contrastive_loss(std::span<const double> h1, std::span<const double> h2,
                                   int y_siam, double margin);

struct RiskRegResult {
  double loss = 0.0;
  double dlogit1 = 0.0;
  double dlogit2 = 0.0;
};

RiskRegResult riskreg_loss(double f_logit1, double f_logit2, double margin);

struct RegularizedLossResult {
  double loss = 0.0;
  double dlogit1 = 0.0;
  double dlogit2 = 0.0;
  std::vector<double> dh1;  // empty unless ConReg contributes
  std::vector<double> dh2;
};

// Pairwise only: throws std::invalid_argument when labels.y2 is absent, the
// caller falls back to plain BCE for single-scan knees.
RegularizedLossResult total_regularized_loss(const riskform::PairLabels& labels,
                                             const gradnet::ForwardTrace& scan1,
                                             const gradnet::ForwardTrace& scan2,
                                             const RegConfig& config);

}  // namespace progrisk::regularizers
