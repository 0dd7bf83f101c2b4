#pragma once

// Risk heads that turn one or two scan logits into event probabilities.
//
//   Baseline   y1 = s(a),  y2 = s(b)                       (scans independent)
//   RiskForm1  y1 = s(a),  y2 = 1 - (1 - s(a)) (1 - s(b))  (one scorer f for both scans)
//   RiskForm2  y1 = s(a),  y2 = 1 - (1 - s(a)) s(g)        (second scorer g, inversely oriented)
//
// For both composed heads log(1 - y2) is a sum of log-sigmoids, so y2 >= y1
// holds for every finite logit pair. All probabilities are carried together
// with their logs so the BCE never takes log of a rounded 0 or 1.

#include <optional>
#include <string>

namespace progrisk::riskform {

enum class Formulation { Baseline, RiskForm1, RiskForm2 };

std::string to_string(Formulation f);

// log(sigmoid(z)) = -softplus(-z), finite for all finite z.
double log_sigmoid(double z);

// sigmoid evaluated as 1 - exp(log sigmoid(-z)); the composed heads use the
// same route so scan-1 and scan-2 risks round consistently.
double sigmoid(double z);

// log(1 - exp(a)) for a <= 0.
double log1mexp(double a);

struct Prob {
  double p = 0.0;
  double log_p = 0.0;    // log p
  double log_1mp = 0.0;  // log(1 - p)
};

struct PairPrediction {
  Prob y1;
  std::optional<Prob> y2;

  double y1_hat() const { return y1.p; }
  std::optional<double> y2_hat() const {
    return y2 ? std::optional<double>(y2->p) : std::nullopt;
  }
};

struct PairLabels {
  int y1 = 0;
  std::optional<int> y2;
  int horizon_years = 1;
};

// Logits feeding a head; logit2 is f(x2) (Baseline, RiskForm1) or g(x2) (RiskForm2).
struct PairLogits {
  double logit1 = 0.0;
  std::optional<double> logit2;
};

double predict_single(double f_logit);

PairPrediction predict_pair_form1(double f_logit1, double f_logit2);
PairPrediction predict_pair_form2(double f_logit1, double g_logit2);
PairPrediction predict_baseline_pair(double f_logit1, double f_logit2);

// Dispatch on formulation; a missing second logit gives a single-scan prediction.
PairPrediction predict(Formulation form, const PairLogits& logits);

struct PairLossResult {
  double loss = 0.0;
  double dlogit1 = 0.0;
  double dlogit2 = 0.0;  // zero when no second scan
};

// L = BCE(y1, y1_hat) [+ BCE(y2, y2_hat)] with exact gradients w.r.t. the input logits.
PairLossResult pair_loss(Formulation form, const PairLogits& logits, const PairLabels& labels);

// Loss value only, from an existing prediction.
double pair_loss_value(const PairPrediction& pred, const PairLabels& labels);

// Clamp to [1e-12, 1 - 1e-12]; applied only when risks are serialized.
double clamp_for_export(double p);

}  // namespace progrisk::riskform
