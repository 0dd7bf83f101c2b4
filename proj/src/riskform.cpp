#include "progrisk/riskform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace progrisk::riskform {

namespace {

void require_finite(double z, const char* what) {
  if (!std::isfinite(z)) throw std::invalid_argument(std::string(what) + ": non-finite logit");
}

Prob prob_from_log_1mp(double log_1mp) {
  return Prob{-std::expm1(log_1mp), log1mexp(log_1mp), log_1mp};
}

double bce(int y, const Prob& p) { return y == 1 ? -p.log_p : -p.log_1mp; }

// dBCE/dA where A = log(1 - y_hat) and y_hat = 1 - exp(A).
double bce_grad_wrt_log_1mp(int y, const Prob& p) {
  if (y == 0) return -1.0;
  // (1 - y_hat) / y_hat, evaluated in log space
  return std::exp(p.log_1mp - p.log_p);
}

}  // namespace

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::Baseline: return "Baseline";
    case Formulation::RiskForm1: return "RiskFORM1";
    case Formulation::RiskForm2: return "RiskFORM2";
  }
  return "?";
}

double log_sigmoid(double z) {
  // -softplus(-z) = -(max(-z, 0) + log1p(exp(-|z|)))
  return -(std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z))));
}

double sigmoid(double z) { return -std::expm1(log_sigmoid(-z)); }

double log1mexp(double a) {
  if (a > 0.0) throw std::domain_error("log1mexp: argument must be <= 0");
  return a > -std::numbers::ln2 ? std::log(-std::expm1(a)) : std::log1p(-std::exp(a));
}

double predict_single(double f_logit) {
  require_finite(f_logit, "predict_single");
  return sigmoid(f_logit);
}

PairPrediction predict_pair_form1(double f_logit1, double f_logit2) {
  require_finite(f_logit1, "predict_pair_form1");
  require_finite(f_logit2, "predict_pair_form1");
  const double a1 = log_sigmoid(-f_logit1);
  return PairPrediction{prob_from_log_1mp(a1), prob_from_log_1mp(a1 + log_sigmoid(-f_logit2))};
}

PairPrediction predict_pair_form2(double f_logit1, double g_logit2) {
  require_finite(f_logit1, "predict_pair_form2");
  require_finite(g_logit2, "predict_pair_form2");
  const double a1 = log_sigmoid(-f_logit1);
  return PairPrediction{prob_from_log_1mp(a1), prob_from_log_1mp(a1 + log_sigmoid(g_logit2))};
}

PairPrediction predict_baseline_pair(double f_logit1, double f_logit2) {
  require_finite(f_logit1, "predict_baseline_pair");
  require_finite(f_logit2, "predict_baseline_pair");
  return PairPrediction{prob_from_log_1mp(log_sigmoid(-f_logit1)),
                        prob_from_log_1mp(log_sigmoid(-f_logit2))};
}

PairPrediction predict(Formulation form, const PairLogits& logits) {
  if (!logits.logit2) {
    require_finite(logits.logit1, "predict");
    return PairPrediction{prob_from_log_1mp(log_sigmoid(-logits.logit1)), std::nullopt};
  }
  switch (form) {
    case Formulation::Baseline: return predict_baseline_pair(logits.logit1, *logits.logit2);
    case Formulation::RiskForm1: return predict_pair_form1(logits.logit1, *logits.logit2);
    case Formulation::RiskForm2: return predict_pair_form2(logits.logit1, *logits.logit2);
  }
  throw std::invalid_argument("predict: unknown formulation");
}

double pair_loss_value(const PairPrediction& pred, const PairLabels& labels) {
  if (pred.y2.has_value() != labels.y2.has_value())
    throw std::invalid_argument("pair_loss: prediction and labels disagree on scan 2 presence");
  double loss = bce(labels.y1, pred.y1);
  if (pred.y2) loss += bce(*labels.y2, *pred.y2);
  return loss;
}

PairLossResult pair_loss(Formulation form, const PairLogits& logits, const PairLabels& labels) {
  if (logits.logit2.has_value() != labels.y2.has_value())
    throw std::invalid_argument("pair_loss: logits and labels disagree on scan 2 presence");
  const PairPrediction pred = predict(form, logits);

  PairLossResult r;
  r.loss = pair_loss_value(pred, labels);
  // d BCE(y1, s(a)) / da = s(a) - y1
  r.dlogit1 = pred.y1.p - labels.y1;
  if (!logits.logit2) return r;

  const double l1 = logits.logit1;
  const double l2 = *logits.logit2;
  const int y2 = *labels.y2;
  switch (form) {
    case Formulation::Baseline:
      r.dlogit2 = pred.y2->p - y2;
      break;
    case Formulation::RiskForm1: {
      // A = log s(-l1) + log s(-l2); dA/dl = -s(l)
      const double dA = bce_grad_wrt_log_1mp(y2, *pred.y2);
      r.dlogit1 += dA * -sigmoid(l1);
      r.dlogit2 = dA * -sigmoid(l2);
      break;
    }
    case Formulation::RiskForm2: {
      // A = log s(-l1) + log s(g); dA/dg = s(-g)
      const double dA = bce_grad_wrt_log_1mp(y2, *pred.y2);
      r.dlogit1 += dA * -sigmoid(l1);
      r.dlogit2 = dA * sigmoid(-l2);
      break;
    }
  }
  return r;
}

double clamp_for_export(double p) { return std::clamp(p, 1e-12, 1.0 - 1e-12); }

}  // namespace progrisk::riskform
