#include "progrisk/regularizers.hpp"

#include <cmath>
#include <stdexcept>

#include "progrisk/errors.hpp"

namespace progrisk::regularizers {

std::string to_string(Kind k) {
  switch (k) {
    case Kind::ConReg: return "ConReg";
    case Kind::RiskReg: return "RiskReg";
    case Kind::Both: return "ConReg+RiskReg";
  }
  return "?";
}

void RegConfig::validate() const {
  if (!(riskreg_margin > 0.0) || !(conreg_margin > 0.0))
    throw ConfigError("regularizer margins must be > 0");
  if (!(gamma >= 0.0)) throw ConfigError("regularizer gamma must be >= 0");
}

ContrastiveResult contrastive_loss(std::span<const double> h1, std::span<const double> h2,
                                   int y_siam, double margin) {
  if (h1.size() != h2.size()) throw std::invalid_argument("contrastive_loss: dimension mismatch");
  if (!(margin > 0.0)) throw std::invalid_argument("contrastive_loss: margin must be > 0");

  ContrastiveResult r;
  r.dh1.assign(h1.size(), 0.0);
  r.dh2.assign(h2.size(), 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < h1.size(); ++i) {
    const double d = h2[i] - h1[i];
    sq += d * d;
  }

  if (y_siam == 1) {
    r.loss = sq;
    for (std::size_t i = 0; i < h1.size(); ++i) {
      r.dh2[i] = 2.0 * (h2[i] - h1[i]);
      r.dh1[i] = -r.dh2[i];
    }
    return r;
  }

  const double dist = std::sqrt(sq);
  const double hinge = margin - dist;
  if (hinge <= 0.0) return r;
  r.loss = hinge * hinge;
  // At dist == 0 the direction is undefined; keep the zero subgradient.
  if (dist == 0.0) return r;
  const double coef = -2.0 * hinge / dist;
  for (std::size_t i = 0; i < h1.size(); ++i) {
    r.dh2[i] = coef * (h2[i] - h1[i]);
    r.dh1[i] = -r.dh2[i];
  }
  return r;
}

RiskRegResult riskreg_loss(double f_logit1, double f_logit2, double margin) {
  if (!std::isfinite(f_logit1) || !std::isfinite(f_logit2))
    throw std::invalid_argument("riskreg_loss: non-finite logit");
  if (!(margin > 0.0)) throw std::invalid_argument("riskreg_loss: margin must be > 0");

  const double arg =
      riskform::log_sigmoid(f_logit1) - riskform::log_sigmoid(f_logit2) + margin;
  if (arg <= 0.0) return {};
  // d log s(z) / dz = s(-z)
  return RiskRegResult{arg, riskform::sigmoid(-f_logit1), -riskform::sigmoid(-f_logit2)};
}

RegularizedLossResult total_regularized_loss(const riskform::PairLabels& labels,
                                             const gradnet::ForwardTrace& scan1,
                                             const gradnet::ForwardTrace& scan2,
                                             const RegConfig& config) {
  if (!labels.y2) throw std::invalid_argument("total_regularized_loss: needs two scans");

  const auto base = riskform::pair_loss(riskform::Formulation::Baseline,
                                        {scan1.logit, scan2.logit}, labels);
  RegularizedLossResult r{base.loss, base.dlogit1, base.dlogit2, {}, {}};

  if (config.kind == Kind::RiskReg || config.kind == Kind::Both) {
    const auto reg = riskreg_loss(scan1.logit, scan2.logit, config.riskreg_margin);
    r.loss += config.gamma * reg.loss;
    r.dlogit1 += config.gamma * reg.dlogit1;
    r.dlogit2 += config.gamma * reg.dlogit2;
  }
  if (config.kind == Kind::ConReg || config.kind == Kind::Both) {
    const int y_siam = labels.y1 == *labels.y2 ? 1 : 0;
    auto cont = contrastive_loss(scan1.penultimate(), scan2.penultimate(), y_siam,
                                 config.conreg_margin);
    r.loss += config.gamma * cont.loss;
    for (double& v : cont.dh1) v *= config.gamma;
    for (double& v : cont.dh2) v *= config.gamma;
    r.dh1 = std::move(cont.dh1);
    r.dh2 = std::move(cont.dh2);
  }
  return r;
}

}  // namespace progrisk::regularizers
