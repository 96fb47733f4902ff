#include "dynak/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dynak/errors.hpp"

namespace dynak {

std::string_view to_string(ClassificationLoss loss) {
  return loss == ClassificationLoss::kLogistic ? "logistic" : "hinge";
}

ClassificationLoss parse_classification_loss(std::string_view text) {
  if (text == "logistic") return ClassificationLoss::kLogistic;
  if (text == "hinge") return ClassificationLoss::kHinge;
  throw ConfigError("unknown classification loss '" + std::string(text) + "'");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double margin(int label, double score, double boundary) {
  if (label != 1 && label != -1) {
    throw ContractError("label must be -1 or +1, got " + std::to_string(label));
  }
  return label * (score - boundary);
}

double logistic_loss(double m) { return softplus(-m); }

double logistic_loss_grad(double m) { return -sigmoid(-m); }

double hinge_loss(double m) { return std::max(0.0, 1.0 - m); }

double hinge_loss_grad(double m) { return m < 1.0 ? -1.0 : 0.0; }

double classification_loss(ClassificationLoss kind, double m) {
  return kind == ClassificationLoss::kLogistic ? logistic_loss(m) : hinge_loss(m);
}

double classification_loss_grad(ClassificationLoss kind, double m) {
  return kind == ClassificationLoss::kLogistic ? logistic_loss_grad(m) : hinge_loss_grad(m);
}

double boundary_penalty(double boundary, double anchor, double lambda_t) {
  const double d = boundary - anchor;
  return lambda_t * d * d;
}

double boundary_penalty_grad(double boundary, double anchor, double lambda_t) {
  return 2.0 * lambda_t * (boundary - anchor);
}

double bpr_pair_loss(double s_pos, double s_neg) { return softplus(-(s_pos - s_neg)); }

double bpr_pair_loss_grad(double s_pos, double s_neg) { return -sigmoid(-(s_pos - s_neg)); }

MixtureWeights hybrid_weighting(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ContractError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  return {alpha, 1.0 - alpha};
}

}  // namespace dynak
