#pragma once

#include <string_view>

// Scalar losses of the joint ranking/classification objective and their
// derivatives. Everything here is pure.

namespace dynak {

enum class ClassificationLoss { kLogistic, kHinge };

std::string_view to_string(ClassificationLoss loss);
ClassificationLoss parse_classification_loss(std::string_view text);

/// 1 / (1 + e^-x), evaluated without overflow for any finite x.
double sigmoid(double x);

/// ln(1 + e^x) = max(x, 0) + ln(1 + e^-|x|).
double softplus(double x);

/// y * (s - t_u). `label` must be -1 or +1 (ContractError otherwise).
double margin(int label, double score, double boundary);

/// ln(1 + e^-m).
double logistic_loss(double m);
/// d/dm ln(1 + e^-m) = -sigmoid(-m).
double logistic_loss_grad(double m);

/// max(0, 1 - m).
double hinge_loss(double m);
/// Subgradient of the hinge; -1 below the knee, 0 at and above it.
double hinge_loss_grad(double m);

double classification_loss(ClassificationLoss kind, double m);
double classification_loss_grad(ClassificationLoss kind, double m);

/// lambda_t * (t_u - t)^2.
double boundary_penalty(double boundary, double anchor, double lambda_t);
/// 2 * lambda_t * (t_u - t).
double boundary_penalty_grad(double boundary, double anchor, double lambda_t);

/// -ln sigmoid(s_pos - s_neg).
double bpr_pair_loss(double s_pos, double s_neg);
/// Derivative of bpr_pair_loss w.r.t. the difference s_pos - s_neg.
double bpr_pair_loss_grad(double s_pos, double s_neg);

struct MixtureWeights {
  double classification;
  double ranking;
};

/// (alpha, 1 - alpha). alpha outside [0, 1] is a ContractError.
MixtureWeights hybrid_weighting(double alpha);

}  // namespace dynak
