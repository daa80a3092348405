#include "codareg/simplex.hpp"

#include <cmath>

namespace codareg {

namespace {

void check_same_dim(const SimplexPoint& x, const SimplexPoint& y) {
  if (x.dim() != y.dim()) {
    throw Error(Errc::dimension_mismatch,
                "compositions have " + std::to_string(x.dim()) + " and " +
                    std::to_string(y.dim()) + " parts");
  }
}

}  // namespace

SimplexPoint::SimplexPoint(const Eigen::VectorXd& raw) {
  if (raw.size() < 2) {
    throw Error(Errc::dimension_too_small,
                "a composition needs at least 2 parts, got " +
                    std::to_string(raw.size()));
  }
  for (Eigen::Index j = 0; j < raw.size(); ++j) {
    if (!(raw[j] > 0.0) || !std::isfinite(raw[j])) {
      throw Error(Errc::non_positive_part,
                  "part " + std::to_string(j + 1) + " is " +
                      std::to_string(raw[j]));
    }
  }
  parts_ = raw / raw.sum();
}

SimplexPoint closure(const Eigen::VectorXd& raw) { return SimplexPoint(raw); }

SimplexPoint simplex_neutral(Eigen::Index d) {
  return SimplexPoint(Eigen::VectorXd::Ones(d));
}

SimplexPoint perturb(const SimplexPoint& x, const SimplexPoint& y) {
  check_same_dim(x, y);
  return closure(x.parts().cwiseProduct(y.parts()));
}

SimplexPoint power(double alpha, const SimplexPoint& x) {
  return closure(x.parts().array().pow(alpha).matrix());
}

SimplexPoint perturb_diff(const SimplexPoint& x, const SimplexPoint& y) {
  check_same_dim(x, y);
  return perturb(x, power(-1.0, y));
}

double aitchison_inner(const SimplexPoint& x, const SimplexPoint& y) {
  check_same_dim(x, y);
  return clr(x).dot(clr(y));
}

double aitchison_norm(const SimplexPoint& x) {
  return std::sqrt(aitchison_inner(x, x));
}

double aitchison_dist(const SimplexPoint& x, const SimplexPoint& y) {
  return aitchison_norm(perturb_diff(x, y));
}

Eigen::VectorXd alr(const SimplexPoint& x) {
  const Eigen::Index d = x.dim();
  Eigen::VectorXd out(d - 1);
  for (Eigen::Index j = 0; j < d - 1; ++j) {
    out[j] = std::log(x[j] / x[d - 1]);
  }
  return out;
}

SimplexPoint inv_alr(const Eigen::VectorXd& v) {
  Eigen::VectorXd raw(v.size() + 1);
  raw.head(v.size()) = v.array().exp();
  raw[v.size()] = 1.0;
  return closure(raw);
}

Eigen::VectorXd clr(const SimplexPoint& x) {
  Eigen::VectorXd logs = x.parts().array().log();
  return logs.array() - logs.mean();
}

SimplexPoint inv_clr(const Eigen::VectorXd& v) {
  if (std::abs(v.sum()) > 1e-8) {
    throw Error(Errc::not_in_hyperplane,
                "clr coordinates sum to " + std::to_string(v.sum()));
  }
  return closure(v.array().exp().matrix());
}

Eigen::MatrixXd pivot_contrast_matrix(Eigen::Index d) {
  if (d < 2) {
    throw Error(Errc::dimension_too_small,
                "contrast matrix needs D >= 2, got " + std::to_string(d));
  }
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(d, d - 1);
  for (Eigen::Index j = 1; j < d; ++j) {
    const double head = std::sqrt(1.0 / static_cast<double>(j * (j + 1)));
    for (Eigen::Index i = 0; i < j; ++i) u(i, j - 1) = head;
    u(j, j - 1) = -std::sqrt(static_cast<double>(j) / static_cast<double>(j + 1));
  }
  return u;
}

IlrVector ilr(const SimplexPoint& x) {
  const Eigen::VectorXd logs = x.parts().array().log();
  return pivot_contrast_matrix(x.dim()).transpose() * logs;
}

SimplexPoint inv_ilr(const IlrVector& v) {
  const Eigen::Index d = v.size() + 1;
  const Eigen::VectorXd logs = pivot_contrast_matrix(d) * v;
  return closure(logs.array().exp().matrix());
}

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::non_positive_part: return "NonPositivePart";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::dimension_too_small: return "DimensionTooSmall";
    case Errc::not_in_hyperplane: return "NotInHyperplane";
    case Errc::degenerate_draw: return "DegenerateDraw";
    case Errc::singular_bandwidth: return "SingularBandwidth";
    case Errc::all_weights_zero: return "AllWeightsZero";
    case Errc::singular_design: return "SingularDesign";
    case Errc::zero_scale: return "ZeroScale";
    case Errc::no_bracket: return "NoBracket";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::fold_too_small: return "FoldTooSmall";
    case Errc::no_valid_bandwidth: return "NoValidBandwidth";
    case Errc::parse_error: return "ParseError";
    case Errc::ragged_row: return "RaggedRow";
  }
  return "UnknownError";
}

}  // namespace codareg
