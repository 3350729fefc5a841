#pragma once

#include <span>
#include <vector>

#include "deft/errors.hpp"

namespace deft {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

/// Monotone staircase from (0,0) to (1,1), one point per unique score
/// threshold (ties grouped).
struct RocCurve {
    std::vector<RocPoint> points;
};

/// Sweeps thresholds over descending unique scores; genuine (label 1) is
/// the positive class and a sample is accepted when score >= threshold.
/// Throws DegenerateLabelsError unless both classes are present.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

/// Trapezoidal area under the curve; equals the Mann-Whitney pair statistic
/// with ties counted one half.
double auc(const RocCurve& curve);

/// Equal error rate: the value where FAR (= FPR) crosses FRR (= 1 - TPR),
/// linearly interpolated between adjacent curve points when the crossing
/// falls inside a segment.
double eer(const RocCurve& curve);

/// TPR of the curve's upper envelope at the given FPR (linear interpolation
/// between points, top of any vertical segment). Used for vertical ROC
/// averaging on a fixed FPR grid.
double tpr_at_fpr(const RocCurve& curve, double fpr);

struct PointMetrics {
    double accuracy = 0.0;
    double f1 = 0.0;
};

/// Accuracy and F1 at a fixed threshold (accept when score >= threshold);
/// genuine is the positive class, F1 = 0 when precision + recall = 0.
PointMetrics point_metrics(std::span<const double> scores,
                           std::span<const int> labels, double threshold = 0.5);

}  // namespace deft
