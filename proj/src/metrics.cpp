#include "deft/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace deft {

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw ConfigError("scores and labels differ in length");
    std::size_t positives = 0, negatives = 0;
    for (int y : labels) (y != 0 ? positives : negatives)++;
    if (positives == 0 || negatives == 0)
        throw DegenerateLabelsError("ROC needs both classes present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        double s = scores[order[i]];
        // One point per unique score: consume the whole tie group.
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]] != 0) ++tp;
            else ++fp;
            ++i;
        }
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                                static_cast<double>(tp) / static_cast<double>(positives)});
    }
    if (curve.points.back().fpr != 1.0 || curve.points.back().tpr != 1.0)
        curve.points.push_back({1.0, 1.0});
    return curve;
}

double auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    return area;
}

double eer(const RocCurve& curve) {
    // g = FAR - FRR = fpr + tpr - 1 is monotone non-decreasing along the
    // curve, from -1 at (0,0) to +1 at (1,1).
    auto g = [](const RocPoint& p) { return p.fpr + p.tpr - 1.0; };
    const auto& pts = curve.points;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        double g0 = g(pts[i - 1]);
        double g1 = g(pts[i]);
        if (g1 < 0.0) continue;
        if (g0 > 0.0) break;  // crossing was before the recorded range
        double t = (g1 == g0) ? 0.0 : (0.0 - g0) / (g1 - g0);
        double far = pts[i - 1].fpr + t * (pts[i].fpr - pts[i - 1].fpr);
        return far;
    }
    return g(pts.front()) >= 0.0 ? pts.front().fpr : pts.back().fpr;
}

double tpr_at_fpr(const RocCurve& curve, double fpr) {
    // Collapse vertical runs, keeping the top tpr of each fpr; the result
    // is the curve's upper envelope as a function of fpr.
    std::vector<RocPoint> env;
    for (const auto& p : curve.points) {
        if (!env.empty() && env.back().fpr == p.fpr)
            env.back().tpr = std::max(env.back().tpr, p.tpr);
        else
            env.push_back(p);
    }
    if (env.empty()) return 0.0;
    if (fpr <= env.front().fpr) return env.front().tpr;
    for (std::size_t i = 1; i < env.size(); ++i) {
        if (fpr > env[i].fpr) continue;
        const auto& a = env[i - 1];
        const auto& b = env[i];
        double t = (fpr - a.fpr) / (b.fpr - a.fpr);
        return a.tpr + t * (b.tpr - a.tpr);
    }
    return env.back().tpr;
}

PointMetrics point_metrics(std::span<const double> scores,
                           std::span<const int> labels, double threshold) {
    if (scores.size() != labels.size())
        throw ConfigError("scores and labels differ in length");
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        bool predicted = scores[i] >= threshold;
        bool actual = labels[i] != 0;
        if (predicted && actual) ++tp;
        else if (predicted && !actual) ++fp;
        else if (!predicted && !actual) ++tn;
        else ++fn;
    }
    PointMetrics m;
    std::size_t total = scores.size();
    m.accuracy = total == 0 ? 0.0
                            : static_cast<double>(tp + tn) / static_cast<double>(total);
    double denom = static_cast<double>(2 * tp + fp + fn);
    m.f1 = denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
    return m;
}

}  // namespace deft
