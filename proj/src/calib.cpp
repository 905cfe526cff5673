#include "poscal/calib.hpp"

#include <algorithm>
#include <cmath>

namespace poscal {

double expected_oks(const Vec2& p_hat, const AnnotationModel& model, double l) {
    model.validate();
    if (!(l > 0.0)) throw std::domain_error("expected_oks: l must be > 0");
    const double v = model.sigma * model.sigma + l * l;
    return (l * l / v) * std::exp(-(p_hat - model.mu).norm_sq() / (2.0 * v));
}

double oracle_score(double sigma, double l) {
    if (!(sigma >= 0.0)) throw std::domain_error("oracle_score: sigma must be >= 0");
    if (!(l > 0.0)) throw std::domain_error("oracle_score: l must be > 0");
    return l * l / (sigma * sigma + l * l);
}

double heatmap_confidence(double sigma, double l_tilde) {
    if (!(sigma >= 0.0)) throw std::domain_error("heatmap_confidence: sigma must be >= 0");
    if (!(l_tilde > 0.0)) throw std::domain_error("heatmap_confidence: l_tilde must be > 0");
    return l_tilde * l_tilde / (sigma * sigma + l_tilde * l_tilde);
}

double rle_confidence(double sigma) { return 1.0 - sigma; }

double rle_confidence_clamped(double sigma) {
    return std::clamp(1.0 - sigma, 0.0, 1.0);
}

double sigma_from_maxval(double s_det, double l_tilde) {
    if (!(s_det > 0.0)) throw std::domain_error("sigma_from_maxval: score must be > 0");
    if (!(l_tilde > 0.0)) throw std::domain_error("sigma_from_maxval: l_tilde must be > 0");
    if (s_det >= 1.0) return 0.0;
    return l_tilde * std::sqrt(1.0 / s_det - 1.0);
}

double rescore(double sigma, double l, double delta_hat) {
    if (!(sigma >= 0.0)) throw std::domain_error("rescore: sigma must be >= 0");
    if (!(l > 0.0)) throw std::domain_error("rescore: l must be > 0");
    if (!(delta_hat >= 0.0)) throw std::domain_error("rescore: delta_hat must be >= 0");
    const double v = sigma * sigma + l * l;
    return (l * l / v) * std::exp(-delta_hat * delta_hat / (2.0 * v));
}

ImperfectRegression imperfect_regression(double sigma, double delta_hat) {
    if (!(sigma >= 0.0)) throw std::domain_error("imperfect_regression: sigma must be >= 0");
    if (!(delta_hat >= 0.0))
        throw std::domain_error("imperfect_regression: delta_hat must be >= 0");
    ImperfectRegression r;
    r.sigma_star = std::sqrt(sigma * sigma + delta_hat * delta_hat / 2.0);
    r.score = 1.0 - r.sigma_star;
    return r;
}

ImperfectDetection imperfect_detection(double sigma, double l_tilde, double delta_hat) {
    if (!(sigma >= 0.0)) throw std::domain_error("imperfect_detection: sigma must be >= 0");
    if (!(l_tilde > 0.0)) throw std::domain_error("imperfect_detection: l_tilde must be > 0");
    if (!(delta_hat >= 0.0))
        throw std::domain_error("imperfect_detection: delta_hat must be >= 0");
    const double st2 = sigma * sigma + l_tilde * l_tilde;  // sigma_tilde^2
    const double d2 = delta_hat * delta_hat;
    ImperfectDetection r;
    r.sigma_star_sq = std::sqrt(st2 * st2 + d2 * d2 / 4.0) + d2 / 2.0;
    const double sbar2 = st2 + r.sigma_star_sq;
    r.o_star = 2.0 * l_tilde * l_tilde / sbar2;
    r.scale = r.o_star * std::exp(-d2 / (2.0 * sbar2));
    return r;
}

LaplaceMisspec laplace_misspec(double sigma) {
    if (!(sigma >= 0.0)) throw std::domain_error("laplace_misspec: sigma must be >= 0");
    LaplaceMisspec r;
    r.b_star = std::sqrt(2.0 / 3.14159265358979323846) * sigma;
    r.score = 1.0 - r.b_star;
    return r;
}

RankingCounterexample misordered_ranking_example(double l_tilde) {
    if (!(l_tilde > 0.0))
        throw std::domain_error("misordered_ranking_example: l_tilde must be > 0");
    // Instance 1 is slightly sharper but lives at a small falloff scale;
    // instance 2 is slightly noisier on a scale four times larger. The
    // maxval heuristic only sees sigma and prefers instance 1, while the
    // expected OKS strongly prefers instance 2.
    RankingCounterexample c;
    c.sigma1 = l_tilde / 2.0;
    c.sigma2 = c.sigma1 * 1.05;
    c.l1 = l_tilde / 2.0;
    c.l2 = l_tilde * 2.0;
    c.heatmap_conf1 = heatmap_confidence(c.sigma1, l_tilde);
    c.heatmap_conf2 = heatmap_confidence(c.sigma2, l_tilde);
    c.oracle1 = oracle_score(c.sigma1, c.l1);
    c.oracle2 = oracle_score(c.sigma2, c.l2);
    return c;
}

}  // namespace poscal
