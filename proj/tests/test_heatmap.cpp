#include <doctest.h>

#include <cmath>

#include "poscal/heatmap.hpp"

using namespace poscal;

TEST_CASE("render_heatmap values") {
    const GridDims grid;
    const Vec2 center{32.0, 24.0};
    const Heatmap hm = render_heatmap(center, 2.0, grid);
    CHECK(hm.at(32, 24) == doctest::Approx(1.0).epsilon(1e-15));
    // distance l_tilde * sqrt(2) = 2*sqrt(2): pixel (34, 26)
    CHECK(hm.at(34, 26) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK_FALSE(hm.truncation_warning);

    // well-contained mass: sum approx 2*pi*l^2 / pitch^2
    CHECK(hm.sum() == doctest::Approx(2.0 * 3.14159265358979323846 * 4.0).epsilon(1e-6));
}

TEST_CASE("render_heatmap truncation flags") {
    const GridDims grid;
    CHECK(render_heatmap({1.0, 24.0}, 2.0, grid).truncation_warning);     // near border
    CHECK(render_heatmap({-10.0, 24.0}, 2.0, grid).truncation_warning);   // outside
    CHECK_FALSE(render_heatmap({32.0, 24.0}, 2.0, grid).truncation_warning);
    CHECK_THROWS_AS(render_heatmap({0, 0}, 0.0, grid), std::domain_error);
}

TEST_CASE("fit_gaussian recovers rendered parameters") {
    const GridDims grid;
    const Vec2 center{30.5, 22.25};  // off-lattice on purpose
    Heatmap hm = render_heatmap(center, 2.0, grid);
    GaussianFit fit = fit_gaussian(hm);
    CHECK(fit.mean.x == doctest::Approx(center.x).epsilon(1e-9));
    CHECK(fit.mean.y == doctest::Approx(center.y).epsilon(1e-9));
    CHECK(fit.sigma_fit == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(fit.scale == doctest::Approx(1.0).epsilon(1e-9));

    // scaling the map scales only the amplitude
    for (double& v : hm.values) v *= 0.3;
    fit = fit_gaussian(hm);
    CHECK(fit.scale == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(fit.sigma_fit == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("fit_gaussian falls back to moments for tiny support") {
    const GridDims grid;
    // l_tilde = 0.3: fewer than 9 pixels clear 1% of the peak
    const Heatmap hm = render_heatmap({32.0, 24.0}, 0.3, grid);
    const GaussianFit fit = fit_gaussian(hm);
    CHECK(fit.mean.x == doctest::Approx(32.0).epsilon(1e-6));
    CHECK(fit.mean.y == doctest::Approx(24.0).epsilon(1e-6));
    CHECK(fit.sigma_fit > 0.0);
}

TEST_CASE("fit_gaussian rejects empty maps") {
    Heatmap hm;
    hm.width = 4;
    hm.height = 4;
    hm.values.assign(16, 0.0);
    CHECK_THROWS_AS(fit_gaussian(hm), std::domain_error);
}

TEST_CASE("sigma_from_heatmap_fit inverts the rendered width") {
    const GridDims grid;
    // a heatmap rendered at std sqrt(sigma^2 + l_tilde^2) is what an
    // MSE-trained model would emit for annotation noise sigma
    const double sigma = 1.5, l_tilde = 2.0;
    const Heatmap hm = render_heatmap({32, 24}, std::sqrt(sigma * sigma + l_tilde * l_tilde), grid);
    CHECK(sigma_from_heatmap_fit(hm, l_tilde) == doctest::Approx(sigma).epsilon(1e-6));
    // sharper than l_tilde maps to zero
    const Heatmap sharp = render_heatmap({32, 24}, 1.0, grid);
    CHECK(sigma_from_heatmap_fit(sharp, 2.0) == 0.0);
}
