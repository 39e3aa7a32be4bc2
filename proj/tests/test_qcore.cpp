#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qotto/qcore.hpp"

using namespace qotto;

namespace {

std::mt19937 rng(20240811);

Mat random_complex(int d) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = Cplx(n(rng), n(rng));
    return m;
}

Mat random_hermitian(int d) {
    Mat a = random_complex(d);
    return (a + a.adjoint()).eval() / 2.0;
}

DensityMatrix random_state(int d) {
    Mat a = random_complex(d);
    Mat rho = a * a.adjoint();
    rho /= rho.trace();
    return DensityMatrix{rho, {}};
}

Mat random_unitary(int d) {
    Eigen::HouseholderQR<Mat> qr(random_complex(d));
    Mat q = qr.householderQ();
    return q;
}

// independent 2x2 closed form: eigenvalues of [[a, c], [conj(c), b]]
std::pair<double, double> eig2_closed_form(const Mat& m) {
    const double a = m(0, 0).real(), b = m(1, 1).real();
    const double disc =
        std::sqrt((a - b) * (a - b) / 4.0 + std::norm(m(0, 1)));
    const double mean = (a + b) / 2.0;
    return {mean - disc, mean + disc};
}

}  // namespace

TEST_CASE("hermitian_spectrum on diagonal and identity inputs") {
    Mat d2 = Mat::Zero(2, 2);
    d2(0, 0) = 1.0;
    auto s = hermitian_spectrum(d2);
    CHECK(s.eigenvalues(0) == Catch::Approx(0.0).margin(1e-14));
    CHECK(s.eigenvalues(1) == Catch::Approx(1.0).margin(1e-14));

    auto s3 = hermitian_spectrum(Mat::Identity(3, 3));
    for (int k = 0; k < 3; ++k)
        CHECK(s3.eigenvalues(k) == Catch::Approx(1.0).margin(1e-14));
    CHECK(max_abs(s3.eigenvectors * s3.eigenvectors.adjoint() -
                  Mat::Identity(3, 3)) < 1e-12);
}

TEST_CASE("hermitian_spectrum matches the 2x2 closed form") {
    Mat sx = Mat::Zero(2, 2);
    sx(0, 1) = 1.0;
    sx(1, 0) = 1.0;
    auto s = hermitian_spectrum(sx);
    CHECK(s.eigenvalues(0) == Catch::Approx(-1.0).margin(1e-14));
    CHECK(s.eigenvalues(1) == Catch::Approx(1.0).margin(1e-14));

    for (int rep = 0; rep < 20; ++rep) {
        Mat h = random_hermitian(2);
        auto sp = hermitian_spectrum(h);
        auto [lo, hi] = eig2_closed_form(h);
        CHECK(sp.eigenvalues(0) == Catch::Approx(lo).margin(1e-12));
        CHECK(sp.eigenvalues(1) == Catch::Approx(hi).margin(1e-12));
    }
}

TEST_CASE("hermitian_spectrum reconstructs the input") {
    for (int d = 2; d <= 4; ++d) {
        Mat h = random_hermitian(d);
        auto s = hermitian_spectrum(h);
        Mat rec = s.eigenvectors *
                  s.eigenvalues.cast<Cplx>().asDiagonal() *
                  s.eigenvectors.adjoint();
        CHECK(max_abs(rec - h) < 1e-10);
        for (int k = 1; k < d; ++k)
            CHECK(s.eigenvalues(k) >= s.eigenvalues(k - 1));
    }
}

TEST_CASE("hermitian_spectrum rejects non-Hermitian input with diagnostic") {
    Mat bad = Mat::Zero(2, 2);
    bad(0, 1) = 1.0;  // no conjugate partner
    CHECK_THROWS_WITH(hermitian_spectrum(bad),
                      Catch::Matchers::ContainsSubstring("not Hermitian"));
}

TEST_CASE("entropy of pure, mixed and two-level states") {
    CHECK(von_neumann_entropy(DensityMatrix::pure(3, 0)) ==
          Catch::Approx(0.0).margin(1e-14));
    CHECK(von_neumann_entropy(DensityMatrix::maximally_mixed(3)) ==
          Catch::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(von_neumann_entropy(
              DensityMatrix::diagonal(RVec{{0.5, 0.5, 0.0}})) ==
          Catch::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("entropy rejects states with clearly negative eigenvalues") {
    DensityMatrix rho = DensityMatrix::diagonal(RVec{{1.1, -0.1}});
    CHECK_THROWS_WITH(von_neumann_entropy(rho),
                      Catch::Matchers::ContainsSubstring("positivity"));
}

TEST_CASE("entropy is bounded and unitarily invariant") {
    for (int d = 2; d <= 4; ++d) {
        DensityMatrix rho = random_state(d);
        const double s = von_neumann_entropy(rho);
        CHECK(s >= 0.0);
        CHECK(s <= std::log(double(d)) + 1e-12);
        for (int rep = 0; rep < 5; ++rep) {
            Mat u = random_unitary(d);
            DensityMatrix rot{u * rho.m * u.adjoint(), {}};
            CHECK(von_neumann_entropy(rot) == Catch::Approx(s).margin(1e-9));
        }
    }
}

TEST_CASE("expectation values on simple states") {
    Mat h0 = Mat::Zero(3, 3);
    h0(1, 1) = 1.0;
    h0(2, 2) = 1.02;
    CHECK(expectation(DensityMatrix::pure(3, 0), h0).real() ==
          Catch::Approx(0.0).margin(1e-14));

    Mat n1 = Mat::Zero(2, 2);
    n1(1, 1) = 1.0;
    CHECK(expectation(DensityMatrix::maximally_mixed(2), n1).real() ==
          Catch::Approx(0.5).epsilon(1e-14));

    DensityMatrix rho = DensityMatrix::diagonal(RVec{{0.3, 0.7}});
    CHECK(expectation(rho, n1).real() == Catch::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("expectation is linear in both arguments") {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const int d = 3;
        DensityMatrix r1 = random_state(d), r2 = random_state(d);
        Mat a = random_complex(d), b = random_complex(d);
        const double alpha = u(rng);
        DensityMatrix mix{alpha * r1.m + (1 - alpha) * r2.m, {}};
        const Cplx lhs = expectation(mix, a + 2.0 * b);
        const Cplx rhs = alpha * (expectation(r1, a) + 2.0 * expectation(r1, b)) +
                         (1 - alpha) *
                             (expectation(r2, a) + 2.0 * expectation(r2, b));
        CHECK(std::abs(lhs - rhs) < 1e-12);
    }
}

TEST_CASE("expectation has negligible imaginary part for Hermitian operators") {
    for (int rep = 0; rep < 10; ++rep) {
        DensityMatrix rho = random_state(4);
        Mat h = random_hermitian(4);
        CHECK(std::abs(expectation(rho, h).imag()) < 1e-10);
    }
}

TEST_CASE("expectation rejects dimension mismatch") {
    CHECK_THROWS_AS(expectation(random_state(2), Mat::Identity(3, 3)),
                    std::invalid_argument);
}

TEST_CASE("DensityMatrix invariants are enforced") {
    CHECK_NOTHROW(random_state(3).validate());

    DensityMatrix bad_trace = DensityMatrix::diagonal(RVec{{0.7, 0.7}});
    CHECK_THROWS_WITH(bad_trace.validate(),
                      Catch::Matchers::ContainsSubstring("trace"));

    DensityMatrix neg = DensityMatrix::diagonal(RVec{{1.2, -0.2}});
    CHECK_THROWS_WITH(neg.validate(),
                      Catch::Matchers::ContainsSubstring("eigenvalue"));

    DensityMatrix skew = DensityMatrix::maximally_mixed(2);
    skew.m(0, 1) = Cplx(0.0, 1e-6);
    CHECK_THROWS_WITH(skew.validate(),
                      Catch::Matchers::ContainsSubstring("Hermiticity"));
}
