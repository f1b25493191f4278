#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ergoloop/errors.hpp"
#include "ergoloop/numerics/rational.hpp"
#include "ergoloop/numerics/spectral.hpp"
#include "support.hpp"

using namespace ergoloop;

namespace {

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

Matrix rotation(double theta) {
    return mat2(std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta));
}

} // namespace

TEST_CASE("rational normalization and arithmetic are exact") {
    const Rational half(1, 2);
    CHECK(half.num() == 1);
    CHECK(half.den() == 2);
    CHECK(Rational(2, 4) == half);
    CHECK(Rational(-3, -6) == half);
    CHECK(Rational(3, -6) == Rational(-1, 2));
    CHECK((half + Rational(1, 3)) == Rational(5, 6));
    CHECK((half * Rational(2, 3)) == Rational(1, 3));
    CHECK((half - half).is_zero());
    CHECK((Rational(7, 3) / Rational(7, 3)) == Rational(1));
    CHECK(Rational(-5, 4).abs() == Rational(5, 4));
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK_THROWS_AS(Rational(1, 0), ModelValidationError);
    CHECK_THROWS_AS(Rational(1) / Rational(0), ModelValidationError);
}

TEST_CASE("rational parsing and exact double conversion") {
    CHECK(Rational::parse("1/2") == Rational(1, 2));
    CHECK(Rational::parse("-3/9") == Rational(-1, 3));
    CHECK(Rational::parse("7") == Rational(7));
    CHECK(Rational::parse("0.25") == Rational(1, 4));
    CHECK(Rational::parse("-1.5") == Rational(-3, 2));
    CHECK(Rational::parse("0.99") == Rational(99, 100));
    CHECK_THROWS_AS(Rational::parse("a/b"), RepresentationError);
    CHECK_THROWS_AS(Rational::parse(""), RepresentationError);

    CHECK(Rational::from_double(0.5) == Rational(1, 2));
    CHECK(Rational::from_double(-0.75) == Rational(-3, 4));
    CHECK(Rational::from_double(3.0) == Rational(3));
    // 0.1 is not 1/10 in binary; the conversion must hit the stored double.
    const Rational tenth = Rational::from_double(0.1);
    CHECK(tenth.to_double() == 0.1);
    CHECK(tenth != Rational(1, 10));
    CHECK_THROWS_AS(Rational::from_double(std::nan("")), RepresentationError);
}

TEST_CASE("rational arithmetic survives long chains without overflow") {
    // sum of (1/3)^k has denominators up to 3^40
    Rational sum(0);
    Rational term(1);
    const Rational third(1, 3);
    for (int k = 0; k < 40; ++k) {
        term = term * third;
        sum += term;
    }
    // geometric series: (1 - 3^-40)/2
    const Rational pow40 = [&] {
        Rational p(1);
        for (int k = 0; k < 40; ++k) p = p * third;
        return p;
    }();
    CHECK(sum == (Rational(1) - pow40) / Rational(2));
}

TEST_CASE("spectral radius on pinned examples") {
    CHECK(spectral_radius(mat2(0, 1, 0, 0)) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(spectral_radius(0.5 * Matrix::Identity(2, 2)) == doctest::Approx(0.5).epsilon(1e-10));
    // characteristic polynomial of [[0,1],[-1/4,0]] is s^2 + 1/4, roots +-i/2
    const double oracle = std::sqrt(0.25);
    CHECK(spectral_radius(mat2(0, 1, -0.25, 0)) == doctest::Approx(oracle).epsilon(1e-10));
    CHECK_THROWS_AS(spectral_radius(Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("schur test uses the tolerance margin") {
    CHECK(is_schur(0.99 * Matrix::Identity(2, 2), 1e-6));
    CHECK_FALSE(is_schur(Matrix::Identity(1, 1), 1e-6)); // the integrator pole at z = 1
    CHECK(is_schur(mat2(0, 1, 0, 0), 1e-6));
    CHECK_FALSE(is_schur(0.9999999 * Matrix::Identity(1, 1), 1e-3));
}

TEST_CASE("operator norm equals the largest singular value") {
    CHECK(operator_norm(Matrix::Identity(3, 3)) == doctest::Approx(1.0));
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 0.5;
    CHECK(operator_norm(d) == doctest::Approx(2.0));
    // m^T m of [[0,2],[0,0]] is diag(0,4): singular values {2, 0}
    CHECK(operator_norm(mat2(0, 2, 0, 0)) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("spectral radius never exceeds the operator norm") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix m = ergoloop::testing::random_matrix(rng, 4, 4);
        CHECK(spectral_radius(m) <= operator_norm(m) + 1e-9);
    }
}

TEST_CASE("contraction index finds the first contracting power") {
    CHECK(contraction_index(0.5 * Matrix::Identity(2, 2), 10) == 1);
    CHECK(contraction_index(mat2(0, 10, 0, 0), 10) == 2);
    CHECK_FALSE(contraction_index(Matrix::Identity(1, 1), 64).has_value());

    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m = ergoloop::testing::random_matrix(rng, 3, 3);
        m *= 0.95 / spectral_radius(m);
        const auto k = contraction_index(m, 400);
        REQUIRE(k.has_value());
        Matrix power = Matrix::Identity(3, 3);
        for (int j = 1; j <= *k; ++j) {
            power = power * m;
            if (j < *k) {
                CHECK(operator_norm(power) >= 1.0);
            }
        }
        CHECK(operator_norm(power) < 1.0);
    }
}

TEST_CASE("product contraction index enumerates all index sequences") {
    const Matrix half = 0.5 * Matrix::Identity(2, 2);
    const Matrix quarter = 0.25 * Matrix::Identity(2, 2);
    CHECK(product_contraction_index({half, quarter}, 5) == 1);

    // the shift pair keeps norm 1 along alternating products at every length
    const Matrix up = mat2(0, 1, 0, 0);
    const Matrix down = mat2(0, 0, 1, 0);
    CHECK_FALSE(product_contraction_index({up, down}, 8).has_value());

    CHECK(product_contraction_index({0.9 * rotation(0.3)}, 5) == 1);
    CHECK_THROWS_AS(product_contraction_index({up, down}, 12, 100), BudgetError);
    CHECK_THROWS_AS(product_contraction_index({up, Matrix::Zero(3, 3)}, 3), DimensionError);
}

TEST_CASE("lyapunov inequalities verified by eigenvalue sign") {
    const Matrix eye = Matrix::Identity(2, 2);
    CHECK(verify_lmi({0.5 * eye}, {eye}));
    CHECK_FALSE(verify_lmi({eye}, {eye})); // A'PA - P = 0, not negative definite
    Matrix a1 = Matrix::Zero(2, 2);
    a1(0, 0) = 0.9;
    a1(1, 1) = 0.1;
    Matrix a2 = Matrix::Zero(2, 2);
    a2(0, 0) = 0.1;
    a2(1, 1) = 0.9;
    // A_i' A_i - I = diag(0.81, 0.01) - I, strictly negative for both
    CHECK(verify_lmi({a1, a2}, {eye, eye}));
    CHECK_FALSE(verify_lmi({0.5 * eye}, {-eye}));
    CHECK_THROWS_AS(verify_lmi({0.5 * eye}, {Matrix::Identity(3, 3)}), DimensionError);
}

TEST_CASE("group generator is the lattice spacing of the value set") {
    CHECK(group_generator({Rational(1, 2), Rational(3, 2)}) == Rational(1, 2));
    CHECK(group_generator({Rational(0)}) == Rational(0));
    // error lattice of the four-agent half-half filter system at r = 2
    const std::vector<Rational> diffs = {Rational(2),      Rational(-2), Rational(3, 2),
                                         Rational(1),      Rational(1, 2), Rational(0),
                                         Rational(-1, 2),  Rational(-1), Rational(-3, 2)};
    CHECK(group_generator(diffs) == Rational(1, 2));
    CHECK_THROWS_AS(group_generator({}), DimensionError);
}

TEST_CASE("group generator divides every element and is tight") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<long long> num(-30, 30);
    std::uniform_int_distribution<long long> den(1, 12);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<Rational> values;
        bool any_nonzero = false;
        for (int i = 0; i < 6; ++i) {
            values.emplace_back(Rational(num(rng), den(rng)));
            any_nonzero = any_nonzero || !values.back().is_zero();
        }
        const Rational g = group_generator(values);
        if (!any_nonzero) {
            CHECK(g.is_zero());
            continue;
        }
        BigInt multiplier_gcd = 0;
        for (const auto& v : values) {
            const Rational q = v / g;
            REQUIRE(q.is_integer()); // g divides every element exactly
            BigInt m = q.num();
            if (m < 0) m = -m;
            multiplier_gcd = boost::multiprecision::gcd(multiplier_gcd, m);
        }
        CHECK(multiplier_gcd == 1); // no coarser lattice works
    }
}

TEST_CASE("verified switched systems always contract in finitely many steps") {
    std::mt19937_64 rng(314);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = ergoloop::testing::make_verified_switched_instance(rng);
        REQUIRE(verify_lmi(inst.a, inst.p));
        CHECK(product_contraction_index(inst.a, 64).has_value());
    }
}

TEST_CASE("root of unity order by direct powering") {
    CHECK(root_of_unity_order({1.0, 0.0}, 8, 1e-9) == 1);
    CHECK(root_of_unity_order({-1.0, 0.0}, 8, 1e-9) == 2);
    const ComplexScalar sixth = std::polar(1.0, M_PI / 3.0);
    CHECK(root_of_unity_order(sixth, 16, 1e-9) == 6);
    CHECK_FALSE(root_of_unity_order({0.99, 0.0}, 16, 1e-9).has_value());
    // irrational angle: never lands on 1
    CHECK_FALSE(root_of_unity_order(std::polar(1.0, 1.0), 200, 1e-9).has_value());
}
