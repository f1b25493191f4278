#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "ergoloop/errors.hpp"

namespace ergoloop {

using BigInt = boost::multiprecision::cpp_int;

/// Exact rational scalar. Kept in lowest terms with a positive denominator,
/// with arbitrary-precision components so gcd chains cannot overflow.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {} // NOLINT: implicit by design
    Rational(BigInt numerator, BigInt denominator);

    /// Exact conversion of a finite double (every finite double is dyadic).
    static Rational from_double(double x);

    /// Parses "n", "n/d", or a plain decimal such as "0.25" / "-1.5".
    static Rational parse(std::string_view text);

    [[nodiscard]] const BigInt& num() const { return num_; }
    [[nodiscard]] const BigInt& den() const { return den_; }
    [[nodiscard]] bool is_zero() const { return num_ == 0; }
    [[nodiscard]] bool is_integer() const { return den_ == 1; }
    [[nodiscard]] double to_double() const;
    [[nodiscard]] std::string str() const;

    [[nodiscard]] Rational abs() const;

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b); // throws on b == 0
    Rational operator-() const;

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

private:
    void normalize();

    BigInt num_;
    BigInt den_; // > 0
};

/// Generator g >= 0 of the additive group spanned by `values`: the group is
/// exactly g*Z, with g = 0 iff every value is zero. Input must be non-empty.
Rational group_generator(const std::vector<Rational>& values);

} // namespace ergoloop
