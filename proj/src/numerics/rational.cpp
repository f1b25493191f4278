#include "ergoloop/numerics/rational.hpp"

#include <cctype>
#include <cmath>
#include <utility>

namespace ergoloop {

namespace mp = boost::multiprecision;

Rational::Rational(BigInt numerator, BigInt denominator)
    : num_(std::move(numerator)), den_(std::move(denominator)) {
    if (den_ == 0) {
        throw ModelValidationError("Rational: zero denominator");
    }
    normalize();
}

void Rational::normalize() {
    if (den_ < 0) {
        num_ = -num_;
        den_ = -den_;
    }
    if (num_ == 0) {
        den_ = 1;
        return;
    }
    const BigInt g = mp::gcd(num_ < 0 ? BigInt(-num_) : num_, den_);
    if (g > 1) {
        num_ /= g;
        den_ /= g;
    }
}

Rational Rational::from_double(double x) {
    if (!std::isfinite(x)) {
        throw RepresentationError("Rational::from_double: non-finite value");
    }
    if (x == 0.0) {
        return Rational();
    }
    int exp = 0;
    const double mant = std::frexp(x, &exp); // x = mant * 2^exp, |mant| in [0.5, 1)
    const auto scaled = static_cast<long long>(std::ldexp(mant, 53)); // exact
    BigInt num(scaled);
    exp -= 53;
    if (exp >= 0) {
        return Rational(num << exp, 1);
    }
    return Rational(std::move(num), BigInt(1) << -exp);
}

Rational Rational::parse(std::string_view text) {
    auto fail = [&] { throw RepresentationError("Rational::parse: cannot parse '" + std::string(text) + "'"); };
    if (text.empty()) fail();

    const auto slash = text.find('/');
    if (slash != std::string_view::npos) {
        const std::string_view num_s = text.substr(0, slash);
        const std::string_view den_s = text.substr(slash + 1);
        if (num_s.empty() || den_s.empty()) fail();
        try {
            return Rational(BigInt(std::string(num_s)), BigInt(std::string(den_s)));
        } catch (const std::exception&) {
            fail();
        }
    }

    const auto dot = text.find('.');
    if (dot != std::string_view::npos) {
        std::string whole(text.substr(0, dot));
        const std::string_view frac = text.substr(dot + 1);
        bool negative = !whole.empty() && whole.front() == '-';
        if (whole == "-" || whole == "+" || whole.empty()) whole += "0";
        for (char c : frac) {
            if (std::isdigit(static_cast<unsigned char>(c)) == 0) fail();
        }
        try {
            BigInt num(whole);
            BigInt den = 1;
            for (char c : frac) {
                num = num * 10 + (negative ? -(c - '0') : (c - '0'));
                den *= 10;
            }
            return Rational(std::move(num), std::move(den));
        } catch (const std::exception&) {
            fail();
        }
    }

    try {
        return Rational(BigInt(std::string(text)), 1);
    } catch (const std::exception&) {
        fail();
    }
    return Rational(); // unreachable
}

double Rational::to_double() const {
    return num_.convert_to<double>() / den_.convert_to<double>();
}

std::string Rational::str() const {
    if (den_ == 1) {
        return num_.str();
    }
    return num_.str() + "/" + den_.str();
}

Rational Rational::abs() const {
    return num_ < 0 ? -*this : *this;
}

Rational operator+(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.num_, a.den_ * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) {
        throw ModelValidationError("Rational: division by zero");
    }
    return Rational(a.num_ * b.den_, a.den_ * b.num_);
}

Rational Rational::operator-() const {
    Rational r;
    r.num_ = -num_;
    r.den_ = den_;
    return r;
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const BigInt lhs = a.num_ * b.den_;
    const BigInt rhs = b.num_ * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

Rational group_generator(const std::vector<Rational>& values) {
    if (values.empty()) {
        throw DimensionError("group_generator: empty value set");
    }
    // Scale everything onto the common denominator L = lcm of denominators;
    // the group is then (gcd of scaled numerators)/L * Z.
    BigInt lcm_den = 1;
    for (const auto& v : values) {
        lcm_den = mp::lcm(lcm_den, v.den());
    }
    BigInt g = 0;
    for (const auto& v : values) {
        BigInt scaled = v.num() * (lcm_den / v.den());
        if (scaled < 0) scaled = -scaled;
        g = mp::gcd(g, scaled);
    }
    return Rational(std::move(g), std::move(lcm_den));
}

} // namespace ergoloop
