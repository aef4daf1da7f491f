#pragma once

#include <gmpxx.h>

#include <string>
#include <vector>

#include "nashflow/error.hpp"

namespace nashflow {

// All quantities in the engine are exact rationals. mpq_class keeps values
// canonical (positive denominator, lowest terms), so equality and sign tests
// are decidable everywhere; nothing in the engine ever rounds.
using Rational = mpq_class;

inline Rational rat(long num, long den = 1) {
    if (den == 0) fail(Errc::invalid_input, "rational with zero denominator");
    Rational r(num, den);
    r.canonicalize();
    return r;
}

inline Rational rational_abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

inline bool is_integer(const Rational& r) { return r.get_den() == 1; }

// Accepts "p" or "p/q" with optional sign, arbitrary precision.
inline Rational parse_rational(const std::string& text) {
    if (text.empty()) fail(Errc::parse_error, "empty rational literal");
    auto check_digits = [&](size_t from, size_t to) {
        if (from >= to) return false;
        for (size_t i = from; i < to; ++i)
            if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
        return true;
    };
    size_t start = (text[0] == '-' || text[0] == '+') ? 1 : 0;
    size_t slash = text.find('/');
    bool well_formed = slash == std::string::npos
                           ? check_digits(start, text.size())
                           : check_digits(start, slash) && check_digits(slash + 1, text.size());
    if (!well_formed) fail(Errc::parse_error, "malformed rational literal '" + text + "'");
    Rational r;
    if (r.set_str(text, 10) != 0) fail(Errc::parse_error, "malformed rational literal '" + text + "'");
    if (r.get_den() == 0) fail(Errc::parse_error, "zero denominator in '" + text + "'");
    r.canonicalize();
    return r;
}

// Canonical form: "p" for integers, "p/q" otherwise. Round-trips bit-exactly
// through parse_rational.
inline std::string to_fraction_string(const Rational& r) {
    if (r.get_den() == 1) return r.get_num().get_str();
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

// Display-only decimal rendering with the given number of significant digits
// (round half to even). Never parsed back.
inline std::string to_decimal_string(const Rational& r, int significant_digits = 20) {
    if (r == 0) return "0";
    const bool negative = r < 0;
    mpz_class a = negative ? mpz_class(-r.get_num()) : mpz_class(r.get_num());
    const mpz_class& b = r.get_den();

    // e = floor(log10(a/b)): the decimal exponent of the leading digit.
    long e = static_cast<long>(mpz_sizeinbase(a.get_mpz_t(), 10)) -
             static_cast<long>(mpz_sizeinbase(b.get_mpz_t(), 10));
    auto pow10 = [](long k) {
        mpz_class p;
        mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(k));
        return p;
    };
    // sizeinbase may overestimate by one; fix up so 10^e <= a/b < 10^(e+1).
    while (e > 0 ? a < b * pow10(e) : a * pow10(-e) < b) --e;
    while (e + 1 > 0 ? a >= b * pow10(e + 1) : a * pow10(-(e + 1)) >= b) ++e;

    const long k = significant_digits;
    mpz_class num = a, den = b;
    long shift = k - 1 - e;
    if (shift >= 0)
        num *= pow10(shift);
    else
        den *= pow10(-shift);
    mpz_class digits, rem;
    mpz_fdiv_qr(digits.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    mpz_class twice = 2 * rem;
    if (twice > den || (twice == den && mpz_odd_p(digits.get_mpz_t()))) digits += 1;
    std::string ds = digits.get_str();
    if (static_cast<long>(ds.size()) > k) {  // rounding carried into a new digit
        ds.pop_back();
        ++e;
    }

    std::string out;
    if (e >= k - 1) {
        out = ds + std::string(e - (k - 1), '0');
    } else if (e >= 0) {
        out = ds.substr(0, e + 1) + "." + ds.substr(e + 1);
    } else {
        out = "0." + std::string(-e - 1, '0') + ds;
    }
    if (out.find('.') != std::string::npos) {
        while (out.back() == '0') out.pop_back();
        if (out.back() == '.') out.pop_back();
    }
    return negative ? "-" + out : out;
}

inline std::string to_fraction_string(const std::vector<Rational>& v) {
    std::string out = "[";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += to_fraction_string(v[i]);
    }
    return out + "]";
}

}  // namespace nashflow
