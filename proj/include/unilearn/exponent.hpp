#pragma once

#include <limits>
#include <string>
#include <string_view>

namespace unilearn {

/// A norm exponent in (0, inf]. Infinity is a distinguished state rather
/// than a large finite value, so every formula branches on it explicitly.
class Exponent {
public:
    /// Finite exponent; throws PreconditionError unless v is finite and > 0.
    static Exponent finite(double v);
    static Exponent infinity() { return Exponent(0.0, true); }

    /// Accepts "inf", "infinity", "Inf" or any decimal number > 0.
    static Exponent parse(std::string_view text);

    bool is_infinite() const { return infinite_; }

    /// The exponent itself, +inf for the infinite case.
    double value() const {
        return infinite_ ? std::numeric_limits<double>::infinity() : value_;
    }

    /// 1/p, exactly 0 for p = inf.
    double reciprocal() const { return infinite_ ? 0.0 : 1.0 / value_; }

    bool at_most(double bound) const { return !infinite_ && value_ <= bound; }
    bool at_least(double bound) const { return infinite_ || value_ >= bound; }

    std::string to_string() const;

    friend bool operator==(const Exponent& a, const Exponent& b) {
        return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
    }

private:
    Exponent(double v, bool inf) : value_(v), infinite_(inf) {}

    double value_;
    bool infinite_;
};

} // namespace unilearn
