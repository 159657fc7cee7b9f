#include "unilearn/exponent.hpp"

#include "unilearn/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace unilearn {

Exponent Exponent::finite(double v) {
    if (!std::isfinite(v) || !(v > 0.0))
        throw PreconditionError("exponent must be finite and > 0, got " + std::to_string(v));
    return Exponent(v, false);
}

Exponent Exponent::parse(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (lower == "inf" || lower == "infinity" || lower == "+inf")
        return infinity();
    char* end = nullptr;
    const double v = std::strtod(lower.c_str(), &end);
    if (lower.empty() || end != lower.c_str() + lower.size())
        throw PreconditionError("cannot parse exponent '" + std::string(text) + "'");
    if (std::isinf(v) && v > 0)
        return infinity();
    return finite(v);
}

std::string Exponent::to_string() const {
    if (infinite_)
        return "inf";
    std::ostringstream os;
    os.precision(17);
    os << value_;
    return os.str();
}

} // namespace unilearn
