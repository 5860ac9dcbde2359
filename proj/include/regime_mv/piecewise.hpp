#ifndef REGIME_MV_PIECEWISE_HPP
#define REGIME_MV_PIECEWISE_HPP

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <vector>

namespace regime_mv {

// Piecewise-constant coefficient table on [0, infinity), left-continuous:
// value[k] applies on the interval (t_from[k], t_from[k+1]] and value[0]
// additionally at t = 0.  This matches the predictable-integrand convention:
// a lookup at an exact breakpoint returns the value in force just before it.
template <typename T>
class PiecewiseConstant {
public:
    PiecewiseConstant() = default;

    explicit PiecewiseConstant(T constant_value)
        : t_from_{0.0}, values_{std::move(constant_value)} {}

    PiecewiseConstant(std::vector<double> t_from, std::vector<T> values)
        : t_from_(std::move(t_from)), values_(std::move(values)) {
        if (t_from_.empty() || t_from_.size() != values_.size())
            throw std::invalid_argument("piecewise table: breakpoints and values must be nonempty and equal-length");
        if (t_from_.front() != 0.0)
            throw std::invalid_argument("piecewise table: first breakpoint must be t=0");
        if (!std::is_sorted(t_from_.begin(), t_from_.end()) ||
            std::adjacent_find(t_from_.begin(), t_from_.end()) != t_from_.end())
            throw std::invalid_argument("piecewise table: breakpoints must be strictly increasing");
    }

    bool empty() const { return t_from_.empty(); }
    std::size_t segments() const { return t_from_.size(); }
    const std::vector<double>& breakpoints() const { return t_from_; }
    const T& segment_value(std::size_t k) const { return values_[k]; }

    // Left-continuous lookup.
    const T& at(double t) const {
        assert(!t_from_.empty());
        if (t <= t_from_.front()) return values_.front();
        // first breakpoint >= t; the segment ending there applies
        auto it = std::lower_bound(t_from_.begin(), t_from_.end(), t);
        if (it == t_from_.end()) return values_.back();
        std::size_t idx = static_cast<std::size_t>(it - t_from_.begin());
        if (*it == t) return values_[idx > 0 ? idx - 1 : 0];
        return values_[idx - 1];
    }

    bool operator==(const PiecewiseConstant& other) const = default;

private:
    std::vector<double> t_from_;
    std::vector<T> values_;
};

} // namespace regime_mv

#endif
