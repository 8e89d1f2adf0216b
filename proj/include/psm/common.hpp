#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace psm {

// Dense, canonical indices assigned at ingestion (sorted raw-id order).
using UserId = std::uint32_t;
using MessageId = std::uint32_t;

// Seconds since epoch.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86'400;

constexpr Timestamp days(double d) {
    return static_cast<Timestamp>(d * static_cast<double>(kSecondsPerDay));
}

// Closed interval [lo, hi] of timestamps.
struct Interval {
    Timestamp lo = 0;
    Timestamp hi = 0;

    bool empty() const { return hi < lo; }
    bool contains(Timestamp t) const { return t >= lo && t <= hi; }

    Interval intersect(const Interval& o) const {
        return {lo > o.lo ? lo : o.lo, hi < o.hi ? hi : o.hi};
    }

    bool operator==(const Interval&) const = default;
};

enum class Metric : int { km = 0, rel = 1, nb = 2, wnb = 3 };

inline constexpr int kMetricCount = 4;

const char* metric_name(Metric m);
Metric metric_from_name(const std::string& name);

enum class Label : std::uint8_t { normal = 0, psm = 1 };

// Malformed input record; line is 1-based within the source stream.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Well-formed input that violates a data constraint.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation called outside its domain (unknown message, inverted interval, ...).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid or infeasible configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace psm
