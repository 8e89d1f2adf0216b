#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "psm/common.hpp"

namespace psm {

// One (user, message, time) tuple of the action log.
struct Action {
    UserId user = 0;
    MessageId message = 0;
    Timestamp time = 0;

    bool operator==(const Action&) const = default;
};

// Raw-id tables shared between a log and everything derived from it.
// Ids are dense indices into these tables, assigned in sorted raw-id order
// so interning never depends on row order.
struct Vocabulary {
    std::vector<std::string> users;
    std::vector<std::string> messages;
};

enum class LogFormat { csv, jsonl };

// Immutable, indexed action log. Construction is single-threaded; once built
// the log is safe to share read-only across parallel workers.
class ActionLog {
public:
    ActionLog() = default;

    // Builds the canonical representation from raw rows. With dedup, keeps
    // the earliest action per (user, message) pair.
    static ActionLog from_rows(
        std::vector<std::tuple<std::string, std::string, Timestamp>> rows, bool dedup);

    std::size_t size() const { return actions_.size(); }
    bool empty() const { return actions_.empty(); }

    std::size_t user_count() const { return vocab_->users.size(); }
    std::size_t message_count() const { return vocab_->messages.size(); }

    const Vocabulary& vocab() const { return *vocab_; }
    const std::string& user_name(UserId u) const { return vocab_->users[u]; }
    const std::string& message_name(MessageId m) const { return vocab_->messages[m]; }

    // Actions in canonical order: sorted by (message, time, user).
    const std::vector<Action>& actions() const { return actions_; }

    // All actions of one message, ascending by (time, user).
    std::span<const Action> message_actions(MessageId m) const;

    // All actions of one user, ascending by (time, message).
    std::span<const Action> user_actions(UserId u) const;

    // Number of distinct users / messages with at least one action.
    std::size_t active_user_count() const;
    std::size_t active_message_count() const;

    // [t_min, t_max] over actions; empty logs report an empty interval.
    Interval time_span() const { return span_; }

    // New log holding exactly the actions with time in [t_a, t_b] (closed);
    // indexes rebuilt, vocabulary shared. Inverted intervals are a domain error.
    ActionLog restrict(Interval interval) const;

    std::optional<UserId> find_user(const std::string& raw) const;
    std::optional<MessageId> find_message(const std::string& raw) const;

private:
    void build_indexes();

    std::shared_ptr<const Vocabulary> vocab_ = std::make_shared<Vocabulary>();
    std::vector<Action> actions_;               // sorted by (message, time, user)
    std::vector<std::size_t> message_offsets_;  // CSR over actions_, size M+1
    std::vector<Action> user_sorted_;           // sorted by (user, time, message)
    std::vector<std::size_t> user_offsets_;     // CSR over user_sorted_, size U+1
    Interval span_{0, -1};
};

// Parses a CSV (`user_id,message_id,timestamp` header optional) or JSONL
// stream. Timestamps are integer epoch seconds or RFC 3339, converted on
// ingest. Malformed records raise ParseError with the 1-based line number;
// negative timestamps raise ValidationError; an input with no data rows
// raises ValidationError.
ActionLog parse_action_log(std::istream& source, LogFormat format, bool dedup = true);
ActionLog parse_action_log_file(const std::string& path, LogFormat format, bool dedup = true);

// Canonical CSV serialization (header + actions in canonical order).
void write_action_log_csv(std::ostream& out, const ActionLog& log);

// All actions of one message, time-ordered.
struct Cascade {
    MessageId message = 0;
    std::vector<Action> participants;  // ascending by (time, user)
    bool viral = false;

    std::size_t size() const { return participants.size(); }
    Timestamp duration() const {
        return participants.empty() ? 0
                                    : participants.back().time - participants.front().time;
    }
};

// One cascade per distinct message present in the log, with the viral set
// per the size-threshold rule. Immutable after construction.
class CascadeSet {
public:
    CascadeSet() = default;

    std::uint64_t theta() const { return theta_; }
    double phi() const { return phi_; }

    const std::vector<Cascade>& cascades() const { return cascades_; }
    std::size_t message_count() const { return cascades_.size(); }
    std::size_t viral_count() const { return viral_count_; }

    // Index into cascades() for a message id, or -1 when the message has no
    // action in the underlying log.
    std::int64_t cascade_index(MessageId m) const {
        return m < index_of_message_.size() ? index_of_message_[m] : -1;
    }
    const Cascade* find(MessageId m) const {
        auto i = cascade_index(m);
        return i < 0 ? nullptr : &cascades_[static_cast<std::size_t>(i)];
    }

    bool is_viral(MessageId m) const {
        const Cascade* c = find(m);
        return c != nullptr && c->viral;
    }

    std::vector<MessageId> viral_messages() const;

    friend CascadeSet extract_cascades(const ActionLog& log, std::uint64_t theta, double phi);

private:
    std::vector<Cascade> cascades_;            // ascending by message id
    std::vector<std::int64_t> index_of_message_;
    std::size_t viral_count_ = 0;
    std::uint64_t theta_ = 1;
    double phi_ = 0.5;
};

// One Cascade per distinct message; m is viral iff its size >= theta.
// Requires theta >= 1 and phi in (0,1).
CascadeSet extract_cascades(const ActionLog& log, std::uint64_t theta, double phi);

// True iff `user` precedes at least a phi fraction of the other
// m-participants: size * phi <= |{j : j posts m strictly after user}|.
// Uses the user's earliest action when duplicates survived ingestion.
// Non-participants are a domain error.
bool is_key_user(const Cascade& cascade, UserId user, double phi);

// Machine-readable distribution report for external plotting.
struct LogStats {
    std::map<std::uint64_t, std::uint64_t> size_histogram;       // cascade size -> count
    std::vector<std::pair<Timestamp, double>> duration_cdf;      // (duration, cumulative fraction)
    struct PerCascade {
        std::string message;
        std::uint64_t size = 0;
        Timestamp duration = 0;
        bool viral = false;
    };
    std::vector<PerCascade> per_cascade;  // ascending by message name
};

LogStats log_stats(const ActionLog& log, const CascadeSet& cascades);

}  // namespace psm
