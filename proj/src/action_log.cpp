#include "psm/action_log.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace psm {

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::km: return "km";
        case Metric::rel: return "rel";
        case Metric::nb: return "nb";
        case Metric::wnb: return "wnb";
    }
    return "?";
}

Metric metric_from_name(const std::string& name) {
    // Accept the decay-prefixed spelling too.
    std::string n = name.rfind("xi_", 0) == 0 ? name.substr(3) : name;
    if (n == "km") return Metric::km;
    if (n == "rel") return Metric::rel;
    if (n == "nb") return Metric::nb;
    if (n == "wnb") return Metric::wnb;
    throw ConfigError("unknown metric '" + name + "'");
}

namespace {

// RFC 3339 date-time to epoch seconds, e.g. 2016-02-22T10:00:00Z or with a
// numeric offset. Returns nullopt when the string is not in that shape.
std::optional<Timestamp> parse_rfc3339(const std::string& s) {
    if (s.size() < 19) return std::nullopt;
    auto num = [&](std::size_t pos, std::size_t len, int& out) {
        out = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i]))) return false;
            out = out * 10 + (s[i] - '0');
        }
        return true;
    };
    int year, month, day, hour, minute, second;
    if (!num(0, 4, year) || s[4] != '-' || !num(5, 2, month) || s[7] != '-' ||
        !num(8, 2, day) || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') ||
        !num(11, 2, hour) || s[13] != ':' || !num(14, 2, minute) || s[16] != ':' ||
        !num(17, 2, second))
        return std::nullopt;
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 ||
        second > 60)
        return std::nullopt;

    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {  // fractional seconds: truncated
        ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    Timestamp offset = 0;
    if (pos < s.size()) {
        char c = s[pos];
        if (c == 'Z' || c == 'z') {
            ++pos;
        } else if (c == '+' || c == '-') {
            int oh, om;
            if (pos + 6 > s.size() || !num(pos + 1, 2, oh) || s[pos + 3] != ':' ||
                !num(pos + 4, 2, om))
                return std::nullopt;
            offset = (c == '+' ? 1 : -1) * (oh * 3600 + om * 60);
            pos += 6;
        } else {
            return std::nullopt;
        }
    }
    if (pos != s.size()) return std::nullopt;

    // Days from civil date (Howard Hinnant's algorithm).
    auto y = static_cast<std::int64_t>(year) - (month <= 2 ? 1 : 0);
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<std::uint64_t>(y - era * 400);
    const auto doy = static_cast<std::uint64_t>((153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 +
                                                day - 1);
    const std::uint64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    const std::int64_t days_since_epoch = era * 146097 + static_cast<std::int64_t>(doe) - 719468;

    return days_since_epoch * kSecondsPerDay + hour * 3600 + minute * 60 + second - offset;
}

Timestamp parse_timestamp_field(const std::string& field, std::size_t line) {
    Timestamp t = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), t);
    if (ec == std::errc() && ptr == field.data() + field.size()) {
        if (t < 0) throw ValidationError("line " + std::to_string(line) + ": negative timestamp");
        return t;
    }
    if (auto rfc = parse_rfc3339(field)) {
        if (*rfc < 0)
            throw ValidationError("line " + std::to_string(line) + ": negative timestamp");
        return *rfc;
    }
    throw ParseError(line, "unparseable timestamp '" + field + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

ActionLog ActionLog::from_rows(
    std::vector<std::tuple<std::string, std::string, Timestamp>> rows, bool dedup) {
    auto vocab = std::make_shared<Vocabulary>();
    vocab->users.reserve(rows.size());
    vocab->messages.reserve(rows.size());
    for (const auto& [u, m, t] : rows) {
        vocab->users.push_back(u);
        vocab->messages.push_back(m);
    }
    auto canonicalize = [](std::vector<std::string>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    canonicalize(vocab->users);
    canonicalize(vocab->messages);

    auto intern = [](const std::vector<std::string>& table, const std::string& raw) {
        auto it = std::lower_bound(table.begin(), table.end(), raw);
        return static_cast<std::uint32_t>(it - table.begin());
    };

    ActionLog log;
    log.vocab_ = vocab;
    log.actions_.reserve(rows.size());
    for (const auto& [u, m, t] : rows)
        log.actions_.push_back({intern(vocab->users, u), intern(vocab->messages, m), t});

    std::sort(log.actions_.begin(), log.actions_.end(), [](const Action& a, const Action& b) {
        return std::tie(a.message, a.time, a.user) < std::tie(b.message, b.time, b.user);
    });
    if (dedup) {
        // Earliest action per (user, message) wins; the sort above already
        // places it first within each message group.
        std::vector<Action> kept;
        kept.reserve(log.actions_.size());
        std::vector<bool> seen;
        MessageId cur_msg = 0;
        bool first = true;
        for (const Action& a : log.actions_) {
            if (first || a.message != cur_msg) {
                seen.assign(vocab->users.size(), false);
                cur_msg = a.message;
                first = false;
            }
            if (!seen[a.user]) {
                seen[a.user] = true;
                kept.push_back(a);
            }
        }
        log.actions_ = std::move(kept);
    }
    log.build_indexes();
    return log;
}

void ActionLog::build_indexes() {
    const std::size_t n_users = vocab_->users.size();
    const std::size_t n_msgs = vocab_->messages.size();

    message_offsets_.assign(n_msgs + 1, 0);
    for (const Action& a : actions_) ++message_offsets_[a.message + 1];
    for (std::size_t m = 0; m < n_msgs; ++m) message_offsets_[m + 1] += message_offsets_[m];

    // Per-user action lists sorted by (time, message).
    user_sorted_ = actions_;
    std::sort(user_sorted_.begin(), user_sorted_.end(), [](const Action& a, const Action& b) {
        return std::tie(a.user, a.time, a.message) < std::tie(b.user, b.time, b.message);
    });
    user_offsets_.assign(n_users + 1, 0);
    for (const Action& a : user_sorted_) ++user_offsets_[a.user + 1];
    for (std::size_t u = 0; u < n_users; ++u) user_offsets_[u + 1] += user_offsets_[u];

    if (actions_.empty()) {
        span_ = {0, -1};
    } else {
        Timestamp lo = actions_.front().time, hi = actions_.front().time;
        for (const Action& a : actions_) {
            lo = std::min(lo, a.time);
            hi = std::max(hi, a.time);
        }
        span_ = {lo, hi};
    }
}

std::span<const Action> ActionLog::message_actions(MessageId m) const {
    if (m >= message_count()) return {};
    return {actions_.data() + message_offsets_[m],
            actions_.data() + message_offsets_[m + 1]};
}

std::span<const Action> ActionLog::user_actions(UserId u) const {
    if (u >= user_count()) return {};
    return {user_sorted_.data() + user_offsets_[u], user_sorted_.data() + user_offsets_[u + 1]};
}

std::size_t ActionLog::active_user_count() const {
    std::size_t n = 0;
    for (std::size_t u = 0; u < user_count(); ++u)
        if (user_offsets_[u + 1] > user_offsets_[u]) ++n;
    return n;
}

std::size_t ActionLog::active_message_count() const {
    std::size_t n = 0;
    for (std::size_t m = 0; m < message_count(); ++m)
        if (message_offsets_[m + 1] > message_offsets_[m]) ++n;
    return n;
}

ActionLog ActionLog::restrict(Interval interval) const {
    if (interval.empty()) throw DomainError("restrict: inverted interval");
    ActionLog out;
    out.vocab_ = vocab_;
    out.actions_.reserve(actions_.size());
    for (const Action& a : actions_)
        if (interval.contains(a.time)) out.actions_.push_back(a);
    out.build_indexes();
    return out;
}

std::optional<UserId> ActionLog::find_user(const std::string& raw) const {
    auto it = std::lower_bound(vocab_->users.begin(), vocab_->users.end(), raw);
    if (it == vocab_->users.end() || *it != raw) return std::nullopt;
    return static_cast<UserId>(it - vocab_->users.begin());
}

std::optional<MessageId> ActionLog::find_message(const std::string& raw) const {
    auto it = std::lower_bound(vocab_->messages.begin(), vocab_->messages.end(), raw);
    if (it == vocab_->messages.end() || *it != raw) return std::nullopt;
    return static_cast<MessageId>(it - vocab_->messages.begin());
}

ActionLog parse_action_log(std::istream& source, LogFormat format, bool dedup) {
    std::vector<std::tuple<std::string, std::string, Timestamp>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (format == LogFormat::csv) {
            auto fields = split_csv_line(line);
            if (line_no == 1 && !fields.empty() && fields[0] == "user_id") continue;  // header
            if (fields.size() != 3) throw ParseError(line_no, "expected 3 fields");
            if (fields[0].empty() || fields[1].empty())
                throw ParseError(line_no, "empty user or message id");
            rows.emplace_back(fields[0], fields[1], parse_timestamp_field(fields[2], line_no));
        } else {
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object())
                throw ParseError(line_no, "invalid JSON object");
            if (!j.contains("user_id") || !j.contains("message_id") || !j.contains("timestamp"))
                throw ParseError(line_no, "missing user_id/message_id/timestamp");
            auto as_string = [&](const nlohmann::json& v) -> std::string {
                if (v.is_string()) return v.get<std::string>();
                if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
                throw ParseError(line_no, "id fields must be strings or integers");
            };
            Timestamp t;
            const auto& ts = j["timestamp"];
            if (ts.is_number_integer()) {
                t = ts.get<Timestamp>();
                if (t < 0)
                    throw ValidationError("line " + std::to_string(line_no) +
                                          ": negative timestamp");
            } else if (ts.is_string()) {
                t = parse_timestamp_field(ts.get<std::string>(), line_no);
            } else {
                throw ParseError(line_no, "timestamp must be integer or string");
            }
            std::string u = as_string(j["user_id"]);
            std::string m = as_string(j["message_id"]);
            if (u.empty() || m.empty()) throw ParseError(line_no, "empty user or message id");
            rows.emplace_back(std::move(u), std::move(m), t);
        }
    }
    if (rows.empty()) throw ValidationError("empty action log");
    return ActionLog::from_rows(std::move(rows), dedup);
}

ActionLog parse_action_log_file(const std::string& path, LogFormat format, bool dedup) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return parse_action_log(in, format, dedup);
}

void write_action_log_csv(std::ostream& out, const ActionLog& log) {
    out << "user_id,message_id,timestamp\n";
    for (const Action& a : log.actions())
        out << log.user_name(a.user) << ',' << log.message_name(a.message) << ',' << a.time
            << '\n';
}

std::vector<MessageId> CascadeSet::viral_messages() const {
    std::vector<MessageId> out;
    for (const Cascade& c : cascades_)
        if (c.viral) out.push_back(c.message);
    return out;
}

CascadeSet extract_cascades(const ActionLog& log, std::uint64_t theta, double phi) {
    if (theta < 1) throw DomainError("extract_cascades: theta must be >= 1");
    if (!(phi > 0.0 && phi < 1.0)) throw DomainError("extract_cascades: phi must be in (0,1)");

    CascadeSet set;
    set.theta_ = theta;
    set.phi_ = phi;
    set.index_of_message_.assign(log.message_count(), -1);
    for (MessageId m = 0; m < log.message_count(); ++m) {
        auto acts = log.message_actions(m);
        if (acts.empty()) continue;
        Cascade c;
        c.message = m;
        c.participants.assign(acts.begin(), acts.end());
        c.viral = c.participants.size() >= theta;
        set.index_of_message_[m] = static_cast<std::int64_t>(set.cascades_.size());
        if (c.viral) ++set.viral_count_;
        set.cascades_.push_back(std::move(c));
    }
    return set;
}

bool is_key_user(const Cascade& cascade, UserId user, double phi) {
    Timestamp t = 0;
    bool found = false;
    for (const Action& a : cascade.participants) {
        if (a.user == user) {
            t = a.time;  // participants are time-ordered, so this is the earliest
            found = true;
            break;
        }
    }
    if (!found) throw DomainError("is_key_user: user is not an m-participant");

    // Count distinct users posting strictly after t.
    std::vector<UserId> after;
    for (auto it = cascade.participants.rbegin(); it != cascade.participants.rend(); ++it) {
        if (it->time <= t) break;
        if (it->user != user) after.push_back(it->user);
    }
    std::sort(after.begin(), after.end());
    after.erase(std::unique(after.begin(), after.end()), after.end());
    return static_cast<double>(cascade.size()) * phi <= static_cast<double>(after.size());
}

LogStats log_stats(const ActionLog& log, const CascadeSet& cascades) {
    LogStats stats;
    std::vector<Timestamp> durations;
    durations.reserve(cascades.cascades().size());
    for (const Cascade& c : cascades.cascades()) {
        ++stats.size_histogram[c.size()];
        durations.push_back(c.duration());
        stats.per_cascade.push_back(
            {log.message_name(c.message), c.size(), c.duration(), c.viral});
    }
    std::sort(durations.begin(), durations.end());
    const double n = static_cast<double>(durations.size());
    for (std::size_t i = 0; i < durations.size(); ++i) {
        if (i + 1 < durations.size() && durations[i + 1] == durations[i]) continue;
        stats.duration_cdf.emplace_back(durations[i], static_cast<double>(i + 1) / n);
    }
    return stats;
}

}  // namespace psm
