#pragma once

#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "psm/action_log.hpp"

namespace psm::test {

// Small fixture exercising every metric nontrivially. theta=3, phi=0.5:
// viral = {m1, m2, m3}; key users m1:{i,j} m2:{i} m3:{j} m4:{k} m5:{l}.
inline const char* kT1Csv =
    "user_id,message_id,timestamp\n"
    "i,m1,1\nj,m1,2\nk,m1,3\nl,m1,4\n"
    "i,m2,1\nj,m2,2\nk,m2,3\n"
    "j,m3,1\nk,m3,2\nl,m3,3\n"
    "k,m4,1\nj,m4,2\n"
    "l,m5,1\nk,m5,2\n";

inline ActionLog t1_log() {
    std::istringstream in(kT1Csv);
    return parse_action_log(in, LogFormat::csv);
}

// T1 with every timestamp scaled to day units (1 -> day 1 etc.), for the
// decay examples.
inline ActionLog t1_log_days() {
    std::istringstream in(kT1Csv);
    ActionLog unit = parse_action_log(in, LogFormat::csv);
    std::vector<std::tuple<std::string, std::string, Timestamp>> rows;
    for (const Action& a : unit.actions())
        rows.emplace_back(unit.user_name(a.user), unit.message_name(a.message),
                          a.time * kSecondsPerDay);
    return ActionLog::from_rows(std::move(rows), true);
}

struct RandomLogParams {
    std::uint32_t max_users = 8;
    std::uint32_t max_messages = 15;
    std::uint32_t max_actions = 40;
    Timestamp max_time = 50;
};

// Seeded random log for property/oracle tests; dedup'ed like the production
// ingest path.
inline ActionLog random_log(std::uint64_t seed, const RandomLogParams& p = {}) {
    std::mt19937_64 rng(seed);
    const std::uint32_t n_users = 2 + rng() % (p.max_users - 1);
    const std::uint32_t n_msgs = 1 + rng() % p.max_messages;
    const std::uint32_t n_actions = 2 + rng() % (p.max_actions - 1);
    std::vector<std::tuple<std::string, std::string, Timestamp>> rows;
    for (std::uint32_t i = 0; i < n_actions; ++i) {
        rows.emplace_back("u" + std::to_string(rng() % n_users),
                          "m" + std::to_string(rng() % n_msgs),
                          static_cast<Timestamp>(rng() % (p.max_time + 1)));
    }
    return ActionLog::from_rows(std::move(rows), true);
}

inline std::string to_csv(const ActionLog& log) {
    std::ostringstream out;
    write_action_log_csv(out, log);
    return out.str();
}

}  // namespace psm::test
