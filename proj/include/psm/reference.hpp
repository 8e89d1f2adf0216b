#pragma once

#include <optional>
#include <vector>

#include "psm/decay.hpp"

namespace psm::reference {

// Serial brute-force transcription of the causal definitions, kept
// deliberately naive: every quantity is recomputed by nested loops over the
// raw message lists, with no shared index structures. The test suites compare
// the production engine against these, and the benchmark target measures the
// speedup. Logs are assumed dedup'ed (one action per user and message).

bool viral(const ActionLog& log, MessageId m, std::uint64_t theta);

bool key_user(const ActionLog& log, MessageId m, UserId u, double phi);

double prior_rho(const ActionLog& log, std::uint64_t theta, const CausalConfig& config);

std::optional<double> user_rho(const ActionLog& log, UserId u, std::uint64_t theta,
                               double phi);

PairStats pair_stats(const ActionLog& log, UserId i, UserId j, std::uint64_t theta);

std::vector<UserId> prima_facie_users(const ActionLog& log, MessageId m, std::uint64_t theta,
                                      double phi, const CausalConfig& config);

std::vector<UserId> related_users(const ActionLog& log, UserId i, std::uint64_t theta,
                                  double phi, const CausalConfig& config);

MetricValue epsilon(Metric k, UserId u, const ActionLog& log, std::uint64_t theta, double phi,
                    const CausalConfig& config);

MetricValue xi(Metric k, UserId u, const ActionLog& log, Interval interval,
               const DecayConfig& decay_config, std::uint64_t theta, double phi,
               const CausalConfig& config);

// Every user's four metrics, one epsilon() call each; benchmark baseline.
std::vector<CausalityVector> all_vectors(const ActionLog& log, std::uint64_t theta, double phi,
                                         const CausalConfig& config);

}  // namespace psm::reference
