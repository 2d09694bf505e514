#pragma once

// Per-replication record shared by every stopping rule.

#include <cstdint>
#include <vector>

namespace chad {

enum class StageTrigger : std::uint8_t {
    detection,  // posterior odds crossed the stage threshold
    test,       // the stage's likelihood-ratio test rejected first
};

struct TrialOutcome {
    std::int64_t stop_time = 0;    // T
    std::int64_t change_time = 0;  // Theta (resolved past T if needed)
    double log_odds = 0.0;         // log Gamma_T
    bool false_alarm = false;      // T < Theta
    std::uint32_t cycles = 0;      // N; 0 for single-stage rules

    // Stage boundaries S_1..S_{2N} and what ended each stage.  Empty for
    // single-stage rules.
    std::vector<std::int64_t> stage_ends;
    std::vector<StageTrigger> stage_triggers;
};

} // namespace chad
