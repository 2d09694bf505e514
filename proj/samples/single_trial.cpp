// Runs one replication of the alternating design and prints what happened
// stage by stage.  Pass a seed to see a different path.

#include <cstdio>
#include <cstdlib>

#include "chad/chad.hpp"

int main(int argc, char** argv) {
    using namespace chad;

    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 7;

    Model model(
        ResponseModel({BernoulliResponse(0.45), BernoulliResponse(0.35),
                       BernoulliResponse(0.25)}),
        ChangePointModel::markovian(0.0, {0.1, 0.05, 0.0}));

    const TreatmentQuality quality = quality_metrics(model);
    const ProposedSpec spec = ProposedSpec::calibrated(quality, 0, 2, 1e-2);
    std::printf("thresholds: b1=%.4f  bK=%.1f  d=%.4f\n", spec.b1, spec.bK, spec.d);

    TrialEngine engine(model, seed, 0);
    const TrialOutcome out = run_proposed(engine, spec);

    std::int64_t start = 0;
    for (std::size_t s = 0; s < out.stage_ends.size(); ++s) {
        const bool training = s % 2 == 0;
        std::printf("stage %2zu  %-10s  steps %4lld..%-4lld  ended by %s\n", s + 1,
                    training ? "training" : "assessment", static_cast<long long>(start + 1),
                    static_cast<long long>(out.stage_ends[s]),
                    out.stage_triggers[s] == StageTrigger::detection ? "detection"
                                                                     : "test");
        start = out.stage_ends[s];
    }
    std::printf("\nstopped at T=%lld after %u cycle(s); change hit at Theta=%lld\n",
                static_cast<long long>(out.stop_time), out.cycles,
                static_cast<long long>(out.change_time));
    std::printf("terminal posterior odds %.3f  -> %s\n", std::exp(out.log_odds),
                out.false_alarm ? "false alarm" : "change correctly declared");
    return 0;
}
