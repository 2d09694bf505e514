// Prints the calibrated thresholds of every viable (training, assessment)
// pairing of the bundled benchmark model across a sweep of budgets.  Pure
// arithmetic, no simulation.

#include <cmath>
#include <cstdio>

#include "chad/chad.hpp"

int main() {
    using namespace chad;

    Model model(
        ResponseModel({BernoulliResponse(0.45), BernoulliResponse(0.35),
                       BernoulliResponse(0.25)}),
        ChangePointModel::markovian(0.0, {0.1, 0.05, 0.0}));

    const TreatmentQuality q = quality_metrics(model);
    std::printf("%-4s %10s %10s %10s %8s\n", "x", "I", "D", "lambda", "zeta");
    for (std::size_t x = 0; x < q.per_treatment.size(); ++x) {
        const auto& e = q.per_treatment[x];
        std::printf("%-4zu %10.6f %10.6f %10.4f %8.4f\n", x + 1, e.i_nats, e.d_rate,
                    e.lambda, e.zeta);
    }

    const int det = q.best_detector;
    std::printf("\npairings with assessment treatment %d:\n", det + 1);
    std::printf("%-10s %12s %12s %12s %12s\n", "alpha", "pair", "b1", "bK", "d");
    for (double alpha : {0.05, 1e-2, 1e-3, 1e-5}) {
        for (int train = 0; train < model.num_treatments(); ++train) {
            if (train == det) continue;
            if (q.per_treatment[static_cast<std::size_t>(train)].zeta == 0.0) continue;
            const ProposedSpec spec = ProposedSpec::calibrated(q, train, det, alpha);
            std::printf("%-10g (%d,%d)%7s %12.4f %12.1f %12.4f\n", alpha, train + 1,
                        det + 1, "", spec.b1, spec.bK, spec.d);
        }
        const double b = (1.0 - alpha) / alpha;
        std::printf("%-10g static%11s %12s %12.1f\n", alpha, "", "", b);
    }
    return 0;
}
