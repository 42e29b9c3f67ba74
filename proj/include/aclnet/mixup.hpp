#pragma once

#include <vector>

#include "aclnet/rng.hpp"

namespace aclnet {

struct MixupConfig {
    double alpha = 0.1;
    int warmup_epochs = 100;  // mixup disabled while epoch < warmup_epochs

    void validate() const;  // alpha in (0,5], warmup >= 0
};

// A waveform with its class distribution (one-hot or soft; nonnegative, sums
// to one).
struct LabeledExample {
    std::vector<float> x;
    std::vector<float> y;
};

// lambda ~ Beta(alpha, alpha), drawn as g1/(g1+g2) from two Gamma(alpha,1)
// draws.
double sample_beta(double alpha, Rng& rng);

// Convex combination of both waveform and target with the same lambda.
LabeledExample mixup_pair(const LabeledExample& a, const LabeledExample& b, double lambda);

// Pair each element with a partner from a random permutation of the batch,
// one lambda per pair. Returns the batch unchanged (and draws nothing) while
// epoch < warmup_epochs.
std::vector<LabeledExample> mixup_batch(const std::vector<LabeledExample>& batch,
                                        const MixupConfig& config, int epoch, Rng& rng);

}  // namespace aclnet
