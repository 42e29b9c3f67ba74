#include "aclnet/mixup.hpp"

#include <numeric>

#include "aclnet/errors.hpp"

namespace aclnet {

void MixupConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 5.0))
        throw config_error("mixup alpha must be in (0,5], got " + std::to_string(alpha));
    if (warmup_epochs < 0)
        throw config_error("mixup warmup must be >= 0, got " + std::to_string(warmup_epochs));
}

double sample_beta(double alpha, Rng& rng) {
    if (!(alpha > 0)) throw config_error("sample_beta: alpha must be > 0");
    return rng.beta(alpha);
}

LabeledExample mixup_pair(const LabeledExample& a, const LabeledExample& b, double lambda) {
    if (a.x.size() != b.x.size())
        throw shape_error("mixup_pair: waveform lengths differ (" + std::to_string(a.x.size()) +
                          " vs " + std::to_string(b.x.size()) + ")");
    if (a.y.size() != b.y.size())
        throw shape_error("mixup_pair: class counts differ");
    const float l = static_cast<float>(lambda);
    LabeledExample out;
    out.x.resize(a.x.size());
    out.y.resize(a.y.size());
    for (size_t i = 0; i < a.x.size(); ++i) out.x[i] = l * a.x[i] + (1.0f - l) * b.x[i];
    for (size_t i = 0; i < a.y.size(); ++i) out.y[i] = l * a.y[i] + (1.0f - l) * b.y[i];
    return out;
}

std::vector<LabeledExample> mixup_batch(const std::vector<LabeledExample>& batch,
                                        const MixupConfig& config, int epoch, Rng& rng) {
    config.validate();
    if (batch.empty()) throw config_error("mixup_batch: empty batch");
    if (epoch < config.warmup_epochs) return batch;

    std::vector<size_t> perm(batch.size());
    std::iota(perm.begin(), perm.end(), size_t{0});
    for (size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(i)))]);

    std::vector<LabeledExample> out;
    out.reserve(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) {
        double lambda = sample_beta(config.alpha, rng);
        out.push_back(mixup_pair(batch[i], batch[perm[i]], lambda));
    }
    return out;
}

}  // namespace aclnet
