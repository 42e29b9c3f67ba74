#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "aclnet/audio.hpp"
#include "aclnet/graph.hpp"
#include "aclnet/mixup.hpp"
#include "aclnet/network.hpp"

namespace aclnet {

struct TrainConfig {
    double momentum = 0.9;
    double weight_decay = 2e-4;
    int batch_size = 64;
    // (rate, epochs) phases; epochs beyond the schedule hold the final rate.
    std::vector<std::pair<double, int>> lr_phases = {{0.2, 500}, {0.04, 1000}, {0.016, 500}};
    int epochs = 2000;

    MixupConfig mixup;
    bool mixup_enabled = true;
    audio::AugmentConfig augment;
    bool augment_enabled = true;

    uint64_t seed = 0;
    int eval_every = 10;
    int checkpoint_every = 50;
    int threads = 1;
    std::string out_dir;  // metrics.csv and checkpoints; empty writes nothing

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;
    double lr = 0;
    double train_loss = 0;
    bool has_val = false;
    double val_accuracy = 0;
};

struct TrainState {
    ModelState<float> weights;
    ModelState<float> momentum_buffers;  // zero-initialized, same shapes as weights
    int epoch = 0;
    std::vector<EpochMetrics> history;
};

// Piecewise-constant schedule; epochs past the end hold the final rate.
double lr_at(const TrainConfig& config, int epoch);

// Soft-target cross entropy on softmax output:
//   loss = -sum target * log(probs + 1e-12), averaged over the batch.
// dlogits is the gradient w.r.t. the pre-softmax logits, (probs - target)/N.
template <typename T>
struct CrossEntropyResult {
    double loss;
    Tensor<T> dlogits;
};

template <typename T>
CrossEntropyResult<T> cross_entropy(const Tensor<T>& probs, const Tensor<T>& targets) {
    if (probs.shape != targets.shape || probs.shape.rank() != 2)
        throw shape_error("cross_entropy expects matching (N,K) tensors");
    const int64_t N = probs.shape[0], K = probs.shape[1];
    CrossEntropyResult<T> r;
    r.dlogits = Tensor<T>::zeros(probs.shape);
    double loss = 0;
    for (int64_t n = 0; n < N; ++n)
        for (int64_t k = 0; k < K; ++k) {
            const size_t i = static_cast<size_t>(n * K + k);
            loss -= static_cast<double>(targets.data[i]) *
                    std::log(static_cast<double>(probs.data[i]) + 1e-12);
            r.dlogits.data[i] = (probs.data[i] - targets.data[i]) / static_cast<T>(N);
        }
    r.loss = loss / static_cast<double>(N);
    return r;
}

// g <- grad + weight_decay*w (conv weights only); v <- momentum*v + g;
// w <- w - lr*v. BN gamma/beta and the class-head bias are not decayed.
void sgd_step(const LayerGraph& graph, ModelState<float>& weights, const ModelState<float>& grads,
              ModelState<float>& momentum_buffers, double lr, const TrainConfig& config);

struct EvalResult {
    double accuracy = 0;
    int total = 0, correct = 0;
    std::vector<std::vector<int>> confusion;  // [true][predicted]
};

// Decoded, silence-trimmed clips keyed by filename. References stay valid
// across inserts.
class ClipCache {
public:
    explicit ClipCache(std::string data_dir) : data_dir_(std::move(data_dir)) {}
    const audio::AudioClip& get(const std::string& filename, int expect_rate);

private:
    std::string data_dir_;
    std::unordered_map<std::string, audio::AudioClip> clips_;
};

// Whole-file inference: normalize only, argmax over softmax.
EvalResult evaluate(const LayerGraph& graph, const ModelState<float>& weights, ClipCache& clips,
                    const audio::DatasetIndex& test, int num_classes, int threads = 1);

// The full recipe: per epoch shuffle, augment, mixup (after warm-up),
// forward/backward, SGD step; periodic whole-file evaluation and checkpoints.
// Aborts with numeric_error naming the first non-finite layer if the loss
// leaves the reals.
TrainState train(const NetworkConfig& net_config, const std::string& data_dir,
                 const audio::DatasetIndex& train_set, const audio::DatasetIndex& test_set,
                 const TrainConfig& config);

std::string metrics_csv(const std::vector<EpochMetrics>& history);

}  // namespace aclnet
