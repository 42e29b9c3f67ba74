#include "aclnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "aclnet/model_store.hpp"

namespace aclnet {

void TrainConfig::validate() const {
    if (lr_phases.empty()) throw config_error("lr_phases must be nonempty");
    for (const auto& [rate, epochs_in_phase] : lr_phases) {
        if (!(rate > 0)) throw config_error("learning rates must be > 0");
        if (epochs_in_phase < 1) throw config_error("phase epoch counts must be >= 1");
    }
    if (batch_size < 1) throw config_error("batch_size must be >= 1");
    if (epochs < 0) throw config_error("epochs must be >= 0");
    if (!(momentum >= 0 && momentum < 1)) throw config_error("momentum must be in [0,1)");
    if (weight_decay < 0) throw config_error("weight_decay must be >= 0");
    if (mixup_enabled) mixup.validate();
    if (augment_enabled) augment.validate();
}

double lr_at(const TrainConfig& config, int epoch) {
    int e = epoch;
    for (const auto& [rate, span] : config.lr_phases) {
        if (e < span) return rate;
        e -= span;
    }
    return config.lr_phases.back().first;
}

void sgd_step(const LayerGraph& graph, ModelState<float>& weights, const ModelState<float>& grads,
              ModelState<float>& momentum_buffers, double lr, const TrainConfig& config) {
    const float mu = static_cast<float>(config.momentum);
    const float wd = static_cast<float>(config.weight_decay);
    const float rate = static_cast<float>(lr);

    // Walk the three states in lockstep via the canonical enumeration.
    std::vector<Tensor<float>*> w_list, g_list, v_list;
    std::vector<ParamKind> kinds;
    for_each_param(graph, weights, [&](const std::string&, Tensor<float>& t, ParamKind k) {
        w_list.push_back(&t);
        kinds.push_back(k);
    });
    for_each_param(graph, const_cast<ModelState<float>&>(grads),
                   [&](const std::string&, Tensor<float>& t, ParamKind) { g_list.push_back(&t); });
    for_each_param(graph, momentum_buffers,
                   [&](const std::string&, Tensor<float>& t, ParamKind) { v_list.push_back(&t); });
    if (w_list.size() != g_list.size() || w_list.size() != v_list.size())
        throw shape_error("sgd_step: parameter enumeration mismatch");

    for (size_t i = 0; i < w_list.size(); ++i) {
        Tensor<float>& w = *w_list[i];
        const Tensor<float>& g = *g_list[i];
        Tensor<float>& v = *v_list[i];
        if (g.shape != w.shape || v.shape != w.shape)
            throw shape_error("sgd_step: gradient shape mismatch");
        const bool decay = kinds[i] == ParamKind::ConvWeight;
        for (size_t j = 0; j < w.data.size(); ++j) {
            float grad = g.data[j] + (decay ? wd * w.data[j] : 0.0f);
            v.data[j] = mu * v.data[j] + grad;
            w.data[j] -= rate * v.data[j];
        }
    }
}

const audio::AudioClip& ClipCache::get(const std::string& filename, int expect_rate) {
    auto it = clips_.find(filename);
    if (it != clips_.end()) return it->second;
    std::filesystem::path p = std::filesystem::path(data_dir_) / filename;
    audio::AudioClip clip = audio::load_wav(p.string());
    if (clip.sample_rate != expect_rate)
        throw data_error(p.string() + ": sample rate " + std::to_string(clip.sample_rate) +
                         " does not match the configured " + std::to_string(expect_rate));
    try {
        clip = audio::trim_silence(clip);
    } catch (const data_error& e) {
        throw data_error(p.string() + ": " + e.what());
    }
    return clips_.emplace(filename, std::move(clip)).first->second;
}

EvalResult evaluate(const LayerGraph& graph, const ModelState<float>& weights, ClipCache& clips,
                    const audio::DatasetIndex& test, int num_classes, int threads) {
    if (test.entries.empty()) throw data_error("evaluate: empty test set");
    EvalResult r;
    r.confusion.assign(static_cast<size_t>(num_classes),
                       std::vector<int>(static_cast<size_t>(num_classes), 0));
    for (const auto& e : test.entries) {
        if (e.target >= num_classes)
            throw data_error("evaluate: target " + std::to_string(e.target) +
                             " outside the configured " + std::to_string(num_classes) + " classes");
        audio::AudioClip clip = audio::normalize(clips.get(e.filename, graph.config.sample_rate));
        const int64_t len = static_cast<int64_t>(clip.samples.size());
        Tensor<float> x(Shape{1, 1, 1, len}, std::move(clip.samples));
        Tensor<float> probs = forward_infer(graph, weights, x, threads);
        int best = 0;
        for (int k = 1; k < num_classes; ++k)
            if (probs.data[static_cast<size_t>(k)] > probs.data[static_cast<size_t>(best)]) best = k;
        r.confusion[static_cast<size_t>(e.target)][static_cast<size_t>(best)] += 1;
        if (best == e.target) r.correct += 1;
        r.total += 1;
    }
    r.accuracy = static_cast<double>(r.correct) / r.total;
    return r;
}

std::string metrics_csv(const std::vector<EpochMetrics>& history) {
    std::ostringstream os;
    os << "epoch,phase_lr,train_loss,val_accuracy\n";
    for (const auto& m : history) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%d,%g,%.9g,", m.epoch, m.lr, m.train_loss);
        os << buf;
        if (m.has_val) {
            std::snprintf(buf, sizeof(buf), "%.6f", m.val_accuracy);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

namespace {

// Fixed-length training waveform without augmentation: normalize, then tile
// or center-crop to the target length. Used when augment_enabled is off.
std::vector<float> plain_example(const audio::AudioClip& clip, int64_t want) {
    audio::AudioClip n = audio::normalize(clip);
    std::vector<float> out(static_cast<size_t>(want));
    if (static_cast<int64_t>(n.samples.size()) >= want) {
        size_t off = (n.samples.size() - static_cast<size_t>(want)) / 2;
        std::copy_n(n.samples.begin() + static_cast<long>(off), want, out.begin());
    } else {
        for (int64_t i = 0; i < want; ++i)
            out[static_cast<size_t>(i)] = n.samples[static_cast<size_t>(i) % n.samples.size()];
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw data_error("cannot write " + path);
    f << text;
}

}  // namespace

TrainState train(const NetworkConfig& net_config, const std::string& data_dir,
                 const audio::DatasetIndex& train_set, const audio::DatasetIndex& test_set,
                 const TrainConfig& config) {
    net_config.validate();
    config.validate();
    if (train_set.entries.empty()) throw data_error("train: empty training set");
    for (const auto& e : train_set.entries)
        if (e.target >= net_config.num_classes)
            throw data_error("train: target " + std::to_string(e.target) +
                             " outside the configured " + std::to_string(net_config.num_classes) +
                             " classes");

    const int64_t crop_len =
        static_cast<int64_t>(std::llround(config.augment.crop_seconds * net_config.sample_rate));
    LayerGraph graph = build(net_config, crop_len);

    TrainState state;
    state.weights = init_weights<float>(graph, config.seed);
    state.momentum_buffers = zeros_like(state.weights);

    ClipCache clips(data_dir);
    Rng root(config.seed);
    const int num_classes = net_config.num_classes;

    if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);
    double best_accuracy = -1.0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = lr_at(config, epoch);

        std::vector<size_t> order(train_set.entries.size());
        std::iota(order.begin(), order.end(), size_t{0});
        Rng shuffle_rng = root.derive({stream::kShuffle, static_cast<uint64_t>(epoch)});
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1],
                      order[static_cast<size_t>(shuffle_rng.uniform_int(static_cast<int64_t>(i)))]);

        double loss_sum = 0;
        int steps = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
            const int64_t n = static_cast<int64_t>(end - start);

            std::vector<LabeledExample> batch(static_cast<size_t>(n));
            for (int64_t b = 0; b < n; ++b) {
                const auto& entry = train_set.entries[order[start + static_cast<size_t>(b)]];
                const audio::AudioClip& clip = clips.get(entry.filename, net_config.sample_rate);
                LabeledExample ex;
                if (config.augment_enabled) {
                    Rng aug_rng = root.derive({stream::kAugment, static_cast<uint64_t>(epoch),
                                               static_cast<uint64_t>(start + static_cast<size_t>(b))});
                    ex.x = augment_example(clip, config.augment, aug_rng).samples;
                } else {
                    ex.x = plain_example(clip, crop_len);
                }
                ex.y.assign(static_cast<size_t>(num_classes), 0.0f);
                ex.y[static_cast<size_t>(entry.target)] = 1.0f;
                batch[static_cast<size_t>(b)] = std::move(ex);
            }

            if (config.mixup_enabled) {
                Rng mix_rng = root.derive({stream::kMixup, static_cast<uint64_t>(epoch),
                                           static_cast<uint64_t>(steps)});
                batch = mixup_batch(batch, config.mixup, epoch, mix_rng);
            }

            Tensor<float> x = Tensor<float>::zeros(Shape{n, 1, 1, crop_len});
            Tensor<float> y = Tensor<float>::zeros(Shape{n, num_classes});
            for (int64_t b = 0; b < n; ++b) {
                std::copy(batch[static_cast<size_t>(b)].x.begin(),
                          batch[static_cast<size_t>(b)].x.end(),
                          x.data.begin() + b * crop_len);
                std::copy(batch[static_cast<size_t>(b)].y.begin(),
                          batch[static_cast<size_t>(b)].y.end(),
                          y.data.begin() + b * num_classes);
            }

            Rng dropout_rng = root.derive({stream::kDropout, static_cast<uint64_t>(epoch),
                                           static_cast<uint64_t>(steps)});
            ForwardCache<float> cache;
            Tensor<float> probs = forward(graph, state.weights, x, nn::Mode::Train, &dropout_rng,
                                          &cache, config.threads);
            auto ce = cross_entropy(probs, y);
            if (!std::isfinite(ce.loss)) {
                std::string layer = first_nonfinite_layer(graph, cache);
                throw numeric_error("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                                    std::to_string(steps) + ", first non-finite layer: " +
                                    (layer.empty() ? "loss" : layer));
            }
            ModelState<float> grads =
                backward<float>(graph, state.weights, cache, ce.dlogits, nullptr, config.threads);
            sgd_step(graph, state.weights, grads, state.momentum_buffers, lr, config);

            loss_sum += ce.loss;
            ++steps;
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.lr = lr;
        m.train_loss = steps ? loss_sum / steps : 0.0;

        const bool last_epoch = epoch + 1 == config.epochs;
        const bool eval_now = !test_set.entries.empty() && config.eval_every > 0 &&
                              ((epoch + 1) % config.eval_every == 0 || last_epoch);
        if (eval_now) {
            EvalResult ev =
                evaluate(graph, state.weights, clips, test_set, num_classes, config.threads);
            m.has_val = true;
            m.val_accuracy = ev.accuracy;
            if (!config.out_dir.empty() && ev.accuracy > best_accuracy) {
                best_accuracy = ev.accuracy;
                save_model(net_config, graph, state.weights,
                           (std::filesystem::path(config.out_dir) / "best.aclnet").string());
            }
        }
        state.history.push_back(m);
        state.epoch = epoch + 1;

        if (!config.out_dir.empty()) {
            write_text((std::filesystem::path(config.out_dir) / "metrics.csv").string(),
                       metrics_csv(state.history));
            if (config.checkpoint_every > 0 &&
                ((epoch + 1) % config.checkpoint_every == 0 || last_epoch)) {
                save_model(net_config, graph, state.weights,
                           (std::filesystem::path(config.out_dir) /
                            ("checkpoint_epoch" + std::to_string(epoch + 1) + ".aclnet"))
                               .string());
            }
        }
    }
    return state;
}

}  // namespace aclnet
