#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "aclnet/trainer.hpp"
#include "support/toy_corpus.hpp"

using namespace aclnet;
using testsupport::TempDir;
using testsupport::make_corpus;

namespace {

TrainConfig quick_config(int epochs, uint64_t seed = 0) {
    TrainConfig c;
    c.epochs = epochs;
    c.seed = seed;
    c.batch_size = 8;
    c.eval_every = 0;
    c.checkpoint_every = 0;
    c.mixup.warmup_epochs = 1000;  // effectively off for these short runs
    return c;
}

NetworkConfig tiny_net(int num_classes, double wm = 1.0 / 32) {
    NetworkConfig c = NetworkConfig::defaults(ConvType::DwSeparable, 16000);
    c.set_width_multiplier(wm);
    c.num_classes = num_classes;
    return c;
}

}  // namespace

TEST_CASE("learning-rate schedule phases") {
    TrainConfig c;
    CHECK(lr_at(c, 0) == 0.2);
    CHECK(lr_at(c, 499) == 0.2);
    CHECK(lr_at(c, 500) == 0.04);
    CHECK(lr_at(c, 1499) == 0.04);
    CHECK(lr_at(c, 1500) == 0.016);
    CHECK(lr_at(c, 1999) == 0.016);
    CHECK(lr_at(c, 5000) == 0.016);  // held beyond the schedule
}

TEST_CASE("cross entropy against closed forms") {
    // target == probs: loss is the entropy, gradient vanishes.
    Tensor<float> p(Shape{1, 2}, {0.25f, 0.75f});
    auto r = cross_entropy(p, p);
    const double entropy = -(0.25 * std::log(0.25) + 0.75 * std::log(0.75));
    CHECK(r.loss == doctest::Approx(entropy).epsilon(1e-5));
    for (float g : r.dlogits.data) CHECK(g == doctest::Approx(0.0f));

    // one-hot target with probability one half on it: ln 2.
    Tensor<float> p2(Shape{1, 2}, {0.5f, 0.5f});
    Tensor<float> t2(Shape{1, 2}, {1.0f, 0.0f});
    CHECK(cross_entropy(p2, t2).loss == doctest::Approx(std::log(2.0)).epsilon(1e-6));

    // Linearity in the target: a mixed target averages the one-hot losses.
    Tensor<float> p3(Shape{1, 2}, {0.3f, 0.7f});
    Tensor<float> ta(Shape{1, 2}, {1.0f, 0.0f});
    Tensor<float> tb(Shape{1, 2}, {0.0f, 1.0f});
    Tensor<float> tm(Shape{1, 2}, {0.5f, 0.5f});
    double la = cross_entropy(p3, ta).loss;
    double lb = cross_entropy(p3, tb).loss;
    CHECK(cross_entropy(p3, tm).loss == doctest::Approx(0.5 * (la + lb)).epsilon(1e-6));
}

TEST_CASE("sgd step formulas") {
    NetworkConfig nc = tiny_net(3);
    LayerGraph g = build(nc, 3200);
    auto w = init_weights<float>(g, 1);
    auto v = zeros_like(w);
    auto grads = zeros_like(w);
    TrainConfig tc;

    // Zero grads, zero buffers: weights shrink by lr*wd, BN params do not.
    std::vector<float> before;
    for_each_param(g, w, [&](const std::string&, Tensor<float>& t, ParamKind) {
        before.insert(before.end(), t.data.begin(), t.data.end());
    });
    sgd_step(g, w, grads, v, 0.1, tc);
    size_t idx = 0;
    for_each_param(g, w, [&](const std::string&, Tensor<float>& t, ParamKind k) {
        for (float after : t.data) {
            float expect = k == ParamKind::ConvWeight
                               ? before[idx] * (1.0f - 0.1f * static_cast<float>(tc.weight_decay))
                               : before[idx];
            CHECK(after == doctest::Approx(expect).epsilon(1e-6));
            ++idx;
        }
    });

    // Two identical steps: the second update is 1.9x the first (momentum 0.9).
    TrainConfig nodecay = tc;
    nodecay.weight_decay = 0.0;
    auto w2 = init_weights<float>(g, 2);
    auto v2 = zeros_like(w2);
    auto g2 = zeros_like(w2);
    g2.blocks.front().w.data.assign(g2.blocks.front().w.data.size(), 1.0f);
    float start = w2.blocks.front().w.data[0];
    sgd_step(g, w2, g2, v2, 0.01, nodecay);
    float after1 = w2.blocks.front().w.data[0];
    sgd_step(g, w2, g2, v2, 0.01, nodecay);
    float after2 = w2.blocks.front().w.data[0];
    CHECK(start - after1 == doctest::Approx(0.01f));
    CHECK(after1 - after2 == doctest::Approx(0.019f));
}

TEST_CASE("training on the toy corpus is deterministic and logged") {
    TempDir dir("aclnet_trainer_det");
    make_corpus(dir, 2, 4, 1.6, 16000, 7);
    auto index = audio::load_index(dir.file("index.csv"));
    auto [train_set, test_set] = audio::split_folds(index, 0);  // keep all 8 for training
    REQUIRE(train_set.entries.size() == 8);

    NetworkConfig nc = tiny_net(2);
    TrainConfig tc = quick_config(3, 42);

    TrainState s1 = train(nc, dir.path.string(), train_set, test_set, tc);
    TrainState s2 = train(nc, dir.path.string(), train_set, test_set, tc);
    REQUIRE(s1.history.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(s1.history[i].train_loss == s2.history[i].train_loss);  // bitwise
        CHECK(s1.history[i].lr == lr_at(tc, static_cast<int>(i)));
    }
    CHECK(metrics_csv(s1.history) == metrics_csv(s2.history));
    CHECK(metrics_csv(s1.history).substr(0, 38) == "epoch,phase_lr,train_loss,val_accuracy");

    // A different seed takes a different path.
    TrainConfig other = quick_config(3, 43);
    TrainState s3 = train(nc, dir.path.string(), train_set, test_set, other);
    CHECK(s3.history[2].train_loss != s1.history[2].train_loss);
}

TEST_CASE("disabled augmentation and mixup still replay exactly") {
    TempDir dir("aclnet_trainer_plain");
    make_corpus(dir, 2, 3, 1.6, 16000, 11);
    auto index = audio::load_index(dir.file("index.csv"));
    auto [train_set, test_set] = audio::split_folds(index, 0);

    NetworkConfig nc = tiny_net(2);
    nc.dropout_p = 0.0f;
    TrainConfig tc = quick_config(2, 5);
    tc.augment_enabled = false;
    tc.mixup_enabled = false;
    TrainState a = train(nc, dir.path.string(), train_set, test_set, tc);
    TrainState b = train(nc, dir.path.string(), train_set, test_set, tc);
    for (size_t i = 0; i < a.history.size(); ++i)
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
}

TEST_CASE("warm-up epochs match the mixup-disabled path bit for bit") {
    TempDir dir("aclnet_trainer_warm");
    make_corpus(dir, 2, 3, 1.6, 16000, 13);
    auto index = audio::load_index(dir.file("index.csv"));
    auto [train_set, test_set] = audio::split_folds(index, 0);

    NetworkConfig nc = tiny_net(2);
    TrainConfig with_mixup = quick_config(2, 9);
    with_mixup.mixup.warmup_epochs = 100;  // both epochs inside the warm-up
    TrainConfig no_mixup = quick_config(2, 9);
    no_mixup.mixup_enabled = false;

    TrainState a = train(nc, dir.path.string(), train_set, test_set, with_mixup);
    TrainState b = train(nc, dir.path.string(), train_set, test_set, no_mixup);
    for (size_t i = 0; i < a.history.size(); ++i)
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
}

TEST_CASE("evaluation accounting: chance level and confusion row sums") {
    TempDir dir("aclnet_eval");
    // 100 files across 10 classes, random-init model: accuracy should sit
    // near chance, and confusion rows must add up to the per-class counts.
    make_corpus(dir, 10, 10, 0.8, 16000, 17);
    auto index = audio::load_index(dir.file("index.csv"));

    NetworkConfig nc = tiny_net(10);
    LayerGraph g = build(nc, 24000);
    auto weights = init_weights<float>(g, 3);
    ClipCache clips(dir.path.string());
    EvalResult r = evaluate(g, weights, clips, index, 10);
    CHECK(r.total == 100);
    for (int cls = 0; cls < 10; ++cls) {
        int row_sum = 0;
        for (int k = 0; k < 10; ++k) row_sum += r.confusion[static_cast<size_t>(cls)][static_cast<size_t>(k)];
        CHECK(row_sum == 10);
    }
    int diag = 0;
    for (int k = 0; k < 10; ++k) diag += r.confusion[static_cast<size_t>(k)][static_cast<size_t>(k)];
    CHECK(r.correct == diag);
    CHECK(r.accuracy == doctest::Approx(static_cast<double>(diag) / 100));
    CHECK(r.accuracy <= 0.45);  // untrained: nowhere near separable accuracy

    audio::DatasetIndex empty;
    CHECK_THROWS_AS(evaluate(g, weights, clips, empty, 10), data_error);
}

TEST_CASE("five-fold runs emit five accuracies") {
    TempDir dir("aclnet_folds");
    make_corpus(dir, 2, 5, 1.6, 16000, 19);
    auto index = audio::load_index(dir.file("index.csv"));
    NetworkConfig nc = tiny_net(2);
    std::vector<double> accs;
    for (int fold = 1; fold <= 5; ++fold) {
        auto [train_set, test_set] = audio::split_folds(index, fold);
        TrainConfig tc = quick_config(1, 23);
        tc.eval_every = 1;
        TrainState s = train(nc, dir.path.string(), train_set, test_set, tc);
        REQUIRE(s.history.back().has_val);
        accs.push_back(s.history.back().val_accuracy);
    }
    CHECK(accs.size() == 5);
    double mean = 0;
    for (double a : accs) mean += a;
    mean /= 5;
    CHECK(mean >= 0.0);
    CHECK(mean <= 1.0);
}

TEST_CASE("non-finite losses abort with the offending layer named") {
    TempDir dir("aclnet_nan");
    make_corpus(dir, 2, 3, 1.6, 16000, 29);
    auto index = audio::load_index(dir.file("index.csv"));
    auto [train_set, test_set] = audio::split_folds(index, 0);

    NetworkConfig nc = tiny_net(2);
    TrainConfig tc = quick_config(2, 1);
    // Batch norm shrugs off merely huge weights, so drive the first update
    // itself past float range: the second forward then sees inf weights and
    // produces NaN activations.
    tc.lr_phases = {{1e38, 10}};
    tc.weight_decay = 1e30;
    CHECK_THROWS_WITH_AS(train(nc, dir.path.string(), train_set, test_set, tc),
                         doctest::Contains("non-finite"), numeric_error);
}

TEST_CASE("metrics and checkpoints land in the output directory") {
    TempDir dir("aclnet_out");
    make_corpus(dir, 2, 3, 1.6, 16000, 31);
    auto index = audio::load_index(dir.file("index.csv"));
    auto [train_set, test_set] = audio::split_folds(index, 1);

    TempDir out("aclnet_outdir");
    NetworkConfig nc = tiny_net(2);
    TrainConfig tc = quick_config(2, 3);
    tc.eval_every = 1;
    tc.checkpoint_every = 1;
    tc.out_dir = out.path.string();
    TrainState s = train(nc, dir.path.string(), train_set, test_set, tc);
    CHECK(std::filesystem::exists(out.path / "metrics.csv"));
    CHECK(std::filesystem::exists(out.path / "checkpoint_epoch2.aclnet"));
    CHECK(std::filesystem::exists(out.path / "best.aclnet"));
    REQUIRE(s.history.back().has_val);
}

TEST_CASE("BN running stats move in train mode and hold in eval") {
    TempDir dir("aclnet_bnstats");
    make_corpus(dir, 2, 3, 1.6, 16000, 37);
    auto index = audio::load_index(dir.file("index.csv"));
    auto [train_set, test_set] = audio::split_folds(index, 0);

    NetworkConfig nc = tiny_net(2);
    TrainConfig tc = quick_config(1, 4);
    TrainState s = train(nc, dir.path.string(), train_set, test_set, tc);

    LayerGraph g = build(nc, 24000);
    auto snapshot = [&](const ModelState<float>& st) {
        std::vector<float> values;
        for_each_stat(g, const_cast<ModelState<float>&>(st),
                      [&](const std::string&, Tensor<float>& t) {
                          values.insert(values.end(), t.data.begin(), t.data.end());
                      });
        return values;
    };
    auto fresh = init_weights<float>(g, tc.seed);
    CHECK(snapshot(s.weights) != snapshot(fresh));  // training moved the stats

    auto before = snapshot(s.weights);
    ClipCache clips(dir.path.string());
    evaluate(g, s.weights, clips, train_set, 2);
    CHECK(snapshot(s.weights) == before);  // evaluation holds them fixed
}

TEST_CASE("multithreaded execution is bit-identical to single-threaded") {
    NetworkConfig nc = tiny_net(4, 1.0 / 16);
    nc.dropout_p = 0.0f;
    LayerGraph g = build(nc, 8000);
    auto weights = init_weights<float>(g, 6);
    Rng rng(8);
    auto x = Tensor<float>::zeros(Shape{3, 1, 1, 8000});
    for (auto& v : x.data) v = static_cast<float>(rng.uniform(-1, 1));
    auto y = Tensor<float>::zeros(Shape{3, 4});
    for (int n = 0; n < 3; ++n) y.data[static_cast<size_t>(n * 4 + n)] = 1.0f;

    ForwardCache<float> c1, c2;
    auto w1 = weights;
    auto w2 = weights;
    auto p1 = forward(g, w1, x, nn::Mode::Train, nullptr, &c1, /*threads=*/1);
    auto p2 = forward(g, w2, x, nn::Mode::Train, nullptr, &c2, /*threads=*/2);
    CHECK(p1.data == p2.data);

    auto ce1 = cross_entropy(p1, y);
    auto ce2 = cross_entropy(p2, y);
    auto g1 = backward<float>(g, w1, c1, ce1.dlogits, nullptr, 1);
    auto g2 = backward<float>(g, w2, c2, ce2.dlogits, nullptr, 2);
    bool grads_equal = true;
    for_each_param(g, g1, [&](const std::string& name, Tensor<float>& t, ParamKind) {
        for_each_param(g, g2, [&](const std::string& n2, Tensor<float>& t2, ParamKind) {
            if (n2 == name && t.data != t2.data) grads_equal = false;
        });
    });
    CHECK(grads_equal);
}
