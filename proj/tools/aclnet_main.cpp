// Command-line front end: complexity analysis, training, inference,
// augmentation preview and evaluation.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric abort.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aclnet/complexity.hpp"
#include "aclnet/model_store.hpp"
#include "aclnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace aclnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct NetOptions {
    int rate = 16000;
    std::string conv_type = "dwsc";
    double wm = 1.0;
    int num_classes = -1;  // -1: from the index

    NetworkConfig to_config() const {
        NetworkConfig c = NetworkConfig::defaults(parse_conv_type(conv_type), rate);
        c.set_width_multiplier(wm);
        if (num_classes > 0) c.num_classes = num_classes;
        return c;
    }
};

void add_net_options(CLI::App* cmd, NetOptions& net) {
    cmd->add_option("--rate", net.rate, "Sample rate (16000 or 44100)")
        ->check(CLI::IsMember({16000, 44100}));
    cmd->add_option("--conv-type", net.conv_type, "Convolution form: sc or dwsc")
        ->check(CLI::IsMember({"sc", "dwsc"}));
}

// Flat key=value config files. CLI11 only applies set_config() at the root
// app, so apply the file by hand after parsing: any option the command line
// did not set takes its value from the file (precedence CLI > file > default).
struct ConfigFileOption {
    CLI::App* cmd;
    std::string path;
};
std::deque<ConfigFileOption> g_config_files;  // stable addresses for CLI11 bindings

void enable_config_file(CLI::App* cmd) {
    g_config_files.push_back({cmd, ""});
    auto* slot = &g_config_files.back().path;
    cmd->add_option("--config", *slot, "Read options from a flat key=value file");
}

void apply_config_files() {
    for (auto& [cmd, path] : g_config_files) {
        if (path.empty() || !cmd->parsed()) continue;
        std::ifstream f(path);
        if (!f) throw data_error("cannot open config file: " + path);
        std::string line;
        int line_no = 0;
        while (std::getline(f, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error(path + ":" + std::to_string(line_no) +
                                   ": expected key=value, got '" + line + "'");
            std::string key = line.substr(0, eq);
            std::string value = line.substr(eq + 1);
            CLI::Option* opt = cmd->get_option_no_throw("--" + key);
            if (!opt)
                throw config_error(path + ":" + std::to_string(line_no) + ": unknown key '" + key +
                                   "'");
            if (opt->count() > 0) continue;  // command line wins
            opt->add_result(value);
            opt->run_callback();
        }
    }
}

int run_analyze(const std::vector<double>& wms, const NetOptions& net, bool paper_grid,
                double input_seconds, const std::string& csv_path) {
    std::vector<NetworkConfig> configs;
    if (paper_grid) {
        configs = paper_grid_configs();
        auto grid = sweep_grid_configs();
        configs.insert(configs.end(), grid.begin(), grid.end());
    } else {
        for (double wm : wms.empty() ? std::vector<double>{1.0} : wms) {
            NetworkConfig c = NetworkConfig::defaults(parse_conv_type(net.conv_type), net.rate);
            c.set_width_multiplier(wm);
            configs.push_back(c);
        }
    }
    auto rows = sweep(configs, input_seconds);
    std::cout << sweep_table(rows);
    if (!csv_path.empty()) {
        std::ofstream f(csv_path, std::ios::trunc);
        if (!f) throw data_error("cannot write " + csv_path);
        f << sweep_csv(rows);
        std::cout << "wrote " << csv_path << "\n";
    }
    return kExitOk;
}

int run_train(const std::string& data_dir, const std::string& index_path, const std::string& fold,
              const NetOptions& net, TrainConfig tc, const std::string& out_dir,
              const std::string& lr_phases) {
    if (!lr_phases.empty()) {
        tc.lr_phases.clear();
        std::istringstream is(lr_phases);
        std::string part;
        while (std::getline(is, part, ',')) {
            auto colon = part.find(':');
            if (colon == std::string::npos)
                throw config_error("--lr-phases expects rate:epochs[,rate:epochs...]");
            tc.lr_phases.emplace_back(std::stod(part.substr(0, colon)),
                                      std::stoi(part.substr(colon + 1)));
        }
    }
    std::cout << "seed = " << tc.seed << "\n";

    audio::DatasetIndex index = audio::load_index(index_path);
    NetOptions resolved = net;
    if (resolved.num_classes <= 0) {
        int max_target = 0;
        for (const auto& e : index.entries) max_target = std::max(max_target, e.target);
        resolved.num_classes = max_target + 1;
    }
    NetworkConfig config = resolved.to_config();

    auto run_fold = [&](int test_fold, const std::string& dir) {
        auto [train_set, test_set] = audio::split_folds(index, test_fold);
        TrainConfig fold_tc = tc;
        fold_tc.out_dir = dir;
        TrainState state = train(config, data_dir, train_set, test_set, fold_tc);
        double acc = -1;
        for (auto it = state.history.rbegin(); it != state.history.rend(); ++it)
            if (it->has_val) {
                acc = it->val_accuracy;
                break;
            }
        if (!dir.empty()) {
            LayerGraph graph = build(config, static_cast<int64_t>(std::llround(
                                                 tc.augment.crop_seconds * config.sample_rate)));
            save_model(config, graph, state.weights, (fs::path(dir) / "final.aclnet").string());
        }
        return acc;
    };

    if (fold == "all") {
        std::vector<double> accs;
        for (int f = 1; f <= 5; ++f) {
            std::string dir =
                out_dir.empty() ? "" : (fs::path(out_dir) / ("fold" + std::to_string(f))).string();
            double acc = run_fold(f, dir);
            std::cout << "fold " << f << " accuracy: " << acc << "\n";
            accs.push_back(acc);
        }
        double mean = 0;
        for (double a : accs) mean += a;
        std::cout << "mean accuracy: " << mean / 5 << "\n";
    } else {
        int test_fold = std::stoi(fold);
        if (test_fold < 0 || test_fold > 5) throw config_error("--fold must be 0..5 or 'all'");
        double acc = run_fold(test_fold, out_dir);
        if (acc >= 0) std::cout << "final accuracy: " << acc << "\n";
    }
    return kExitOk;
}

int run_infer(const std::string& model_path, const std::string& wav_path, int top_k) {
    auto [config, state] = load_model(model_path);
    LayerGraph graph = build(config, static_cast<int64_t>(config.sample_rate));

    audio::AudioClip clip = audio::load_wav(wav_path);
    if (clip.sample_rate != config.sample_rate)
        throw data_error(wav_path + ": sample rate " + std::to_string(clip.sample_rate) +
                         " does not match the model's " + std::to_string(config.sample_rate));
    clip = audio::normalize(clip);
    if (static_cast<int64_t>(clip.samples.size()) < graph.min_input_len)
        throw data_error(wav_path + ": " + std::to_string(clip.samples.size()) +
                         " samples is shorter than one frame (" +
                         std::to_string(graph.min_input_len) + " needed)");

    const int64_t len = static_cast<int64_t>(clip.samples.size());
    Tensor<float> x(Shape{1, 1, 1, len}, std::move(clip.samples));
    Tensor<float> probs = forward_infer(graph, state, x);

    std::vector<int> order(static_cast<size_t>(config.num_classes));
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return probs.data[static_cast<size_t>(a)] > probs.data[static_cast<size_t>(b)];
    });
    const int k = std::min<int>(top_k, config.num_classes);
    for (int i = 0; i < k; ++i) {
        std::printf("class %d  %.6f\n", order[static_cast<size_t>(i)],
                    probs.data[static_cast<size_t>(order[static_cast<size_t>(i)])]);
    }
    return kExitOk;
}

int run_augment_preview(const std::string& wav_path, uint64_t seed, int count,
                        const std::string& out_dir) {
    std::cout << "seed = " << seed << "\n";
    audio::AudioClip clip = audio::load_wav(wav_path);
    audio::AugmentConfig cfg;
    fs::create_directories(out_dir);
    Rng root(seed);
    for (int i = 0; i < count; ++i) {
        Rng rng = root.derive({stream::kAugment, static_cast<uint64_t>(i)});
        audio::AugmentDraws draws;
        audio::AudioClip out = audio::augment_example(clip, cfg, rng, &draws);
        char name[128];
        std::snprintf(name, sizeof(name), "preview_seed%llu_%03d_f%.4f_g%+.2fdB.wav",
                      static_cast<unsigned long long>(seed), i, draws.resample_factor,
                      draws.gain_db);
        audio::save_wav(out, (fs::path(out_dir) / name).string());
        std::cout << name << "\n";
    }
    return kExitOk;
}

int run_eval(const std::string& model_path, const std::string& data_dir,
             const std::string& index_path, int fold) {
    auto [config, state] = load_model(model_path);
    LayerGraph graph = build(config, static_cast<int64_t>(config.sample_rate));
    audio::DatasetIndex index = audio::load_index(index_path);
    auto [train_set, test_set] = audio::split_folds(index, fold);
    ClipCache clips(data_dir);
    EvalResult r = evaluate(graph, state, clips, test_set, config.num_classes);
    std::printf("accuracy: %.4f (%d/%d)\n", r.accuracy, r.correct, r.total);
    std::printf("per-class correct/total:\n");
    for (int c = 0; c < config.num_classes; ++c) {
        int row_total = 0;
        for (int k = 0; k < config.num_classes; ++k)
            row_total += r.confusion[static_cast<size_t>(c)][static_cast<size_t>(k)];
        if (row_total == 0) continue;
        std::printf("  class %d: %d/%d\n", c,
                    r.confusion[static_cast<size_t>(c)][static_cast<size_t>(c)], row_total);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AclNet audio classification engine"};
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Parameter and MAC analysis");
    NetOptions a_net;
    std::vector<double> a_wms;
    bool a_paper_grid = false;
    double a_seconds = kReferenceWindowSeconds;
    std::string a_csv;
    add_net_options(analyze, a_net);
    analyze->add_option("--wm", a_wms, "Width multiplier (repeatable)")
        ->check(CLI::PositiveNumber);
    analyze->add_flag("--paper-grid", a_paper_grid,
                      "Emit the published configuration grid plus the full sweep");
    analyze->add_option("--input-seconds", a_seconds, "Reference window length")
        ->check(CLI::PositiveNumber);
    analyze->add_option("--csv", a_csv, "Also write rows to this CSV file");
    enable_config_file(analyze);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model");
    NetOptions t_net;
    std::string t_data, t_index, t_fold = "1", t_out, t_lr_phases;
    TrainConfig tc;
    train_cmd->add_option("--data", t_data, "Directory holding the wav files")->required();
    train_cmd->add_option("--index", t_index, "Index CSV (filename,fold,target,category)")
        ->required();
    train_cmd->add_option("--fold", t_fold, "Held-out fold 1..5, 0 for none, or 'all'");
    add_net_options(train_cmd, t_net);
    train_cmd->add_option("--wm", t_net.wm, "Width multiplier")->check(CLI::PositiveNumber);
    train_cmd->add_option("--num-classes", t_net.num_classes, "Class count (default: from index)");
    train_cmd->add_option("--epochs", tc.epochs, "Total training epochs");
    train_cmd->add_option("--seed", tc.seed, "RNG seed (default 0, printed on startup)");
    train_cmd->add_option("--out", t_out, "Output directory for metrics and checkpoints");
    train_cmd->add_option("--batch-size", tc.batch_size, "Examples per step");
    train_cmd->add_option("--eval-every", tc.eval_every, "Evaluation cadence in epochs");
    train_cmd->add_option("--checkpoint-every", tc.checkpoint_every, "Checkpoint cadence");
    train_cmd->add_option("--threads", tc.threads, "Worker threads (1 = strict replay mode)");
    train_cmd->add_option("--mixup-alpha", tc.mixup.alpha, "Mixup Beta(a,a) parameter");
    train_cmd->add_option("--mixup-warmup", tc.mixup.warmup_epochs,
                          "Epochs before mixup activates");
    bool no_mixup = false, no_augment = false;
    train_cmd->add_flag("--no-mixup", no_mixup, "Disable mixup entirely");
    train_cmd->add_flag("--no-augment", no_augment, "Disable waveform augmentation");
    train_cmd->add_option("--lr-phases", t_lr_phases, "Override schedule: rate:epochs[,...]");
    enable_config_file(train_cmd);

    // infer
    auto* infer = app.add_subcommand("infer", "Classify one wav file");
    std::string i_model, i_wav;
    int i_top = 5;
    infer->add_option("--model", i_model, "Model file")->required();
    infer->add_option("--wav", i_wav, "Input wav")->required();
    infer->add_option("--top", i_top, "How many classes to print")->check(CLI::PositiveNumber);
    enable_config_file(infer);

    // augment-preview
    auto* preview = app.add_subcommand("augment-preview", "Write augmented variants of a wav");
    std::string p_wav, p_out;
    uint64_t p_seed = 0;
    int p_count = 8;
    preview->add_option("--wav", p_wav, "Input wav")->required();
    preview->add_option("--seed", p_seed, "RNG seed (default 0, printed on startup)");
    preview->add_option("--count", p_count, "Number of variants")->check(CLI::PositiveNumber);
    preview->add_option("--out", p_out, "Output directory")->required();
    enable_config_file(preview);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on one fold");
    std::string e_model, e_data, e_index;
    int e_fold = 1;
    eval_cmd->add_option("--model", e_model, "Model file")->required();
    eval_cmd->add_option("--data", e_data, "Directory holding the wav files")->required();
    eval_cmd->add_option("--index", e_index, "Index CSV")->required();
    eval_cmd->add_option("--fold", e_fold, "Fold to evaluate")->check(CLI::Range(1, 5));
    enable_config_file(eval_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // help text, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        apply_config_files();
        if (*analyze) return run_analyze(a_wms, a_net, a_paper_grid, a_seconds, a_csv);
        if (*train_cmd) {
            tc.mixup_enabled = !no_mixup;
            tc.augment_enabled = !no_augment;
            return run_train(t_data, t_index, t_fold, t_net, tc, t_out, t_lr_phases);
        }
        if (*infer) return run_infer(i_model, i_wav, i_top);
        if (*preview) return run_augment_preview(p_wav, p_seed, p_count, p_out);
        if (*eval_cmd) return run_eval(e_model, e_data, e_index, e_fold);
    } catch (const numeric_error& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const error& e) {  // data, shape, state
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
