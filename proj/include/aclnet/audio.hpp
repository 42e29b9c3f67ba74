#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "aclnet/rng.hpp"

namespace aclnet::audio {

// Mono waveform in [-1,1].
struct AudioClip {
    std::vector<float> samples;
    int sample_rate = 16000;

    double duration() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

// RIFF/WAVE PCM16 little-endian reader. 'fmt ' and 'data' chunks are
// required, other chunks are skipped. Stereo is averaged to mono; samples are
// scaled by 1/32768. Decode errors name the byte offset.
AudioClip load_wav(const std::string& path);

// PCM16 mono writer (round(x*32768), clamped). Used by augment-preview and
// the test corpora.
void save_wav(const AudioClip& clip, const std::string& path);

// Remove leading/trailing runs below threshold_db relative to the clip peak
// (default -60 dB). Interior samples are untouched. All-silent input is an
// error.
AudioClip trim_silence(const AudioClip& clip, double threshold_db = -60.0);

// Zero mean, unit standard deviation (population sigma). Constant input is a
// degenerate-input error.
AudioClip normalize(const AudioClip& clip);

// out[i] = lerp(in, i*factor) for i while i*factor <= len-1. factor > 1
// shortens the clip and raises pitch.
AudioClip resample_linear(const AudioClip& clip, double factor);

// Contiguous window at a uniform random offset. Clips shorter than the
// request are cyclically tiled to length first.
AudioClip random_crop(const AudioClip& clip, double seconds, Rng& rng);

AudioClip apply_gain(const AudioClip& clip, double gain_db);

struct AugmentConfig {
    double crop_seconds = 1.5;
    double pre_crop_seconds = 2.0;
    double resample_lo = 0.8, resample_hi = 1.25;
    double gain_lo_db = -6.0, gain_hi_db = 6.0;

    void validate() const;  // crop must stay satisfiable after the fastest resample
};

// The random draws of one augmentation, in draw order.
struct AugmentDraws {
    double segment_offset_seconds = 0;
    double resample_factor = 1;
    double crop_offset_seconds = 0;
    double gain_db = 0;
};

// Training-time pipeline: random pre-crop window -> normalize -> random
// resample -> crop to the target length -> random gain. Output length is
// exactly crop_seconds * rate. The test-time path is normalize() alone on the
// whole file.
AudioClip augment_example(const AudioClip& clip, const AugmentConfig& config, Rng& rng,
                          AugmentDraws* draws = nullptr);

struct IndexEntry {
    std::string filename;
    int fold = 0;
    int target = 0;
    std::string category;
};

struct DatasetIndex {
    std::vector<IndexEntry> entries;
};

// CSV with columns filename,fold,target,category (extra columns ignored,
// header required). Errors name the row number. Duplicate filenames are
// accepted.
DatasetIndex load_index(const std::string& csv_path);

// test = entries with fold == test_fold, train = the rest. A test_fold no
// entry carries (e.g. 0) yields an empty test set and a full train set.
std::pair<DatasetIndex, DatasetIndex> split_folds(const DatasetIndex& index, int test_fold);

}  // namespace aclnet::audio
