#include "aclnet/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "aclnet/errors.hpp"

namespace aclnet::audio {

namespace {

uint16_t read_u16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }
uint32_t read_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

[[noreturn]] void decode_fail(const std::string& path, size_t offset, const std::string& what) {
    throw data_error(path + ": " + what + " at offset " + std::to_string(offset));
}

}  // namespace

AudioClip load_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open wav file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    if (bytes.size() < 12) decode_fail(path, 0, "file too short for a RIFF header");
    if (std::memcmp(bytes.data(), "RIFF", 4) != 0) decode_fail(path, 0, "bad RIFF magic");
    if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) decode_fail(path, 8, "bad WAVE tag");

    bool have_fmt = false;
    uint16_t channels = 0, bits = 0, format = 0;
    uint32_t rate = 0;
    size_t data_off = 0, data_len = 0;

    size_t off = 12;
    while (off + 8 <= bytes.size()) {
        const uint8_t* hdr = bytes.data() + off;
        uint32_t chunk_len = read_u32(hdr + 4);
        size_t body = off + 8;
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (body + 16 > bytes.size()) decode_fail(path, body, "truncated fmt chunk");
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data_off = body;
            data_len = chunk_len;
        }
        off = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
    }

    if (!have_fmt) decode_fail(path, 12, "missing fmt chunk");
    if (data_off == 0) decode_fail(path, 12, "missing data chunk");
    if (format != 1) decode_fail(path, data_off, "unsupported codec " + std::to_string(format) +
                                                     " (PCM required)");
    if (bits != 16) decode_fail(path, data_off, "unsupported bit depth " + std::to_string(bits));
    if (channels < 1 || channels > 2)
        decode_fail(path, data_off, "unsupported channel count " + std::to_string(channels));
    if (data_off + data_len > bytes.size())
        decode_fail(path, bytes.size(),
                    "truncated data chunk: need " + std::to_string(data_off + data_len) + " bytes");

    const size_t frame_bytes = 2u * channels;
    const size_t frames = data_len / frame_bytes;
    AudioClip clip;
    clip.sample_rate = static_cast<int>(rate);
    clip.samples.resize(frames);
    const uint8_t* p = bytes.data() + data_off;
    for (size_t i = 0; i < frames; ++i) {
        float acc = 0;
        for (uint16_t c = 0; c < channels; ++c) {
            int16_t v = static_cast<int16_t>(read_u16(p + i * frame_bytes + 2u * c));
            acc += static_cast<float>(v) / 32768.0f;
        }
        clip.samples[i] = acc / channels;
    }
    return clip;
}

void save_wav(const AudioClip& clip, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open for writing: " + path);
    const uint32_t data_len = static_cast<uint32_t>(clip.samples.size() * 2);
    auto w16 = [&](uint16_t v) { f.put(static_cast<char>(v & 0xff)); f.put(static_cast<char>(v >> 8)); };
    auto w32 = [&](uint32_t v) { w16(static_cast<uint16_t>(v & 0xffff)); w16(static_cast<uint16_t>(v >> 16)); };
    f.write("RIFF", 4);
    w32(36 + data_len);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    w32(16);
    w16(1);  // PCM
    w16(1);  // mono
    w32(static_cast<uint32_t>(clip.sample_rate));
    w32(static_cast<uint32_t>(clip.sample_rate) * 2);
    w16(2);
    w16(16);
    f.write("data", 4);
    w32(data_len);
    for (float s : clip.samples) {
        long v = std::lround(static_cast<double>(s) * 32768.0);
        v = std::clamp(v, -32768l, 32767l);
        w16(static_cast<uint16_t>(static_cast<int16_t>(v)));
    }
    if (!f) throw data_error("write failed: " + path);
}

AudioClip trim_silence(const AudioClip& clip, double threshold_db) {
    if (clip.samples.empty()) throw data_error("trim_silence: empty clip");
    float peak = 0;
    for (float s : clip.samples) peak = std::max(peak, std::abs(s));
    if (peak == 0.0f) throw data_error("trim_silence: clip is entirely silent");
    const float thresh = peak * static_cast<float>(std::pow(10.0, threshold_db / 20.0));
    size_t first = 0, last = clip.samples.size();
    while (first < clip.samples.size() && std::abs(clip.samples[first]) < thresh) ++first;
    while (last > first && std::abs(clip.samples[last - 1]) < thresh) --last;
    if (first >= last) throw data_error("trim_silence: clip is entirely below threshold");
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.samples.assign(clip.samples.begin() + static_cast<long>(first),
                       clip.samples.begin() + static_cast<long>(last));
    return out;
}

AudioClip normalize(const AudioClip& clip) {
    if (clip.samples.empty()) throw data_error("normalize: empty clip");
    double mean = 0;
    for (float s : clip.samples) mean += s;
    mean /= static_cast<double>(clip.samples.size());
    double var = 0;
    for (float s : clip.samples) {
        double d = s - mean;
        var += d * d;
    }
    var /= static_cast<double>(clip.samples.size());
    if (var <= 0) throw data_error("normalize: zero variance (constant input)");
    const double inv = 1.0 / std::sqrt(var);
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.samples.resize(clip.samples.size());
    for (size_t i = 0; i < clip.samples.size(); ++i)
        out.samples[i] = static_cast<float>((clip.samples[i] - mean) * inv);
    return out;
}

AudioClip resample_linear(const AudioClip& clip, double factor) {
    if (!(factor > 0)) throw data_error("resample factor must be > 0");
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    if (clip.samples.empty()) return out;
    const double last = static_cast<double>(clip.samples.size() - 1);
    const size_t out_len = static_cast<size_t>(std::floor(last / factor)) + 1;
    out.samples.resize(out_len);
    for (size_t i = 0; i < out_len; ++i) {
        const double pos = static_cast<double>(i) * factor;
        const size_t i0 = static_cast<size_t>(pos);
        const double frac = pos - static_cast<double>(i0);
        const float a = clip.samples[i0];
        const float b = i0 + 1 < clip.samples.size() ? clip.samples[i0 + 1] : a;
        out.samples[i] = static_cast<float>(a + (b - a) * frac);
    }
    return out;
}

namespace {

AudioClip tile_to_length(const AudioClip& clip, size_t target) {
    if (clip.samples.empty()) throw data_error("cannot tile an empty clip");
    if (clip.samples.size() >= target) return clip;
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.samples.resize(target);
    for (size_t i = 0; i < target; ++i) out.samples[i] = clip.samples[i % clip.samples.size()];
    return out;
}

}  // namespace

AudioClip random_crop(const AudioClip& clip, double seconds, Rng& rng) {
    const size_t want = static_cast<size_t>(std::llround(seconds * clip.sample_rate));
    AudioClip src = tile_to_length(clip, want);
    const size_t slack = src.samples.size() - want;
    const size_t offset = slack ? static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(slack) + 1)) : 0;
    AudioClip out;
    out.sample_rate = src.sample_rate;
    out.samples.assign(src.samples.begin() + static_cast<long>(offset),
                       src.samples.begin() + static_cast<long>(offset + want));
    return out;
}

AudioClip apply_gain(const AudioClip& clip, double gain_db) {
    const float g = static_cast<float>(std::pow(10.0, gain_db / 20.0));
    AudioClip out = clip;
    for (float& s : out.samples) s *= g;
    return out;
}

void AugmentConfig::validate() const {
    if (!(resample_lo > 0) || !(resample_hi >= resample_lo))
        throw config_error("resample range must be positive and ordered");
    if (pre_crop_seconds / resample_hi < crop_seconds)
        throw config_error("crop of " + std::to_string(crop_seconds) +
                           " s is not satisfiable after the fastest resample (" +
                           std::to_string(pre_crop_seconds / resample_hi) + " s remain)");
}

AudioClip augment_example(const AudioClip& clip, const AugmentConfig& config, Rng& rng,
                          AugmentDraws* draws) {
    config.validate();
    if (clip.samples.empty()) throw data_error("augment_example: empty clip");

    // Draw order is fixed: segment offset, resample factor, crop offset, gain.
    const size_t pre_len = static_cast<size_t>(std::llround(config.pre_crop_seconds * clip.sample_rate));
    AudioClip src = tile_to_length(clip, pre_len);
    const size_t slack = src.samples.size() - pre_len;
    const size_t seg_off = slack ? static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(slack) + 1)) : 0;
    AudioClip segment;
    segment.sample_rate = src.sample_rate;
    segment.samples.assign(src.samples.begin() + static_cast<long>(seg_off),
                           src.samples.begin() + static_cast<long>(seg_off + pre_len));

    segment = normalize(segment);

    const double factor = rng.uniform(config.resample_lo, config.resample_hi);
    segment = resample_linear(segment, factor);

    const size_t want = static_cast<size_t>(std::llround(config.crop_seconds * clip.sample_rate));
    segment = tile_to_length(segment, want);
    const size_t crop_slack = segment.samples.size() - want;
    const size_t crop_off =
        crop_slack ? static_cast<size_t>(rng.uniform_int(static_cast<int64_t>(crop_slack) + 1)) : 0;
    AudioClip cropped;
    cropped.sample_rate = segment.sample_rate;
    cropped.samples.assign(segment.samples.begin() + static_cast<long>(crop_off),
                           segment.samples.begin() + static_cast<long>(crop_off + want));

    const double gain_db = rng.uniform(config.gain_lo_db, config.gain_hi_db);
    cropped = apply_gain(cropped, gain_db);

    if (draws) {
        draws->segment_offset_seconds = static_cast<double>(seg_off) / clip.sample_rate;
        draws->resample_factor = factor;
        draws->crop_offset_seconds = static_cast<double>(crop_off) / clip.sample_rate;
        draws->gain_db = gain_db;
    }
    return cropped;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

int parse_int_field(const std::string& s, const std::string& what, int row) {
    try {
        size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw data_error("index row " + std::to_string(row) + ": bad " + what + " value '" + s + "'");
    }
}

}  // namespace

DatasetIndex load_index(const std::string& csv_path) {
    std::ifstream f(csv_path);
    if (!f) throw data_error("cannot open index: " + csv_path);
    std::string line;
    if (!std::getline(f, line)) throw data_error("index is empty: " + csv_path);
    auto header = split_csv_line(line);
    auto col = [&](const std::string& name) {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw data_error("index is missing column '" + name + "': " + csv_path);
    };
    const int c_file = col("filename"), c_fold = col("fold"), c_target = col("target"),
              c_cat = col("category");

    DatasetIndex index;
    int row = 1;
    while (std::getline(f, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        int max_col = std::max(std::max(c_file, c_fold), std::max(c_target, c_cat));
        if (static_cast<int>(fields.size()) <= max_col)
            throw data_error("index row " + std::to_string(row) + ": expected at least " +
                             std::to_string(max_col + 1) + " columns");
        IndexEntry e;
        e.filename = fields[static_cast<size_t>(c_file)];
        e.fold = parse_int_field(fields[static_cast<size_t>(c_fold)], "fold", row);
        e.target = parse_int_field(fields[static_cast<size_t>(c_target)], "target", row);
        e.category = fields[static_cast<size_t>(c_cat)];
        if (e.fold < 1 || e.fold > 5)
            throw data_error("index row " + std::to_string(row) + ": fold " +
                             std::to_string(e.fold) + " outside 1..5");
        if (e.target < 0)
            throw data_error("index row " + std::to_string(row) + ": negative target " +
                             std::to_string(e.target));
        index.entries.push_back(std::move(e));
    }
    return index;
}

std::pair<DatasetIndex, DatasetIndex> split_folds(const DatasetIndex& index, int test_fold) {
    DatasetIndex train, test;
    for (const auto& e : index.entries)
        (e.fold == test_fold ? test : train).entries.push_back(e);
    return {train, test};
}

}  // namespace aclnet::audio
