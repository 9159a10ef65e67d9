#include "modalkit/dataio.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "modalkit/spectral.hpp"

namespace modalkit::dataio {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'M', 'K', 'A', 'R', 'R', '0', '1', '\n'};

std::uint64_t fnv1a(const unsigned char* data, std::size_t len, std::uint64_t hash = 14695981039346656037ULL) {
    for (std::size_t i = 0; i < len; ++i) {
        hash ^= data[i];
        hash *= 1099511628211ULL;
    }
    return hash;
}

void validate_segment(const std::string& seg) {
    if (seg.empty()) throw DataError("dataset path segment must be non-empty");
    if (seg.find('/') != std::string::npos || seg.find('\\') != std::string::npos)
        throw DataError("dataset path segment must not contain separators: " + seg);
    if (seg == "." || seg == "..") throw DataError("dataset path segment must not be relative");
}

// Scoped advisory lock on <root>/.lock.
class ContainerLock {
 public:
    ContainerLock(const fs::path& root, bool exclusive) {
        fd_ = ::open((root / ".lock").c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ >= 0) ::flock(fd_, exclusive ? LOCK_EX : LOCK_SH);
    }
    ~ContainerLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    ContainerLock(const ContainerLock&) = delete;
    ContainerLock& operator=(const ContainerLock&) = delete;

 private:
    int fd_ = -1;
};

}  // namespace

DatasetPath::DatasetPath(std::vector<std::string> segments) : segments_(std::move(segments)) {
    if (segments_.size() > 6) throw DataError("dataset path has more than six segments");
    for (const auto& s : segments_) validate_segment(s);
    if (segments_.size() == 6 && !is_known_signal(segments_.back()))
        throw DataError("unknown signal kind: " + segments_.back());
}

DatasetPath DatasetPath::leaf(std::string campaign, std::string phase, std::string series,
                              std::string repetition, std::string sensor, std::string signal) {
    return DatasetPath({std::move(campaign), std::move(phase), std::move(series),
                        std::move(repetition), std::move(sensor), std::move(signal)});
}

DatasetPath DatasetPath::parse(const std::string& slash_joined) {
    std::vector<std::string> segments;
    std::stringstream ss(slash_joined);
    std::string seg;
    while (std::getline(ss, seg, '/'))
        if (!seg.empty()) segments.push_back(seg);
    return DatasetPath(std::move(segments));
}

const std::string& DatasetPath::signal() const {
    if (!is_leaf()) throw DataError("path does not address a leaf");
    return segments_.back();
}

std::string DatasetPath::to_string() const {
    std::string out;
    for (const auto& s : segments_) {
        if (!out.empty()) out += '/';
        out += s;
    }
    return out;
}

DatasetPath DatasetPath::child(std::string segment) const {
    auto segs = segments_;
    segs.push_back(std::move(segment));
    return DatasetPath(std::move(segs));
}

bool is_known_signal(const std::string& signal) {
    return signal == "acc" || signal == "force" || signal == "spectra" || signal == "frf" ||
           signal == "coherenceSpectrum";
}

void NodeMetadata::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}

void NodeMetadata::set(const std::string& key, double value) {
    std::ostringstream ss;
    ss.precision(17);
    ss << value;
    entries_[key] = ss.str();
}

bool NodeMetadata::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string& NodeMetadata::get(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw NotFoundError("metadata key not found: " + key);
    return it->second;
}

double NodeMetadata::get_double(const std::string& key) const {
    return std::stod(get(key));
}

Container::Container(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
}

std::filesystem::path Container::leaf_file(const DatasetPath& path) const {
    if (!path.is_leaf()) throw DataError("expected a full six-segment leaf path");
    fs::path p = root_;
    const auto& segs = path.segments();
    for (std::size_t i = 0; i + 1 < segs.size(); ++i) p /= segs[i];
    return p / (segs.back() + ".bin");
}

void Container::write_leaf(const DatasetPath& path, const std::vector<double>& payload,
                           NodeMetadata meta, bool overwrite) {
    if (!meta.has("units")) throw DataError("leaf metadata must carry units");
    const fs::path file = leaf_file(path);

    ContainerLock lock(root_, true);
    if (!overwrite && fs::exists(file))
        throw DataError("leaf already exists (pass overwrite): " + path.to_string());
    fs::create_directories(file.parent_path());

    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + file.string());
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t count = payload.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(double)));
    std::uint64_t hash = fnv1a(reinterpret_cast<const unsigned char*>(&count), sizeof(count));
    hash = fnv1a(reinterpret_cast<const unsigned char*>(payload.data()),
                 payload.size() * sizeof(double), hash);
    out.write(reinterpret_cast<const char*>(&hash), sizeof(hash));
    out.close();

    fs::path meta_file = file;
    meta_file.replace_extension(".meta");
    std::ofstream ms(meta_file, std::ios::trunc);
    for (const auto& [k, v] : meta.entries()) ms << k << " = " << v << '\n';
}

void Container::put(const DatasetPath& path, const TimeSeriesRecord& record, NodeMetadata meta,
                    bool overwrite) {
    const auto& sig = path.signal();
    if (sig != "acc" && sig != "force")
        throw UsageError("time series must be stored under acc or force, got " + sig);
    meta.set("kind", std::string("timeseries"));
    meta.set("sample_rate", record.sample_rate);
    meta.set("channel", record.channel);
    meta.set("units", to_string(record.units));
    write_leaf(path, record.samples, std::move(meta), overwrite);
}

void Container::put(const DatasetPath& path, const Frf& frf, NodeMetadata meta, bool overwrite) {
    if (path.signal() != "frf") throw UsageError("FRF records belong under the frf signal");
    meta.set("input_channel", frf.input_channel);
    meta.set("output_channel", frf.output_channel);
    if (!meta.has("units")) meta.set("units", std::string("g/N"));
    put_complex_spectrum(path, frf.grid, frf.values, std::move(meta), overwrite);
}

void Container::put_complex_spectrum(const DatasetPath& path, const FrequencyGrid& grid,
                                     const std::vector<Complex>& values, NodeMetadata meta,
                                     bool overwrite) {
    const auto& sig = path.signal();
    if (sig != "frf" && sig != "spectra")
        throw UsageError("complex spectra belong under frf or spectra, got " + sig);
    if (values.size() != grid.size()) throw DataError("spectrum length does not match grid");
    meta.set("kind", std::string("complex_spectrum"));
    meta.set("freq_start_hz", grid.front());
    meta.set("freq_spacing_hz", grid.spacing());
    std::vector<double> payload;
    payload.reserve(values.size() * 2);
    for (const auto& v : values) {
        payload.push_back(v.real());
        payload.push_back(v.imag());
    }
    write_leaf(path, payload, std::move(meta), overwrite);
}

void Container::put_real_spectrum(const DatasetPath& path, const FrequencyGrid& grid,
                                  const std::vector<double>& values, NodeMetadata meta,
                                  bool overwrite) {
    const auto& sig = path.signal();
    if (sig != "coherenceSpectrum" && sig != "spectra")
        throw UsageError("real spectra belong under coherenceSpectrum or spectra, got " + sig);
    if (values.size() != grid.size()) throw DataError("spectrum length does not match grid");
    meta.set("kind", std::string("real_spectrum"));
    meta.set("freq_start_hz", grid.front());
    meta.set("freq_spacing_hz", grid.spacing());
    if (!meta.has("units")) meta.set("units", std::string("-"));
    write_leaf(path, values, std::move(meta), overwrite);
}

bool Container::exists(const DatasetPath& path) const {
    return fs::exists(leaf_file(path));
}

LeafData Container::get(const DatasetPath& path) const {
    const fs::path file = leaf_file(path);
    ContainerLock lock(root_, false);
    std::ifstream in(file, std::ios::binary);
    if (!in) throw NotFoundError("leaf not found: " + path.to_string());

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IntegrityError("bad magic in " + file.string());
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    std::vector<double> payload(count);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    std::uint64_t stored_hash = 0;
    in.read(reinterpret_cast<char*>(&stored_hash), sizeof(stored_hash));
    if (!in) throw IntegrityError("truncated leaf " + file.string());
    std::uint64_t hash = fnv1a(reinterpret_cast<const unsigned char*>(&count), sizeof(count));
    hash = fnv1a(reinterpret_cast<const unsigned char*>(payload.data()),
                 payload.size() * sizeof(double), hash);
    if (hash != stored_hash) throw IntegrityError("checksum mismatch in " + file.string());

    NodeMetadata meta;
    fs::path meta_file = file;
    meta_file.replace_extension(".meta");
    std::ifstream ms(meta_file);
    std::string line;
    while (std::getline(ms, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        meta.set(line.substr(0, eq), line.substr(eq + 3));
    }

    LeafData data{path, meta, RealSpectrum{}};
    const auto& sig = path.signal();
    if (sig == "acc" || sig == "force") {
        data.payload = TimeSeriesRecord(std::move(payload), meta.get_double("sample_rate"),
                                        meta.has("channel") ? meta.get("channel") : "",
                                        signal_unit_from_string(meta.get("units")));
    } else if (sig == "frf" || sig == "spectra") {
        if (count % 2 != 0) throw IntegrityError("complex leaf with odd element count");
        std::vector<Complex> values(count / 2);
        for (std::size_t i = 0; i < values.size(); ++i)
            values[i] = Complex(payload[2 * i], payload[2 * i + 1]);
        auto grid = FrequencyGrid::uniform(meta.get_double("freq_start_hz"),
                                           meta.get_double("freq_spacing_hz"), values.size());
        data.payload = ComplexSpectrum{std::move(grid), std::move(values)};
    } else {
        auto grid = FrequencyGrid::uniform(meta.get_double("freq_start_hz"),
                                           meta.get_double("freq_spacing_hz"), payload.size());
        data.payload = RealSpectrum{std::move(grid), std::move(payload)};
    }
    return data;
}

std::vector<DatasetPath> Container::list(const DatasetPath& prefix) const {
    fs::path base = root_;
    for (const auto& seg : prefix.segments()) base /= seg;
    std::vector<DatasetPath> out;
    if (!fs::exists(base)) return out;

    std::vector<std::string> stack = prefix.segments();
    auto walk = [&](auto&& self, const fs::path& dir, std::size_t depth) -> void {
        std::vector<fs::directory_entry> entries{fs::directory_iterator(dir),
                                                 fs::directory_iterator()};
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) { return a.path() < b.path(); });
        for (const auto& e : entries) {
            const auto name = e.path().filename().string();
            if (e.is_directory()) {
                stack.push_back(name);
                self(self, e.path(), depth + 1);
                stack.pop_back();
            } else if (depth == 5 && e.path().extension() == ".bin") {
                stack.push_back(e.path().stem().string());
                out.emplace_back(stack);
                stack.pop_back();
            }
        }
    };
    if (prefix.depth() == 6) {
        if (fs::exists(leaf_file(prefix))) out.push_back(prefix);
        return out;
    }
    walk(walk, base, prefix.depth());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<FrfEstimate> compute_frf_records(
    const std::vector<TimeSeriesRecord>& input_repetitions,
    const std::vector<std::vector<TimeSeriesRecord>>& output_repetitions) {
    if (input_repetitions.empty()) throw DataError("no input repetitions");
    if (output_repetitions.size() != input_repetitions.size())
        throw DataError("input/output repetition counts differ");
    const std::size_t reps = input_repetitions.size();
    const std::size_t channels = output_repetitions.front().size();
    if (channels == 0) throw DataError("no output channels");
    const double fs = input_repetitions.front().sample_rate;
    const std::size_t n = input_repetitions.front().samples.size();
    for (std::size_t r = 0; r < reps; ++r) {
        if (input_repetitions[r].sample_rate != fs || input_repetitions[r].samples.size() != n)
            throw DataError("input repetitions must share sample rate and length");
        if (output_repetitions[r].size() != channels)
            throw DataError("output channel counts differ across repetitions");
        for (const auto& rec : output_repetitions[r])
            if (rec.sample_rate != fs || rec.samples.size() != n)
                throw DataError("output records must match the input sample rate and length");
    }

    // Hann-windowed full-record spectra; window factors cancel in the ratios.
    std::vector<double> window(n);
    for (std::size_t i = 0; i < n; ++i)
        window[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n)));

    const std::size_t nh = n / 2 + 1;
    std::vector<double> sxx(nh, 0.0);
    std::vector<std::vector<Complex>> sxy(channels, std::vector<Complex>(nh, Complex(0, 0)));
    std::vector<std::vector<double>> syy(channels, std::vector<double>(nh, 0.0));

    std::vector<double> buf(n);
    for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t i = 0; i < n; ++i) buf[i] = input_repetitions[r].samples[i] * window[i];
        const auto X = spectral::rfft(buf);
        for (std::size_t i = 0; i < nh; ++i) sxx[i] += std::norm(X[i]);
        for (std::size_t ch = 0; ch < channels; ++ch) {
            for (std::size_t i = 0; i < n; ++i)
                buf[i] = output_repetitions[r][ch].samples[i] * window[i];
            const auto Y = spectral::rfft(buf);
            for (std::size_t i = 0; i < nh; ++i) {
                sxy[ch][i] += std::conj(X[i]) * Y[i];
                syy[ch][i] += std::norm(Y[i]);
            }
        }
    }

    double sxx_max = 0.0;
    for (double v : sxx) sxx_max = std::max(sxx_max, v);
    const double floor_level = sxx_max * 1e-14;

    auto grid = FrequencyGrid::uniform(0.0, fs / static_cast<double>(n), nh);
    std::vector<FrfEstimate> estimates;
    estimates.reserve(channels);
    for (std::size_t ch = 0; ch < channels; ++ch) {
        std::vector<Complex> h(nh, Complex(0, 0));
        std::vector<double> coh(nh, 0.0);
        for (std::size_t i = 0; i < nh; ++i) {
            if (sxx[i] > floor_level) {
                h[i] = sxy[ch][i] / sxx[i];
                const double denom = sxx[i] * syy[ch][i];
                if (denom > 0.0)
                    coh[i] = std::min(1.0, std::max(0.0, std::norm(sxy[ch][i]) / denom));
            }
        }
        FrfEstimate est{Frf(grid, std::move(h), input_repetitions.front().channel,
                            output_repetitions.front()[ch].channel),
                        false};
        if (reps == 1) {
            std::fill(coh.begin(), coh.end(), 1.0);
            est.degenerate_coherence = true;
        }
        est.frf.set_coherence(std::move(coh));
        estimates.push_back(std::move(est));
    }
    return estimates;
}

std::vector<FrfEstimate> compute_frf_records(const TimeSeriesRecord& input,
                                             const std::vector<TimeSeriesRecord>& outputs) {
    return compute_frf_records(std::vector<TimeSeriesRecord>{input}, {outputs});
}

}  // namespace modalkit::dataio
