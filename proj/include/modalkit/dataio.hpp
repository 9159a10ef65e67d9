#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "modalkit/types.hpp"

namespace modalkit::dataio {

/// Hierarchical address campaign/phase/series/repetition/sensor/signal.
/// Partial paths (fewer trailing segments) address interior nodes.
class DatasetPath {
 public:
    DatasetPath() = default;
    explicit DatasetPath(std::vector<std::string> segments);

    static DatasetPath leaf(std::string campaign, std::string phase, std::string series,
                            std::string repetition, std::string sensor, std::string signal);
    static DatasetPath parse(const std::string& slash_joined);

    const std::vector<std::string>& segments() const { return segments_; }
    std::size_t depth() const { return segments_.size(); }
    bool is_leaf() const { return segments_.size() == 6; }
    const std::string& signal() const;
    std::string to_string() const;

    DatasetPath child(std::string segment) const;

    bool operator==(const DatasetPath& other) const { return segments_ == other.segments_; }
    bool operator<(const DatasetPath& other) const { return segments_ < other.segments_; }

 private:
    std::vector<std::string> segments_;
};

/// Valid leaf signal names.
bool is_known_signal(const std::string& signal);

/// Flat key/value metadata stored beside each leaf.
class NodeMetadata {
 public:
    NodeMetadata() = default;

    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
    std::map<std::string, std::string> entries_;
};

struct ComplexSpectrum {
    FrequencyGrid grid;
    std::vector<Complex> values;
};

struct RealSpectrum {
    FrequencyGrid grid;
    std::vector<double> values;
};

using LeafPayload = std::variant<TimeSeriesRecord, ComplexSpectrum, RealSpectrum>;

struct LeafData {
    DatasetPath path;
    NodeMetadata meta;
    LeafPayload payload;
};

/// On-disk dataset container: one directory per path segment, leaves as
/// checksummed little-endian float64 arrays with `key = value` sidecars.
/// Writers hold a container-level advisory lock.
class Container {
 public:
    explicit Container(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    void put(const DatasetPath& path, const TimeSeriesRecord& record, NodeMetadata meta,
             bool overwrite = false);
    void put(const DatasetPath& path, const Frf& frf, NodeMetadata meta, bool overwrite = false);
    void put_complex_spectrum(const DatasetPath& path, const FrequencyGrid& grid,
                              const std::vector<Complex>& values, NodeMetadata meta,
                              bool overwrite = false);
    void put_real_spectrum(const DatasetPath& path, const FrequencyGrid& grid,
                           const std::vector<double>& values, NodeMetadata meta,
                           bool overwrite = false);

    LeafData get(const DatasetPath& path) const;
    bool exists(const DatasetPath& path) const;

    /// Complete lexicographic enumeration of leaves under the prefix.
    std::vector<DatasetPath> list(const DatasetPath& prefix = DatasetPath()) const;

 private:
    void write_leaf(const DatasetPath& path, const std::vector<double>& payload,
                    NodeMetadata meta, bool overwrite);
    std::filesystem::path leaf_file(const DatasetPath& path) const;

    std::filesystem::path root_;
};

struct FrfEstimate {
    Frf frf;
    bool degenerate_coherence = false;  // single repetition, coherence forced to 1
};

/// H1 frequency response estimates with coherence, averaged over
/// repetitions: one estimate per output channel. Spectra use a Hann window
/// over the full record.
std::vector<FrfEstimate> compute_frf_records(
    const std::vector<TimeSeriesRecord>& input_repetitions,
    const std::vector<std::vector<TimeSeriesRecord>>& output_repetitions);

/// Single-repetition convenience overload.
std::vector<FrfEstimate> compute_frf_records(const TimeSeriesRecord& input,
                                             const std::vector<TimeSeriesRecord>& outputs);

}  // namespace modalkit::dataio
