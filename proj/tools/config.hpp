#pragma once

#include <map>
#include <string>
#include <vector>

#include "modalkit/errors.hpp"

namespace modalkit::cli {

/// Command parameters: declared defaults, overridden by a `key = value`
/// config file and then by --set flags. Unknown keys are usage errors.
class Params {
 public:
    explicit Params(std::map<std::string, std::string> defaults)
        : values_(std::move(defaults)) {}

    void load_file(const std::string& path);
    void apply_override(const std::string& key_equals_value);

    const std::string& str(const std::string& key) const;
    double num(const std::string& key) const;
    long integer(const std::string& key) const;
    bool flag(const std::string& key) const;

    /// Comma-separated list of numbers.
    std::vector<double> num_list(const std::string& key) const;
    std::vector<std::string> str_list(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }

 private:
    void set_checked(const std::string& key, const std::string& value);
    std::map<std::string, std::string> values_;
};

}  // namespace modalkit::cli
