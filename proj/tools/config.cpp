#include "config.hpp"

#include <fstream>
#include <sstream>

namespace modalkit::cli {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

void Params::set_checked(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown parameter: " + key);
    it->second = value;
}

void Params::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        set_checked(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void Params::apply_override(const std::string& key_equals_value) {
    const auto eq = key_equals_value.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value");
    set_checked(trim(key_equals_value.substr(0, eq)), trim(key_equals_value.substr(eq + 1)));
}

const std::string& Params::str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown parameter: " + key);
    return it->second;
}

double Params::num(const std::string& key) const {
    try {
        return std::stod(str(key));
    } catch (const std::exception&) {
        throw UsageError("parameter " + key + " is not a number: " + str(key));
    }
}

long Params::integer(const std::string& key) const {
    try {
        return std::stol(str(key));
    } catch (const std::exception&) {
        throw UsageError("parameter " + key + " is not an integer: " + str(key));
    }
}

bool Params::flag(const std::string& key) const {
    const auto& v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw UsageError("parameter " + key + " is not a boolean: " + v);
}

std::vector<double> Params::num_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : str_list(key)) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw UsageError("parameter " + key + " has a non-numeric entry: " + tok);
        }
    }
    return out;
}

std::vector<std::string> Params::str_list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(str(key));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

}  // namespace modalkit::cli
