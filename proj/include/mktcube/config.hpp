#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mktcube::harness {

/// Plain key=value experiment configuration. Every key has a registered
/// default; unknown keys are rejected. '#' starts a comment. Flag overrides
/// (--set key=value) replay through the same validation.
class Config {
public:
    Config();

    static Config from_file(const std::string& path);

    void set(const std::string& key, const std::string& value);
    void parse_line(const std::string& line, const std::string& context);

    const std::string& get(const std::string& key) const;
    bool is_set(const std::string& key) const;  // value differs from "" default

    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;
    std::optional<int> get_opt_int(const std::string& key) const;
    std::optional<std::string> get_opt_string(const std::string& key) const;

    /// Registry-ordered key=value lines of the fully resolved configuration.
    std::string resolved() const;

private:
    std::vector<std::string> order_;
    std::map<std::string, std::string> values_;
};

} // namespace mktcube::harness
