#ifndef WDKG_CONFIG_HPP
#define WDKG_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wdkg/feature_select.hpp"
#include "wdkg/stream.hpp"
#include "wdkg/synth.hpp"

namespace wdkg {

// Flat `section.key = value` run configuration. Every key has a documented
// default; unknown keys are rejected so typos surface immediately.
class RunConfig {
public:
    RunConfig(); // defaults

    static RunConfig from_file(const std::filesystem::path& path);

    // Throws ConfigInvalid for unknown keys or malformed values.
    void set(const std::string& key, const std::string& value);

    // WDKG_SEED in the environment overrides run.seed.
    void apply_env_seed();

    std::string get_str(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;

    std::uint64_t seed() const;
    synth::SynthConfig synth_config() const;
    stream::StreamConfig stream_config(bool heterogeneous_override_default = true) const;
    fsel::RegressorSpec regressor_spec() const;

    // Sorted (key, value) pairs for printing.
    std::vector<std::pair<std::string, std::string>> items() const;

private:
    std::map<std::string, std::string> values_;
};

} // namespace wdkg

#endif
