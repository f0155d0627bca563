#include "wdkg/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "wdkg/errors.hpp"
#include "wdkg/io.hpp"

namespace wdkg {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

const std::map<std::string, std::string>& default_table() {
    static const std::map<std::string, std::string> defaults = {
        {"run.seed", "5"},
        {"synth.n_nodes", "82"},
        {"synth.n_types", "9"},
        {"synth.relation_mix", "70,35,28"},
        {"synth.n_edges", "133"},
        {"synth.n_slices", "30"},
        {"synth.tc_samples", "100"},
        {"synth.edge_flip_prob", "0.05"},
        {"synth.noise_sigma", "0.1"},
        {"synth.kpi_node", "0"},
        {"synth.kpi_parents", "1,2,3,4"},
        {"stream.embed_dim", "128"},
        {"stream.n_layers", "6"},
        {"stream.temporal_kernel", "3"},
        {"stream.spatial_kernel", "1"},
        {"stream.channels", "8,8,8,8,8,8"},
        {"stream.attention_dim", "16"},
        {"stream.frame_len", "20"},
        {"stream.stride", "10"},
        {"stream.epochs", "5"},
        {"stream.batch_size", "50"},
        {"stream.lr", "0.0001"},
        {"stream.lr_decay", "0.7"},
        {"stream.lr_decay_every", "5"},
        {"stream.heterogeneous", "true"},
        {"eval.mask_ratio", "0.1"},
        {"eval.neg_ratio", "5"},
        {"select.kpi", ""},
        {"select.fit_threshold", "0.95"},
        {"select.hidden", "32,32,32"},
        {"select.epochs", "200"},
        {"select.train_fraction", "0.8"},
        {"select.similarity_source", "final_mean"},
        {"select.adjacency_source", "union"},
    };
    return defaults;
}

} // namespace

RunConfig::RunConfig() : values_(default_table()) {}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    RunConfig cfg;
    std::istringstream in(io::read_file(path));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigInvalid(path.string() + ":" + std::to_string(lineno) +
                                ": expected `key = value`");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!default_table().count(key)) throw ConfigInvalid("unknown config key: " + key);
    values_[key] = value;
}

void RunConfig::apply_env_seed() {
    if (const char* env = std::getenv("WDKG_SEED")) values_["run.seed"] = env;
}

std::string RunConfig::get_str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigInvalid("unknown config key: " + key);
    return it->second;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
    const std::string s = get_str(key);
    std::int64_t x = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigInvalid(key + ": expected an integer, got \"" + s + "\"");
    return x;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string s = get_str(key);
    double x = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigInvalid(key + ": expected a number, got \"" + s + "\"");
    return x;
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string s = get_str(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigInvalid(key + ": expected true/false, got \"" + s + "\"");
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
    const std::string s = get_str(key);
    std::vector<int> out;
    if (trim(s).empty()) return out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        int x = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
        if (ec != std::errc() || p != tok.data() + tok.size())
            throw ConfigInvalid(key + ": expected a comma-separated integer list");
        out.push_back(x);
    }
    return out;
}

std::uint64_t RunConfig::seed() const {
    return static_cast<std::uint64_t>(get_int("run.seed"));
}

synth::SynthConfig RunConfig::synth_config() const {
    synth::SynthConfig cfg;
    cfg.n_nodes = static_cast<int>(get_int("synth.n_nodes"));
    cfg.n_types = static_cast<int>(get_int("synth.n_types"));
    const auto mix = get_int_list("synth.relation_mix");
    if (mix.size() != 3)
        throw ConfigInvalid("synth.relation_mix: expected three weights (causal,explicit,implicit)");
    cfg.relation_mix = {static_cast<double>(mix[0]), static_cast<double>(mix[1]),
                        static_cast<double>(mix[2])};
    cfg.n_edges = static_cast<int>(get_int("synth.n_edges"));
    cfg.n_slices = static_cast<int>(get_int("synth.n_slices"));
    cfg.tc_samples = static_cast<int>(get_int("synth.tc_samples"));
    cfg.edge_flip_prob = get_double("synth.edge_flip_prob");
    cfg.noise_sigma = get_double("synth.noise_sigma");
    cfg.kpi_node = static_cast<int>(get_int("synth.kpi_node"));
    cfg.kpi_parents = get_int_list("synth.kpi_parents");
    cfg.seed = seed();
    return cfg;
}

stream::StreamConfig RunConfig::stream_config(bool) const {
    stream::StreamConfig cfg;
    cfg.embed_dim = static_cast<int>(get_int("stream.embed_dim"));
    cfg.n_layers = static_cast<int>(get_int("stream.n_layers"));
    cfg.temporal_kernel = static_cast<int>(get_int("stream.temporal_kernel"));
    cfg.spatial_kernel = static_cast<int>(get_int("stream.spatial_kernel"));
    cfg.channels = get_int_list("stream.channels");
    cfg.attention_dim = static_cast<int>(get_int("stream.attention_dim"));
    cfg.frame_len = static_cast<int>(get_int("stream.frame_len"));
    cfg.stride = static_cast<int>(get_int("stream.stride"));
    cfg.epochs = static_cast<int>(get_int("stream.epochs"));
    cfg.batch_size = static_cast<int>(get_int("stream.batch_size"));
    cfg.lr = get_double("stream.lr");
    cfg.lr_decay = get_double("stream.lr_decay");
    cfg.lr_decay_every = static_cast<int>(get_int("stream.lr_decay_every"));
    cfg.heterogeneous = get_bool("stream.heterogeneous");
    cfg.seed = seed();
    return cfg;
}

fsel::RegressorSpec RunConfig::regressor_spec() const {
    fsel::RegressorSpec spec;
    spec.hidden = get_int_list("select.hidden");
    spec.epochs = static_cast<int>(get_int("select.epochs"));
    spec.train_fraction = get_double("select.train_fraction");
    spec.seed = seed();
    return spec;
}

std::vector<std::pair<std::string, std::string>> RunConfig::items() const {
    return {values_.begin(), values_.end()};
}

} // namespace wdkg
