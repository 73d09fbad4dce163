#include "mktcube/config.hpp"

#include "mktcube/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mktcube::harness {

namespace {

struct KeyDefault {
    const char* key;
    const char* value;
};

// The registry: every valid key with its default. Empty string means unset.
const KeyDefault kRegistry[] = {
    {"seed", "42"},
    {"data_dir", ""},
    {"out_dir", "out"},
    {"model", "ma"},
    {"horizon", "1"},
    {"epochs", "30"},
    {"batch", "10"},
    {"lr", "0.001"},
    {"clip", "5.0"},
    {"lookback", "10"},
    {"patience", "10"},
    {"sigma_window", "10"},
    {"fill_mode", "carry-forward"},
    {"ridge", "1e-8"},
    {"eval.part", "backtest"},
    {"checkpoint", ""},
    {"split.train_days", ""},
    {"split.val_days", ""},
    {"split.backtest_days", ""},
    {"split.train_end", ""},
    {"split.val_end", ""},
    {"synth.stocks", "20"},
    {"synth.sectors", "4"},
    {"synth.subsectors", "2"},
    {"synth.days", "600"},
    {"synth.factor_sigma", "0.01"},
    {"synth.idio_sigma", "0.005"},
    {"synth.beta_mkt_min", "0.5"},
    {"synth.beta_mkt_max", "1.5"},
    {"synth.beta_sec_min", "0.3"},
    {"synth.beta_sec_max", "1.0"},
    {"synth.market_ar", "0.3"},
    {"synth.sector_ar", "0.7"},
    {"synth.idio_ar", "0.2"},
    {"synth.nonlinear", "0"},
    {"synth.nonlinear_scale", "0.01"},
    {"ma.kernels", "192"},
    {"ma.embed_dim", "100"},
    {"ma.attention_dim", "32"},
    {"ma.phi_dim", "40"},
    {"ma.head_hidden", "50"},
    {"marnn.cell", "32"},
    {"marnn.phi2_dim", "40"},
    {"marnn.fc1", "100"},
    {"marnn.fc2", "50"},
    {"ffnn.hidden", "50"},
    {"lstmrnn.cell", "25"},
    {"svr.c", "0.3"},
    {"svr.epsilon", "0.1"},
    {"svr.iters", "400"},
    {"svr.lr0", "0.5"},
    {"segnet.channels", "16,32,64"},
    {"segnet.extent", "3"},
    {"segnet.pool", "2"},
    {"segnet.grid", "32"},
    {"segnet.embedding_dim", "32"},
    {"segnet.epochs", "200"},
    {"segnet.batch", "10"},
    {"segnet.patience", "20"},
    {"compare.dims", "16,32,64,128"},
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

Config::Config() {
    for (const auto& kd : kRegistry) {
        order_.emplace_back(kd.key);
        values_[kd.key] = kd.value;
    }
}

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("config file not found: " + path);
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        cfg.parse_line(line, path + ":" + std::to_string(lineno));
    }
    return cfg;
}

void Config::parse_line(const std::string& line, const std::string& context) {
    std::string s = line;
    std::size_t hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) return;
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("config " + context + ": expected key=value, got '" + trim(line) + "'");
    }
    set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second = value;
}

const std::string& Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

bool Config::is_set(const std::string& key) const { return !get(key).empty(); }

int Config::get_int(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t pos = 0;
        int out = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
    }
}

double Config::get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t pos = 0;
        double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
    }
}

bool Config::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw ConfigError("config key '" + key + "': expected boolean, got '" + v + "'");
}

std::uint64_t Config::get_u64(const std::string& key) const {
    const std::string& v = get(key);
    try {
        std::size_t pos = 0;
        unsigned long long out = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected unsigned integer, got '" + v + "'");
    }
}

std::vector<int> Config::get_int_list(const std::string& key) const {
    const std::string& v = get(key);
    std::vector<int> out;
    std::stringstream ss(v);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            out.push_back(std::stoi(trim(part)));
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': expected comma-separated integers, got '" + v + "'");
        }
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

std::optional<int> Config::get_opt_int(const std::string& key) const {
    if (!is_set(key)) return std::nullopt;
    return get_int(key);
}

std::optional<std::string> Config::get_opt_string(const std::string& key) const {
    if (!is_set(key)) return std::nullopt;
    return get(key);
}

std::string Config::resolved() const {
    std::ostringstream os;
    for (const auto& key : order_) os << key << "=" << values_.at(key) << "\n";
    return os.str();
}

} // namespace mktcube::harness
