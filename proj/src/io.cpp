#include "divergence/io.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "divergence/common.hpp"

namespace divergence::io {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw PreconditionError("config key " + key + ": not a number: " + v);
    return out;
}

long long to_int(const std::string& key, const std::string& v) {
    long long out = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw PreconditionError("config key " + key + ": not an integer: " + v);
    return out;
}

}  // namespace

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {"n",    "a",     "b",       "alpha",   "k",     "k0",
                                                  "k1",   "c",     "c1",      "box",     "caps",  "seed",
                                                  "out_dir", "epsilon", "delta", "s_prime", "k_star", "Q"};
    return keys;
}

Config parse_config(std::istream& in) {
    Config cfg;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw PreconditionError("config line " + std::to_string(no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        const auto& keys = known_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw PreconditionError("config line " + std::to_string(no) + ": unknown key " + key);
        cfg.values[key] = val;
    }
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open config " + path);
    return parse_config(in);
}

void merge(Config& base, const Config& overrides) {
    for (const auto& [k, v] : overrides.values) base.values[k] = v;
}

std::string required_keys_message() {
    return "required keys: n, k, and either (a and b) or alpha";
}

RunConfig resolve(const Config& cfg, bool need_params) {
    RunConfig rc;
    auto get = [&](const char* k) -> const std::string& { return cfg.values.at(k); };
    if (need_params) {
        std::vector<std::string> missing;
        if (!cfg.has("n")) missing.push_back("n");
        if (!cfg.has("k")) missing.push_back("k");
        bool ab = cfg.has("a") || cfg.has("b");
        if (!ab && !cfg.has("alpha")) missing.push_back("(a, b) or alpha");
        if (!missing.empty()) {
            std::string m = "missing config keys:";
            for (auto& s : missing) m += " " + s;
            throw PreconditionError(m + "; " + required_keys_message());
        }
    }
    if ((cfg.has("a") || cfg.has("b")) && cfg.has("alpha"))
        throw PreconditionError("give exactly one of (a, b) or alpha");
    if (cfg.has("a") != cfg.has("b")) throw PreconditionError("a and b must be given together");
    if (cfg.has("n")) rc.n = int(to_int("n", get("n")));
    if (cfg.has("a")) {
        rc.a = to_double("a", get("a"));
        rc.b = to_double("b", get("b"));
    }
    if (cfg.has("alpha")) rc.alpha = to_double("alpha", get("alpha"));
    if (cfg.has("k")) {
        std::stringstream ss(get("k"));
        std::string part;
        while (std::getline(ss, part, ',')) rc.k.push_back(int(to_int("k", trim(part))));
    }
    if (cfg.has("k0")) rc.k0 = int(to_int("k0", get("k0")));
    if (cfg.has("k1")) rc.k1 = int(to_int("k1", get("k1")));
    if (cfg.has("c")) rc.c = to_double("c", get("c"));
    if (cfg.has("c1")) rc.c1 = to_double("c1", get("c1"));
    if (cfg.has("box")) rc.box = to_double("box", get("box"));
    if (cfg.has("caps")) rc.caps = std::size_t(to_int("caps", get("caps")));
    if (cfg.has("seed")) rc.seed = std::uint64_t(to_int("seed", get("seed")));
    if (cfg.has("out_dir")) rc.out_dir = get("out_dir");
    if (cfg.has("epsilon")) rc.epsilon = to_double("epsilon", get("epsilon"));
    if (cfg.has("delta")) rc.delta = to_double("delta", get("delta"));
    if (cfg.has("s_prime")) rc.s_prime = to_double("s_prime", get("s_prime"));
    if (cfg.has("k_star")) rc.k_star = int(to_int("k_star", get("k_star")));
    if (cfg.has("Q")) rc.Q = to_int("Q", get("Q"));
    return rc;
}

std::string fmt(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

std::string fmt(long long v) { return std::to_string(v); }

void Csv::row(const std::vector<std::string>& cells) {
    if (cells.size() != header_.size()) throw InvariantViolation("CSV row width does not match header");
    rows_.push_back(cells);
}

std::string Csv::str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ',';
            out += v[i];
        }
        out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
}

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

}  // namespace divergence::io
