#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace divergence::io {

// line-oriented key = value, '#' comments
struct Config {
    std::map<std::string, std::string> values;
    bool has(const std::string& key) const { return values.count(key) > 0; }
};

const std::vector<std::string>& known_keys();
Config parse_config(std::istream& in);
Config load_config(const std::string& path);
// command-line overrides win
void merge(Config& base, const Config& overrides);

struct RunConfig {
    int n = 2;
    double a = 0, b = 0;
    std::optional<double> alpha;
    std::vector<int> k;
    int k0 = 8, k1 = 40;
    double c = 0.1, c1 = 0.01;
    double box = 1.0;
    std::size_t caps = 5'000'000;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    double epsilon = 0.1;
    double delta = 1.0;
    std::optional<double> s_prime;
    std::optional<int> k_star;
    std::optional<long long> Q;
};

// validates required keys; exactly one of (a, b) or alpha
RunConfig resolve(const Config& cfg, bool need_params = true);
std::string required_keys_message();

std::string fmt(double v);  // 17 significant digits, '.' decimal
std::string fmt(long long v);

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}
    void row(const std::vector<std::string>& cells);
    std::string str() const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// write to a temporary sibling, then rename over the target
void write_atomic(const std::string& path, const std::string& content);

}  // namespace divergence::io
