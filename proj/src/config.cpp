#include "macmi/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace macmi {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail_key(const std::string& key, const std::string& what) {
    throw std::invalid_argument("config key '" + key + "': " + what);
}

double parse_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) fail_key(key, "empty value");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size())
        fail_key(key, "not a number: '" + t + "'");
    return v;
}

// one matrix/list entry: "re" or "re,im"
cplx parse_entry(const std::string& key, const std::string& tok) {
    const size_t comma = tok.find(',');
    if (comma == std::string::npos) return cplx(parse_double(key, tok), 0.0);
    return cplx(parse_double(key, tok.substr(0, comma)),
                parse_double(key, tok.substr(comma + 1)));
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

} // namespace

bool Config::has(const std::string& key) const {
    return values.count(key) != 0;
}

const std::string& Config::raw(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) fail_key(key, "missing");
    return it->second;
}

double Config::get_double(const std::string& key) const {
    return parse_double(key, raw(key));
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
    const double v = get_double(key);
    const int i = int(v);
    if (double(i) != v) fail_key(key, "not an integer: '" + raw(key) + "'");
    return i;
}

int Config::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

uint64_t Config::get_u64(const std::string& key, uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string t = trim(raw(key));
    if (t.empty()) fail_key(key, "empty value");
    char* end = nullptr;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size())
        fail_key(key, "not an unsigned integer: '" + t + "'");
    return uint64_t(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string t = trim(raw(key));
    if (t == "1" || t == "true" || t == "yes") return true;
    if (t == "0" || t == "false" || t == "no") return false;
    fail_key(key, "not a boolean: '" + t + "'");
}

std::string Config::get_string(const std::string& key,
                               const std::string& fallback) const {
    return has(key) ? trim(raw(key)) : fallback;
}

Eigen::MatrixXcd Config::get_matrix(const std::string& key, int rows,
                                    int cols) const {
    const std::vector<std::string> toks = split_ws(raw(key));
    if (int(toks.size()) != rows * cols)
        fail_key(key, "expected " + std::to_string(rows * cols) +
                          " entries (row-major " + std::to_string(rows) + "x" +
                          std::to_string(cols) + "), got " +
                          std::to_string(toks.size()));
    Eigen::MatrixXcd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            m(i, j) = parse_entry(key, toks[size_t(i * cols + j)]);
    return m;
}

std::vector<cplx> Config::get_cplx_list(const std::string& key) const {
    std::vector<cplx> out;
    for (const std::string& tok : split_ws(raw(key)))
        out.push_back(parse_entry(key, tok));
    if (out.empty()) fail_key(key, "empty list");
    return out;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& tok : split_ws(raw(key)))
        out.push_back(parse_double(key, tok));
    if (out.empty()) fail_key(key, "empty list");
    return out;
}

Config parse_config(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " +
                                        std::to_string(lineno) +
                                        ": expected key=value, got '" + t +
                                        "'");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty())
            throw std::invalid_argument("config line " +
                                        std::to_string(lineno) +
                                        ": empty key");
        if (cfg.values.count(key))
            fail_key(key, "duplicate assignment (line " +
                              std::to_string(lineno) + ")");
        cfg.values.emplace(key, trim(t.substr(eq + 1)));
    }
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("config file not readable: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

uint64_t config_hash(const Config& cfg) {
    uint64_t h = 14695981039346656037ULL;
    const auto eat = [&h](const std::string& s) {
        for (const char c : s) {
            h ^= uint64_t(static_cast<unsigned char>(c));
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [key, value] : cfg.values) { // std::map: sorted keys
        eat(key);
        eat("=");
        eat(value);
        eat("\n");
    }
    return h;
}

MacSystem system_from_config(const Config& cfg) {
    MacSystem sys;
    const int nr = cfg.get_int("n_r", 1);
    const int nt = cfg.get_int("n_t", 1);
    if (nr < 1) fail_key("n_r", "must be >= 1");
    if (nt < 1) fail_key("n_t", "must be >= 1");
    sys.h1 = cfg.has("h1") ? cfg.get_matrix("h1", nr, nt)
                           : Eigen::MatrixXcd::Identity(nr, nt);
    sys.h2 = cfg.has("h2") ? cfg.get_matrix("h2", nr, nt)
                           : Eigen::MatrixXcd::Identity(nr, nt);
    sys.p1 = cfg.has("p1") ? cfg.get_matrix("p1", nt, nt)
                           : Eigen::MatrixXcd::Identity(nt, nt);
    sys.p2 = cfg.has("p2") ? cfg.get_matrix("p2", nt, nt)
                           : Eigen::MatrixXcd::Identity(nt, nt);
    sys.snr = cfg.get_double("snr", 1.0);
    const Constellation b1 = constellation_by_name(cfg.get_string("c1", "bpsk"));
    const Constellation b2 = constellation_by_name(cfg.get_string("c2", "bpsk"));
    sys.c1 = nt == 1 ? b1 : cartesian_power(b1, nt);
    sys.c2 = nt == 1 ? b2 : cartesian_power(b2, nt);
    sys.validate();
    return sys;
}

} // namespace macmi
