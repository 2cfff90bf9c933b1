#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "macmi/system.hpp"

namespace macmi {

// flat key=value text: one pair per line, '#' starts a comment, blank lines
// ignored. Values are kept as raw strings; typed access goes through the
// getters below, and every failure message names the offending key.
struct Config {
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const;
    const std::string& raw(const std::string& key) const; // throws if absent

    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key,
                           const std::string& fallback) const;

    // complex entries, row-major; each entry "re" or "re,im"
    Eigen::MatrixXcd get_matrix(const std::string& key, int rows,
                                int cols) const;
    // whitespace-separated list of complex entries
    std::vector<cplx> get_cplx_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;
};

Config parse_config(const std::string& text);
Config load_config(const std::string& path);

// order-independent FNV-1a over "key=value\n" in sorted key order; stamped
// into CSV provenance headers so outputs can be traced to their inputs
uint64_t config_hash(const Config& cfg);

// two-user system from keys n_r, n_t (default 1), h1, h2 (default identity),
// p1, p2 (default identity), snr (default 1), c1, c2 (constellation names,
// default "bpsk"; expanded to the n_t-fold Cartesian power)
MacSystem system_from_config(const Config& cfg);

} // namespace macmi
