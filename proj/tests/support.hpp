#pragma once

// Shared test helpers: deterministic RNG, random polynomial generation, and
// config loading from the bundled examples.

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "incstab/expr.hpp"
#include "incstab/model.hpp"

namespace testsupport {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) {
        const double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    std::mt19937_64 eng_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline incstab::Interconnection load_example(const std::string& name) {
    return incstab::load_config(read_file(std::string(INCSTAB_CONFIG_DIR) + "/" + name));
}

// Random polynomial-with-smooth-wraps expression source over `vars`. Stays
// inside the function domains everywhere, so finite differences are safe.
inline std::string random_poly_source(Rng& rng, const std::vector<std::string>& vars, int depth) {
    if (depth <= 0 || rng.uniform(0, 1) < 0.25) {
        if (rng.uniform(0, 1) < 0.5) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6g", rng.uniform(-3.0, 3.0));
            return buf;
        }
        return vars[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(vars.size()) - 1))];
    }
    const int pick = rng.uniform_int(0, 6);
    const std::string a = random_poly_source(rng, vars, depth - 1);
    const std::string b = random_poly_source(rng, vars, depth - 1);
    switch (pick) {
        case 0: return "(" + a + " + " + b + ")";
        case 1: return "(" + a + " - " + b + ")";
        case 2: return "(" + a + ") * (" + b + ")";
        case 3: return "(" + a + ")^2";
        case 4: return "(" + a + ")^3";
        case 5: return "sin(" + a + ")";
        default: return "tanh(" + a + ")";
    }
}

}  // namespace testsupport
