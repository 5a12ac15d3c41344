#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace murzim {

// Seeded RNG with platform-independent uniform draws (std distributions are
// implementation-defined; these are not).
struct Rng {
    std::mt19937_64 gen;

    explicit Rng(std::uint64_t seed = 0) : gen(seed) {}

    double uniform01() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen() % n); }
    bool bernoulli(double p) { return uniform01() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

    std::string state() const {
        std::ostringstream os;
        os << gen;
        return os.str();
    }
    void set_state(const std::string& s) {
        std::istringstream is(s);
        is >> gen;
    }
};

}  // namespace murzim
