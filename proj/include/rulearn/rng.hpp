#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "rulearn/types.hpp"

namespace rulearn {

// Deterministic rng wrapper. Uses raw engine outputs instead of
// std::uniform_int_distribution, whose mapping is implementation-defined,
// so generated puzzles are identical across compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform-ish integer in [0, n). Modulo bias is irrelevant here: n is
    // tiny against 2^64 and only determinism matters.
    int below(int n) {
        if (n <= 0) throw Error("Rng::below needs n > 0");
        return static_cast<int>(next() % static_cast<std::uint64_t>(n));
    }

    int range(int lo, int hi) { return lo + below(hi - lo + 1); }

    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool chance(double p) { return unit() < p; }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        if (v.empty()) throw Error("Rng::pick on empty vector");
        return v[static_cast<size_t>(below(static_cast<int>(v.size())))];
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(static_cast<int>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace rulearn
