#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "iqlearn/errors.hpp"

namespace iqlearn {

/**
 * Deterministic random source used wherever a seed appears in the API.
 *
 * Wraps std::mt19937_64 but derives doubles, bounded integers and discrete
 * samples directly from the raw 64-bit stream, so sequences are bitwise
 * identical across standard library implementations.
 */
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    /// Uniform double in [0, 1) built from the top 53 bits of one draw.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Requires n > 0.
    int uniform_int(int n) {
        if (n <= 0) throw ModelError("uniform_int requires a positive bound");
        using u128 = unsigned __int128;
        return static_cast<int>((static_cast<u128>(gen_()) * static_cast<u128>(n)) >> 64);
    }

    /// Index sampled from a probability row via a single CDF walk.
    /// The row must be non-negative and sum to 1 up to rounding; trailing
    /// rounding slack is assigned to the last index.
    int sample_discrete(const Eigen::Ref<const Eigen::VectorXd>& probs) {
        if (probs.size() == 0) throw ModelError("sample_discrete requires a non-empty row");
        const double u = uniform();
        double acc = 0.0;
        const int last = static_cast<int>(probs.size()) - 1;
        for (int i = 0; i < last; ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return last;
    }

    /// Serializes the generator state as a whitespace-separated word list.
    std::string save_state() const {
        std::ostringstream os;
        os << gen_;
        return os.str();
    }

    void load_state(const std::string& text) {
        std::istringstream is(text);
        is >> gen_;
        if (is.fail()) throw SchemaError("malformed random generator state");
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace iqlearn
