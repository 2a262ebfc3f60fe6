#pragma once
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace capmix {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic derivation of independent substream seeds.
inline uint64_t mix_seed(uint64_t base, uint64_t salt_a, uint64_t salt_b = 0) {
    return splitmix64(splitmix64(splitmix64(base) ^ salt_a) ^ salt_b);
}

// Deterministic random stream. mt19937_64 is fully specified by the standard;
// the distributions below are implemented by hand so that replay of a seed is
// stable across standard-library versions.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Derive an independent child stream.
    Rng fork() { return Rng(splitmix64(engine_())); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Unbiased uniform in {0, ..., n-1}.
    uint64_t below(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
    }

    double pick_sign() { return uniform() < 0.5 ? -1.0 : 1.0; }

    // Standard normal via Marsaglia polar.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // Gamma(alpha, 1) via Marsaglia-Tsang, boosted for alpha < 1.
    double gamma(double alpha) {
        if (alpha < 1.0) {
            double u = uniform();
            while (u <= 0.0) u = uniform();
            return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        const double s = x + y;
        return s > 0.0 ? x / s : 0.5;
    }

    // Fisher-Yates permutation of {0, ..., n-1}.
    std::vector<int64_t> permutation(size_t n) {
        std::vector<int64_t> p(n);
        for (size_t i = 0; i < n; ++i) p[i] = static_cast<int64_t>(i);
        for (size_t i = n; i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(p[i - 1], p[j]);
        }
        return p;
    }

    // k distinct indices drawn from {0, ..., n-1}, in draw order.
    std::vector<size_t> sample_without_replacement(size_t n, size_t k) {
        std::vector<size_t> pool(n);
        for (size_t i = 0; i < n; ++i) pool[i] = i;
        std::vector<size_t> out;
        out.reserve(k);
        for (size_t i = 0; i < k && i < n; ++i) {
            const size_t j = i + static_cast<size_t>(below(n - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

    // Exact stream state, for resumable training. The engine's text form is
    // specified by the standard; the Gaussian spare is carried as a hex float.
    std::string state_string() const {
        std::ostringstream os;
        os << engine_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%a", spare_);
        os << buf;
        return os.str();
    }

    void set_state_string(const std::string& s) {
        std::istringstream is(s);
        int spare_flag = 0;
        std::string spare_hex;
        if (!(is >> engine_ >> spare_flag >> spare_hex))
            throw std::invalid_argument("Rng: malformed state string");
        has_spare_ = spare_flag != 0;
        spare_ = std::strtod(spare_hex.c_str(), nullptr);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace capmix
