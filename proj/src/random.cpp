//! \file random.cpp
#include "zrp/random.hpp"

#include <cmath>

namespace zrp
{
std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master,
                          std::uint64_t index,
                          std::uint64_t stream) noexcept
{
    std::uint64_t h = mix64(master);
    h = mix64(h ^ mix64(index + 0x632be59bd9b4e019ULL));
    h = mix64(h ^ mix64(stream + 0x8cb92ba72f3d8dd7ULL));
    return h;
}

Rng::Rng(std::uint64_t seed)
{
    // Seed the full MT state from a hashed sequence so nearby seeds diverge.
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(mix64(seed)),
                      static_cast<std::uint32_t>(mix64(seed) >> 32)};
    engine_.seed(seq);
}

double Rng::exponential(double rate)
{
    return -std::log(uniform_pos()) / rate;
}

double Rng::normal()
{
    if (has_spare_)
    {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do
    {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double const f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}
}  // namespace zrp
