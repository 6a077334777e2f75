// Seed derivation and random helpers.
//
// Every stochastic component receives its own std::mt19937_64 stream, seeded
// by derive_seed(parent, label, index):
//
//   h  = FNV-1a-64(label)
//   s  = splitmix64(parent ^ splitmix64(h + index))
//
// so streams for different labels/indices are decorrelated and adding a new
// consumer (e.g. a new method name) never shifts anybody else's stream.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace markersim {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index = 0);

double uniform(Rng& rng, double lo, double hi);
int uniform_int(Rng& rng, int lo, int hi);  // inclusive bounds
double normal(Rng& rng, double mean, double sd);

}  // namespace markersim
