#pragma once

#include <cstdint>
#include <vector>

namespace fixtures {

std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double scale = 0.1);
std::vector<double> pink_noise(std::size_t n, std::uint64_t seed);
std::vector<double> am_tone(std::size_t n, double fs, double carrier, double rate, double depth = 0.8);
// Exponential sweep from f0 to f1 over the whole signal.
std::vector<double> chirp(std::size_t n, double fs, double f0, double f1);
// Short Hann-windowed exponential chirps, alternating direction.
std::vector<double> chirp_train(std::size_t n, double fs, double f_low, double octaves,
                                double event_seconds, double spacing_seconds);
// Harmonic pulse train with a slowly moving formant.
std::vector<double> speech_like(std::size_t n, double fs, std::uint64_t seed);

double rms(const std::vector<double>& x);

}  // namespace fixtures
