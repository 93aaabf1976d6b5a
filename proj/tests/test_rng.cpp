#include <doctest.h>

#include <cmath>

#include "ergogame/rng.hpp"

using namespace ergogame;

TEST_CASE("Philox4x32-10 known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                      {0xffffffffu, 0xffffffffu}) ==
        PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                      {0xa4093822u, 0x299f31d0u}) ==
        PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniforms are in range and roughly uniform") {
  PathRng rng(12345, 7);
  double sum = 0.0, sum2 = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    for (double u : rng.uniforms(k, 0)) {
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      sum += u;
      sum2 += u * u;
    }
  }
  const double mean = sum / (2 * n);
  CHECK(std::fabs(mean - 0.5) <= 4.0 * std::sqrt(1.0 / 12.0 / (2 * n)));
  CHECK(std::fabs(sum2 / (2 * n) - 1.0 / 3.0) <= 0.01);
}

TEST_CASE("streams differ and draws are reproducible") {
  PathRng a(1, 0), b(1, 1), c(2, 0), a2(1, 0);
  CHECK(a.uniforms(0, 0) != b.uniforms(0, 0));
  CHECK(a.uniforms(0, 0) != c.uniforms(0, 0));
  CHECK(a.uniforms(0, 0) != a.uniforms(0, 1));
  CHECK(a.uniforms(5, 1) == a2.uniforms(5, 1));
  CHECK(to_unit(0xffffffffu, 0xffffffffu) < 1.0);
  CHECK(to_unit(0, 0) == 0.0);
  CHECK(exponential(0.0, 2.0) == 0.0);
}
