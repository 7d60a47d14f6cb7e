#include "doctest.h"
#include "fuzz.hpp"

namespace {

void check(const fuzz::Report& r) {
  for (const auto& m : r.unexpected) INFO(m);
  CHECK(r.unexpected.empty());
  CHECK(r.cases == r.accepted + r.rejected + r.unexpected.size());
  // Both outcomes should be exercised, otherwise the mutator is too weak or
  // too strong to say anything.
  CHECK(r.rejected > r.cases / 4);
  CHECK(r.accepted > 0);
}

}  // namespace

TEST_CASE("mutated WAV files yield values or structured errors") {
  const auto r = fuzz::wav(1, 20000);
  MESSAGE(r.cases << " cases: " << r.accepted << " accepted, " << r.rejected << " rejected");
  check(r);
}

TEST_CASE("mutated SCT1 containers yield values or structured errors") {
  const auto r = fuzz::container(2, 20000);
  MESSAGE(r.cases << " cases: " << r.accepted << " accepted, " << r.rejected << " rejected");
  check(r);
}
