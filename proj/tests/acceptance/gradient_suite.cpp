// 64-bit half of the acceptance binary.
#include <cstdio>

#include "grad_suite.hpp"

namespace acceptance {

bool gradient_suite() {
  bool ok = true;
  for (const auto& [name, r] : grad_suite::run_all()) {
    const bool pass = r.rel_err < grad_suite::kTol;
    std::printf("    %-18s rel err %.2e over %zu probes%s\n", name.c_str(), r.rel_err, r.checked,
                pass ? "" : "  <-- exceeds 1e-4");
    ok = ok && pass;
  }
  return ok;
}

}  // namespace acceptance
