#pragma once

#include <cstdint>
#include <string>

namespace polnet {

/// Writes a complete synthetic dataset (manifest, treaty events, ideal
/// points, speeches, conflict, covariates, roster) plus a ground-truth
/// sidecar under out_dir. Kinds: planted-communities, known-ergm-panel,
/// clustered-corpus. params_json overrides kind defaults; "{}" accepts
/// them. Bit-reproducible given (kind, params, seed).
void generate_fixture(const std::string& kind, const std::string& params_json, std::uint64_t seed,
                      const std::string& out_dir);

}  // namespace polnet
