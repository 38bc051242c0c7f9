#pragma once

#include <string>

namespace polnet {

/// Porter stemmer for lowercase ASCII tokens (with the two revisions from
/// the reference implementation: -bli and -logi rules). Inputs shorter
/// than three characters come back unchanged.
std::string porter_stem(const std::string& word);

}  // namespace polnet
