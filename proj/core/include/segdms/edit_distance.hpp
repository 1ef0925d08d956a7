#pragma once

#include "segdms/vocab.hpp"

namespace segdms {

/// Unit-cost Levenshtein distance (substitution, insertion, deletion).
/// Both sequences must be bound to the same vocabulary.
int edit_distance(const Sequence& a, const Sequence& b);

}  // namespace segdms
