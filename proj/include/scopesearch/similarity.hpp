#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "scopesearch/text.hpp"

namespace scopesearch {

/// Cosine of the angle between two term vectors, in [0, 1]. Zero when either
/// vector is empty.
double cosine_sim(const TermVector& u, const TermVector& v);

/// Minimal number of single-byte insertions, deletions and substitutions.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - levenshtein(a, b) / max(|a|, |b|); two empty strings are identical.
double levenshtein_similarity(std::string_view a, std::string_view b);

/// Mean over tokens of `a` of the best levenshtein_similarity against any
/// token of `b`. Not symmetric. Zero when `a` is empty, or when `b` is empty.
double monge_elkan(std::span<const std::string> a, std::span<const std::string> b);

}  // namespace scopesearch
