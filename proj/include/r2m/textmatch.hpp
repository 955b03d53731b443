// SPDX-License-Identifier: Apache-2.0
//
// Text normalization, fuzzy similarity and taxonomy-based term expansion.

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "r2m/common.hpp"

namespace r2m::textmatch {

/// Default fuzzy-equality threshold for evaluation and class matching.
inline constexpr double kDefaultMatchThreshold = 0.8;

/// Lowercases, strips punctuation and splits on whitespace and on
/// letter/digit boundaries: "ResNet-50" -> {"resnet", "50"}.
std::vector<std::string> normalize_text(std::string_view s);

/// Levenshtein distance over bytes.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// max(character ratio, token-set Jaccard) over normalized forms, in [0, 1].
/// Two empty inputs score 1.0.
double similarity(std::string_view a, std::string_view b);

class TaxonomyError : public Error {
public:
    using Error::Error;
};

/// Small lexical taxonomy: is_a edges and a symmetric synonym relation.
///
/// Text format, one relation per line, tab separated, `#` starts a comment:
///
///     car<TAB>is_a<TAB>vehicle
///     car<TAB>syn<TAB>automobile
class Taxonomy {
public:
    Taxonomy() = default;

    static Taxonomy parse(std::string_view text);
    static Taxonomy load(const std::filesystem::path& path);

    /// Adds `child is_a parent`. Throws TaxonomyError if it would close a cycle.
    void add_is_a(std::string_view child, std::string_view parent);
    void add_synonym(std::string_view a, std::string_view b);

    bool contains(std::string_view term) const;
    const std::set<std::string>& nodes() const noexcept { return nodes_; }
    std::set<std::string> parents(std::string_view term) const;
    std::set<std::string> synonyms(std::string_view term) const;
    /// All hyponyms reachable through is_a edges, excluding `term` itself.
    std::set<std::string> descendants(std::string_view term) const;

private:
    bool reaches(const std::string& from, const std::string& to) const;

    std::set<std::string> nodes_;
    std::map<std::string, std::set<std::string>> parents_;
    std::map<std::string, std::set<std::string>> children_;
    std::map<std::string, std::set<std::string>> synonyms_;
};

/// term ∪ synonyms(term) ∪ descendants(term); {term} when unknown. Terms are
/// compared after lowercasing and whitespace collapsing.
std::set<std::string> expand_objects(std::string_view term, const Taxonomy& tax);

}  // namespace r2m::textmatch
