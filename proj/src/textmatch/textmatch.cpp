// SPDX-License-Identifier: Apache-2.0

#include "r2m/textmatch.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <fmt/core.h>

#include "r2m/schema.hpp"
#include "r2m/util.hpp"

namespace r2m::textmatch {

namespace {

enum class CharClass { separator, letter, digit };

CharClass classify(unsigned char c) {
    if (std::isdigit(c)) return CharClass::digit;
    // Bytes of multi-byte UTF-8 sequences count as letters.
    if (std::isalpha(c) || c >= 0x80) return CharClass::letter;
    return CharClass::separator;
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) out += t;
    return out;
}

}  // namespace

std::vector<std::string> normalize_text(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    CharClass current_class = CharClass::separator;
    for (unsigned char c : s) {
        const CharClass cls = classify(c);
        if (cls == CharClass::separator || (cls != current_class && !current.empty())) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        }
        if (cls != CharClass::separator) current.push_back(static_cast<char>(std::tolower(c)));
        current_class = cls;
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1);
    std::vector<std::size_t> cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double similarity(std::string_view a, std::string_view b) {
    const auto ta = normalize_text(a);
    const auto tb = normalize_text(b);
    const std::string ja = join(ta);
    const std::string jb = join(tb);
    if (ja.empty() && jb.empty()) return 1.0;

    const double longest = static_cast<double>(std::max(ja.size(), jb.size()));
    const double char_ratio = 1.0 - static_cast<double>(edit_distance(ja, jb)) / longest;

    const std::set<std::string> sa(ta.begin(), ta.end());
    const std::set<std::string> sb(tb.begin(), tb.end());
    std::size_t common = 0;
    for (const auto& t : sa) common += sb.count(t);
    const std::size_t uni = sa.size() + sb.size() - common;
    const double token_ratio = uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);

    return std::clamp(std::max(char_ratio, token_ratio), 0.0, 1.0);
}

Taxonomy Taxonomy::parse(std::string_view text) {
    Taxonomy tax;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const auto tab = line.find('\t', start);
            fields.push_back(trim(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start)));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 3 || fields[0].empty() || fields[2].empty()) {
            throw TaxonomyError(fmt::format("taxonomy line {}: expected 'term<TAB>relation<TAB>term'", line_no));
        }
        if (fields[1] == "is_a") {
            tax.add_is_a(fields[0], fields[2]);
        } else if (fields[1] == "syn") {
            tax.add_synonym(fields[0], fields[2]);
        } else {
            throw TaxonomyError(fmt::format("taxonomy line {}: unknown relation '{}'", line_no, fields[1]));
        }
    }
    return tax;
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) { return parse(read_file(path)); }

bool Taxonomy::reaches(const std::string& from, const std::string& to) const {
    // Walks is_a edges upward from `from`.
    std::vector<std::string> stack{from};
    std::set<std::string> seen;
    while (!stack.empty()) {
        std::string node = std::move(stack.back());
        stack.pop_back();
        if (node == to) return true;
        if (!seen.insert(node).second) continue;
        if (auto it = parents_.find(node); it != parents_.end()) {
            stack.insert(stack.end(), it->second.begin(), it->second.end());
        }
    }
    return false;
}

void Taxonomy::add_is_a(std::string_view child, std::string_view parent) {
    const std::string c = schema::canonical_text(child);
    const std::string p = schema::canonical_text(parent);
    if (c == p || reaches(p, c)) {
        throw TaxonomyError(fmt::format("is_a edge '{}' -> '{}' creates a cycle", c, p));
    }
    nodes_.insert(c);
    nodes_.insert(p);
    parents_[c].insert(p);
    children_[p].insert(c);
}

void Taxonomy::add_synonym(std::string_view a, std::string_view b) {
    const std::string x = schema::canonical_text(a);
    const std::string y = schema::canonical_text(b);
    nodes_.insert(x);
    nodes_.insert(y);
    if (x == y) return;
    synonyms_[x].insert(y);
    synonyms_[y].insert(x);
}

bool Taxonomy::contains(std::string_view term) const {
    return nodes_.count(schema::canonical_text(term)) > 0;
}

std::set<std::string> Taxonomy::parents(std::string_view term) const {
    auto it = parents_.find(schema::canonical_text(term));
    return it == parents_.end() ? std::set<std::string>{} : it->second;
}

std::set<std::string> Taxonomy::synonyms(std::string_view term) const {
    auto it = synonyms_.find(schema::canonical_text(term));
    return it == synonyms_.end() ? std::set<std::string>{} : it->second;
}

std::set<std::string> Taxonomy::descendants(std::string_view term) const {
    const std::string root = schema::canonical_text(term);
    std::set<std::string> out;
    std::vector<std::string> stack{root};
    while (!stack.empty()) {
        const std::string node = std::move(stack.back());
        stack.pop_back();
        auto it = children_.find(node);
        if (it == children_.end()) continue;
        for (const auto& child : it->second) {
            if (out.insert(child).second) stack.push_back(child);
        }
    }
    out.erase(root);
    return out;
}

std::set<std::string> expand_objects(std::string_view term, const Taxonomy& tax) {
    const std::string t = schema::canonical_text(term);
    std::set<std::string> out{t};
    if (!tax.contains(t)) return out;
    for (auto& s : tax.synonyms(t)) out.insert(s);
    for (auto& d : tax.descendants(t)) out.insert(d);
    return out;
}

}  // namespace r2m::textmatch
